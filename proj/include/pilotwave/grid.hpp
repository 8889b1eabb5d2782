#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "pilotwave/errors.hpp"

namespace pw {

enum class Boundary { periodic, dirichlet };

struct AxisSpec {
  double lo = 0.0;
  double hi = 1.0;
  int count = 4;  // >= 4
  Boundary mode = Boundary::periodic;
};

class Grid;

// Kinetic coefficients mu_ij of the second-order operator
// sum_ij d_i(mu_ij d_j .). Either diagonal constants (units 1/mass) or a
// symmetric field-valued array tabulated on the grid nodes.
class Metric {
 public:
  static Metric unit(int ndim);
  static Metric diagonal(std::vector<double> mu);
  // mu_i = 1/m_i
  static Metric from_masses(const std::vector<double>& masses);
  // entries[k] for pairs (i,j), i <= j, in row-major pair order, each of
  // length npoints. Symmetry holds by construction.
  static Metric general(int ndim, std::vector<std::vector<double>> entries,
                        std::size_t npoints);

  int ndim() const { return ndim_; }
  bool diagonal_constant() const { return full_.empty(); }
  double diag(int i) const { return diag_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& diag() const { return diag_; }

  double at(int i, int j, std::size_t point) const {
    if (full_.empty()) return i == j ? diag_[static_cast<std::size_t>(i)] : 0.0;
    return full_[pair_index(i, j)][point];
  }

 private:
  std::size_t pair_index(int i, int j) const;

  int ndim_ = 0;
  std::vector<double> diag_;
  std::vector<std::vector<double>> full_;
};

// Rectangular tensor-product grid, row-major with axis 0 slowest. Periodic
// axes treat hi as identified with lo (spacing (hi-lo)/count); dirichlet axes
// place nodes on both ends (spacing (hi-lo)/(count-1)).
class Grid {
 public:
  static constexpr std::size_t default_point_cap = std::size_t{1} << 24;

  Grid(std::vector<AxisSpec> axes, Metric metric,
       std::size_t point_cap = default_point_cap);
  explicit Grid(std::vector<AxisSpec> axes,
                std::size_t point_cap = default_point_cap);

  int ndim() const { return static_cast<int>(axes_.size()); }
  std::size_t size() const { return size_; }
  const AxisSpec& axis(int a) const { return axes_[static_cast<std::size_t>(a)]; }
  const std::vector<AxisSpec>& axes() const { return axes_; }
  double spacing(int a) const { return spacing_[static_cast<std::size_t>(a)]; }
  std::size_t stride(int a) const { return stride_[static_cast<std::size_t>(a)]; }
  const Metric& metric() const { return metric_; }

  double coord(int a, int idx) const {
    return axis(a).lo + spacing(a) * idx;
  }

  void unflatten(std::size_t flat, int* idx) const;
  std::size_t flatten(const int* idx) const;
  void node(std::size_t flat, double* q) const;
  std::vector<double> node(std::size_t flat) const;

  // Trapezoid node weight along one axis: h everywhere on periodic axes,
  // h/2 at dirichlet ends.
  double node_weight(int a, int idx) const;
  // Product of per-axis weights; doubles as the sampling cell volume.
  double cell_volume(std::size_t flat) const;

  bool same_layout(const Grid& other) const;
  std::string describe() const;

 private:
  void init(std::size_t point_cap);

  std::vector<AxisSpec> axes_;
  std::vector<double> spacing_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
  Metric metric_;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_grid(std::vector<AxisSpec> axes,
                  std::size_t point_cap = Grid::default_point_cap);
GridPtr make_grid(std::vector<AxisSpec> axes, Metric metric,
                  std::size_t point_cap = Grid::default_point_cap);

}  // namespace pw
