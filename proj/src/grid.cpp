#include "pilotwave/grid.hpp"

#include <cmath>
#include <sstream>

namespace pw {

Metric Metric::unit(int ndim) {
  return diagonal(std::vector<double>(static_cast<std::size_t>(ndim), 1.0));
}

Metric Metric::diagonal(std::vector<double> mu) {
  if (mu.empty()) throw InvalidArgument("metric: empty diagonal");
  for (double v : mu)
    if (!(v > 0.0) || !std::isfinite(v))
      throw InvalidArgument("metric: diagonal entries must be positive finite");
  Metric m;
  m.ndim_ = static_cast<int>(mu.size());
  m.diag_ = std::move(mu);
  return m;
}

Metric Metric::from_masses(const std::vector<double>& masses) {
  std::vector<double> mu(masses.size());
  for (std::size_t i = 0; i < masses.size(); ++i) {
    if (!(masses[i] > 0.0)) throw InvalidArgument("metric: masses must be positive");
    mu[i] = 1.0 / masses[i];
  }
  return diagonal(std::move(mu));
}

Metric Metric::general(int ndim, std::vector<std::vector<double>> entries,
                       std::size_t npoints) {
  const std::size_t npairs =
      static_cast<std::size_t>(ndim) * (static_cast<std::size_t>(ndim) + 1) / 2;
  if (entries.size() != npairs)
    throw InvalidArgument("metric: need one entry field per pair (i<=j)");
  for (const auto& e : entries) {
    if (e.size() != npoints)
      throw InvalidArgument("metric: entry field size mismatch");
    for (double v : e)
      if (!std::isfinite(v)) throw InvalidArgument("metric: non-finite entry");
  }
  Metric m;
  m.ndim_ = ndim;
  m.diag_.assign(static_cast<std::size_t>(ndim), 1.0);
  m.full_ = std::move(entries);
  return m;
}

std::size_t Metric::pair_index(int i, int j) const {
  if (i > j) std::swap(i, j);
  // Row-major upper triangle: (i,j) -> i*ndim - i(i+1)/2 + j.
  return static_cast<std::size_t>(i * ndim_ - i * (i + 1) / 2 + j);
}

Grid::Grid(std::vector<AxisSpec> axes, Metric metric, std::size_t point_cap)
    : axes_(std::move(axes)), metric_(std::move(metric)) {
  init(point_cap);
  if (metric_.ndim() != ndim())
    throw InvalidArgument("grid: metric dimension mismatch");
}

Grid::Grid(std::vector<AxisSpec> axes, std::size_t point_cap)
    : axes_(std::move(axes)), metric_(Metric::unit(1)) {
  init(point_cap);
  metric_ = Metric::unit(ndim());
}

void Grid::init(std::size_t point_cap) {
  if (axes_.empty() || axes_.size() > 4)
    throw InvalidArgument("grid: dimension must be 1..4");
  size_ = 1;
  spacing_.resize(axes_.size());
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    const AxisSpec& ax = axes_[a];
    if (!(ax.hi > ax.lo) || !std::isfinite(ax.lo) || !std::isfinite(ax.hi))
      throw InvalidArgument("grid: axis bounds must satisfy lo < hi");
    if (ax.count < 4) throw InvalidArgument("grid: axis count must be >= 4");
    const int cells = ax.mode == Boundary::periodic ? ax.count : ax.count - 1;
    spacing_[a] = (ax.hi - ax.lo) / cells;
    if (size_ > point_cap / static_cast<std::size_t>(ax.count))
      throw InvalidArgument("grid: point count exceeds cap");
    size_ *= static_cast<std::size_t>(ax.count);
  }
  stride_.resize(axes_.size());
  std::size_t s = 1;
  for (std::size_t a = axes_.size(); a-- > 0;) {
    stride_[a] = s;
    s *= static_cast<std::size_t>(axes_[a].count);
  }
}

void Grid::unflatten(std::size_t flat, int* idx) const {
  for (int a = 0; a < ndim(); ++a) {
    const std::size_t s = stride_[static_cast<std::size_t>(a)];
    idx[a] = static_cast<int>((flat / s) %
                              static_cast<std::size_t>(axes_[static_cast<std::size_t>(a)].count));
  }
}

std::size_t Grid::flatten(const int* idx) const {
  std::size_t flat = 0;
  for (int a = 0; a < ndim(); ++a)
    flat += static_cast<std::size_t>(idx[a]) * stride_[static_cast<std::size_t>(a)];
  return flat;
}

void Grid::node(std::size_t flat, double* q) const {
  for (int a = 0; a < ndim(); ++a) {
    const std::size_t s = stride_[static_cast<std::size_t>(a)];
    const int idx = static_cast<int>(
        (flat / s) % static_cast<std::size_t>(axes_[static_cast<std::size_t>(a)].count));
    q[a] = coord(a, idx);
  }
}

std::vector<double> Grid::node(std::size_t flat) const {
  std::vector<double> q(static_cast<std::size_t>(ndim()));
  node(flat, q.data());
  return q;
}

double Grid::node_weight(int a, int idx) const {
  const AxisSpec& ax = axis(a);
  if (ax.mode == Boundary::dirichlet && (idx == 0 || idx == ax.count - 1))
    return 0.5 * spacing(a);
  return spacing(a);
}

double Grid::cell_volume(std::size_t flat) const {
  double w = 1.0;
  for (int a = 0; a < ndim(); ++a) {
    const std::size_t s = stride_[static_cast<std::size_t>(a)];
    const int idx = static_cast<int>(
        (flat / s) % static_cast<std::size_t>(axes_[static_cast<std::size_t>(a)].count));
    w *= node_weight(a, idx);
  }
  return w;
}

bool Grid::same_layout(const Grid& other) const {
  if (ndim() != other.ndim()) return false;
  for (int a = 0; a < ndim(); ++a) {
    const AxisSpec& x = axis(a);
    const AxisSpec& y = other.axis(a);
    if (x.lo != y.lo || x.hi != y.hi || x.count != y.count || x.mode != y.mode)
      return false;
  }
  return true;
}

std::string Grid::describe() const {
  std::ostringstream os;
  os << ndim() << "d";
  for (int a = 0; a < ndim(); ++a) {
    const AxisSpec& ax = axis(a);
    os << " [" << ax.lo << "," << ax.hi << ")x" << ax.count
       << (ax.mode == Boundary::periodic ? "p" : "d");
  }
  return os.str();
}

GridPtr make_grid(std::vector<AxisSpec> axes, std::size_t point_cap) {
  return std::make_shared<Grid>(std::move(axes), point_cap);
}

GridPtr make_grid(std::vector<AxisSpec> axes, Metric metric,
                  std::size_t point_cap) {
  return std::make_shared<Grid>(std::move(axes), std::move(metric), point_cap);
}

}  // namespace pw
