#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "pilotwave/grid.hpp"

namespace pw {

template <class T>
class FieldT {
 public:
  FieldT(GridPtr grid, T fill = T{}, double time = 0.0)
      : grid_(std::move(grid)), values_(check(grid_)->size(), fill), time_(time) {}

  FieldT(GridPtr grid, std::vector<T> values, double time = 0.0)
      : grid_(std::move(grid)), values_(std::move(values)), time_(time) {
    if (values_.size() != check(grid_)->size())
      throw InvalidArgument("field: value count does not match grid");
  }

  static FieldT from_function(GridPtr grid,
                              const std::function<T(const double*)>& fn,
                              double time = 0.0) {
    FieldT f(std::move(grid), T{}, time);
    std::vector<double> q(static_cast<std::size_t>(f.grid().ndim()));
    for (std::size_t i = 0; i < f.size(); ++i) {
      f.grid().node(i, q.data());
      f[i] = fn(q.data());
    }
    return f;
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double time() const { return time_; }
  void set_time(double t) { time_ = t; }

  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }
  std::vector<T>& values() { return values_; }
  const std::vector<T>& values() const { return values_; }

  bool all_finite() const {
    for (const T& v : values_)
      if (!finite(v)) return false;
    return true;
  }

  void require_finite(const char* what) const {
    if (!all_finite()) throw NumericError(std::string(what) + ": non-finite value");
  }

 private:
  static const GridPtr& check(const GridPtr& g) {
    if (!g) throw InvalidArgument("field: null grid");
    return g;
  }
  static bool finite(double v) { return std::isfinite(v); }
  static bool finite(const std::complex<double>& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  }

  GridPtr grid_;
  std::vector<T> values_;
  double time_;
};

using RealField = FieldT<double>;
using ComplexField = FieldT<std::complex<double>>;

inline void require_same_layout(const Grid& a, const Grid& b, const char* what) {
  if (!a.same_layout(b))
    throw InvalidArgument(std::string(what) + ": grid layout mismatch");
}

}  // namespace pw
