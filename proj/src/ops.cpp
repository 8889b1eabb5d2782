#include "pilotwave/ops.hpp"

#include <cmath>

namespace pw {

namespace {

// Visits every 1-d line of the grid along `axis`. The flat index of element
// k on a line with base b is b + k*stride.
template <class Fn>
void for_each_line(const Grid& g, int axis, Fn&& fn) {
  const std::size_t stride = g.stride(axis);
  const std::size_t count = static_cast<std::size_t>(g.axis(axis).count);
  const std::size_t nlines = g.size() / count;
  const std::size_t block = stride * count;
  for (std::size_t line = 0; line < nlines; ++line) {
    const std::size_t base = (line / stride) * block + (line % stride);
    fn(base, stride, count);
  }
}

template <class T>
FieldT<T> gradient_impl(const FieldT<T>& f, int axis) {
  const Grid& g = f.grid();
  if (axis < 0 || axis >= g.ndim()) throw InvalidArgument("gradient: bad axis");
  FieldT<T> out(f.grid_ptr(), T{}, f.time());
  const double inv2h = 1.0 / (2.0 * g.spacing(axis));
  const auto& v = f.values();
  auto& o = out.values();
  const bool periodic = g.axis(axis).mode == Boundary::periodic;
  for_each_line(g, axis, [&](std::size_t base, std::size_t s, std::size_t n) {
    auto at = [&](std::size_t k) -> const T& { return v[base + k * s]; };
    if (periodic) {
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t kp = k + 1 == n ? 0 : k + 1;
        const std::size_t km = k == 0 ? n - 1 : k - 1;
        o[base + k * s] = (at(kp) - at(km)) * inv2h;
      }
    } else {
      o[base] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) * inv2h;
      for (std::size_t k = 1; k + 1 < n; ++k)
        o[base + k * s] = (at(k + 1) - at(k - 1)) * inv2h;
      o[base + (n - 1) * s] =
          (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) * inv2h;
    }
  });
  out.require_finite("gradient");
  return out;
}

}  // namespace

RealField gradient(const RealField& f, int axis) { return gradient_impl(f, axis); }

ComplexField gradient(const ComplexField& f, int axis) {
  return gradient_impl(f, axis);
}

RealField divergence(std::span<const RealField> components) {
  if (components.empty()) throw InvalidArgument("divergence: no components");
  const Grid& g = components[0].grid();
  if (static_cast<int>(components.size()) != g.ndim())
    throw InvalidArgument("divergence: need one component per axis");
  RealField out(components[0].grid_ptr(), 0.0, components[0].time());
  for (int a = 0; a < g.ndim(); ++a) {
    require_same_layout(g, components[a].grid(), "divergence");
    RealField da = gradient(components[a], a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += da[i];
  }
  return out;
}

double integrate(const RealField& f) {
  const Grid& g = f.grid();
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += f[i] * g.cell_volume(i);
  if (!std::isfinite(sum)) throw NumericError("integrate: non-finite result");
  return sum;
}

RealField cumulative_integral(const RealField& f, int axis, double a) {
  const Grid& g = f.grid();
  if (axis < 0 || axis >= g.ndim())
    throw InvalidArgument("cumulative_integral: bad axis");
  const AxisSpec& ax = g.axis(axis);
  if (a < ax.lo || a > ax.hi)
    throw InvalidArgument("cumulative_integral: start point outside axis bounds");
  const double h = g.spacing(axis);
  int ia = static_cast<int>(std::lround((a - ax.lo) / h));
  if (ia < 0) ia = 0;
  if (ia > ax.count - 1) ia = ax.count - 1;
  RealField out(f.grid_ptr(), 0.0, f.time());
  const auto& v = f.values();
  auto& o = out.values();
  const std::size_t start = static_cast<std::size_t>(ia);
  for_each_line(g, axis, [&](std::size_t base, std::size_t s, std::size_t n) {
    o[base + start * s] = 0.0;
    for (std::size_t k = start + 1; k < n; ++k)
      o[base + k * s] =
          o[base + (k - 1) * s] + 0.5 * h * (v[base + (k - 1) * s] + v[base + k * s]);
    for (std::size_t k = start; k-- > 0;)
      o[base + k * s] =
          o[base + (k + 1) * s] - 0.5 * h * (v[base + k * s] + v[base + (k + 1) * s]);
  });
  out.require_finite("cumulative_integral");
  return out;
}

namespace detail {

InterpStencil interp_stencil(const Grid& g, std::span<const double> point) {
  if (static_cast<int>(point.size()) != g.ndim())
    throw InvalidArgument("interpolate: point dimension mismatch");
  int lo_idx[4];
  int hi_idx[4];
  double frac[4];
  for (int a = 0; a < g.ndim(); ++a) {
    const AxisSpec& ax = g.axis(a);
    const double h = g.spacing(a);
    double x = point[a];
    if (ax.mode == Boundary::periodic) {
      const double span = ax.hi - ax.lo;
      x = std::fmod(x - ax.lo, span);
      if (x < 0.0) x += span;
      const double u = x / h;
      int i0 = static_cast<int>(std::floor(u));
      if (i0 >= ax.count) i0 = ax.count - 1;
      lo_idx[a] = i0;
      hi_idx[a] = (i0 + 1) % ax.count;
      frac[a] = u - i0;
    } else {
      const double tol = 1e-12 * (ax.hi - ax.lo);
      if (x < ax.lo - tol || x > ax.hi + tol)
        throw InvalidArgument("interpolate: point outside dirichlet axis range");
      double u = (x - ax.lo) / h;
      int i0 = static_cast<int>(std::floor(u));
      if (i0 < 0) i0 = 0;
      if (i0 > ax.count - 2) i0 = ax.count - 2;
      lo_idx[a] = i0;
      hi_idx[a] = i0 + 1;
      double fr = u - i0;
      frac[a] = fr < 0.0 ? 0.0 : (fr > 1.0 ? 1.0 : fr);
    }
  }
  InterpStencil st;
  const int n = g.ndim();
  st.count = 1 << n;
  for (int corner = 0; corner < st.count; ++corner) {
    std::size_t flat = 0;
    double w = 1.0;
    for (int a = 0; a < n; ++a) {
      const bool high = (corner >> a) & 1;
      flat += static_cast<std::size_t>(high ? hi_idx[a] : lo_idx[a]) *
              g.stride(a);
      w *= high ? frac[a] : 1.0 - frac[a];
    }
    st.corners[corner] = flat;
    st.weights[corner] = w;
  }
  return st;
}

}  // namespace detail

double interpolate(const RealField& f, std::span<const double> point) {
  const auto st = detail::interp_stencil(f.grid(), point);
  double v = 0.0;
  for (int c = 0; c < st.count; ++c) v += st.weights[c] * f[st.corners[c]];
  return v;
}

std::complex<double> interpolate(const ComplexField& f,
                                 std::span<const double> point) {
  const auto st = detail::interp_stencil(f.grid(), point);
  std::complex<double> v = 0.0;
  for (int c = 0; c < st.count; ++c) v += st.weights[c] * f[st.corners[c]];
  return v;
}

}  // namespace pw
