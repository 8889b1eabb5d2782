#include "pilotwave/stats.hpp"

#include <algorithm>
#include <cmath>

namespace pw {

namespace {

// Nearest-node index along one axis; positions on periodic axes wrap.
int cell_index(const AxisSpec& ax, double h, double x) {
  if (ax.mode == Boundary::periodic) {
    const double span = ax.hi - ax.lo;
    double u = std::fmod(x - ax.lo, span);
    if (u < 0.0) u += span;
    const int k = static_cast<int>(std::lround(u / h));
    return k >= ax.count ? 0 : k;
  }
  if (x < ax.lo || x > ax.hi) return -1;
  int k = static_cast<int>(std::lround((x - ax.lo) / h));
  if (k < 0) k = 0;
  if (k > ax.count - 1) k = ax.count - 1;
  return k;
}

}  // namespace

CellHistogram histogram_on_grid(const GridPtr& grid,
                                std::span<const double> positions,
                                std::size_t nparticles) {
  const Grid& g = *grid;
  const std::size_t nd = static_cast<std::size_t>(g.ndim());
  if (positions.size() != nparticles * nd)
    throw InvalidArgument("histogram: position count mismatch");
  CellHistogram h;
  h.grid = grid;
  h.counts.assign(g.size(), 0.0);
  for (std::size_t p = 0; p < nparticles; ++p) {
    std::size_t flat = 0;
    bool inside = true;
    for (int a = 0; a < g.ndim(); ++a) {
      const int k = cell_index(g.axis(a), g.spacing(a), positions[p * nd + a]);
      if (k < 0) {
        inside = false;
        break;
      }
      flat += static_cast<std::size_t>(k) * g.stride(a);
    }
    if (inside) {
      h.counts[flat] += 1.0;
      h.total += 1.0;
    }
  }
  return h;
}

std::vector<double> born_probabilities(const RealField& rho) {
  const Grid& g = rho.grid();
  std::vector<double> p(rho.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double w = rho[i] * g.cell_volume(i);
    if (w < 0.0 && w < -1e-12)
      throw InvalidArgument("born_probabilities: negative density");
    p[i] = w > 0.0 ? w : 0.0;
    sum += p[i];
  }
  if (!(sum > 0.0)) throw InvalidArgument("born_probabilities: zero density");
  for (double& x : p) x /= sum;
  return p;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InvalidArgument("tv_distance: size mismatch");
  double sp = 0.0, sq = 0.0;
  for (double x : p) sp += x;
  for (double x : q) sq += x;
  if (!(sp > 0.0) || !(sq > 0.0))
    throw InvalidArgument("tv_distance: non-positive mass");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] / sp - q[i] / sq);
  return 0.5 * d;
}

double tv_distance(const CellHistogram& h, std::span<const double> probs) {
  return tv_distance(std::span<const double>(h.counts), probs);
}

std::vector<double> marginal_probabilities(const RealField& rho, int axis) {
  const Grid& g = rho.grid();
  if (axis < 0 || axis >= g.ndim())
    throw InvalidArgument("marginal_probabilities: bad axis");
  const std::size_t n = static_cast<std::size_t>(g.axis(axis).count);
  std::vector<double> m(n, 0.0);
  int idx[4];
  for (std::size_t i = 0; i < rho.size(); ++i) {
    g.unflatten(i, idx);
    m[static_cast<std::size_t>(idx[axis])] += rho[i] * g.cell_volume(i);
  }
  double sum = 0.0;
  for (double x : m) sum += x;
  if (!(sum > 0.0))
    throw InvalidArgument("marginal_probabilities: zero density");
  for (double& x : m) x /= sum;
  return m;
}

std::vector<double> ks_per_axis(const RealField& rho,
                                std::span<const double> positions,
                                std::size_t nparticles) {
  const Grid& g = rho.grid();
  const std::size_t nd = static_cast<std::size_t>(g.ndim());
  if (positions.size() != nparticles * nd)
    throw InvalidArgument("ks_per_axis: position count mismatch");
  std::vector<double> out(nd, 0.0);
  for (int a = 0; a < g.ndim(); ++a) {
    const AxisSpec& ax = g.axis(a);
    const double h = g.spacing(a);
    // Piecewise-linear model CDF from the marginal node density.
    std::vector<double> mass = marginal_probabilities(rho, a);
    // Convert node masses back to a density-per-length and accumulate a
    // trapezoid CDF over the node coordinates (periodic axes close the loop
    // back to hi).
    const std::size_t n = mass.size();
    std::vector<double> dens(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double w = g.node_weight(a, static_cast<int>(k));
      dens[k] = mass[k] / w;
    }
    const bool periodic = ax.mode == Boundary::periodic;
    std::vector<double> xs;
    std::vector<double> cdf;
    xs.reserve(n + 1);
    cdf.reserve(n + 1);
    xs.push_back(ax.lo);
    cdf.push_back(0.0);
    for (std::size_t k = 1; k < n; ++k) {
      xs.push_back(g.coord(a, static_cast<int>(k)));
      cdf.push_back(cdf.back() + 0.5 * h * (dens[k - 1] + dens[k]));
    }
    if (periodic) {
      xs.push_back(ax.hi);
      cdf.push_back(cdf.back() + 0.5 * h * (dens[n - 1] + dens[0]));
    }
    const double total = cdf.back();
    if (!(total > 0.0)) throw InvalidArgument("ks_per_axis: zero density");
    for (double& v : cdf) v /= total;
    auto model_cdf = [&](double x) {
      if (periodic) {
        const double span = ax.hi - ax.lo;
        x = std::fmod(x - ax.lo, span);
        if (x < 0.0) x += span;
        x += ax.lo;
      }
      if (x <= xs.front()) return 0.0;
      if (x >= xs.back()) return 1.0;
      const auto it = std::upper_bound(xs.begin(), xs.end(), x);
      const std::size_t j = static_cast<std::size_t>(it - xs.begin());
      const double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
      return cdf[j - 1] + t * (cdf[j] - cdf[j - 1]);
    };
    std::vector<double> coords(nparticles);
    for (std::size_t p = 0; p < nparticles; ++p)
      coords[p] = positions[p * nd + static_cast<std::size_t>(a)];
    std::sort(coords.begin(), coords.end());
    double d = 0.0;
    const double inv = 1.0 / static_cast<double>(nparticles);
    for (std::size_t i = 0; i < nparticles; ++i) {
      const double f = model_cdf(coords[i]);
      d = std::max(d, std::abs(static_cast<double>(i + 1) * inv - f));
      d = std::max(d, std::abs(static_cast<double>(i) * inv - f));
    }
    out[static_cast<std::size_t>(a)] = d;
  }
  return out;
}

}  // namespace pw
