#include "pilotwave/bohm.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "pilotwave/ops.hpp"

namespace pw {

namespace {

double field_max(const RealField& f) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) m = std::max(m, f[i]);
  return m;
}

template <class Fn>
void parallel_over(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    fn(std::size_t{0}, n);
    return;
  }
  const std::size_t nt =
      std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  const std::size_t chunk = (n + nt - 1) / nt;
  for (std::size_t w = 0; w < nt; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

PolarPair polar_decompose(const ComplexField& psi, double hbar,
                          double floor_rel) {
  PolarPair out{RealField(psi.grid_ptr(), 0.0, psi.time()),
                RealField(psi.grid_ptr(), 0.0, psi.time()),
                std::vector<std::uint8_t>(psi.size(), 0)};
  double rmax = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    out.r[i] = std::abs(psi[i]);
    rmax = std::max(rmax, out.r[i]);
  }
  const double floor_abs = floor_rel * rmax;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (out.r[i] >= floor_abs && out.r[i] > 0.0) {
      out.s[i] = hbar * std::atan2(psi[i].imag(), psi[i].real());
      out.valid[i] = 1;
    }
  }
  return out;
}

std::vector<RealField> current_densities(const ComplexField& psi, double hbar) {
  const Grid& g = psi.grid();
  const Metric& mu = g.metric();
  std::vector<RealField> imag_terms;  // Im(conj(psi) d_j psi) per axis
  imag_terms.reserve(static_cast<std::size_t>(g.ndim()));
  for (int j = 0; j < g.ndim(); ++j) {
    ComplexField dj = gradient(psi, j);
    RealField im(psi.grid_ptr(), 0.0, psi.time());
    for (std::size_t i = 0; i < psi.size(); ++i)
      im[i] = std::imag(std::conj(psi[i]) * dj[i]);
    imag_terms.push_back(std::move(im));
  }
  std::vector<RealField> current;
  current.reserve(imag_terms.size());
  for (int i = 0; i < g.ndim(); ++i) {
    RealField ji(psi.grid_ptr(), 0.0, psi.time());
    if (mu.diagonal_constant()) {
      const double c = hbar * mu.diag(i);
      for (std::size_t p = 0; p < ji.size(); ++p)
        ji[p] = c * imag_terms[static_cast<std::size_t>(i)][p];
    } else {
      for (std::size_t p = 0; p < ji.size(); ++p) {
        double s = 0.0;
        for (int j = 0; j < g.ndim(); ++j)
          s += mu.at(i, j, p) * imag_terms[static_cast<std::size_t>(j)][p];
        ji[p] = hbar * s;
      }
    }
    ji.require_finite("current_densities");
    current.push_back(std::move(ji));
  }
  return current;
}

// --- FlowSeries -------------------------------------------------------------

FlowSeries FlowSeries::from_wavefunctions(const SnapshotSeries& s) {
  if (s.states.empty())
    throw InvalidArgument("flow: snapshot series holds no states");
  FlowSeries flow;
  for (std::size_t k = 0; k < s.states.size(); ++k)
    flow.add(s.times[k], born_density(s.states[k]),
             current_densities(s.states[k], s.hbar));
  return flow;
}

void FlowSeries::add(double t, RealField rho,
                     std::vector<RealField> current) {
  if (current.size() != static_cast<std::size_t>(rho.grid().ndim()))
    throw InvalidArgument("flow: need one current component per axis");
  for (const auto& j : current)
    require_same_layout(rho.grid(), j.grid(), "flow");
  if (!snaps_.empty()) {
    require_same_layout(rho.grid(), snaps_.front().rho.grid(), "flow");
    if (!(t > snaps_.back().t))
      throw InvalidArgument("flow: times must increase");
  }
  for (std::size_t i = 0; i < rho.size(); ++i)
    if (rho[i] < 0.0 && rho[i] > -1e-14)
      rho[i] = 0.0;  // quadrature dust from |psi|^2 reconstruction
  FlowSnapshot snap{t, std::move(rho), std::move(current), 0.0};
  snap.rho_max = field_max(snap.rho);
  if (!(snap.rho_max > 0.0)) throw InvalidArgument("flow: density vanishes");
  snaps_.push_back(std::move(snap));
}

double FlowSeries::spacing() const {
  if (snaps_.size() < 2) throw InvalidArgument("flow: need two snapshots");
  const double d = snaps_[1].t - snaps_[0].t;
  for (std::size_t k = 1; k + 1 < snaps_.size(); ++k)
    if (std::abs(snaps_[k + 1].t - snaps_[k].t - d) > 1e-9 * d)
      throw InvalidArgument("flow: stored times are not uniform");
  return d;
}

const GridPtr& FlowSeries::grid_ptr() const {
  if (snaps_.empty()) throw InvalidArgument("flow: empty series");
  return snaps_.front().rho.grid_ptr();
}

ContinuityReport continuity_residual(const FlowSeries& flow) {
  if (flow.count() < 3)
    throw InvalidArgument("continuity_residual: need at least three snapshots");
  const double dt = flow.spacing();
  const double span = flow.t1() - flow.t0();
  double res = 0.0, rho_max = 0.0;
  for (std::size_t k = 0; k < flow.count(); ++k)
    rho_max = std::max(rho_max, flow.at(k).rho_max);
  for (std::size_t k = 1; k + 1 < flow.count(); ++k) {
    const FlowSnapshot& prev = flow.at(k - 1);
    const FlowSnapshot& next = flow.at(k + 1);
    RealField div = divergence(flow.at(k).current);
    for (std::size_t i = 0; i < div.size(); ++i) {
      const double ddt = (next.rho[i] - prev.rho[i]) / (2.0 * dt);
      res = std::max(res, std::abs(ddt + div[i]));
    }
  }
  return {res, res * span / rho_max};
}

// --- FlowVelocity -----------------------------------------------------------

FlowVelocity::FlowVelocity(std::shared_ptr<const FlowSeries> flow,
                           double floor_rel)
    : flow_(std::move(flow)), floor_rel_(floor_rel) {
  if (!flow_ || flow_->count() == 0)
    throw InvalidArgument("velocity: empty flow series");
  if (flow_->count() > 1) (void)flow_->spacing();
}

const Grid& FlowVelocity::domain() const { return *flow_->grid_ptr(); }
const GridPtr& FlowVelocity::domain_ptr() const { return flow_->grid_ptr(); }

void FlowVelocity::snapshot_velocity(std::size_t k, const double* q,
                                     double* v) const {
  const FlowSnapshot& snap = flow_->at(k);
  const Grid& g = *flow_->grid_ptr();
  const int nd = g.ndim();
  double qc[4];
  for (int a = 0; a < nd; ++a) {
    qc[a] = q[a];
    const AxisSpec& ax = g.axis(a);
    if (ax.mode == Boundary::dirichlet)
      qc[a] = std::clamp(qc[a], ax.lo, ax.hi);
  }
  const auto st = detail::interp_stencil(g, std::span<const double>(qc, nd));
  double rho = 0.0;
  for (int c = 0; c < st.count; ++c) rho += st.weights[c] * snap.rho[st.corners[c]];
  const double floor_abs = floor_rel_ * snap.rho_max;
  const double denom = std::max(rho, floor_abs);
  for (int a = 0; a < nd; ++a) {
    double j = 0.0;
    const RealField& ja = snap.current[static_cast<std::size_t>(a)];
    for (int c = 0; c < st.count; ++c) j += st.weights[c] * ja[st.corners[c]];
    v[a] = j / denom;
  }
}

void FlowVelocity::velocity(const double* q, double t, double* v) const {
  if (flow_->count() == 1) {
    snapshot_velocity(0, q, v);
    return;
  }
  const double dt = flow_->spacing();
  double u = (t - flow_->t0()) / dt;
  u = std::clamp(u, 0.0, static_cast<double>(flow_->count() - 1));
  std::size_t k0 = static_cast<std::size_t>(u);
  if (k0 > flow_->count() - 2) k0 = flow_->count() - 2;
  const double theta = std::clamp(u - static_cast<double>(k0), 0.0, 1.0);
  const int nd = domain().ndim();
  double v0[4], v1[4];
  snapshot_velocity(k0, q, v0);
  snapshot_velocity(k0 + 1, q, v1);
  for (int a = 0; a < nd; ++a) v[a] = (1.0 - theta) * v0[a] + theta * v1[a];
}

// --- Sampling ---------------------------------------------------------------

Ensemble sample_ensemble(const RealField& rho, std::size_t count, Rng& rng) {
  if (count == 0) throw InvalidArgument("sample_ensemble: count must be positive");
  const Grid& g = rho.grid();
  const auto probs = born_probabilities(rho);
  std::vector<double> cdf(probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    cdf[i] = acc;
  }
  cdf.back() = 1.0;
  Ensemble e;
  e.ndim = g.ndim();
  e.count = count;
  e.q.resize(count * static_cast<std::size_t>(g.ndim()));
  int idx[4];
  for (std::size_t p = 0; p < count; ++p) {
    const double u = rng.uniform();
    const std::size_t cell = static_cast<std::size_t>(
        std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    g.unflatten(cell, idx);
    for (int a = 0; a < g.ndim(); ++a) {
      const AxisSpec& ax = g.axis(a);
      const double h = g.spacing(a);
      const double x = g.coord(a, idx[a]);
      double lo, hi;
      if (ax.mode == Boundary::dirichlet) {
        lo = std::max(ax.lo, x - 0.5 * h);
        hi = std::min(ax.hi, x + 0.5 * h);
      } else {
        lo = x - 0.5 * h;
        hi = x + 0.5 * h;
      }
      double pos = lo + rng.uniform() * (hi - lo);
      if (ax.mode == Boundary::periodic) {
        const double span = ax.hi - ax.lo;
        pos = std::fmod(pos - ax.lo, span);
        if (pos < 0.0) pos += span;
        pos += ax.lo;
      }
      e.q[p * static_cast<std::size_t>(g.ndim()) + static_cast<std::size_t>(a)] =
          pos;
    }
  }
  return e;
}

// --- Trajectory engine ------------------------------------------------------

namespace {

struct EngineContext {
  const VelocityModel* vel;
  const Grid* grid;
  double hmin;
  int max_halvings;
  long long leaf_budget;
};

// One adaptive RK4 step. Returns false once the particle freezes.
bool rk4_adaptive(const EngineContext& ctx, double* q, double t, double dt,
                  int depth, long long& leaves, bool& guard_hit) {
  const int nd = ctx.grid->ndim();
  double k1[4], k2[4], k3[4], k4[4], tmp[4];
  ctx.vel->velocity(q, t, k1);
  for (int a = 0; a < nd; ++a) tmp[a] = q[a] + 0.5 * dt * k1[a];
  ctx.vel->velocity(tmp, t + 0.5 * dt, k2);
  for (int a = 0; a < nd; ++a) tmp[a] = q[a] + 0.5 * dt * k2[a];
  ctx.vel->velocity(tmp, t + 0.5 * dt, k3);
  for (int a = 0; a < nd; ++a) tmp[a] = q[a] + dt * k3[a];
  ctx.vel->velocity(tmp, t + dt, k4);

  double vmax2 = 0.0;
  for (const double* k : {k1, k2, k3, k4}) {
    double s = 0.0;
    for (int a = 0; a < nd; ++a) s += k[a] * k[a];
    vmax2 = std::max(vmax2, s);
  }
  const double limit = 2.0 * ctx.hmin;
  if (std::sqrt(vmax2) * dt > limit && depth < ctx.max_halvings &&
      leaves < ctx.leaf_budget) {
    if (!rk4_adaptive(ctx, q, t, 0.5 * dt, depth + 1, leaves, guard_hit))
      return false;
    return rk4_adaptive(ctx, q, t + 0.5 * dt, 0.5 * dt, depth + 1, leaves,
                        guard_hit);
  }

  ++leaves;
  double dq[4];
  double norm2 = 0.0;
  for (int a = 0; a < nd; ++a) {
    dq[a] = dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
    norm2 += dq[a] * dq[a];
  }
  const double norm = std::sqrt(norm2);
  if (norm > limit) {
    // Depth or budget cap reached on a fast orbit: clamp the displacement so
    // the particle cannot be flung across the box.
    const double scale = limit / norm;
    for (int a = 0; a < nd; ++a) dq[a] *= scale;
    guard_hit = true;
  }
  bool alive = true;
  for (int a = 0; a < nd; ++a) {
    q[a] += dq[a];
    const AxisSpec& ax = ctx.grid->axis(a);
    if (ax.mode == Boundary::periodic) {
      const double span = ax.hi - ax.lo;
      double u = std::fmod(q[a] - ax.lo, span);
      if (u < 0.0) u += span;
      q[a] = ax.lo + u;
    } else if (q[a] < ax.lo || q[a] > ax.hi) {
      q[a] = std::clamp(q[a], ax.lo, ax.hi);
      alive = false;
    }
  }
  return alive;
}

}  // namespace

AdvanceResult advance_ensemble(const Ensemble& start, const VelocityModel& vel,
                               double t0, double t1,
                               const std::vector<double>& record_times,
                               const AdvanceOptions& opt) {
  const Grid& g = vel.domain();
  const int nd = g.ndim();
  if (start.ndim != nd)
    throw InvalidArgument("advance_ensemble: ensemble dimension mismatch");
  if (!(t1 >= t0)) throw InvalidArgument("advance_ensemble: t1 < t0");
  if (record_times.empty() || std::abs(record_times.front() - t0) > 1e-12 ||
      record_times.back() > t1 + 1e-12)
    throw InvalidArgument("advance_ensemble: record times must start at t0");
  for (std::size_t k = 1; k < record_times.size(); ++k)
    if (!(record_times[k] > record_times[k - 1]))
      throw InvalidArgument("advance_ensemble: record times must increase");

  double hmin = g.spacing(0);
  for (int a = 1; a < nd; ++a) hmin = std::min(hmin, g.spacing(a));

  AdvanceResult out;
  out.ndim = nd;
  out.count = start.count;
  out.times = record_times;
  out.positions.resize(record_times.size() * start.count *
                       static_cast<std::size_t>(nd));
  out.frozen.assign(start.count, 0);

  EngineContext ctx{&vel, &g, hmin, opt.max_halvings, 100000};

  std::vector<long long> guard_counts(start.count, 0);
  parallel_over(start.count, opt.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      double q[4];
      for (int a = 0; a < nd; ++a)
        q[a] = start.q[p * static_cast<std::size_t>(nd) + a];
      bool alive = true;
      bool guard_hit = false;
      double t = t0;
      for (std::size_t rk = 0; rk < record_times.size(); ++rk) {
        const double target = record_times[rk];
        if (alive && target > t) {
          const double span = target - t;
          const double base =
              opt.dt > 0.0 ? std::min(opt.dt, span) : span;
          const long long m = std::max<long long>(
              1, static_cast<long long>(std::ceil(span / base - 1e-12)));
          const double dt = span / static_cast<double>(m);
          long long leaves = 0;
          for (long long s = 0; s < m && alive; ++s) {
            alive = rk4_adaptive(ctx, q, t + s * dt, dt, 0, leaves, guard_hit);
          }
          t = target;
        }
        double* dst = &out.positions[(rk * start.count + p) *
                                     static_cast<std::size_t>(nd)];
        for (int a = 0; a < nd; ++a) dst[a] = q[a];
      }
      if (!alive) out.frozen[p] = 1;
      guard_counts[p] = guard_hit ? 1 : 0;
    }
  });
  for (std::size_t p = 0; p < start.count; ++p) {
    out.frozen_count += out.frozen[p];
    out.guard_limited += static_cast<std::size_t>(guard_counts[p]);
  }
  for (double x : out.positions)
    if (!std::isfinite(x))
      throw NumericError("advance_ensemble: non-finite position");
  return out;
}

TrajectoryBlock AdvanceResult::to_block(std::uint64_t seed) const {
  TrajectoryBlock b;
  b.ndim = ndim;
  b.nparticles = count;
  b.seed = seed;
  b.times = times;
  b.positions = positions;
  return b;
}

// --- Equivariance -----------------------------------------------------------

EquivarianceReport equivariance_report(const FlowSeries& flow,
                                       const AdvanceResult& adv,
                                       int baseline_resamples, Rng& rng) {
  if (baseline_resamples < 1)
    throw InvalidArgument("equivariance_report: need at least one resample");
  EquivarianceReport rep;
  rep.times = adv.times;
  rep.nparticles = adv.count;
  rep.baseline_resamples = baseline_resamples;
  const double span = std::max(flow.t1() - flow.t0(), 1e-300);
  for (std::size_t rk = 0; rk < adv.times.size(); ++rk) {
    // Locate the flow snapshot at this record time.
    std::size_t snap_idx = flow.count();
    for (std::size_t k = 0; k < flow.count(); ++k)
      if (std::abs(flow.at(k).t - adv.times[rk]) <= 1e-9 * span) {
        snap_idx = k;
        break;
      }
    if (snap_idx == flow.count())
      throw InvalidArgument("equivariance_report: record time has no snapshot");
    const FlowSnapshot& snap = flow.at(snap_idx);
    const auto probs = born_probabilities(snap.rho);
    CellHistogram h =
        histogram_on_grid(flow.grid_ptr(), adv.at_time(rk), adv.count);
    const double tv = tv_distance(h, probs);
    rep.tv.push_back(tv);
    rep.ks.push_back(ks_per_axis(snap.rho, adv.at_time(rk), adv.count));
    double bmean = 0.0, bmax = 0.0;
    for (int b = 0; b < baseline_resamples; ++b) {
      Ensemble fresh = sample_ensemble(snap.rho, adv.count, rng);
      CellHistogram hb = histogram_on_grid(flow.grid_ptr(), fresh.q, fresh.count);
      const double tvb = tv_distance(hb, probs);
      bmean += tvb;
      bmax = std::max(bmax, tvb);
    }
    bmean /= baseline_resamples;
    rep.baseline_mean.push_back(bmean);
    rep.baseline_max.push_back(bmax);
    rep.worst_tv = std::max(rep.worst_tv, tv);
    if (bmean > 0.0) rep.worst_ratio = std::max(rep.worst_ratio, tv / bmean);
  }
  return rep;
}

Manifest EquivarianceReport::to_manifest() const {
  Manifest m;
  m.emplace_back("kind", "equivariance-report");
  m.emplace_back("particles", std::to_string(nparticles));
  m.emplace_back("baseline-resamples", std::to_string(baseline_resamples));
  m.emplace_back("worst-tv", format_double(worst_tv));
  m.emplace_back("worst-ratio", format_double(worst_ratio));
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::string ksline;
    for (std::size_t a = 0; a < ks[k].size(); ++a) {
      if (a) ksline += " ";
      ksline += format_double(ks[k][a]);
    }
    m.emplace_back("t=" + format_double(times[k]),
                   "tv=" + format_double(tv[k]) + " baseline=" +
                       format_double(baseline_mean[k]) + " ks=" + ksline);
  }
  return m;
}

// --- Branch decomposition ---------------------------------------------------

std::vector<Branch> branch_decompose(const RealField& rho,
                                     double threshold_rel) {
  const Grid& g = rho.grid();
  const double cut = threshold_rel * field_max(rho);
  std::vector<int> label(rho.size(), -1);
  std::vector<Branch> branches;
  std::vector<std::size_t> stack;
  int idx[4], nidx[4];
  for (std::size_t seed = 0; seed < rho.size(); ++seed) {
    if (label[seed] >= 0 || !(rho[seed] > cut)) continue;
    const int id = static_cast<int>(branches.size());
    Branch br;
    br.mask.assign(rho.size(), 0);
    stack.clear();
    stack.push_back(seed);
    label[seed] = id;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      br.mask[i] = 1;
      br.weight += rho[i] * g.cell_volume(i);
      g.unflatten(i, idx);
      for (int a = 0; a < g.ndim(); ++a) {
        const AxisSpec& ax = g.axis(a);
        for (int dir = -1; dir <= 1; dir += 2) {
          for (int b = 0; b < g.ndim(); ++b) nidx[b] = idx[b];
          nidx[a] += dir;
          if (ax.mode == Boundary::periodic) {
            if (nidx[a] < 0) nidx[a] = ax.count - 1;
            if (nidx[a] >= ax.count) nidx[a] = 0;
          } else if (nidx[a] < 0 || nidx[a] >= ax.count) {
            continue;
          }
          const std::size_t ni = g.flatten(nidx);
          if (label[ni] < 0 && rho[ni] > cut) {
            label[ni] = id;
            stack.push_back(ni);
          }
        }
      }
    }
    branches.push_back(std::move(br));
  }
  std::sort(branches.begin(), branches.end(),
            [](const Branch& a, const Branch& b) { return a.weight > b.weight; });
  return branches;
}

}  // namespace pw
