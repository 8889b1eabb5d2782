#include "pilotwave/gauge.hpp"

#include <algorithm>
#include <cmath>

#include "pilotwave/ops.hpp"

namespace pw {

namespace {

using cplx = std::complex<double>;

double hermiticity_defect_of(const CMatrix& m) {
  return (m - m.adjoint()).norm();
}

double axis_distance(const AxisSpec& ax, double a, double b) {
  double d = std::abs(a - b);
  if (ax.mode == Boundary::periodic) {
    const double span = ax.hi - ax.lo;
    d = std::fmod(d, span);
    d = std::min(d, span - d);
  }
  return d;
}

// Nodes within mask_radius of a declared singular point are excluded from
// divergence audits.
std::vector<std::uint8_t> singular_mask(const GaugeFunction& lam,
                                        const Grid& g, double mask_radius) {
  std::vector<std::uint8_t> masked(g.size(), 0);
  if (lam.singular_points.empty() || mask_radius <= 0.0) return masked;
  std::vector<double> q(static_cast<std::size_t>(g.ndim()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.node(i, q.data());
    for (const auto& s : lam.singular_points) {
      double d2 = 0.0;
      for (int a = 0; a < g.ndim(); ++a) {
        const double da = axis_distance(g.axis(a), q[a], s[a]);
        d2 += da * da;
      }
      if (d2 <= mask_radius * mask_radius) {
        masked[i] = 1;
        break;
      }
    }
  }
  return masked;
}

}  // namespace

// --- Finite-dimensional frame changes ---------------------------------------

void FiniteQuantumSystem::validate(double t) const {
  if (state.size() < 1) throw InvalidArgument("system: empty state");
  if (std::abs(state.norm() - 1.0) > 1e-10)
    throw InvalidArgument("system: state is not unit norm");
  for (const auto& [name, a] : observables) {
    if (a.rows() != dim() || a.cols() != dim())
      throw InvalidArgument("system: observable '" + name + "' shape mismatch");
    if (hermiticity_defect_of(a) > 1e-12 * std::max(1.0, a.norm()))
      throw InvalidArgument("system: observable '" + name + "' not Hermitian");
  }
  if (!hamiltonian) throw InvalidArgument("system: missing Hamiltonian");
  const CMatrix h = hamiltonian(t);
  if (h.rows() != dim() || h.cols() != dim())
    throw InvalidArgument("system: Hamiltonian shape mismatch");
  if (hermiticity_defect_of(h) > 1e-12 * std::max(1.0, h.norm()))
    throw InvalidArgument("system: Hamiltonian not Hermitian");
}

UnitaryPath::UnitaryPath(std::function<CMatrix(double)> v,
                         std::function<CMatrix(double)> dv, double delta)
    : v_(std::move(v)), dv_(std::move(dv)), delta_(delta) {
  if (!v_) throw InvalidArgument("unitary path: missing provider");
  if (!(delta_ > 0.0)) throw InvalidArgument("unitary path: delta <= 0");
}

CMatrix UnitaryPath::at(double t) const {
  CMatrix v = v_(t);
  const CMatrix defect =
      v * v.adjoint() - CMatrix::Identity(v.rows(), v.cols());
  if (defect.norm() > 1e-10)
    throw InvalidArgument("unitary path: V(t) is not unitary");
  return v;
}

CMatrix UnitaryPath::derivative(double t) const {
  if (dv_) return dv_(t);
  return (v_(t + delta_) - v_(t - delta_)) / (2.0 * delta_);
}

FrameView apply_gauge_hilbert(const FiniteQuantumSystem& sys,
                              const UnitaryPath& path, double t) {
  sys.validate(t);
  const CMatrix v = path.at(t);
  if (v.rows() != sys.dim())
    throw InvalidArgument("frame change: dimension mismatch");
  const CMatrix vdot = path.derivative(t);
  const cplx ih(0.0, sys.hbar);

  FrameView out;
  out.state = v * sys.state;
  out.observables.reserve(sys.observables.size());
  for (const auto& [name, a] : sys.observables)
    out.observables.emplace_back(name, CMatrix(v * a * v.adjoint()));
  CMatrix hp = v * sys.hamiltonian(t) * v.adjoint() - ih * v * vdot.adjoint();
  out.hermiticity_defect = hermiticity_defect_of(hp);
  if (out.hermiticity_defect > 1e-6 * std::max(1.0, hp.norm()))
    throw NumericError("frame change: transformed Hamiltonian far from Hermitian");
  out.hamiltonian = 0.5 * (hp + hp.adjoint().eval());
  return out;
}

std::function<CMatrix(double)> gauged_hamiltonian(
    const FiniteQuantumSystem& sys, const UnitaryPath& path) {
  return [&sys, &path](double t) {
    return apply_gauge_hilbert(sys, path, t).hamiltonian;
  };
}

double covariant_derivative_residual(const std::vector<CVector>& states,
                                     const std::function<CMatrix(double)>& h,
                                     double hbar, double t0, double dt) {
  if (states.size() < 3)
    throw InvalidArgument("covariant residual: need at least three samples");
  if (!(dt > 0.0)) throw InvalidArgument("covariant residual: dt <= 0");
  const cplx i_over_h(0.0, 1.0 / hbar);
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < states.size(); ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    const CVector ddt = (states[k + 1] - states[k - 1]) / (2.0 * dt);
    const CVector res = ddt + i_over_h * (h(t) * states[k]);
    worst = std::max(worst, res.norm());
  }
  return worst;
}

CMatrix hermitian_propagator(const CMatrix& h, double dt, double hbar) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.info() != Eigen::Success)
    throw NumericError("propagator: eigendecomposition failed");
  CVector phases(h.rows());
  for (int k = 0; k < h.rows(); ++k)
    phases[k] = std::polar(1.0, -es.eigenvalues()[k] * dt / hbar);
  return es.eigenvectors() * phases.asDiagonal() *
         es.eigenvectors().adjoint();
}

CVector evolve_state(const std::function<CMatrix(double)>& h,
                     const CVector& psi0, double t0, double t1, int steps,
                     double hbar) {
  if (steps < 1) throw InvalidArgument("evolve_state: steps < 1");
  const double dt = (t1 - t0) / static_cast<double>(steps);
  CVector psi = psi0;
  for (int k = 0; k < steps; ++k) {
    const double tm = t0 + (static_cast<double>(k) + 0.5) * dt;
    psi = hermitian_propagator(h(tm), dt, hbar) * psi;
  }
  return psi;
}

CMatrix random_hermitian(int d, Rng& rng) {
  CMatrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = cplx(rng.normal(), rng.normal());
  return 0.5 * (a + a.adjoint().eval());
}

CMatrix random_unitary(int d, Rng& rng) {
  CMatrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = cplx(rng.normal(), rng.normal());
  Eigen::HouseholderQR<CMatrix> qr(a);
  CMatrix q = qr.householderQ();
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < d; ++i) {
    const cplx rii = r(i, i);
    q.col(i) *= (std::abs(rii) > 0.0 ? rii / std::abs(rii) : cplx(1.0, 0.0));
  }
  return q;
}

// --- Configuration-space gauges ---------------------------------------------

RealField gauge_value_field(const GaugeFunction& lam, const GridPtr& g,
                            double t) {
  if (!lam.has_value())
    throw InvalidArgument("gauge: no value provider for '" + lam.descriptor +
                          "'");
  RealField f(g, 0.0, t);
  std::vector<double> q(static_cast<std::size_t>(f.grid().ndim()));
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.grid().node(i, q.data());
    f[i] = lam.value(q.data(), t);
  }
  f.require_finite("gauge value");
  return f;
}

std::vector<RealField> gauge_gradient_fields(const GaugeFunction& lam,
                                             const GridPtr& g, double t) {
  const int nd = g->ndim();
  std::vector<RealField> out;
  if (lam.has_gradient()) {
    for (int a = 0; a < nd; ++a) out.emplace_back(g, 0.0, t);
    std::vector<double> q(static_cast<std::size_t>(nd));
    std::vector<double> grad(static_cast<std::size_t>(nd));
    for (std::size_t i = 0; i < g->size(); ++i) {
      g->node(i, q.data());
      lam.gradient(q.data(), t, grad.data());
      for (int a = 0; a < nd; ++a) out[static_cast<std::size_t>(a)][i] = grad[a];
    }
  } else {
    const RealField value = gauge_value_field(lam, g, t);
    for (int a = 0; a < nd; ++a) out.push_back(gradient(value, a));
  }
  for (auto& f : out) f.require_finite("gauge gradient");
  return out;
}

double gauge_gradient_audit(const GaugeFunction& lam, const GridPtr& g,
                            double t) {
  if (!lam.has_value() || !lam.has_gradient())
    throw InvalidArgument("gauge audit: needs both providers");
  const RealField value = gauge_value_field(lam, g, t);
  const auto analytic = gauge_gradient_fields(lam, g, t);
  double worst = 0.0;
  for (int a = 0; a < g->ndim(); ++a) {
    const RealField numeric = gradient(value, a);
    for (std::size_t i = 0; i < numeric.size(); ++i)
      worst = std::max(worst,
                       std::abs(numeric[i] - analytic[static_cast<std::size_t>(a)][i]));
  }
  return worst;
}

ComplexField apply_gauge_config(const ComplexField& psi,
                                const GaugeFunction& lam, double t,
                                double hbar) {
  if (!lam.has_value())
    throw InvalidArgument(
        "gauge: '" + lam.descriptor +
        "' is gradient-only; phase application needs the value");
  ComplexField out = psi;
  std::vector<double> q(static_cast<std::size_t>(psi.grid().ndim()));
  for (std::size_t i = 0; i < psi.size(); ++i) {
    psi.grid().node(i, q.data());
    out[i] = psi[i] * std::polar(1.0, lam.value(q.data(), t) / hbar);
  }
  return out;
}

std::vector<RealField> gauge_current_shift(const RealField& rho,
                                           const GaugeFunction& lam,
                                           double t) {
  const Grid& g = rho.grid();
  const Metric& mu = g.metric();
  const auto grad = gauge_gradient_fields(lam, rho.grid_ptr(), t);
  std::vector<RealField> shift;
  shift.reserve(grad.size());
  for (int i = 0; i < g.ndim(); ++i) {
    RealField dj(rho.grid_ptr(), 0.0, t);
    for (std::size_t p = 0; p < rho.size(); ++p) {
      double s = 0.0;
      for (int j = 0; j < g.ndim(); ++j)
        s += mu.at(i, j, p) * grad[static_cast<std::size_t>(j)][p];
      dj[p] = rho[p] * s;
    }
    shift.push_back(std::move(dj));
  }
  return shift;
}

RestrictionReport check_restricted(const GaugeFunction& lam,
                                   const RealField& rho, double t,
                                   double mask_radius) {
  const Grid& g = rho.grid();
  const auto dj = gauge_current_shift(rho, lam, t);
  const auto masked = singular_mask(lam, g, mask_radius);

  RestrictionReport rep;
  std::size_t nmasked = 0;
  // Per-axis divergence pieces, so the cancellation can be measured against
  // the size of what is cancelling.
  std::vector<RealField> pieces;
  for (int a = 0; a < g.ndim(); ++a)
    pieces.push_back(gradient(dj[static_cast<std::size_t>(a)], a));
  double sup_sum = 0.0, sup_abs = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (masked[i]) {
      ++nmasked;
      continue;
    }
    double total = 0.0, absolute = 0.0;
    for (const auto& piece : pieces) {
      total += piece[i];
      absolute += std::abs(piece[i]);
    }
    sup_sum = std::max(sup_sum, std::abs(total));
    sup_abs = std::max(sup_abs, absolute);
  }
  rep.scale = sup_abs;
  rep.residual = sup_abs > 0.0 ? sup_sum / sup_abs : 0.0;
  rep.masked_fraction =
      static_cast<double>(nmasked) / static_cast<double>(rho.size());
  return rep;
}

FlowSeries gauge_shift_flow(const FlowSeries& flow, const GaugeFunction& lam) {
  FlowSeries out;
  for (std::size_t k = 0; k < flow.count(); ++k) {
    const FlowSnapshot& snap = flow.at(k);
    auto dj = gauge_current_shift(snap.rho, lam, snap.t);
    std::vector<RealField> shifted;
    shifted.reserve(dj.size());
    for (std::size_t a = 0; a < dj.size(); ++a) {
      RealField j = snap.current[a];
      for (std::size_t i = 0; i < j.size(); ++i) j[i] += dj[a][i];
      shifted.push_back(std::move(j));
    }
    out.add(snap.t, snap.rho, std::move(shifted));
  }
  return out;
}

std::vector<RealField> curl_current(const RealField& chi) {
  if (chi.grid().ndim() != 2)
    throw InvalidArgument("curl current: two-dimensional grids only");
  std::vector<RealField> w;
  w.push_back(gradient(chi, 1));
  for (std::size_t i = 0; i < w[0].size(); ++i) w[0][i] = -w[0][i];
  w.push_back(gradient(chi, 0));
  return w;
}

FlowSeries add_divergence_free_current(const FlowSeries& flow,
                                       const std::vector<RealField>& w,
                                       double tol) {
  const Grid& g = *flow.grid_ptr();
  if (w.size() != static_cast<std::size_t>(g.ndim()))
    throw InvalidArgument("current addition: component count mismatch");
  for (const auto& c : w) require_same_layout(g, c.grid(), "current addition");

  double sup_sum = 0.0, sup_abs = 0.0;
  std::vector<RealField> pieces;
  for (int a = 0; a < g.ndim(); ++a)
    pieces.push_back(gradient(w[static_cast<std::size_t>(a)], a));
  for (std::size_t i = 0; i < g.size(); ++i) {
    double total = 0.0, absolute = 0.0;
    for (const auto& piece : pieces) {
      total += piece[i];
      absolute += std::abs(piece[i]);
    }
    sup_sum = std::max(sup_sum, std::abs(total));
    sup_abs = std::max(sup_abs, absolute);
  }
  if (sup_abs > 0.0 && sup_sum / sup_abs > tol)
    throw CertificationError("current addition: field is not divergence-free");

  FlowSeries out;
  for (std::size_t k = 0; k < flow.count(); ++k) {
    const FlowSnapshot& snap = flow.at(k);
    std::vector<RealField> shifted;
    shifted.reserve(w.size());
    for (std::size_t a = 0; a < w.size(); ++a) {
      RealField j = snap.current[a];
      for (std::size_t i = 0; i < j.size(); ++i) j[i] += w[a][i];
      shifted.push_back(std::move(j));
    }
    out.add(snap.t, snap.rho, std::move(shifted));
  }
  return out;
}

GaugeCompareReport gauge_velocity_shift(
    const FlowSeries& flow, const GaugeFunction& lam, const Ensemble& start,
    const std::vector<double>& record_times, const AdvanceOptions& opt,
    int baseline_resamples, Rng& rng, double restriction_tol,
    double mask_radius) {
  GaugeCompareReport rep;
  rep.restriction = check_restricted(lam, flow.at(0).rho, flow.t0(), mask_radius);
  rep.restriction_ok = rep.restriction.restricted(restriction_tol);
  rep.nparticles = start.count;
  rep.times = record_times;

  auto plain_flow = std::make_shared<const FlowSeries>(flow);
  auto gauged_flow =
      std::make_shared<const FlowSeries>(gauge_shift_flow(flow, lam));
  FlowVelocity plain_vel(plain_flow), gauged_vel(gauged_flow);
  const auto plain = advance_ensemble(start, plain_vel, flow.t0(), flow.t1(),
                                      record_times, opt);
  const auto gauged = advance_ensemble(start, gauged_vel, flow.t0(), flow.t1(),
                                       record_times, opt);

  const Grid& g = *flow.grid_ptr();
  const int nd = g.ndim();
  for (std::size_t k = 0; k < record_times.size(); ++k) {
    const auto pa = plain.at_time(k);
    const auto pb = gauged.at_time(k);
    double worst = 0.0;
    for (std::size_t p = 0; p < start.count; ++p) {
      double d2 = 0.0;
      for (int a = 0; a < nd; ++a) {
        const double da = axis_distance(
            g.axis(a), pa[p * static_cast<std::size_t>(nd) + a],
            pb[p * static_cast<std::size_t>(nd) + a]);
        d2 += da * da;
      }
      worst = std::max(worst, std::sqrt(d2));
    }
    rep.deviation.push_back(worst);
    rep.max_deviation = std::max(rep.max_deviation, worst);
  }

  // Final-time statistics: both runs against the same Born density.
  std::size_t snap_idx = flow.count();
  const double span = std::max(flow.t1() - flow.t0(), 1e-300);
  for (std::size_t k = 0; k < flow.count(); ++k)
    if (std::abs(flow.at(k).t - record_times.back()) <= 1e-9 * span)
      snap_idx = k;
  if (snap_idx == flow.count())
    throw InvalidArgument("gauge compare: final record time has no snapshot");
  const auto probs = born_probabilities(flow.at(snap_idx).rho);
  const std::size_t last = record_times.size() - 1;
  rep.tv_plain_final = tv_distance(
      histogram_on_grid(flow.grid_ptr(), plain.at_time(last), plain.count),
      probs);
  rep.tv_gauged_final = tv_distance(
      histogram_on_grid(flow.grid_ptr(), gauged.at_time(last), gauged.count),
      probs);
  for (int b = 0; b < baseline_resamples; ++b) {
    Ensemble fresh = sample_ensemble(flow.at(snap_idx).rho, start.count, rng);
    const double tv = tv_distance(
        histogram_on_grid(flow.grid_ptr(), fresh.q, fresh.count), probs);
    rep.baseline_mean += tv;
    rep.baseline_max = std::max(rep.baseline_max, tv);
  }
  if (baseline_resamples > 0)
    rep.baseline_mean /= static_cast<double>(baseline_resamples);
  return rep;
}

Manifest GaugeCompareReport::to_manifest() const {
  Manifest m;
  m.emplace_back("kind", "gauge-compare-report");
  m.emplace_back("particles", std::to_string(nparticles));
  m.emplace_back("restriction-residual", format_double(restriction.residual));
  m.emplace_back("restriction-masked-fraction",
                 format_double(restriction.masked_fraction));
  m.emplace_back("restriction-ok", restriction_ok ? "yes" : "no");
  m.emplace_back("max-trajectory-deviation", format_double(max_deviation));
  m.emplace_back("tv-plain-final", format_double(tv_plain_final));
  m.emplace_back("tv-gauged-final", format_double(tv_gauged_final));
  m.emplace_back("tv-baseline-mean", format_double(baseline_mean));
  m.emplace_back("tv-baseline-max", format_double(baseline_max));
  for (std::size_t k = 0; k < times.size(); ++k)
    m.emplace_back("deviation-at-t=" + format_double(times[k]),
                   format_double(deviation[k]));
  return m;
}

}  // namespace pw
