#include "pilotwave/hmm.hpp"

#include <algorithm>
#include <cmath>

#include "pilotwave/ops.hpp"

namespace pw {

namespace {

RealField eval_on_grid(const GridPtr& g, const DensityProvider::Fn& fn,
                       double t) {
  RealField f(g, 0.0, t);
  std::vector<double> q(static_cast<std::size_t>(g->ndim()));
  for (std::size_t i = 0; i < f.size(); ++i) {
    g->node(i, q.data());
    f[i] = fn(q.data(), t);
  }
  return f;
}

}  // namespace

DensityProvider DensityProvider::analytic(GridPtr grid, Fn rho, Fn drho_dt,
                                          std::string descriptor) {
  if (!rho) throw InvalidArgument("density: missing evaluator");
  DensityProvider p;
  p.grid_ = std::move(grid);
  p.rho_ = std::move(rho);
  p.drho_ = std::move(drho_dt);
  p.descriptor_ = std::move(descriptor);
  return p;
}

DensityProvider DensityProvider::tabulated(std::vector<RealField> snapshots,
                                           std::vector<double> times,
                                           std::string descriptor) {
  if (snapshots.empty() || snapshots.size() != times.size())
    throw InvalidArgument("density: snapshot/time count mismatch");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1]))
      throw InvalidArgument("density: times must increase");
    require_same_layout(snapshots[k].grid(), snapshots[0].grid(), "density");
  }
  DensityProvider p;
  p.grid_ = snapshots[0].grid_ptr();
  p.snaps_ = std::move(snapshots);
  p.times_ = std::move(times);
  p.descriptor_ = std::move(descriptor);
  return p;
}

namespace {

std::size_t stored_index(const std::vector<double>& times, double t) {
  const double span = std::max(times.back() - times.front(), 1e-300);
  for (std::size_t k = 0; k < times.size(); ++k)
    if (std::abs(times[k] - t) <= 1e-9 * span) return k;
  throw InvalidArgument("density: t is not a stored time");
}

}  // namespace

RealField DensityProvider::density(double t) const {
  if (rho_) return eval_on_grid(grid_, rho_, t);
  return snaps_[stored_index(times_, t)];
}

RealField DensityProvider::rate(double t, double dt) const {
  if (drho_) return eval_on_grid(grid_, drho_, t);
  if (rho_) {
    if (!(dt > 0.0)) throw InvalidArgument("density rate: dt <= 0");
    RealField plus = eval_on_grid(grid_, rho_, t + dt);
    const RealField minus = eval_on_grid(grid_, rho_, t - dt);
    for (std::size_t i = 0; i < plus.size(); ++i)
      plus[i] = (plus[i] - minus[i]) / (2.0 * dt);
    plus.set_time(t);
    return plus;
  }
  if (times_.size() < 3)
    throw InvalidArgument("density rate: need at least three snapshots");
  const std::size_t k = stored_index(times_, t);
  const std::size_t n = times_.size();
  RealField out(grid_, 0.0, t);
  if (k > 0 && k + 1 < n) {
    const double span = times_[k + 1] - times_[k - 1];
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = (snaps_[k + 1][i] - snaps_[k - 1][i]) / span;
  } else if (k == 0) {
    const double h = times_[1] - times_[0];
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = (-3.0 * snaps_[0][i] + 4.0 * snaps_[1][i] - snaps_[2][i]) /
               (2.0 * h);
  } else {
    const double h = times_[n - 1] - times_[n - 2];
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = (3.0 * snaps_[n - 1][i] - 4.0 * snaps_[n - 2][i] +
                snaps_[n - 3][i]) /
               (2.0 * h);
  }
  return out;
}

void DensityProvider::validate(double t, double mass_tol) const {
  const RealField rho = density(t);
  rho.require_finite("density");
  double min_v = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) min_v = std::min(min_v, rho[i]);
  if (min_v < -1e-12)
    throw InvalidArgument("density: negative values at t=" + format_double(t));
  const double mass = integrate(rho);
  if (std::abs(mass - 1.0) > mass_tol)
    throw InvalidArgument("density: mass " + format_double(mass) +
                          " is not 1 at t=" + format_double(t));
}

RealField build_r(const DensityProvider& density, double t) {
  RealField r = density.density(t);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] < 0.0) {
      if (r[i] < -1e-12) throw InvalidArgument("latent field: negative density");
      r[i] = 0.0;  // quadrature dust
    }
    r[i] = std::sqrt(r[i]);
  }
  return r;
}

namespace {

std::vector<RealField> currents_from_rate(const RealField& rate,
                                          const std::vector<double>& c,
                                          const std::vector<double>& a) {
  const Grid& g = rate.grid();
  std::vector<RealField> out;
  out.reserve(c.size());
  for (int i = 0; i < g.ndim(); ++i) {
    // d/dt and the running integral commute: integrate the rate directly.
    RealField j = cumulative_integral(rate, i, a[static_cast<std::size_t>(i)]);
    const double ci = c[static_cast<std::size_t>(i)];
    for (std::size_t p = 0; p < j.size(); ++p) j[p] = -ci * j[p];
    out.push_back(std::move(j));
  }
  return out;
}

void check_coefficients(const Grid& g, const std::vector<double>& c,
                        const std::vector<double>& a, double sum_tol) {
  if (c.size() != static_cast<std::size_t>(g.ndim()) || c.size() != a.size())
    throw InvalidArgument("model: need one weight and reference per axis");
  double sum = 0.0;
  for (double ci : c) sum += ci;
  if (std::abs(sum - 1.0) > sum_tol)
    throw InvalidArgument("model: axis weights sum to " + format_double(sum) +
                          ", not 1");
  for (int i = 0; i < g.ndim(); ++i) {
    const AxisSpec& ax = g.axis(i);
    const double ai = a[static_cast<std::size_t>(i)];
    if (ai < ax.lo || ai > ax.hi)
      throw InvalidArgument("model: reference point outside axis range");
  }
}

}  // namespace

std::vector<RealField> build_currents(const DensityProvider& density,
                                      const std::vector<double>& c,
                                      const std::vector<double>& a, double t,
                                      double rate_dt) {
  check_coefficients(*density.grid(), c, a, 1e-12);
  return currents_from_rate(density.rate(t, rate_dt), c, a);
}

HmmModel build_model(const DensityProvider& density,
                     const std::vector<double>& times,
                     const HmmBuildOptions& opt) {
  if (times.size() < 2) throw InvalidArgument("model: need at least two times");
  const GridPtr& g = density.grid();
  HmmModel model;
  model.c = opt.c;
  model.a = opt.a;
  if (model.c.empty())
    model.c.assign(static_cast<std::size_t>(g->ndim()),
                   1.0 / static_cast<double>(g->ndim()));
  if (model.a.empty())
    for (int i = 0; i < g->ndim(); ++i) model.a.push_back(g->axis(i).lo);
  check_coefficients(*g, model.c, model.a, opt.sum_tol);

  model.times = times;
  model.density_descriptor = density.descriptor();
  model.flow = std::make_shared<FlowSeries>();
  for (double t : times) {
    density.validate(t, opt.mass_tol);
    RealField r = build_r(density, t);
    RealField rho(g, 0.0, t);
    const RealField exact = density.density(t);
    double defect = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      rho[i] = r[i] * r[i];
      defect = std::max(defect, std::abs(rho[i] - exact[i]));
    }
    model.r_sq_defect = std::max(model.r_sq_defect, defect);
    model.flow->add(t, std::move(rho),
                    currents_from_rate(density.rate(t, opt.rate_dt), model.c,
                                       model.a));
    model.r.push_back(std::move(r));
  }
  return model;
}

std::shared_ptr<FlowVelocity> hmm_velocity(const HmmModel& model,
                                           double floor_rel) {
  if (!model.flow) throw InvalidArgument("model: empty flow");
  return std::make_shared<FlowVelocity>(model.flow, floor_rel);
}

CertificationReport certify_equivariance(const HmmModel& model,
                                         std::size_t nparticles,
                                         std::uint64_t seed,
                                         int baseline_resamples,
                                         const AdvanceOptions& adv,
                                         double tv_threshold,
                                         double ratio_threshold) {
  Rng rng(seed);
  const Ensemble start =
      sample_ensemble(model.flow->at(0).rho, nparticles, rng);
  auto vel = hmm_velocity(model);
  const AdvanceResult run = advance_ensemble(
      start, *vel, model.flow->t0(), model.flow->t1(), model.times, adv);
  CertificationReport rep;
  rep.equivariance =
      equivariance_report(*model.flow, run, baseline_resamples, rng);
  rep.tv_threshold = tv_threshold;
  rep.ratio_threshold = ratio_threshold;
  rep.certified = rep.equivariance.worst_tv < tv_threshold &&
                  rep.equivariance.worst_ratio < ratio_threshold;
  return rep;
}

Manifest HmmModel::to_manifest() const {
  Manifest m;
  m.emplace_back("kind", "latent-model");
  m.emplace_back("density", density_descriptor);
  m.emplace_back("grid", flow ? flow->grid_ptr()->describe() : "none");
  std::string cs, as;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) {
      cs += " ";
      as += " ";
    }
    cs += format_double(c[i]);
    as += format_double(a[i]);
  }
  m.emplace_back("axis-weights", cs);
  m.emplace_back("reference-points", as);
  m.emplace_back("times", std::to_string(times.size()));
  m.emplace_back("latent-square-defect", format_double(r_sq_defect));
  return m;
}

Manifest CertificationReport::to_manifest() const {
  Manifest m = equivariance.to_manifest();
  m.emplace_back("tv-threshold", format_double(tv_threshold));
  m.emplace_back("ratio-threshold", format_double(ratio_threshold));
  m.emplace_back("certified", certified ? "yes" : "no");
  return m;
}

}  // namespace pw
