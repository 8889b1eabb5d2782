#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pilotwave/hmm.hpp"
#include "pilotwave/ops.hpp"

using namespace pw;

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double normal_pdf(double x, double mean, double sigma) {
  const double d = (x - mean) / sigma;
  return kInvSqrt2Pi / sigma * std::exp(-0.5 * d * d);
}

// rho(q, t) = N(q; x0 + v t, sigma), with its exact time derivative.
DensityProvider moving_gaussian(GridPtr g, double x0, double v, double sigma) {
  auto rho = [x0, v, sigma](const double* q, double t) {
    return normal_pdf(q[0], x0 + v * t, sigma);
  };
  auto rate = [x0, v, sigma](const double* q, double t) {
    const double c = x0 + v * t;
    return v * (q[0] - c) / (sigma * sigma) * normal_pdf(q[0], c, sigma);
  };
  return DensityProvider::analytic(std::move(g), rho, rate, "moving-gaussian");
}

// Product gaussian with a mass-preserving sloshing correlation mode; every
// axis line integral is conserved, so single-axis current constructions are
// consistent on the box.
DensityProvider sloshing_gaussian(GridPtr g, double sigma, double alpha,
                                  double omega) {
  auto shape = [sigma](const double* q) {
    return normal_pdf(q[0], 0.0, sigma) * normal_pdf(q[1], 0.0, sigma);
  };
  auto mode = [sigma](const double* q) {
    return std::tanh(q[0] / sigma) * std::tanh(q[1] / sigma);
  };
  auto rho = [shape, mode, alpha, omega](const double* q, double t) {
    return shape(q) * (1.0 + alpha * std::sin(omega * t) * mode(q));
  };
  auto rate = [shape, mode, alpha, omega](const double* q, double t) {
    return shape(q) * alpha * omega * std::cos(omega * t) * mode(q);
  };
  return DensityProvider::analytic(std::move(g), rho, rate, "sloshing");
}

std::vector<double> ladder(double t0, double t1, int n) {
  std::vector<double> ts;
  for (int k = 0; k <= n; ++k)
    ts.push_back(t0 + (t1 - t0) * k / static_cast<double>(n));
  return ts;
}

}  // namespace

TEST_CASE("latent field is the square root of the density") {
  auto g = make_grid({AxisSpec{-16.0, 16.0, 512, Boundary::periodic}});
  auto density = moving_gaussian(g, -4.0, 1.0, 1.0);
  auto r = build_r(density, 0.3);
  auto rho = density.density(0.3);
  double defect = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    defect = std::max(defect, std::abs(r[i] * r[i] - rho[i]));
  CHECK(defect < 1e-12);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(r[i] >= 0.0);
}

TEST_CASE("negative densities are rejected") {
  auto g = make_grid({AxisSpec{-1.0, 1.0, 32, Boundary::periodic}});
  auto density = DensityProvider::analytic(
      g, [](const double* q, double) { return q[0]; });
  CHECK_THROWS_AS(build_r(density, 0.0), InvalidArgument);
  CHECK_THROWS_AS(density.validate(0.0), InvalidArgument);
}

TEST_CASE("unnormalized densities fail validation") {
  auto g = make_grid({AxisSpec{-8.0, 8.0, 128, Boundary::periodic}});
  auto density = DensityProvider::analytic(
      g, [](const double* q, double) { return 2.0 * normal_pdf(q[0], 0.0, 1.0); });
  CHECK_THROWS_AS(density.validate(0.0), InvalidArgument);
}

TEST_CASE("static density builds zero currents and frozen particles") {
  auto g = make_grid({AxisSpec{-8.0, 8.0, 256, Boundary::periodic}});
  auto density = DensityProvider::analytic(
      g, [](const double* q, double) { return normal_pdf(q[0], 0.0, 1.2); },
      [](const double*, double) { return 0.0; }, "static");
  auto model = build_model(density, ladder(0.0, 1.0, 4));
  for (std::size_t k = 0; k < model.flow->count(); ++k)
    for (std::size_t i = 0; i < model.flow->at(k).current[0].size(); ++i)
      CHECK(std::abs(model.flow->at(k).current[0][i]) < 1e-15);
  auto vel = hmm_velocity(model);
  Ensemble e;
  e.ndim = 1;
  e.count = 3;
  e.q = {-1.0, 0.0, 1.5};
  auto res = advance_ensemble(e, *vel, 0.0, 1.0, ladder(0.0, 1.0, 4), {});
  for (std::size_t k = 0; k < res.times.size(); ++k) {
    auto pos = res.at_time(k);
    CHECK(pos[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(pos[2] == doctest::Approx(1.5).epsilon(1e-12));
  }
}

TEST_CASE("translating gaussian recovers its drift velocity to 1e-6") {
  auto g = make_grid({AxisSpec{-16.0, 16.0, 16384, Boundary::periodic}});
  const double v = 1.0;
  auto density = moving_gaussian(g, -4.0, v, 1.0);
  auto model = build_model(density, {0.0, 0.5, 1.0});
  auto vel = hmm_velocity(model);
  // Near the packet center at a stored time and at an interpolated time.
  for (double t : {0.0, 0.5, 0.25}) {
    for (double off : {-0.5, 0.0, 0.37}) {
      const double q = -4.0 + v * t + off;
      double out = 0.0;
      vel->velocity(&q, t, &out);
      CHECK(std::abs(out - v) < 1e-6);
    }
  }
}

TEST_CASE("breathing gaussian recovers the dilation velocity field") {
  auto g = make_grid({AxisSpec{-16.0, 16.0, 4096, Boundary::periodic}});
  const double s0 = 1.0, amp = 0.25, om = std::numbers::pi;
  auto sigma = [=](double t) { return s0 * (1.0 + amp * std::sin(om * t)); };
  auto sigma_dot = [=](double t) { return s0 * amp * om * std::cos(om * t); };
  auto density = DensityProvider::analytic(
      g,
      [=](const double* q, double t) { return normal_pdf(q[0], 0.0, sigma(t)); },
      [=](const double* q, double t) {
        const double s = sigma(t), x = q[0];
        return normal_pdf(x, 0.0, s) * (x * x / (s * s) - 1.0) *
               sigma_dot(t) / s;
      },
      "breathing");
  auto model = build_model(density, ladder(0.0, 1.0, 10));
  auto vel = hmm_velocity(model);
  for (double q : {-1.3, 0.4, 0.9}) {
    double out = 0.0;
    vel->velocity(&q, 0.0, &out);
    // Exact transport velocity of a breathing gaussian.
    CHECK(out == doctest::Approx(sigma_dot(0.0) / sigma(0.0) * q).epsilon(1e-4));
  }
}

TEST_CASE("tabulated and analytic densities build matching currents") {
  auto g = make_grid({AxisSpec{-16.0, 16.0, 1024, Boundary::periodic}});
  auto density = moving_gaussian(g, -4.0, 1.0, 1.0);
  const auto times = ladder(0.0, 0.5, 10);  // stored spacing 0.05
  std::vector<RealField> snaps;
  for (double t : times) snaps.push_back(density.density(t));
  auto tab = DensityProvider::tabulated(snaps, times);

  const double t = times[5];
  auto ja = build_currents(density, {1.0}, {-16.0}, t, 1e-4);
  auto jt = build_currents(tab, {1.0}, {-16.0}, t, 0.0);
  // The tabulated path differs only through its centered time step.
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < ja[0].size(); ++i) {
    worst = std::max(worst, std::abs(ja[0][i] - jt[0][i]));
    scale = std::max(scale, std::abs(ja[0][i]));
  }
  CHECK(worst < 2e-3 * scale);
  CHECK_THROWS_AS(tab.density(0.513), InvalidArgument);
}

TEST_CASE("continuity residual of a built model shrinks at second order") {
  auto residual_at = [](int count, int steps) {
    auto g = make_grid({AxisSpec{-8.0, 8.0, count, Boundary::periodic},
                        AxisSpec{-8.0, 8.0, count, Boundary::periodic}});
    auto density = sloshing_gaussian(g, 1.5, 0.2, std::numbers::pi);
    auto model = build_model(density, ladder(0.0, 1.0, steps));
    return continuity_residual(*model.flow).max_residual;
  };
  const double coarse = residual_at(48, 10);
  const double fine = residual_at(96, 20);
  CHECK(coarse > 0.0);
  CHECK(coarse / fine > 3.0);
}

TEST_CASE("coefficient and reference validation") {
  auto g = make_grid({AxisSpec{-8.0, 8.0, 64, Boundary::periodic},
                      AxisSpec{-8.0, 8.0, 64, Boundary::periodic}});
  auto density = sloshing_gaussian(g, 1.5, 0.2, 1.0);
  HmmBuildOptions bad;
  bad.c = {1.0, 1.0};  // sums to 2
  CHECK_THROWS_AS(build_model(density, {0.0, 0.5}, bad), InvalidArgument);
  HmmBuildOptions oob;
  oob.c = {0.5, 0.5};
  oob.a = {-20.0, 0.0};
  CHECK_THROWS_AS(build_model(density, {0.0, 0.5}, oob), InvalidArgument);
}

TEST_CASE("shifting a reference point leaves the physics unchanged") {
  auto g = make_grid({AxisSpec{-16.0, 16.0, 1024, Boundary::periodic}});
  auto density = moving_gaussian(g, -4.0, 1.0, 1.0);
  HmmBuildOptions left, mid;
  left.a = {-16.0};
  mid.a = {2.0};
  auto ml = build_model(density, ladder(0.0, 0.5, 5), left);
  auto mm = build_model(density, ladder(0.0, 0.5, 5), mid);
  // The two currents differ by a constant along the axis...
  const auto& jl = ml.flow->at(2).current[0];
  const auto& jm = mm.flow->at(2).current[0];
  const double d0 = jl[0] - jm[0];
  double vary = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < jl.size(); ++i) {
    vary = std::max(vary, std::abs(jl[i] - jm[i] - d0));
    scale = std::max(scale, std::abs(jl[i]));
  }
  CHECK(vary < 1e-12 * std::max(scale, 1.0));
  // ...so the continuity residual is identical to rounding.
  const double rl = continuity_residual(*ml.flow).max_residual;
  const double rm = continuity_residual(*mm.flow).max_residual;
  CHECK(rl == doctest::Approx(rm).epsilon(1e-9));
}

TEST_CASE("moving gaussian certifies as equivariant") {
  auto g = make_grid({AxisSpec{-16.0, 16.0, 256, Boundary::periodic}});
  auto density = moving_gaussian(g, -4.0, 1.0, 1.0);
  auto model = build_model(density, ladder(0.0, 1.0, 10));
  AdvanceOptions adv;
  adv.dt = 0.02;
  auto rep = certify_equivariance(model, 4000, 99, 15, adv);
  CHECK(rep.certified);
  CHECK(rep.equivariance.worst_tv < 0.05);
  CHECK(rep.equivariance.worst_ratio < 3.0);
}

TEST_CASE("breathing gaussian certifies as equivariant") {
  auto g = make_grid({AxisSpec{-16.0, 16.0, 256, Boundary::periodic}});
  const double s0 = 1.0, amp = 0.3, om = 2.0 * std::numbers::pi;
  auto density = DensityProvider::analytic(
      g,
      [=](const double* q, double t) {
        return normal_pdf(q[0], 0.0, s0 * (1.0 + amp * std::sin(om * t)));
      },
      {}, "breathing");
  auto model = build_model(density, ladder(0.0, 1.0, 10));
  AdvanceOptions adv;
  adv.dt = 0.02;
  auto rep = certify_equivariance(model, 4000, 7, 15, adv);
  CHECK(rep.certified);
}

TEST_CASE("doubled currents are rejected by certification") {
  auto g = make_grid({AxisSpec{-16.0, 16.0, 256, Boundary::periodic}});
  auto density = moving_gaussian(g, -4.0, 1.0, 1.0);
  auto model = build_model(density, ladder(0.0, 1.0, 10));
  for (auto& snap : model.flow->snapshots())
    for (auto& j : snap.current)
      for (std::size_t i = 0; i < j.size(); ++i) j[i] *= 2.0;
  AdvanceOptions adv;
  adv.dt = 0.02;
  auto rep = certify_equivariance(model, 4000, 99, 15, adv);
  CHECK_FALSE(rep.certified);
  CHECK(rep.equivariance.worst_ratio > 3.0);
}

TEST_CASE("axis weight choice moves trajectories, not statistics") {
  auto g = make_grid({AxisSpec{-8.0, 8.0, 96, Boundary::periodic},
                      AxisSpec{-8.0, 8.0, 96, Boundary::periodic}});
  auto density = sloshing_gaussian(g, 1.5, 0.25, std::numbers::pi);
  const auto times = ladder(0.0, 1.0, 10);
  HmmBuildOptions cx, cy;
  cx.c = {1.0, 0.0};
  cy.c = {0.0, 1.0};
  auto mx = build_model(density, times, cx);
  auto my = build_model(density, times, cy);

  Rng rng(404);
  auto start = sample_ensemble(mx.flow->at(0).rho, 1500, rng);
  AdvanceOptions adv;
  adv.dt = 0.02;
  auto rx = advance_ensemble(start, *hmm_velocity(mx), 0.0, 1.0, times, adv);
  auto ry = advance_ensemble(start, *hmm_velocity(my), 0.0, 1.0, times, adv);

  // Same start, different currents: the paths separate. The mode reverses at
  // t = 0.5 and the flow retraces itself, so compare at peak displacement.
  double dev = 0.0;
  const auto px = rx.at_time(times.size() / 2);
  const auto py = ry.at_time(times.size() / 2);
  for (std::size_t i = 0; i < px.size(); ++i)
    dev = std::max(dev, std::abs(px[i] - py[i]));
  CHECK(dev > 0.05);

  // ...while both stay Born-distributed at the final time.
  Rng bx(11), by(11);
  auto ex = equivariance_report(*mx.flow, rx, 15, bx);
  auto ey = equivariance_report(*my.flow, ry, 15, by);
  CHECK(ex.worst_ratio < 2.0);
  CHECK(ey.worst_ratio < 2.0);
}

TEST_CASE("model manifest records the construction") {
  auto g = make_grid({AxisSpec{-16.0, 16.0, 128, Boundary::periodic}});
  auto density = moving_gaussian(g, -4.0, 1.0, 1.0);
  auto model = build_model(density, {0.0, 0.5, 1.0});
  auto m = model.to_manifest();
  bool saw_weights = false;
  for (const auto& [k, v] : m)
    if (k == "axis-weights") saw_weights = (v == "1");
  CHECK(saw_weights);
  CHECK(model.r_sq_defect < 1e-12);
}
