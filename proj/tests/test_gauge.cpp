#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "pilotwave/gauge.hpp"
#include "pilotwave/ops.hpp"

using namespace pw;
using cplx = std::complex<double>;

namespace {

CVector random_state(int d, Rng& rng) {
  CVector v(d);
  for (int i = 0; i < d; ++i) v[i] = cplx(rng.normal(), rng.normal());
  v.normalize();
  return v;
}

FiniteQuantumSystem random_system(int d, Rng& rng) {
  FiniteQuantumSystem sys;
  sys.state = random_state(d, rng);
  sys.observables.emplace_back("a", random_hermitian(d, rng));
  const CMatrix h = random_hermitian(d, rng);
  sys.hamiltonian = [h](double) { return h; };
  return sys;
}

// Rotating frame generated by a fixed Hermitian b: V(t) = exp(-i b t).
UnitaryPath rotating_path(const CMatrix& b) {
  return UnitaryPath(
      [b](double t) { return hermitian_propagator(b, t, 1.0); });
}

GaugeFunction azimuthal_gauge(double strength) {
  GaugeFunction lam;
  lam.gradient = [strength](const double* q, double, double* g) {
    const double r2 = q[0] * q[0] + q[1] * q[1];
    if (r2 < 1e-24) {
      g[0] = 0.0;
      g[1] = 0.0;
      return;
    }
    g[0] = -strength * q[1] / r2;
    g[1] = strength * q[0] / r2;
  };
  lam.singular_points = {{0.0, 0.0}};
  lam.descriptor = "azimuthal gradient";
  return lam;
}

GridPtr square_grid(double half, int count) {
  return make_grid({AxisSpec{-half, half, count, Boundary::periodic},
                    AxisSpec{-half, half, count, Boundary::periodic}});
}

RealField centered_gaussian(const GridPtr& g, double sigma) {
  return RealField::from_function(g, [sigma](const double* q) {
    const double r2 = q[0] * q[0] + q[1] * q[1];
    return std::exp(-0.5 * r2 / (sigma * sigma)) /
           (2.0 * std::numbers::pi * sigma * sigma);
  });
}

// Ring-shaped density with a circulating current; div J = 0 analytically,
// and the current is smooth at the origin because rho vanishes like r^2.
void add_vortex_snapshot(FlowSeries& flow, const GridPtr& g, double t) {
  auto rho = RealField::from_function(g, [](const double* q) {
    const double r2 = q[0] * q[0] + q[1] * q[1];
    return r2 * std::exp(-0.5 * r2);
  });
  auto jx = RealField::from_function(g, [](const double* q) {
    const double r2 = q[0] * q[0] + q[1] * q[1];
    return -q[1] * std::exp(-0.5 * r2);
  });
  auto jy = RealField::from_function(g, [](const double* q) {
    const double r2 = q[0] * q[0] + q[1] * q[1];
    return q[0] * std::exp(-0.5 * r2);
  });
  flow.add(t, rho, {jx, jy});
}

}  // namespace

// --- Finite-dimensional frame changes ----------------------------------------

TEST_CASE("constant frame drops the derivative term") {
  Rng rng(11);
  auto sys = random_system(4, rng);
  const CMatrix v = random_unitary(4, rng);
  UnitaryPath path([v](double) { return v; });
  auto view = apply_gauge_hilbert(sys, path, 0.3);
  const CMatrix expected = v * sys.hamiltonian(0.3) * v.adjoint();
  CHECK((view.hamiltonian - expected).norm() < 1e-10);
  CHECK(view.hermiticity_defect < 1e-10);
}

TEST_CASE("frame changes preserve every expectation value") {
  Rng rng(12);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + static_cast<int>(rng.below(7));
    auto sys = random_system(d, rng);
    auto path = rotating_path(random_hermitian(d, rng));
    const double t = rng.uniform();
    auto view = apply_gauge_hilbert(sys, path, t);
    for (std::size_t k = 0; k < sys.observables.size(); ++k) {
      const cplx before =
          (sys.state.adjoint() * sys.observables[k].second * sys.state)(0);
      const cplx after =
          (view.state.adjoint() * view.observables[k].second * view.state)(0);
      worst = std::max(worst, std::abs(after - before));
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("the frame rotating with the evolution empties the Hamiltonian") {
  Rng rng(13);
  const CMatrix h = random_hermitian(5, rng);
  FiniteQuantumSystem sys;
  sys.state = random_state(5, rng);
  sys.hamiltonian = [h](double) { return h; };
  // V(t) = exp(+i H t / hbar) undoes the dynamical phase entirely.
  UnitaryPath path([h](double t) { return hermitian_propagator(h, -t, 1.0); });
  auto view = apply_gauge_hilbert(sys, path, 0.7);
  CHECK(view.hamiltonian.norm() < 1e-8);
}

TEST_CASE("evolution in the rotated frame is the rotated evolution") {
  Rng rng(14);
  const CMatrix h = random_hermitian(4, rng);
  FiniteQuantumSystem sys;
  sys.hbar = 1.0;
  sys.state = random_state(4, rng);
  sys.hamiltonian = [h](double) { return h; };
  auto path = rotating_path(0.5 * random_hermitian(4, rng));

  const double T = 1.0;
  const CVector psi_T = hermitian_propagator(h, T, 1.0) * sys.state;
  const CVector expected = path.at(T) * psi_T;

  auto hp = gauged_hamiltonian(sys, path);
  const CVector direct =
      evolve_state(hp, CVector(path.at(0.0) * sys.state), 0.0, T, 4000, 1.0);
  CHECK((direct - expected).norm() < 1e-6);
}

TEST_CASE("covariant derivative residual is second order in the sampling") {
  Rng rng(15);
  const CMatrix h = random_hermitian(3, rng);
  FiniteQuantumSystem sys;
  sys.state = random_state(3, rng);
  sys.hamiltonian = [h](double) { return h; };
  auto path = rotating_path(0.2 * random_hermitian(3, rng));
  auto hp = gauged_hamiltonian(sys, path);

  auto sample = [&](double dt, int n, bool rotated) {
    std::vector<CVector> states;
    for (int k = 0; k <= n; ++k) {
      const double t = k * dt;
      CVector psi = hermitian_propagator(h, t, 1.0) * sys.state;
      if (rotated) psi = path.at(t) * psi;
      states.push_back(psi);
    }
    return states;
  };
  auto plain_h = [&](double) { return h; };

  const double r1 = covariant_derivative_residual(sample(0.02, 10, false),
                                                  plain_h, 1.0, 0.0, 0.02);
  const double r2 = covariant_derivative_residual(sample(0.01, 20, false),
                                                  plain_h, 1.0, 0.0, 0.01);
  CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.15));

  const double g1 = covariant_derivative_residual(sample(0.02, 10, true), hp,
                                                  1.0, 0.0, 0.02);
  const double g2 = covariant_derivative_residual(sample(0.01, 20, true), hp,
                                                  1.0, 0.0, 0.01);
  CHECK(g1 / g2 == doctest::Approx(4.0).epsilon(0.15));
  // Gauge covariance: the rotated frame is no worse than a modest factor.
  CHECK(g1 < 2.0 * r1);
}

TEST_CASE("zero Hamiltonian and constant state have zero residual") {
  std::vector<CVector> states(5, CVector::Ones(3).normalized());
  auto zero_h = [](double) { return CMatrix(CMatrix::Zero(3, 3)); };
  CHECK(covariant_derivative_residual(states, zero_h, 1.0, 0.0, 0.1) < 1e-14);
}

TEST_CASE("frame change rejects broken inputs") {
  Rng rng(16);
  auto sys = random_system(3, rng);
  UnitaryPath stretch([](double) { return CMatrix(2.0 * CMatrix::Identity(3, 3)); });
  CHECK_THROWS_AS(apply_gauge_hilbert(sys, stretch, 0.0), InvalidArgument);

  auto bad = sys;
  bad.state *= 0.5;
  auto ok_path = rotating_path(random_hermitian(3, rng));
  CHECK_THROWS_AS(apply_gauge_hilbert(bad, ok_path, 0.0), InvalidArgument);

  auto skew = sys;
  CMatrix m = CMatrix::Zero(3, 3);
  m(0, 1) = 1.0;
  skew.observables.emplace_back("skew", m);
  CHECK_THROWS_AS(apply_gauge_hilbert(skew, ok_path, 0.0), InvalidArgument);
}

// --- Configuration-space gauges ----------------------------------------------

TEST_CASE("phase application preserves the modulus exactly") {
  auto g = make_grid({AxisSpec{-8.0, 8.0, 128, Boundary::periodic}});
  auto psi = ComplexField::from_function(g, [](const double* q) {
    return std::polar(std::exp(-0.25 * q[0] * q[0]), 0.3 * q[0]);
  });
  GaugeFunction lam;
  lam.value = [](const double* q, double) {
    return 0.7 * std::sin(q[0]) + 0.4 * q[0] * q[0] * 0.05;
  };
  const double hbar = 0.9;
  auto psi2 = apply_gauge_config(psi, lam, 0.0, hbar);
  auto rho_a = born_density(psi);
  auto rho_b = born_density(psi2);
  for (std::size_t i = 0; i < rho_a.size(); ++i) {
    const double scale = std::max(rho_a[i], 1e-300);
    CHECK(std::abs(rho_a[i] - rho_b[i]) / scale < 1e-14);
  }
  // R unchanged, S shifted by lambda modulo the phase period.
  auto pa = polar_decompose(psi, hbar);
  auto pb = polar_decompose(psi2, hbar);
  const double period = 2.0 * std::numbers::pi * hbar;
  std::vector<double> q(1);
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (!pa.valid[i] || !pb.valid[i]) continue;
    CHECK(pa.r[i] == doctest::Approx(pb.r[i]).epsilon(1e-14));
    g->node(i, q.data());
    double d = pb.s[i] - pa.s[i] - lam.value(q.data(), 0.0);
    d -= period * std::round(d / period);
    CHECK(std::abs(d) < 1e-10);
  }
}

TEST_CASE("zero and constant gauges act trivially") {
  auto g = make_grid({AxisSpec{-4.0, 4.0, 64, Boundary::periodic}});
  auto psi = ComplexField::from_function(g, [](const double* q) {
    return cplx(std::exp(-q[0] * q[0]), 0.1);
  });
  GaugeFunction zero;
  zero.value = [](const double*, double) { return 0.0; };
  auto same = apply_gauge_config(psi, zero, 0.0, 1.0);
  for (std::size_t i = 0; i < psi.size(); ++i)
    CHECK(std::abs(same[i] - psi[i]) < 1e-15);

  GaugeFunction c;
  c.value = [](const double*, double) { return 1.3; };
  auto rho = born_density(psi);
  auto shift = gauge_current_shift(rho, c, 0.0);
  for (std::size_t i = 0; i < rho.size(); ++i)
    CHECK(std::abs(shift[0][i]) < 1e-12);
}

TEST_CASE("gradient-only gauges refuse phase application") {
  auto g = square_grid(8.0, 32);
  auto psi = ComplexField::from_function(
      g, [](const double* q) { return cplx(std::exp(-q[0] * q[0] - q[1] * q[1]), 0.0); });
  auto lam = azimuthal_gauge(1.0);
  CHECK_THROWS_AS(apply_gauge_config(psi, lam, 0.0, 1.0), InvalidArgument);
}

TEST_CASE("linear gauge boosts the current by rho p over m") {
  const double mass = 2.0, p = 0.7;
  auto g = make_grid({AxisSpec{-8.0, 8.0, 128, Boundary::periodic}},
                     Metric::from_masses({mass}));
  auto rho = RealField::from_function(
      g, [](const double* q) { return std::exp(-0.5 * q[0] * q[0]); });
  GaugeFunction lam;
  lam.value = [p](const double* q, double) { return p * q[0]; };
  lam.gradient = [p](const double*, double, double* grad) { grad[0] = p; };
  auto dj = gauge_current_shift(rho, lam, 0.0);
  for (std::size_t i = 0; i < rho.size(); ++i)
    CHECK(dj[0][i] == doctest::Approx(rho[i] * p / mass).epsilon(1e-12));
}

TEST_CASE("current shift matches the direct difference of currents") {
  auto g = make_grid({AxisSpec{-8.0, 8.0, 512, Boundary::periodic}});
  const double hbar = 1.0;
  auto psi = ComplexField::from_function(g, [](const double* q) {
    return std::polar(std::exp(-0.2 * q[0] * q[0]) + 0.02, 0.3 * std::sin(0.4 * q[0]));
  });
  GaugeFunction lam;
  const double L = 16.0;
  lam.value = [L](const double* q, double) {
    return 0.5 * std::sin(2.0 * std::numbers::pi * q[0] / L);
  };
  lam.gradient = [L](const double* q, double, double* grad) {
    grad[0] = 0.5 * (2.0 * std::numbers::pi / L) *
              std::cos(2.0 * std::numbers::pi * q[0] / L);
  };
  CHECK(gauge_gradient_audit(lam, g, 0.0) < 1e-4);

  auto rho = born_density(psi);
  auto predicted = gauge_current_shift(rho, lam, 0.0);
  auto j_before = current_densities(psi, hbar);
  auto j_after = current_densities(apply_gauge_config(psi, lam, 0.0, hbar), hbar);
  const double h = g->spacing(0);
  double worst = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i)
    worst = std::max(
        worst, std::abs(j_after[0][i] - j_before[0][i] - predicted[0][i]));
  // Both sides agree up to the h^2 stencil error; allow 10x headroom.
  CHECK(worst < 10.0 * h * h);
}

TEST_CASE("azimuthal gauge on a centered gaussian is restricted") {
  auto lam = azimuthal_gauge(1.0);
  const double mask = 1.0;
  auto coarse = check_restricted(lam, centered_gaussian(square_grid(8.0, 128), 1.0),
                                 0.0, mask);
  auto fine = check_restricted(lam, centered_gaussian(square_grid(8.0, 384), 1.0),
                               0.0, mask);
  CHECK(coarse.masked_fraction > 0.0);
  CHECK(coarse.residual > 0.0);
  // Second-order trend (grid 3x finer, so roughly 9x) and a small absolute
  // value once converged.
  CHECK(coarse.residual / fine.residual > 5.0);
  CHECK(fine.residual < 5e-3);
}

TEST_CASE("a generic quadratic gauge fails the restriction check") {
  GaugeFunction lam;
  lam.value = [](const double* q, double) { return q[0] * q[0]; };
  lam.gradient = [](const double* q, double, double* g) {
    g[0] = 2.0 * q[0];
    g[1] = 0.0;
  };
  auto rep = check_restricted(lam, centered_gaussian(square_grid(8.0, 96), 1.0),
                              0.0, 0.0);
  CHECK(rep.residual > 0.1);
}

TEST_CASE("discrete curl fields pass the divergence audit") {
  auto g = square_grid(8.0, 96);
  auto chi = RealField::from_function(g, [](const double* q) {
    return 0.2 * std::exp(-(q[0] * q[0] + q[1] * q[1]));
  });
  auto w = curl_current(chi);
  FlowSeries flow;
  add_vortex_snapshot(flow, g, 0.0);
  add_vortex_snapshot(flow, g, 0.5);
  add_vortex_snapshot(flow, g, 1.0);
  auto modified = add_divergence_free_current(flow, w, 1e-10);
  CHECK(modified.count() == 3);
  for (std::size_t i = 0; i < w[0].size(); ++i)
    CHECK(modified.at(0).current[0][i] ==
          doctest::Approx(flow.at(0).current[0][i] + w[0][i]).epsilon(1e-12));

  // A gradient field has order-one divergence and must be rejected.
  std::vector<RealField> grad_w{gradient(chi, 0), gradient(chi, 1)};
  CHECK_THROWS_AS(add_divergence_free_current(flow, grad_w, 1e-3),
                  CertificationError);
}

TEST_CASE("restricted gauge leaves the continuity residual in place") {
  auto g = square_grid(8.0, 128);
  FlowSeries flow;
  add_vortex_snapshot(flow, g, 0.0);
  add_vortex_snapshot(flow, g, 0.25);
  add_vortex_snapshot(flow, g, 0.5);
  auto lam = azimuthal_gauge(0.5);
  auto gauged = gauge_shift_flow(flow, lam);
  const double before = continuity_residual(flow).max_residual;
  const double after = continuity_residual(gauged).max_residual;
  CHECK(before > 0.0);
  CHECK(after < 2.0 * before);
}

TEST_CASE("gauged guidance moves trajectories but not the statistics") {
  auto g = square_grid(8.0, 96);
  FlowSeries flow;
  const auto rho = centered_gaussian(g, 1.0);
  for (double t : {0.0, 0.5, 1.0})
    flow.add(t, rho, {RealField(g, 0.0, t), RealField(g, 0.0, t)});

  auto lam = azimuthal_gauge(1.0);
  Rng rng(31);
  auto start = sample_ensemble(rho, 800, rng);
  AdvanceOptions opt;
  opt.dt = 0.01;
  Rng baseline_rng(32);
  auto rep = gauge_velocity_shift(flow, lam, start, {0.0, 0.5, 1.0}, opt, 20,
                                  baseline_rng, 1e-3, 1.0);
  // The plain run is frozen, the gauged one circulates: trajectories differ.
  CHECK(rep.max_deviation > 0.1);
  CHECK(rep.deviation.front() == 0.0);
  // Both runs remain Born samples of the same static density.
  CHECK(rep.tv_plain_final < 1.5 * rep.baseline_mean);
  CHECK(rep.tv_gauged_final < 2.0 * rep.baseline_mean);
  CHECK(rep.nparticles == 800);
  auto manifest = rep.to_manifest();
  CHECK(manifest.size() > 5);
}
