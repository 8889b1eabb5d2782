#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "pilotwave/phase_space.hpp"

using namespace pw;
using namespace pw::phase;

namespace {

PhasePoint random_point(int d, Rng& rng) {
  PhasePoint z;
  z.x.resize(d);
  z.y.resize(d);
  for (int k = 0; k < d; ++k) z.x[k] = rng.normal();
  for (int k = 0; k < d; ++k) z.y[k] = rng.normal();
  return z;
}

PhaseFunction coord_x(int k) {
  return [k](const PhasePoint& z, double) { return z.x[k]; };
}

PhaseFunction coord_y(int k) {
  return [k](const PhasePoint& z, double) { return z.y[k]; };
}

}  // namespace

TEST_CASE("state and chart are inverse maps with the right norm") {
  Rng rng(5);
  const double hbar = 0.7;
  CVector c(3);
  for (int k = 0; k < 3; ++k) c[k] = std::complex<double>(rng.normal(), rng.normal());
  auto z = PhasePoint::from_state(c, hbar);
  CHECK((z.to_state(hbar) - c).norm() < 1e-14);
  CHECK(z.norm_squared(hbar) == doctest::Approx(c.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("coordinate brackets are canonical") {
  Rng rng(11);
  auto z = random_point(3, rng);
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 3; ++j) {
      const double xy = poisson_bracket(coord_x(k), coord_y(j), z);
      CHECK(xy == doctest::Approx(k == j ? 1.0 : 0.0).epsilon(1e-10));
      CHECK(std::abs(poisson_bracket(coord_x(k), coord_x(j), z)) < 1e-10);
      CHECK(std::abs(poisson_bracket(coord_y(k), coord_y(j), z)) < 1e-10);
    }
}

TEST_CASE("the bracket of a function with itself vanishes") {
  Rng rng(17);
  auto h = random_hermitian(4, rng);
  auto f = ClassicalHamiltonian::from_quantum(h, 1.0);
  auto z = random_point(4, rng);
  CHECK(std::abs(poisson_bracket(f.value, f.value, z)) < 1e-9);
}

TEST_CASE("zero hamiltonian leaves the point fixed") {
  ClassicalHamiltonian h;
  h.value = [](const PhasePoint&, double) { return 0.0; };
  Rng rng(3);
  auto z = random_point(2, rng);
  auto next = hamilton_step(z, h, 0.0, 0.1);
  CHECK((next.x - z.x).norm() < 1e-14);
  CHECK((next.y - z.y).norm() < 1e-14);
}

TEST_CASE("one-dimensional oscillator flow is a rigid rotation") {
  const double omega = 1.3;
  ClassicalHamiltonian h;
  h.value = [omega](const PhasePoint& z, double) {
    return 0.5 * omega * (z.x[0] * z.x[0] + z.y[0] * z.y[0]);
  };
  PhasePoint z;
  z.x = Eigen::VectorXd::Constant(1, 0.8);
  z.y = Eigen::VectorXd::Constant(1, -0.4);
  const double r0 = std::hypot(z.x[0], z.y[0]);

  // One small step matches the rotation matrix through third order.
  const double dt = 1e-3;
  auto one = hamilton_step(z, h, 0.0, dt);
  const double c = std::cos(omega * dt), s = std::sin(omega * dt);
  CHECK(one.x[0] == doctest::Approx(c * z.x[0] + s * z.y[0]).epsilon(1e-9));
  CHECK(one.y[0] == doctest::Approx(-s * z.x[0] + c * z.y[0]).epsilon(1e-9));
  CHECK(std::abs(std::hypot(one.x[0], one.y[0]) - r0) < 1e-12);

  // Radius errors stay at the solve tolerance over a long run.
  auto path = hamilton_flow(z, h, 0.0, 10.0, 1000);
  double drift = 0.0;
  for (const auto& p : path)
    drift = std::max(drift, std::abs(std::hypot(p.x[0], p.y[0]) - r0));
  CHECK(drift < 1e-10);
  // And the accumulated angle matches the exact rotation.
  const double ct = std::cos(omega * 10.0), st = std::sin(omega * 10.0);
  CHECK(path.back().x[0] ==
        doctest::Approx(ct * z.x[0] + st * z.y[0]).epsilon(1e-4));
}

TEST_CASE("hamiltonian flow reproduces the unitary evolution") {
  Rng rng(23);
  for (int d : {2, 4, 8}) {
    const double hbar = d == 4 ? 0.5 : 1.0;
    auto h = random_hermitian(d, rng);
    CVector c0(d);
    for (int k = 0; k < d; ++k)
      c0[k] = std::complex<double>(rng.normal(), rng.normal());
    c0.normalize();

    auto cl = ClassicalHamiltonian::from_quantum(h, hbar);
    auto z0 = PhasePoint::from_state(c0, hbar);
    auto path = hamilton_flow(z0, cl, 0.0, 1.0, 5000);
    const CVector exact = hermitian_propagator(h, 1.0, hbar) * c0;
    CHECK((path.back().to_state(hbar) - exact).norm() < 1e-6);

    // The squared norm is a conserved quadratic invariant of the flow.
    double drift = 0.0;
    for (const auto& p : path)
      drift = std::max(drift, std::abs(p.norm_squared(hbar) - 1.0));
    CHECK(drift < 1e-9);
  }
}

TEST_CASE("difference-quotient gradients match the analytic ones") {
  Rng rng(29);
  auto h = random_hermitian(5, rng);
  auto analytic = ClassicalHamiltonian::from_quantum(h, 1.0);
  ClassicalHamiltonian numeric;
  numeric.value = analytic.value;
  auto z = random_point(5, rng);
  CHECK((numeric.dx(z, 0.0) - analytic.dx(z, 0.0)).norm() < 1e-8);
  CHECK((numeric.dy(z, 0.0) - analytic.dy(z, 0.0)).norm() < 1e-8);
}

TEST_CASE("divergent implicit solves are reported") {
  ClassicalHamiltonian h;
  h.value = [](const PhasePoint& z, double) {
    return 0.5 * (z.x[0] * z.x[0] + z.y[0] * z.y[0]);
  };
  PhasePoint z;
  z.x = Eigen::VectorXd::Constant(1, 1.0);
  z.y = Eigen::VectorXd::Constant(1, 0.0);
  CHECK_THROWS_AS(hamilton_step(z, h, 0.0, 10.0), NumericError);
}

TEST_CASE("identity map is canonical") {
  auto rep = canonical_check([](const PhasePoint& z) { return z; }, 3, 10, 1);
  CHECK(rep.passed);
  CHECK(rep.max_violation < 1e-9);
}

TEST_CASE("unitaries act canonically on the chart") {
  Rng rng(31);
  for (int d : {2, 3, 5}) {
    auto u = random_unitary(d, rng);
    auto rep = canonical_check(linear_phase_map(unitary_real_form(u)), d, 8,
                               42 + static_cast<std::uint64_t>(d));
    CHECK(rep.passed);
    CHECK(rep.max_violation < 1e-8);
  }
}

TEST_CASE("a bare dilation is not canonical") {
  auto rep = canonical_check(
      [](const PhasePoint& z) {
        PhasePoint s = z;
        s.x *= 2.0;
        return s;
      },
      2, 6, 7);
  CHECK_FALSE(rep.passed);
  CHECK(rep.max_violation == doctest::Approx(1.0).epsilon(1e-6));
  auto m = rep.to_manifest();
  bool saw = false;
  for (const auto& [k, v] : m)
    if (k == "canonical") saw = (v == "no");
  CHECK(saw);
}

TEST_CASE("a nonlinear shear is canonical") {
  auto rep = canonical_check(
      [](const PhasePoint& z) {
        PhasePoint s = z;
        s.y[0] += std::sin(z.x[0]);
        return s;
      },
      1, 12, 9, 1e-5, 1e-6);
  CHECK(rep.passed);
}

TEST_CASE("frame swap relabels the oscillator and keeps the energy") {
  OscillatorFrame f{0.7, -0.3, 1.0, 1.0};
  auto g = ho_frame_swap(f);
  CHECK(g.q == -0.3);
  CHECK(g.p == -0.7);
  CHECK(g.mass == 1.0);
  CHECK(g.spring == 1.0);
  CHECK(g.energy() == doctest::Approx(f.energy()).epsilon(1e-14));

  OscillatorFrame f2{0.2, 1.1, 2.0, 8.0};
  auto g2 = ho_frame_swap(f2);
  CHECK(g2.mass == doctest::Approx(0.125));
  CHECK(g2.spring == doctest::Approx(0.5));
  CHECK(g2.energy() == doctest::Approx(f2.energy()).epsilon(1e-14));

  // Twice the swap is the point reflection with the original constants.
  auto twice = ho_frame_swap(g2);
  CHECK(twice.q == doctest::Approx(-f2.q));
  CHECK(twice.p == doctest::Approx(-f2.p));
  CHECK(twice.mass == doctest::Approx(f2.mass));
  CHECK(twice.spring == doctest::Approx(f2.spring));
  CHECK(twice.energy() == doctest::Approx(f2.energy()).epsilon(1e-14));

  CHECK_THROWS_AS(ho_frame_swap(OscillatorFrame{0, 0, -1.0, 1.0}),
                  InvalidArgument);
  CHECK_THROWS_AS(ho_frame_swap(OscillatorFrame{0, 0, 1.0, 0.0}),
                  InvalidArgument);
}

TEST_CASE("both oscillator frames trace the same motion") {
  OscillatorFrame start{0.7, -0.3, 2.0, 8.0};
  auto swapped = ho_frame_swap(start);
  auto base_path = oscillator_flow(start, 0.0, 1.0, 2000);
  auto swap_path = oscillator_flow(swapped, 0.0, 1.0, 2000);
  REQUIRE(base_path.size() == swap_path.size());
  // The relabeled flow is the image of the original flow, step by step.
  for (std::size_t k = 0; k < base_path.size(); ++k) {
    CHECK(swap_path[k].q == doctest::Approx(base_path[k].p).epsilon(1e-9));
    CHECK(swap_path[k].p == doctest::Approx(-base_path[k].q).epsilon(1e-9));
  }
  // Energy conserved in both frames.
  CHECK(base_path.back().energy() ==
        doctest::Approx(start.energy()).epsilon(1e-10));
  CHECK(swap_path.back().energy() ==
        doctest::Approx(swapped.energy()).epsilon(1e-10));
}