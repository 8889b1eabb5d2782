#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "pilotwave/errors.hpp"
#include "pilotwave/gauge.hpp"
#include "pilotwave/io.hpp"
#include "pilotwave/rng.hpp"

namespace pw::phase {

// The state vector of a d-dimensional quantum system read as a classical
// phase-space point: component c_k = (x_k + i y_k) / sqrt(2 hbar), so the
// Schrodinger flow becomes Hamilton's equations for (x, y) generated by
// H_cl(x, y) = <c|H|c>, with x canonical positions and y canonical momenta.
struct PhasePoint {
  Eigen::VectorXd x;
  Eigen::VectorXd y;

  int dim() const { return static_cast<int>(x.size()); }
  // Equals the squared norm of the reconstructed state.
  double norm_squared(double hbar) const;
  CVector to_state(double hbar) const;
  static PhasePoint from_state(const CVector& c, double hbar);
};

using PhaseFunction = std::function<double(const PhasePoint&, double)>;

struct ClassicalHamiltonian {
  PhaseFunction value;
  // Analytic gradients; when absent, central differences of value with step
  // delta (exact for the quadratic forms used throughout).
  std::function<Eigen::VectorXd(const PhasePoint&, double)> grad_x;
  std::function<Eigen::VectorXd(const PhasePoint&, double)> grad_y;
  double delta = 1e-6;

  Eigen::VectorXd dx(const PhasePoint& z, double t) const;
  Eigen::VectorXd dy(const PhasePoint& z, double t) const;

  // H_cl(x, y) = <c|H|c> with analytic gradients; quadratic and real.
  static ClassicalHamiltonian from_quantum(CMatrix h, double hbar);
};

// {f, g} = sum_k (df/dx_k dg/dy_k - dg/dx_k df/dy_k) by central differences.
double poisson_bracket(const PhaseFunction& f, const PhaseFunction& g,
                       const PhasePoint& at, double t = 0.0,
                       double delta = 1e-5);

// Implicit midpoint step: symplectic, and exactly quadratic-invariant
// preserving for linear flows up to the fixed-point solve tolerance.
PhasePoint hamilton_step(const PhasePoint& z, const ClassicalHamiltonian& h,
                         double t, double dt, double solve_tol = 1e-12);

// Path z(t0), z(t0+dt), ..., z(t1) with dt = (t1-t0)/steps.
std::vector<PhasePoint> hamilton_flow(const PhasePoint& start,
                                      const ClassicalHamiltonian& h, double t0,
                                      double t1, int steps,
                                      double solve_tol = 1e-12);

using PhaseMap = std::function<PhasePoint(const PhasePoint&)>;

// Symplectic-condition audit at random points: the numeric Jacobian M of the
// map must satisfy M^T Omega M = Omega, i.e. preserve all Poisson brackets.
struct CanonicalReport {
  int dim = 0;
  int samples = 0;
  double max_violation = 0.0;
  double tolerance = 0.0;
  bool passed = false;

  Manifest to_manifest() const;
};

CanonicalReport canonical_check(const PhaseMap& map, int dim, int samples,
                                std::uint64_t seed, double delta = 1e-6,
                                double tolerance = 1e-6);

// A unitary u = p + iq acts on (x, y) as the block matrix [[p, -q], [q, p]]:
// orthogonal and symplectic, hence canonical.
Eigen::MatrixXd unitary_real_form(const CMatrix& u);
PhaseMap linear_phase_map(Eigen::MatrixXd m);

// One-dimensional oscillator data in a canonical frame.
struct OscillatorFrame {
  double q = 0.0;
  double p = 0.0;
  double mass = 1.0;
  double spring = 1.0;

  double energy() const { return p * p / (2.0 * mass) + spring * q * q / 2.0; }
};

// Relabels the oscillator as position p, momentum -q, mass 1/k, spring 1/m.
// The energy is invariant and the induced motion is the same trajectory;
// the audit enforces the energy equality. Applying the swap twice gives the
// point-reflected oscillator (-q, -p) with the original constants.
OscillatorFrame ho_frame_swap(const OscillatorFrame& f);

// Implicit midpoint integration of the oscillator in its own frame.
std::vector<OscillatorFrame> oscillator_flow(const OscillatorFrame& start,
                                             double t0, double t1, int steps);

}  // namespace pw::phase
