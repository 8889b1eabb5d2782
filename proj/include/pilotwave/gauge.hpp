#pragma once

#include <complex>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pilotwave/bohm.hpp"
#include "pilotwave/rng.hpp"

namespace pw {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// --- Finite-dimensional frame changes ---------------------------------------

// d-level quantum system: unit-norm state, named Hermitian observables and a
// Hermitian Hamiltonian provider H(t).
struct FiniteQuantumSystem {
  double hbar = 1.0;
  CVector state;
  std::vector<std::pair<std::string, CMatrix>> observables;
  std::function<CMatrix(double)> hamiltonian;

  int dim() const { return static_cast<int>(state.size()); }
  // Throws InvalidArgument when norm, Hermiticity or shape invariants fail.
  void validate(double t) const;
};

// Time-dependent unitary family V(t); derivative analytic when supplied,
// centered difference with step `delta` otherwise.
class UnitaryPath {
 public:
  explicit UnitaryPath(std::function<CMatrix(double)> v,
                       std::function<CMatrix(double)> dv = {},
                       double delta = 1e-6);
  // Audited: ||V V^dag - I|| < 1e-10, else InvalidArgument.
  CMatrix at(double t) const;
  CMatrix derivative(double t) const;

 private:
  std::function<CMatrix(double)> v_;
  std::function<CMatrix(double)> dv_;
  double delta_;
};

// The system seen from the rotated frame at one instant: state V psi,
// observables V A V^dag, Hamiltonian V H V^dag - i hbar V dV^dag/dt. The
// Hamiltonian is symmetrized after an audit of its Hermiticity defect.
struct FrameView {
  CVector state;
  std::vector<std::pair<std::string, CMatrix>> observables;
  CMatrix hamiltonian;
  double hermiticity_defect = 0.0;
};

FrameView apply_gauge_hilbert(const FiniteQuantumSystem& sys,
                              const UnitaryPath& path, double t);

// The rotated-frame Hamiltonian as a reusable time provider.
std::function<CMatrix(double)> gauged_hamiltonian(
    const FiniteQuantumSystem& sys, const UnitaryPath& path);

// Max over interior samples of ||centered d psi/dt + (i/hbar) H psi||; the
// discrete gauge-covariant derivative along a sampled evolution.
double covariant_derivative_residual(const std::vector<CVector>& states,
                                     const std::function<CMatrix(double)>& h,
                                     double hbar, double t0, double dt);

// exp(-i h dt / hbar) for Hermitian h via eigendecomposition.
CMatrix hermitian_propagator(const CMatrix& h, double dt, double hbar);

// Fixed-step unitary evolution, H sampled at step midpoints (second order
// for time-dependent H, exact per step for constant H).
CVector evolve_state(const std::function<CMatrix(double)>& h,
                     const CVector& psi0, double t0, double t1, int steps,
                     double hbar);

CMatrix random_hermitian(int d, Rng& rng);
CMatrix random_unitary(int d, Rng& rng);

// --- Configuration-space gauges ---------------------------------------------

// Action-valued scalar on configuration space. Either provider may be
// omitted: value-only gauges get numeric gradients; gradient-only gauges
// (multivalued angles supplied through their single-valued gradient) refuse
// phase application.
struct GaugeFunction {
  std::function<double(const double* q, double t)> value;
  std::function<void(const double* q, double t, double* grad)> gradient;
  // Points excluded (with a radius) from divergence audits, for gauges whose
  // gradient has isolated coordinate singularities.
  std::vector<std::vector<double>> singular_points;
  std::string descriptor;

  bool has_value() const { return static_cast<bool>(value); }
  bool has_gradient() const { return static_cast<bool>(gradient); }
};

RealField gauge_value_field(const GaugeFunction& lam, const GridPtr& g,
                            double t);

// Analytic gradient when present, otherwise the stencil gradient of the
// value field.
std::vector<RealField> gauge_gradient_fields(const GaugeFunction& lam,
                                             const GridPtr& g, double t);

// Max mismatch between the analytic and stencil gradients; callers audit
// smooth single-valued gauges with this (multivalued ones have cuts).
double gauge_gradient_audit(const GaugeFunction& lam, const GridPtr& g,
                            double t);

// psi' = exp(i lambda / hbar) psi. Requires a value provider.
ComplexField apply_gauge_config(const ComplexField& psi,
                                const GaugeFunction& lam, double t,
                                double hbar);

// Delta J_i = rho sum_j mu_ij d_j lambda.
std::vector<RealField> gauge_current_shift(const RealField& rho,
                                           const GaugeFunction& lam, double t);

// How completely the generalized divergence of the induced current shift
// cancels: residual = sup|sum_i d_i dJ_i| / sup(sum_i |d_i dJ_i|), both sups
// over nodes farther than mask_radius from every declared singular point.
// Near zero certifies the continuity-preserving restricted subclass; order
// one is a generic gauge.
struct RestrictionReport {
  double residual = 0.0;
  double scale = 0.0;
  double masked_fraction = 0.0;
  bool restricted(double tol = 1e-3) const { return residual < tol; }
};

RestrictionReport check_restricted(const GaugeFunction& lam,
                                   const RealField& rho, double t,
                                   double mask_radius = 0.0);

// J -> J + rho mu grad(lambda) at every stored time.
FlowSeries gauge_shift_flow(const FlowSeries& flow, const GaugeFunction& lam);

// (-D_y chi, D_x chi) built with the shared stencils, so its discrete
// divergence vanishes to rounding. Two-dimensional grids only.
std::vector<RealField> curl_current(const RealField& chi);

// J -> J + w after auditing that w is divergence-free in the same
// normalized sense as check_restricted; throws CertificationError when the
// audit fails.
FlowSeries add_divergence_free_current(const FlowSeries& flow,
                                       const std::vector<RealField>& w,
                                       double tol = 1e-3);

// Dual guidance run from identical starts: plain currents versus gauged
// currents. Individual trajectories may deviate; single-time statistics may
// not.
struct GaugeCompareReport {
  RestrictionReport restriction;
  bool restriction_ok = false;
  std::vector<double> times;
  std::vector<double> deviation;  // per record time, max over particles
  double max_deviation = 0.0;
  double tv_plain_final = 0.0;    // final histogram vs Born, plain run
  double tv_gauged_final = 0.0;   // same for the gauged run
  double baseline_mean = 0.0;     // fresh Born-sample TV at the final time
  double baseline_max = 0.0;
  std::size_t nparticles = 0;

  Manifest to_manifest() const;
};

GaugeCompareReport gauge_velocity_shift(
    const FlowSeries& flow, const GaugeFunction& lam, const Ensemble& start,
    const std::vector<double>& record_times, const AdvanceOptions& opt,
    int baseline_resamples, Rng& rng, double restriction_tol = 1e-3,
    double mask_radius = 0.0);

}  // namespace pw
