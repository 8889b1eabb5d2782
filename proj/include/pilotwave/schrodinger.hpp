#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "pilotwave/field.hpp"

namespace pw {

// Scalar potential V(q, t). A null function means free evolution. Set
// time_dependent when V actually varies so steppers can cache the field.
struct HamiltonianSpec {
  std::function<double(const double* q, double t)> potential;
  bool time_dependent = false;
  double hbar = 1.0;
};

// H psi = -(hbar^2/2) sum_ij d_i(mu_ij d_j psi) + V psi. The kinetic term is
// discretized in conservative flux form for the diagonal entries (half-point
// averaged mu) and nested central differences for the off-diagonal ones;
// both choices keep the matrix exactly symmetric, dirichlet axes see zero
// ghost values. `t` selects the potential sample.
ComplexField apply_hamiltonian(const ComplexField& psi,
                               const HamiltonianSpec& spec, double t);

double l2_norm(const ComplexField& psi);
void normalize(ComplexField& psi);
RealField born_density(const ComplexField& psi);

enum class SolverKind { auto_select, split_fourier, crank_nicolson };
const char* solver_name(SolverKind k);

// auto_select: split-step Fourier when every axis is periodic and the metric
// is constant diagonal, Crank-Nicolson otherwise.
SolverKind choose_solver(const Grid& g, SolverKind requested);

class StepperImpl;

// Advances psi by a fixed dt; both schemes are second order in dt and sample
// a time-dependent potential at the step midpoint.
class Stepper {
 public:
  Stepper(GridPtr grid, HamiltonianSpec spec, double dt, SolverKind kind,
          double solve_tol = 1e-10);
  ~Stepper();
  Stepper(Stepper&&) noexcept;
  Stepper& operator=(Stepper&&) noexcept;

  void step(ComplexField& psi, double t);
  SolverKind kind() const;

 private:
  std::unique_ptr<StepperImpl> impl_;
};

struct EvolveOptions {
  double t0 = 0.0;
  double t1 = 1.0;
  double dt = 1e-3;
  int store_every = 1;          // steps between stored snapshots
  SolverKind solver = SolverKind::auto_select;
  double norm_tol = 1e-6;       // relative L2 drift allowed at snapshots
  double solve_tol = 1e-10;
};

// Uniformly spaced snapshots of one evolution, including the initial state.
struct SnapshotSeries {
  std::vector<double> times;
  std::vector<ComplexField> states;
  double hbar = 1.0;
  double dt = 0.0;
  int store_every = 1;
  std::string solver_id;

  double store_dt() const { return dt * store_every; }
  std::size_t count() const { return times.size(); }
};

SnapshotSeries evolve(const ComplexField& psi0, const HamiltonianSpec& spec,
                      const EvolveOptions& opt);

// Streaming variant: sink sees every stored snapshot (including t0) and the
// series metadata is returned without the states.
SnapshotSeries evolve_stream(
    const ComplexField& psi0, const HamiltonianSpec& spec,
    const EvolveOptions& opt,
    const std::function<void(double, const ComplexField&)>& sink);

// --- Initial state presets -------------------------------------------------

// Normalized product gaussian exp(-(q-c)^2/(4 sigma^2) + i p.(q-c)/hbar).
ComplexField gaussian_packet(GridPtr grid, double hbar,
                             const std::vector<double>& center,
                             const std::vector<double>& sigma,
                             const std::vector<double>& momentum);

// a + w*b, renormalized.
ComplexField superpose(const ComplexField& a, const ComplexField& b,
                       std::complex<double> w = 1.0);

// Plane wave with momentum snapped to the periodic lattice; *snapped reports
// the momentum actually used.
ComplexField plane_wave(GridPtr grid, double hbar,
                        const std::vector<double>& momentum,
                        std::vector<double>* snapped = nullptr);

// Ground state of sum_a (p_a^2/2m_a + k_a q_a^2/2) centered at `center`;
// masses are taken from the grid metric (mu_a = 1/m_a).
ComplexField harmonic_ground(GridPtr grid, double hbar,
                             const std::vector<double>& center,
                             const std::vector<double>& spring);

// Potential helpers usable as HamiltonianSpec::potential.
std::function<double(const double*, double)> harmonic_potential(
    std::vector<double> spring, std::vector<double> center);

}  // namespace pw
