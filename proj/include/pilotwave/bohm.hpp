#pragma once

#include <cstdint>
#include <memory>

#include "pilotwave/io.hpp"
#include "pilotwave/rng.hpp"
#include "pilotwave/schrodinger.hpp"
#include "pilotwave/stats.hpp"

namespace pw {

// Polar split psi = r exp(i s / hbar). s is reduced to (-pi hbar, pi hbar]
// and flagged invalid where r falls below floor_rel * max r; downstream
// consumers must not difference s across invalid nodes.
struct PolarPair {
  RealField r;
  RealField s;
  std::vector<std::uint8_t> valid;
};

PolarPair polar_decompose(const ComplexField& psi, double hbar,
                          double floor_rel = 1e-12);

// J_i = hbar sum_j mu_ij Im(conj(psi) d_j psi). Never differences the phase,
// so branch cuts in s are harmless.
std::vector<RealField> current_densities(const ComplexField& psi, double hbar);

// One stored time of a probability flow.
struct FlowSnapshot {
  double t = 0.0;
  RealField rho;
  std::vector<RealField> current;
  double rho_max = 0.0;
};

// Uniformly spaced flow snapshots; the data every guidance run consumes.
class FlowSeries {
 public:
  static FlowSeries from_wavefunctions(const SnapshotSeries& s);

  void add(double t, RealField rho, std::vector<RealField> current);
  const FlowSnapshot& at(std::size_t k) const { return snaps_[k]; }
  std::size_t count() const { return snaps_.size(); }
  double t0() const { return snaps_.front().t; }
  double t1() const { return snaps_.back().t; }
  double spacing() const;
  const GridPtr& grid_ptr() const;
  std::vector<FlowSnapshot>& snapshots() { return snaps_; }
  const std::vector<FlowSnapshot>& snapshots() const { return snaps_; }

 private:
  std::vector<FlowSnapshot> snaps_;
};

// Continuity audit: centered d rho/dt + div J at interior stored times.
// `normalized` rescales by (series span) / max rho so tolerances are
// dimensionless.
struct ContinuityReport {
  double max_residual = 0.0;
  double normalized = 0.0;
};

ContinuityReport continuity_residual(const FlowSeries& flow);

// Velocity provider interface shared by wave-function flows, externally
// built models and gauge-shifted variants.
class VelocityModel {
 public:
  virtual ~VelocityModel() = default;
  virtual const Grid& domain() const = 0;
  virtual const GridPtr& domain_ptr() const = 0;
  // Writes ndim components; t outside the covered span is clamped.
  virtual void velocity(const double* q, double t, double* v) const = 0;
};

// v = J / max(rho, floor_rel * max rho), each factor interpolated in space
// per snapshot, then the per-snapshot velocities interpolated linearly in
// time.
class FlowVelocity final : public VelocityModel {
 public:
  explicit FlowVelocity(std::shared_ptr<const FlowSeries> flow,
                        double floor_rel = 1e-12);
  const Grid& domain() const override;
  const GridPtr& domain_ptr() const override;
  void velocity(const double* q, double t, double* v) const override;

 private:
  void snapshot_velocity(std::size_t k, const double* q, double* v) const;
  std::shared_ptr<const FlowSeries> flow_;
  double floor_rel_;
};

struct Ensemble {
  int ndim = 0;
  std::size_t count = 0;
  std::vector<double> q;  // count * ndim, particle-major
};

// Per-cell multinomial draw proportional to rho * cell volume, with uniform
// jitter inside each cell. Deterministic for a fixed rng state.
Ensemble sample_ensemble(const RealField& rho, std::size_t count, Rng& rng);

struct AdvanceOptions {
  double dt = 0.0;        // base trajectory step; 0 means one per interval
  int max_halvings = 24;  // step-rejection depth cap
  int threads = 1;
};

struct AdvanceResult {
  int ndim = 0;
  std::size_t count = 0;
  std::vector<double> times;      // the record times
  std::vector<double> positions;  // times * count * ndim
  std::vector<std::uint8_t> frozen;  // left a dirichlet domain
  std::size_t frozen_count = 0;
  std::size_t guard_limited = 0;  // displacement clamped at the depth cap

  TrajectoryBlock to_block(std::uint64_t seed) const;
  std::span<const double> at_time(std::size_t k) const {
    const std::size_t stride = count * static_cast<std::size_t>(ndim);
    return {positions.data() + k * stride, stride};
  }
};

// Classic RK4 per particle between stored times. A step whose fastest stage
// moves more than two grid cells is rejected and halved; at the depth cap the
// displacement is clamped and counted in guard_limited. Periodic axes wrap;
// leaving a dirichlet axis freezes the particle where it exited.
AdvanceResult advance_ensemble(const Ensemble& start, const VelocityModel& vel,
                               double t0, double t1,
                               const std::vector<double>& record_times,
                               const AdvanceOptions& opt = {});

// TV and per-axis KS of the advanced ensemble against rho at every stored
// time, with a Monte-Carlo baseline from resampling rho itself.
struct EquivarianceReport {
  std::vector<double> times;
  std::vector<double> tv;
  std::vector<std::vector<double>> ks;
  std::vector<double> baseline_mean;
  std::vector<double> baseline_max;
  int baseline_resamples = 0;
  std::size_t nparticles = 0;
  double worst_tv = 0.0;
  double worst_ratio = 0.0;  // tv / per-time baseline mean

  Manifest to_manifest() const;
};

EquivarianceReport equivariance_report(const FlowSeries& flow,
                                       const AdvanceResult& adv,
                                       int baseline_resamples, Rng& rng);

// Connected super-threshold components by face adjacency, heaviest first.
struct Branch {
  std::vector<std::uint8_t> mask;
  double weight = 0.0;
};

std::vector<Branch> branch_decompose(const RealField& rho,
                                     double threshold_rel = 1e-6);

}  // namespace pw
