#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "pilotwave/bohm.hpp"

namespace pw {

// Supplies a normalized density rho(q,t), either in analytic form (with an
// optional analytic time derivative) or as stored snapshots on the grid.
class DensityProvider {
 public:
  using Fn = std::function<double(const double* q, double t)>;

  static DensityProvider analytic(GridPtr grid, Fn rho, Fn drho_dt = {},
                                  std::string descriptor = "analytic");
  static DensityProvider tabulated(std::vector<RealField> snapshots,
                                   std::vector<double> times,
                                   std::string descriptor = "tabulated");

  const GridPtr& grid() const { return grid_; }
  bool analytic_form() const { return static_cast<bool>(rho_); }
  bool has_rate() const { return static_cast<bool>(drho_); }
  const std::string& descriptor() const { return descriptor_; }

  // The density at time t. Tabulated providers require t to be a stored time.
  RealField density(double t) const;
  // d rho / dt at time t: the analytic rate when available, else a centered
  // difference (step dt for analytic forms, the stored spacing for
  // tabulated ones; one-sided second order at the stored ends).
  RealField rate(double t, double dt) const;
  // rho >= 0 and unit mass within mass_tol; throws InvalidArgument.
  void validate(double t, double mass_tol = 1e-4) const;

 private:
  DensityProvider() = default;
  GridPtr grid_;
  Fn rho_;
  Fn drho_;
  std::vector<RealField> snaps_;
  std::vector<double> times_;
  std::string descriptor_;
};

struct HmmBuildOptions {
  std::vector<double> c;     // per-axis weights; empty means 1/n each
  std::vector<double> a;     // per-axis reference points; empty means axis lo
  double rate_dt = 1e-4;     // centered step for analytic densities
  double mass_tol = 1e-4;
  double sum_tol = 1e-12;    // tolerance on sum(c) = 1
};

// A deterministic latent-variable model for a prescribed density: latent
// field r with r^2 = rho, one current per axis built from the running
// integral of the density rate, and the shared guidance machinery on top.
struct HmmModel {
  std::vector<double> c;
  std::vector<double> a;
  std::vector<double> times;
  std::vector<RealField> r;            // non-negative root, one per time
  std::shared_ptr<FlowSeries> flow;    // rho = r^2 plus built currents
  double r_sq_defect = 0.0;            // sup |r^2 - rho| over audit times
  std::string density_descriptor;

  Manifest to_manifest() const;
};

// The latent field at one time: the non-negative root of rho. Negative
// density is an error.
RealField build_r(const DensityProvider& density, double t);

// J_i = -c_i * d/dt integral_{a_i}^{q_i} rho, one field per axis.
std::vector<RealField> build_currents(const DensityProvider& density,
                                      const std::vector<double>& c,
                                      const std::vector<double>& a, double t,
                                      double rate_dt);

HmmModel build_model(const DensityProvider& density,
                     const std::vector<double>& times,
                     const HmmBuildOptions& opt = {});

// Guarded-division guidance over the model's flow; shares the trajectory
// engine with the wave-function path.
std::shared_ptr<FlowVelocity> hmm_velocity(const HmmModel& model,
                                           double floor_rel = 1e-12);

struct CertificationReport {
  EquivarianceReport equivariance;
  double tv_threshold = 0.0;
  double ratio_threshold = 0.0;
  bool certified = false;

  Manifest to_manifest() const;
};

// Samples N points from rho(., t0), advances them under the model velocity,
// and certifies that every stored time stays Born-distributed: worst TV
// below tv_threshold and below ratio_threshold times the resampling
// baseline.
CertificationReport certify_equivariance(const HmmModel& model,
                                         std::size_t nparticles,
                                         std::uint64_t seed,
                                         int baseline_resamples,
                                         const AdvanceOptions& adv,
                                         double tv_threshold = 0.05,
                                         double ratio_threshold = 3.0);

}  // namespace pw
