#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pilotwave/bohm.hpp"
#include "pilotwave/config.hpp"
#include "pilotwave/gauge.hpp"
#include "pilotwave/hmm.hpp"

namespace pw::scenario {

// The eight runnable scenarios, in their canonical order.
std::vector<std::string> subcommands();
bool is_subcommand(const std::string& name);

// Complete built-in configuration for one scenario; file configs overlay
// these defaults, so partial configs stay runnable and reproducible.
Config default_config(const std::string& subcommand);

// Defaults overlaid with the optional config file, then with command-line
// overrides; the result is schema-validated (unknown keys rejected).
Config load_config(const std::string& subcommand, const std::string& path,
                   const std::vector<std::string>& overrides);

struct RunRequest {
  std::string subcommand;
  std::string config_path;  // empty: built-in defaults
  std::string out_dir;
  std::optional<std::uint64_t> seed;  // overrides [run] seed
  int threads = 1;
  bool verbose = false;
  std::vector<std::string> overrides;  // "section.key=value"
};

// Dispatches one scenario, writes its artifacts and manifest into out_dir,
// and maps failures to the exit contract: 0 success, 1 configuration error,
// 2 numeric failure, 3 certification failure.
int run(const RunRequest& req, std::ostream& log);

// --- Typed scenario entry points (run() dispatches to these) ---------------

struct EvolveArtifacts {
  std::vector<double> times;
  std::vector<std::string> snapshot_files;
  double norm_drift = 0.0;
  std::string solver_id;
  Manifest to_manifest() const;
};

EvolveArtifacts run_evolve(const Config& cfg, const std::string& out_dir,
                           int threads, std::ostream& log);

struct TrajectoryArtifacts {
  EquivarianceReport equivariance;
  std::size_t frozen = 0;
  std::size_t guard_limited = 0;
  std::string block_file;
  std::string csv_file;
  Manifest to_manifest() const;
};

TrajectoryArtifacts run_trajectories(const Config& cfg,
                                     const std::string& out_dir, int threads,
                                     std::ostream& log);

struct DoubleSlitReport {
  std::size_t runs = 0;
  std::size_t crossed = 0;
  double median_crossing_time = 0.0;
  double oracle_time = 0.0;  // snapshot used for the Born marginal
  double tv = 0.0;
  std::vector<double> interior_maxima;  // histogram peak positions
  Manifest to_manifest() const;
};

DoubleSlitReport run_double_slit(const Config& cfg, const std::string& out_dir,
                                 int threads, std::ostream& log);

struct GaugePairReport {
  double born_rel_change = 0.0;  // |psi'|^2 vs |psi|^2, relative sup
  double phase_shift_defect = 0.0;  // s' - s - lambda, wrapped, over valid nodes
  GaugeCompareReport compare;
  Manifest to_manifest() const;
};

GaugePairReport run_gauge_compare(const Config& cfg, const std::string& out_dir,
                                  int threads, std::ostream& log);

struct HmmArtifacts {
  HmmModel model;
  CertificationReport certification;
  double velocity_error = -1.0;  // vs analytic drift; -1 when no oracle
  Manifest to_manifest() const;
};

HmmArtifacts run_hmm_build(const Config& cfg, const std::string& out_dir,
                           int threads, std::ostream& log);

struct ShoemakerArtifacts {
  bool witness_found = false;
  std::string witness_text;
  std::size_t transitions_checked = 0;
  std::vector<std::int64_t> full_rest_years;
  Manifest to_manifest() const;
};

ShoemakerArtifacts run_shoemaker(const Config& cfg, const std::string& out_dir,
                                 std::ostream& log);

struct PhaseSpaceArtifacts {
  double worst_flow_residual = 0.0;   // hamilton flow vs unitary evolution
  double worst_norm_drift = 0.0;
  double bracket_defect = 0.0;        // {x_k, y_j} vs identity
  double unitary_violation = 0.0;     // symplectic audit of random unitaries
  double dilation_violation = 0.0;    // negative control, should be order one
  double swap_mismatch = 0.0;         // oscillator frame-swap trajectory match
  Manifest to_manifest() const;
};

PhaseSpaceArtifacts run_phase_space(const Config& cfg,
                                    const std::string& out_dir, int threads,
                                    std::ostream& log);

}  // namespace pw::scenario
