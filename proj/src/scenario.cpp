#include "pilotwave/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "pilotwave/io.hpp"
#include "pilotwave/phase_space.hpp"
#include "pilotwave/selftest.hpp"
#include "pilotwave/shoemaker.hpp"

namespace fs = std::filesystem;

namespace pw::scenario {

namespace {

// --- Config plumbing --------------------------------------------------------

using Schema = std::map<std::string, std::set<std::string>>;

const std::vector<std::string> kSubcommands = {
    "evolve",     "trajectories", "double-slit", "gauge-compare",
    "hmm-build",  "shoemaker",    "phase-space", "selftest"};

Schema schema_for(const std::string& sub) {
  Schema s;
  s["run"] = {"seed"};
  auto wave = [&s] {
    s["grid"] = {"lo", "hi", "count", "boundary", "masses"};
    s["state"] = {"preset", "center", "sigma", "momentum", "spring",
                  "separation", "weight"};
    s["hamiltonian"] = {"potential", "spring", "center", "hbar"};
    s["evolve"] = {"t0", "t1", "dt", "store_every", "solver", "norm_tol"};
  };
  if (sub == "evolve") {
    wave();
  } else if (sub == "trajectories") {
    wave();
    s["trajectories"] = {"count", "dt", "baseline_resamples"};
  } else if (sub == "double-slit") {
    wave();
    s["double_slit"] = {"runs",       "slit_offset", "slit_sigma", "source_y",
                        "sigma_y",    "momentum_y",  "screen_y",   "bins"};
    s["trajectories"] = {"dt"};
  } else if (sub == "gauge-compare") {
    wave();
    s["gauge"] = {"winding", "mask_radius", "restriction_tol"};
    s["trajectories"] = {"count", "dt", "baseline_resamples"};
  } else if (sub == "hmm-build") {
    s["hmm"] = {"preset", "lo",    "hi",      "count", "center",
                "velocity", "sigma", "alpha",  "omega", "t0",
                "t1",       "steps", "weights", "refs",  "rate_dt",
                "divergence_free_amplitude", "divergence_free_sigma"};
    s["certify"] = {"particles", "dt", "baseline_resamples", "tv_threshold",
                    "ratio_threshold"};
  } else if (sub == "shoemaker") {
    s["shoemaker"] = {"years", "q0"};
  } else if (sub == "phase-space") {
    s["phase_space"] = {"dim",           "trials",           "steps",
                        "hbar",          "canonical_dim",    "canonical_samples"};
  } else if (sub == "selftest") {
    s["selftest"] = {"scale"};
  } else {
    throw InvalidArgument("unknown scenario: " + sub);
  }
  return s;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += " ";
    out += p;
  }
  return out;
}

}  // namespace

std::vector<std::string> subcommands() { return kSubcommands; }

bool is_subcommand(const std::string& name) {
  return std::find(kSubcommands.begin(), kSubcommands.end(), name) !=
         kSubcommands.end();
}

Config default_config(const std::string& sub) {
  std::ostringstream text;
  text << "[run]\nseed = 1\n";
  auto wave_defaults = [&text](const std::string& body) {
    text << "[grid]\nlo = -16\nhi = 16\ncount = 256\nboundary = periodic\n"
            "masses = 1\n"
            "[state]\npreset = gaussian-packet\ncenter = -4\nsigma = 1\n"
            "momentum = 1\nspring = 1\nseparation = 4\nweight = 1\n"
            "[hamiltonian]\npotential = free\nspring = 1\ncenter = 0\n"
            "hbar = 1\n"
         << body;
  };
  if (sub == "evolve") {
    wave_defaults(
        "[evolve]\nt0 = 0\nt1 = 1\ndt = 0.001\nstore_every = 100\n"
        "solver = auto\nnorm_tol = 1e-6\n");
  } else if (sub == "trajectories") {
    wave_defaults(
        "[evolve]\nt0 = 0\nt1 = 1\ndt = 0.001\nstore_every = 100\n"
        "solver = auto\nnorm_tol = 1e-6\n"
        "[trajectories]\ncount = 2000\ndt = 0.01\nbaseline_resamples = 20\n");
  } else if (sub == "double-slit") {
    text << "[grid]\nlo = -16 -8\nhi = 16 8\ncount = 768 384\n"
            "boundary = periodic periodic\nmasses = 1 1\n"
            "[state]\npreset = double-slit\ncenter = 0 0\nsigma = 1 1\n"
            "momentum = 0 0\nspring = 1 1\nseparation = 4\nweight = 1\n"
            "[hamiltonian]\npotential = free\nspring = 1 1\ncenter = 0 0\n"
            "hbar = 1\n"
            "[evolve]\nt0 = 0\nt1 = 1.3\ndt = 0.005\nstore_every = 10\n"
            "solver = auto\nnorm_tol = 1e-6\n"
            "[double_slit]\nruns = 5000\nslit_offset = 1.8\nslit_sigma = 0.24\n"
            "source_y = -4\nsigma_y = 1\nmomentum_y = 12\nscreen_y = 4\n"
            "bins = 96\n"
            "[trajectories]\ndt = 0.01\n";
  } else if (sub == "gauge-compare") {
    text << "[grid]\nlo = -8 -8\nhi = 8 8\ncount = 192 192\n"
            "boundary = periodic periodic\nmasses = 1 1\n"
            "[state]\npreset = harmonic-ground\ncenter = 0 0\nsigma = 1 1\n"
            "momentum = 0 0\nspring = 1 1\nseparation = 4\nweight = 1\n"
            "[hamiltonian]\npotential = harmonic\nspring = 1 1\ncenter = 0 0\n"
            "hbar = 1\n"
            "[evolve]\nt0 = 0\nt1 = 1\ndt = 0.001\nstore_every = 100\n"
            "solver = auto\nnorm_tol = 1e-6\n"
            "[gauge]\nwinding = 1\nmask_radius = 1\nrestriction_tol = 0.05\n"
            "[trajectories]\ncount = 2000\ndt = 0.01\nbaseline_resamples = 15\n";
  } else if (sub == "hmm-build") {
    text << "[hmm]\npreset = moving-gaussian\nlo = -16\nhi = 16\n"
            "count = 16384\ncenter = -4\nvelocity = 1\nsigma = 1\n"
            "alpha = 0.25\nomega = 3.141592653589793\n"
            "t0 = 0\nt1 = 1\nsteps = 10\nweights = auto\nrefs = auto\n"
            "rate_dt = 1e-4\ndivergence_free_amplitude = 0\n"
            "divergence_free_sigma = 2\n"
            "[certify]\nparticles = 4000\ndt = 0.02\nbaseline_resamples = 15\n"
            "tv_threshold = 0.05\nratio_threshold = 3\n";
  } else if (sub == "shoemaker") {
    text << "[shoemaker]\nyears = 61\nq0 = 0\n";
  } else if (sub == "phase-space") {
    text << "[phase_space]\ndim = 4\ntrials = 5\nsteps = 5000\nhbar = 1\n"
            "canonical_dim = 3\ncanonical_samples = 8\n";
  } else if (sub == "selftest") {
    text << "[selftest]\nscale = full\n";
  } else {
    throw InvalidArgument("unknown scenario: " + sub);
  }
  return Config::parse_string(text.str());
}

Config load_config(const std::string& sub, const std::string& path,
                   const std::vector<std::string>& overrides) {
  Config cfg = default_config(sub);
  if (!path.empty()) {
    Config file = Config::parse_file(path);
    for (const auto& [section, kv] : file.entries())
      for (const auto& [key, value] : kv) cfg.set(section, key, value);
  }
  for (const auto& ov : overrides) cfg.apply_override(ov);
  cfg.validate(schema_for(sub));
  return cfg;
}

namespace {

// --- Shared wave-scenario construction --------------------------------------

Boundary parse_boundary(const std::string& word) {
  if (word == "periodic") return Boundary::periodic;
  if (word == "dirichlet") return Boundary::dirichlet;
  throw InvalidArgument("unknown boundary mode: " + word);
}

GridPtr build_grid(const Config& cfg) {
  const auto lo = cfg.get_doubles("grid", "lo");
  const auto hi = cfg.get_doubles("grid", "hi");
  const auto count = cfg.get_doubles("grid", "count");
  const auto modes = cfg.get_strings("grid", "boundary");
  const auto masses = cfg.get_doubles("grid", "masses");
  if (lo.size() != hi.size() || lo.size() != count.size() ||
      lo.size() != modes.size() || lo.size() != masses.size())
    throw InvalidArgument("grid lists must agree in length");
  std::vector<AxisSpec> axes;
  for (std::size_t a = 0; a < lo.size(); ++a)
    axes.push_back(AxisSpec{lo[a], hi[a], static_cast<int>(count[a]),
                            parse_boundary(modes[a])});
  return make_grid(std::move(axes), Metric::from_masses(masses));
}

ComplexField build_state(const Config& cfg, const GridPtr& grid, double hbar) {
  const std::string preset = cfg.get("state", "preset");
  const auto center = cfg.get_doubles("state", "center");
  const auto sigma = cfg.get_doubles("state", "sigma");
  const auto momentum = cfg.get_doubles("state", "momentum");
  if (preset == "gaussian-packet")
    return gaussian_packet(grid, hbar, center, sigma, momentum);
  if (preset == "two-packet") {
    const double sep = cfg.get_double("state", "separation");
    const double w = cfg.get_double_or("state", "weight", 1.0);
    auto left = center, right = center;
    left[0] -= sep / 2.0;
    right[0] += sep / 2.0;
    return superpose(gaussian_packet(grid, hbar, right, sigma, momentum),
                     gaussian_packet(grid, hbar, left, sigma, momentum), w);
  }
  if (preset == "harmonic-ground")
    return harmonic_ground(grid, hbar, center,
                           cfg.get_doubles("state", "spring"));
  if (preset == "plane-wave") return plane_wave(grid, hbar, momentum);
  if (preset == "double-slit")
    throw InvalidArgument(
        "the double-slit state is built by the double-slit scenario");
  throw InvalidArgument("unknown state preset: " + preset);
}

HamiltonianSpec build_hamiltonian(const Config& cfg) {
  HamiltonianSpec spec;
  spec.hbar = cfg.get_double("hamiltonian", "hbar");
  const std::string kind = cfg.get("hamiltonian", "potential");
  if (kind == "free") {
    // null potential
  } else if (kind == "harmonic") {
    spec.potential = harmonic_potential(cfg.get_doubles("hamiltonian", "spring"),
                                        cfg.get_doubles("hamiltonian", "center"));
  } else {
    throw InvalidArgument("unknown potential: " + kind);
  }
  return spec;
}

SolverKind parse_solver(const std::string& word) {
  if (word == "auto") return SolverKind::auto_select;
  if (word == "split-fourier") return SolverKind::split_fourier;
  if (word == "crank-nicolson") return SolverKind::crank_nicolson;
  throw InvalidArgument("unknown solver: " + word);
}

EvolveOptions build_evolve_options(const Config& cfg) {
  EvolveOptions opt;
  opt.t0 = cfg.get_double("evolve", "t0");
  opt.t1 = cfg.get_double("evolve", "t1");
  opt.dt = cfg.get_double("evolve", "dt");
  opt.store_every = static_cast<int>(cfg.get_int("evolve", "store_every"));
  opt.solver = parse_solver(cfg.get("evolve", "solver"));
  opt.norm_tol = cfg.get_double("evolve", "norm_tol");
  return opt;
}

// Evolves and accumulates the probability flow without keeping wavefunctions.
std::shared_ptr<FlowSeries> flow_from(const ComplexField& psi0,
                                      const HamiltonianSpec& spec,
                                      const EvolveOptions& opt,
                                      ComplexField* final_state = nullptr) {
  auto flow = std::make_shared<FlowSeries>();
  evolve_stream(psi0, spec, opt, [&](double t, const ComplexField& psi) {
    flow->add(t, born_density(psi), current_densities(psi, spec.hbar));
    if (final_state) *final_state = psi;
  });
  return flow;
}

std::vector<double> flow_times(const FlowSeries& flow) {
  std::vector<double> ts;
  for (std::size_t k = 0; k < flow.count(); ++k) ts.push_back(flow.at(k).t);
  return ts;
}

std::uint64_t seed_of(const Config& cfg) {
  const long long s = cfg.get_int("run", "seed");
  if (s < 0) throw InvalidArgument("seed must be nonnegative");
  return static_cast<std::uint64_t>(s);
}

std::string artifact(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void write_resolved_config(const Config& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& [section, kv] : cfg.entries()) {
    out << "[" << section << "]\n";
    for (const auto& [key, value] : kv) out << key << " = " << value << "\n";
  }
}

}  // namespace

// --- evolve -----------------------------------------------------------------

Manifest EvolveArtifacts::to_manifest() const {
  Manifest m{{"snapshots", std::to_string(times.size())},
             {"solver", solver_id},
             {"norm-drift", format_double(norm_drift)}};
  if (!times.empty()) {
    m.emplace_back("t-first", format_double(times.front()));
    m.emplace_back("t-last", format_double(times.back()));
  }
  return m;
}

EvolveArtifacts run_evolve(const Config& cfg, const std::string& out_dir,
                           int threads, std::ostream& log) {
  (void)threads;
  auto grid = build_grid(cfg);
  auto spec = build_hamiltonian(cfg);
  auto psi0 = build_state(cfg, grid, spec.hbar);
  auto opt = build_evolve_options(cfg);

  EvolveArtifacts art;
  ComplexField last = psi0;
  int index = 0;
  auto meta = evolve_stream(psi0, spec, opt, [&](double t, const ComplexField& psi) {
    std::ostringstream name;
    name << "psi_" << index++ << ".pwf";
    const std::string path = artifact(out_dir, name.str());
    write_field(psi, path);
    art.times.push_back(t);
    art.snapshot_files.push_back(name.str());
    art.norm_drift = std::max(art.norm_drift, std::abs(l2_norm(psi) - 1.0));
    last = psi;
  });
  art.solver_id = meta.solver_id;
  write_field_csv(born_density(last), artifact(out_dir, "density_final.csv"));
  log << "stored " << art.times.size() << " snapshots, solver " << art.solver_id
      << ", norm drift " << format_double(art.norm_drift) << "\n";
  return art;
}

// --- trajectories -------------------------------------------------------------

Manifest TrajectoryArtifacts::to_manifest() const {
  Manifest m = equivariance.to_manifest();
  m.emplace_back("frozen", std::to_string(frozen));
  m.emplace_back("guard-limited", std::to_string(guard_limited));
  m.emplace_back("trajectory-block", block_file);
  m.emplace_back("trajectory-csv", csv_file);
  return m;
}

TrajectoryArtifacts run_trajectories(const Config& cfg,
                                     const std::string& out_dir, int threads,
                                     std::ostream& log) {
  auto grid = build_grid(cfg);
  auto spec = build_hamiltonian(cfg);
  auto psi0 = build_state(cfg, grid, spec.hbar);
  auto opt = build_evolve_options(cfg);
  auto flow = flow_from(psi0, spec, opt);

  const std::uint64_t seed = seed_of(cfg);
  Rng master(seed);
  Rng sample_rng = master.fork(1);
  Rng baseline_rng = master.fork(2);

  const auto n = static_cast<std::size_t>(cfg.get_int("trajectories", "count"));
  auto start = sample_ensemble(flow->at(0).rho, n, sample_rng);

  AdvanceOptions adv;
  adv.dt = cfg.get_double("trajectories", "dt");
  adv.threads = threads;
  const auto times = flow_times(*flow);
  FlowVelocity vel(flow);
  auto result = advance_ensemble(start, vel, opt.t0, opt.t1, times, adv);

  TrajectoryArtifacts art;
  art.equivariance = equivariance_report(
      *flow, result,
      static_cast<int>(cfg.get_int("trajectories", "baseline_resamples")),
      baseline_rng);
  art.frozen = result.frozen_count;
  art.guard_limited = result.guard_limited;
  art.block_file = "trajectories.pwt";
  art.csv_file = "trajectories.csv";
  const auto block = result.to_block(seed);
  write_trajectories(block, artifact(out_dir, art.block_file));
  write_trajectories_csv(block, artifact(out_dir, art.csv_file));
  write_manifest(art.equivariance.to_manifest(),
                 artifact(out_dir, "equivariance.txt"));
  log << "advanced " << n << " walkers over " << times.size()
      << " stored times, worst tv " << format_double(art.equivariance.worst_tv)
      << " (baseline ratio " << format_double(art.equivariance.worst_ratio)
      << ")\n";
  return art;
}

// --- double slit --------------------------------------------------------------

Manifest DoubleSlitReport::to_manifest() const {
  std::string peaks;
  for (double x : interior_maxima) {
    if (!peaks.empty()) peaks += " ";
    peaks += format_double(x);
  }
  return {{"runs", std::to_string(runs)},
          {"crossed", std::to_string(crossed)},
          {"median-crossing-time", format_double(median_crossing_time)},
          {"oracle-time", format_double(oracle_time)},
          {"tv-vs-born-marginal", format_double(tv)},
          {"interior-maxima", std::to_string(interior_maxima.size())},
          {"interior-maxima-at", peaks},
          {"single-landing-per-run", "by-construction"}};
}

DoubleSlitReport run_double_slit(const Config& cfg, const std::string& out_dir,
                                 int threads, std::ostream& log) {
  auto grid = build_grid(cfg);
  if (grid->ndim() != 2)
    throw InvalidArgument("the double-slit scenario needs a 2d grid");
  auto spec = build_hamiltonian(cfg);
  if (spec.potential)
    throw InvalidArgument("the double-slit scenario runs free evolution");
  auto opt = build_evolve_options(cfg);

  const double offset = cfg.get_double("double_slit", "slit_offset");
  const double sx = cfg.get_double("double_slit", "slit_sigma");
  const double y0 = cfg.get_double("double_slit", "source_y");
  const double sy = cfg.get_double("double_slit", "sigma_y");
  const double py = cfg.get_double("double_slit", "momentum_y");
  const double screen = cfg.get_double("double_slit", "screen_y");
  const auto runs = static_cast<std::size_t>(cfg.get_int("double_slit", "runs"));
  const int bins = static_cast<int>(cfg.get_int("double_slit", "bins"));

  auto psi0 = superpose(
      gaussian_packet(grid, spec.hbar, {offset, y0}, {sx, sy}, {0.0, py}),
      gaussian_packet(grid, spec.hbar, {-offset, y0}, {sx, sy}, {0.0, py}));
  auto flow = flow_from(psi0, spec, opt);
  const auto times = flow_times(*flow);

  Rng master(seed_of(cfg));
  Rng sample_rng = master.fork(1);
  auto start = sample_ensemble(flow->at(0).rho, runs, sample_rng);

  AdvanceOptions adv;
  adv.dt = cfg.get_double("trajectories", "dt");
  adv.threads = threads;
  FlowVelocity vel(flow);
  auto result = advance_ensemble(start, vel, opt.t0, opt.t1, times, adv);

  // First upward crossing of the screen line, linearly interpolated between
  // record times; one landing site per run by construction.
  const double width = grid->axis(0).hi - grid->axis(0).lo;
  std::vector<double> landing_x, landing_t;
  std::ofstream landings(artifact(out_dir, "landings.csv"));
  landings << "run,x,t\n";
  for (std::size_t p = 0; p < result.count; ++p) {
    for (std::size_t k = 1; k < times.size(); ++k) {
      const auto prev = result.at_time(k - 1);
      const auto cur = result.at_time(k);
      const double yp = prev[2 * p + 1], yc = cur[2 * p + 1];
      if (!(yp < screen && yc >= screen)) continue;
      const double frac = (screen - yp) / (yc - yp);
      double dx = cur[2 * p] - prev[2 * p];
      if (dx > width / 2) dx -= width;    // transverse axis is periodic
      if (dx < -width / 2) dx += width;
      const double x = prev[2 * p] + frac * dx;
      const double t = times[k - 1] + frac * (times[k] - times[k - 1]);
      landing_x.push_back(x);
      landing_t.push_back(t);
      landings << p << ',' << format_double(x) << ',' << format_double(t)
               << "\n";
      break;
    }
  }

  DoubleSlitReport report;
  report.runs = runs;
  report.crossed = landing_x.size();
  if (report.crossed < (runs * 99) / 100)
    throw NumericError("fewer than 99% of runs reached the screen");

  auto sorted_t = landing_t;
  std::sort(sorted_t.begin(), sorted_t.end());
  report.median_crossing_time = sorted_t[sorted_t.size() / 2];
  const auto nearest_snapshot = [&times](double t) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < times.size(); ++k)
      if (std::abs(times[k] - t) < std::abs(times[best] - t)) best = k;
    return best;
  };
  report.oracle_time = times[nearest_snapshot(report.median_crossing_time)];

  // Born oracle: each run arrives at its own time, so the landing ensemble is
  // a crossing-time mixture of transverse marginals, regrouped onto the
  // landing bins.
  const int nx = grid->axis(0).count;
  if (nx % bins != 0)
    throw InvalidArgument("bins must divide the transverse grid count");
  const int group = nx / bins;
  auto bin_grid = make_grid({AxisSpec{grid->axis(0).lo, grid->axis(0).hi, bins,
                                      Boundary::periodic}});
  std::vector<double> weight(times.size(), 0.0);
  for (double t : landing_t)
    weight[nearest_snapshot(t)] += 1.0 / static_cast<double>(landing_t.size());
  std::vector<double> oracle(static_cast<std::size_t>(bins), 0.0);
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (weight[k] == 0.0) continue;
    const auto marginal = marginal_probabilities(flow->at(k).rho, 0);
    // Landing cells are centered on coarse nodes; fine node j falls in coarse
    // cell round(j / group), with periodic wrap.
    for (int j = 0; j < nx; ++j) {
      int i =
          static_cast<int>(std::lround(static_cast<double>(j) / group)) % bins;
      oracle[static_cast<std::size_t>(i)] +=
          weight[k] * marginal[static_cast<std::size_t>(j)];
    }
  }

  auto hist = histogram_on_grid(bin_grid, landing_x, landing_x.size());
  report.tv = tv_distance(hist, oracle);

  // Interior fringe maxima of the smoothed landing histogram.
  std::vector<double> prob(hist.counts.size());
  for (std::size_t i = 0; i < prob.size(); ++i)
    prob[i] = hist.counts[i] / hist.total;
  std::vector<double> smooth(prob.size(), 0.0);
  for (std::size_t i = 1; i + 1 < prob.size(); ++i)
    smooth[i] = 0.25 * prob[i - 1] + 0.5 * prob[i] + 0.25 * prob[i + 1];
  const double peak_floor = 0.2 * *std::max_element(smooth.begin(), smooth.end());
  std::ofstream hcsv(artifact(out_dir, "histogram.csv"));
  hcsv << "x,count,probability,born_marginal\n";
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const double x = bin_grid->coord(0, static_cast<int>(i));
    hcsv << format_double(x) << ',' << hist.counts[i] << ','
         << format_double(prob[i]) << ',' << format_double(oracle[i]) << "\n";
    if (i > 0 && i + 1 < prob.size() && smooth[i] > smooth[i - 1] &&
        smooth[i] > smooth[i + 1] && smooth[i] >= peak_floor &&
        std::abs(x) < offset)
      report.interior_maxima.push_back(x);
  }

  log << report.crossed << "/" << runs << " runs landed, median crossing t="
      << format_double(report.median_crossing_time) << ", tv "
      << format_double(report.tv) << ", " << report.interior_maxima.size()
      << " interior maxima\n";
  return report;
}

// --- gauge compare -------------------------------------------------------------

Manifest GaugePairReport::to_manifest() const {
  Manifest m{{"born-relative-change", format_double(born_rel_change)},
             {"phase-shift-defect", format_double(phase_shift_defect)}};
  for (auto& [k, v] : compare.to_manifest()) m.emplace_back(k, v);
  return m;
}

namespace {

GaugeFunction azimuthal_gauge(double hbar, int winding) {
  GaugeFunction lam;
  const double w = hbar * winding;
  lam.value = [w](const double* q, double) { return w * std::atan2(q[1], q[0]); };
  lam.gradient = [w](const double* q, double, double* g) {
    const double r2 = q[0] * q[0] + q[1] * q[1];
    if (r2 < 1e-24) {  // singular point, masked downstream
      g[0] = g[1] = 0.0;
      return;
    }
    g[0] = -w * q[1] / r2;
    g[1] = w * q[0] / r2;
  };
  lam.singular_points = {{0.0, 0.0}};
  lam.descriptor = "azimuthal winding " + std::to_string(winding);
  return lam;
}

}  // namespace

GaugePairReport run_gauge_compare(const Config& cfg, const std::string& out_dir,
                                  int threads, std::ostream& log) {
  auto grid = build_grid(cfg);
  if (grid->ndim() != 2)
    throw InvalidArgument("the gauge comparison runs on a 2d grid");
  auto spec = build_hamiltonian(cfg);
  auto psi0 = build_state(cfg, grid, spec.hbar);
  auto opt = build_evolve_options(cfg);

  const int winding = static_cast<int>(cfg.get_int("gauge", "winding"));
  if (winding == 0) throw InvalidArgument("winding must be nonzero");
  auto lam = azimuthal_gauge(spec.hbar, winding);

  GaugePairReport report;

  // Phase application: the density is untouched and the phase shifts by the
  // gauge value modulo the phase period.
  auto gauged = apply_gauge_config(psi0, lam, opt.t0, spec.hbar);
  auto rho0 = born_density(psi0);
  auto rho1 = born_density(gauged);
  double dev = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < rho0.size(); ++i) {
    dev = std::max(dev, std::abs(rho1[i] - rho0[i]));
    scale = std::max(scale, rho0[i]);
  }
  report.born_rel_change = dev / scale;

  auto plain_polar = polar_decompose(psi0, spec.hbar, 1e-6);
  auto gauged_polar = polar_decompose(gauged, spec.hbar, 1e-6);
  auto lam_field = gauge_value_field(lam, grid, opt.t0);
  const double period = 2.0 * std::numbers::pi * spec.hbar;
  for (std::size_t i = 0; i < lam_field.size(); ++i) {
    if (!plain_polar.valid[i] || !gauged_polar.valid[i]) continue;
    const double diff =
        gauged_polar.s[i] - plain_polar.s[i] - lam_field[i];
    report.phase_shift_defect =
        std::max(report.phase_shift_defect, std::abs(std::remainder(diff, period)));
  }

  auto flow = flow_from(psi0, spec, opt);
  Rng master(seed_of(cfg));
  Rng sample_rng = master.fork(1);
  Rng baseline_rng = master.fork(2);
  const auto n = static_cast<std::size_t>(cfg.get_int("trajectories", "count"));
  auto start = sample_ensemble(flow->at(0).rho, n, sample_rng);
  AdvanceOptions adv;
  adv.dt = cfg.get_double("trajectories", "dt");
  adv.threads = threads;
  report.compare = gauge_velocity_shift(
      *flow, lam, start, flow_times(*flow), adv,
      static_cast<int>(cfg.get_int("trajectories", "baseline_resamples")),
      baseline_rng, cfg.get_double("gauge", "restriction_tol"),
      cfg.get_double("gauge", "mask_radius"));

  std::ofstream dev_csv(artifact(out_dir, "deviation.csv"));
  dev_csv << "t,max_deviation\n";
  for (std::size_t k = 0; k < report.compare.times.size(); ++k)
    dev_csv << format_double(report.compare.times[k]) << ','
            << format_double(report.compare.deviation[k]) << "\n";

  log << "born change " << format_double(report.born_rel_change)
      << ", phase defect " << format_double(report.phase_shift_defect)
      << ", trajectory deviation " << format_double(report.compare.max_deviation)
      << ", tv plain/gauged " << format_double(report.compare.tv_plain_final)
      << "/" << format_double(report.compare.tv_gauged_final) << " (baseline "
      << format_double(report.compare.baseline_mean) << ")\n";
  return report;
}

// --- hmm build -----------------------------------------------------------------

Manifest HmmArtifacts::to_manifest() const {
  Manifest m = model.to_manifest();
  for (auto& [k, v] : certification.to_manifest()) m.emplace_back(k, v);
  if (velocity_error >= 0.0)
    m.emplace_back("velocity-error", format_double(velocity_error));
  return m;
}

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double normal_pdf(double x, double mean, double sigma) {
  const double d = (x - mean) / sigma;
  return kInvSqrt2Pi / sigma * std::exp(-0.5 * d * d);
}

DensityProvider density_from(const Config& cfg, GridPtr grid) {
  const std::string preset = cfg.get("hmm", "preset");
  if (preset == "moving-gaussian") {
    if (grid->ndim() != 1)
      throw InvalidArgument("moving-gaussian is a 1d preset");
    const double x0 = cfg.get_double("hmm", "center");
    const double v = cfg.get_double("hmm", "velocity");
    const double sg = cfg.get_double("hmm", "sigma");
    return DensityProvider::analytic(
        grid,
        [x0, v, sg](const double* q, double t) {
          return normal_pdf(q[0], x0 + v * t, sg);
        },
        [x0, v, sg](const double* q, double t) {
          const double c = x0 + v * t;
          return v * (q[0] - c) / (sg * sg) * normal_pdf(q[0], c, sg);
        },
        "moving-gaussian");
  }
  if (preset == "sloshing") {
    if (grid->ndim() != 2) throw InvalidArgument("sloshing is a 2d preset");
    const double sg = cfg.get_double("hmm", "sigma");
    const double alpha = cfg.get_double("hmm", "alpha");
    const double omega = cfg.get_double("hmm", "omega");
    auto shape = [sg](const double* q) {
      return normal_pdf(q[0], 0.0, sg) * normal_pdf(q[1], 0.0, sg);
    };
    auto mode = [sg](const double* q) {
      return std::tanh(q[0] / sg) * std::tanh(q[1] / sg);
    };
    return DensityProvider::analytic(
        grid,
        [shape, mode, alpha, omega](const double* q, double t) {
          return shape(q) * (1.0 + alpha * std::sin(omega * t) * mode(q));
        },
        [shape, mode, alpha, omega](const double* q, double t) {
          return shape(q) * alpha * omega * std::cos(omega * t) * mode(q);
        },
        "sloshing");
  }
  throw InvalidArgument("unknown density preset: " + preset);
}

}  // namespace

HmmArtifacts run_hmm_build(const Config& cfg, const std::string& out_dir,
                           int threads, std::ostream& log) {
  const auto lo = cfg.get_doubles("hmm", "lo");
  const auto hi = cfg.get_doubles("hmm", "hi");
  const auto count = cfg.get_doubles("hmm", "count");
  if (lo.size() != hi.size() || lo.size() != count.size())
    throw InvalidArgument("hmm grid lists must agree in length");
  std::vector<AxisSpec> axes;
  for (std::size_t a = 0; a < lo.size(); ++a)
    axes.push_back(AxisSpec{lo[a], hi[a], static_cast<int>(count[a]),
                            Boundary::periodic});
  auto grid = make_grid(std::move(axes));
  auto density = density_from(cfg, grid);

  const double t0 = cfg.get_double("hmm", "t0");
  const double t1 = cfg.get_double("hmm", "t1");
  const auto steps = cfg.get_int("hmm", "steps");
  if (steps < 1) throw InvalidArgument("hmm needs at least one step");
  std::vector<double> times;
  for (long long k = 0; k <= steps; ++k)
    times.push_back(t0 + (t1 - t0) * static_cast<double>(k) /
                             static_cast<double>(steps));

  HmmBuildOptions opt;
  opt.rate_dt = cfg.get_double("hmm", "rate_dt");
  if (cfg.get("hmm", "weights") != "auto")
    opt.c = cfg.get_doubles("hmm", "weights");
  if (cfg.get("hmm", "refs") != "auto") opt.a = cfg.get_doubles("hmm", "refs");

  HmmArtifacts art;
  art.model = build_model(density, times, opt);

  const double amp = cfg.get_double("hmm", "divergence_free_amplitude");
  if (amp != 0.0) {
    std::vector<RealField> w;
    if (grid->ndim() == 1) {
      w.push_back(RealField::from_function(
          grid, [amp](const double*) { return amp; }, t0));
    } else if (grid->ndim() == 2) {
      const double sw = cfg.get_double("hmm", "divergence_free_sigma");
      auto chi = RealField::from_function(
          grid,
          [amp, sw](const double* q) {
            return amp * std::exp(-(q[0] * q[0] + q[1] * q[1]) / (2 * sw * sw));
          },
          t0);
      w = curl_current(chi);
    } else {
      throw InvalidArgument("divergence-free injection supports 1d and 2d");
    }
    *art.model.flow = add_divergence_free_current(*art.model.flow, w);
    log << "injected divergence-free current, amplitude " << format_double(amp)
        << "\n";
  }

  if (cfg.get("hmm", "preset") == "moving-gaussian") {
    const double x0 = cfg.get_double("hmm", "center");
    const double v = cfg.get_double("hmm", "velocity");
    auto vel = hmm_velocity(art.model);
    std::ofstream probe(artifact(out_dir, "velocity_probe.csv"));
    probe << "t,q,recovered,expected,error\n";
    double worst = 0.0;
    const double tm = 0.5 * (times[0] + times[1]);
    for (double t : {times[0], times[times.size() / 2], tm}) {
      for (double off : {-0.5, 0.0, 0.37}) {
        const double q = x0 + v * t + off;
        double out = 0.0;
        vel->velocity(&q, t, &out);
        const double err = std::abs(out - v);
        worst = std::max(worst, err);
        probe << format_double(t) << ',' << format_double(q) << ','
              << format_double(out) << ',' << format_double(v) << ','
              << format_double(err) << "\n";
      }
    }
    art.velocity_error = worst;
  }

  AdvanceOptions adv;
  adv.dt = cfg.get_double("certify", "dt");
  adv.threads = threads;
  art.certification = certify_equivariance(
      art.model, static_cast<std::size_t>(cfg.get_int("certify", "particles")),
      seed_of(cfg),
      static_cast<int>(cfg.get_int("certify", "baseline_resamples")), adv,
      cfg.get_double("certify", "tv_threshold"),
      cfg.get_double("certify", "ratio_threshold"));

  write_manifest(art.model.to_manifest(), artifact(out_dir, "model.txt"));
  write_manifest(art.certification.to_manifest(),
                 artifact(out_dir, "certification.txt"));
  log << "built " << times.size() << "-time model ("
      << art.model.density_descriptor << "), certified "
      << (art.certification.certified ? "yes" : "no");
  if (art.velocity_error >= 0.0)
    log << ", velocity error " << format_double(art.velocity_error);
  log << "\n";
  return art;
}

// --- shoemaker -------------------------------------------------------------------

Manifest ShoemakerArtifacts::to_manifest() const {
  std::string rests;
  for (auto y : full_rest_years) {
    if (!rests.empty()) rests += " ";
    rests += std::to_string(y);
  }
  return {{"witness-found", witness_found ? "yes" : "no"},
          {"transitions-checked", std::to_string(transitions_checked)},
          {"full-rest-years", rests.empty() ? "none" : rests}};
}

ShoemakerArtifacts run_shoemaker(const Config& cfg, const std::string& out_dir,
                                 std::ostream& log) {
  const auto years = cfg.get_int("shoemaker", "years");
  const double q0 = cfg.get_double("shoemaker", "q0");
  if (years < 1) throw InvalidArgument("years must be at least 1");

  const auto trace = shoemaker::run_trace(years * shoemaker::kDaysPerYear, q0);
  {
    std::ofstream csv(artifact(out_dir, "trace.csv"));
    shoemaker::write_trace_csv(csv, trace);
  }

  ShoemakerArtifacts art;
  auto witness = shoemaker::non_markov_witness(years, q0);
  art.witness_found = witness.has_value();
  art.witness_text = witness ? witness->describe() : "none";
  {
    std::ofstream wf(artifact(out_dir, "witness.txt"));
    wf << art.witness_text << "\n";
  }
  if (years >= 61 && !art.witness_found)
    throw NumericError("expected a non-markov witness within the horizon");
  if (shoemaker::augmented_witness(years, q0))
    throw NumericError("augmented trace must stay deterministic");

  const auto cycle = std::min<long long>(years, 60) * shoemaker::kDaysPerYear;
  std::vector<shoemaker::State> head(trace.begin(),
                                     trace.begin() + cycle + 1);
  art.transitions_checked = shoemaker::check_deterministic(head);
  art.full_rest_years = shoemaker::full_rest_years_in(trace);

  log << "witness: " << art.witness_text << "\n";
  log << "checked " << art.transitions_checked
      << " transitions, full rest years:";
  for (auto y : art.full_rest_years) log << " " << y;
  log << "\n";
  return art;
}

// --- phase space -----------------------------------------------------------------

Manifest PhaseSpaceArtifacts::to_manifest() const {
  return {{"worst-flow-residual", format_double(worst_flow_residual)},
          {"worst-norm-drift", format_double(worst_norm_drift)},
          {"bracket-defect", format_double(bracket_defect)},
          {"unitary-violation", format_double(unitary_violation)},
          {"dilation-violation", format_double(dilation_violation)},
          {"swap-mismatch", format_double(swap_mismatch)}};
}

PhaseSpaceArtifacts run_phase_space(const Config& cfg,
                                    const std::string& out_dir, int threads,
                                    std::ostream& log) {
  (void)threads;
  const int dim = static_cast<int>(cfg.get_int("phase_space", "dim"));
  const int trials = static_cast<int>(cfg.get_int("phase_space", "trials"));
  const int steps = static_cast<int>(cfg.get_int("phase_space", "steps"));
  const double hbar = cfg.get_double("phase_space", "hbar");
  const int cdim = static_cast<int>(cfg.get_int("phase_space", "canonical_dim"));
  const int csamples =
      static_cast<int>(cfg.get_int("phase_space", "canonical_samples"));
  if (dim < 1 || dim > 64) throw InvalidArgument("dim must be in 1..64");

  Rng master(seed_of(cfg));
  PhaseSpaceArtifacts art;

  std::ofstream res_csv(artifact(out_dir, "flow_residuals.csv"));
  res_csv << "trial,dim,flow_vs_unitary,norm_drift\n";
  for (int trial = 0; trial < trials; ++trial) {
    auto h = random_hermitian(dim, master);
    CVector c0(dim);
    for (int k = 0; k < dim; ++k)
      c0[k] = std::complex<double>(master.normal(), master.normal());
    c0.normalize();
    auto cl = phase::ClassicalHamiltonian::from_quantum(h, hbar);
    auto path = phase::hamilton_flow(phase::PhasePoint::from_state(c0, hbar),
                                     cl, 0.0, 1.0, steps);
    const CVector exact = hermitian_propagator(h, 1.0, hbar) * c0;
    const double residual = (path.back().to_state(hbar) - exact).norm();
    double drift = 0.0;
    for (const auto& p : path)
      drift = std::max(drift, std::abs(p.norm_squared(hbar) - 1.0));
    art.worst_flow_residual = std::max(art.worst_flow_residual, residual);
    art.worst_norm_drift = std::max(art.worst_norm_drift, drift);
    res_csv << trial << ',' << dim << ',' << format_double(residual) << ','
            << format_double(drift) << "\n";
  }

  phase::PhasePoint at;
  at.x.resize(cdim);
  at.y.resize(cdim);
  for (int k = 0; k < cdim; ++k) at.x[k] = master.normal();
  for (int k = 0; k < cdim; ++k) at.y[k] = master.normal();
  for (int k = 0; k < cdim; ++k)
    for (int j = 0; j < cdim; ++j) {
      auto fx = [k](const phase::PhasePoint& z, double) { return z.x[k]; };
      auto fy = [j](const phase::PhasePoint& z, double) { return z.y[j]; };
      const double want = k == j ? 1.0 : 0.0;
      art.bracket_defect =
          std::max(art.bracket_defect,
                   std::abs(phase::poisson_bracket(fx, fy, at) - want));
    }

  art.unitary_violation =
      phase::canonical_check(
          phase::linear_phase_map(
              phase::unitary_real_form(random_unitary(cdim, master))),
          cdim, csamples, master.next_u64())
          .max_violation;
  art.dilation_violation = phase::canonical_check(
                               [](const phase::PhasePoint& z) {
                                 phase::PhasePoint s = z;
                                 s.x *= 2.0;
                                 return s;
                               },
                               cdim, csamples, master.next_u64())
                               .max_violation;

  phase::OscillatorFrame osc{0.7, -0.3, 2.0, 8.0};
  auto base = phase::oscillator_flow(osc, 0.0, 1.0, 2000);
  auto swapped = phase::oscillator_flow(phase::ho_frame_swap(osc), 0.0, 1.0, 2000);
  for (std::size_t k = 0; k < base.size(); ++k)
    art.swap_mismatch = std::max(
        art.swap_mismatch, std::max(std::abs(swapped[k].q - base[k].p),
                                    std::abs(swapped[k].p + base[k].q)));

  // Pinned audits: the flow must track the unitary evolution, unitaries must
  // pass the symplectic check and the dilation must fail it.
  if (art.worst_flow_residual > 1e-6)
    throw NumericError("hamiltonian flow deviates from the unitary evolution");
  if (art.worst_norm_drift > 1e-9 || art.bracket_defect > 1e-8 ||
      art.unitary_violation > 1e-6 || art.swap_mismatch > 1e-8)
    throw NumericError("phase-space audit out of tolerance");
  if (art.dilation_violation < 0.5)
    throw NumericError("negative control passed the symplectic audit");

  log << "flow residual " << format_double(art.worst_flow_residual)
      << ", bracket defect " << format_double(art.bracket_defect)
      << ", unitary violation " << format_double(art.unitary_violation)
      << ", dilation violation " << format_double(art.dilation_violation)
      << "\n";
  return art;
}

// --- dispatcher --------------------------------------------------------------------

namespace {

struct DirLock {
  explicit DirLock(const std::string& dir) : path(fs::path(dir) / ".lock") {
    if (fs::exists(path))
      throw InvalidArgument("output directory is locked: " + path.string());
    std::ofstream out(path);
    out << "running\n";
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path, ec);
  }
  fs::path path;
};

}  // namespace

int run(const RunRequest& req, std::ostream& log) {
  try {
    if (!is_subcommand(req.subcommand))
      throw InvalidArgument("unknown subcommand: " + req.subcommand);
    if (req.out_dir.empty())
      throw InvalidArgument("an output directory is required");
    Config cfg = load_config(req.subcommand, req.config_path, req.overrides);
    if (req.seed) cfg.set("run", "seed", std::to_string(*req.seed));
    if (!cfg.has("run", "seed")) cfg.set("run", "seed", "1");
    cfg.validate(schema_for(req.subcommand));

    fs::create_directories(req.out_dir);
    DirLock lock(req.out_dir);
    write_resolved_config(cfg, artifact(req.out_dir, "config.txt"));

    Manifest head{{"scenario", req.subcommand},
                  {"config-hash", cfg.hash_hex()},
                  {"seed", cfg.get("run", "seed")},
                  {"threads", std::to_string(req.threads)}};
    if (req.verbose)
      log << "running " << req.subcommand << " (config hash " << cfg.hash_hex()
          << ") into " << req.out_dir << "\n";

    Manifest body;
    int status = 0;
    if (req.subcommand == "evolve") {
      body = run_evolve(cfg, req.out_dir, req.threads, log).to_manifest();
    } else if (req.subcommand == "trajectories") {
      body = run_trajectories(cfg, req.out_dir, req.threads, log).to_manifest();
    } else if (req.subcommand == "double-slit") {
      body = run_double_slit(cfg, req.out_dir, req.threads, log).to_manifest();
    } else if (req.subcommand == "gauge-compare") {
      auto art = run_gauge_compare(cfg, req.out_dir, req.threads, log);
      body = art.to_manifest();
      if (!art.compare.restriction_ok) {
        log << "gauge failed the restriction certificate\n";
        status = 3;
      }
    } else if (req.subcommand == "hmm-build") {
      auto art = run_hmm_build(cfg, req.out_dir, req.threads, log);
      body = art.to_manifest();
      if (!art.certification.certified) {
        log << "model failed equivariance certification\n";
        status = 3;
      }
    } else if (req.subcommand == "shoemaker") {
      body = run_shoemaker(cfg, req.out_dir, log).to_manifest();
    } else if (req.subcommand == "phase-space") {
      body = run_phase_space(cfg, req.out_dir, req.threads, log).to_manifest();
    } else {  // selftest
      if (const auto scale = cfg.get("selftest", "scale"); scale != "full")
        throw InvalidArgument("selftest: unknown scale '" + scale +
                              "' (only 'full' exists)");
      auto results = selftest::run_all(req.out_dir, req.threads, log);
      bool all = true;
      for (const auto& r : results) {
        body.emplace_back(r.name, r.passed ? "pass" : "FAIL");
        all = all && r.passed;
      }
      if (!all) status = 3;
    }
    for (auto& [k, v] : body) head.emplace_back(k, v);
    write_manifest(head, artifact(req.out_dir, "manifest.txt"));
    return status;
  } catch (const InvalidArgument& e) {
    log << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return 1;
  } catch (const CertificationError& e) {
    log << "certification failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    log << "numeric failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace pw::scenario
