// Command line front end; reaches the engine only through the C API.
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pilotwave.h"

namespace {

struct SubOptions {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 1;
  bool verbose = false;
  bool print_config = false;
  std::vector<std::string> sets;
  std::int64_t years = 0;
  std::int64_t runs = 0;
  CLI::App* app = nullptr;
};

const std::map<std::string, std::string> kBlurbs = {
    {"evolve", "evolve a wave function and store density snapshots"},
    {"trajectories", "guide a Born-sampled particle ensemble along the flow"},
    {"double-slit", "two-slit ensemble statistics from single-landing runs"},
    {"gauge-compare", "compare guidance with and without a restricted gauge"},
    {"hmm-build", "build a guided latent model for a prescribed density"},
    {"shoemaker", "hidden-clock ledger machine and its Markov witnesses"},
    {"phase-space", "phase-space reading of finite quantum systems"},
    {"selftest", "run the built-in acceptance battery"},
};

void print_line(const char* line, void*) {
  std::printf("%s\n", line);
  std::fflush(stdout);
}

int run_subcommand(const std::string& name, const SubOptions& o) {
  if (o.print_config) {
    char* text = pw_default_config_text(name.c_str());
    if (text == nullptr) {
      std::cerr << "error: " << pw_last_error() << "\n";
      return PW_CONFIG_ERROR;
    }
    std::fputs(text, stdout);
    pw_text_free(text);
    return PW_OK;
  }
  if (o.out.empty()) {
    std::cerr << "error: --out is required (or use --print-config)\n";
    return PW_CONFIG_ERROR;
  }

  pw_request* req = pw_request_new(name.c_str(), o.out.c_str());
  if (req == nullptr) {
    std::cerr << "error: " << pw_last_error() << "\n";
    return PW_USAGE_ERROR;
  }
  auto given = [&o](const char* flag) {
    const CLI::Option* opt = o.app->get_option_no_throw(flag);
    return opt != nullptr && opt->count() > 0;
  };
  if (!o.config.empty()) pw_request_set_config_file(req, o.config.c_str());
  if (given("--seed")) pw_request_set_seed(req, o.seed);
  pw_request_set_threads(req, o.threads);
  pw_request_set_verbose(req, o.verbose ? 1 : 0);
  for (const auto& assignment : o.sets)
    pw_request_add_override(req, assignment.c_str());
  if (given("--years"))
    pw_request_add_override(
        req, ("shoemaker.years=" + std::to_string(o.years)).c_str());
  if (given("--runs"))
    pw_request_add_override(
        req, ("double_slit.runs=" + std::to_string(o.runs)).c_str());
  pw_request_set_logger(req, print_line, nullptr);

  const pw_status status = pw_request_run(req);
  if (status == PW_OK) {
    std::printf("wrote %s/manifest.txt\n", o.out.c_str());
  } else {
    std::cerr << "error (" << pw_status_name(status)
              << "): " << pw_last_error() << "\n";
  }
  pw_request_free(req);
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic pilot-wave scenarios"};
  app.set_version_flag("--version", pw_version());
  app.require_subcommand(1);

  std::map<std::string, SubOptions> options;
  for (int i = 0; i < pw_subcommand_count(); ++i) {
    const std::string name = pw_subcommand_name(i);
    const auto blurb = kBlurbs.find(name);
    CLI::App* sub =
        app.add_subcommand(name, blurb == kBlurbs.end() ? "" : blurb->second);
    SubOptions& o = options[name];
    o.app = sub;
    sub->add_option("--config", o.config, "configuration file overlaying the defaults")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory for artifacts");
    sub->add_option("--seed", o.seed, "random seed (overrides [run] seed)");
    sub->add_option("--threads", o.threads, "worker threads for ensembles")
        ->check(CLI::PositiveNumber);
    sub->add_flag("-v,--verbose", o.verbose, "log the run banner");
    sub->add_flag("--print-config", o.print_config,
                  "print the scenario's full default configuration and exit");
    sub->add_option("--set", o.sets,
                    "override one key, as section.key=value (repeatable)");
    if (name == "shoemaker")
      sub->add_option("--years", o.years, "trace horizon in calendar years");
    if (name == "double-slit")
      sub->add_option("--runs", o.runs, "number of single-particle runs");
  }

  CLI11_PARSE(app, argc, argv);

  for (auto& [name, o] : options)
    if (o.app->parsed()) return run_subcommand(name, o);
  return PW_USAGE_ERROR;
}
