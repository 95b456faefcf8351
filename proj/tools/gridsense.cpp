// gridsense: PMU placement, state estimation and fault detection experiments.

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gridsense/config.hpp"
#include "gridsense/error.hpp"
#include "gridsense/experiment.hpp"
#include "gridsense/fixtures.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::vector<std::string> cases;
  std::string out;
  bool flat_start = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> pf_tol;
  std::optional<int> pf_max_iter;
  bool serial = false;
  bool quiet = false;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config_path, "Experiment config file (INI)");
  sub->add_option("--case", o.cases, "Case name or MATPOWER file; repeatable")->delimiter(',');
  sub->add_option("--out", o.out, "Output directory");
  sub->add_flag("--flat-start", o.flat_start, "Evaluate the electrical structure at the flat operating point");
  sub->add_option("--seed", o.seed, "Seed for estimation and detection");
  sub->add_option("--pf-tol", o.pf_tol, "Power-flow mismatch tolerance (p.u.)");
  sub->add_option("--pf-max-iter", o.pf_max_iter, "Power-flow iteration limit");
  sub->add_flag("--serial", o.serial, "Run Monte Carlo loops on one thread");
  sub->add_flag("-q,--quiet", o.quiet, "Suppress progress output");
}

gridsense::ExperimentConfig resolve(const Overrides& o) {
  using namespace gridsense;
  ExperimentConfig c = o.config_path.empty() ? parse_config("") : load_config(o.config_path);
  if (const char* env = std::getenv("GRIDSENSE_OUTPUT_DIR"); env && *env) c.output_dir = env;
  if (!o.out.empty()) c.output_dir = o.out;
  if (!o.cases.empty()) {
    for (const auto& name : o.cases)
      if (bundled_case_text(name).empty() && !std::filesystem::exists(name))
        throw Error(ErrorKind::Config, "--case: unknown case '" + name + "'");
    c.cases = o.cases;
  }
  if (o.flat_start) c.placement.operating_point = OperatingPointMode::Flat;
  if (o.seed) {
    c.estimation.scenario.seed = *o.seed;
    c.detection.detection.seed = *o.seed;
  }
  if (o.pf_tol) {
    if (!(*o.pf_tol > 0.0)) throw Error(ErrorKind::Config, "--pf-tol: must be positive");
    c.power_flow.tolerance = *o.pf_tol;
  }
  if (o.pf_max_iter) {
    if (*o.pf_max_iter < 1) throw Error(ErrorKind::Config, "--pf-max-iter: must be at least 1");
    c.power_flow.max_iterations = *o.pf_max_iter;
  }
  c.estimation.scenario.power_flow = c.power_flow;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridsense: PMU placement, state estimation and fault detection experiments"};
  app.require_subcommand(1);
  Overrides o;
  const std::vector<std::pair<gridsense::Command, std::string>> commands{
      {gridsense::Command::Parse, "Validate cases and dump them as JSON"},
      {gridsense::Command::Place, "Minimum PMU placement per case and method"},
      {gridsense::Command::Estimate, "Monte Carlo state estimation with and without PMUs"},
      {gridsense::Command::Detect, "Detection probability against frame length"},
      {gridsense::Command::Report, "Summary tables from place/estimate outputs"},
  };
  std::vector<std::pair<CLI::App*, gridsense::Command>> subs;
  for (const auto& [cmd, help] : commands) {
    CLI::App* sub = app.add_subcommand(std::string(gridsense::to_string(cmd)), help);
    add_common(sub, o);
    subs.emplace_back(sub, cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : gridsense::kExitConfig;
  }

  try {
    gridsense::Command command = gridsense::Command::Parse;
    for (const auto& [sub, cmd] : subs)
      if (sub->parsed()) command = cmd;
    const gridsense::ExperimentConfig config = resolve(o);
    gridsense::RunOptions options;
    options.policy = o.serial ? gridsense::ExecutionPolicy::Serial : gridsense::ExecutionPolicy::Parallel;
    options.log = o.quiet ? nullptr : &std::cerr;
    const auto outcome = gridsense::run_command(command, config, options);
    if (!o.quiet) {
      for (const auto& f : outcome.files) std::cout << f.sha256 << "  " << (outcome.directory / f.file).string() << "\n";
      std::cout << (outcome.directory / "manifest.json").string() << "\n";
    }
    if (outcome.exit_code == gridsense::kExitTimeout)
      std::cerr << "gridsense: placement budget exhausted; feasible covers written\n";
    return outcome.exit_code;
  } catch (const gridsense::Error& e) {
    std::cerr << "gridsense: " << gridsense::to_string(e.kind()) << ": " << e.what() << "\n";
    return gridsense::exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "gridsense: " << e.what() << "\n";
    return gridsense::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "gridsense: " << e.what() << "\n";
    return gridsense::kExitNumerical;
  }
}
