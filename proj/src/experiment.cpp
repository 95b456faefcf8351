#include "gridsense/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "gridsense/digest.hpp"
#include "gridsense/fixtures.hpp"

#ifndef GRIDSENSE_VERSION
#define GRIDSENSE_VERSION "0.0.0"
#endif

namespace gridsense {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string case_label(const std::string& name) {
  if (!bundled_case_text(name).empty()) return name;
  return fs::path(name).stem().string();
}

std::string join_ids(const std::vector<int>& ids, char sep = ' ') {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(ids[i]);
  }
  return out;
}

std::vector<int> external_ids(const GridCase& grid, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  for (std::size_t i : idx) out.push_back(grid.external_id(i));
  std::sort(out.begin(), out.end());
  return out;
}

bool is_subset(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  const std::set<std::size_t> sb(b.begin(), b.end());
  return std::all_of(a.begin(), a.end(), [&](std::size_t x) { return sb.count(x) > 0; });
}

class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    // Stale artifacts from an earlier run would be missing from the new manifest.
    for (const auto& entry : fs::directory_iterator(dir_)) {
      const auto ext = entry.path().extension();
      if (entry.is_regular_file() && (ext == ".csv" || ext == ".json")) fs::remove(entry.path());
    }
  }

  void write(const std::string& name, const std::string& content) {
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Config, "cannot write " + path.string());
    out << content;
    out.close();
    files_.push_back({name, sha256_hex(content), static_cast<std::uintmax_t>(content.size())});
  }

  void write_manifest(Command command, const ExperimentConfig& config,
                      const std::vector<std::pair<std::string, double>>& timings) {
    json m;
    m["tool"] = "gridsense";
    m["version"] = GRIDSENSE_VERSION;
    m["command"] = std::string(to_string(command));
    m["config"] = echo_config(config);
    json files = json::array();
    for (const auto& f : files_) files.push_back({{"file", f.file}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    m["files"] = files;
    json t = json::object();
    for (const auto& [k, v] : timings) t[k] = v;
    m["timings_s"] = t;
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    out << m.dump(2) << "\n";
  }

  const fs::path& path() const { return dir_; }
  const std::vector<ManifestEntry>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<ManifestEntry> files_;
};

void log_line(const RunOptions& options, const std::string& text) {
  if (options.log) *options.log << text << "\n" << std::flush;
}

json placement_json(const PlacementRecord& rec) {
  json j;
  j["case"] = rec.case_name;
  j["method"] = std::string(to_string(rec.method));
  j["operating_point"] = std::string(to_string(rec.operating_point));
  j["objective"] = rec.solution.objective;
  j["certificate"] = std::string(to_string(rec.solution.certificate));
  j["pmu_buses"] = rec.solution.pmu_buses;
  j["enumerated_optima"] = rec.optima;
  j["edge_count"] = rec.connectivity.edge_count();
  j["branch_count_target"] = rec.connectivity.branch_count_target;
  if (rec.connectivity.tau) j["tau"] = *rec.connectivity.tau;
  else j["tau"] = nullptr;
  j["tie_broken"] = rec.connectivity.tie_broken;
  j["asymmetry_norm"] = rec.asymmetry_norm;
  return j;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "report: missing input " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    rows.push_back(std::move(row));
  }
  return rows;
}

int run_parse(const ExperimentConfig& config, OutputDir& out, std::vector<std::pair<std::string, double>>& timings,
              const RunOptions& options) {
  std::ostringstream csv;
  csv << "case,buses,branches,declared_branches,generators,slack_bus,base_mva,negative_reactance_branches\n";
  for (const auto& name : config.cases) {
    const auto t0 = Clock::now();
    const GridCase grid = load_case(name);
    const std::string label = case_label(name);
    std::optional<std::size_t> declared;
    if (const auto text = bundled_case_text(name); !text.empty()) declared = declared_branch_count(text);
    out.write("case_" + label + ".json", to_json(grid) + "\n");
    csv << label << ',' << grid.n_buses << ',' << grid.n_branches << ','
        << (declared ? std::to_string(*declared) : std::string()) << ',' << grid.generators.size() << ','
        << grid.external_id(grid.slack_bus) << ',' << format_double(grid.base_mva) << ','
        << grid.negative_reactance_branches.size() << '\n';
    timings.emplace_back("parse_" + label, seconds_since(t0));
    log_line(options, "parsed " + label + ": " + std::to_string(grid.n_buses) + " buses, " +
                          std::to_string(grid.n_branches) + " branches");
  }
  out.write("parse_summary.csv", csv.str());
  return kExitOk;
}

int run_place(const ExperimentConfig& config, OutputDir& out, std::vector<std::pair<std::string, double>>& timings,
              const RunOptions& options) {
  int code = kExitOk;
  std::ostringstream csv;
  csv << "case,buses,branches,method,operating_point,pmus,certificate,pmu_buses,tau,asymmetry_norm,tie_broken\n";
  for (const auto& name : config.cases) {
    const GridCase grid = load_case(name);
    const std::string label = case_label(name);
    for (ConnectivityMethod method : config.placement.methods) {
      PlacementRecord rec =
          place_case(grid, method, config.placement.operating_point, config.power_flow, config.placement.solver);
      rec.case_name = label;
      out.write("placement_" + label + "_" + std::string(to_string(method)) + ".json",
                placement_json(rec).dump(2) + "\n");
      csv << label << ',' << grid.n_buses << ',' << grid.n_branches << ',' << to_string(method) << ','
          << to_string(rec.operating_point) << ',' << rec.solution.objective << ','
          << to_string(rec.solution.certificate) << ',' << join_ids(rec.solution.pmu_buses) << ','
          << (rec.connectivity.tau ? format_double(*rec.connectivity.tau) : std::string()) << ','
          << format_double(rec.asymmetry_norm) << ',' << (rec.connectivity.tie_broken ? "true" : "false") << '\n';
      timings.emplace_back("place_" + label + "_" + std::string(to_string(method)), rec.seconds);
      log_line(options, "placed " + label + " " + std::string(to_string(method)) + ": " +
                            std::to_string(rec.solution.objective) + " PMUs (" +
                            std::string(to_string(rec.solution.certificate)) + ")");
      if (rec.solution.certificate == Certificate::FeasibleOnly) code = kExitTimeout;
    }
  }
  out.write("placement_summary.csv", csv.str());
  return code;
}

int run_estimate(const ExperimentConfig& config, OutputDir& out,
                 std::vector<std::pair<std::string, double>>& timings, const RunOptions& options) {
  std::ostringstream summary;
  summary << "case,scenario,mode,transmit_buses,mean_eps,mean_p_index,reps,seed\n";
  for (const auto& name : config.cases) {
    const GridCase grid = load_case(name);
    const std::string label = case_label(name);
    const auto mode = config.placement.operating_point;
    const PlacementRecord topo =
        place_case(grid, ConnectivityMethod::Topological, mode, config.power_flow, config.placement.solver);
    const PlacementRecord elec =
        place_case(grid, ConnectivityMethod::Electrical, mode, config.power_flow, config.placement.solver);
    const auto modes = estimator_modes(grid, config.estimation, topo.solution, elec.solution, elec.connectivity);
    for (ScenarioKind kind : config.estimation.scenarios) {
      ScenarioConfig sc = config.estimation.scenario;
      sc.scenario = kind;
      sc.power_flow = config.power_flow;
      const auto t0 = Clock::now();
      const auto runs = run_scenario(grid, modes, sc, options.policy);
      const std::string tag = label + "_" + std::string(to_string(kind));
      timings.emplace_back("estimate_" + tag, seconds_since(t0));

      std::ostringstream csv;
      csv << "t,mode,eps,p_index,p_index_degenerate\n";
      for (std::size_t t = 0; t < sc.steps; ++t)
        for (const auto& run : runs)
          csv << t + 1 << ',' << run.mode << ',' << format_double(run.eps_t[static_cast<Eigen::Index>(t)]) << ','
              << format_double(run.p_index_t[static_cast<Eigen::Index>(t)]) << ','
              << (run.p_index_degenerate[t] ? "true" : "false") << '\n';
      out.write("estimation_" + tag + ".csv", csv.str());

      for (std::size_t m = 0; m < runs.size(); ++m) {
        std::vector<int> transmit;
        if (modes[m].pmu) transmit = external_ids(grid, modes[m].pmu->transmit_buses);
        summary << label << ',' << to_string(kind) << ',' << runs[m].mode << ',' << join_ids(transmit) << ','
                << format_double(runs[m].mean_eps()) << ',' << format_double(runs[m].mean_p_index()) << ','
                << runs[m].reps << ',' << runs[m].seed << '\n';
      }
      log_line(options, "estimated " + tag + " (" + std::to_string(sc.reps) + " reps)");
    }
  }
  out.write("estimation_summary.csv", summary.str());
  return kExitOk;
}

std::string alpha_sweep_id(const std::vector<double>& alphas) {
  std::string text;
  for (double a : alphas) text += format_double(a) + ";";
  return "sweep-" + std::to_string(alphas.size()) + "-" + sha256_hex(text).substr(0, 8);
}

int run_detect(const ExperimentConfig& config, OutputDir& out, std::vector<std::pair<std::string, double>>& timings,
               const RunOptions& options) {
  std::ostringstream summary;
  summary << "case,variant,placement_mode,transmit_buses,observed_branches,observed_buses,pd_final,mean_statistic_final\n";
  const DetectionConfig& dc = config.detection.detection;
  const auto alphas = dc.resolved_alphas();
  const std::string sweep = alpha_sweep_id(alphas);
  for (const auto& name : config.cases) {
    const GridCase grid = load_case(name);
    const std::string label = case_label(name);
    const auto mode = config.placement.operating_point;
    const PlacementRecord topo =
        place_case(grid, ConnectivityMethod::Topological, mode, config.power_flow, config.placement.solver);
    const PlacementRecord elec =
        place_case(grid, ConnectivityMethod::Electrical, mode, config.power_flow, config.placement.solver);
    const DetectionPlan plan = detection_plan(grid, config.detection, topo.solution, elec.solution, elec.connectivity);
    const auto t0 = Clock::now();
    const auto traces = pd_vs_time(grid, plan.placements, dc, options.policy);
    timings.emplace_back("detect_" + label, seconds_since(t0));

    json meta;
    meta["case"] = label;
    meta["k_branches"] = grid.n_branches;
    meta["change"] = dc.change_fraction;
    meta["frame_len"] = dc.frame_len;
    meta["reps"] = dc.reps;
    meta["seed"] = dc.seed;
    meta["sigma_z2"] = dc.sigma_z2;
    meta["sigma_x2"] = dc.sigma_x2;
    meta["alpha_sweep_id"] = sweep;
    meta["alphas"] = alphas;
    meta["steps"] = traces.empty() ? std::vector<std::size_t>{} : traces.front().steps;
    json placements = json::array();
    for (const auto& tr : traces)
      placements.push_back({{"placement_mode", tr.name},
                            {"transmit_buses", tr.transmit_bus_ids},
                            {"observed_branches", tr.observed_branches},
                            {"observed_buses", tr.observed_buses}});
    meta["placements"] = placements;
    out.write("detection_" + label + ".json", meta.dump(2) + "\n");

    for (const auto& [variant, pair] : plan.variants) {
      std::ostringstream csv;
      csv << "t,placement_mode,mean_pd,n_reps,alpha_sweep_id,non_asymptotic\n";
      for (std::size_t which : {pair.first, pair.second}) {
        const DetectionTrace& tr = traces[which];
        for (std::size_t s = 0; s < tr.steps.size(); ++s)
          csv << tr.steps[s] << ',' << tr.name << ',' << format_double(tr.pd_t[static_cast<Eigen::Index>(s)]) << ','
              << tr.reps << ',' << sweep << ',' << (tr.non_asymptotic[s] ? "true" : "false") << '\n';
      }
      out.write("detection_" + label + "_" + variant + ".csv", csv.str());
      for (std::size_t which : {pair.first, pair.second}) {
        const DetectionTrace& tr = traces[which];
        const auto last = static_cast<Eigen::Index>(tr.steps.size() - 1);
        summary << label << ',' << variant << ',' << tr.name << ',' << join_ids(tr.transmit_bus_ids) << ','
                << tr.observed_branches << ',' << tr.observed_buses << ',' << format_double(tr.pd_t[last]) << ','
                << format_double(tr.mean_statistic[last]) << '\n';
      }
    }
    log_line(options, "detection " + label + " (" + std::to_string(dc.reps) + " reps)");
  }
  out.write("detection_summary.csv", summary.str());
  return kExitOk;
}

int run_report(const ExperimentConfig& config, OutputDir& out, const RunOptions& options) {
  const fs::path place = config.output_dir / "place" / "placement_summary.csv";
  const fs::path estimate = config.output_dir / "estimate" / "estimation_summary.csv";
  if (!fs::exists(place) && !fs::exists(estimate))
    throw Error(ErrorKind::Config, "report: run 'place' or 'estimate' into " + config.output_dir.string() + " first");

  if (fs::exists(place)) {
    // case -> (buses, method -> count)
    std::map<std::string, std::pair<std::string, std::map<std::string, std::string>>> table;
    std::vector<std::string> order;
    const auto rows = read_csv(place);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.size() < 7) continue;
      if (!table.count(r[0])) order.push_back(r[0]);
      table[r[0]].first = r[1];
      table[r[0]].second[r[3]] = r[5];
    }
    std::ostringstream csv;
    csv << "case,buses,topological,electrical\n";
    for (const auto& c : order) {
      auto& [buses, counts] = table[c];
      csv << c << ',' << buses << ',' << counts["topological"] << ',' << counts["electrical"] << '\n';
    }
    out.write("table_placement.csv", csv.str());
  }

  if (fs::exists(estimate)) {
    const std::vector<std::string> modes{"wls", "wls_pmu_topology", "wls_pmu_es_scenario1", "wls_pmu_es_scenario2"};
    std::map<std::pair<std::string, std::string>, std::map<std::string, std::pair<std::string, std::string>>> table;
    std::vector<std::pair<std::string, std::string>> order;
    const auto rows = read_csv(estimate);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.size() < 6) continue;
      const auto key = std::make_pair(r[0], r[1]);
      if (!table.count(key)) order.push_back(key);
      table[key][r[2]] = {r[4], r[5]};
    }
    std::ostringstream eps, pidx;
    eps << "case,scenario";
    pidx << "case,scenario";
    for (const auto& m : modes) {
      eps << ",eps_x1e4_" << m;
      pidx << ",p_index_" << m;
    }
    eps << '\n';
    pidx << '\n';
    for (const auto& key : order) {
      eps << key.first << ',' << key.second;
      pidx << key.first << ',' << key.second;
      for (const auto& m : modes) {
        const auto& cell = table[key][m];
        eps << ',' << (cell.first.empty() ? std::string() : format_double(std::stod(cell.first) * 1e4));
        pidx << ',' << cell.second;
      }
      eps << '\n';
      pidx << '\n';
    }
    out.write("table_estimation_error.csv", eps.str());
    out.write("table_performance_index.csv", pidx.str());
  }
  log_line(options, "report written to " + out.path().string());
  return kExitOk;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::MalformedSection:
    case ErrorKind::BadNumeric:
    case ErrorKind::MissingSection:
    case ErrorKind::NoSlackBus:
    case ErrorKind::MultipleSlackBuses:
    case ErrorKind::DanglingBranch:
    case ErrorKind::IslandedBus:
    case ErrorKind::SelfLoop:
      return kExitConfig;
    case ErrorKind::Timeout:
      return kExitTimeout;
    default:
      return kExitNumerical;
  }
}

std::string_view to_string(Command command) {
  switch (command) {
    case Command::Parse: return "parse";
    case Command::Place: return "place";
    case Command::Estimate: return "estimate";
    case Command::Detect: return "detect";
    case Command::Report: return "report";
  }
  return "parse";
}

std::optional<Command> parse_command(std::string_view text) {
  for (Command c : {Command::Parse, Command::Place, Command::Estimate, Command::Detect, Command::Report})
    if (to_string(c) == text) return c;
  return std::nullopt;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, r.ptr);
}

ConnectivityMatrix connectivity_for(const GridCase& grid, ConnectivityMethod method, OperatingPointMode mode,
                                    const PowerFlowOptions& power_flow, double* asymmetry_norm) {
  if (asymmetry_norm) *asymmetry_norm = 0.0;
  if (method == ConnectivityMethod::Topological) return topological_connectivity(grid);
  const AdmittanceMatrix ybus = build_ybus(grid);
  OperatingPoint op;
  if (mode == OperatingPointMode::Flat) {
    op = flat_operating_point(grid);
  } else {
    op = solve_power_flow(grid, ybus, power_flow);
    if (!op.converged)
      throw Error(ErrorKind::NotConverged, grid.name + ": power flow did not converge in " +
                                               std::to_string(op.iterations) + " iterations");
  }
  const ResistanceDistanceMatrix e = resistance_distance(jacobian_p_theta(ybus, op), grid.slack_bus);
  if (asymmetry_norm) *asymmetry_norm = e.asymmetry_norm;
  return electrical_connectivity(e, grid.n_branches);
}

PlacementRecord place_case(const GridCase& grid, ConnectivityMethod method, OperatingPointMode mode,
                           const PowerFlowOptions& power_flow, const PlacementOptions& options) {
  const auto t0 = Clock::now();
  PlacementRecord rec;
  rec.case_name = grid.name;
  rec.method = method;
  rec.operating_point = mode;
  rec.connectivity = connectivity_for(grid, method, mode, power_flow, &rec.asymmetry_norm);
  const PlacementProblem problem = make_problem(rec.connectivity, grid);
  rec.solution = solve_placement(problem, options);
  if (rec.solution.certificate == Certificate::ProvedOptimal && options.alternate_limit > 0) {
    for (const auto& cover : enumerate_optima(problem, rec.solution.objective, options.alternate_limit))
      rec.optima.push_back(external_ids(grid, cover));
  } else {
    rec.optima.push_back(rec.solution.pmu_buses);
  }
  rec.seconds = seconds_since(t0);
  return rec;
}

std::vector<std::size_t> priority_subset(const ConnectivityMatrix& electrical, const std::vector<std::size_t>& pmus,
                                         std::size_t k) {
  std::vector<std::pair<int, std::size_t>> ranked;
  for (std::size_t b : pmus) ranked.push_back({-(electrical.c.row(static_cast<Eigen::Index>(b)).sum() - 1), b});
  std::sort(ranked.begin(), ranked.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) out.push_back(ranked[i].second);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> to_internal(const GridCase& grid, const std::vector<int>& ids, std::string_view field) {
  std::vector<std::size_t> out;
  for (int id : ids) {
    try {
      out.push_back(grid.internal_index(id));
    } catch (const std::exception&) {
      throw Error(ErrorKind::Config, std::string(field) + ": bus " + std::to_string(id) + " is not in " + grid.name);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<EstimatorMode> estimator_modes(const GridCase& grid, const EstimationSettings& settings,
                                           const PlacementSolution& topological, const PlacementSolution& electrical,
                                           const ConnectivityMatrix& electrical_graph) {
  auto plan = [&](std::vector<std::size_t> pmus, std::vector<std::size_t> transmit) {
    PmuPlan p;
    p.pmu_buses = std::move(pmus);
    p.transmit_buses = std::move(transmit);
    p.v_mag_sigma = settings.scenario.pmu_magnitude_fraction;
    p.angle_sigma_deg = settings.scenario.pmu_angle_sigma_deg;
    return p;
  };
  const std::vector<std::size_t> elec = settings.electrical_pmus.empty()
                                            ? electrical.pmu_indices
                                            : to_internal(grid, settings.electrical_pmus, "estimation.electrical_pmus");
  std::vector<std::size_t> es1;
  if (settings.scenario1_transmit.empty()) {
    es1 = priority_subset(electrical_graph, elec, std::min(topological.pmu_indices.size(), elec.size()));
  } else {
    es1 = to_internal(grid, settings.scenario1_transmit, "estimation.scenario1_transmit");
    if (!is_subset(es1, elec))
      throw Error(ErrorKind::Config, "estimation.scenario1_transmit: every bus must carry an electrical PMU");
  }
  std::vector<EstimatorMode> modes;
  modes.push_back({"wls", std::nullopt});
  modes.push_back({"wls_pmu_topology", plan(topological.pmu_indices, topological.pmu_indices)});
  modes.push_back({"wls_pmu_es_scenario1", plan(elec, es1)});
  modes.push_back({"wls_pmu_es_scenario2", plan(elec, elec)});
  return modes;
}

DetectionPlan detection_plan(const GridCase& grid, const DetectionSettings& settings,
                             const PlacementSolution& topological, const PlacementSolution& electrical,
                             const ConnectivityMatrix& electrical_graph) {
  const auto topo = settings.topological_transmit.empty()
                        ? topological.pmu_indices
                        : to_internal(grid, settings.topological_transmit, "detection.topological_transmit");
  const auto full = settings.electrical_transmit.empty()
                        ? electrical.pmu_indices
                        : to_internal(grid, settings.electrical_transmit, "detection.electrical_transmit");
  auto subset = [&](const std::vector<int>& given, std::size_t k, const char* field) {
    if (given.empty()) return priority_subset(electrical_graph, full, std::max<std::size_t>(k, 1));
    auto s = to_internal(grid, given, field);
    if (!is_subset(s, full))
      throw Error(ErrorKind::Config, std::string(field) + ": every bus must be in detection.electrical_transmit");
    return s;
  };

  DetectionPlan plan;
  auto add = [&](const std::string& name, std::vector<std::size_t> buses) {
    for (std::size_t i = 0; i < plan.placements.size(); ++i)
      if (plan.placements[i].name == name) return i;
    plan.placements.push_back({name, std::move(buses)});
    return plan.placements.size() - 1;
  };
  for (const auto& variant : settings.variants) {
    const std::size_t t = add("topological", topo);
    std::size_t e = 0;
    if (variant == "full") e = add("electrical_full", full);
    else if (variant == "matched")
      e = add("electrical_matched", subset(settings.matched_transmit, topo.size(), "detection.matched_transmit"));
    else if (variant == "reduced")
      e = add("electrical_reduced",
              subset(settings.reduced_transmit, topo.size() > 1 ? topo.size() - 1 : 1, "detection.reduced_transmit"));
    else throw Error(ErrorKind::Config, "detection.variants: unknown variant '" + variant + "'");
    plan.variants.push_back({variant, {t, e}});
  }
  return plan;
}

CommandOutcome run_command(Command command, const ExperimentConfig& config, const RunOptions& options) {
  OutputDir out(config.output_dir / std::string(to_string(command)));
  std::vector<std::pair<std::string, double>> timings;
  const auto t0 = Clock::now();
  int code = kExitOk;
  switch (command) {
    case Command::Parse: code = run_parse(config, out, timings, options); break;
    case Command::Place: code = run_place(config, out, timings, options); break;
    case Command::Estimate: code = run_estimate(config, out, timings, options); break;
    case Command::Detect: code = run_detect(config, out, timings, options); break;
    case Command::Report: code = run_report(config, out, options); break;
  }
  timings.emplace_back("total", seconds_since(t0));
  out.write_manifest(command, config, timings);
  return {code, out.path(), out.files()};
}

}  // namespace gridsense
