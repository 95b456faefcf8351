#include "gridsense/config.hpp"

#include <charconv>
#include <fstream>
#include <list>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "gridsense/error.hpp"
#include "gridsense/fixtures.hpp"

namespace gridsense {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"run", {"cases", "output_dir"}},
      {"power_flow", {"tolerance", "max_iterations", "flat_start"}},
      {"placement", {"methods", "operating_point", "time_budget_s", "alternate_limit"}},
      {"estimation",
       {"scenarios", "steps", "reps", "seed", "event_step", "v_sigma", "power_sigma", "sigma_floor",
        "pmu_magnitude_sigma", "pmu_angle_sigma_deg", "noise_scale", "load_trend", "load_fluctuation",
        "bad_data_sigmas", "sudden_load_fraction", "tolerance", "max_iterations", "electrical_pmus",
        "scenario1_transmit"}},
      {"detection",
       {"change", "frame_len", "alphas", "steps", "reps", "seed", "sigma_z2", "sigma_x2", "gradient_tolerance",
        "max_iterations", "variants", "topological_transmit", "electrical_transmit", "matched_transmit",
        "reduced_transmit"}},
  };
  return keys;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::Config, field + ": " + what);
}

template <typename T>
T parse_number(const std::string& field, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) fail(field, "cannot read '" + text + "' as a number");
  return value;
}

bool parse_bool(const std::string& field, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  fail(field, "expected true or false, got '" + text + "'");
}

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>)
      out += fmt(v[i]);
    else if constexpr (std::is_arithmetic_v<T>)
      out += std::to_string(v[i]);
    else
      out += std::string(v[i]);
  }
  return out;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  const std::string* get(const std::string& section, const std::string& key) const {
    const auto s = tree_.find(section);
    if (s == tree_.not_found()) return nullptr;
    const auto k = s->second.find(key);
    if (k == s->second.not_found()) return nullptr;
    cache_.push_back(trim(k->second.data()));
    return &cache_.back();
  }

  template <typename T>
  void number(const std::string& section, const std::string& key, T& out) const {
    if (const auto* v = get(section, key)) out = parse_number<T>(section + "." + key, *v);
  }

  void flag(const std::string& section, const std::string& key, bool& out) const {
    if (const auto* v = get(section, key)) out = parse_bool(section + "." + key, *v);
  }

  template <typename T>
  void numbers(const std::string& section, const std::string& key, std::vector<T>& out) const {
    if (const auto* v = get(section, key)) {
      out.clear();
      for (const auto& item : split_list(*v)) out.push_back(parse_number<T>(section + "." + key, item));
    }
  }

  void strings(const std::string& section, const std::string& key, std::vector<std::string>& out) const {
    if (const auto* v = get(section, key)) out = split_list(*v);
  }

 private:
  const pt::ptree& tree_;
  mutable std::list<std::string> cache_;
};

}  // namespace

std::string_view to_string(OperatingPointMode mode) { return mode == OperatingPointMode::Solved ? "solved" : "flat"; }

ExperimentConfig parse_config(std::string_view text, std::string_view origin) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorKind::Config, std::string(origin) + ":" + std::to_string(e.line()) + ": " + e.message());
  }

  const auto& keys = known_keys();
  for (const auto& [section, body] : tree) {
    if (body.empty()) fail(section, "key outside any section");
    const auto known = keys.find(section);
    if (known == keys.end()) fail(section, "unknown section");
    for (const auto& [key, value] : body)
      if (!known->second.count(key)) fail(section + "." + key, "unknown key");
  }

  ExperimentConfig c;
  const Reader r(tree);

  r.strings("run", "cases", c.cases);
  if (c.cases.empty()) fail("run.cases", "no case given");
  for (const auto& name : c.cases) {
    const bool bundled = !bundled_case_text(name).empty();
    if (!bundled && !std::filesystem::exists(name)) fail("run.cases", "unknown case '" + name + "'");
  }
  if (const auto* v = r.get("run", "output_dir")) {
    if (v->empty()) fail("run.output_dir", "empty path");
    c.output_dir = *v;
  }

  r.number("power_flow", "tolerance", c.power_flow.tolerance);
  r.number("power_flow", "max_iterations", c.power_flow.max_iterations);
  r.flag("power_flow", "flat_start", c.power_flow.flat_start);
  if (!(c.power_flow.tolerance > 0.0)) fail("power_flow.tolerance", "must be positive");
  if (c.power_flow.max_iterations < 1) fail("power_flow.max_iterations", "must be at least 1");

  std::vector<std::string> methods;
  r.strings("placement", "methods", methods);
  if (r.get("placement", "methods")) {
    c.placement.methods.clear();
    for (const auto& m : methods) {
      if (m == "topological") c.placement.methods.push_back(ConnectivityMethod::Topological);
      else if (m == "electrical") c.placement.methods.push_back(ConnectivityMethod::Electrical);
      else fail("placement.methods", "unknown method '" + m + "'");
    }
    if (c.placement.methods.empty()) fail("placement.methods", "no method given");
  }
  if (const auto* v = r.get("placement", "operating_point")) {
    if (*v == "solved") c.placement.operating_point = OperatingPointMode::Solved;
    else if (*v == "flat") c.placement.operating_point = OperatingPointMode::Flat;
    else fail("placement.operating_point", "expected solved or flat, got '" + *v + "'");
  }
  double budget = static_cast<double>(c.placement.solver.time_budget.count()) / 1000.0;
  r.number("placement", "time_budget_s", budget);
  if (!(budget > 0.0)) fail("placement.time_budget_s", "must be positive");
  c.placement.solver.time_budget = std::chrono::milliseconds(static_cast<long long>(budget * 1000.0));
  r.number("placement", "alternate_limit", c.placement.solver.alternate_limit);

  auto& est = c.estimation;
  std::vector<std::string> scenarios;
  r.strings("estimation", "scenarios", scenarios);
  if (r.get("estimation", "scenarios")) {
    est.scenarios.clear();
    for (const auto& s : scenarios) {
      const auto kind = parse_scenario(s);
      if (!kind) fail("estimation.scenarios", "unknown scenario '" + s + "'");
      est.scenarios.push_back(*kind);
    }
    if (est.scenarios.empty()) fail("estimation.scenarios", "no scenario given");
  }
  auto& sc = est.scenario;
  r.number("estimation", "steps", sc.steps);
  r.number("estimation", "reps", sc.reps);
  r.number("estimation", "seed", sc.seed);
  if (const auto* v = r.get("estimation", "event_step"); v && !v->empty())
    sc.event_step = parse_number<std::size_t>("estimation.event_step", *v);
  r.number("estimation", "v_sigma", sc.v_sigma_fraction);
  r.number("estimation", "power_sigma", sc.power_sigma_fraction);
  r.number("estimation", "sigma_floor", sc.sigma_floor);
  r.number("estimation", "pmu_magnitude_sigma", sc.pmu_magnitude_fraction);
  r.number("estimation", "pmu_angle_sigma_deg", sc.pmu_angle_sigma_deg);
  r.number("estimation", "noise_scale", sc.noise_scale);
  r.number("estimation", "load_trend", sc.load_trend);
  r.number("estimation", "load_fluctuation", sc.load_fluctuation);
  r.number("estimation", "bad_data_sigmas", sc.bad_data_sigmas);
  r.number("estimation", "sudden_load_fraction", sc.sudden_load_fraction);
  r.number("estimation", "tolerance", sc.wls.tolerance);
  r.number("estimation", "max_iterations", sc.wls.max_iterations);
  r.numbers("estimation", "electrical_pmus", est.electrical_pmus);
  r.numbers("estimation", "scenario1_transmit", est.scenario1_transmit);
  sc.power_flow = c.power_flow;
  if (sc.steps == 0) fail("estimation.steps", "must be positive");
  if (sc.reps == 0) fail("estimation.reps", "must be positive");
  if (sc.event_step && (*sc.event_step < 1 || *sc.event_step > sc.steps))
    fail("estimation.event_step", "must lie in 1..steps");
  if (!(sc.sigma_floor > 0.0)) fail("estimation.sigma_floor", "must be positive");
  if (sc.noise_scale < 0.0) fail("estimation.noise_scale", "must be nonnegative");
  if (!(sc.wls.tolerance > 0.0)) fail("estimation.tolerance", "must be positive");
  if (sc.wls.max_iterations < 1) fail("estimation.max_iterations", "must be at least 1");

  auto& det = c.detection;
  auto& dc = det.detection;
  r.number("detection", "change", dc.change_fraction);
  r.number("detection", "frame_len", dc.frame_len);
  r.numbers("detection", "alphas", dc.alphas);
  r.numbers("detection", "steps", dc.steps);
  r.number("detection", "reps", dc.reps);
  r.number("detection", "seed", dc.seed);
  r.number("detection", "sigma_z2", dc.sigma_z2);
  r.number("detection", "sigma_x2", dc.sigma_x2);
  r.number("detection", "gradient_tolerance", dc.optimizer.gradient_tolerance);
  r.number("detection", "max_iterations", dc.optimizer.max_iterations);
  r.strings("detection", "variants", det.variants);
  r.numbers("detection", "topological_transmit", det.topological_transmit);
  r.numbers("detection", "electrical_transmit", det.electrical_transmit);
  r.numbers("detection", "matched_transmit", det.matched_transmit);
  r.numbers("detection", "reduced_transmit", det.reduced_transmit);
  if (dc.frame_len == 0) fail("detection.frame_len", "must be positive");
  if (dc.reps == 0) fail("detection.reps", "must be positive");
  for (double a : dc.alphas)
    if (!(a > 0.0 && a < 1.0)) fail("detection.alphas", "each alpha must lie in (0, 1)");
  for (std::size_t t : dc.steps)
    if (t < 1 || t > dc.frame_len) fail("detection.steps", "each step must lie in 1..frame_len");
  if (!(dc.sigma_z2 > 0.0)) fail("detection.sigma_z2", "must be positive");
  if (!(dc.sigma_x2 > 0.0)) fail("detection.sigma_x2", "must be positive");
  if (!(dc.change_fraction > -1.0)) fail("detection.change", "must exceed -1");
  if (det.variants.empty()) fail("detection.variants", "no variant given");
  for (const auto& v : det.variants)
    if (v != "full" && v != "matched" && v != "reduced") fail("detection.variants", "unknown variant '" + v + "'");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Config, "cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

std::string echo_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "[run]\n";
  o << "cases = " << join(c.cases) << "\n";
  o << "output_dir = " << c.output_dir.string() << "\n\n";

  o << "[power_flow]\n";
  o << "tolerance = " << fmt(c.power_flow.tolerance) << "\n";
  o << "max_iterations = " << c.power_flow.max_iterations << "\n";
  o << "flat_start = " << (c.power_flow.flat_start ? "true" : "false") << "\n\n";

  std::vector<std::string> methods;
  for (auto m : c.placement.methods) methods.emplace_back(to_string(m));
  o << "[placement]\n";
  o << "methods = " << join(methods) << "\n";
  o << "operating_point = " << to_string(c.placement.operating_point) << "\n";
  o << "time_budget_s = " << fmt(static_cast<double>(c.placement.solver.time_budget.count()) / 1000.0) << "\n";
  o << "alternate_limit = " << c.placement.solver.alternate_limit << "\n\n";

  const auto& est = c.estimation;
  const auto& sc = est.scenario;
  std::vector<std::string> scenarios;
  for (auto s : est.scenarios) scenarios.emplace_back(to_string(s));
  o << "[estimation]\n";
  o << "scenarios = " << join(scenarios) << "\n";
  o << "steps = " << sc.steps << "\n";
  o << "reps = " << sc.reps << "\n";
  o << "seed = " << sc.seed << "\n";
  o << "event_step = " << (sc.event_step ? std::to_string(*sc.event_step) : std::string()) << "\n";
  o << "v_sigma = " << fmt(sc.v_sigma_fraction) << "\n";
  o << "power_sigma = " << fmt(sc.power_sigma_fraction) << "\n";
  o << "sigma_floor = " << fmt(sc.sigma_floor) << "\n";
  o << "pmu_magnitude_sigma = " << fmt(sc.pmu_magnitude_fraction) << "\n";
  o << "pmu_angle_sigma_deg = " << fmt(sc.pmu_angle_sigma_deg) << "\n";
  o << "noise_scale = " << fmt(sc.noise_scale) << "\n";
  o << "load_trend = " << fmt(sc.load_trend) << "\n";
  o << "load_fluctuation = " << fmt(sc.load_fluctuation) << "\n";
  o << "bad_data_sigmas = " << fmt(sc.bad_data_sigmas) << "\n";
  o << "sudden_load_fraction = " << fmt(sc.sudden_load_fraction) << "\n";
  o << "tolerance = " << fmt(sc.wls.tolerance) << "\n";
  o << "max_iterations = " << sc.wls.max_iterations << "\n";
  o << "electrical_pmus = " << join(est.electrical_pmus) << "\n";
  o << "scenario1_transmit = " << join(est.scenario1_transmit) << "\n\n";

  const auto& det = c.detection;
  const auto& dc = det.detection;
  o << "[detection]\n";
  o << "change = " << fmt(dc.change_fraction) << "\n";
  o << "frame_len = " << dc.frame_len << "\n";
  o << "alphas = " << join(dc.alphas) << "\n";
  o << "steps = " << join(dc.steps) << "\n";
  o << "reps = " << dc.reps << "\n";
  o << "seed = " << dc.seed << "\n";
  o << "sigma_z2 = " << fmt(dc.sigma_z2) << "\n";
  o << "sigma_x2 = " << fmt(dc.sigma_x2) << "\n";
  o << "gradient_tolerance = " << fmt(dc.optimizer.gradient_tolerance) << "\n";
  o << "max_iterations = " << dc.optimizer.max_iterations << "\n";
  o << "variants = " << join(det.variants) << "\n";
  o << "topological_transmit = " << join(det.topological_transmit) << "\n";
  o << "electrical_transmit = " << join(det.electrical_transmit) << "\n";
  o << "matched_transmit = " << join(det.matched_transmit) << "\n";
  o << "reduced_transmit = " << join(det.reduced_transmit) << "\n";
  return o.str();
}

}  // namespace gridsense
