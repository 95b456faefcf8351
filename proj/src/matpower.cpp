#include "gridsense/matpower.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "gridsense/error.hpp"

namespace gridsense {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedSection: return "MalformedSection";
    case ErrorKind::BadNumeric: return "BadNumeric";
    case ErrorKind::MissingSection: return "MissingSection";
    case ErrorKind::NoSlackBus: return "NoSlackBus";
    case ErrorKind::MultipleSlackBuses: return "MultipleSlackBuses";
    case ErrorKind::DanglingBranch: return "DanglingBranch";
    case ErrorKind::IslandedBus: return "IslandedBus";
    case ErrorKind::SelfLoop: return "SelfLoop";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::SingularReducedMatrix: return "SingularReducedMatrix";
    case ErrorKind::SingularGain: return "SingularGain";
    case ErrorKind::ZeroReactanceBranch: return "ZeroReactanceBranch";
    case ErrorKind::OptimizerDiverged: return "OptimizerDiverged";
    case ErrorKind::NonFiniteStatistic: return "NonFiniteStatistic";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::Config: return "ConfigError";
  }
  return "Unknown";
}

namespace {

// MATPOWER v2 minimum column counts. Extra (result/OPF) columns are ignored.
constexpr std::size_t kBusCols = 13;
constexpr std::size_t kGenCols = 10;
constexpr std::size_t kBranchCols = 11;

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::string strip_comments(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_comment = false;
  bool in_string = false;
  for (char c : text) {
    if (c == '\n') {
      in_comment = false;
      in_string = false;
      out.push_back(c);
      continue;
    }
    if (in_comment) continue;
    if (c == '\'') in_string = !in_string;
    if (c == '%' && !in_string) {
      in_comment = true;
      continue;
    }
    out.push_back(c);
  }
  return out;
}

double parse_number(std::string_view token, std::string_view section, std::size_t row) {
  auto fail = [&] {
    throw Error(ErrorKind::BadNumeric, "unparseable field '" + std::string(token) + "' in " +
                                           std::string(section) + " row " + std::to_string(row + 1));
  };
  if (token == "Inf" || token == "inf" || token == "+Inf") return std::numeric_limits<double>::infinity();
  if (token == "-Inf" || token == "-inf") return -std::numeric_limits<double>::infinity();
  std::string_view body = token;
  if (!body.empty() && body.front() == '+') body.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
  if (ec != std::errc() || ptr != body.data() + body.size()) fail();
  return value;
}

// Locates "mpc.<name> =" (not "mpc.<name>_suffix") and returns the offset just
// past the '='.
std::optional<std::size_t> find_assignment(const std::string& text, std::string_view name) {
  const std::string key = "mpc." + std::string(name);
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    std::size_t p = pos + key.size();
    while (p < text.size() && (text[p] == ' ' || text[p] == '\t')) ++p;
    if (p < text.size() && text[p] == '=') return p + 1;
    pos += key.size();
  }
  return std::nullopt;
}

std::vector<std::vector<double>> parse_matrix(const std::string& text, std::string_view name,
                                              std::size_t min_cols) {
  auto start = find_assignment(text, name);
  if (!start) throw Error(ErrorKind::MissingSection, "no mpc." + std::string(name) + " section");
  std::size_t open = text.find_first_not_of(" \t\r\n", *start);
  if (open == std::string::npos || text[open] != '[')
    throw Error(ErrorKind::MalformedSection, "mpc." + std::string(name) + " is not a matrix");
  std::size_t close = text.find(']', open);
  if (close == std::string::npos)
    throw Error(ErrorKind::MalformedSection, "mpc." + std::string(name) + " has no closing ']'");

  std::vector<std::vector<double>> rows;
  std::vector<double> row;
  auto flush = [&] {
    if (row.empty()) return;
    if (row.size() < min_cols)
      throw Error(ErrorKind::MalformedSection,
                  "mpc." + std::string(name) + " row " + std::to_string(rows.size() + 1) + " has " +
                      std::to_string(row.size()) + " columns, need at least " + std::to_string(min_cols));
    rows.push_back(std::move(row));
    row.clear();
  };
  std::size_t i = open + 1;
  while (i < close) {
    char c = text[i];
    if (c == ';' || c == '\n') {
      flush();
      ++i;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == ',') {
      ++i;
    } else if (c == '[') {
      throw Error(ErrorKind::MalformedSection, "nested '[' in mpc." + std::string(name));
    } else {
      std::size_t j = i;
      while (j < close && std::string_view(" \t\r\n,;").find(text[j]) == std::string_view::npos) ++j;
      row.push_back(parse_number(std::string_view(text).substr(i, j - i), name, rows.size()));
      i = j;
    }
  }
  flush();
  return rows;
}

// Finds a double `stored` whose decode(stored) reproduces `target` bit-exactly,
// so that writing and re-reading a case is lossless.
double encode_exact(double target, double estimate, const std::function<double(double)>& decode) {
  if (!std::isfinite(estimate) || decode(estimate) == target) return estimate;
  double up = estimate;
  double down = estimate;
  for (int step = 0; step < 256; ++step) {
    up = std::nextafter(up, std::numeric_limits<double>::infinity());
    if (decode(up) == target) return up;
    down = std::nextafter(down, -std::numeric_limits<double>::infinity());
    if (decode(down) == target) return down;
  }
  return estimate;
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

RawCaseFile parse_case(std::string_view text) {
  RawCaseFile raw;
  static const std::regex fn_re(R"(function\s+mpc\s*=\s*([A-Za-z_]\w*))");
  std::string original(text);
  std::smatch m;
  if (std::regex_search(original, m, fn_re)) raw.source_name = m[1].str();

  const std::string body = strip_comments(text);
  auto base = find_assignment(body, "baseMVA");
  if (!base) throw Error(ErrorKind::MissingSection, "no mpc.baseMVA");
  std::size_t b0 = body.find_first_not_of(" \t", *base);
  std::size_t b1 = body.find_first_of(";\n", b0);
  std::string_view base_token = std::string_view(body).substr(b0, b1 - b0);
  while (!base_token.empty() && (base_token.back() == ' ' || base_token.back() == '\t' || base_token.back() == '\r'))
    base_token.remove_suffix(1);
  raw.base_mva = parse_number(base_token, "baseMVA", 0);
  if (!(raw.base_mva > 0.0)) throw Error(ErrorKind::BadNumeric, "baseMVA must be positive");

  raw.bus_rows = parse_matrix(body, "bus", kBusCols);
  raw.gen_rows = parse_matrix(body, "gen", kGenCols);
  raw.branch_rows = parse_matrix(body, "branch", kBranchCols);
  if (raw.bus_rows.empty()) throw Error(ErrorKind::MalformedSection, "mpc.bus has no rows");
  return raw;
}

std::size_t GridCase::internal_index(int external) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == external) return i;
  throw Error(ErrorKind::DanglingBranch, "unknown bus id " + std::to_string(external));
}

std::vector<std::size_t> GridCase::in_service_branches() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < branches.size(); ++k)
    if (branches[k].in_service) out.push_back(k);
  return out;
}

GridCase validate_case(const RawCaseFile& raw) {
  GridCase grid;
  grid.name = raw.source_name;
  grid.base_mva = raw.base_mva;
  const double base = raw.base_mva;

  std::map<long long, std::size_t> index_of;
  std::vector<std::size_t> slacks;
  for (const auto& row : raw.bus_rows) {
    if (row[0] != std::floor(row[0]))
      throw Error(ErrorKind::BadNumeric, "non-integer bus id " + fmt(row[0]));
    const auto id = static_cast<long long>(row[0]);
    if (index_of.contains(id))
      throw Error(ErrorKind::MalformedSection, "duplicate bus id " + std::to_string(id));
    Bus bus;
    bus.id = static_cast<int>(id);
    const int type = static_cast<int>(row[1]);
    if (type == 4) throw Error(ErrorKind::IslandedBus, "bus " + std::to_string(id) + " is typed isolated");
    if (type < 1 || type > 3)
      throw Error(ErrorKind::BadNumeric, "bus " + std::to_string(id) + " has invalid type " + fmt(row[1]));
    bus.type = static_cast<BusType>(type);
    bus.p_demand = row[2] / base;
    bus.q_demand = row[3] / base;
    bus.shunt_g = row[4] / base;
    bus.shunt_b = row[5] / base;
    bus.v_mag_init = row[7];
    bus.v_ang_init = row[8] * kDegToRad;
    bus.base_kv = row[9];
    if (!(bus.v_mag_init > 0.0))
      throw Error(ErrorKind::BadNumeric, "bus " + std::to_string(id) + " has non-positive Vm");
    if (bus.type == BusType::Slack) slacks.push_back(grid.buses.size());
    index_of.emplace(id, grid.buses.size());
    grid.buses.push_back(bus);
  }
  if (slacks.empty()) throw Error(ErrorKind::NoSlackBus, "no bus of type 3");
  if (slacks.size() > 1) {
    std::string ids;
    for (auto s : slacks) ids += (ids.empty() ? "" : ", ") + std::to_string(grid.buses[s].id);
    throw Error(ErrorKind::MultipleSlackBuses, "slack-typed buses: " + ids);
  }
  grid.slack_bus = slacks.front();
  grid.n_buses = grid.buses.size();

  auto lookup = [&](double id, std::string_view what) {
    auto it = index_of.find(static_cast<long long>(id));
    if (id != std::floor(id) || it == index_of.end())
      throw Error(ErrorKind::DanglingBranch, std::string(what) + " references unknown bus " + fmt(id));
    return it->second;
  };

  std::vector<int> degree(grid.n_buses, 0);
  for (std::size_t k = 0; k < raw.branch_rows.size(); ++k) {
    const auto& row = raw.branch_rows[k];
    Branch br;
    br.from_bus = lookup(row[0], "branch " + std::to_string(k + 1));
    br.to_bus = lookup(row[1], "branch " + std::to_string(k + 1));
    if (br.from_bus == br.to_bus)
      throw Error(ErrorKind::SelfLoop, "branch " + std::to_string(k + 1) + " joins bus " + fmt(row[0]) + " to itself");
    br.series_r = row[2];
    br.series_x = row[3];
    br.line_charging_b = row[4];
    br.tap_ratio = row[8] == 0.0 ? 1.0 : row[8];
    br.phase_shift = row[9] * kDegToRad;
    br.in_service = row[10] != 0.0;
    if (br.in_service) {
      ++grid.n_branches;
      ++degree[br.from_bus];
      ++degree[br.to_bus];
    }
    if (br.series_x < 0.0) grid.negative_reactance_branches.push_back(k);
    grid.branches.push_back(br);
  }
  if (grid.n_buses > 1) {
    for (std::size_t i = 0; i < grid.n_buses; ++i)
      if (degree[i] == 0)
        throw Error(ErrorKind::IslandedBus, "bus " + std::to_string(grid.buses[i].id) + " has no in-service branch");
  }

  for (const auto& row : raw.gen_rows) {
    Generator g;
    g.bus = lookup(row[0], "generator");
    g.p_gen = row[1] / base;
    g.q_gen = row[2] / base;
    g.v_setpoint = row[5];
    g.in_service = row[7] > 0.0;
    grid.generators.push_back(g);
  }
  return grid;
}

std::string to_case_text(const GridCase& grid) {
  const double base = grid.base_mva;
  auto per_unit = [base](double pu) {
    return fmt(encode_exact(pu, pu * base, [base](double mw) { return mw / base; }));
  };
  auto angle = [](double rad) {
    return fmt(encode_exact(rad, rad / kDegToRad, [](double deg) { return deg * kDegToRad; }));
  };

  std::ostringstream os;
  os << "function mpc = " << (grid.name.empty() ? std::string("gridsense_case") : grid.name) << "\n";
  os << "%% Written by gridsense\n";
  os << "mpc.version = '2';\n";
  os << "mpc.baseMVA = " << fmt(base) << ";\n\n";
  os << "%% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin\n";
  os << "mpc.bus = [\n";
  for (const auto& b : grid.buses) {
    os << '\t' << b.id << '\t' << static_cast<int>(b.type) << '\t' << per_unit(b.p_demand) << '\t'
       << per_unit(b.q_demand) << '\t' << per_unit(b.shunt_g) << '\t' << per_unit(b.shunt_b) << "\t1\t"
       << fmt(b.v_mag_init) << '\t' << angle(b.v_ang_init) << '\t' << fmt(b.base_kv) << "\t1\t1.1\t0.9;\n";
  }
  os << "];\n\n%% bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin\n";
  os << "mpc.gen = [\n";
  for (const auto& g : grid.generators) {
    os << '\t' << grid.buses[g.bus].id << '\t' << per_unit(g.p_gen) << '\t' << per_unit(g.q_gen)
       << "\t9999\t-9999\t" << fmt(g.v_setpoint) << '\t' << fmt(base) << '\t' << (g.in_service ? 1 : 0)
       << "\t9999\t0;\n";
  }
  os << "];\n\n%% fbus tbus r x b rateA rateB rateC ratio angle status\n";
  os << "mpc.branch = [\n";
  for (const auto& br : grid.branches) {
    os << '\t' << grid.buses[br.from_bus].id << '\t' << grid.buses[br.to_bus].id << '\t' << fmt(br.series_r)
       << '\t' << fmt(br.series_x) << '\t' << fmt(br.line_charging_b) << "\t0\t0\t0\t"
       << fmt(br.tap_ratio) << '\t' << angle(br.phase_shift) << '\t' << (br.in_service ? 1 : 0) << ";\n";
  }
  os << "];\n";
  return os.str();
}

std::string to_json(const GridCase& grid) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["name"] = grid.name;
  doc["base_mva"] = grid.base_mva;
  doc["n_buses"] = grid.n_buses;
  doc["n_branches"] = grid.n_branches;
  doc["slack"] = grid.buses[grid.slack_bus].id;
  auto& buses = doc["buses"] = ordered_json::array();
  for (const auto& b : grid.buses) {
    buses.push_back({{"id", b.id},
                     {"type", b.type == BusType::Slack ? "slack" : b.type == BusType::PV ? "PV" : "PQ"},
                     {"p_demand", b.p_demand},
                     {"q_demand", b.q_demand},
                     {"shunt_g", b.shunt_g},
                     {"shunt_b", b.shunt_b},
                     {"v_mag_init", b.v_mag_init},
                     {"v_ang_init", b.v_ang_init}});
  }
  auto& branches = doc["branches"] = ordered_json::array();
  for (const auto& br : grid.branches) {
    branches.push_back({{"from", grid.buses[br.from_bus].id},
                        {"to", grid.buses[br.to_bus].id},
                        {"r", br.series_r},
                        {"x", br.series_x},
                        {"b", br.line_charging_b},
                        {"tap", br.tap_ratio},
                        {"shift", br.phase_shift},
                        {"in_service", br.in_service}});
  }
  auto& gens = doc["generators"] = ordered_json::array();
  for (const auto& g : grid.generators) {
    gens.push_back({{"bus", grid.buses[g.bus].id},
                    {"p_gen", g.p_gen},
                    {"q_gen", g.q_gen},
                    {"v_setpoint", g.v_setpoint},
                    {"in_service", g.in_service}});
  }
  return doc.dump(2);
}

std::optional<std::size_t> declared_branch_count(std::string_view text) {
  static const std::regex re(R"(Fixture check:\s*(\d+)\s+in-service branches)");
  std::string s(text);
  std::smatch m;
  if (!std::regex_search(s, m, re)) return std::nullopt;
  return static_cast<std::size_t>(std::stoul(m[1].str()));
}

}  // namespace gridsense
