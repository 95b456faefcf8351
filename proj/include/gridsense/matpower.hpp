#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridsense {

/// Numeric matrices of a MATPOWER case exactly as written in the file.
struct RawCaseFile {
  double base_mva = 0.0;
  std::vector<std::vector<double>> bus_rows;
  std::vector<std::vector<double>> branch_rows;
  std::vector<std::vector<double>> gen_rows;
  std::string source_name;

  bool operator==(const RawCaseFile&) const = default;
};

enum class BusType { PQ = 1, PV = 2, Slack = 3 };

struct Bus {
  int id = 0;  // external id from the case file
  BusType type = BusType::PQ;
  double p_demand = 0.0;  // p.u.
  double q_demand = 0.0;  // p.u.
  double shunt_g = 0.0;   // p.u. at V = 1
  double shunt_b = 0.0;   // p.u. at V = 1
  double v_mag_init = 1.0;
  double v_ang_init = 0.0;  // radians
  double base_kv = 0.0;

  bool operator==(const Bus&) const = default;
};

struct Branch {
  std::size_t from_bus = 0;  // internal index
  std::size_t to_bus = 0;
  double series_r = 0.0;  // p.u.
  double series_x = 0.0;  // p.u.
  double line_charging_b = 0.0;  // p.u., total
  double tap_ratio = 1.0;        // 0 in the file means nominal
  double phase_shift = 0.0;      // radians
  bool in_service = true;

  bool operator==(const Branch&) const = default;
};

struct Generator {
  std::size_t bus = 0;  // internal index
  double p_gen = 0.0;   // p.u.
  double q_gen = 0.0;   // p.u.
  double v_setpoint = 1.0;
  bool in_service = true;

  bool operator==(const Generator&) const = default;
};

/// A validated network with contiguous internal bus numbering 0..N-1.
/// `branches` keeps out-of-service rows (flagged) so the case serializes
/// losslessly; `n_branches` counts in-service branches only.
struct GridCase {
  std::string name;
  double base_mva = 100.0;
  std::size_t n_buses = 0;
  std::size_t n_branches = 0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::size_t slack_bus = 0;
  /// Branches (indices into `branches`) with negative series reactance.
  std::vector<std::size_t> negative_reactance_branches;

  std::size_t internal_index(int external_id) const;
  int external_id(std::size_t internal) const { return buses.at(internal).id; }
  std::vector<std::size_t> in_service_branches() const;

  bool operator==(const GridCase&) const = default;
};

RawCaseFile parse_case(std::string_view text);
GridCase validate_case(const RawCaseFile& raw);

/// MATPOWER v2 text that re-parses to an identical GridCase.
std::string to_case_text(const GridCase& grid);

/// Canonical JSON dump: {name, base_mva, slack, buses[], branches[], generators[]}.
std::string to_json(const GridCase& grid);

/// Branch count stated in a fixture's "Fixture check" header line, if any.
std::optional<std::size_t> declared_branch_count(std::string_view text);

}  // namespace gridsense
