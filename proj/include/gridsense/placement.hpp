#pragma once

#include <chrono>
#include <cstddef>
#include <string_view>
#include <vector>

#include "gridsense/electrical_structure.hpp"

namespace gridsense {

/// min sum(d) s.t. C d >= 1, d binary. Buses are internal indices 0..N-1;
/// `bus_ids` maps them to external ids for reporting.
struct PlacementProblem {
  ConnectivityMatrix c;
  std::vector<int> bus_ids;

  std::size_t n() const { return c.size(); }
};

PlacementProblem make_problem(const ConnectivityMatrix& c, const GridCase& grid);
/// Identity labelling 1..N, for graphs without a backing case.
PlacementProblem make_problem(const ConnectivityMatrix& c);

enum class Certificate { ProvedOptimal, FeasibleOnly };

std::string_view to_string(Certificate certificate);

struct PlacementSolution {
  std::vector<int> pmu_buses;              // external ids, ascending
  std::vector<std::size_t> pmu_indices;    // internal indices, ascending
  std::size_t objective = 0;
  Certificate certificate = Certificate::ProvedOptimal;
  std::size_t alternates_found = 0;        // optima seen by enumeration, capped by the limit
  ConnectivityMethod method = ConnectivityMethod::Topological;
};

struct PlacementOptions {
  std::chrono::milliseconds time_budget{60'000};
  std::size_t alternate_limit = 10;
};

/// Exact branch-and-bound. Among optima the lexicographically smallest bus
/// set is reported. On budget exhaustion the best cover found is returned
/// with Certificate::FeasibleOnly.
PlacementSolution solve_placement(const PlacementProblem& problem, const PlacementOptions& options = {});

/// True iff every row of C has a one in some selected column.
bool verify_cover(const ConnectivityMatrix& c, const std::vector<std::size_t>& buses);

/// Up to `limit` distinct covers of size `objective`, in lexicographic order
/// of their sorted internal indices.
std::vector<std::vector<std::size_t>> enumerate_optima(const PlacementProblem& problem, std::size_t objective,
                                                       std::size_t limit);

}  // namespace gridsense
