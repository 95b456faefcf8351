#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "gridsense/config.hpp"
#include "gridsense/error.hpp"
#include "gridsense/fault_detection.hpp"
#include "gridsense/placement.hpp"
#include "gridsense/scenario.hpp"

namespace gridsense {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitTimeout = 4;

int exit_code_for(ErrorKind kind);

enum class Command { Parse, Place, Estimate, Detect, Report };

std::string_view to_string(Command command);
std::optional<Command> parse_command(std::string_view text);

/// Shortest round-trip decimal, locale independent; "nan"/"inf" spelled out.
std::string format_double(double value);

struct ManifestEntry {
  std::string file;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct CommandOutcome {
  int exit_code = kExitOk;
  std::filesystem::path directory;
  std::vector<ManifestEntry> files;  // manifest.json excluded
};

struct RunOptions {
  ExecutionPolicy policy = ExecutionPolicy::Parallel;
  std::ostream* log = nullptr;
};

/// Runs one subcommand, writes its outputs under output_dir/<command>/ and
/// finishes with manifest.json. Throws gridsense::Error on failure.
CommandOutcome run_command(Command command, const ExperimentConfig& config, const RunOptions& options = {});

struct PlacementRecord {
  std::string case_name;
  ConnectivityMethod method = ConnectivityMethod::Topological;
  OperatingPointMode operating_point = OperatingPointMode::Solved;
  ConnectivityMatrix connectivity;
  PlacementSolution solution;
  std::vector<std::vector<int>> optima;  // external ids
  double asymmetry_norm = 0.0;
  double seconds = 0.0;
};

/// Connectivity graph for one method; electrical graphs use the dP/dtheta
/// Jacobian at the solved or flat operating point.
ConnectivityMatrix connectivity_for(const GridCase& grid, ConnectivityMethod method, OperatingPointMode mode,
                                    const PowerFlowOptions& power_flow, double* asymmetry_norm = nullptr);

PlacementRecord place_case(const GridCase& grid, ConnectivityMethod method, OperatingPointMode mode,
                           const PowerFlowOptions& power_flow, const PlacementOptions& options);

/// The k PMU buses with the most electrical neighbours (ties by index), ascending.
std::vector<std::size_t> priority_subset(const ConnectivityMatrix& electrical, const std::vector<std::size_t>& pmus,
                                         std::size_t k);

/// External ids to internal indices; Config error naming `field` on unknown ids.
std::vector<std::size_t> to_internal(const GridCase& grid, const std::vector<int>& ids, std::string_view field);

/// wls, wls_pmu_topology, wls_pmu_es_scenario1, wls_pmu_es_scenario2.
std::vector<EstimatorMode> estimator_modes(const GridCase& grid, const EstimationSettings& settings,
                                           const PlacementSolution& topological, const PlacementSolution& electrical,
                                           const ConnectivityMatrix& electrical_graph);

struct DetectionPlan {
  std::vector<DetectionPlacement> placements;  // unique transmit sets
  // variant -> (topological placement index, electrical placement index)
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> variants;
};

DetectionPlan detection_plan(const GridCase& grid, const DetectionSettings& settings,
                             const PlacementSolution& topological, const PlacementSolution& electrical,
                             const ConnectivityMatrix& electrical_graph);

}  // namespace gridsense
