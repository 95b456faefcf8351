#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gridsense/fault_detection.hpp"
#include "gridsense/grid_model.hpp"
#include "gridsense/placement.hpp"
#include "gridsense/scenario.hpp"

namespace gridsense {

enum class OperatingPointMode { Solved, Flat };

std::string_view to_string(OperatingPointMode mode);

struct PlacementSettings {
  std::vector<ConnectivityMethod> methods{ConnectivityMethod::Topological, ConnectivityMethod::Electrical};
  OperatingPointMode operating_point = OperatingPointMode::Solved;
  PlacementOptions solver;
};

struct EstimationSettings {
  std::vector<ScenarioKind> scenarios{ScenarioKind::Normal};
  ScenarioConfig scenario;
  std::vector<int> electrical_pmus;     // external ids; empty: computed placement
  std::vector<int> scenario1_transmit;  // external ids; empty: ranked by electrical degree
};

struct DetectionSettings {
  DetectionConfig detection;
  std::vector<std::string> variants{"full", "matched", "reduced"};
  std::vector<int> topological_transmit;  // empty: computed placement
  std::vector<int> electrical_transmit;   // empty: computed placement
  std::vector<int> matched_transmit;      // empty: ranked subset, size of the topological set
  std::vector<int> reduced_transmit;      // empty: ranked subset, one smaller
};

/// Declarative experiment description read from an INI-style file.
struct ExperimentConfig {
  std::vector<std::string> cases{"ieee14"};
  std::filesystem::path output_dir{"gridsense-out"};
  PowerFlowOptions power_flow;
  PlacementSettings placement;
  EstimationSettings estimation;
  DetectionSettings detection;
};

/// Throws Error(Config) naming the section.key or line at fault.
ExperimentConfig parse_config(std::string_view text, std::string_view origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(echo_config(c)) reproduces c.
std::string echo_config(const ExperimentConfig& config);

}  // namespace gridsense
