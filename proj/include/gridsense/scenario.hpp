#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gridsense/grid_model.hpp"
#include "gridsense/measurement.hpp"
#include "gridsense/parallel.hpp"
#include "gridsense/state_estimation.hpp"

namespace gridsense {

enum class ScenarioKind { Normal, BadData, SuddenLoad };

std::string_view to_string(ScenarioKind kind);
std::optional<ScenarioKind> parse_scenario(std::string_view text);

struct ScenarioConfig {
  ScenarioKind scenario = ScenarioKind::Normal;
  std::size_t steps = 50;
  std::size_t reps = 100;
  std::uint64_t seed = 1;
  std::optional<std::size_t> event_step;  // 1-based; defaults to mid-horizon

  // Conventional meters: sigma = fraction of the true value.
  double v_sigma_fraction = 0.001;
  double power_sigma_fraction = 0.02;
  double sigma_floor = 1e-3;  // p.u., keeps near-zero channels finite
  // PMUs: magnitude sigma as a fraction, angle sigma in degrees.
  double pmu_magnitude_fraction = 0.03;
  double pmu_angle_sigma_deg = 0.02;
  double noise_scale = 1.0;  // multiplies every synthesized error; 0 gives noise-free data

  double load_trend = 0.30;        // total rise over the horizon
  double load_fluctuation = 0.03;  // half-width of the uniform per-bus factor
  double bad_data_sigmas = 20.0;
  double sudden_load_fraction = 0.5;

  WlsOptions wls;
  PowerFlowOptions power_flow;

  std::size_t resolved_event_step() const { return event_step.value_or(steps / 2); }
};

/// One estimator configuration evaluated on the shared measurements.
struct EstimatorMode {
  std::string name;
  std::optional<PmuPlan> pmu;  // absent: conventional WLS only
};

struct EstimationRun {
  std::string mode;
  ScenarioKind scenario = ScenarioKind::Normal;
  std::size_t reps = 0;
  std::uint64_t seed = 0;

  std::vector<StateVector> mean_estimates;  // per step, averaged over reps
  Eigen::VectorXd eps_t;                    // mean over reps of mean |s_hat - s|
  Eigen::VectorXd p_index_t;                // NaN where degenerate
  std::vector<bool> p_index_degenerate;     // zero denominator (noise-free data)

  Eigen::VectorXd rep_eps;            // per rep, averaged over steps
  Eigen::VectorXd rep_p_numerator;    // per rep, summed over steps
  Eigen::VectorXd rep_p_denominator;  // per rep, summed over steps
  Eigen::MatrixXd trace_covariance;   // reps x steps
  Eigen::MatrixXi iterations;         // reps x steps

  double mean_eps() const;
  double mean_p_index() const;  // over non-degenerate steps
};

struct ScenarioTruth {
  std::vector<StateVector> states;  // per step
  std::optional<std::size_t> sudden_load_bus;
};

/// Monte Carlo evaluation of every mode on one load trajectory. All modes see
/// the same conventional measurements and the same error on any shared
/// phasor channel, so per-rep comparisons between modes are paired.
std::vector<EstimationRun> run_scenario(const GridCase& grid, const std::vector<EstimatorMode>& modes,
                                        const ScenarioConfig& config,
                                        ExecutionPolicy policy = ExecutionPolicy::Parallel,
                                        ScenarioTruth* truth = nullptr);

/// Load/generation profile of one step (1-based), before any sudden change.
GridCase scaled_case(const GridCase& grid, const Eigen::VectorXd& bus_factors, double generation_factor);

}  // namespace gridsense
