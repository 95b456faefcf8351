#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridsense/matpower.hpp"
#include "gridsense/parallel.hpp"

namespace gridsense {

/// Errors-in-variables model of DC branch flows: z = diag(b) D x.
struct EivModel {
  Eigen::MatrixXd d;   // K x N, +1 at the larger bus index, -1 at the smaller
  Eigen::VectorXd b0;  // nominal susceptances, p.u.
  double sigma_z = 0.1;
  double sigma_x = 0.1;
  std::vector<std::size_t> branches;  // GridCase branch index of each row

  Eigen::Index k() const { return d.rows(); }
  Eigen::Index n() const { return d.cols(); }
};

/// Incidence rows in in-service branch order; b0 and sigmas left empty.
EivModel build_incidence(const GridCase& grid);
/// -imag(1 / (r + jx)) per in-service branch. Throws ZeroReactanceBranch.
Eigen::VectorXd nominal_susceptance(const GridCase& grid);
/// build_incidence with b0 filled in and the given noise levels.
EivModel make_eiv_model(const GridCase& grid, double sigma_z, double sigma_x);

struct Frames {
  Eigen::MatrixXd z;  // K x T, noisy flows
  Eigen::MatrixXd x;  // N x T, noisy angles
};

/// X standard normal, Z = diag(b_true) D X, then independent Gaussian noise
/// on both. Deterministic for a given generator state.
Frames simulate_frames(const EivModel& model, const Eigen::VectorXd& b_true, std::size_t samples,
                       std::mt19937_64& rng);
Frames simulate_frames(const EivModel& model, const Eigen::VectorXd& b_true, std::size_t samples,
                       std::uint64_t seed);

/// sigma_z^2 I + sigma_x^2 diag(b) D D^T diag(b), K x K.
Eigen::MatrixXd h_matrix(const Eigen::VectorXd& b, const EivModel& model);

/// Negative log marginal likelihood up to a constant:
/// 0.5 tr(A^T H^-1 A) + (T/2) log|H| with A = Z - diag(b) D X.
struct TmlObjective {
  TmlObjective(Eigen::MatrixXd z, Eigen::MatrixXd w, Eigen::MatrixXd m, double sigma_z, double sigma_x);
  TmlObjective(const Frames& frames, const EivModel& model);

  double value(const Eigen::VectorXd& b) const;
  double value(const Eigen::VectorXd& b, Eigen::VectorXd* gradient) const;
  Eigen::Index k() const { return z_.rows(); }
  Eigen::Index samples() const { return z_.cols(); }
  /// Diagonal curvature estimate of the data term, used to scale the first step.
  Eigen::VectorXd curvature_hint(const Eigen::VectorXd& b) const;

 private:
  Eigen::MatrixXd z_;  // K x T
  Eigen::MatrixXd w_;  // D X, K x T
  Eigen::MatrixXd m_;  // D D^T
  double var_z_;
  double var_x_;
};

struct MinimizeOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 200;
};

struct MinimizeResult {
  Eigen::VectorXd b;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// BFGS with backtracking from `start`; never returns a point worse than it.
MinimizeResult minimize_tml(const TmlObjective& objective, const Eigen::VectorXd& start,
                            const MinimizeOptions& options = {});

enum class Hypothesis { H0, H1 };

struct GlrtResult {
  double t_tml = 0.0;
  double threshold = 0.0;
  Hypothesis decision = Hypothesis::H0;
  Eigen::VectorXd b_hat;
  double alpha = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// 0.5 * chi-squared quantile with `dof` degrees of freedom at 1 - alpha.
double glrt_threshold(std::size_t dof, double alpha);

/// Statistic F(b0) - min_b F(b) and the decision at level alpha.
/// Throws NonFiniteStatistic or OptimizerDiverged.
GlrtResult tml_glrt(const Frames& frames, const Eigen::VectorXd& b0, const EivModel& model, double alpha,
                    const MinimizeOptions& options = {});

/// Branch rows and bus columns exposed by a set of transmitting PMUs: a
/// branch is observed when either end hosts one, a bus when it hosts one or
/// neighbours one.
struct ObservedChannels {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> buses;
};
ObservedChannels observed_channels(const EivModel& model, const std::vector<std::size_t>& transmit_buses);
EivModel restrict_model(const EivModel& model, const ObservedChannels& channels);
Frames restrict_frames(const Frames& frames, const ObservedChannels& channels);

struct DetectionConfig {
  double change_fraction = -0.02;  // b_true = (1 + change) b0
  std::size_t frame_len = 20;
  std::vector<double> alphas;  // empty: 0.01, 0.02, ..., 0.20
  std::vector<std::size_t> steps;  // sample counts to evaluate; empty: 1..frame_len
  std::size_t reps = 10000;
  std::uint64_t seed = 1;
  double sigma_z2 = 0.01;
  double sigma_x2 = 0.01;
  MinimizeOptions optimizer;

  std::vector<double> resolved_alphas() const;
  std::vector<std::size_t> resolved_steps() const;
};

struct DetectionPlacement {
  std::string name;
  std::vector<std::size_t> transmit_buses;  // internal indices
};

struct DetectionTrace {
  std::string name;
  std::vector<int> transmit_bus_ids;
  std::size_t observed_branches = 0;
  std::size_t observed_buses = 0;
  std::size_t reps = 0;
  std::vector<double> alphas;
  std::vector<std::size_t> steps;    // sample counts evaluated
  Eigen::VectorXd pd_t;              // per step, averaged over alphas
  Eigen::MatrixXd pd_alpha;          // steps x alphas
  std::vector<bool> non_asymptotic;  // t = 1
  Eigen::VectorXd mean_statistic;    // per step
};

/// Detection probability against the number of samples. Every placement sees
/// the same simulated frames in each rep, restricted to its observed channels.
std::vector<DetectionTrace> pd_vs_time(const GridCase& grid, const std::vector<DetectionPlacement>& placements,
                                       const DetectionConfig& config,
                                       ExecutionPolicy policy = ExecutionPolicy::Parallel);

/// Null-hypothesis rejection rates of 2 t_tml against chi-squared quantiles.
struct CalibrationResult {
  std::vector<double> alphas;
  std::vector<double> rejection_rate;
  std::size_t trials = 0;
  std::size_t dof = 0;
  Eigen::VectorXd statistics;  // per trial
};
CalibrationResult null_calibration(const EivModel& model, std::size_t samples, const std::vector<double>& alphas,
                                   std::size_t trials, std::uint64_t seed,
                                   ExecutionPolicy policy = ExecutionPolicy::Parallel,
                                   const MinimizeOptions& optimizer = {});

}  // namespace gridsense
