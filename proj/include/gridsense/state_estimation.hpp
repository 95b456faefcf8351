#pragma once

#include <vector>

#include <Eigen/Dense>

#include "gridsense/measurement.hpp"

namespace gridsense {

struct WlsOptions {
  double tolerance = 1e-6;  // max-norm of the state correction
  int max_iterations = 50;
  bool throw_on_nonconvergence = false;
};

struct WlsResult {
  StateVector state;
  Eigen::MatrixXd covariance;  // (J^T Y^-1 J)^-1 at the returned state
  int iterations = 0;
  bool converged = false;
};

/// Gauss-Newton weighted least squares on the conventional measurements.
/// Throws SingularGain if the gain matrix is not positive definite.
/// A run that hits max_iterations returns the last iterate with
/// converged = false (or throws NotConverged when asked to).
WlsResult wls_estimate(const MeasurementPlan& plan, const Eigen::VectorXd& y, const AdmittanceMatrix& ybus,
                       std::size_t slack, const StateVector& init, const WlsOptions& options = {});

/// Same iteration with PMU phasor channels stacked under the conventional
/// model; the noise covariance is block diagonal across the two sets.
WlsResult wls_estimate_with_pmu(const MeasurementPlan& plan, const Eigen::VectorXd& y,
                                const std::vector<PhasorChannel>& channels, const BlockCovariance& pmu_cov,
                                const Eigen::VectorXd& y_pmu, const AdmittanceMatrix& ybus, std::size_t slack,
                                const StateVector& init, const WlsOptions& options = {});

}  // namespace gridsense
