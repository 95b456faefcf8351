#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gridsense/grid_model.hpp"

namespace gridsense {

/// Estimation state: angles of every non-slack bus and all magnitudes.
/// Flattened as [theta (bus order, slack skipped), v_mag].
struct StateVector {
  Eigen::VectorXd theta;  // N-1, radians
  Eigen::VectorXd v_mag;  // N, p.u.

  static StateVector from_operating_point(const OperatingPoint& op, std::size_t slack);
  static StateVector flat(std::size_t n_buses);
  static StateVector from_flat(const Eigen::VectorXd& x, std::size_t n_buses);

  Eigen::VectorXd flatten() const;
  Eigen::VectorXd angles(std::size_t slack) const;  // full N-vector with slack at 0
  Eigen::VectorXcd phasors(std::size_t slack) const;
  std::size_t dimension() const { return static_cast<std::size_t>(theta.size() + v_mag.size()); }
};

enum class MeasurementKind { Pflow, Qflow, Pinj, Qinj, Vmag };

std::string_view to_string(MeasurementKind kind);

enum class BranchEnd { From, To };

struct Measurement {
  MeasurementKind kind = MeasurementKind::Pinj;
  std::size_t bus = 0;          // Pinj, Qinj, Vmag
  std::size_t branch = 0;       // index into AdmittanceMatrix::branches (flows)
  BranchEnd end = BranchEnd::From;
};

/// Conventional (SCADA) measurement set with one standard deviation per entry.
struct MeasurementPlan {
  std::vector<Measurement> entries;
  Eigen::VectorXd noise_sigma;

  std::size_t size() const { return entries.size(); }
};

/// All from-end branch P/Q flows, all bus P/Q injections, slack |V|.
/// Sigmas are left at one; see assign_scada_sigmas.
MeasurementPlan default_measurement_plan(const AdmittanceMatrix& ybus, std::size_t slack);

/// Phasor channels: for every transmitting bus, its voltage phasor and the
/// current phasor (at that bus's end) of each incident in-service branch.
struct PmuPlan {
  std::vector<std::size_t> pmu_buses;       // internal indices
  std::vector<std::size_t> transmit_buses;  // subset of pmu_buses
  double v_mag_sigma = 0.03;                // fraction of phasor magnitude
  double angle_sigma_deg = 0.02;
};

struct PhasorChannel {
  std::size_t bus = 0;
  bool is_current = false;
  std::size_t branch = 0;  // when is_current
  BranchEnd end = BranchEnd::From;
};

std::vector<PhasorChannel> pmu_channels(const PmuPlan& pmu, const AdmittanceMatrix& ybus);

/// Measurement noise covariance built from 1x1 and 2x2 diagonal blocks.
class BlockCovariance {
 public:
  void add_scalar(double sigma);
  void add_block(const Eigen::Matrix2d& cov);

  std::size_t size() const { return size_; }
  /// W with W^T W = inverse covariance, applied to a vector or to the rows of a matrix.
  Eigen::VectorXd whiten(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd whiten(const Eigen::MatrixXd& m) const;
  Eigen::MatrixXd dense() const;
  BlockCovariance scaled(double variance_factor) const;

 private:
  struct Block {
    std::size_t start = 0;
    int dim = 1;
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d whitener = Eigen::Matrix2d::Zero();
  };
  std::vector<Block> blocks_;
  std::size_t size_ = 0;
};

Eigen::VectorXd measurement_function(const StateVector& s, const MeasurementPlan& plan,
                                     const AdmittanceMatrix& ybus, std::size_t slack);
Eigen::MatrixXd measurement_jacobian(const StateVector& s, const MeasurementPlan& plan,
                                     const AdmittanceMatrix& ybus, std::size_t slack);

/// [Re V, Im V] per bus channel and [Re I, Im I] per current channel.
Eigen::VectorXd pmu_measurement_function(const StateVector& s, const std::vector<PhasorChannel>& channels,
                                         const AdmittanceMatrix& ybus, std::size_t slack);
Eigen::MatrixXd pmu_jacobian(const StateVector& s, const std::vector<PhasorChannel>& channels,
                             const AdmittanceMatrix& ybus, std::size_t slack);

/// Complex phasor of one channel at state s (used for noise synthesis).
Complex channel_phasor(const StateVector& s, const PhasorChannel& channel, const AdmittanceMatrix& ybus,
                       std::size_t slack);

/// Sigma = max(fraction * |value|, floor), with `v_fraction` for Vmag entries.
void assign_scada_sigmas(MeasurementPlan& plan, const Eigen::VectorXd& noise_free, double v_fraction,
                         double power_fraction, double floor);

BlockCovariance scada_covariance(const MeasurementPlan& plan);

/// Rectangular-coordinate covariance of polar phasor errors: magnitude sigma
/// max(fraction * |X|, floor) and angle sigma in radians, per channel.
BlockCovariance pmu_covariance(const Eigen::VectorXcd& phasors, double magnitude_fraction, double angle_sigma_rad,
                               double floor);

}  // namespace gridsense
