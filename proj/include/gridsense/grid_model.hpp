#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "gridsense/matpower.hpp"

namespace gridsense {

using Complex = std::complex<double>;

/// Two-port admittances of one in-service branch in the standard pi model:
/// I_from = yff V_from + yft V_to, I_to = ytf V_from + ytt V_to.
struct BranchAdmittance {
  std::size_t branch = 0;  // index into GridCase::branches
  std::size_t from = 0;
  std::size_t to = 0;
  Complex yff, yft, ytf, ytt;
  Complex series;  // 1 / (r + jx)
};

struct AdmittanceMatrix {
  Eigen::MatrixXcd y;
  std::vector<BranchAdmittance> branches;  // in-service only, case order
  std::vector<std::vector<std::size_t>> pattern;  // per row: columns with nonzero y, self included

  Eigen::MatrixXd g() const { return y.real(); }
  Eigen::MatrixXd b() const { return y.imag(); }
  Eigen::Index size() const { return y.rows(); }
};

struct OperatingPoint {
  Eigen::VectorXd v_mag;
  Eigen::VectorXd v_ang;  // radians, slack pinned to 0
  bool converged = false;
  int iterations = 0;
  double max_mismatch = 0.0;  // p.u.

  Eigen::VectorXcd phasors() const;
};

struct PowerFlowOptions {
  double tolerance = 1e-8;  // p.u. mismatch
  int max_iterations = 20;
  bool flat_start = false;
};

/// Full N x N dP/dtheta, slack row and column included.
struct JacobianPTheta {
  Eigen::MatrixXd m;
};

AdmittanceMatrix build_ybus(const GridCase& grid);

/// Complex power injections S = diag(V) conj(Y V).
Eigen::VectorXcd power_injections(const AdmittanceMatrix& ybus, const Eigen::VectorXcd& v);

/// Scheduled net injection (generation minus demand) per bus, p.u.
Eigen::VectorXcd scheduled_injections(const GridCase& grid);

/// Newton-Raphson in polar form. PV magnitudes and the slack phasor are held.
/// Reports convergence in the result; throws only on a singular Jacobian.
OperatingPoint solve_power_flow(const GridCase& grid, const AdmittanceMatrix& ybus,
                                const PowerFlowOptions& options = {});

/// Flat operating point: |V| = 1 (PV and slack at their setpoints), angles 0.
OperatingPoint flat_operating_point(const GridCase& grid);

/// Throws NotConverged when `op` is unconverged unless `allow_unconverged`.
JacobianPTheta jacobian_p_theta(const AdmittanceMatrix& ybus, const OperatingPoint& op,
                                bool allow_unconverged = false);

}  // namespace gridsense
