#include "gridsense/state_estimation.hpp"

#include <string>

#include "gridsense/error.hpp"

namespace gridsense {

namespace {

struct PmuTerm {
  const std::vector<PhasorChannel>* channels;
  const BlockCovariance* cov;
  const Eigen::VectorXd* y;
};

WlsResult gauss_newton(const MeasurementPlan& plan, const Eigen::VectorXd& y, const PmuTerm* pmu,
                       const AdmittanceMatrix& ybus, std::size_t slack, const StateVector& init,
                       const WlsOptions& options) {
  const auto n_buses = static_cast<std::size_t>(ybus.size());
  const BlockCovariance scada = scada_covariance(plan);
  const auto dim = static_cast<Eigen::Index>(init.dimension());

  // Whitened normal equations: gain = sum J_w^T J_w, rhs = sum J_w^T r_w.
  auto assemble = [&](const StateVector& s, Eigen::MatrixXd& gain, Eigen::VectorXd& rhs) {
    const Eigen::MatrixXd jw = scada.whiten(measurement_jacobian(s, plan, ybus, slack));
    const Eigen::VectorXd rw = scada.whiten(Eigen::VectorXd(y - measurement_function(s, plan, ybus, slack)));
    gain.noalias() = jw.transpose() * jw;
    rhs.noalias() = jw.transpose() * rw;
    if (pmu) {
      const Eigen::MatrixXd jp = pmu->cov->whiten(pmu_jacobian(s, *pmu->channels, ybus, slack));
      const Eigen::VectorXd rp =
          pmu->cov->whiten(Eigen::VectorXd(*pmu->y - pmu_measurement_function(s, *pmu->channels, ybus, slack)));
      gain.noalias() += jp.transpose() * jp;
      rhs.noalias() += jp.transpose() * rp;
    }
  };

  WlsResult out;
  Eigen::VectorXd x = init.flatten();
  Eigen::MatrixXd gain(dim, dim);
  Eigen::VectorXd rhs(dim);
  while (out.iterations < options.max_iterations) {
    assemble(StateVector::from_flat(x, n_buses), gain, rhs);
    Eigen::LLT<Eigen::MatrixXd> llt(gain);
    if (llt.info() != Eigen::Success)
      throw Error(ErrorKind::SingularGain, "gain matrix not positive definite (plan unobservable)");
    const Eigen::VectorXd dx = llt.solve(rhs);
    if (!dx.allFinite()) throw Error(ErrorKind::SingularGain, "non-finite state correction");
    x += dx;
    ++out.iterations;
    if (dx.cwiseAbs().maxCoeff() <= options.tolerance) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged && options.throw_on_nonconvergence)
    throw Error(ErrorKind::NotConverged, "WLS did not converge in " + std::to_string(options.max_iterations) + " iterations");

  out.state = StateVector::from_flat(x, n_buses);
  assemble(out.state, gain, rhs);
  Eigen::LLT<Eigen::MatrixXd> llt(gain);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::SingularGain, "gain matrix not positive definite at the estimate");
  out.covariance = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
  return out;
}

}  // namespace

WlsResult wls_estimate(const MeasurementPlan& plan, const Eigen::VectorXd& y, const AdmittanceMatrix& ybus,
                       std::size_t slack, const StateVector& init, const WlsOptions& options) {
  return gauss_newton(plan, y, nullptr, ybus, slack, init, options);
}

WlsResult wls_estimate_with_pmu(const MeasurementPlan& plan, const Eigen::VectorXd& y,
                                const std::vector<PhasorChannel>& channels, const BlockCovariance& pmu_cov,
                                const Eigen::VectorXd& y_pmu, const AdmittanceMatrix& ybus, std::size_t slack,
                                const StateVector& init, const WlsOptions& options) {
  const PmuTerm term{&channels, &pmu_cov, &y_pmu};
  return gauss_newton(plan, y, &term, ybus, slack, init, options);
}

}  // namespace gridsense
