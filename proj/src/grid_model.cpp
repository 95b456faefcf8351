#include "gridsense/grid_model.hpp"

#include <cmath>
#include <string>

#include "gridsense/error.hpp"

namespace gridsense {

namespace {

constexpr Complex kJ{0.0, 1.0};

std::vector<bool> regulated_buses(const GridCase& grid) {
  std::vector<bool> has_gen(grid.n_buses, false);
  for (const auto& g : grid.generators)
    if (g.in_service) has_gen[g.bus] = true;
  return has_gen;
}

}  // namespace

Eigen::VectorXcd OperatingPoint::phasors() const {
  Eigen::VectorXcd v(v_mag.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = std::polar(v_mag[i], v_ang[i]);
  return v;
}

AdmittanceMatrix build_ybus(const GridCase& grid) {
  const auto n = static_cast<Eigen::Index>(grid.n_buses);
  AdmittanceMatrix out;
  out.y = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t k = 0; k < grid.branches.size(); ++k) {
    const Branch& br = grid.branches[k];
    if (!br.in_service) continue;
    BranchAdmittance ba;
    ba.branch = k;
    ba.from = br.from_bus;
    ba.to = br.to_bus;
    ba.series = 1.0 / Complex(br.series_r, br.series_x);
    const Complex charging = kJ * (br.line_charging_b / 2.0);
    const Complex tap = std::polar(br.tap_ratio, br.phase_shift);
    ba.ytt = ba.series + charging;
    ba.yff = ba.ytt / (br.tap_ratio * br.tap_ratio);
    ba.yft = -ba.series / std::conj(tap);
    ba.ytf = -ba.series / tap;

    const auto f = static_cast<Eigen::Index>(ba.from);
    const auto t = static_cast<Eigen::Index>(ba.to);
    out.y(f, f) += ba.yff;
    out.y(f, t) += ba.yft;
    out.y(t, f) += ba.ytf;
    out.y(t, t) += ba.ytt;
    out.branches.push_back(ba);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const Bus& b = grid.buses[static_cast<std::size_t>(i)];
    out.y(i, i) += Complex(b.shunt_g, b.shunt_b);
  }
  out.pattern.assign(static_cast<std::size_t>(n), {});
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k)
      if (i == k || out.y(i, k) != Complex(0.0, 0.0)) out.pattern[static_cast<std::size_t>(i)].push_back(static_cast<std::size_t>(k));
  return out;
}

Eigen::VectorXcd power_injections(const AdmittanceMatrix& ybus, const Eigen::VectorXcd& v) {
  const Eigen::VectorXcd current = ybus.y * v;
  return v.cwiseProduct(current.conjugate());
}

Eigen::VectorXcd scheduled_injections(const GridCase& grid) {
  Eigen::VectorXcd s(static_cast<Eigen::Index>(grid.n_buses));
  for (std::size_t i = 0; i < grid.n_buses; ++i)
    s[static_cast<Eigen::Index>(i)] = -Complex(grid.buses[i].p_demand, grid.buses[i].q_demand);
  for (const auto& g : grid.generators)
    if (g.in_service) s[static_cast<Eigen::Index>(g.bus)] += Complex(g.p_gen, g.q_gen);
  return s;
}

OperatingPoint flat_operating_point(const GridCase& grid) {
  const auto n = static_cast<Eigen::Index>(grid.n_buses);
  OperatingPoint op;
  op.v_mag = Eigen::VectorXd::Ones(n);
  op.v_ang = Eigen::VectorXd::Zero(n);
  const auto regulated = regulated_buses(grid);
  for (const auto& g : grid.generators) {
    const Bus& b = grid.buses[g.bus];
    if (g.in_service && regulated[g.bus] && b.type != BusType::PQ)
      op.v_mag[static_cast<Eigen::Index>(g.bus)] = g.v_setpoint;
  }
  op.converged = true;
  return op;
}

OperatingPoint solve_power_flow(const GridCase& grid, const AdmittanceMatrix& ybus,
                                const PowerFlowOptions& options) {
  const auto n = static_cast<Eigen::Index>(grid.n_buses);
  const auto regulated = regulated_buses(grid);

  std::vector<Eigen::Index> pv, pq;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Bus& b = grid.buses[static_cast<std::size_t>(i)];
    if (b.type == BusType::Slack) continue;
    if (b.type == BusType::PV && regulated[static_cast<std::size_t>(i)])
      pv.push_back(i);
    else
      pq.push_back(i);
  }
  std::vector<Eigen::Index> pvpq = pv;
  pvpq.insert(pvpq.end(), pq.begin(), pq.end());

  OperatingPoint op = flat_operating_point(grid);
  if (!options.flat_start) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Bus& b = grid.buses[static_cast<std::size_t>(i)];
      if (b.type == BusType::PQ || !regulated[static_cast<std::size_t>(i)]) op.v_mag[i] = b.v_mag_init;
      op.v_ang[i] = b.v_ang_init - grid.buses[grid.slack_bus].v_ang_init;
    }
  }
  op.v_ang[static_cast<Eigen::Index>(grid.slack_bus)] = 0.0;
  op.converged = false;

  const Eigen::VectorXcd scheduled = scheduled_injections(grid);
  const auto npvpq = static_cast<Eigen::Index>(pvpq.size());
  const auto npq = static_cast<Eigen::Index>(pq.size());

  auto mismatch = [&](const Eigen::VectorXcd& v) {
    const Eigen::VectorXcd s = power_injections(ybus, v) - scheduled;
    Eigen::VectorXd f(npvpq + npq);
    for (Eigen::Index a = 0; a < npvpq; ++a) f[a] = s[pvpq[a]].real();
    for (Eigen::Index a = 0; a < npq; ++a) f[npvpq + a] = s[pq[a]].imag();
    return f;
  };

  Eigen::VectorXcd v = op.phasors();
  Eigen::VectorXd f = mismatch(v);
  op.max_mismatch = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
  while (op.max_mismatch > options.tolerance && op.iterations < options.max_iterations) {
    // dS/dVa = j diag(V) conj(diag(I) - Y diag(V)); dS/dVm = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
    const Eigen::VectorXcd current = ybus.y * v;
    const Eigen::VectorXcd unit = v.cwiseQuotient(v.cwiseAbs().cast<Complex>());
    Eigen::MatrixXcd ds_dva = -(ybus.y * v.asDiagonal()).conjugate();
    ds_dva.diagonal() += current.conjugate();
    ds_dva = (kJ * v).asDiagonal() * ds_dva;
    Eigen::MatrixXcd ds_dvm = v.asDiagonal() * (ybus.y * unit.asDiagonal()).conjugate();
    ds_dvm.diagonal() += current.conjugate().cwiseProduct(unit);

    Eigen::MatrixXd jac(npvpq + npq, npvpq + npq);
    for (Eigen::Index r = 0; r < npvpq; ++r) {
      for (Eigen::Index c = 0; c < npvpq; ++c) jac(r, c) = ds_dva(pvpq[r], pvpq[c]).real();
      for (Eigen::Index c = 0; c < npq; ++c) jac(r, npvpq + c) = ds_dvm(pvpq[r], pq[c]).real();
    }
    for (Eigen::Index r = 0; r < npq; ++r) {
      for (Eigen::Index c = 0; c < npvpq; ++c) jac(npvpq + r, c) = ds_dva(pq[r], pvpq[c]).imag();
      for (Eigen::Index c = 0; c < npq; ++c) jac(npvpq + r, npvpq + c) = ds_dvm(pq[r], pq[c]).imag();
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
    if (!(lu.rcond() > 1e-14))
      throw Error(ErrorKind::SingularJacobian,
                  grid.name + ": power-flow Jacobian singular at iteration " + std::to_string(op.iterations + 1));
    const Eigen::VectorXd dx = lu.solve(-f);
    if (!dx.allFinite())
      throw Error(ErrorKind::SingularJacobian, grid.name + ": non-finite Newton step");
    for (Eigen::Index a = 0; a < npvpq; ++a) op.v_ang[pvpq[a]] += dx[a];
    for (Eigen::Index a = 0; a < npq; ++a) op.v_mag[pq[a]] += dx[npvpq + a];
    v = op.phasors();
    f = mismatch(v);
    op.max_mismatch = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
    ++op.iterations;
  }
  op.converged = op.max_mismatch <= options.tolerance;
  return op;
}

JacobianPTheta jacobian_p_theta(const AdmittanceMatrix& ybus, const OperatingPoint& op, bool allow_unconverged) {
  if (!op.converged && !allow_unconverged)
    throw Error(ErrorKind::NotConverged, "dP/dtheta requested at an unconverged operating point");
  const Eigen::VectorXcd v = op.phasors();
  const Eigen::VectorXcd current = ybus.y * v;
  Eigen::MatrixXcd ds_dva = -(ybus.y * v.asDiagonal()).conjugate();
  ds_dva.diagonal() += current.conjugate();
  ds_dva = (kJ * v).asDiagonal() * ds_dva;
  return JacobianPTheta{ds_dva.real()};
}

}  // namespace gridsense
