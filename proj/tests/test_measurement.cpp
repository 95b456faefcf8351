#include <cmath>

#include "doctest.h"

#include "gridsense/fixtures.hpp"
#include "gridsense/measurement.hpp"
#include "test_support.hpp"

using namespace gridsense;

namespace {

struct Solved {
  GridCase grid;
  AdmittanceMatrix y;
  OperatingPoint op;
  StateVector s;
};

Solved solved(const std::string& name) {
  Solved out{load_case(name), {}, {}, {}};
  out.y = build_ybus(out.grid);
  out.op = solve_power_flow(out.grid, out.y);
  out.s = StateVector::from_operating_point(out.op, out.grid.slack_bus);
  return out;
}

// Central differences of f with a relative step.
template <class F>
Eigen::MatrixXd numeric_jacobian(F f, const StateVector& s, std::size_t n_buses) {
  const Eigen::VectorXd x0 = s.flatten();
  const Eigen::VectorXd f0 = f(s);
  Eigen::MatrixXd j(f0.size(), x0.size());
  for (Eigen::Index k = 0; k < x0.size(); ++k) {
    const double h = 1e-6;
    Eigen::VectorXd xp = x0, xm = x0;
    xp(k) += h;
    xm(k) -= h;
    j.col(k) = (f(StateVector::from_flat(xp, n_buses)) - f(StateVector::from_flat(xm, n_buses))) / (2 * h);
  }
  return j;
}

PmuPlan all_pmus(std::size_t n) {
  PmuPlan p;
  for (std::size_t i = 0; i < n; ++i) {
    p.pmu_buses.push_back(i);
    p.transmit_buses.push_back(i);
  }
  return p;
}

}  // namespace

TEST_CASE("state vector layout") {
  const Solved c = solved("ieee14");
  CHECK(c.s.dimension() == 27);
  const StateVector back = StateVector::from_flat(c.s.flatten(), 14);
  CHECK((back.flatten() - c.s.flatten()).norm() == 0.0);
  const Eigen::VectorXd ang = c.s.angles(c.grid.slack_bus);
  CHECK(ang(c.grid.slack_bus) == 0.0);
  CHECK((ang - c.op.v_ang).cwiseAbs().maxCoeff() < 1e-15);
  const StateVector f = StateVector::flat(14);
  CHECK(f.theta.isZero());
  CHECK(f.v_mag.isOnes());
}

TEST_CASE("injection measurements match the schedule at the solved point") {
  for (const char* name : {"ieee14", "ieee57"}) {
    const Solved c = solved(name);
    MeasurementPlan plan = default_measurement_plan(c.y, c.grid.slack_bus);
    const Eigen::VectorXd h = measurement_function(c.s, plan, c.y, c.grid.slack_bus);
    const Eigen::VectorXcd sched = scheduled_injections(c.grid);
    for (std::size_t m = 0; m < plan.size(); ++m) {
      const Measurement& e = plan.entries[m];
      const std::size_t b = e.bus;
      if (b == c.grid.slack_bus) continue;
      if (e.kind == MeasurementKind::Pinj) CHECK(h(m) == doctest::Approx(sched(b).real()).epsilon(1e-7));
      if (e.kind == MeasurementKind::Qinj && c.grid.buses[b].type == BusType::PQ)
        CHECK(h(m) == doctest::Approx(sched(b).imag()).epsilon(1e-7));
    }
  }
}

TEST_CASE("default plan composition") {
  const Solved c = solved("ieee14");
  const MeasurementPlan plan = default_measurement_plan(c.y, c.grid.slack_bus);
  int pf = 0, qf = 0, pi = 0, qi = 0, vm = 0;
  for (const auto& e : plan.entries) {
    switch (e.kind) {
      case MeasurementKind::Pflow: ++pf; break;
      case MeasurementKind::Qflow: ++qf; break;
      case MeasurementKind::Pinj: ++pi; break;
      case MeasurementKind::Qinj: ++qi; break;
      case MeasurementKind::Vmag: ++vm; break;
    }
  }
  CHECK(pf == 20);
  CHECK(qf == 20);
  CHECK(pi == 14);
  CHECK(qi == 14);
  CHECK(vm == 1);
  CHECK(plan.noise_sigma.size() == static_cast<Eigen::Index>(plan.size()));
}

TEST_CASE("branch flow oracle on two buses") {
  const GridCase g = test::from_text(test::two_bus_text(0.0, 0.1));
  const AdmittanceMatrix y = build_ybus(g);
  StateVector s = StateVector::flat(2);
  s.theta(0) = -0.1;
  s.v_mag(1) = 0.98;
  MeasurementPlan plan = default_measurement_plan(y, g.slack_bus);
  const Eigen::VectorXd h = measurement_function(s, plan, y, g.slack_bus);
  // lossless line: P12 = V1 V2 sin(t1 - t2) / x
  const double p12 = 1.0 * 0.98 * std::sin(0.1) / 0.1;
  const double q12 = (1.0 - 0.98 * std::cos(0.1)) / 0.1;
  for (std::size_t m = 0; m < plan.size(); ++m) {
    const auto& e = plan.entries[m];
    if (e.kind == MeasurementKind::Pflow) CHECK(h(m) == doctest::Approx(p12).epsilon(1e-12));
    if (e.kind == MeasurementKind::Qflow) CHECK(h(m) == doctest::Approx(q12).epsilon(1e-12));
    if (e.kind == MeasurementKind::Vmag) CHECK(h(m) == 1.0);
  }
}

TEST_CASE("current phasor oracle") {
  const Solved c = solved("ieee14");
  const auto v = c.s.phasors(c.grid.slack_bus);
  for (std::size_t k = 0; k < c.y.branches.size(); ++k) {
    const auto& b = c.y.branches[k];
    const Complex i_from = b.yff * v(b.from) + b.yft * v(b.to);
    const Complex i_to = b.ytf * v(b.from) + b.ytt * v(b.to);
    CHECK(std::abs(channel_phasor(c.s, {b.from, true, k, BranchEnd::From}, c.y, c.grid.slack_bus) - i_from) < 1e-12);
    CHECK(std::abs(channel_phasor(c.s, {b.to, true, k, BranchEnd::To}, c.y, c.grid.slack_bus) - i_to) < 1e-12);
  }
  CHECK(std::abs(channel_phasor(c.s, {3, false, 0, BranchEnd::From}, c.y, c.grid.slack_bus) - v(3)) < 1e-15);
}

TEST_CASE("pmu channels") {
  const Solved c = solved("ieee14");
  PmuPlan p;
  p.pmu_buses = {1, 5};
  p.transmit_buses = {1};
  const auto ch = pmu_channels(p, c.y);
  // bus 2 (index 1) has four incident branches
  REQUIRE(ch.size() == 5);
  CHECK_FALSE(ch.front().is_current);
  CHECK(ch.front().bus == 1);
  for (std::size_t k = 1; k < ch.size(); ++k) {
    CHECK(ch[k].is_current);
    const auto& b = c.y.branches[ch[k].branch];
    CHECK((ch[k].end == BranchEnd::From ? b.from : b.to) == 1);
  }
  const Eigen::VectorXd h = pmu_measurement_function(c.s, ch, c.y, c.grid.slack_bus);
  CHECK(h.size() == 10);
  const Complex v1 = c.op.phasors()(1);
  CHECK(h(0) == doctest::Approx(v1.real()));
  CHECK(h(1) == doctest::Approx(v1.imag()));
}

TEST_CASE("jacobians agree with finite differences") {
  for (const char* name : {"ieee14", "ieee30"}) {
    CAPTURE(name);
    const Solved c = solved(name);
    const std::size_t n = c.grid.n_buses, slack = c.grid.slack_bus;
    const MeasurementPlan plan = default_measurement_plan(c.y, slack);
    const auto ch = pmu_channels(all_pmus(n), c.y);
    for (const StateVector& s : {c.s, StateVector::flat(n)}) {
      const Eigen::MatrixXd ja = measurement_jacobian(s, plan, c.y, slack);
      const Eigen::MatrixXd jn = numeric_jacobian(
          [&](const StateVector& x) { return measurement_function(x, plan, c.y, slack); }, s, n);
      CHECK((ja - jn).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, jn.cwiseAbs().maxCoeff()));
      const Eigen::MatrixXd pa = pmu_jacobian(s, ch, c.y, slack);
      const Eigen::MatrixXd pn = numeric_jacobian(
          [&](const StateVector& x) { return pmu_measurement_function(x, ch, c.y, slack); }, s, n);
      CHECK((pa - pn).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, pn.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("sigma assignment and floor") {
  MeasurementPlan plan;
  plan.entries = {{MeasurementKind::Vmag, 0}, {MeasurementKind::Pinj, 1}, {MeasurementKind::Pflow, 0, 0}};
  plan.noise_sigma = Eigen::VectorXd::Ones(3);
  assign_scada_sigmas(plan, Eigen::Vector3d(1.05, -0.5, 0.0), 0.001, 0.02, 1e-3);
  CHECK(plan.noise_sigma(0) == doctest::Approx(1.05e-3));
  CHECK(plan.noise_sigma(1) == doctest::Approx(0.01));
  CHECK(plan.noise_sigma(2) == doctest::Approx(1e-3));
  const Eigen::MatrixXd r = scada_covariance(plan).dense();
  CHECK(r(1, 1) == doctest::Approx(1e-4));
  CHECK(r(0, 1) == 0.0);
}

TEST_CASE("block covariance whitening") {
  BlockCovariance b;
  b.add_scalar(0.5);
  Eigen::Matrix2d c;
  c << 2.0, 0.3, 0.3, 1.0;
  b.add_block(c);
  CHECK(b.size() == 3);
  const Eigen::MatrixXd d = b.dense();
  CHECK(d(0, 0) == doctest::Approx(0.25));
  CHECK((d.bottomRightCorner(2, 2) - c).norm() < 1e-15);
  // W^T W = R^-1
  const Eigen::MatrixXd w = b.whiten(Eigen::MatrixXd(Eigen::MatrixXd::Identity(3, 3)));
  CHECK(((w.transpose() * w) - d.inverse()).norm() < 1e-12);
  const Eigen::Vector3d v(1, 2, 3);
  CHECK((b.whiten(Eigen::VectorXd(v)) - w * v).norm() < 1e-12);
  CHECK((b.scaled(4.0).dense() - 4.0 * d).norm() < 1e-12);
}

TEST_CASE("pmu covariance rotates the polar errors") {
  const double ang = 0.7, mag = 2.0, fm = 0.03, sa = 0.01;
  Eigen::VectorXcd x(1);
  x(0) = std::polar(mag, ang);
  const Eigen::MatrixXd r = pmu_covariance(x, fm, sa, 1e-3).dense();
  // radial variance (fm*mag)^2, tangential (mag*sa)^2
  const Eigen::Vector2d radial(std::cos(ang), std::sin(ang)), tangential(-std::sin(ang), std::cos(ang));
  CHECK(radial.dot(r * radial) == doctest::Approx(std::pow(fm * mag, 2)));
  CHECK(tangential.dot(r * tangential) == doctest::Approx(std::pow(mag * sa, 2)));
  CHECK(radial.dot(r * tangential) == doctest::Approx(0.0).epsilon(1e-15));
}
