#include <cmath>
#include <numbers>
#include <random>
#include <tuple>
#include <vector>

#include "doctest.h"

#include "gridsense/error.hpp"
#include "gridsense/fixtures.hpp"
#include "gridsense/grid_model.hpp"
#include "test_support.hpp"

using namespace gridsense;

namespace {

// Reference solution of the same fixtures from an independent AC power-flow
// code (Newton, mismatch 1e-12): {bus, |V|, angle in degrees}.
const std::vector<std::tuple<int, double, double>> kIeee14Reference{
    {1, 1.060000000000, 0.000000000000},    {2, 1.045000000000, -4.982589141975},
    {3, 1.010000000000, -12.725099938268},  {4, 1.017670853692, -10.312901092332},
    {5, 1.019513859819, -8.773853898295},   {6, 1.070000000000, -14.220946463702},
    {7, 1.061519532491, -13.359627365346},  {8, 1.090000000000, -13.359627365346},
    {9, 1.055931720637, -14.938521295229},  {10, 1.050984625000, -15.097288463071},
    {11, 1.056906518540, -14.790622031322}, {12, 1.055188563197, -15.075584520424},
    {13, 1.050381713629, -15.156276336222}, {14, 1.035529945854, -16.033644529206},
};

const std::vector<std::tuple<int, double, double>> kIeee57Reference{
    {4, 0.980779628057, -7.337365383748},   {10, 0.986242027232, -11.449657692213},
    {25, 0.982520776933, -18.173226175328}, {31, 0.935932450452, -19.383804760675},
    {46, 1.059797464360, -11.116069930802}, {57, 0.964826005693, -16.583697284208},
};

void check_against(const std::string& name, const std::vector<std::tuple<int, double, double>>& reference) {
  const GridCase g = load_case(name);
  const AdmittanceMatrix y = build_ybus(g);
  const OperatingPoint op = solve_power_flow(g, y);
  REQUIRE(op.converged);
  CHECK(op.iterations <= 20);
  CHECK(op.max_mismatch <= 1e-8);
  for (const auto& [id, vm, va] : reference) {
    CAPTURE(id);
    const auto i = static_cast<Eigen::Index>(g.internal_index(id));
    CHECK(op.v_mag[i] == doctest::Approx(vm).epsilon(1e-7));
    CHECK(op.v_ang[i] * 180.0 / std::numbers::pi == doctest::Approx(va).epsilon(1e-6));
  }
}

}  // namespace

TEST_CASE("two-bus admittance matrix") {
  const GridCase g = test::from_text(test::two_bus_text(0.0, 0.1));
  const AdmittanceMatrix y = build_ybus(g);
  CHECK(std::abs(y.y(0, 1) - Complex(0.0, 10.0)) < 1e-12);
  CHECK(std::abs(y.y(1, 0) - Complex(0.0, 10.0)) < 1e-12);
  CHECK(std::abs(y.y(0, 0) - Complex(0.0, -10.0)) < 1e-12);
  CHECK(std::abs(y.y(1, 1) - Complex(0.0, -10.0)) < 1e-12);
  CHECK(y.branches.size() == 1);
}

TEST_CASE("bus shunt adds to the diagonal only") {
  std::string with = test::small_case_text(
      "\t1\t3\t0\t0\t0\t0\t1\t1\t0\t100\t1\t1.1\t0.9;\n"
      "\t2\t1\t50\t10\t0\t5\t1\t1\t0\t100\t1\t1.1\t0.9;\n",
      "\t1\t2\t0\t0.1\t0\t0\t0\t0\t0\t0\t1\t-360\t360;\n");
  const AdmittanceMatrix a = build_ybus(test::from_text(test::two_bus_text(0.0, 0.1)));
  const AdmittanceMatrix b = build_ybus(test::from_text(with));
  CHECK((b.y(1, 1) - a.y(1, 1)).imag() == doctest::Approx(0.05));
  CHECK(std::abs(b.y(0, 1) - a.y(0, 1)) < 1e-14);
  CHECK(std::abs(b.y(0, 0) - a.y(0, 0)) < 1e-14);
}

TEST_CASE("IEEE-14 admittance sparsity follows the branch list") {
  const GridCase g = load_case("ieee14");
  const AdmittanceMatrix y = build_ybus(g);
  std::size_t pairs = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    for (Eigen::Index j = i + 1; j < y.size(); ++j)
      if (std::abs(y.y(i, j)) > 0.0) ++pairs;
  CHECK(pairs == 20);
  CHECK(y.branches.size() == 20);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    std::size_t nz = 0;
    for (Eigen::Index j = 0; j < y.size(); ++j)
      if (std::abs(y.y(i, j)) > 0.0) ++nz;
    CHECK(y.pattern[static_cast<std::size_t>(i)].size() == nz);
  }
}

TEST_CASE("admittance matrix reproduces branch two-port currents") {
  const GridCase g = load_case("ieee30");
  const AdmittanceMatrix y = build_ybus(g);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  Eigen::VectorXcd v(y.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = std::polar(1.0 + 0.1 * u(rng), u(rng));
  Eigen::VectorXcd injected = Eigen::VectorXcd::Zero(y.size());
  for (std::size_t i = 0; i < g.n_buses; ++i)
    injected[static_cast<Eigen::Index>(i)] += Complex(g.buses[i].shunt_g, g.buses[i].shunt_b) * v[static_cast<Eigen::Index>(i)];
  for (const auto& br : y.branches) {
    const auto f = static_cast<Eigen::Index>(br.from), t = static_cast<Eigen::Index>(br.to);
    injected[f] += br.yff * v[f] + br.yft * v[t];
    injected[t] += br.ytf * v[f] + br.ytt * v[t];
  }
  CHECK((y.y * v - injected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("zero-injection case stays at the flat point") {
  const std::string text = test::small_case_text(
      "\t1\t3\t0\t0\t0\t0\t1\t1\t0\t100\t1\t1.1\t0.9;\n"
      "\t2\t1\t0\t0\t0\t0\t1\t1\t0\t100\t1\t1.1\t0.9;\n"
      "\t3\t1\t0\t0\t0\t0\t1\t1\t0\t100\t1\t1.1\t0.9;\n",
      "\t1\t2\t0.01\t0.1\t0\t0\t0\t0\t0\t0\t1\t-360\t360;\n"
      "\t2\t3\t0.01\t0.1\t0\t0\t0\t0\t0\t0\t1\t-360\t360;\n",
      "\t1\t0\t0\t300\t-300\t1\t100\t1\t250\t10;\n");
  const GridCase g = test::from_text(text);
  const OperatingPoint op = solve_power_flow(g, build_ybus(g));
  CHECK(op.converged);
  CHECK(op.iterations <= 1);
  CHECK((op.v_mag.array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(op.v_ang.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("IEEE-14 power flow matches the reference solution") { check_against("ieee14", kIeee14Reference); }

TEST_CASE("IEEE-57 power flow matches the reference solution") { check_against("ieee57", kIeee57Reference); }

TEST_CASE("every bundled case converges from its stored and flat starts") {
  for (const auto& name : bundled_case_names()) {
    CAPTURE(name);
    const GridCase g = load_case(name);
    const AdmittanceMatrix y = build_ybus(g);
    for (bool flat : {false, true}) {
      PowerFlowOptions o;
      o.flat_start = flat;
      const OperatingPoint op = solve_power_flow(g, y, o);
      CHECK(op.converged);
      CHECK(op.v_ang[static_cast<Eigen::Index>(g.slack_bus)] == 0.0);
      const Eigen::VectorXcd s = power_injections(y, op.phasors()) - scheduled_injections(g);
      for (std::size_t i = 0; i < g.n_buses; ++i) {
        if (g.buses[i].type == BusType::Slack) continue;
        CHECK(std::abs(s[static_cast<Eigen::Index>(i)].real()) < 1e-8);
        if (g.buses[i].type == BusType::PQ) CHECK(std::abs(s[static_cast<Eigen::Index>(i)].imag()) < 1e-8);
      }
    }
  }
}

TEST_CASE("iteration limit is reported, not thrown") {
  const GridCase g = load_case("ieee57");
  PowerFlowOptions o;
  o.flat_start = true;
  o.max_iterations = 1;
  const OperatingPoint op = solve_power_flow(g, build_ybus(g), o);
  CHECK_FALSE(op.converged);
  CHECK(op.iterations == 1);
  try {
    jacobian_p_theta(build_ybus(g), op);
    FAIL("expected NotConverged");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotConverged);
  }
  CHECK(jacobian_p_theta(build_ybus(g), op, true).m.rows() == 57);
}

TEST_CASE("dP/dtheta of a lossless two-bus line at the flat point") {
  const GridCase g = test::from_text(test::two_bus_text(0.0, 0.1));
  const AdmittanceMatrix y = build_ybus(g);
  const JacobianPTheta j = jacobian_p_theta(y, flat_operating_point(g));
  Eigen::Matrix2d expected;
  expected << 10, -10, -10, 10;
  CHECK((j.m - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dP/dtheta is symmetric at the flat point for tap-free lossless lines") {
  const std::string text = test::small_case_text(
      "\t1\t3\t0\t0\t0\t0\t1\t1\t0\t100\t1\t1.1\t0.9;\n"
      "\t2\t1\t40\t10\t0\t0\t1\t1\t0\t100\t1\t1.1\t0.9;\n"
      "\t3\t1\t30\t5\t0\t0\t1\t1\t0\t100\t1\t1.1\t0.9;\n",
      "\t1\t2\t0\t0.1\t0.02\t0\t0\t0\t0\t0\t1\t-360\t360;\n"
      "\t2\t3\t0\t0.2\t0.01\t0\t0\t0\t0\t0\t1\t-360\t360;\n"
      "\t1\t3\t0\t0.25\t0\t0\t0\t0\t0\t0\t1\t-360\t360;\n");
  const GridCase g = test::from_text(text);
  const JacobianPTheta j = jacobian_p_theta(build_ybus(g), flat_operating_point(g));
  CHECK((j.m - j.m.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dP/dtheta matches finite differences at the solved IEEE-14 point") {
  const GridCase g = load_case("ieee14");
  const AdmittanceMatrix y = build_ybus(g);
  const OperatingPoint op = solve_power_flow(g, y);
  const JacobianPTheta j = jacobian_p_theta(y, op);
  const double h = 1e-6;
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    OperatingPoint plus = op, minus = op;
    plus.v_ang[k] += h;
    minus.v_ang[k] -= h;
    const Eigen::VectorXd fd =
        (power_injections(y, plus.phasors()).real() - power_injections(y, minus.phasors()).real()) / (2 * h);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double scale = std::max(1.0, std::abs(j.m(i, k)));
      CHECK(std::abs(fd[i] - j.m(i, k)) / scale < 1e-6);
    }
  }
}
