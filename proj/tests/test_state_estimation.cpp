#include <random>

#include "doctest.h"

#include "gridsense/error.hpp"
#include "gridsense/fixtures.hpp"
#include "gridsense/state_estimation.hpp"

using namespace gridsense;

namespace {

struct Setup {
  GridCase grid;
  AdmittanceMatrix y;
  StateVector truth;
  MeasurementPlan plan;
  Eigen::VectorXd z;
};

Setup setup(const std::string& name) {
  Setup s{load_case(name), {}, {}, {}, {}};
  s.y = build_ybus(s.grid);
  s.truth = StateVector::from_operating_point(solve_power_flow(s.grid, s.y), s.grid.slack_bus);
  s.plan = default_measurement_plan(s.y, s.grid.slack_bus);
  s.z = measurement_function(s.truth, s.plan, s.y, s.grid.slack_bus);
  assign_scada_sigmas(s.plan, s.z, 0.001, 0.02, 1e-3);
  return s;
}

Eigen::VectorXd noisy(const Eigen::VectorXd& z, const Eigen::VectorXd& sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd out = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) out(i) += sigma(i) * n(rng);
  return out;
}

PmuPlan pmus(std::vector<std::size_t> buses) {
  PmuPlan p;
  p.pmu_buses = buses;
  p.transmit_buses = buses;
  return p;
}

}  // namespace

TEST_CASE("noise-free measurements recover the state") {
  for (const char* name : {"ieee14", "ieee30", "ieee57"}) {
    CAPTURE(name);
    const Setup s = setup(name);
    const auto r = wls_estimate(s.plan, s.z, s.y, s.grid.slack_bus, StateVector::flat(s.grid.n_buses));
    CHECK(r.converged);
    CHECK((r.state.flatten() - s.truth.flatten()).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("noise-free PMU augmentation recovers the state") {
  const Setup s = setup("ieee14");
  const auto ch = pmu_channels(pmus({1, 5, 6, 8}), s.y);
  Eigen::VectorXcd ph(ch.size());
  for (std::size_t k = 0; k < ch.size(); ++k) ph(k) = channel_phasor(s.truth, ch[k], s.y, s.grid.slack_bus);
  const BlockCovariance cov = pmu_covariance(ph, 0.03, 0.02 * M_PI / 180, 1e-3);
  const Eigen::VectorXd zp = pmu_measurement_function(s.truth, ch, s.y, s.grid.slack_bus);
  const auto r = wls_estimate_with_pmu(s.plan, s.z, ch, cov, zp, s.y, s.grid.slack_bus,
                                       StateVector::flat(s.grid.n_buses));
  CHECK(r.converged);
  CHECK((r.state.flatten() - s.truth.flatten()).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("duplicating every measurement with doubled variance changes nothing") {
  const Setup s = setup("ieee14");
  std::mt19937_64 rng(3);
  const Eigen::VectorXd y = noisy(s.z, s.plan.noise_sigma, rng);
  MeasurementPlan twice = s.plan;
  twice.entries.insert(twice.entries.end(), s.plan.entries.begin(), s.plan.entries.end());
  twice.noise_sigma.resize(2 * s.plan.size());
  twice.noise_sigma << s.plan.noise_sigma, s.plan.noise_sigma;
  twice.noise_sigma *= std::sqrt(2.0);
  Eigen::VectorXd y2(2 * y.size());
  y2 << y, y;
  const StateVector init = StateVector::flat(s.grid.n_buses);
  WlsOptions o;
  o.tolerance = 1e-12;
  const auto a = wls_estimate(s.plan, y, s.y, s.grid.slack_bus, init, o);
  const auto b = wls_estimate(twice, y2, s.y, s.grid.slack_bus, init, o);
  CHECK((a.state.flatten() - b.state.flatten()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((a.covariance - b.covariance).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("a PMU with enormous variance leaves the estimate unchanged") {
  const Setup s = setup("ieee14");
  std::mt19937_64 rng(5);
  const Eigen::VectorXd y = noisy(s.z, s.plan.noise_sigma, rng);
  const auto ch = pmu_channels(pmus({1, 5}), s.y);
  Eigen::VectorXcd ph(ch.size());
  for (std::size_t k = 0; k < ch.size(); ++k) ph(k) = channel_phasor(s.truth, ch[k], s.y, s.grid.slack_bus);
  const BlockCovariance cov = pmu_covariance(ph, 0.03, 0.02 * M_PI / 180, 1e-3).scaled(1e16);
  const Eigen::VectorXd zp = pmu_measurement_function(s.truth, ch, s.y, s.grid.slack_bus) * 1.1;
  WlsOptions o;
  o.tolerance = 1e-12;
  const StateVector init = StateVector::flat(s.grid.n_buses);
  const auto plain = wls_estimate(s.plan, y, s.y, s.grid.slack_bus, init, o);
  const auto aug = wls_estimate_with_pmu(s.plan, y, ch, cov, zp, s.y, s.grid.slack_bus, init, o);
  CHECK((plain.state.flatten() - aug.state.flatten()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("adding PMUs does not raise the error covariance trace") {
  const Setup s = setup("ieee14");
  const StateVector init = StateVector::flat(s.grid.n_buses);
  double last = wls_estimate(s.plan, s.z, s.y, s.grid.slack_bus, init).covariance.trace();
  std::vector<std::size_t> buses;
  for (std::size_t b : {1, 5, 6, 8, 12}) {
    buses.push_back(b);
    const auto ch = pmu_channels(pmus(buses), s.y);
    Eigen::VectorXcd ph(ch.size());
    for (std::size_t k = 0; k < ch.size(); ++k) ph(k) = channel_phasor(s.truth, ch[k], s.y, s.grid.slack_bus);
    const auto cov = pmu_covariance(ph, 0.03, 0.02 * M_PI / 180, 1e-3);
    const Eigen::VectorXd zp = pmu_measurement_function(s.truth, ch, s.y, s.grid.slack_bus);
    const double tr = wls_estimate_with_pmu(s.plan, s.z, ch, cov, zp, s.y, s.grid.slack_bus, init).covariance.trace();
    CHECK(tr <= last * (1 + 1e-9));
    last = tr;
  }
}

TEST_CASE("unobservable plan raises SingularGain") {
  const Setup s = setup("ieee14");
  MeasurementPlan few;
  few.entries = {s.plan.entries.front(), s.plan.entries.back()};
  few.noise_sigma = Eigen::Vector2d(0.01, 0.01);
  const Eigen::VectorXd y = measurement_function(s.truth, few, s.y, s.grid.slack_bus);
  try {
    wls_estimate(few, y, s.y, s.grid.slack_bus, StateVector::flat(s.grid.n_buses));
    FAIL("expected SingularGain");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularGain);
  }
}

TEST_CASE("iteration cap reports non-convergence") {
  const Setup s = setup("ieee14");
  WlsOptions o;
  o.max_iterations = 1;
  o.tolerance = 1e-14;
  const auto r = wls_estimate(s.plan, s.z, s.y, s.grid.slack_bus, StateVector::flat(s.grid.n_buses), o);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 1);
  o.throw_on_nonconvergence = true;
  CHECK_THROWS_AS(wls_estimate(s.plan, s.z, s.y, s.grid.slack_bus, StateVector::flat(s.grid.n_buses), o),
                  Error);
}

TEST_CASE("estimation error is reduced relative to the raw noise") {
  const Setup s = setup("ieee14");
  std::mt19937_64 rng(11);
  double err = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::VectorXd y = noisy(s.z, s.plan.noise_sigma, rng);
    const auto r = wls_estimate(s.plan, y, s.y, s.grid.slack_bus, s.truth);
    err += (r.state.v_mag - s.truth.v_mag).cwiseAbs().mean();
  }
  CHECK(err / 20 < 1e-3);
}
