#include <cmath>

#include "doctest.h"

#include "gridsense/error.hpp"
#include "gridsense/fixtures.hpp"
#include "gridsense/scenario.hpp"

using namespace gridsense;

namespace {

std::vector<EstimatorMode> modes() {
  PmuPlan p;
  p.pmu_buses = {1, 5, 6, 8};
  p.transmit_buses = p.pmu_buses;
  return {{"wls", std::nullopt}, {"pmu", p}};
}

ScenarioConfig small(ScenarioKind kind = ScenarioKind::Normal) {
  ScenarioConfig c;
  c.scenario = kind;
  c.steps = 6;
  c.reps = 8;
  c.seed = 17;
  return c;
}

bool same(const EstimationRun& a, const EstimationRun& b) {
  for (Eigen::Index i = 0; i < a.eps_t.size(); ++i) {
    if (a.eps_t(i) != b.eps_t(i)) return false;
    const bool na = std::isnan(a.p_index_t(i)), nb = std::isnan(b.p_index_t(i));
    if (na != nb || (!na && a.p_index_t(i) != b.p_index_t(i))) return false;
  }
  return a.rep_eps == b.rep_eps && a.trace_covariance == b.trace_covariance;
}

}  // namespace

TEST_CASE("scenario names") {
  for (auto k : {ScenarioKind::Normal, ScenarioKind::BadData, ScenarioKind::SuddenLoad})
    CHECK(parse_scenario(to_string(k)) == k);
  CHECK_FALSE(parse_scenario("storm").has_value());
}

TEST_CASE("runs are reproducible and policy independent") {
  const GridCase g = load_case("ieee14");
  const auto a = run_scenario(g, modes(), small(), ExecutionPolicy::Serial);
  const auto b = run_scenario(g, modes(), small(), ExecutionPolicy::Serial);
  const auto c = run_scenario(g, modes(), small(), ExecutionPolicy::Parallel);
  REQUIRE(a.size() == 2);
  for (std::size_t m = 0; m < a.size(); ++m) {
    CHECK(same(a[m], b[m]));
    CHECK(same(a[m], c[m]));
  }
  ScenarioConfig other = small();
  other.seed = 18;
  CHECK_FALSE(same(a[0], run_scenario(g, modes(), other, ExecutionPolicy::Serial)[0]));
}

TEST_CASE("noise-free data gives zero error and a degenerate index") {
  ScenarioConfig c = small();
  c.noise_scale = 0.0;
  c.reps = 2;
  c.wls.tolerance = 1e-10;
  const auto runs = run_scenario(load_case("ieee14"), modes(), c, ExecutionPolicy::Serial);
  for (const auto& r : runs) {
    CHECK(r.eps_t.maxCoeff() < 1e-8);
    for (std::size_t t = 0; t < c.steps; ++t) {
      CHECK(r.p_index_degenerate[t]);
      CHECK(std::isnan(r.p_index_t(static_cast<Eigen::Index>(t))));
    }
  }
}

TEST_CASE("truth trajectory follows the load trend") {
  ScenarioTruth truth;
  ScenarioConfig c = small();
  c.reps = 1;
  const GridCase g = load_case("ieee14");
  run_scenario(g, {{"wls", std::nullopt}}, c, ExecutionPolicy::Serial, &truth);
  REQUIRE(truth.states.size() == c.steps);
  CHECK_FALSE(truth.sudden_load_bus.has_value());
  // heavier load pulls angles further from the slack
  CHECK(truth.states.back().theta.cwiseAbs().maxCoeff() > truth.states.front().theta.cwiseAbs().maxCoeff());
}

TEST_CASE("smaller noise gives smaller error") {
  const GridCase g = load_case("ieee14");
  ScenarioConfig c = small();
  const double full = run_scenario(g, modes(), c, ExecutionPolicy::Serial)[0].mean_eps();
  c.noise_scale = 0.5;
  const double half = run_scenario(g, modes(), c, ExecutionPolicy::Serial)[0].mean_eps();
  CHECK(half < full);
  CHECK(half == doctest::Approx(full / 2).epsilon(0.1));
}

TEST_CASE("PMUs reduce the estimation error") {
  const auto runs = run_scenario(load_case("ieee14"), modes(), small(), ExecutionPolicy::Serial);
  CHECK(runs[1].mean_eps() < runs[0].mean_eps());
  CHECK((runs[1].trace_covariance.array() < runs[0].trace_covariance.array()).all());
}

TEST_CASE("bad data raises the error at the event step") {
  const GridCase g = load_case("ieee14");
  const auto normal = run_scenario(g, modes(), small(), ExecutionPolicy::Serial);
  const auto bad = run_scenario(g, modes(), small(ScenarioKind::BadData), ExecutionPolicy::Serial);
  const Eigen::Index ev = static_cast<Eigen::Index>(small().resolved_event_step()) - 1;
  CHECK(bad[0].eps_t(ev) > normal[0].eps_t(ev));
  // other steps are untouched
  CHECK(bad[0].eps_t(0) == normal[0].eps_t(0));
  CHECK(bad[0].eps_t(ev + 1) == doctest::Approx(normal[0].eps_t(ev + 1)).epsilon(1e-4));
}

TEST_CASE("sudden load change shifts the truth from the event step on") {
  const GridCase g = load_case("ieee14");
  ScenarioTruth normal, sudden;
  ScenarioConfig c = small();
  c.reps = 1;
  run_scenario(g, {{"wls", std::nullopt}}, c, ExecutionPolicy::Serial, &normal);
  c.scenario = ScenarioKind::SuddenLoad;
  run_scenario(g, {{"wls", std::nullopt}}, c, ExecutionPolicy::Serial, &sudden);
  REQUIRE(sudden.sudden_load_bus.has_value());
  const std::size_t b = *sudden.sudden_load_bus;
  CHECK(g.buses[b].type == BusType::PQ);
  const std::size_t ev = c.resolved_event_step() - 1;
  for (std::size_t t = 0; t < c.steps; ++t) {
    const double d = (normal.states[t].flatten() - sudden.states[t].flatten()).cwiseAbs().maxCoeff();
    if (t < ev)
      CHECK(d == 0.0);
    else
      CHECK(d > 1e-4);
  }
  // half the load removed: local voltage rises
  CHECK(sudden.states[ev].v_mag(static_cast<Eigen::Index>(b)) > normal.states[ev].v_mag(static_cast<Eigen::Index>(b)));
}

TEST_CASE("invalid settings are configuration errors") {
  const GridCase g = load_case("ieee14");
  auto kind_of = [&](ScenarioConfig c) {
    try {
      run_scenario(g, modes(), c, ExecutionPolicy::Serial);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Timeout;
  };
  ScenarioConfig c = small();
  c.steps = 0;
  CHECK(kind_of(c) == ErrorKind::Config);
  c = small();
  c.reps = 0;
  CHECK(kind_of(c) == ErrorKind::Config);
  c = small(ScenarioKind::BadData);
  c.event_step = 99;
  CHECK(kind_of(c) == ErrorKind::Config);
}
