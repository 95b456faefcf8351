#include "gridsense/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "gridsense/error.hpp"
#include "gridsense/random.hpp"

namespace gridsense {

namespace {

// Stream tags for substream().
constexpr std::uint64_t kLoadStream = 1;
constexpr std::uint64_t kEventStream = 2;
constexpr std::uint64_t kScadaStream = 3;
constexpr std::uint64_t kPmuStream = 4;
constexpr std::uint64_t kBadDataStream = 5;

using Index = Eigen::Index;

Index ix(std::size_t i) { return static_cast<Index>(i); }

// Slot of a phasor channel in the all-channel noise table:
// bus voltages first, then (branch, end) currents.
std::size_t channel_slot(const PhasorChannel& c, std::size_t n_buses) {
  if (!c.is_current) return c.bus;
  return n_buses + 2 * c.branch + (c.end == BranchEnd::To ? 1 : 0);
}

struct StepData {
  Eigen::VectorXd y_free;  // conventional, noise free
  MeasurementPlan plan;    // sigmas from the true values
  Eigen::VectorXcd phasors;  // every channel slot, noise free
};

struct ModeSetup {
  std::vector<PhasorChannel> channels;
  std::vector<std::size_t> slots;
};

double mean_abs(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().mean(); }

}  // namespace

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Normal: return "normal";
    case ScenarioKind::BadData: return "bad_data";
    case ScenarioKind::SuddenLoad: return "sudden_load";
  }
  return "normal";
}

std::optional<ScenarioKind> parse_scenario(std::string_view text) {
  if (text == "normal") return ScenarioKind::Normal;
  if (text == "bad_data") return ScenarioKind::BadData;
  if (text == "sudden_load") return ScenarioKind::SuddenLoad;
  return std::nullopt;
}

double EstimationRun::mean_eps() const { return eps_t.size() == 0 ? 0.0 : eps_t.mean(); }

double EstimationRun::mean_p_index() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (Index t = 0; t < p_index_t.size(); ++t) {
    if (p_index_degenerate[static_cast<std::size_t>(t)]) continue;
    sum += p_index_t[t];
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

GridCase scaled_case(const GridCase& grid, const Eigen::VectorXd& bus_factors, double generation_factor) {
  GridCase out = grid;
  for (std::size_t i = 0; i < out.n_buses; ++i) {
    out.buses[i].p_demand *= bus_factors[ix(i)];
    out.buses[i].q_demand *= bus_factors[ix(i)];
  }
  for (auto& g : out.generators) g.p_gen *= generation_factor;
  return out;
}

std::vector<EstimationRun> run_scenario(const GridCase& grid, const std::vector<EstimatorMode>& modes,
                                        const ScenarioConfig& config, ExecutionPolicy policy,
                                        ScenarioTruth* truth_out) {
  if (config.steps == 0) throw Error(ErrorKind::Config, "estimation.steps must be positive");
  if (config.reps == 0) throw Error(ErrorKind::Config, "estimation.reps must be positive");
  const std::size_t event = config.resolved_event_step();
  if (config.scenario != ScenarioKind::Normal && (event < 1 || event > config.steps))
    throw Error(ErrorKind::Config, "estimation.event_step " + std::to_string(event) + " outside 1.." +
                                       std::to_string(config.steps));

  const std::size_t n = grid.n_buses;
  const std::size_t slack = grid.slack_bus;
  const std::size_t steps = config.steps;
  const std::size_t reps = config.reps;
  const AdmittanceMatrix ybus = build_ybus(grid);
  const std::size_t n_slots = n + 2 * ybus.branches.size();
  const double angle_sigma = config.pmu_angle_sigma_deg * std::acos(-1.0) / 180.0;

  // Every possible channel, so modes sharing a channel share its error.
  PmuPlan everything;
  for (std::size_t i = 0; i < n; ++i) everything.transmit_buses.push_back(i);
  const std::vector<PhasorChannel> all_channels = pmu_channels(everything, ybus);

  std::optional<std::size_t> sudden_bus;
  if (config.scenario == ScenarioKind::SuddenLoad) {
    std::vector<std::size_t> pq;
    for (std::size_t i = 0; i < n; ++i)
      if (grid.buses[i].type == BusType::PQ && (grid.buses[i].p_demand != 0.0 || grid.buses[i].q_demand != 0.0))
        pq.push_back(i);
    if (pq.empty()) throw Error(ErrorKind::Config, "sudden_load scenario needs a loaded PQ bus");
    auto rng = substream(config.seed, {kEventStream});
    sudden_bus = pq[std::uniform_int_distribution<std::size_t>(0, pq.size() - 1)(rng)];
  }

  // Ground truth trajectory, shared by all reps.
  const MeasurementPlan base_plan = default_measurement_plan(ybus, slack);
  std::vector<StateVector> truth;
  std::vector<StepData> data;
  truth.reserve(steps);
  data.reserve(steps);
  Eigen::VectorXd warm_mag(ix(n)), warm_ang(ix(n));
  for (std::size_t i = 0; i < n; ++i) {
    warm_mag[ix(i)] = grid.buses[i].v_mag_init;
    warm_ang[ix(i)] = grid.buses[i].v_ang_init;
  }
  for (std::size_t t = 1; t <= steps; ++t) {
    const double trend = 1.0 + (steps > 1 ? config.load_trend * static_cast<double>(t - 1) /
                                                static_cast<double>(steps - 1)
                                          : 0.0);
    auto rng = substream(config.seed, {kLoadStream, t});
    std::uniform_real_distribution<double> u(-config.load_fluctuation, config.load_fluctuation);
    Eigen::VectorXd factors(ix(n));
    for (std::size_t i = 0; i < n; ++i) factors[ix(i)] = trend * (1.0 + u(rng));
    if (sudden_bus && t >= event) factors[ix(*sudden_bus)] *= (1.0 - config.sudden_load_fraction);

    GridCase step_case = scaled_case(grid, factors, trend);
    for (std::size_t i = 0; i < n; ++i) {
      step_case.buses[i].v_mag_init = warm_mag[ix(i)];
      step_case.buses[i].v_ang_init = warm_ang[ix(i)];
    }

    const OperatingPoint op = solve_power_flow(step_case, ybus, config.power_flow);
    if (!op.converged)
      throw Error(ErrorKind::NotConverged, "power flow did not converge at step " + std::to_string(t));
    warm_mag = op.v_mag;
    warm_ang = op.v_ang;

    StateVector s = StateVector::from_operating_point(op, slack);
    StepData d;
    d.plan = base_plan;
    d.y_free = measurement_function(s, d.plan, ybus, slack);
    assign_scada_sigmas(d.plan, d.y_free, config.v_sigma_fraction, config.power_sigma_fraction,
                        config.sigma_floor);
    d.phasors.resize(ix(n_slots));
    d.phasors.setZero();
    for (const auto& c : all_channels) d.phasors[ix(channel_slot(c, n))] = channel_phasor(s, c, ybus, slack);
    truth.push_back(std::move(s));
    data.push_back(std::move(d));
  }

  std::vector<ModeSetup> setups;
  for (const auto& mode : modes) {
    ModeSetup m;
    if (mode.pmu) {
      m.channels = pmu_channels(*mode.pmu, ybus);
      for (const auto& c : m.channels) m.slots.push_back(channel_slot(c, n));
    }
    setups.push_back(std::move(m));
  }

  // Channels eligible for bad data.
  std::vector<std::size_t> pflow_rows, qflow_rows;
  for (std::size_t r = 0; r < base_plan.size(); ++r) {
    if (base_plan.entries[r].kind == MeasurementKind::Pflow) pflow_rows.push_back(r);
    if (base_plan.entries[r].kind == MeasurementKind::Qflow) qflow_rows.push_back(r);
  }
  if (config.scenario == ScenarioKind::BadData && (pflow_rows.empty() || qflow_rows.empty()))
    throw Error(ErrorKind::Config, "bad_data scenario needs branch flow measurements");

  const std::size_t n_modes = modes.size();
  const Index dim = ix(2 * n - 1);
  // Per rep, per mode outputs.
  struct RepOut {
    std::vector<Eigen::MatrixXd> est;  // per mode: dim x steps
    std::vector<Eigen::VectorXd> eps;  // per mode: steps
    std::vector<Eigen::VectorXd> num;  // per mode: steps
    Eigen::VectorXd den;               // steps
    std::vector<Eigen::VectorXd> trace;
    std::vector<Eigen::VectorXi> iters;
  };
  std::vector<RepOut> out(reps);

  for_each_unit(reps, policy, [&](std::size_t rep) {
    RepOut& r = out[rep];
    r.est.assign(n_modes, Eigen::MatrixXd(dim, ix(steps)));
    r.eps.assign(n_modes, Eigen::VectorXd(ix(steps)));
    r.num.assign(n_modes, Eigen::VectorXd(ix(steps)));
    r.trace.assign(n_modes, Eigen::VectorXd(ix(steps)));
    r.iters.assign(n_modes, Eigen::VectorXi(ix(steps)));
    r.den.resize(ix(steps));
    std::vector<StateVector> previous(n_modes, StateVector::flat(n));
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (std::size_t t = 0; t < steps; ++t) {
      const StepData& d = data[t];
      const StateVector& s_true = truth[t];

      auto scada_rng = substream(config.seed, {kScadaStream, rep, t + 1});
      Eigen::VectorXd y = d.y_free;
      for (Index k = 0; k < y.size(); ++k) y[k] += config.noise_scale * d.plan.noise_sigma[k] * gauss(scada_rng);
      if (config.scenario == ScenarioKind::BadData && t + 1 == event) {
        auto bad_rng = substream(config.seed, {kBadDataStream, rep});
        const std::size_t rp = pflow_rows[std::uniform_int_distribution<std::size_t>(0, pflow_rows.size() - 1)(bad_rng)];
        const std::size_t rq = qflow_rows[std::uniform_int_distribution<std::size_t>(0, qflow_rows.size() - 1)(bad_rng)];
        const double sp = std::bernoulli_distribution(0.5)(bad_rng) ? 1.0 : -1.0;
        const double sq = std::bernoulli_distribution(0.5)(bad_rng) ? 1.0 : -1.0;
        y[ix(rp)] += sp * config.noise_scale * config.bad_data_sigmas * d.plan.noise_sigma[ix(rp)];
        y[ix(rq)] += sq * config.noise_scale * config.bad_data_sigmas * d.plan.noise_sigma[ix(rq)];
      }
      r.den[ix(t)] = (y - d.y_free).cwiseAbs().sum();

      // Polar errors on every channel slot.
      auto pmu_rng = substream(config.seed, {kPmuStream, rep, t + 1});
      Eigen::VectorXcd noisy(ix(n_slots));
      for (std::size_t k = 0; k < n_slots; ++k) {
        const Complex x = d.phasors[ix(k)];
        const double mag_sigma = std::max(config.pmu_magnitude_fraction * std::abs(x), config.sigma_floor);
        const double dm = config.noise_scale * mag_sigma * gauss(pmu_rng);
        const double da = config.noise_scale * angle_sigma * gauss(pmu_rng);
        noisy[ix(k)] = std::polar(std::abs(x) + dm, std::arg(x) + da);
      }

      for (std::size_t m = 0; m < n_modes; ++m) {
        const ModeSetup& setup = setups[m];
        WlsResult res;
        if (modes[m].pmu) {
          const std::size_t nc = setup.slots.size();
          Eigen::VectorXcd free(ix(nc));
          Eigen::VectorXd y_pmu(ix(2 * nc));
          for (std::size_t c = 0; c < nc; ++c) {
            free[ix(c)] = d.phasors[ix(setup.slots[c])];
            y_pmu[ix(2 * c)] = noisy[ix(setup.slots[c])].real();
            y_pmu[ix(2 * c + 1)] = noisy[ix(setup.slots[c])].imag();
          }
          const BlockCovariance cov = pmu_covariance(free, modes[m].pmu->v_mag_sigma,
                                                     modes[m].pmu->angle_sigma_deg * std::acos(-1.0) / 180.0,
                                                     config.sigma_floor);
          res = wls_estimate_with_pmu(d.plan, y, setup.channels, cov, y_pmu, ybus, slack, previous[m], config.wls);
        } else {
          res = wls_estimate(d.plan, y, ybus, slack, previous[m], config.wls);
        }
        const Eigen::VectorXd flat = res.state.flatten();
        r.est[m].col(ix(t)) = flat;
        r.eps[m][ix(t)] = mean_abs(flat - s_true.flatten());
        r.num[m][ix(t)] = (measurement_function(res.state, d.plan, ybus, slack) - d.y_free).cwiseAbs().sum();
        r.trace[m][ix(t)] = res.covariance.trace();
        r.iters[m][ix(t)] = res.iterations;
        previous[m] = res.state;
      }
    }
  });

  std::vector<EstimationRun> runs;
  for (std::size_t m = 0; m < n_modes; ++m) {
    EstimationRun run;
    run.mode = modes[m].name;
    run.scenario = config.scenario;
    run.reps = reps;
    run.seed = config.seed;
    run.eps_t = Eigen::VectorXd::Zero(ix(steps));
    run.p_index_t = Eigen::VectorXd::Zero(ix(steps));
    run.p_index_degenerate.assign(steps, false);
    run.rep_eps.resize(ix(reps));
    run.rep_p_numerator.resize(ix(reps));
    run.rep_p_denominator.resize(ix(reps));
    run.trace_covariance.resize(ix(reps), ix(steps));
    run.iterations.resize(ix(reps), ix(steps));
    Eigen::MatrixXd est_sum = Eigen::MatrixXd::Zero(dim, ix(steps));
    Eigen::VectorXd num = Eigen::VectorXd::Zero(ix(steps));
    Eigen::VectorXd den = Eigen::VectorXd::Zero(ix(steps));
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const RepOut& r = out[rep];
      est_sum += r.est[m];
      run.eps_t += r.eps[m];
      num += r.num[m];
      den += r.den;
      run.rep_eps[ix(rep)] = r.eps[m].mean();
      run.rep_p_numerator[ix(rep)] = r.num[m].sum();
      run.rep_p_denominator[ix(rep)] = r.den.sum();
      run.trace_covariance.row(ix(rep)) = r.trace[m].transpose();
      run.iterations.row(ix(rep)) = r.iters[m].transpose();
    }
    run.eps_t /= static_cast<double>(reps);
    est_sum /= static_cast<double>(reps);
    for (std::size_t t = 0; t < steps; ++t) {
      run.mean_estimates.push_back(StateVector::from_flat(est_sum.col(ix(t)), n));
      if (den[ix(t)] == 0.0) {
        run.p_index_degenerate[t] = true;
        run.p_index_t[ix(t)] = std::numeric_limits<double>::quiet_NaN();
      } else {
        run.p_index_t[ix(t)] = num[ix(t)] / den[ix(t)];
      }
    }
    runs.push_back(std::move(run));
  }

  if (truth_out) {
    truth_out->states = std::move(truth);
    truth_out->sudden_load_bus = sudden_bus;
  }
  return runs;
}

}  // namespace gridsense
