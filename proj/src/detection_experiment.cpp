#include <algorithm>
#include <cmath>
#include <set>

#include "gridsense/error.hpp"
#include "gridsense/fault_detection.hpp"
#include "gridsense/random.hpp"

namespace gridsense {

namespace {

using Index = Eigen::Index;

Index ix(std::size_t i) { return static_cast<Index>(i); }

constexpr std::uint64_t kDetectStream = 11;
constexpr std::uint64_t kNullStream = 12;

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(ix(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(ix(r)) = m.row(ix(rows[r]));
  return out;
}

struct PreparedPlacement {
  ObservedChannels channels;
  Eigen::MatrixXd m;   // restricted D D^T
  Eigen::VectorXd b0;  // restricted
  std::vector<double> thresholds;  // per alpha
};

}  // namespace

std::vector<double> DetectionConfig::resolved_alphas() const {
  if (!alphas.empty()) return alphas;
  std::vector<double> out;
  for (int i = 1; i <= 20; ++i) out.push_back(0.01 * i);
  return out;
}

std::vector<std::size_t> DetectionConfig::resolved_steps() const {
  if (!steps.empty()) return steps;
  std::vector<std::size_t> out;
  for (std::size_t t = 1; t <= frame_len; ++t) out.push_back(t);
  return out;
}

ObservedChannels observed_channels(const EivModel& model, const std::vector<std::size_t>& transmit_buses) {
  std::set<std::size_t> hosts(transmit_buses.begin(), transmit_buses.end());
  std::set<std::size_t> buses = hosts;
  ObservedChannels out;
  for (Index r = 0; r < model.k(); ++r) {
    std::size_t ends[2] = {0, 0};
    int e = 0;
    for (Index c = 0; c < model.n() && e < 2; ++c)
      if (model.d(r, c) != 0.0) ends[e++] = static_cast<std::size_t>(c);
    if (hosts.count(ends[0]) || hosts.count(ends[1])) {
      out.rows.push_back(static_cast<std::size_t>(r));
      buses.insert(ends[0]);
      buses.insert(ends[1]);
    }
  }
  out.buses.assign(buses.begin(), buses.end());
  return out;
}

EivModel restrict_model(const EivModel& model, const ObservedChannels& channels) {
  EivModel out;
  out.sigma_z = model.sigma_z;
  out.sigma_x = model.sigma_x;
  out.d.resize(ix(channels.rows.size()), ix(channels.buses.size()));
  out.b0.resize(ix(channels.rows.size()));
  for (std::size_t r = 0; r < channels.rows.size(); ++r) {
    for (std::size_t c = 0; c < channels.buses.size(); ++c)
      out.d(ix(r), ix(c)) = model.d(ix(channels.rows[r]), ix(channels.buses[c]));
    if (model.b0.size() > 0) out.b0[ix(r)] = model.b0[ix(channels.rows[r])];
    if (!model.branches.empty()) out.branches.push_back(model.branches[channels.rows[r]]);
  }
  return out;
}

Frames restrict_frames(const Frames& frames, const ObservedChannels& channels) {
  return {select_rows(frames.z, channels.rows), select_rows(frames.x, channels.buses)};
}

std::vector<DetectionTrace> pd_vs_time(const GridCase& grid, const std::vector<DetectionPlacement>& placements,
                                       const DetectionConfig& config, ExecutionPolicy policy) {
  if (config.reps == 0) throw Error(ErrorKind::Config, "detection.reps must be positive");
  if (config.frame_len == 0) throw Error(ErrorKind::Config, "detection.frame_len must be positive");
  if (!(config.sigma_z2 > 0.0) || !(config.sigma_x2 > 0.0))
    throw Error(ErrorKind::Config, "detection noise variances must be positive");
  const std::vector<double> alphas = config.resolved_alphas();
  const std::vector<std::size_t> steps = config.resolved_steps();
  for (std::size_t t : steps)
    if (t < 1 || t > config.frame_len)
      throw Error(ErrorKind::Config, "detection step " + std::to_string(t) + " outside 1..frame_len");
  const EivModel model = make_eiv_model(grid, std::sqrt(config.sigma_z2), std::sqrt(config.sigma_x2));
  const Eigen::VectorXd b_true = (1.0 + config.change_fraction) * model.b0;
  const Eigen::MatrixXd m_full = model.d * model.d.transpose();

  std::vector<PreparedPlacement> prepared;
  for (const auto& p : placements) {
    if (p.transmit_buses.empty()) throw Error(ErrorKind::Config, "placement '" + p.name + "' transmits nothing");
    for (std::size_t b : p.transmit_buses)
      if (b >= grid.n_buses) throw Error(ErrorKind::Config, "placement '" + p.name + "' names an unknown bus");
    PreparedPlacement pp;
    pp.channels = observed_channels(model, p.transmit_buses);
    if (pp.channels.rows.empty()) throw Error(ErrorKind::Config, "placement '" + p.name + "' observes no branch");
    pp.m.resize(ix(pp.channels.rows.size()), ix(pp.channels.rows.size()));
    for (std::size_t i = 0; i < pp.channels.rows.size(); ++i)
      for (std::size_t j = 0; j < pp.channels.rows.size(); ++j)
        pp.m(ix(i), ix(j)) = m_full(ix(pp.channels.rows[i]), ix(pp.channels.rows[j]));
    pp.b0.resize(ix(pp.channels.rows.size()));
    for (std::size_t i = 0; i < pp.channels.rows.size(); ++i) pp.b0[ix(i)] = model.b0[ix(pp.channels.rows[i])];
    for (double a : alphas) pp.thresholds.push_back(glrt_threshold(pp.channels.rows.size(), a));
    prepared.push_back(std::move(pp));
  }

  const std::size_t n_place = placements.size();
  const std::size_t n_steps = steps.size();
  struct RepOut {
    std::vector<Eigen::MatrixXd> hits;  // per placement: steps x alphas, 0/1
    std::vector<Eigen::VectorXd> stat;  // per placement: steps
  };
  std::vector<RepOut> out(config.reps);

  for_each_unit(config.reps, policy, [&](std::size_t rep) {
    auto rng = substream(config.seed, {kDetectStream, rep});
    const Frames f = simulate_frames(model, b_true, config.frame_len, rng);
    const Eigen::MatrixXd w = model.d * f.x;  // rows depend only on observed buses
    RepOut& r = out[rep];
    r.hits.assign(n_place, Eigen::MatrixXd::Zero(ix(n_steps), ix(alphas.size())));
    r.stat.assign(n_place, Eigen::VectorXd::Zero(ix(n_steps)));
    for (std::size_t p = 0; p < n_place; ++p) {
      const PreparedPlacement& pp = prepared[p];
      const Eigen::MatrixXd z_obs = select_rows(f.z, pp.channels.rows);
      const Eigen::MatrixXd w_obs = select_rows(w, pp.channels.rows);
      Eigen::VectorXd warm = pp.b0;
      for (std::size_t s = 0; s < n_steps; ++s) {
        const Index t = ix(steps[s]);
        const TmlObjective obj(z_obs.leftCols(t), w_obs.leftCols(t), pp.m, model.sigma_z, model.sigma_x);
        const double f0 = obj.value(pp.b0);
        if (!std::isfinite(f0)) throw Error(ErrorKind::NonFiniteStatistic, "objective at b0 is not finite");
        // Start from the previous optimum when it is already better than b0.
        const Eigen::VectorXd& start = obj.value(warm) < f0 ? warm : pp.b0;
        const MinimizeResult min = minimize_tml(obj, start, config.optimizer);
        const double stat = f0 - min.value;
        for (std::size_t a = 0; a < alphas.size(); ++a)
          if (stat > pp.thresholds[a]) r.hits[p](ix(s), ix(a)) = 1.0;
        r.stat[p][ix(s)] = stat;
        warm = min.b;
      }
    }
  });

  std::vector<DetectionTrace> traces;
  for (std::size_t p = 0; p < n_place; ++p) {
    DetectionTrace tr;
    tr.name = placements[p].name;
    for (std::size_t b : placements[p].transmit_buses) tr.transmit_bus_ids.push_back(grid.external_id(b));
    std::sort(tr.transmit_bus_ids.begin(), tr.transmit_bus_ids.end());
    tr.observed_branches = prepared[p].channels.rows.size();
    tr.observed_buses = prepared[p].channels.buses.size();
    tr.reps = config.reps;
    tr.alphas = alphas;
    tr.steps = steps;
    tr.pd_alpha = Eigen::MatrixXd::Zero(ix(n_steps), ix(alphas.size()));
    tr.mean_statistic = Eigen::VectorXd::Zero(ix(n_steps));
    for (std::size_t rep = 0; rep < config.reps; ++rep) {
      tr.pd_alpha += out[rep].hits[p];
      tr.mean_statistic += out[rep].stat[p];
    }
    tr.pd_alpha /= static_cast<double>(config.reps);
    tr.mean_statistic /= static_cast<double>(config.reps);
    tr.pd_t = tr.pd_alpha.rowwise().mean();
    for (std::size_t t : steps) tr.non_asymptotic.push_back(t == 1);
    traces.push_back(std::move(tr));
  }
  return traces;
}

CalibrationResult null_calibration(const EivModel& model, std::size_t samples, const std::vector<double>& alphas,
                                   std::size_t trials, std::uint64_t seed, ExecutionPolicy policy,
                                   const MinimizeOptions& optimizer) {
  CalibrationResult out;
  out.alphas = alphas;
  out.trials = trials;
  out.dof = static_cast<std::size_t>(model.k());
  out.statistics.resize(ix(trials));
  const Eigen::MatrixXd m = model.d * model.d.transpose();
  for_each_unit(trials, policy, [&](std::size_t i) {
    auto rng = substream(seed, {kNullStream, i});
    const Frames f = simulate_frames(model, model.b0, samples, rng);
    const TmlObjective obj(f.z, model.d * f.x, m, model.sigma_z, model.sigma_x);
    const double f0 = obj.value(model.b0);
    const MinimizeResult min = minimize_tml(obj, model.b0, optimizer);
    out.statistics[ix(i)] = f0 - min.value;
  });
  for (double a : alphas) {
    const double gamma = glrt_threshold(out.dof, a);
    const auto hits = (out.statistics.array() > gamma).count();
    out.rejection_rate.push_back(static_cast<double>(hits) / static_cast<double>(trials));
  }
  return out;
}

}  // namespace gridsense
