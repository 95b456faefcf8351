#include "gridsense/fault_detection.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>

#include "gridsense/error.hpp"
#include "gridsense/random.hpp"

namespace gridsense {

namespace {

using Index = Eigen::Index;

Index ix(std::size_t i) { return static_cast<Index>(i); }

}  // namespace

EivModel build_incidence(const GridCase& grid) {
  EivModel model;
  model.branches = grid.in_service_branches();
  model.d = Eigen::MatrixXd::Zero(ix(model.branches.size()), ix(grid.n_buses));
  for (std::size_t r = 0; r < model.branches.size(); ++r) {
    const Branch& br = grid.branches[model.branches[r]];
    const std::size_t hi = std::max(br.from_bus, br.to_bus);
    const std::size_t lo = std::min(br.from_bus, br.to_bus);
    model.d(ix(r), ix(hi)) = 1.0;
    model.d(ix(r), ix(lo)) = -1.0;
  }
  return model;
}

Eigen::VectorXd nominal_susceptance(const GridCase& grid) {
  const auto rows = grid.in_service_branches();
  Eigen::VectorXd b(ix(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Branch& br = grid.branches[rows[r]];
    if (br.series_x == 0.0)
      throw Error(ErrorKind::ZeroReactanceBranch,
                  "branch " + std::to_string(grid.external_id(br.from_bus)) + "-" +
                      std::to_string(grid.external_id(br.to_bus)) + " has zero reactance");
    b[ix(r)] = -(1.0 / std::complex<double>(br.series_r, br.series_x)).imag();
  }
  return b;
}

EivModel make_eiv_model(const GridCase& grid, double sigma_z, double sigma_x) {
  EivModel model = build_incidence(grid);
  model.b0 = nominal_susceptance(grid);
  model.sigma_z = sigma_z;
  model.sigma_x = sigma_x;
  return model;
}

Frames simulate_frames(const EivModel& model, const Eigen::VectorXd& b_true, std::size_t samples,
                       std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Index t = ix(samples);
  Eigen::MatrixXd x(model.n(), t);
  for (Index j = 0; j < t; ++j)
    for (Index i = 0; i < model.n(); ++i) x(i, j) = gauss(rng);
  Frames f;
  f.z = b_true.asDiagonal() * (model.d * x);
  for (Index j = 0; j < t; ++j)
    for (Index i = 0; i < model.k(); ++i) f.z(i, j) += model.sigma_z * gauss(rng);
  f.x = x;
  for (Index j = 0; j < t; ++j)
    for (Index i = 0; i < model.n(); ++i) f.x(i, j) += model.sigma_x * gauss(rng);
  return f;
}

Frames simulate_frames(const EivModel& model, const Eigen::VectorXd& b_true, std::size_t samples,
                       std::uint64_t seed) {
  auto rng = substream(seed, {0});
  return simulate_frames(model, b_true, samples, rng);
}

Eigen::MatrixXd h_matrix(const Eigen::VectorXd& b, const EivModel& model) {
  const Eigen::MatrixXd m = model.d * model.d.transpose();
  Eigen::MatrixXd h = model.sigma_x * model.sigma_x * (b.asDiagonal() * m * b.asDiagonal());
  h.diagonal().array() += model.sigma_z * model.sigma_z;
  return h;
}

TmlObjective::TmlObjective(Eigen::MatrixXd z, Eigen::MatrixXd w, Eigen::MatrixXd m, double sigma_z,
                           double sigma_x)
    : z_(std::move(z)), w_(std::move(w)), m_(std::move(m)), var_z_(sigma_z * sigma_z), var_x_(sigma_x * sigma_x) {}

TmlObjective::TmlObjective(const Frames& frames, const EivModel& model)
    : TmlObjective(frames.z, model.d * frames.x, model.d * model.d.transpose(), model.sigma_z, model.sigma_x) {}

double TmlObjective::value(const Eigen::VectorXd& b) const { return value(b, nullptr); }

double TmlObjective::value(const Eigen::VectorXd& b, Eigen::VectorXd* gradient) const {
  const Index k = z_.rows();
  const double t = static_cast<double>(z_.cols());
  Eigen::MatrixXd h = var_x_ * (b.asDiagonal() * m_ * b.asDiagonal());
  h.diagonal().array() += var_z_;
  const Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd a = z_ - b.asDiagonal() * w_;
  const Eigen::MatrixXd p = llt.solve(a);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double f = 0.5 * a.cwiseProduct(p).sum() + 0.5 * t * log_det;
  if (gradient) {
    const Eigen::MatrixXd h_inv = llt.solve(Eigen::MatrixXd::Identity(k, k));
    const Eigen::MatrixXd q = p * p.transpose();
    const Eigen::MatrixXd mb = m_ * b.asDiagonal();
    const Eigen::MatrixXd s = t * h_inv - q;
    gradient->resize(k);
    for (Index i = 0; i < k; ++i) (*gradient)[i] = -p.row(i).dot(w_.row(i)) + var_x_ * mb.row(i).dot(s.col(i));
  }
  return f;
}

Eigen::VectorXd TmlObjective::curvature_hint(const Eigen::VectorXd& b) const {
  Eigen::MatrixXd h = var_x_ * (b.asDiagonal() * m_ * b.asDiagonal());
  h.diagonal().array() += var_z_;
  Eigen::VectorXd c = w_.rowwise().squaredNorm().cwiseQuotient(h.diagonal());
  for (Index i = 0; i < c.size(); ++i)
    if (!(c[i] > 0.0) || !std::isfinite(c[i])) c[i] = 1.0;
  return c;
}

MinimizeResult minimize_tml(const TmlObjective& objective, const Eigen::VectorXd& start,
                            const MinimizeOptions& options) {
  MinimizeResult out;
  out.b = start;
  Eigen::VectorXd g;
  out.value = objective.value(out.b, &g);
  if (!std::isfinite(out.value) || !g.allFinite())
    throw Error(ErrorKind::NonFiniteStatistic, "objective is not finite at the starting point");

  const Eigen::MatrixXd initial = objective.curvature_hint(start).cwiseInverse().asDiagonal();
  Eigen::MatrixXd inv_hess = initial;
  bool reset = false;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
      out.converged = true;
      return out;
    }
    Eigen::VectorXd dir = -inv_hess * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      inv_hess = initial;
      dir = -inv_hess * g;
      slope = g.dot(dir);
    }
    double step = 1.0;
    Eigen::VectorXd b_next, g_next;
    double f_next = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      b_next = out.b + step * dir;
      f_next = objective.value(b_next, &g_next);
      if (!std::isfinite(f_next)) {
        step *= 0.5;
        continue;
      }
      if (f_next <= out.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      // Below the resolution of f, progress is judged on the gradient.
      if (std::abs(f_next - out.value) <= 1e-12 * (1.0 + std::abs(out.value)) && g_next.allFinite() &&
          g_next.lpNorm<Eigen::Infinity>() < g.lpNorm<Eigen::Infinity>()) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    out.iterations = iter + 1;
    if (!accepted) {
      // No representable decrease left along this direction.
      if (reset) {
        out.converged = g.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance;
        return out;
      }
      reset = true;
      inv_hess = initial;
      continue;
    }
    reset = false;
    if (!g_next.allFinite())
      throw Error(ErrorKind::OptimizerDiverged, "gradient became non-finite at iteration " + std::to_string(iter + 1));
    const Eigen::VectorXd s = b_next - out.b;
    const Eigen::VectorXd y = g_next - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = inv_hess * y;
      inv_hess += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
    }
    out.b = b_next;
    out.value = f_next;
    g = g_next;
  }
  out.converged = g.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance;
  return out;
}

double glrt_threshold(std::size_t dof, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::Config, "alpha must lie in (0, 1)");
  if (dof == 0) throw Error(ErrorKind::Config, "chi-squared threshold needs at least one degree of freedom");
  const boost::math::chi_squared dist(static_cast<double>(dof));
  return 0.5 * boost::math::quantile(dist, 1.0 - alpha);
}

GlrtResult tml_glrt(const Frames& frames, const Eigen::VectorXd& b0, const EivModel& model, double alpha,
                    const MinimizeOptions& options) {
  if (frames.z.cols() < 1) throw Error(ErrorKind::Config, "GLRT needs at least one sample");
  const TmlObjective objective(frames, model);
  const double f0 = objective.value(b0);
  if (!std::isfinite(f0)) throw Error(ErrorKind::NonFiniteStatistic, "objective at b0 is not finite");
  const MinimizeResult min = minimize_tml(objective, b0, options);
  GlrtResult r;
  r.t_tml = f0 - min.value;
  if (!std::isfinite(r.t_tml)) throw Error(ErrorKind::NonFiniteStatistic, "test statistic is not finite");
  r.threshold = glrt_threshold(static_cast<std::size_t>(b0.size()), alpha);
  r.decision = r.t_tml > r.threshold ? Hypothesis::H1 : Hypothesis::H0;
  r.b_hat = min.b;
  r.alpha = alpha;
  r.converged = min.converged;
  r.iterations = min.iterations;
  return r;
}

}  // namespace gridsense
