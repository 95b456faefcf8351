#include "gridsense/electrical_structure.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include "gridsense/error.hpp"

namespace gridsense {

std::string_view to_string(ConnectivityMethod method) {
  return method == ConnectivityMethod::Topological ? "topological" : "electrical";
}

LaplacianRepair repair_laplacian(const Eigen::MatrixXd& m) {
  LaplacianRepair out;
  out.asymmetry_norm = (m - m.transpose()).norm();
  out.laplacian = 0.5 * (m + m.transpose());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out.laplacian(i, i) = 0.0;
    out.laplacian(i, i) = -out.laplacian.row(i).sum();
  }
  return out;
}

ResistanceDistanceMatrix resistance_distance(const JacobianPTheta& jacobian, std::size_t reference) {
  const LaplacianRepair repaired = repair_laplacian(jacobian.m);
  ResistanceDistanceMatrix out = resistance_distance(repaired.laplacian, reference);
  out.asymmetry_norm = repaired.asymmetry_norm;
  return out;
}

ResistanceDistanceMatrix resistance_distance(const Eigen::MatrixXd& laplacian, std::size_t reference) {
  const Eigen::Index n = laplacian.rows();
  const auto r = static_cast<Eigen::Index>(reference);
  if (r >= n) throw Error(ErrorKind::SingularReducedMatrix, "reference bus out of range");

  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i)
    if (i != r) keep.push_back(i);
  const auto m = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd reduced(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) reduced(a, b) = laplacian(keep[a], keep[b]);

  Eigen::LLT<Eigen::MatrixXd> llt(reduced);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::SingularReducedMatrix,
                "grounded dP/dtheta is not positive definite (disconnected network or indefinite Jacobian)");
  const Eigen::MatrixXd inverse = llt.solve(Eigen::MatrixXd::Identity(m, m));
  const Eigen::VectorXd gamma = inverse.diagonal();

  ResistanceDistanceMatrix out;
  out.reference_bus = reference;
  out.e = Eigen::MatrixXd::Zero(n, n);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
  const Eigen::MatrixXd ekk =
      ones * gamma.transpose() + gamma * ones.transpose() - inverse - inverse.transpose();
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) out.e(keep[a], keep[b]) = ekk(a, b);
    out.e(r, keep[a]) = gamma[a];
    out.e(keep[a], r) = gamma[a];
  }
  out.e.diagonal().setZero();

  const double scale = std::max(1.0, out.e.cwiseAbs().maxCoeff());
  if (out.e.minCoeff() < -1e-12 * scale)
    throw Error(ErrorKind::SingularReducedMatrix,
                "negative resistance distance " + std::to_string(out.e.minCoeff()));
  return out;
}

std::size_t ConnectivityMatrix::edge_count() const {
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = i + 1; j < c.cols(); ++j) count += c(i, j) != 0;
  return count;
}

ConnectivityMatrix electrical_connectivity(const ResistanceDistanceMatrix& distances, std::size_t k_target) {
  const Eigen::Index n = distances.e.rows();
  const auto pairs = static_cast<std::size_t>(n * (n - 1) / 2);
  if (k_target > pairs)
    throw Error(ErrorKind::Config, "k_target " + std::to_string(k_target) + " exceeds the " +
                                       std::to_string(pairs) + " available bus pairs");

  std::vector<std::tuple<double, Eigen::Index, Eigen::Index>> entries;
  entries.reserve(pairs);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) entries.emplace_back(distances.e(i, j), i, j);
  std::sort(entries.begin(), entries.end());

  ConnectivityMatrix out;
  out.method = ConnectivityMethod::Electrical;
  out.branch_count_target = k_target;
  out.c = Eigen::MatrixXi::Identity(n, n);
  if (k_target == 0) return out;

  // Distances within rounding of the cut value count as tied.
  const double tau = std::get<0>(entries[k_target - 1]);
  const double band = 1e-12 * std::max(1.0, std::abs(tau));
  std::vector<std::pair<Eigen::Index, Eigen::Index>> chosen, tied;
  for (const auto& [value, i, j] : entries) {
    if (value < tau - band) chosen.emplace_back(i, j);
    else if (value <= tau + band) tied.emplace_back(i, j);
    else break;
  }
  std::sort(tied.begin(), tied.end());
  const std::size_t open = k_target - chosen.size();
  out.tie_broken = tied.size() > open;
  chosen.insert(chosen.end(), tied.begin(), tied.begin() + static_cast<std::ptrdiff_t>(open));
  for (const auto& [i, j] : chosen) {
    out.c(i, j) = 1;
    out.c(j, i) = 1;
  }
  out.tau = tau;
  return out;
}

ConnectivityMatrix topological_connectivity(const GridCase& grid) {
  const auto n = static_cast<Eigen::Index>(grid.n_buses);
  ConnectivityMatrix out;
  out.method = ConnectivityMethod::Topological;
  out.branch_count_target = grid.n_branches;
  out.c = Eigen::MatrixXi::Identity(n, n);
  for (const auto& br : grid.branches) {
    if (!br.in_service) continue;
    out.c(static_cast<Eigen::Index>(br.from_bus), static_cast<Eigen::Index>(br.to_bus)) = 1;
    out.c(static_cast<Eigen::Index>(br.to_bus), static_cast<Eigen::Index>(br.from_bus)) = 1;
  }
  return out;
}

}  // namespace gridsense
