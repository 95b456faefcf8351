#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

#include <Eigen/Dense>

#include "gridsense/grid_model.hpp"
#include "gridsense/matpower.hpp"

namespace gridsense {

/// dP/dtheta repaired into a weighted Laplacian: off-diagonals are averaged
/// with their transpose and each diagonal is the negated off-diagonal row sum.
struct LaplacianRepair {
  Eigen::MatrixXd laplacian;
  double asymmetry_norm = 0.0;  // ||M - M^T||_F of the input
};

LaplacianRepair repair_laplacian(const Eigen::MatrixXd& m);

struct ResistanceDistanceMatrix {
  Eigen::MatrixXd e;  // rad per p.u. power
  std::size_t reference_bus = 0;
  double asymmetry_norm = 0.0;
};

/// Grounds the repaired Laplacian at `reference`, inverts the reduced block
/// and assembles all pairwise effective resistances.
/// Throws SingularReducedMatrix if the reduced block is not positive definite
/// or any distance comes out negative.
ResistanceDistanceMatrix resistance_distance(const JacobianPTheta& jacobian, std::size_t reference);
ResistanceDistanceMatrix resistance_distance(const Eigen::MatrixXd& laplacian, std::size_t reference);

enum class ConnectivityMethod { Topological, Electrical };

std::string_view to_string(ConnectivityMethod method);

struct ConnectivityMatrix {
  Eigen::MatrixXi c;  // 0/1, unit diagonal, symmetric
  ConnectivityMethod method = ConnectivityMethod::Topological;
  std::optional<double> tau;  // k-th smallest distance (electrical only)
  std::size_t branch_count_target = 0;
  bool tie_broken = false;  // entries equal to tau were split by index order

  std::size_t size() const { return static_cast<std::size_t>(c.rows()); }
  /// Number of distinct off-diagonal pairs (i < j) set to one.
  std::size_t edge_count() const;
};

/// The `k_target` smallest upper-triangular distances become edges. Ties at
/// the cut are admitted in ascending (row, col) order and flagged.
ConnectivityMatrix electrical_connectivity(const ResistanceDistanceMatrix& distances, std::size_t k_target);

/// c[i][j] = 1 iff an in-service branch joins i and j; unit diagonal.
ConnectivityMatrix topological_connectivity(const GridCase& grid);

}  // namespace gridsense
