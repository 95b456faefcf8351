#include "gridsense/placement.hpp"

#include <algorithm>
#include <bitset>
#include <numeric>
#include <optional>
#include <string>

#include "gridsense/error.hpp"

namespace gridsense {

namespace {

constexpr std::size_t kMaxBuses = 1024;
using Bits = std::bitset<kMaxBuses>;
using Clock = std::chrono::steady_clock;

struct TimedOut {};

// Set-cover view of C: row i is satisfied by any column j with c(i, j) = 1.
struct CoverInstance {
  std::size_t n = 0;
  std::vector<Bits> cols_of_row;
  std::vector<Bits> rows_of_col;
};

CoverInstance make_instance(const ConnectivityMatrix& c) {
  CoverInstance inst;
  inst.n = c.size();
  if (inst.n > kMaxBuses) throw Error(ErrorKind::Config, "placement supports at most 1024 buses");
  inst.cols_of_row.assign(inst.n, Bits{});
  inst.rows_of_col.assign(inst.n, Bits{});
  for (std::size_t i = 0; i < inst.n; ++i)
    for (std::size_t j = 0; j < inst.n; ++j)
      if (c.c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != 0) {
        inst.cols_of_row[i].set(j);
        inst.rows_of_col[j].set(i);
      }
  for (std::size_t i = 0; i < inst.n; ++i)
    if (inst.cols_of_row[i].none())
      throw Error(ErrorKind::Config, "row " + std::to_string(i) + " of C has no ones; bus cannot be covered");
  return inst;
}

std::vector<std::size_t> members(const Bits& bits, std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (bits.test(i)) out.push_back(i);
  return out;
}

class Search {
 public:
  Search(const CoverInstance& inst, Clock::time_point deadline) : inst_(inst), deadline_(deadline) {}

  // Lower bound on columns still needed: a greedy packing of uncovered rows
  // whose admissible column sets are pairwise disjoint. Returns nullopt when
  // some uncovered row has no admissible column.
  std::optional<std::size_t> packing_bound(const Bits& uncovered, const Bits& allowed) const {
    scratch_.clear();
    for (std::size_t i = 0; i < inst_.n; ++i) {
      if (!uncovered.test(i)) continue;
      const std::size_t options = (inst_.cols_of_row[i] & allowed).count();
      if (options == 0) return std::nullopt;
      scratch_.emplace_back(options, i);
    }
    std::sort(scratch_.begin(), scratch_.end());
    Bits used;
    std::size_t bound = 0;
    for (const auto& [options, row] : scratch_) {
      const Bits cols = inst_.cols_of_row[row] & allowed;
      if ((cols & used).none()) {
        ++bound;
        used |= cols;
      }
    }
    return bound;
  }

  void tick() {
    if ((nodes_++ & 0x3ff) == 0 && Clock::now() >= deadline_) throw TimedOut{};
  }

  // Minimum cover size via row branching; improves on `best` in place.
  void minimize(const Bits& uncovered, Bits allowed, std::vector<std::size_t>& chosen,
                std::vector<std::size_t>& best) {
    tick();
    if (uncovered.none()) {
      if (chosen.size() < best.size()) best = chosen;
      return;
    }
    const auto bound = packing_bound(uncovered, allowed);
    if (!bound || chosen.size() + *bound >= best.size()) return;

    std::size_t pick = inst_.n;
    std::size_t fewest = kMaxBuses + 1;
    for (std::size_t i = 0; i < inst_.n; ++i) {
      if (!uncovered.test(i)) continue;
      const std::size_t options = (inst_.cols_of_row[i] & allowed).count();
      if (options < fewest) {
        fewest = options;
        pick = i;
      }
    }
    std::vector<std::pair<std::size_t, std::size_t>> cols;  // (-gain, col)
    for (std::size_t j : members(inst_.cols_of_row[pick] & allowed, inst_.n))
      cols.emplace_back(kMaxBuses - (inst_.rows_of_col[j] & uncovered).count(), j);
    std::sort(cols.begin(), cols.end());
    for (const auto& [neg_gain, j] : cols) {
      chosen.push_back(j);
      minimize(uncovered & ~inst_.rows_of_col[j], allowed, chosen, best);
      chosen.pop_back();
      allowed.reset(j);
      if (chosen.size() + 1 >= best.size()) return;
    }
  }

  // Include-first DFS over columns in index order, bounded by `budget`
  // columns. Visits covers in lexicographic order; `visit` returns false to stop.
  template <typename Visit>
  bool lexicographic(std::size_t col, const Bits& uncovered, std::vector<std::size_t>& chosen, std::size_t budget,
                     const Bits& universe, Visit&& visit) {
    tick();
    if (uncovered.none()) return visit(chosen);
    if (chosen.size() >= budget) return true;
    while (col < inst_.n && !universe.test(col)) ++col;
    if (col >= inst_.n) return true;
    Bits allowed;
    for (std::size_t j = col; j < inst_.n; ++j)
      if (universe.test(j)) allowed.set(j);
    const auto bound = packing_bound(uncovered, allowed);
    if (!bound || chosen.size() + *bound > budget) return true;

    chosen.push_back(col);
    const bool go_on = lexicographic(col + 1, uncovered & ~inst_.rows_of_col[col], chosen, budget, universe, visit);
    chosen.pop_back();
    if (!go_on) return false;
    return lexicographic(col + 1, uncovered, chosen, budget, universe, visit);
  }

 private:
  const CoverInstance& inst_;
  Clock::time_point deadline_;
  std::size_t nodes_ = 0;
  mutable std::vector<std::pair<std::size_t, std::size_t>> scratch_;
};

std::vector<std::size_t> greedy_cover(const CoverInstance& inst, const Bits& rows, const Bits& cols) {
  Bits uncovered = rows;
  std::vector<std::size_t> chosen;
  while (uncovered.any()) {
    std::size_t best = inst.n;
    std::size_t gain = 0;
    for (std::size_t j = 0; j < inst.n; ++j) {
      if (!cols.test(j)) continue;
      const std::size_t g = (inst.rows_of_col[j] & uncovered).count();
      if (g > gain) {
        gain = g;
        best = j;
      }
    }
    chosen.push_back(best);
    uncovered &= ~inst.rows_of_col[best];
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

// Rows and columns split into independent blocks (connected components of
// the bipartite row/column incidence).
std::vector<std::pair<Bits, Bits>> components(const CoverInstance& inst) {
  std::vector<int> label(inst.n, -1);
  std::vector<std::pair<Bits, Bits>> out;
  for (std::size_t start = 0; start < inst.n; ++start) {
    if (label[start] >= 0) continue;
    Bits rows, cols;
    std::vector<std::size_t> stack{start};
    rows.set(start);
    label[start] = static_cast<int>(out.size());
    while (!stack.empty()) {
      const std::size_t row = stack.back();
      stack.pop_back();
      for (std::size_t j : members(inst.cols_of_row[row] & ~cols, inst.n)) {
        cols.set(j);
        for (std::size_t i : members(inst.rows_of_col[j] & ~rows, inst.n)) {
          rows.set(i);
          label[i] = static_cast<int>(out.size());
          stack.push_back(i);
        }
      }
    }
    out.emplace_back(rows, cols);
  }
  return out;
}

}  // namespace

std::string_view to_string(Certificate certificate) {
  return certificate == Certificate::ProvedOptimal ? "proved_optimal" : "feasible_only";
}

PlacementProblem make_problem(const ConnectivityMatrix& c, const GridCase& grid) {
  PlacementProblem p{c, {}};
  for (const auto& b : grid.buses) p.bus_ids.push_back(b.id);
  return p;
}

PlacementProblem make_problem(const ConnectivityMatrix& c) {
  PlacementProblem p{c, std::vector<int>(c.size())};
  std::iota(p.bus_ids.begin(), p.bus_ids.end(), 1);
  return p;
}

bool verify_cover(const ConnectivityMatrix& c, const std::vector<std::size_t>& buses) {
  for (Eigen::Index i = 0; i < c.c.rows(); ++i) {
    bool covered = false;
    for (std::size_t j : buses)
      if (c.c(i, static_cast<Eigen::Index>(j)) != 0) covered = true;
    if (!covered) return false;
  }
  return true;
}

PlacementSolution solve_placement(const PlacementProblem& problem, const PlacementOptions& options) {
  const CoverInstance inst = make_instance(problem.c);
  const auto deadline = Clock::now() + options.time_budget;
  Search search(inst, deadline);

  PlacementSolution out;
  out.method = problem.c.method;
  std::vector<std::size_t> selected;
  try {
    for (const auto& [rows, cols] : components(inst)) {
      // Optimum size of this block, then its lexicographically first optimum.
      std::vector<std::size_t> best = greedy_cover(inst, rows, cols);
      const std::vector<std::size_t> greedy = best;
      std::vector<std::size_t> chosen;
      Bits allowed = cols;
      try {
        search.minimize(rows, allowed, chosen, best);
      } catch (const TimedOut&) {
        out.certificate = Certificate::FeasibleOnly;
        std::sort(best.begin(), best.end());
        selected.insert(selected.end(), best.begin(), best.end());
        throw;
      }
      std::vector<std::size_t> first;
      search.lexicographic(0, rows, chosen, best.size(), cols, [&](const std::vector<std::size_t>& cover) {
        first = cover;
        return false;
      });
      selected.insert(selected.end(), first.begin(), first.end());
    }
  } catch (const TimedOut&) {
    // Remaining blocks fall back to greedy covers.
    Bits covered;
    for (std::size_t j : selected) covered |= inst.rows_of_col[j];
    Bits all_cols;
    for (std::size_t j = 0; j < inst.n; ++j) all_cols.set(j);
    Bits rows;
    for (std::size_t i = 0; i < inst.n; ++i)
      if (!covered.test(i)) rows.set(i);
    const auto rest = greedy_cover(inst, rows, all_cols);
    selected.insert(selected.end(), rest.begin(), rest.end());
    out.certificate = Certificate::FeasibleOnly;
  }
  std::sort(selected.begin(), selected.end());
  selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
  out.pmu_indices = selected;
  out.objective = selected.size();
  for (std::size_t j : selected) out.pmu_buses.push_back(problem.bus_ids.at(j));

  if (out.certificate == Certificate::ProvedOptimal && options.alternate_limit > 0) {
    try {
      Search enumerate(inst, deadline);
      Bits rows, cols;
      for (std::size_t j = 0; j < inst.n; ++j) {
        rows.set(j);
        cols.set(j);
      }
      std::vector<std::size_t> chosen;
      enumerate.lexicographic(0, rows, chosen, out.objective, cols, [&](const std::vector<std::size_t>&) {
        return ++out.alternates_found < options.alternate_limit;
      });
    } catch (const TimedOut&) {
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> enumerate_optima(const PlacementProblem& problem, std::size_t objective,
                                                       std::size_t limit) {
  std::vector<std::vector<std::size_t>> out;
  if (limit == 0) return out;
  const CoverInstance inst = make_instance(problem.c);
  Search search(inst, Clock::time_point::max());
  Bits rows, cols;
  for (std::size_t j = 0; j < inst.n; ++j) {
    rows.set(j);
    cols.set(j);
  }
  std::vector<std::size_t> chosen;
  search.lexicographic(0, rows, chosen, objective, cols, [&](const std::vector<std::size_t>& cover) {
    out.push_back(cover);
    return out.size() < limit;
  });
  return out;
}

}  // namespace gridsense
