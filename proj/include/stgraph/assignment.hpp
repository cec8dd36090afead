#pragma once

#include <limits>
#include <vector>

#include "stgraph/errors.hpp"

namespace stgraph {

// Minimum-cost assignment of every row to a distinct column; requires
// rows <= cols. Returns the assigned column per row.
//
// Hungarian algorithm with potentials, O(n^2 m). Costs must be finite.
inline std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  if (n == 0) return {};
  const int m = static_cast<int>(cost[0].size());
  if (n > m) throw InvariantError("assignment requires rows <= cols");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(m) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(m) + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m) + 1, kInf);
    std::vector<bool> used(static_cast<std::size_t>(m) + 1, false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                           u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> assigned(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j) {
    if (p[static_cast<std::size_t>(j)] != 0)
      assigned[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  }
  return assigned;
}

namespace detail {

inline void assignment_search(const std::vector<std::vector<double>>& cost, std::size_t row,
                              std::vector<bool>& used, std::vector<int>& current, double running,
                              double& best, std::vector<int>& best_assignment) {
  if (row == cost.size()) {
    if (running < best) {
      best = running;
      best_assignment = current;
    }
    return;
  }
  for (std::size_t col = 0; col < cost[row].size(); ++col) {
    if (used[col]) continue;
    const double next = running + cost[row][col];
    if (next >= best) continue;
    used[col] = true;
    current[row] = static_cast<int>(col);
    assignment_search(cost, row + 1, used, current, next, best, best_assignment);
    used[col] = false;
  }
}

}  // namespace detail

// Exhaustive branch-and-bound over all row->column injections. Intended
// for small instances (rows <= 6); also the cross-check oracle for the
// Hungarian route.
inline std::vector<int> min_cost_assignment_exhaustive(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  if (n == 0) return {};
  const std::size_t m = cost[0].size();
  if (n > m) throw InvariantError("assignment requires rows <= cols");

  std::vector<bool> used(m, false);
  std::vector<int> current(n, -1);
  std::vector<int> best_assignment;
  double best = std::numeric_limits<double>::infinity();
  detail::assignment_search(cost, 0, used, current, 0.0, best, best_assignment);
  return best_assignment;
}

}  // namespace stgraph
