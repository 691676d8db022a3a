#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ivauctions/signal.hpp"

namespace iva {

struct Matching {
  std::vector<std::pair<int, int>> edges;  // (agent, item), each used at most once
  double total = 0.0;
};

namespace detail {

/// Square min-cost assignment via shortest augmenting paths with potentials
/// (Jonker-Volgenant style), O(N^3). Exact up to float arithmetic: only
/// additions and comparisons of the inputs.
inline std::vector<int> assignment_min(const std::vector<std::vector<double>>& cost) {
  int nN = static_cast<int>(cost.size());
  const double INF = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<size_t>(nN) + 1, 0.0), v(static_cast<size_t>(nN) + 1, 0.0);
  std::vector<int> p(static_cast<size_t>(nN) + 1, 0), way(static_cast<size_t>(nN) + 1, 0);
  for (int i = 1; i <= nN; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<size_t>(nN) + 1, INF);
    std::vector<char> used(static_cast<size_t>(nN) + 1, false);
    do {
      used[static_cast<size_t>(j0)] = true;
      int i0 = p[static_cast<size_t>(j0)], j1 = -1;
      double delta = INF;
      for (int j = 1; j <= nN; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        double cur = cost[static_cast<size_t>(i0 - 1)][static_cast<size_t>(j - 1)] -
                     u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= nN; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<size_t>(j0)] != 0);
    do {
      int j1 = way[static_cast<size_t>(j0)];
      p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<size_t>(nN), -1);
  for (int j = 1; j <= nN; ++j)
    if (p[static_cast<size_t>(j)] >= 1) row_to_col[static_cast<size_t>(p[static_cast<size_t>(j)] - 1)] = j - 1;
  return row_to_col;
}

}  // namespace detail

/// Exact maximum total-weight matching (not necessarily perfect) on a
/// rectangular nonnegative matrix W[agent][item]. Zero-weight pairings are
/// dropped from the edge list; they never change the total.
inline Matching max_weight_matching(const std::vector<std::vector<double>>& W) {
  int n = static_cast<int>(W.size());
  if (n == 0) return {};
  int m = static_cast<int>(W[0].size());
  for (const auto& row : W) {
    if (static_cast<int>(row.size()) != m) throw std::invalid_argument("max_weight_matching: ragged matrix");
    for (double w : row)
      if (!(w >= 0.0) || !std::isfinite(w))
        throw std::invalid_argument("max_weight_matching: weights must be finite and nonnegative");
  }
  int N = std::max(n, m);
  std::vector<std::vector<double>> cost(static_cast<size_t>(N), std::vector<double>(static_cast<size_t>(N), 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) cost[static_cast<size_t>(i)][static_cast<size_t>(j)] = -W[static_cast<size_t>(i)][static_cast<size_t>(j)];
  std::vector<int> assign = detail::assignment_min(cost);
  Matching out;
  for (int i = 0; i < n; ++i) {
    int j = assign[static_cast<size_t>(i)];
    if (j >= 0 && j < m && W[static_cast<size_t>(i)][static_cast<size_t>(j)] > 0.0) {
      out.edges.emplace_back(i, j);
      out.total += W[static_cast<size_t>(i)][static_cast<size_t>(j)];
    }
  }
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

inline double max_matching_value(const std::vector<std::vector<double>>& W) {
  return max_weight_matching(W).total;
}

/// The lexicographically smallest edge set among maximum matchings: scan
/// candidate edges in (agent, item) order and keep an edge iff forcing it
/// still reaches the optimum. Fixes the matching used by the welfare
/// decomposition so it is a well-defined function of the weights.
inline Matching lex_max_matching(const std::vector<std::vector<double>>& W, double tol = 1e-9) {
  int n = static_cast<int>(W.size());
  if (n == 0) return {};
  int m = static_cast<int>(W[0].size());
  double opt = max_matching_value(W);
  Matching out;
  std::vector<char> row_used(static_cast<size_t>(n), false), col_used(static_cast<size_t>(m), false);
  double forced = 0.0;

  auto residual_value = [&](int extra_i, int extra_j) {
    std::vector<int> rows, cols;
    for (int i = 0; i < n; ++i)
      if (!row_used[static_cast<size_t>(i)] && i != extra_i) rows.push_back(i);
    for (int j = 0; j < m; ++j)
      if (!col_used[static_cast<size_t>(j)] && j != extra_j) cols.push_back(j);
    if (rows.empty() || cols.empty()) return 0.0;
    std::vector<std::vector<double>> sub(rows.size(), std::vector<double>(cols.size()));
    for (size_t a = 0; a < rows.size(); ++a)
      for (size_t b = 0; b < cols.size(); ++b)
        sub[a][b] = W[static_cast<size_t>(rows[a])][static_cast<size_t>(cols[b])];
    return max_matching_value(sub);
  };

  while (true) {
    if (forced + residual_value(-1, -1) <= forced + tol) break;  // already optimal, stop (prefix-minimal)
    bool extended = false;
    for (int i = 0; i < n && !extended; ++i) {
      if (row_used[static_cast<size_t>(i)]) continue;
      for (int j = 0; j < m && !extended; ++j) {
        if (col_used[static_cast<size_t>(j)]) continue;
        double w = W[static_cast<size_t>(i)][static_cast<size_t>(j)];
        if (w <= 0.0) continue;
        if (forced + w + residual_value(i, j) >= opt - tol) {
          out.edges.emplace_back(i, j);
          out.total += w;
          forced += w;
          row_used[static_cast<size_t>(i)] = true;
          col_used[static_cast<size_t>(j)] = true;
          extended = true;
        }
      }
    }
    if (!extended) break;
  }
  return out;
}

}  // namespace iva
