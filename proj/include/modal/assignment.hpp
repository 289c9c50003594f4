#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace modal {

struct AssignmentResult {
  std::vector<int> permutation;  // permutation[row] = assigned column
  double cost = 0.0;             // sum (linear) or max (bottleneck) of matched costs
};

namespace detail {

// Extended-precision accumulator for matched-cost sums. Summing a handful of
// doubles in 113-bit precision and rounding once makes the reported value a
// function of the matched-cost multiset alone, independent of summation
// order, so transposing or relabeling a cost matrix cannot move the result
// by an ulp.
using accum_t = __float128;

inline double exact_matched_sum(const Eigen::MatrixXd& cost,
                                const std::vector<int>& perm) {
  accum_t total = 0;
  for (std::size_t i = 0; i < perm.size(); ++i)
    total += static_cast<accum_t>(cost(static_cast<int>(i), perm[i]));
  return static_cast<double>(total);
}

// Exact optimum by dynamic programming over column subsets; rows are
// processed in order, mask holds the columns already used. Ties take the
// lowest column index.
inline AssignmentResult assignment_dp(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const std::size_t full = std::size_t{1} << n;
  std::vector<accum_t> dp(full, std::numeric_limits<double>::infinity());
  std::vector<int> choice(full, -1);
  dp[0] = 0;
  for (std::size_t mask = 1; mask < full; ++mask) {
    const int row = __builtin_popcountll(mask) - 1;
    for (int j = 0; j < n; ++j) {
      if (!(mask & (std::size_t{1} << j))) continue;
      accum_t cand = dp[mask ^ (std::size_t{1} << j)] + static_cast<accum_t>(cost(row, j));
      if (cand < dp[mask]) {
        dp[mask] = cand;
        choice[mask] = j;
      }
    }
  }
  AssignmentResult result;
  result.permutation.assign(n, -1);
  std::size_t mask = full - 1;
  for (int row = n - 1; row >= 0; --row) {
    int j = choice[mask];
    result.permutation[row] = j;
    mask ^= std::size_t{1} << j;
  }
  result.cost = static_cast<double>(dp[full - 1]);
  return result;
}

// Hungarian algorithm with potentials, O(n^3); used beyond the exact-DP
// size limit.
inline AssignmentResult assignment_hungarian(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  AssignmentResult result;
  result.permutation.assign(n, -1);
  for (int j = 1; j <= n; ++j) result.permutation[p[j] - 1] = j - 1;
  result.cost = exact_matched_sum(cost, result.permutation);
  return result;
}

}  // namespace detail

//! Exact linear sum assignment: permutation minimizing the sum of matched
//! costs. Instances up to 16 rows (every clustering comparison in practice)
//! are solved by exhaustive subset DP in extended precision, which keeps the
//! optimal value bit-identical under transposition and relabeling; larger
//! instances use the Hungarian algorithm.
inline AssignmentResult linear_sum_assignment(const Eigen::MatrixXd& cost) {
  if (cost.rows() != cost.cols())
    throw std::invalid_argument("linear_sum_assignment: matrix must be square");
  const int n = static_cast<int>(cost.rows());
  if (n == 0) return {};
  return n <= 16 ? detail::assignment_dp(cost) : detail::assignment_hungarian(cost);
}

//! Exact linear bottleneck assignment: permutation minimizing the largest
//! matched cost. Thresholds are matrix entries, so the optimum is found by
//! bisecting the sorted entry list and testing perfect matchability with
//! augmenting paths; no arithmetic is performed on cost values.
inline AssignmentResult bottleneck_assignment(const Eigen::MatrixXd& cost) {
  if (cost.rows() != cost.cols())
    throw std::invalid_argument("bottleneck_assignment: matrix must be square");
  const int n = static_cast<int>(cost.rows());
  if (n == 0) return {};

  std::vector<double> values(cost.data(), cost.data() + n * n);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  std::vector<int> match_col(n), match_row(n);
  auto feasible = [&](double threshold) {
    std::fill(match_col.begin(), match_col.end(), -1);
    std::fill(match_row.begin(), match_row.end(), -1);
    std::vector<char> visited(n);
    // Kuhn's augmenting search restricted to edges with cost <= threshold
    std::function<bool(int)> augment = [&](int row) -> bool {
      for (int j = 0; j < n; ++j) {
        if (visited[j] || cost(row, j) > threshold) continue;
        visited[j] = 1;
        if (match_row[j] == -1 || augment(match_row[j])) {
          match_row[j] = row;
          match_col[row] = j;
          return true;
        }
      }
      return false;
    };
    for (int i = 0; i < n; ++i) {
      std::fill(visited.begin(), visited.end(), 0);
      if (!augment(i)) return false;
    }
    return true;
  };

  std::size_t lo = 0, hi = values.size() - 1;
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (feasible(values[mid]))
      hi = mid;
    else
      lo = mid + 1;
  }
  feasible(values[lo]);

  AssignmentResult result;
  result.permutation = match_col;
  result.cost = cost(0, match_col[0]);
  for (int i = 1; i < n; ++i)
    result.cost = std::max(result.cost, cost(i, match_col[i]));
  return result;
}

}  // namespace modal
