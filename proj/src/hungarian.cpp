#include "graphtrack/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace graphtrack {

namespace {

// Shortest-augmenting-path Hungarian method with potentials, O(n^2 m), n <= m.
// Returns col_of_row.
std::vector<int> hungarian_rows_le_cols(const Eigen::MatrixXd& c) {
  const int n = static_cast<int>(c.rows());
  const int m = static_cast<int>(c.cols());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
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
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of_row(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) col_of_row[p[j] - 1] = j - 1;
  }
  return col_of_row;
}

}  // namespace

Assignment solve_assignment(const Eigen::MatrixXd& cost) {
  const auto rows = static_cast<std::size_t>(cost.rows());
  const auto cols = static_cast<std::size_t>(cost.cols());
  Assignment out;
  std::vector<char> row_used(rows, 0), col_used(cols, 0);

  if (rows > 0 && cols > 0) {
    double max_finite = 0.0;
    bool any_finite = false;
    for (Eigen::Index r = 0; r < cost.rows(); ++r)
      for (Eigen::Index c = 0; c < cost.cols(); ++c)
        if (std::isfinite(cost(r, c))) {
          max_finite = std::max(max_finite, std::abs(cost(r, c)));
          any_finite = true;
        }

    if (any_finite) {
      // A forbidden pair costs more than any full set of finite pairs.
      const double big = (max_finite + 1.0) * static_cast<double>(std::min(rows, cols) + 1);
      const Eigen::MatrixXd finite = cost.unaryExpr([big](double x) { return std::isfinite(x) ? x : big; });
      const bool transpose = rows > cols;
      const auto col_of_row = hungarian_rows_le_cols(transpose ? Eigen::MatrixXd(finite.transpose()) : finite);
      for (std::size_t k = 0; k < col_of_row.size(); ++k) {
        if (col_of_row[k] < 0) continue;
        const auto r = transpose ? static_cast<std::size_t>(col_of_row[k]) : k;
        const auto c = transpose ? k : static_cast<std::size_t>(col_of_row[k]);
        const double x = cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        if (!std::isfinite(x)) continue;
        out.pairs.emplace_back(r, c);
        out.total_cost += x;
        row_used[r] = 1;
        col_used[c] = 1;
      }
      std::sort(out.pairs.begin(), out.pairs.end());
    }
  }
  for (std::size_t r = 0; r < rows; ++r)
    if (!row_used[r]) out.unmatched_rows.push_back(r);
  for (std::size_t c = 0; c < cols; ++c)
    if (!col_used[c]) out.unmatched_cols.push_back(c);
  return out;
}

}  // namespace graphtrack
