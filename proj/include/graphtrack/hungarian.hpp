#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace graphtrack {

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (row, col), ascending row
  std::vector<std::size_t> unmatched_rows;
  std::vector<std::size_t> unmatched_cols;
  double total_cost = 0.0;
};

/// Minimum-cost one-to-one assignment on a rectangular cost matrix. Entries
/// equal to +inf are forbidden: the result maximizes the number of finite
/// pairs first, then minimizes their total cost. Rows and columns are
/// scanned in index order and only strictly better candidates replace the
/// current one, so equal-cost alternatives resolve toward lower indices.
Assignment solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace graphtrack
