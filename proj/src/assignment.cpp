#include "docstruct/assignment.hpp"

#include <algorithm>
#include <limits>

namespace docstruct {

std::vector<std::optional<std::size_t>> max_weight_assignment(const Eigen::MatrixXd& weights) {
  const std::size_t rows = weights.rows();
  const std::size_t cols = weights.cols();
  std::vector<std::optional<std::size_t>> result(rows);
  if (rows == 0 || cols == 0) return result;

  // Square cost matrix, 1-based, padded with zero-weight dummies.
  const std::size_t n = std::max(rows, cols);
  const double top = weights.maxCoeff();
  auto cost = [&](std::size_t i, std::size_t j) {
    const double w = (i <= rows && j <= cols) ? weights(i - 1, j - 1) : 0.0;
    return top - w;
  };

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
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
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = p[j];
    if (i >= 1 && i <= rows && j <= cols && weights(i - 1, j - 1) > 0) result[i - 1] = j - 1;
  }
  return result;
}

}  // namespace docstruct
