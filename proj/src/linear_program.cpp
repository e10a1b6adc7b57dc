#include "dgd/linear_program.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace dgd {

std::optional<Eigen::VectorXd> find_feasible_point(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double tol) {
  using Eigen::Index;
  if (A.rows() != b.size()) throw std::invalid_argument("find_feasible_point: dimension mismatch");
  if (!A.allFinite() || !b.allFinite()) throw std::invalid_argument("find_feasible_point: non-finite input");
  const Index m = A.rows();
  const Index n = A.cols();
  if (m == 0) return Eigen::VectorXd::Zero(n);

  // Columns: x (n), slacks (m), artificials (one per row with b < 0).
  std::vector<Index> art_row;
  for (Index i = 0; i < m; ++i) {
    if (b(i) < 0) art_row.push_back(i);
  }
  const Index na = static_cast<Index>(art_row.size());
  const Index cols = n + m + na;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, cols + 1);
  std::vector<Index> basis(static_cast<std::size_t>(m));
  Index a = 0;
  for (Index i = 0; i < m; ++i) {
    const double sign = b(i) < 0 ? -1.0 : 1.0;
    T.row(i).head(n) = sign * A.row(i);
    T(i, n + i) = sign;
    T(i, cols) = sign * b(i);
    if (sign < 0) {
      T(i, n + m + a) = 1.0;
      basis[static_cast<std::size_t>(i)] = n + m + a;
      ++a;
    } else {
      basis[static_cast<std::size_t>(i)] = n + i;
    }
  }
  if (na == 0) return Eigen::VectorXd::Zero(n);

  // Reduced costs of: minimize sum of artificials.
  Eigen::RowVectorXd cost = Eigen::RowVectorXd::Zero(cols + 1);
  for (Index i : art_row) cost -= T.row(i);
  for (Index j = n + m; j < cols; ++j) cost(j) = 0.0;

  constexpr double kPivotTol = 1e-12;
  const Index max_iter = 50 * (m + cols);
  for (Index iter = 0;; ++iter) {
    if (iter > max_iter) throw std::runtime_error("simplex did not terminate");
    Index enter = -1;
    for (Index j = 0; j < cols; ++j) {
      if (cost(j) < -kPivotTol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;
    Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < m; ++i) {
      if (T(i, enter) > kPivotTol) {
        const double ratio = T(i, cols) / T(i, enter);
        if (ratio < best - 1e-15 ||
            (ratio <= best + 1e-15 && leave >= 0 && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          best = std::min(best, ratio);
          leave = i;
        }
      }
    }
    if (leave < 0) break;  // unbounded direction cannot occur in phase 1
    T.row(leave) /= T(leave, enter);
    for (Index i = 0; i < m; ++i) {
      if (i != leave && T(i, enter) != 0.0) T.row(i) -= T(i, enter) * T.row(leave);
    }
    cost -= cost(enter) * T.row(leave);
    basis[static_cast<std::size_t>(leave)] = enter;
  }

  double infeasibility = 0.0;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (Index i = 0; i < m; ++i) {
    const Index j = basis[static_cast<std::size_t>(i)];
    if (j >= n + m) infeasibility += T(i, cols);
    if (j < n) x(j) = std::max(0.0, T(i, cols));
  }
  if (infeasibility > tol) return std::nullopt;
  return x;
}

}  // namespace dgd
