#pragma once

#include <Eigen/Dense>

#include <optional>

namespace dgd {

/// Finds x >= 0 with A x <= b by a dense phase-1 simplex, Bland's rule.
/// Returns nullopt when the minimum total infeasibility exceeds `tol`.
std::optional<Eigen::VectorXd> find_feasible_point(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                                   double tol = 1e-9);

}  // namespace dgd
