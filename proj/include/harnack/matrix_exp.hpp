#pragma once

#include <Eigen/Dense>

namespace harnack {

/// e^{tA} by scaling and squaring with Pade approximants.
///
/// Throws std::overflow_error when the result is not finite.
Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& a, double t = 1.0);

}  // namespace harnack
