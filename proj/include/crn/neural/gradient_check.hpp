#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "crn/neural/mlp.hpp"

namespace crn::neural {

/// Scalar loss of the network output. Fills `grad` (same shape as the
/// output) with d loss / d output when non-null.
using LossFn = std::function<double(const Eigen::MatrixXd& output, Eigen::MatrixXd* grad)>;

struct GradientCheckReport {
    std::vector<double> relative_errors;  // per parameter
    double max_relative_error = 0.0;
    bool passed = false;
};

/// Compares backward() with central differences of step `h`. Relative error
/// is |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
/// Throws ContractError for networks over 10,000 parameters.
GradientCheckReport gradient_check(const Mlp& net, const Eigen::MatrixXd& input, const LossFn& loss,
                                   double tolerance = 1e-4, double h = 1e-5);

}  // namespace crn::neural
