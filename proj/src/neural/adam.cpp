#include "crn/neural/adam.hpp"

#include <cmath>

#include "crn/errors.hpp"

namespace crn::neural {

Adam::Adam(Eigen::Index size, AdamConfig cfg)
    : cfg_(cfg), m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
    if (grad.size() != params.size() || grad.size() != m_.size()) {
        throw ShapeError("Adam: gradient, parameter and state sizes differ");
    }
    if (!grad.allFinite()) throw TrainingError("non-finite gradient");
    ++t_;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    params.array() -= lr * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + cfg_.eps);
}

void clip_grad_norm(Eigen::VectorXd& grad, double max_norm) {
    const double n = grad.norm();
    if (n > max_norm && n > 0.0) grad *= max_norm / n;
}

}  // namespace crn::neural
