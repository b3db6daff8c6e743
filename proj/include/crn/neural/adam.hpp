#pragma once

#include <Eigen/Dense>

namespace crn::neural {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam optimizer state for one parameter vector.
class Adam {
public:
    Adam() = default;
    explicit Adam(Eigen::Index size, AdamConfig cfg = {});

    /// Descends along `grad`. Throws TrainingError on non-finite gradients and
    /// ShapeError on size mismatch.
    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);

    long steps() const { return t_; }

private:
    AdamConfig cfg_;
    Eigen::VectorXd m_;
    Eigen::VectorXd v_;
    long t_ = 0;
};

/// Scales `grad` in place so its L2 norm is at most `max_norm`.
void clip_grad_norm(Eigen::VectorXd& grad, double max_norm);

}  // namespace crn::neural
