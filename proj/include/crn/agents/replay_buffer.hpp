#pragma once

#include <cstddef>
#include <random>

#include <Eigen/Dense>

namespace crn::agents {

struct TransitionBatch {
    Eigen::MatrixXd obs;       // obs_dim x B
    Eigen::MatrixXd actions;   // act_dim x B
    Eigen::VectorXd rewards;
    Eigen::MatrixXd next_obs;
    Eigen::VectorXd dones;     // 1 for terminal transitions
};

/// Fixed-capacity ring buffer of transitions.
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t act_dim);

    void add(const Eigen::VectorXd& obs, const Eigen::VectorXd& action, double reward,
             const Eigen::VectorXd& next_obs, bool done);

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t insertions() const { return inserted_; }

    /// Uniform sample of `batch` distinct stored transitions (Floyd's algorithm).
    /// Throws ContractError when fewer than `batch` are stored.
    TransitionBatch sample(std::size_t batch, std::mt19937_64& rng) const;

private:
    std::size_t capacity_;
    std::size_t size_ = 0;
    std::size_t inserted_ = 0;
    Eigen::MatrixXd obs_;
    Eigen::MatrixXd actions_;
    Eigen::VectorXd rewards_;
    Eigen::MatrixXd next_obs_;
    Eigen::VectorXd dones_;
};

}  // namespace crn::agents
