#include "crn/agents/replay_buffer.hpp"

#include <algorithm>
#include <vector>

#include "crn/errors.hpp"

namespace crn::agents {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t act_dim)
    : capacity_(capacity),
      obs_(static_cast<Eigen::Index>(obs_dim), static_cast<Eigen::Index>(capacity)),
      actions_(static_cast<Eigen::Index>(act_dim), static_cast<Eigen::Index>(capacity)),
      rewards_(static_cast<Eigen::Index>(capacity)),
      next_obs_(static_cast<Eigen::Index>(obs_dim), static_cast<Eigen::Index>(capacity)),
      dones_(static_cast<Eigen::Index>(capacity)) {
    if (capacity == 0) throw ContractError("replay capacity must be positive");
}

void ReplayBuffer::add(const Eigen::VectorXd& obs, const Eigen::VectorXd& action, double reward,
                       const Eigen::VectorXd& next_obs, bool done) {
    if (obs.size() != obs_.rows() || next_obs.size() != obs_.rows() || action.size() != actions_.rows()) {
        throw ShapeError("transition does not match the replay buffer layout");
    }
    const auto slot = static_cast<Eigen::Index>(inserted_ % capacity_);
    obs_.col(slot) = obs;
    actions_.col(slot) = action;
    rewards_[slot] = reward;
    next_obs_.col(slot) = next_obs;
    dones_[slot] = done ? 1.0 : 0.0;
    ++inserted_;
    size_ = std::min(size_ + 1, capacity_);
}

TransitionBatch ReplayBuffer::sample(std::size_t batch, std::mt19937_64& rng) const {
    if (batch > size_ || batch == 0) throw ContractError("not enough transitions to sample a batch");
    // Floyd: distinct indices in O(batch).
    std::vector<std::size_t> picked;
    picked.reserve(batch);
    for (std::size_t j = size_ - batch; j < size_; ++j) {
        std::uniform_int_distribution<std::size_t> dist(0, j);
        const auto t = dist(rng);
        if (std::find(picked.begin(), picked.end(), t) == picked.end()) {
            picked.push_back(t);
        } else {
            picked.push_back(j);
        }
    }
    TransitionBatch b;
    const auto n = static_cast<Eigen::Index>(batch);
    b.obs.resize(obs_.rows(), n);
    b.actions.resize(actions_.rows(), n);
    b.rewards.resize(n);
    b.next_obs.resize(obs_.rows(), n);
    b.dones.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<Eigen::Index>(picked[static_cast<std::size_t>(i)]);
        b.obs.col(i) = obs_.col(k);
        b.actions.col(i) = actions_.col(k);
        b.rewards[i] = rewards_[k];
        b.next_obs.col(i) = next_obs_.col(k);
        b.dones[i] = dones_[k];
    }
    return b;
}

}  // namespace crn::agents
