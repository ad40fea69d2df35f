// Copyright 2026 The ReliPI Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RPI_DQN_HPP_
#define RPI_DQN_HPP_

#include <cstdint>
#include <vector>

#include "rpi/cartpole.hpp"
#include "rpi/mdp.hpp"
#include "rpi/nn.hpp"
#include "rpi/rng.hpp"

namespace rpi {

struct Transition {
    cartpole::State state;
    int action = 0;
    double reward = 0.0;
    cartpole::State next_state;
    bool terminal = false;  // genuine termination only, never truncation
};

/// Fixed-capacity ring buffer of experience.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity);

    void insert(const Transition& t);
    std::size_t size() const { return store_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::uint64_t insertions() const { return insertions_; }
    const Transition& at(std::size_t i) const { return store_[i]; }

    /// Uniform minibatch (with replacement). Requires size() >= batch.
    std::vector<Transition> sample(std::size_t batch, Rng& rng) const;

  private:
    std::size_t capacity_;
    std::uint64_t insertions_ = 0;
    std::size_t write_ = 0;
    std::vector<Transition> store_;
};

/// Critic-loss hyperparameters: per-sample loss
///   -c Q(s,a) + lambda1 [Q(s,a) - y]_+ + lambda2 [q_min - Q(s,a)]_+.
/// lambda1 > c is required: past the Bellman hinge the loss rises at rate
/// lambda1 - c, so the per-sample minimizer sits at Q = y instead of +inf.
struct RpiLossParams {
    double c = 1.0;
    double lambda1 = 10.0;
    double lambda2 = 2.0;
    double q_min = 1.0;
};

enum class LossKind { Msbe, Rpi };

struct DqnConfig {
    double learning_rate = 2.5e-4;
    std::size_t batch_size = 64;
    std::size_t buffer_capacity = 100000;
    int target_update_interval = 250;  // gradient steps between hard syncs
    double eps_start = 1.0;
    double eps_end = 0.04;
    double eps_fraction = 0.16;  // fraction of total steps spent decaying
    long total_steps = 50000;
    long learn_start = 1000;
    int train_frequency = 1;  // env steps per gradient step
    LossKind loss = LossKind::Msbe;
    RpiLossParams rpi;
    double gamma = 0.99;
    std::uint64_t seed = 0;
    long eval_interval = 1000;
    int n_eval = 20;
    std::vector<std::size_t> hidden_widths = {64, 64};
    long log_transitions = 0;  // test hook: retain the first N transitions
};

struct LossValue {
    double loss = 0.0;
    nn::GradientSet grads;
};

/// Mean-squared Bellman error with detached targets
/// y_i = r_i (terminal) or r_i + gamma max_a' target(s'_i, a').
LossValue msbe_loss(const std::vector<Transition>& batch, const nn::Mlp& net,
                    const nn::Mlp& target_net, double gamma);

/// The reliable critic loss above, same detached targets as msbe_loss,
/// hinge subgradient 0 at the kink.
LossValue rpi_loss(const std::vector<Transition>& batch, const nn::Mlp& net,
                   const nn::Mlp& target_net, double gamma, const RpiLossParams& params);

/// Uniform random action with probability epsilon, otherwise the greedy
/// action (lowest index on ties).
int epsilon_greedy(const nn::Mlp& net, const cartpole::State& state, double epsilon, Rng& rng);

struct EvalCheckpoint {
    long env_step = 0;
    double mean_discounted_return = 0.0;
    double mean_undiscounted_return = 0.0;
    double mean_critic_start_estimate = 0.0;
};

struct ModelFreeTrace {
    std::vector<EvalCheckpoint> checkpoints;
    nn::Mlp final_net;
    std::vector<Transition> behavior_log;
};

/// Full training loop: epsilon-greedy behavior with linear decay, ring
/// buffer, one critic gradient step per train_frequency env steps after
/// learn_start, hard target sync every target_update_interval gradient
/// steps, and greedy evaluation rollouts every eval_interval env steps.
ModelFreeTrace dqn_train(const DqnConfig& config);

struct JensenGap {
    double relaxed = 0.0;  // sampled penalty, expectation inside the hinge pulled out
    double exact = 0.0;    // [f - T_mu f]_+ aggregated over pairs
    double std_error = 0.0;
};

/// Monte-Carlo comparison of the sampled penalty against the exact one on a
/// small tabular MDP; Jensen's inequality puts relaxed above exact up to
/// sampling noise. n_samples counts draws per state-action pair.
JensenGap jensen_gap_check(const TabularMdp& mdp, const QTable& f, const DeterministicPolicy& mu,
                           long n_samples, std::uint64_t seed);

}  // namespace rpi

#endif  // RPI_DQN_HPP_
