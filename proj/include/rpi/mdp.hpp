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

#ifndef RPI_MDP_HPP_
#define RPI_MDP_HPP_

#include <cstddef>
#include <vector>

#include "rpi/linalg.hpp"

namespace rpi {

/// Q-values (and any state-action function) as a flat vector of length S*A,
/// indexed by s*A + a. Every module uses this same index order.
using QTable = Vec;

/// One action index per state.
using DeterministicPolicy = std::vector<int>;

/// Row-stochastic S x A table; probs(s, a) is the probability of action a
/// in state s.
struct StochasticPolicy {
    Matrix probs;
};

/**
 * Finite MDP with a dense transition tensor P[s][a][s'], an expected-reward
 * table r[s][a], and discount gamma in [0, 1). Immutable after construction;
 * construction validates row-stochasticity (1e-12) and finiteness.
 */
class TabularMdp {
  public:
    TabularMdp(std::size_t n_states, std::size_t n_actions, Vec transition, Vec reward,
               double discount);

    std::size_t n_states() const { return n_states_; }
    std::size_t n_actions() const { return n_actions_; }
    std::size_t n_pairs() const { return n_states_ * n_actions_; }
    double discount() const { return discount_; }

    std::size_t pair_index(std::size_t s, std::size_t a) const { return s * n_actions_ + a; }

    /// Transition row P(.|s,a), contiguous, length S.
    const double* transition_row(std::size_t s, std::size_t a) const {
        return transition_.data() + (s * n_actions_ + a) * n_states_;
    }

    double reward(std::size_t s, std::size_t a) const { return reward_[pair_index(s, a)]; }
    const Vec& reward_table() const { return reward_; }

  private:
    std::size_t n_states_;
    std::size_t n_actions_;
    Vec transition_;  // S*A*S, row (s,a) contiguous over s'
    Vec reward_;      // S*A
    double discount_;
};

StochasticPolicy to_stochastic(const DeterministicPolicy& policy, std::size_t n_actions);

void validate_policy(const TabularMdp& mdp, const DeterministicPolicy& policy);
void validate_policy(const TabularMdp& mdp, const StochasticPolicy& policy);

/// T_mu q: (s,a) -> r(s,a) + gamma * sum_{s',a'} P(s'|s,a) mu(a'|s') q(s',a').
QTable bellman_apply(const TabularMdp& mdp, const StochasticPolicy& policy, const QTable& q);
QTable bellman_apply(const TabularMdp& mdp, const DeterministicPolicy& policy, const QTable& q);

/// T q: (s,a) -> r(s,a) + gamma * sum_{s'} P(s'|s,a) max_{a'} q(s',a').
QTable bellman_optimality_apply(const TabularMdp& mdp, const QTable& q);

/// Exact Q_mu: solves Q = r + gamma P Pi_mu Q through its S-dimensional
/// state-value reduction (algebraically the same system), then checks the
/// Bellman residual ||T_mu Q - Q||_inf <= 1e-8.
QTable exact_q_value(const TabularMdp& mdp, const StochasticPolicy& policy);
QTable exact_q_value(const TabularMdp& mdp, const DeterministicPolicy& policy);

/// Per-state argmax with ties broken toward the lowest action index.
DeterministicPolicy greedy_policy(const QTable& q, const TabularMdp& mdp);

/// Value iteration with the optimality operator until the a-posteriori bound
/// guarantees ||q - Q*||_inf <= tol.
QTable optimal_q(const TabularMdp& mdp, double tol);

}  // namespace rpi

#endif  // RPI_MDP_HPP_
