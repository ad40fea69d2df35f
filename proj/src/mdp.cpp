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

#include "rpi/mdp.hpp"

#include <cmath>
#include <stdexcept>

#include "rpi/numerics.hpp"

namespace rpi {

namespace {
constexpr double kStochasticTol = 1e-12;
constexpr double kExactResidualTol = 1e-8;
}  // namespace

TabularMdp::TabularMdp(std::size_t n_states, std::size_t n_actions, Vec transition, Vec reward,
                       double discount)
    : n_states_(n_states),
      n_actions_(n_actions),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      discount_(discount) {
    if (n_states_ == 0 || n_actions_ == 0)
        throw std::invalid_argument("TabularMdp: empty state or action space");
    if (!(discount_ >= 0.0 && discount_ < 1.0))
        throw std::invalid_argument("TabularMdp: discount must lie in [0, 1)");
    if (transition_.size() != n_states_ * n_actions_ * n_states_)
        throw std::invalid_argument("TabularMdp: transition tensor size mismatch");
    if (reward_.size() != n_states_ * n_actions_)
        throw std::invalid_argument("TabularMdp: reward table size mismatch");
    for (double r : reward_)
        if (!std::isfinite(r)) throw std::invalid_argument("TabularMdp: non-finite reward");
    for (std::size_t s = 0; s < n_states_; ++s)
        for (std::size_t a = 0; a < n_actions_; ++a) {
            const double* row = transition_row(s, a);
            double sum = 0.0;
            for (std::size_t sp = 0; sp < n_states_; ++sp) {
                if (row[sp] < 0.0)
                    throw std::invalid_argument("TabularMdp: negative transition probability");
                sum += row[sp];
            }
            if (std::fabs(sum - 1.0) > kStochasticTol)
                throw std::invalid_argument("TabularMdp: transition row does not sum to 1");
        }
}

StochasticPolicy to_stochastic(const DeterministicPolicy& policy, std::size_t n_actions) {
    StochasticPolicy result{Matrix(policy.size(), n_actions)};
    for (std::size_t s = 0; s < policy.size(); ++s) result.probs(s, static_cast<std::size_t>(policy[s])) = 1.0;
    return result;
}

void validate_policy(const TabularMdp& mdp, const DeterministicPolicy& policy) {
    if (policy.size() != mdp.n_states())
        throw std::invalid_argument("policy: state count mismatch");
    for (int a : policy)
        if (a < 0 || static_cast<std::size_t>(a) >= mdp.n_actions())
            throw std::invalid_argument("policy: action index out of range");
}

void validate_policy(const TabularMdp& mdp, const StochasticPolicy& policy) {
    if (policy.probs.rows() != mdp.n_states() || policy.probs.cols() != mdp.n_actions())
        throw std::invalid_argument("policy: dimension mismatch");
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
        double sum = 0.0;
        for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
            const double p = policy.probs(s, a);
            if (p < 0.0) throw std::invalid_argument("policy: negative probability");
            sum += p;
        }
        if (std::fabs(sum - 1.0) > kStochasticTol)
            throw std::invalid_argument("policy: row does not sum to 1");
    }
}

namespace {

void check_q(const TabularMdp& mdp, const QTable& q) {
    if (q.size() != mdp.n_pairs()) throw std::invalid_argument("QTable: length mismatch");
}

// Policy-weighted next-state value v(s') = sum_a mu(a|s') q(s',a').
Vec policy_value_of(const TabularMdp& mdp, const StochasticPolicy& policy, const QTable& q) {
    Vec v(mdp.n_states());
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
        v[s] = kernels::dot(policy.probs.row(s), q.data() + s * mdp.n_actions(), mdp.n_actions());
    return v;
}

QTable backup_from_state_values(const TabularMdp& mdp, const Vec& v) {
    QTable out(mdp.n_pairs());
    const double gamma = mdp.discount();
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
        for (std::size_t a = 0; a < mdp.n_actions(); ++a)
            out[mdp.pair_index(s, a)] =
                mdp.reward(s, a) + gamma * kernels::dot(mdp.transition_row(s, a), v.data(), v.size());
    return out;
}

}  // namespace

QTable bellman_apply(const TabularMdp& mdp, const StochasticPolicy& policy, const QTable& q) {
    validate_policy(mdp, policy);
    check_q(mdp, q);
    return backup_from_state_values(mdp, policy_value_of(mdp, policy, q));
}

QTable bellman_apply(const TabularMdp& mdp, const DeterministicPolicy& policy, const QTable& q) {
    validate_policy(mdp, policy);
    check_q(mdp, q);
    Vec v(mdp.n_states());
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
        v[s] = q[mdp.pair_index(s, static_cast<std::size_t>(policy[s]))];
    return backup_from_state_values(mdp, v);
}

QTable bellman_optimality_apply(const TabularMdp& mdp, const QTable& q) {
    check_q(mdp, q);
    Vec v(mdp.n_states());
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
        v[s] = kernels::reduce_max(q.data() + s * mdp.n_actions(), mdp.n_actions());
    return backup_from_state_values(mdp, v);
}

QTable exact_q_value(const TabularMdp& mdp, const StochasticPolicy& policy) {
    validate_policy(mdp, policy);
    const std::size_t S = mdp.n_states();
    const std::size_t A = mdp.n_actions();
    const double gamma = mdp.discount();

    // State-value system (I - gamma P_mu) V = r_mu.
    Matrix system(S, S);
    Vec r_mu(S);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            const double w = policy.probs(s, a);
            if (w == 0.0) continue;
            r_mu[s] += w * mdp.reward(s, a);
            kernels::axpy(-gamma * w, mdp.transition_row(s, a), system.row(s), S);
        }
        system(s, s) += 1.0;
    }

    Vec v;
    try {
        v = solve_linear_system(system, r_mu);
    } catch (const SingularMatrixError&) {
        throw std::logic_error("exact_q_value: singular evaluation system with discount < 1");
    }

    QTable q = backup_from_state_values(mdp, v);
    const QTable image = bellman_apply(mdp, policy, q);
    if (inf_norm_diff(image, q) > kExactResidualTol)
        throw std::logic_error("exact_q_value: Bellman residual above 1e-8");
    return q;
}

QTable exact_q_value(const TabularMdp& mdp, const DeterministicPolicy& policy) {
    validate_policy(mdp, policy);
    return exact_q_value(mdp, to_stochastic(policy, mdp.n_actions()));
}

DeterministicPolicy greedy_policy(const QTable& q, const TabularMdp& mdp) {
    check_q(mdp, q);
    DeterministicPolicy policy(mdp.n_states(), 0);
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
        const double* row = q.data() + s * mdp.n_actions();
        std::size_t best = 0;
        for (std::size_t a = 1; a < mdp.n_actions(); ++a)
            if (row[a] > row[best]) best = a;  // strict: ties keep the lowest index
        policy[s] = static_cast<int>(best);
    }
    return policy;
}

QTable optimal_q(const TabularMdp& mdp, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("optimal_q: tol must be positive");
    const double gamma = mdp.discount();
    QTable q(mdp.n_pairs(), 0.0);
    if (gamma == 0.0) return mdp.reward_table();

    // Stop once ||q_{t+1} - q_t|| <= tol (1-gamma) / (2 gamma), which bounds
    // ||q - Q*||_inf by tol.
    const double stop = tol * (1.0 - gamma) / (2.0 * gamma);
    for (;;) {
        QTable next = bellman_optimality_apply(mdp, q);
        const double delta = inf_norm_diff(next, q);
        q = std::move(next);
        if (delta <= stop) return q;
    }
}

}  // namespace rpi
