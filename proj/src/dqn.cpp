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

#include "rpi/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rpi {

namespace {

Vec state_vec(const cartpole::State& s) { return Vec{s.x, s.x_dot, s.theta, s.theta_dot}; }

int argmax_lowest(const Vec& q) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < q.size(); ++a)
        if (q[a] > q[best]) best = a;
    return static_cast<int>(best);
}

// Detached targets shared by both losses.
Vec bellman_targets(const std::vector<Transition>& batch, const nn::Mlp& target_net,
                    double gamma) {
    Vec y(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Transition& t = batch[i];
        if (t.terminal) {
            y[i] = t.reward;
        } else {
            const Vec q_next = nn::forward(target_net, state_vec(t.next_state));
            y[i] = t.reward + gamma * kernels::reduce_max(q_next.data(), q_next.size());
        }
    }
    return y;
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: zero capacity");
    store_.reserve(capacity);
}

void ReplayBuffer::insert(const Transition& t) {
    if (store_.size() < capacity_) {
        store_.push_back(t);
    } else {
        store_[write_] = t;
    }
    write_ = (write_ + 1) % capacity_;
    ++insertions_;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
    if (store_.size() < batch) throw std::logic_error("ReplayBuffer: not enough samples");
    std::vector<Transition> out;
    out.reserve(batch);
    for (std::size_t i = 0; i < batch; ++i)
        out.push_back(store_[rng.uniform_below(store_.size())]);
    return out;
}

LossValue msbe_loss(const std::vector<Transition>& batch, const nn::Mlp& net,
                    const nn::Mlp& target_net, double gamma) {
    if (batch.empty()) throw std::invalid_argument("msbe_loss: empty batch");
    const Vec y = bellman_targets(batch, target_net, gamma);
    const double inv_m = 1.0 / static_cast<double>(batch.size());

    std::vector<Vec> inputs(batch.size());
    std::vector<Vec> upstream(batch.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        inputs[i] = state_vec(batch[i].state);
        const Vec q = nn::forward(net, inputs[i]);
        const double q_sa = q[static_cast<std::size_t>(batch[i].action)];
        const double diff = q_sa - y[i];
        loss += inv_m * diff * diff;
        upstream[i].assign(net.output_width(), 0.0);
        upstream[i][static_cast<std::size_t>(batch[i].action)] = 2.0 * diff * inv_m;
    }
    return {loss, nn::backward(net, inputs, upstream)};
}

LossValue rpi_loss(const std::vector<Transition>& batch, const nn::Mlp& net,
                   const nn::Mlp& target_net, double gamma, const RpiLossParams& params) {
    if (batch.empty()) throw std::invalid_argument("rpi_loss: empty batch");
    if (!(params.lambda1 > params.c))
        throw std::invalid_argument("rpi_loss: requires lambda1 > c for a bounded loss");
    if (!(params.lambda2 > 0.0)) throw std::invalid_argument("rpi_loss: requires lambda2 > 0");

    const Vec y = bellman_targets(batch, target_net, gamma);
    const double inv_m = 1.0 / static_cast<double>(batch.size());

    std::vector<Vec> inputs(batch.size());
    std::vector<Vec> upstream(batch.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        inputs[i] = state_vec(batch[i].state);
        const Vec q = nn::forward(net, inputs[i]);
        const double q_sa = q[static_cast<std::size_t>(batch[i].action)];

        const double bellman_gap = q_sa - y[i];
        const double floor_gap = params.q_min - q_sa;
        loss += inv_m * (-params.c * q_sa + params.lambda1 * std::max(bellman_gap, 0.0) +
                         params.lambda2 * std::max(floor_gap, 0.0));

        double dq = -params.c;
        if (bellman_gap > 0.0) dq += params.lambda1;
        if (floor_gap > 0.0) dq -= params.lambda2;
        upstream[i].assign(net.output_width(), 0.0);
        upstream[i][static_cast<std::size_t>(batch[i].action)] = dq * inv_m;
    }
    return {loss, nn::backward(net, inputs, upstream)};
}

int epsilon_greedy(const nn::Mlp& net, const cartpole::State& state, double epsilon, Rng& rng) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("epsilon_greedy: epsilon must lie in [0, 1]");
    const std::size_t n_actions = net.output_width();
    if (rng.uniform() < epsilon) return rng.uniform_int(static_cast<int>(n_actions));
    return argmax_lowest(nn::forward(net, state_vec(state)));
}

namespace {

EvalCheckpoint evaluate_policy(const nn::Mlp& net, const DqnConfig& config, const Rng& eval_root,
                               long env_step) {
    EvalCheckpoint cp;
    cp.env_step = env_step;
    const auto greedy = [&net](const cartpole::State& s) {
        return argmax_lowest(nn::forward(net, state_vec(s)));
    };
    for (int j = 0; j < config.n_eval; ++j) {
        cartpole::CartPole env(
            eval_root.substream(static_cast<std::uint64_t>(env_step) * 4096 +
                                static_cast<std::uint64_t>(j)));
        // Peek at the initial pair for the critic's start estimate.
        cartpole::CartPole probe = env;
        const cartpole::State s0 = probe.reset();
        const Vec q0 = nn::forward(net, state_vec(s0));
        cp.mean_critic_start_estimate += q0[static_cast<std::size_t>(argmax_lowest(q0))];

        const auto [disc, undisc] = cartpole::rollout_return(env, greedy, config.gamma);
        cp.mean_discounted_return += disc;
        cp.mean_undiscounted_return += undisc;
    }
    const double inv = 1.0 / static_cast<double>(config.n_eval);
    cp.mean_discounted_return *= inv;
    cp.mean_undiscounted_return *= inv;
    cp.mean_critic_start_estimate *= inv;
    return cp;
}

}  // namespace

ModelFreeTrace dqn_train(const DqnConfig& config) {
    if (config.batch_size == 0 || config.train_frequency < 1 || config.n_eval < 1 ||
        config.eval_interval < 1 || !(config.gamma >= 0.0 && config.gamma < 1.0))
        throw std::invalid_argument("dqn_train: invalid configuration");

    const Rng root(config.seed);
    Rng explore_rng = root.substream(1);
    Rng sample_rng = root.substream(2);
    const Rng eval_root = root.substream(3);
    cartpole::CartPole env(root.substream(4));

    nn::Mlp net = [&] {
        std::vector<std::size_t> widths{4};
        widths.insert(widths.end(), config.hidden_widths.begin(), config.hidden_widths.end());
        widths.push_back(2);
        return nn::init_params(widths, root.substream(5).next_u64());
    }();
    nn::Mlp target_net = net;
    nn::AdamState adam = nn::make_adam_state(net, config.learning_rate);
    ReplayBuffer buffer(config.buffer_capacity);

    ModelFreeTrace trace;

    const double decay_steps =
        std::max(1.0, config.eps_fraction * static_cast<double>(config.total_steps));
    const auto epsilon_at = [&](long step) {
        const double frac = std::min(1.0, static_cast<double>(step) / decay_steps);
        return config.eps_start + frac * (config.eps_end - config.eps_start);
    };

    cartpole::State state = env.reset();
    long grad_steps = 0;
    for (long step = 1; step <= config.total_steps; ++step) {
        const int action = epsilon_greedy(net, state, epsilon_at(step - 1), explore_rng);
        const cartpole::StepResult r = env.step(action);
        // Truncation bootstraps: it is a horizon artifact, not termination.
        const Transition t{state, action, r.reward, r.next_state, r.terminated};
        buffer.insert(t);
        if (static_cast<long>(trace.behavior_log.size()) < config.log_transitions)
            trace.behavior_log.push_back(t);
        state = (r.terminated || r.truncated) ? env.reset() : r.next_state;

        if (step >= config.learn_start && step % config.train_frequency == 0 &&
            buffer.size() >= config.batch_size) {
            const std::vector<Transition> batch = buffer.sample(config.batch_size, sample_rng);
            const LossValue lv = (config.loss == LossKind::Msbe)
                                     ? msbe_loss(batch, net, target_net, config.gamma)
                                     : rpi_loss(batch, net, target_net, config.gamma, config.rpi);
            nn::adam_step(net, lv.grads, adam);
            ++grad_steps;
            if (grad_steps % config.target_update_interval == 0) target_net = net;
        }

        if (step % config.eval_interval == 0)
            trace.checkpoints.push_back(evaluate_policy(net, config, eval_root, step));
    }

    trace.final_net = std::move(net);
    return trace;
}

JensenGap jensen_gap_check(const TabularMdp& mdp, const QTable& f, const DeterministicPolicy& mu,
                           long n_samples, std::uint64_t seed) {
    validate_policy(mdp, mu);
    if (f.size() != mdp.n_pairs()) throw std::invalid_argument("jensen_gap_check: bad f");
    if (n_samples < 2) throw std::invalid_argument("jensen_gap_check: need n_samples >= 2");

    const double gamma = mdp.discount();
    const QTable image = bellman_apply(mdp, mu, f);
    Rng rng(seed);

    double exact_sum = 0.0;
    double relaxed_sum = 0.0;
    double variance_sum = 0.0;
    const std::size_t n_pairs = mdp.n_pairs();
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
        for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
            const std::size_t idx = mdp.pair_index(s, a);
            exact_sum += std::max(f[idx] - image[idx], 0.0);

            const double* p = mdp.transition_row(s, a);
            double mean = 0.0;
            double m2 = 0.0;
            for (long i = 0; i < n_samples; ++i) {
                // Inverse-CDF draw of s'.
                double u = rng.uniform();
                std::size_t sp = 0;
                for (; sp + 1 < mdp.n_states(); ++sp) {
                    if (u < p[sp]) break;
                    u -= p[sp];
                }
                const double next_f = f[mdp.pair_index(sp, static_cast<std::size_t>(mu[sp]))];
                const double sample = std::max(f[idx] - mdp.reward(s, a) - gamma * next_f, 0.0);
                const double delta = sample - mean;
                mean += delta / static_cast<double>(i + 1);
                m2 += delta * (sample - mean);
            }
            relaxed_sum += mean;
            variance_sum += m2 / static_cast<double>(n_samples - 1);
        }

    JensenGap gap;
    gap.exact = exact_sum / static_cast<double>(n_pairs);
    gap.relaxed = relaxed_sum / static_cast<double>(n_pairs);
    gap.std_error = std::sqrt(variance_sum / static_cast<double>(n_samples)) /
                    static_cast<double>(n_pairs);
    return gap;
}

}  // namespace rpi
