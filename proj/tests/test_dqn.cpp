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

#include <cmath>

#include <doctest.h>

#include "rpi/dqn.hpp"

using namespace rpi;

namespace {

// Constant-output critic: zero weights, both action biases set to value.
nn::Mlp constant_net(double value) {
    nn::Mlp net = nn::init_params({4, 2}, 1);
    for (double& v : net.weights[0].data()) v = 0.0;
    net.biases[0].assign(2, value);
    return net;
}

Transition terminal_transition(double reward, int action = 0) {
    Transition t;
    t.action = action;
    t.reward = reward;
    t.terminal = true;
    return t;
}

}  // namespace

TEST_CASE("replay buffer: ring semantics and sampling preconditions") {
    ReplayBuffer buffer(3);
    CHECK_THROWS_AS(ReplayBuffer(0), std::invalid_argument);
    for (int i = 0; i < 5; ++i) buffer.insert(terminal_transition(static_cast<double>(i)));
    CHECK(buffer.size() == 3);
    CHECK(buffer.insertions() == 5);
    // Oldest entries were overwritten: rewards now {3, 4, 2}.
    CHECK(buffer.at(0).reward == 3.0);
    CHECK(buffer.at(1).reward == 4.0);
    CHECK(buffer.at(2).reward == 2.0);

    Rng rng(1);
    CHECK_THROWS_AS(buffer.sample(4, rng), std::logic_error);
    CHECK(buffer.sample(3, rng).size() == 3);
}

TEST_CASE("msbe_loss: exact targets give zero loss and zero gradient") {
    const nn::Mlp net = constant_net(1.0);
    // Terminal transition with reward equal to the constant output.
    const std::vector<Transition> batch{terminal_transition(1.0)};
    const LossValue lv = msbe_loss(batch, net, net, 0.99);
    CHECK(lv.loss == 0.0);
    for (const auto& w : lv.grads.weights)
        for (double v : w.data()) CHECK(v == 0.0);
}

TEST_CASE("msbe_loss: single terminal unit-reward transition against a zero net") {
    const nn::Mlp net = constant_net(0.0);
    const LossValue lv = msbe_loss({terminal_transition(1.0)}, net, net, 0.99);
    CHECK(lv.loss == doctest::Approx(1.0));
    CHECK_THROWS_AS(msbe_loss({}, net, net, 0.99), std::invalid_argument);
}

TEST_CASE("rpi_loss: worked penalty arithmetic") {
    const RpiLossParams params;  // c=1, lambda1=10, lambda2=2, q_min=1

    // Q=5, y=3: -5 + 10*2 + 0 = 15.
    CHECK(rpi_loss({terminal_transition(3.0)}, constant_net(5.0), constant_net(5.0), 0.99, params)
              .loss == doctest::Approx(15.0));

    // Q=0, y=3: 0 + 0 + 2*1 = 2.
    CHECK(rpi_loss({terminal_transition(3.0)}, constant_net(0.0), constant_net(0.0), 0.99, params)
              .loss == doctest::Approx(2.0));

    // Q=y=5 >= q_min: both hinges inactive, loss = -c Q.
    CHECK(rpi_loss({terminal_transition(5.0)}, constant_net(5.0), constant_net(5.0), 0.99, params)
              .loss == doctest::Approx(-5.0));
}

TEST_CASE("rpi_loss: parameter preconditions") {
    RpiLossParams bad;
    bad.lambda1 = 0.5;  // <= c: loss unbounded below
    const nn::Mlp net = constant_net(0.0);
    CHECK_THROWS_AS(rpi_loss({terminal_transition(1.0)}, net, net, 0.99, bad),
                    std::invalid_argument);
    RpiLossParams bad2;
    bad2.lambda2 = 0.0;
    CHECK_THROWS_AS(rpi_loss({terminal_transition(1.0)}, net, net, 0.99, bad2),
                    std::invalid_argument);
}

TEST_CASE("losses: gradients match finite differences on kink-free batches") {
    Rng rng(2);
    const RpiLossParams params;
    nn::Mlp net = nn::init_params({4, 12, 2}, 21);
    const nn::Mlp target = nn::init_params({4, 12, 2}, 22);

    std::vector<Transition> batch;
    while (batch.size() < 10) {
        Transition t;
        t.state = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-0.2, 0.2),
                   rng.uniform(-1, 1)};
        t.next_state = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-0.2, 0.2),
                        rng.uniform(-1, 1)};
        t.action = rng.uniform_int(2);
        t.reward = rng.uniform(-1.0, 1.0);
        t.terminal = rng.uniform() < 0.25;
        const Vec q = nn::forward(net, {t.state.x, t.state.x_dot, t.state.theta,
                                        t.state.theta_dot});
        const double q_sa = q[static_cast<std::size_t>(t.action)];
        double y = t.reward;
        if (!t.terminal) {
            const Vec qn = nn::forward(target, {t.next_state.x, t.next_state.x_dot,
                                                t.next_state.theta, t.next_state.theta_dot});
            y += 0.99 * kernels::reduce_max(qn.data(), qn.size());
        }
        if (std::fabs(q_sa - y) < 1e-3 || std::fabs(params.q_min - q_sa) < 1e-3) continue;
        batch.push_back(t);
    }

    for (const bool use_rpi : {false, true}) {
        const LossValue lv = use_rpi ? rpi_loss(batch, net, target, 0.99, params)
                                     : msbe_loss(batch, net, target, 0.99);
        const auto loss_at = [&](const nn::Mlp& candidate) {
            return use_rpi ? rpi_loss(batch, candidate, target, 0.99, params).loss
                           : msbe_loss(batch, candidate, target, 0.99).loss;
        };
        for (int sample = 0; sample < 60; ++sample) {
            const std::size_t layer =
                static_cast<std::size_t>(rng.uniform_int(static_cast<int>(net.n_layers())));
            const bool bias = rng.uniform() < 0.3;
            Vec& params_vec = bias ? net.biases[layer] : net.weights[layer].data();
            const Vec& grads_vec = bias ? lv.grads.biases[layer] : lv.grads.weights[layer].data();
            const std::size_t idx =
                static_cast<std::size_t>(rng.uniform_int(static_cast<int>(params_vec.size())));
            const double h = 1e-5;
            const double saved = params_vec[idx];
            params_vec[idx] = saved + h;
            const double up = loss_at(net);
            params_vec[idx] = saved - h;
            const double down = loss_at(net);
            params_vec[idx] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double denom = std::max({std::fabs(fd), std::fabs(grads_vec[idx]), 1e-6});
            CHECK(std::fabs(fd - grads_vec[idx]) / denom < 1e-4);
        }
    }
}

TEST_CASE("epsilon_greedy: pure exploitation, uniform exploration, tie rule") {
    nn::Mlp net = constant_net(0.0);
    net.biases[0][1] = 1.0;  // action 1 strictly better
    Rng rng(3);
    for (int i = 0; i < 50; ++i) CHECK(epsilon_greedy(net, {}, 0.0, rng) == 1);

    // Epsilon 1: empirical frequencies uniform within 3 sigma.
    int count1 = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) count1 += epsilon_greedy(net, {}, 1.0, rng);
    const double sigma = std::sqrt(draws * 0.5 * 0.5);
    CHECK(std::fabs(count1 - draws / 2.0) <= 3.0 * sigma);

    const nn::Mlp tie = constant_net(2.0);
    for (int i = 0; i < 20; ++i) CHECK(epsilon_greedy(tie, {}, 0.0, rng) == 0);
    CHECK_THROWS_AS(epsilon_greedy(net, {}, 1.5, rng), std::invalid_argument);
}

TEST_CASE("dqn_train: zero steps produce an empty trace") {
    DqnConfig cfg;
    cfg.total_steps = 0;
    cfg.hidden_widths = {8};
    const ModelFreeTrace trace = dqn_train(cfg);
    CHECK(trace.checkpoints.empty());
}

TEST_CASE("dqn_train: uniform-random behavior evaluates poorly") {
    DqnConfig cfg;
    cfg.total_steps = 5000;
    cfg.eval_interval = 5000;
    cfg.eps_start = 1.0;
    cfg.eps_end = 1.0;  // behavior never exploits
    cfg.n_eval = 10;
    cfg.hidden_widths = {16};
    cfg.seed = 5;
    const ModelFreeTrace trace = dqn_train(cfg);
    REQUIRE(trace.checkpoints.size() == 1);
    CHECK(trace.checkpoints[0].mean_undiscounted_return < 50.0);
}

TEST_CASE("rpi_loss: decomposition identity on random batches") {
    Rng rng(6);
    const RpiLossParams params;
    const nn::Mlp net = nn::init_params({4, 8, 2}, 30);
    const nn::Mlp target = nn::init_params({4, 8, 2}, 31);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Transition> batch;
        for (int i = 0; i < 12; ++i) {
            Transition t;
            t.state = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-0.2, 0.2),
                       rng.uniform(-1, 1)};
            t.next_state = t.state;
            t.action = rng.uniform_int(2);
            t.reward = rng.uniform(-1.0, 1.0);
            t.terminal = rng.uniform() < 0.5;
            batch.push_back(t);
        }
        const double whole = rpi_loss(batch, net, target, 0.99, params).loss;
        double linear = 0.0;
        double hinge_bellman = 0.0;
        double hinge_floor = 0.0;
        for (const Transition& t : batch) {
            const Vec q = nn::forward(net, {t.state.x, t.state.x_dot, t.state.theta,
                                            t.state.theta_dot});
            const double q_sa = q[static_cast<std::size_t>(t.action)];
            double y = t.reward;
            if (!t.terminal) {
                const Vec qn = nn::forward(target, {t.next_state.x, t.next_state.x_dot,
                                                    t.next_state.theta, t.next_state.theta_dot});
                y += 0.99 * kernels::reduce_max(qn.data(), qn.size());
            }
            linear += -params.c * q_sa;
            hinge_bellman += params.lambda1 * std::max(q_sa - y, 0.0);
            hinge_floor += params.lambda2 * std::max(params.q_min - q_sa, 0.0);
        }
        CHECK(hinge_bellman >= 0.0);
        CHECK(hinge_floor >= 0.0);
        CHECK(whole ==
              doctest::Approx((linear + hinge_bellman + hinge_floor) / batch.size())
                  .epsilon(1e-12));
    }
}

TEST_CASE("rpi_loss: a net pinned below the floor is pushed up everywhere") {
    const RpiLossParams params;
    const nn::Mlp net = constant_net(params.q_min - 1.0);
    Rng rng(7);
    std::vector<Transition> batch;
    bool seen[2] = {false, false};
    for (int i = 0; i < 32; ++i) {
        Transition t;
        t.state = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-0.2, 0.2),
                   rng.uniform(-1, 1)};
        t.next_state = t.state;
        t.action = rng.uniform_int(2);
        t.reward = 1.0;
        batch.push_back(t);
        seen[t.action] = true;
    }
    const LossValue lv = rpi_loss(batch, net, net, 0.99, params);
    for (int a = 0; a < 2; ++a)
        if (seen[a]) CHECK(lv.grads.biases[0][static_cast<std::size_t>(a)] < 0.0);
}

TEST_CASE("jensen_gap_check: deterministic transitions close the gap") {
    // Cyclic deterministic 3-state MDP.
    Vec transition(3 * 2 * 3, 0.0);
    for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t a = 0; a < 2; ++a)
            transition[(s * 2 + a) * 3 + (s + a) % 3] = 1.0;
    TabularMdp mdp(3, 2, std::move(transition), Vec(6, 0.5), 0.9);
    Rng rng(8);
    QTable f(6);
    for (double& v : f) v = rng.uniform(-2.0, 2.0);
    const DeterministicPolicy mu{0, 1, 0};
    const JensenGap gap = jensen_gap_check(mdp, f, mu, 500, 3);
    CHECK(gap.relaxed == doctest::Approx(gap.exact).epsilon(1e-12));

    // f far below its Bellman image: both penalties vanish.
    const QTable low(6, -100.0);
    const JensenGap zero_gap = jensen_gap_check(mdp, low, mu, 100, 4);
    CHECK(zero_gap.exact == 0.0);
    CHECK(zero_gap.relaxed == 0.0);
}

TEST_CASE("jensen_gap_check: sampled penalty dominates the exact one") {
    Rng rng(9);
    Vec transition(4 * 2 * 4);
    Vec reward(8);
    for (std::size_t sa = 0; sa < 8; ++sa) {
        double sum = 0.0;
        for (std::size_t sp = 0; sp < 4; ++sp) {
            transition[sa * 4 + sp] = rng.uniform() + 0.05;
            sum += transition[sa * 4 + sp];
        }
        for (std::size_t sp = 0; sp < 4; ++sp) transition[sa * 4 + sp] /= sum;
        reward[sa] = rng.uniform(-1.0, 1.0);
    }
    TabularMdp mdp(4, 2, std::move(transition), std::move(reward), 0.9);
    QTable f(8);
    for (double& v : f) v = rng.uniform(-3.0, 3.0);
    const JensenGap gap = jensen_gap_check(mdp, f, {0, 1, 1, 0}, 30000, 5);
    CHECK(gap.relaxed >= gap.exact - 3.0 * gap.std_error);
}
