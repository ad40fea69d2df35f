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

#include "rpi/mdp.hpp"
#include "rpi/rng.hpp"

using namespace rpi;

namespace {

TabularMdp random_mdp(Rng& rng, std::size_t S, std::size_t A, double gamma) {
    Vec transition(S * A * S);
    Vec reward(S * A);
    for (std::size_t sa = 0; sa < S * A; ++sa) {
        double* row = transition.data() + sa * S;
        double sum = 0.0;
        for (std::size_t sp = 0; sp < S; ++sp) {
            row[sp] = rng.uniform() + 1e-3;
            sum += row[sp];
        }
        for (std::size_t sp = 0; sp < S; ++sp) row[sp] /= sum;
        reward[sa] = rng.uniform(-1.0, 1.0);
    }
    return TabularMdp(S, A, std::move(transition), std::move(reward), gamma);
}

StochasticPolicy random_stochastic(Rng& rng, std::size_t S, std::size_t A) {
    StochasticPolicy pi{Matrix(S, A)};
    for (std::size_t s = 0; s < S; ++s) {
        double sum = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
            pi.probs(s, a) = rng.uniform() + 1e-3;
            sum += pi.probs(s, a);
        }
        for (std::size_t a = 0; a < A; ++a) pi.probs(s, a) /= sum;
    }
    return pi;
}

// Hand-built 2-state, 2-action chain used by the worked examples.
TabularMdp two_state_mdp(double gamma) {
    // P[s][a][s']: action 0 stays, action 1 mostly switches.
    Vec transition{1.0, 0.0, 0.2, 0.8,   // from s=0
                   0.1, 0.9, 0.7, 0.3};  // from s=1
    Vec reward{1.0, -0.5, 0.25, 2.0};
    return TabularMdp(2, 2, std::move(transition), std::move(reward), gamma);
}

// Direct-summation Bellman image, independent nested loops.
QTable direct_bellman(const TabularMdp& mdp, const StochasticPolicy& mu, const QTable& q) {
    QTable out(mdp.n_pairs());
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
        for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
            double acc = 0.0;
            for (std::size_t sp = 0; sp < mdp.n_states(); ++sp)
                for (std::size_t ap = 0; ap < mdp.n_actions(); ++ap)
                    acc += mdp.transition_row(s, a)[sp] * mu.probs(sp, ap) *
                           q[sp * mdp.n_actions() + ap];
            out[s * mdp.n_actions() + a] = mdp.reward(s, a) + mdp.discount() * acc;
        }
    return out;
}

}  // namespace

TEST_CASE("bellman_apply: zero discount returns the reward table") {
    Rng rng(1);
    TabularMdp mdp = random_mdp(rng, 4, 3, 0.0);
    const StochasticPolicy mu = random_stochastic(rng, 4, 3);
    QTable q(mdp.n_pairs(), 123.0);
    CHECK(inf_norm_diff(bellman_apply(mdp, mu, q), mdp.reward_table()) == 0.0);
}

TEST_CASE("bellman_apply: exact Q is a fixed point") {
    Rng rng(2);
    TabularMdp mdp = random_mdp(rng, 5, 2, 0.9);
    const StochasticPolicy mu = random_stochastic(rng, 5, 2);
    const QTable q = exact_q_value(mdp, mu);
    CHECK(inf_norm_diff(bellman_apply(mdp, mu, q), q) <= 1e-9);
}

TEST_CASE("bellman_apply: matches direct summation on the hand MDP") {
    TabularMdp mdp = two_state_mdp(0.5);
    StochasticPolicy mu{Matrix(2, 2, 0.5)};
    QTable q(4, 0.0);

    QTable once = bellman_apply(mdp, mu, q);
    CHECK(inf_norm_diff(once, mdp.reward_table()) == 0.0);  // first application hits r

    QTable twice = bellman_apply(mdp, mu, once);
    QTable oracle = direct_bellman(mdp, mu, once);
    CHECK(inf_norm_diff(twice, oracle) <= 1e-12);

    // Input is untouched.
    CHECK(once == bellman_apply(mdp, mu, q));
}

TEST_CASE("bellman_apply: dimension mismatch is a contract violation") {
    TabularMdp mdp = two_state_mdp(0.5);
    StochasticPolicy mu{Matrix(2, 2, 0.5)};
    CHECK_THROWS_AS(bellman_apply(mdp, mu, QTable(3, 0.0)), std::invalid_argument);
}

TEST_CASE("bellman_optimality_apply: zero discount and constant tables") {
    Rng rng(3);
    TabularMdp zero_gamma = random_mdp(rng, 4, 3, 0.0);
    CHECK(inf_norm_diff(bellman_optimality_apply(zero_gamma, QTable(12, 7.0)),
                        zero_gamma.reward_table()) == 0.0);

    TabularMdp mdp = random_mdp(rng, 4, 3, 0.6);
    const QTable constant(12, 5.0);
    const QTable image = bellman_optimality_apply(mdp, constant);
    for (std::size_t i = 0; i < 12; ++i)
        CHECK(image[i] == doctest::Approx(mdp.reward_table()[i] + 0.6 * 5.0));
}

TEST_CASE("bellman_optimality_apply: optimal Q is a fixed point") {
    Rng rng(4);
    TabularMdp mdp = random_mdp(rng, 5, 3, 0.85);
    const QTable q_star = optimal_q(mdp, 1e-9);
    CHECK(inf_norm_diff(bellman_optimality_apply(mdp, q_star), q_star) <= 1e-8);
}

TEST_CASE("exact_q_value: geometric series and zero discount") {
    TabularMdp single(1, 1, {1.0}, {1.0}, 0.9);
    CHECK(exact_q_value(single, DeterministicPolicy{0})[0] == doctest::Approx(10.0));

    Rng rng(5);
    TabularMdp mdp = random_mdp(rng, 4, 2, 0.0);
    const StochasticPolicy mu = random_stochastic(rng, 4, 2);
    CHECK(inf_norm_diff(exact_q_value(mdp, mu), mdp.reward_table()) <= 1e-12);
}

TEST_CASE("exact_q_value: agrees with 10000-step fixed-point iteration") {
    Rng rng(6);
    TabularMdp mdp = random_mdp(rng, 8, 3, 0.9);
    const StochasticPolicy mu = random_stochastic(rng, 8, 3);

    QTable iterate(mdp.n_pairs(), 0.0);
    for (int t = 0; t < 10000; ++t) iterate = bellman_apply(mdp, mu, iterate);
    CHECK(inf_norm_diff(exact_q_value(mdp, mu), iterate) <= 1e-6);
}

TEST_CASE("greedy_policy: argmax and tie rule") {
    Rng rng(7);
    TabularMdp mdp = random_mdp(rng, 3, 4, 0.5);
    QTable by_action(12);
    for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t a = 0; a < 4; ++a) by_action[s * 4 + a] = static_cast<double>(a);
    for (int a : greedy_policy(by_action, mdp)) CHECK(a == 3);

    for (int a : greedy_policy(QTable(12, 1.0), mdp)) CHECK(a == 0);  // ties -> lowest
}

TEST_CASE("greedy_policy: recovers an optimal policy from Q*") {
    Rng rng(8);
    TabularMdp mdp = random_mdp(rng, 5, 3, 0.8);

    // Policy-iteration oracle with fixed-point evaluation, built right here.
    DeterministicPolicy pi(5, 0);
    for (int round = 0; round < 50; ++round) {
        QTable q(mdp.n_pairs(), 0.0);
        for (int t = 0; t < 4000; ++t) q = bellman_apply(mdp, pi, q);
        DeterministicPolicy next = greedy_policy(q, mdp);
        if (next == pi) break;
        pi = next;
    }

    const QTable q_star = optimal_q(mdp, 1e-10);
    const DeterministicPolicy from_q_star = greedy_policy(q_star, mdp);
    const QTable value_oracle = exact_q_value(mdp, pi);
    const QTable value_greedy = exact_q_value(mdp, from_q_star);
    CHECK(inf_norm_diff(value_oracle, value_greedy) <= 1e-6);  // both optimal
}

TEST_CASE("optimal_q: base cases and posterior accuracy") {
    Rng rng(9);
    TabularMdp zero_gamma = random_mdp(rng, 4, 2, 0.0);
    CHECK(inf_norm_diff(optimal_q(zero_gamma, 1e-8), zero_gamma.reward_table()) == 0.0);

    // Single state, two actions, r = (0, 1), gamma = 0.9: Q* = (9, 10).
    TabularMdp single(1, 2, {1.0, 1.0}, {0.0, 1.0}, 0.9);
    const QTable q = optimal_q(single, 1e-10);
    CHECK(q[0] == doctest::Approx(9.0));
    CHECK(q[1] == doctest::Approx(10.0));

    TabularMdp mdp = random_mdp(rng, 6, 3, 0.9);
    const double tol = 1e-7;
    const QTable approx = optimal_q(mdp, tol);
    const DeterministicPolicy mu = greedy_policy(approx, mdp);
    const QTable exact = exact_q_value(mdp, mu);
    CHECK(inf_norm_diff(approx, exact) <= 2.0 * tol);
    CHECK_THROWS_AS(optimal_q(mdp, 0.0), std::invalid_argument);
}

TEST_CASE("operators are monotone and contractive; T dominates T_mu") {
    Rng rng(10);
    for (int trial = 0; trial < 25; ++trial) {
        TabularMdp mdp = random_mdp(rng, 5, 3, rng.uniform(0.2, 0.95));
        const StochasticPolicy mu = random_stochastic(rng, 5, 3);
        QTable lo(mdp.n_pairs());
        for (double& v : lo) v = rng.uniform(-4.0, 4.0);
        QTable hi = lo;
        for (double& v : hi) v += rng.uniform(0.0, 1.0);

        const QTable tlo = bellman_apply(mdp, mu, lo);
        const QTable thi = bellman_apply(mdp, mu, hi);
        const QTable opt = bellman_optimality_apply(mdp, lo);
        for (std::size_t i = 0; i < lo.size(); ++i) {
            CHECK(tlo[i] <= thi[i] + 1e-12);   // monotone
            CHECK(opt[i] >= tlo[i] - 1e-12);   // T >= T_mu
        }
        const QTable q2 = bellman_apply(mdp, mu, hi);
        CHECK(inf_norm_diff(tlo, q2) <= mdp.discount() * inf_norm_diff(lo, hi) + 1e-10);
    }
}

TEST_CASE("a Bellman subsolution lower-bounds the policy value") {
    Rng rng(11);
    int accepted = 0;
    for (int trial = 0; trial < 100; ++trial) {
        TabularMdp mdp = random_mdp(rng, 4, 3, 0.8);
        DeterministicPolicy mu(4);
        for (int& a : mu) a = rng.uniform_int(3);

        QTable f;
        if (trial % 2 == 0) {
            const double c = kernels::reduce_min(mdp.reward_table().data(), mdp.n_pairs()) /
                             (1.0 - mdp.discount());
            f.assign(mdp.n_pairs(), c - rng.uniform(0.0, 1.0));
        } else {
            f = exact_q_value(mdp, mu);
            for (double& v : f) v -= rng.uniform(0.0, 0.3);
        }
        const QTable image = bellman_apply(mdp, mu, f);
        bool subsolution = true;
        for (std::size_t i = 0; i < f.size(); ++i)
            if (image[i] < f[i]) subsolution = false;
        if (!subsolution) continue;
        ++accepted;
        const QTable q = exact_q_value(mdp, mu);
        for (std::size_t i = 0; i < f.size(); ++i) CHECK(q[i] >= f[i] - 1e-8);
    }
    CHECK(accepted >= 20);
}

TEST_CASE("TabularMdp construction validates its inputs") {
    CHECK_THROWS_AS(TabularMdp(1, 1, {0.5}, {0.0}, 0.9), std::invalid_argument);   // row sum
    CHECK_THROWS_AS(TabularMdp(1, 1, {1.0}, {0.0}, 1.0), std::invalid_argument);   // discount
    CHECK_THROWS_AS(TabularMdp(1, 1, {1.0}, {1.0 / 0.0}, 0.9), std::invalid_argument);
}
