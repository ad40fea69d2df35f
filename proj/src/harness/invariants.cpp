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
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "rpi/harness.hpp"

namespace rpi::harness {

namespace {

constexpr std::uint64_t kMasterSeed = 20260808ULL;

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

QTable random_qtable(Rng& rng, std::size_t n, double lo = -5.0, double hi = 5.0) {
    QTable q(n);
    for (double& v : q) v = rng.uniform(lo, hi);
    return q;
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

double weighted_l1(const QTable& x, const QTable& y, const QTable& w) {
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sum += w[i] * std::fabs(x[i] - y[i]);
    return sum;
}

using Check = std::function<std::optional<std::string>()>;

struct NamedCheck {
    std::string name;
    Check run;
};

}  // namespace

bool check_rpi_trace_monotone_lower_bound(const RunTrace& trace, double tol, std::string* why) {
    for (std::size_t k = 0; k < trace.records.size(); ++k) {
        const IterationRecord& rec = trace.records[k];
        for (std::size_t i = 0; i < rec.estimate.size(); ++i) {
            if (rec.true_q[i] < rec.estimate[i] - tol) {
                if (why != nullptr)
                    *why = "iterate " + std::to_string(k) + ": estimate exceeds true Q by " +
                           format_double(rec.estimate[i] - rec.true_q[i]);
                return false;
            }
            if (k > 0 && rec.estimate[i] < trace.records[k - 1].estimate[i] - tol) {
                if (why != nullptr)
                    *why = "iterate " + std::to_string(k) + ": estimate decreased by " +
                           format_double(trace.records[k - 1].estimate[i] - rec.estimate[i]);
                return false;
            }
        }
    }
    return true;
}

bool check_rpi_trace_feasibility(const TabularMdp& mdp, const RunTrace& trace, double tol,
                                 std::string* why) {
    for (const IterationRecord& rec : trace.records) {
        const auto* det = std::get_if<DeterministicPolicy>(&rec.policy);
        if (det == nullptr) {
            if (why != nullptr) *why = "record lacks a deterministic policy";
            return false;
        }
        const QTable image = bellman_apply(mdp, *det, rec.estimate);
        for (std::size_t i = 0; i < image.size(); ++i)
            if (image[i] < rec.estimate[i] - tol) {
                if (why != nullptr)
                    *why = "iterate " + std::to_string(rec.index) + ": T_mu f - f = " +
                           format_double(image[i] - rec.estimate[i]);
                return false;
            }
    }
    return true;
}

bool check_projection_identity(const QTable& f_prev, const QTable& f_next, const QTable& q_mu,
                               const QTable& weights, double rel_tol, std::string* why) {
    const double lhs = weighted_l1(f_next, f_prev, weights) + weighted_l1(q_mu, f_next, weights);
    const double rhs = weighted_l1(q_mu, f_prev, weights);
    const double err = std::fabs(lhs - rhs) / std::max(1.0, std::fabs(rhs));
    if (err > rel_tol) {
        if (why != nullptr)
            *why = "|" + format_double(lhs) + " - " + format_double(rhs) +
                   "| relative error " + format_double(err);
        return false;
    }
    return true;
}

namespace {

// ---------- tabular-mdp ----------

std::optional<std::string> chk_operator_monotonicity() {
    Rng rng = Rng(kMasterSeed).substream(10);
    for (int trial = 0; trial < 100; ++trial) {
        TabularMdp mdp = random_mdp(rng, 4 + rng.uniform_int(4), 2 + rng.uniform_int(3),
                                    rng.uniform(0.3, 0.95));
        const std::size_t n = mdp.n_pairs();
        QTable lo = random_qtable(rng, n);
        QTable hi = lo;
        for (double& v : hi) v += rng.uniform(0.0, 2.0);
        StochasticPolicy mu = random_stochastic(rng, mdp.n_states(), mdp.n_actions());
        const QTable tlo = bellman_apply(mdp, mu, lo);
        const QTable thi = bellman_apply(mdp, mu, hi);
        const QTable olo = bellman_optimality_apply(mdp, lo);
        const QTable ohi = bellman_optimality_apply(mdp, hi);
        for (std::size_t i = 0; i < n; ++i) {
            if (tlo[i] > thi[i] + 1e-12) return "T_mu not monotone";
            if (olo[i] > ohi[i] + 1e-12) return "T not monotone";
        }
    }
    return std::nullopt;
}

std::optional<std::string> chk_gamma_contraction() {
    Rng rng = Rng(kMasterSeed).substream(11);
    for (int trial = 0; trial < 100; ++trial) {
        TabularMdp mdp = random_mdp(rng, 5, 3, rng.uniform(0.1, 0.95));
        StochasticPolicy mu = random_stochastic(rng, 5, 3);
        const QTable q1 = random_qtable(rng, mdp.n_pairs());
        const QTable q2 = random_qtable(rng, mdp.n_pairs());
        const double lhs = inf_norm_diff(bellman_apply(mdp, mu, q1), bellman_apply(mdp, mu, q2));
        const double rhs = mdp.discount() * inf_norm_diff(q1, q2);
        if (lhs > rhs + 1e-9) return "contraction violated: " + format_double(lhs - rhs);
    }
    return std::nullopt;
}

std::optional<std::string> chk_claim1_lower_bound() {
    Rng rng = Rng(kMasterSeed).substream(12);
    int accepted = 0;
    for (int trial = 0; trial < 400 && accepted < 50; ++trial) {
        TabularMdp mdp = random_mdp(rng, 4, 3, 0.85);
        DeterministicPolicy mu(4);
        for (int& a : mu) a = rng.uniform_int(3);
        // Mix of constructed subsolutions and rejection-sampled candidates.
        QTable f;
        if (trial % 2 == 0) {
            const double c =
                kernels::reduce_min(mdp.reward_table().data(), mdp.n_pairs()) /
                    (1.0 - mdp.discount()) -
                rng.uniform(0.0, 1.0);
            f.assign(mdp.n_pairs(), c);
        } else {
            f = exact_q_value(mdp, mu);
            for (double& v : f) v -= rng.uniform(0.0, 0.5);
        }
        const QTable image = bellman_apply(mdp, mu, f);
        bool feasible = true;
        for (std::size_t i = 0; i < f.size(); ++i)
            if (image[i] < f[i]) feasible = false;
        if (!feasible) continue;
        ++accepted;
        const QTable q = exact_q_value(mdp, mu);
        for (std::size_t i = 0; i < f.size(); ++i)
            if (q[i] < f[i] - 1e-8)
                return "Q_mu - f = " + format_double(q[i] - f[i]) + " at pair " + std::to_string(i);
    }
    if (accepted < 10) return "too few feasible candidates found";
    return std::nullopt;
}

std::optional<std::string> chk_optimality_dominates() {
    Rng rng = Rng(kMasterSeed).substream(13);
    for (int trial = 0; trial < 100; ++trial) {
        TabularMdp mdp = random_mdp(rng, 5, 3, 0.9);
        StochasticPolicy mu = random_stochastic(rng, 5, 3);
        const QTable q = random_qtable(rng, mdp.n_pairs());
        const QTable t_opt = bellman_optimality_apply(mdp, q);
        const QTable t_mu = bellman_apply(mdp, mu, q);
        for (std::size_t i = 0; i < q.size(); ++i)
            if (t_opt[i] < t_mu[i] - 1e-12) return "T q < T_mu q";
    }
    return std::nullopt;
}

// ---------- numerics ----------

std::optional<std::string> chk_lp_certificates() {
    Rng rng = Rng(kMasterSeed).substream(14);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform_int(4));
        const std::size_t m = n + 1 + static_cast<std::size_t>(rng.uniform_int(4));
        LinearProgram lp;
        lp.objective = random_qtable(rng, n, -1.0, 1.0);
        lp.constraint_matrix = Matrix(m + 2 * n, n);
        lp.constraint_rhs.assign(m + 2 * n, 0.0);
        const Vec x0 = random_qtable(rng, n, -1.0, 1.0);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j)
                lp.constraint_matrix(i, j) = rng.uniform(-1.0, 1.0);
            lp.constraint_rhs[i] =
                kernels::dot(lp.constraint_matrix.row(i), x0.data(), n) + rng.uniform(0.0, 1.0);
        }
        for (std::size_t j = 0; j < n; ++j) {  // box rows keep the program bounded
            lp.constraint_matrix(m + 2 * j, j) = 1.0;
            lp.constraint_rhs[m + 2 * j] = 10.0;
            lp.constraint_matrix(m + 2 * j + 1, j) = -1.0;
            lp.constraint_rhs[m + 2 * j + 1] = 10.0;
        }
        const LpSolution sol = lp_solve(lp);
        if (sol.status != LpStatus::Optimal) return "expected optimal status";
        for (std::size_t i = 0; i < lp.constraint_rhs.size(); ++i) {
            const double lhs = kernels::dot(lp.constraint_matrix.row(i), sol.point.data(), n);
            if (lhs > lp.constraint_rhs[i] + 1e-7) return "feasibility certificate violated";
        }
        const double obj = kernels::dot(lp.objective.data(), sol.point.data(), n);
        if (std::fabs(obj - sol.objective_value) > 1e-7 * (1.0 + std::fabs(obj)))
            return "objective mismatch";
    }
    return std::nullopt;
}

std::optional<std::string> chk_lp_determinism() {
    Rng rng = Rng(kMasterSeed).substream(15);
    LinearProgram lp;
    const std::size_t n = 3;
    const std::size_t m = 8;
    lp.objective = random_qtable(rng, n, -1.0, 1.0);
    lp.constraint_matrix = Matrix(m, n);
    lp.constraint_rhs.assign(m, 1.0);
    for (double& v : lp.constraint_matrix.data()) v = rng.uniform(-1.0, 1.0);
    const LpSolution a = lp_solve(lp);
    const LpSolution b = lp_solve(lp);
    if (a.status != b.status || a.point.size() != b.point.size())
        return "status or size differs across identical solves";
    if (std::memcmp(a.point.data(), b.point.data(), a.point.size() * sizeof(double)) != 0)
        return "solution bytes differ across identical solves";
    return std::nullopt;
}

// ---------- linear-fa ----------

std::optional<std::string> chk_evaluate_linearity() {
    Rng rng = Rng(kMasterSeed).substream(16);
    const FeatureMap phi = sample_features(6, 3, 4, -2.0, 2.0, rng.next_u64());
    for (int trial = 0; trial < 50; ++trial) {
        const ParamVector t1 = random_qtable(rng, 4);
        const ParamVector t2 = random_qtable(rng, 4);
        ParamVector sum(4);
        for (std::size_t j = 0; j < 4; ++j) sum[j] = t1[j] + t2[j];
        const QTable lhs = evaluate(phi, sum);
        const QTable a = evaluate(phi, t1);
        const QTable b = evaluate(phi, t2);
        for (std::size_t i = 0; i < lhs.size(); ++i)
            if (std::fabs(lhs[i] - a[i] - b[i]) > 1e-12) return "evaluate is not linear";
    }
    return std::nullopt;
}

std::optional<std::string> chk_feature_positivity() {
    const FeatureMap phi = sample_features(50, 50, 50, 1.0, 5.0, 42);
    for (double v : phi.features.data())
        if (v < 1.0 || v > 5.0) return "feature outside [1, 5]";
    return std::nullopt;
}

// ---------- model-based (small instances) ----------

std::optional<std::string> chk_tabular_equivalence() {
    Rng rng = Rng(kMasterSeed).substream(17);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t S = 3 + static_cast<std::size_t>(rng.uniform_int(6));
        const std::size_t A = 2 + static_cast<std::size_t>(rng.uniform_int(3));
        TabularMdp mdp = random_mdp(rng, S, A, 0.85);
        const FeatureMap phi = identity_features(S, A);
        const QTable weights(mdp.n_pairs(), 1.0);
        const RunTrace trace = rpi_run(mdp, phi, 20, weights, 0);

        // Classical policy iteration from the same mu_0.
        DeterministicPolicy mu = std::get<DeterministicPolicy>(trace.records[0].policy);
        for (std::size_t k = 1; k < trace.records.size(); ++k) {
            const QTable q_mu = exact_q_value(mdp, mu);
            if (inf_norm_diff(trace.records[k].estimate, q_mu) > 1e-6)
                return "f_{k+1} != Q_{mu_k} at step " + std::to_string(k);
            mu = greedy_policy(q_mu, mdp);
        }
        const QTable q_star = optimal_q(mdp, 1e-7);
        if (inf_norm_diff(trace.records.back().estimate, q_star) > 1e-5)
            return "terminal value misses Q*";
    }
    return std::nullopt;
}

struct ModelBasedBundle {
    std::optional<std::string> monotone;
    std::optional<std::string> feasible;
    std::optional<std::string> bound;
    std::optional<std::string> projection;
    bool ran = false;
};

// One shared inventory run covers the Theorem 1.1-1.3 and Theorem 3 lines.
const ModelBasedBundle& inventory_bundle() {
    static const ModelBasedBundle bundle = [] {
        ModelBasedBundle b;
        b.ran = true;
        InventoryParams params;
        params.demand = uniform_demand(params.capacity);
        const TabularMdp mdp = build_inventory_mdp(params);
        const FeatureMap phi = sample_features(mdp.n_states(), mdp.n_actions(), 50, 1.0, 5.0,
                                               Rng(0).substream(7).next_u64());
        const QTable weights(mdp.n_pairs(), 1.0);
        RunTrace trace;
        try {
            trace = rpi_run(mdp, phi, 50, weights, 0);
        } catch (const std::exception& e) {
            const std::string msg = std::string("inventory run failed: ") + e.what();
            b.monotone = b.feasible = b.bound = b.projection = msg;
            return b;
        }

        std::string why;
        if (!check_rpi_trace_monotone_lower_bound(trace, 1e-6, &why)) b.monotone = why;
        if (!check_rpi_trace_feasibility(mdp, trace, 1e-6, &why)) b.feasible = why;

        const QTable q_star = optimal_q(mdp, 1e-6);
        const IterationRecord& last = trace.records.back();
        const double gap = inf_norm_diff(last.true_q, q_star);
        const double budget =
            2.0 * last.bellman_residual / (1.0 - mdp.discount()) + 1e-4;
        if (gap > budget)
            b.bound = "gap " + format_double(gap) + " exceeds " + format_double(budget);

        Rng rng = Rng(kMasterSeed).substream(18);
        for (std::size_t k = 1; k < trace.records.size() && !b.projection; ++k) {
            const QTable& f_prev = trace.records[k - 1].estimate;
            const QTable& f_next = trace.records[k].estimate;
            const QTable q_mu =
                exact_q_value(mdp, std::get<DeterministicPolicy>(trace.records[k - 1].policy));
            if (!check_projection_identity(f_prev, f_next, q_mu, weights, 1e-5, &why)) {
                b.projection = "at solution k=" + std::to_string(k) + ": " + why;
                break;
            }
            // Random feasible points along the segment stay feasible by
            // convexity; the identity must hold there too.
            for (int draw = 0; draw < 10; ++draw) {
                const double lambda = rng.uniform();
                QTable mid(f_prev.size());
                for (std::size_t i = 0; i < mid.size(); ++i)
                    mid[i] = lambda * f_prev[i] + (1.0 - lambda) * f_next[i];
                if (!check_projection_identity(f_prev, mid, q_mu, weights, 1e-5, &why)) {
                    b.projection = "at sampled point k=" + std::to_string(k) + ": " + why;
                    break;
                }
            }
        }
        return b;
    }();
    return bundle;
}

// ---------- inventory ----------

std::optional<std::string> chk_inventory_support() {
    InventoryParams params;
    params.demand = uniform_demand(params.capacity);
    const TabularMdp mdp = build_inventory_mdp(params);
    const int M = params.capacity;
    for (int s = 0; s <= M; ++s)
        for (int a = 0; a <= M; ++a) {
            const int stocked = std::min(s + a, M);
            const double* row = mdp.transition_row(static_cast<std::size_t>(s),
                                                   static_cast<std::size_t>(a));
            double tail = 0.0;
            for (int d = stocked; d <= M; ++d) tail += params.demand[static_cast<std::size_t>(d)];
            for (int sp = 0; sp <= M; ++sp)
                if (sp > stocked && row[sp] != 0.0) return "support outside 0..stocked";
            if (std::fabs(row[0] - tail) > 1e-12) return "P(0|s,a) mismatch";
        }
    return std::nullopt;
}

std::optional<std::string> chk_inventory_zero_reward() {
    Rng rng = Rng(kMasterSeed).substream(19);
    for (int trial = 0; trial < 10; ++trial) {
        InventoryParams params;
        params.capacity = 3 + rng.uniform_int(20);
        params.unit_cost = rng.uniform(0.0, 10.0);
        params.holding_cost = rng.uniform(0.0, 5.0);
        params.price = rng.uniform(0.0, 20.0);
        params.discount = rng.uniform(0.0, 0.99);
        params.demand = uniform_demand(params.capacity);
        const TabularMdp mdp = build_inventory_mdp(params);
        if (std::fabs(mdp.reward(0, 0)) > 1e-12) return "r(0,0) != 0";
    }
    return std::nullopt;
}

std::optional<std::string> chk_inventory_monte_carlo() {
    InventoryParams params;
    params.demand = uniform_demand(params.capacity);
    const TabularMdp mdp = build_inventory_mdp(params);
    Rng rng = Rng(kMasterSeed).substream(20);
    for (int trial = 0; trial < 5; ++trial) {
        const int s = rng.uniform_int(params.capacity + 1);
        const int a = rng.uniform_int(params.capacity + 1);
        const int stocked = std::min(s + a, params.capacity);
        double sum = 0.0;
        double sumsq = 0.0;
        const long n = 100000;
        for (long i = 0; i < n; ++i) {
            const int d = rng.uniform_int(params.capacity + 1);  // uniform demand draw
            const double r = params.price * std::min(stocked, d) - params.unit_cost * a -
                             params.holding_cost * std::max(stocked - d, 0);
            sum += r;
            sumsq += r * r;
        }
        const double mean = sum / n;
        const double var = (sumsq - n * mean * mean) / (n - 1);
        const double se = std::sqrt(var / n);
        const double expected = mdp.reward(static_cast<std::size_t>(s), static_cast<std::size_t>(a));
        if (std::fabs(mean - expected) > 3.0 * se + 1e-9)
            return "simulated reward off by " + format_double(mean - expected) + " (3se=" +
                   format_double(3.0 * se) + ")";
    }
    return std::nullopt;
}

// ---------- cartpole ----------

std::optional<std::string> chk_cartpole_determinism() {
    Rng rng = Rng(kMasterSeed).substream(21);
    for (int trial = 0; trial < 20; ++trial) {
        cartpole::State s;
        s.x = rng.uniform(-1.0, 1.0);
        s.x_dot = rng.uniform(-1.0, 1.0);
        s.theta = rng.uniform(-0.2, 0.2);
        s.theta_dot = rng.uniform(-1.0, 1.0);
        const double force = rng.uniform() < 0.5 ? -cartpole::kForceMag : cartpole::kForceMag;
        const cartpole::State a = cartpole::integrate(s, force);
        const cartpole::State b = cartpole::integrate(s, force);
        if (std::memcmp(&a, &b, sizeof(a)) != 0) return "integration not bit-deterministic";
    }
    return std::nullopt;
}

std::optional<std::string> chk_cartpole_pendulum_falls() {
    for (const double theta0 : {0.01, -0.01, 0.04, -0.04}) {
        cartpole::State s;
        s.theta = theta0;
        double prev = std::fabs(s.theta);
        for (int t = 0; t < 10; ++t) {
            s = cartpole::integrate(s, 0.0);
            const double mag = std::fabs(s.theta);
            if (mag < prev - 1e-12) return "pole angle decreased under zero force";
            prev = mag;
        }
    }
    return std::nullopt;
}

std::optional<std::string> chk_cartpole_return_cap() {
    const double cap = cartpole::max_discounted_return(0.99);
    Rng rng = Rng(kMasterSeed).substream(22);
    for (int trial = 0; trial < 20; ++trial) {
        cartpole::CartPole env(rng.substream(static_cast<std::uint64_t>(trial)));
        // A crude balancing policy reaches long episodes; random reaches short.
        const bool balance = trial % 2 == 0;
        const auto act = [&](const cartpole::State& s) {
            if (balance) return s.theta + 0.1 * s.theta_dot > 0 ? 1 : 0;
            return rng.uniform() < 0.5 ? 0 : 1;
        };
        const auto [disc, undisc] = cartpole::rollout_return(env, act, 0.99);
        if (disc > cap + 1e-9) return "discounted return exceeds cap";
        if (undisc > 500.0) return "undiscounted return exceeds 500";
    }
    return std::nullopt;
}

// ---------- micro-nn / model-free ----------

std::vector<Transition> kink_free_batch(const nn::Mlp& net, const nn::Mlp& target, double gamma,
                                        const RpiLossParams& params, Rng& rng, std::size_t size) {
    std::vector<Transition> batch;
    while (batch.size() < size) {
        Transition t;
        t.state = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-0.2, 0.2),
                   rng.uniform(-1, 1)};
        t.next_state = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-0.2, 0.2),
                        rng.uniform(-1, 1)};
        t.action = rng.uniform_int(2);
        t.reward = rng.uniform(-1.0, 1.0);
        t.terminal = rng.uniform() < 0.2;
        // Keep clear of both hinge kinks so finite differences see a smooth
        // neighborhood.
        const Vec q = nn::forward(net, {t.state.x, t.state.x_dot, t.state.theta,
                                        t.state.theta_dot});
        const double q_sa = q[static_cast<std::size_t>(t.action)];
        double y = t.reward;
        if (!t.terminal) {
            const Vec qn = nn::forward(target, {t.next_state.x, t.next_state.x_dot,
                                                t.next_state.theta, t.next_state.theta_dot});
            y += gamma * kernels::reduce_max(qn.data(), qn.size());
        }
        if (std::fabs(q_sa - y) < 1e-3 || std::fabs(params.q_min - q_sa) < 1e-3) continue;
        batch.push_back(t);
    }
    return batch;
}

std::optional<std::string> chk_loss_gradients_fd() {
    Rng rng = Rng(kMasterSeed).substream(23);
    const RpiLossParams params;
    for (int trial = 0; trial < 4; ++trial) {
        nn::Mlp net = nn::init_params({4, 16, 2}, rng.next_u64());
        nn::Mlp target = nn::init_params({4, 16, 2}, rng.next_u64());
        const std::vector<Transition> batch = kink_free_batch(net, target, 0.99, params, rng, 8);
        for (const bool use_rpi : {false, true}) {
            const LossValue lv = use_rpi ? rpi_loss(batch, net, target, 0.99, params)
                                         : msbe_loss(batch, net, target, 0.99);
            const auto loss_at = [&](const nn::Mlp& candidate) {
                return use_rpi ? rpi_loss(batch, candidate, target, 0.99, params).loss
                               : msbe_loss(batch, candidate, target, 0.99).loss;
            };
            for (int sample = 0; sample < 40; ++sample) {
                const std::size_t layer = static_cast<std::size_t>(rng.uniform_int(
                    static_cast<int>(net.n_layers())));
                const bool bias = rng.uniform() < 0.3;
                Vec& params_vec = bias ? net.biases[layer] : net.weights[layer].data();
                const Vec& grads_vec =
                    bias ? lv.grads.biases[layer] : lv.grads.weights[layer].data();
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
                const double an = grads_vec[idx];
                const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-6});
                if (std::fabs(fd - an) / denom > 1e-4)
                    return "finite-difference mismatch: fd=" + format_double(fd) +
                           " analytic=" + format_double(an);
            }
        }
    }
    return std::nullopt;
}

std::optional<std::string> chk_rpi_loss_decomposition() {
    Rng rng = Rng(kMasterSeed).substream(24);
    const RpiLossParams params;
    nn::Mlp net = nn::init_params({4, 16, 2}, rng.next_u64());
    nn::Mlp target = nn::init_params({4, 16, 2}, rng.next_u64());
    for (int trial = 0; trial < 20; ++trial) {
        const std::vector<Transition> batch = kink_free_batch(net, target, 0.99, params, rng, 16);
        const double whole = rpi_loss(batch, net, target, 0.99, params).loss;
        double linear = 0.0;
        double bellman = 0.0;
        double floor_term = 0.0;
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
            bellman += params.lambda1 * std::max(q_sa - y, 0.0);
            floor_term += params.lambda2 * std::max(params.q_min - q_sa, 0.0);
        }
        const double m = static_cast<double>(batch.size());
        if (bellman < 0.0 || floor_term < 0.0) return "penalty terms must be non-negative";
        if (std::fabs(whole - (linear + bellman + floor_term) / m) > 1e-10)
            return "loss does not decompose into its three terms";
    }
    return std::nullopt;
}

std::optional<std::string> chk_rpi_loss_floor_push() {
    const RpiLossParams params;
    // Constant net: zero weights, output bias q_min - 1 on both actions.
    nn::Mlp net = nn::init_params({4, 2}, 1);
    for (double& v : net.weights[0].data()) v = 0.0;
    net.biases[0].assign(2, params.q_min - 1.0);
    Rng rng = Rng(kMasterSeed).substream(25);
    std::vector<Transition> batch;
    for (int i = 0; i < 32; ++i) {
        Transition t;
        t.state = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-0.2, 0.2),
                   rng.uniform(-1, 1)};
        t.next_state = t.state;
        t.action = rng.uniform_int(2);
        t.reward = 1.0;
        batch.push_back(t);
    }
    const LossValue lv = rpi_loss(batch, net, net, 0.99, params);
    // Every sampled Q sits below the floor, so descent must push each biased
    // output upward: bias gradients strictly negative for sampled actions.
    bool action_seen[2] = {false, false};
    for (const Transition& t : batch) action_seen[t.action] = true;
    for (int a = 0; a < 2; ++a) {
        if (!action_seen[a]) continue;
        if (lv.grads.biases[0][static_cast<std::size_t>(a)] >= 0.0)
            return "floor penalty fails to push Q upward";
    }
    return std::nullopt;
}

std::optional<std::string> chk_jensen_gap() {
    Rng rng = Rng(kMasterSeed).substream(26);
    for (int trial = 0; trial < 5; ++trial) {
        TabularMdp mdp = random_mdp(rng, 5, 3, 0.9);
        const QTable f = random_qtable(rng, mdp.n_pairs());
        DeterministicPolicy mu(5);
        for (int& a : mu) a = rng.uniform_int(3);
        const JensenGap gap = jensen_gap_check(mdp, f, mu, 20000, rng.next_u64());
        if (gap.relaxed < gap.exact - 3.0 * gap.std_error)
            return "relaxed penalty " + format_double(gap.relaxed) + " below exact " +
                   format_double(gap.exact) + " - 3se";
    }
    return std::nullopt;
}

std::optional<std::string> chk_loss_switch_isolation() {
    DqnConfig base;
    base.total_steps = 700;
    base.learn_start = 500;
    base.eval_interval = 700;
    base.n_eval = 2;
    base.log_transitions = 500;
    base.hidden_widths = {8};
    base.seed = 3;
    DqnConfig msbe = base;
    msbe.loss = LossKind::Msbe;
    DqnConfig rpi_cfg = base;
    rpi_cfg.loss = LossKind::Rpi;
    const ModelFreeTrace a = dqn_train(msbe);
    const ModelFreeTrace b = dqn_train(rpi_cfg);
    if (a.behavior_log.size() != b.behavior_log.size()) return "behavior log size differs";
    for (std::size_t i = 0; i < a.behavior_log.size(); ++i) {
        const Transition& x = a.behavior_log[i];
        const Transition& y = b.behavior_log[i];
        if (std::memcmp(&x.state, &y.state, sizeof(x.state)) != 0 || x.action != y.action ||
            x.reward != y.reward || x.terminal != y.terminal)
            return "behavior streams diverge before the first gradient step";
    }
    return std::nullopt;
}

// ---------- harness ----------

std::optional<std::string> chk_reproducibility() {
    ExperimentConfig config = default_config(ExperimentKind::InventoryModelBased, false);
    config.seeds = {0, 1};
    config.inventory.params.capacity = 5;
    config.inventory.params.demand = uniform_demand(5);
    config.inventory.iterations = 3;
    config.inventory.feature_dim = 10;
    config.threads = 2;
    config.out_dir = "/tmp/rpi_invariant_repro_a";
    run_inventory_experiment(config);
    const std::string a = read_text_file(config.out_dir + "/inventory_iterations.csv");
    config.out_dir = "/tmp/rpi_invariant_repro_b";
    config.threads = 1;  // worker count must not leak into the bytes
    run_inventory_experiment(config);
    const std::string b = read_text_file(config.out_dir + "/inventory_iterations.csv");
    if (a != b) return "identical configs produced different CSV bytes";
    return std::nullopt;
}

std::optional<std::string> chk_summary_consistency() {
    ExperimentConfig config = default_config(ExperimentKind::InventoryModelBased, false);
    config.seeds = {0, 1, 2};
    config.inventory.params.capacity = 5;
    config.inventory.params.demand = uniform_demand(5);
    config.inventory.iterations = 3;
    config.inventory.feature_dim = 10;
    config.out_dir = "/tmp/rpi_invariant_summary";
    const MetricsSummary summary = run_inventory_experiment(config);

    const CsvTable table = parse_csv(read_text_file(config.out_dir + "/inventory_summary.csv"));
    std::vector<SeedMetrics> rows;
    const int algo_col = table.column("algo");
    const int feasible_col = table.column("feasible");
    const int value_col = table.column("terminal_true_value");
    const int holding_col = table.column("holding_pct");
    const int seed_col = table.column("seed");
    if (algo_col < 0 || feasible_col < 0 || value_col < 0 || holding_col < 0 || seed_col < 0)
        return "summary CSV lacks expected columns";
    for (const auto& cells : table.rows) {
        SeedMetrics m;
        m.algo = cells[static_cast<std::size_t>(algo_col)];
        m.seed = std::stoull(cells[static_cast<std::size_t>(seed_col)]);
        m.feasible = cells[static_cast<std::size_t>(feasible_col)] == "1";
        m.terminal_true_value = std::stod(cells[static_cast<std::size_t>(value_col)]);
        m.holding_pct = std::stod(cells[static_cast<std::size_t>(holding_col)]);
        rows.push_back(m);
    }
    const std::vector<AlgoAggregate> recomputed =
        aggregate_metrics(rows, ExperimentKind::InventoryModelBased);
    if (recomputed.size() != summary.aggregates.size()) return "aggregate count differs";
    for (std::size_t i = 0; i < recomputed.size(); ++i) {
        const AlgoAggregate& x = recomputed[i];
        const AlgoAggregate& y = summary.aggregates[i];
        if (x.algo != y.algo || std::fabs(x.primary_mean - y.primary_mean) > 1e-9 ||
            std::fabs(x.primary_std - y.primary_std) > 1e-9 ||
            std::fabs(x.holding_mean - y.holding_mean) > 1e-9)
            return "aggregates not recomputable from per-row CSV";
    }
    return std::nullopt;
}

}  // namespace

bool run_invariant_suite(std::ostream& report) {
    const std::vector<NamedCheck> checks = {
        {"tabular-mdp: T_mu and T are monotone (100 draws)", chk_operator_monotonicity},
        {"tabular-mdp: T_mu is a gamma-contraction", chk_gamma_contraction},
        {"tabular-mdp: T_mu f >= f implies Q_mu >= f", chk_claim1_lower_bound},
        {"tabular-mdp: T q >= T_mu q for every policy", chk_optimality_dominates},
        {"numerics: simplex optimality and feasibility certificates", chk_lp_certificates},
        {"numerics: identical inputs solve bit-identically", chk_lp_determinism},
        {"linear-fa: evaluate is linear", chk_evaluate_linearity},
        {"linear-fa: sampled features stay inside [1, 5]", chk_feature_positivity},
        {"model-based: identity features reproduce policy iteration", chk_tabular_equivalence},
        {"model-based: estimates are a monotone lower bound (inventory)",
         [] { return inventory_bundle().monotone; }},
        {"model-based: every iterate keeps T_mu f >= f (inventory)",
         [] { return inventory_bundle().feasible; }},
        {"model-based: terminal suboptimality bound holds (inventory)",
         [] { return inventory_bundle().bound; }},
        {"model-based: weighted-l1 projection identity (inventory)",
         [] { return inventory_bundle().projection; }},
        {"inventory: transition support and stockout mass", chk_inventory_support},
        {"inventory: r(0,0) = 0 for any prices", chk_inventory_zero_reward},
        {"inventory: Monte-Carlo reward cross-check", chk_inventory_monte_carlo},
        {"cartpole: physics is bit-deterministic", chk_cartpole_determinism},
        {"cartpole: unforced pendulum falls", chk_cartpole_pendulum_falls},
        {"cartpole: discounted returns respect the cap", chk_cartpole_return_cap},
        {"micro-nn/model-free: loss gradients match finite differences", chk_loss_gradients_fd},
        {"model-free: rpi loss equals the sum of its three terms", chk_rpi_loss_decomposition},
        {"model-free: floor penalty pushes Q upward", chk_rpi_loss_floor_push},
        {"model-free: sampled penalty dominates exact penalty", chk_jensen_gap},
        {"model-free: behavior identical until the first gradient step",
         chk_loss_switch_isolation},
        {"harness: byte-identical reruns", chk_reproducibility},
        {"harness: summary statistics recomputable from rows", chk_summary_consistency},
    };

    bool all_passed = true;
    for (const NamedCheck& check : checks) {
        std::optional<std::string> failure;
        try {
            failure = check.run();
        } catch (const std::exception& e) {
            failure = std::string("exception: ") + e.what();
        }
        if (failure) {
            all_passed = false;
            report << "FAIL " << check.name << " -- " << *failure << "\n";
        } else {
            report << "PASS " << check.name << "\n";
        }
    }
    return all_passed;
}

}  // namespace rpi::harness
