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

// End-to-end acceptance checks, one numbered line per criterion. Invoke with
// the criterion numbers to run, e.g. `acceptance 1 2 3 4 5`; no arguments
// runs everything. Exit status 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "../lp_oracle.hpp"
#include "rpi/harness.hpp"

using namespace rpi;

namespace {

struct Criterion {
    int id;
    std::string summary;
    bool passed;
};

std::vector<Criterion> g_results;

void record(int id, bool passed, const std::string& summary) {
    g_results.push_back({id, summary, passed});
    std::printf("%s criterion %d: %s\n", passed ? "PASS" : "FAIL", id, summary.c_str());
    std::fflush(stdout);
}

double min_gap(const QTable& hi, const QTable& lo) {
    double worst = 1e300;
    for (std::size_t i = 0; i < hi.size(); ++i) worst = std::min(worst, hi[i] - lo[i]);
    return worst;
}

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

// ---------------------------------------------------------------------------
// Criteria 1, 3, 4, 5 share one model-based benchmark campaign: 20 seeds x
// 50 iterations of RPI, AMPI-Q (m=1) and TRPO (delta=2) on the inventory
// instance (M=49, c=5, h=1, p=10, uniform demand, gamma=0.9, d=50 features
// uniform on [1,5]), run sequentially on one thread.
// ---------------------------------------------------------------------------
void run_model_based_campaign(const std::set<int>& wanted) {
    InventoryParams params;
    params.demand = uniform_demand(params.capacity);
    const TabularMdp mdp = build_inventory_mdp(params);
    const QTable weights(mdp.n_pairs(), 1.0);
    const QTable q_star = optimal_q(mdp, 1e-6);
    const int iterations = 50;
    const int n_seeds = 20;

    int feasible_seeds = 0;
    bool monotone_ok = true;
    bool lower_ok = true;
    bool projection_ok = true;
    bool bound_ok = true;
    double worst_monotone = 1e300;
    double worst_lower = 1e300;
    double worst_projection = 0.0;
    double worst_bound_margin = -1e300;
    double rpi_terminal_sum = 0.0;
    double ampiq_terminal_sum = 0.0;
    double trpo_terminal_sum = 0.0;

    const auto t0 = std::chrono::steady_clock::now();
    for (int seed = 0; seed < n_seeds; ++seed) {
        const std::uint64_t feature_seed =
            Rng(static_cast<std::uint64_t>(seed)).substream(7).next_u64();
        const FeatureMap phi =
            sample_features(mdp.n_states(), mdp.n_actions(), 50, 1.0, 5.0, feature_seed);

        RunTrace trace;
        try {
            trace = rpi_run(mdp, phi, iterations, weights, static_cast<std::uint64_t>(seed));
        } catch (const NoFeasibleStartError&) {
            std::printf("  note: seed %d excluded (no feasible start)\n", seed);
            continue;
        }
        ++feasible_seeds;

        for (std::size_t k = 0; k < trace.records.size(); ++k) {
            const IterationRecord& rec = trace.records[k];
            worst_lower = std::min(worst_lower, min_gap(rec.true_q, rec.estimate));
            if (k > 0) {
                worst_monotone = std::min(
                    worst_monotone, min_gap(rec.estimate, trace.records[k - 1].estimate));

                const QTable& f_prev = trace.records[k - 1].estimate;
                double d_step = 0.0;
                double d_rest = 0.0;
                double d_total = 0.0;
                const QTable& q_mu = trace.records[k - 1].true_q;
                for (std::size_t i = 0; i < f_prev.size(); ++i) {
                    d_step += std::fabs(rec.estimate[i] - f_prev[i]);
                    d_rest += std::fabs(q_mu[i] - rec.estimate[i]);
                    d_total += std::fabs(q_mu[i] - f_prev[i]);
                }
                worst_projection = std::max(
                    worst_projection,
                    std::fabs(d_step + d_rest - d_total) / std::max(1.0, d_total));
            }
        }
        monotone_ok = monotone_ok && worst_monotone >= -1e-6;
        lower_ok = lower_ok && worst_lower >= -1e-6;
        projection_ok = projection_ok && worst_projection <= 1e-5;

        const IterationRecord& last = trace.records.back();
        const double gap = inf_norm_diff(last.true_q, q_star);
        const double budget = 2.0 * last.bellman_residual / (1.0 - mdp.discount()) + 1e-4;
        worst_bound_margin = std::max(worst_bound_margin, gap - budget);
        bound_ok = bound_ok && gap <= budget;

        rpi_terminal_sum += policy_mean(last.true_q, last.policy, mdp.n_actions());

        const RunTrace ampiq =
            ampiq_run(mdp, phi, ParamVector(50, 0.0), 1, iterations);
        ampiq_terminal_sum += policy_mean(ampiq.records.back().true_q,
                                          ampiq.records.back().policy, mdp.n_actions());
        const RunTrace trpo = trpo_run(mdp, phi, ParamVector(50, 0.0), 2.0, iterations);
        trpo_terminal_sum += policy_mean(trpo.records.back().true_q,
                                         trpo.records.back().policy, mdp.n_actions());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    char buf[512];
    if (wanted.count(1) != 0) {
        const bool runtime_ok = elapsed < 900.0;
        std::snprintf(buf, sizeof(buf),
                      "monotone lower bound on 20x50 inventory: %d/%d feasible seeds clean "
                      "(worst monotone slack %.3g, worst lower-bound slack %.3g, tolerance "
                      "-1e-6), %.0fs single-threaded (budget 900s)",
                      feasible_seeds, n_seeds, worst_monotone, worst_lower, elapsed);
        record(1, monotone_ok && lower_ok && runtime_ok && feasible_seeds > 0, buf);
    }
    if (wanted.count(3) != 0) {
        std::snprintf(buf, sizeof(buf),
                      "weighted-l1 projection identity at every iteration: worst relative "
                      "error %.3g (tolerance 1e-5)",
                      worst_projection);
        record(3, projection_ok, buf);
    }
    if (wanted.count(4) != 0) {
        std::snprintf(buf, sizeof(buf),
                      "terminal suboptimality within 2||Tf-f||/(1-gamma) + 1e-4 in every "
                      "run (worst margin %.3g)",
                      worst_bound_margin);
        record(4, bound_ok, buf);
    }
    if (wanted.count(5) != 0) {
        const double rpi_mean = rpi_terminal_sum / std::max(1, feasible_seeds);
        const double ampiq_mean = ampiq_terminal_sum / std::max(1, feasible_seeds);
        const double trpo_mean = trpo_terminal_sum / std::max(1, feasible_seeds);
        std::snprintf(buf, sizeof(buf),
                      "terminal value ordering over %d seeds: rpi %.2f > ampiq %.2f and "
                      "trpo %.2f",
                      feasible_seeds, rpi_mean, ampiq_mean, trpo_mean);
        record(5, rpi_mean > ampiq_mean && rpi_mean > trpo_mean, buf);
    }
}

// Criterion 2: identity features reduce RPI to exact policy iteration.
void run_tabular_equivalence() {
    Rng rng(20260808);
    bool per_step_ok = true;
    bool terminal_ok = true;
    double worst_step = 0.0;
    double worst_terminal = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t S = 3 + static_cast<std::size_t>(rng.uniform_int(6));
        const std::size_t A = 2 + static_cast<std::size_t>(rng.uniform_int(3));
        TabularMdp mdp = random_mdp(rng, S, A, 0.85);
        const FeatureMap phi = identity_features(S, A);
        const RunTrace trace = rpi_run(mdp, phi, 20, QTable(S * A, 1.0), 0);

        DeterministicPolicy mu = std::get<DeterministicPolicy>(trace.records[0].policy);
        for (std::size_t k = 1; k < trace.records.size(); ++k) {
            const QTable q_mu = exact_q_value(mdp, mu);
            worst_step = std::max(worst_step, inf_norm_diff(trace.records[k].estimate, q_mu));
            per_step_ok = per_step_ok && worst_step <= 1e-6;
            mu = greedy_policy(q_mu, mdp);
        }
        const QTable q_star = optimal_q(mdp, 1e-7);
        worst_terminal =
            std::max(worst_terminal, inf_norm_diff(trace.records.back().estimate, q_star));
        terminal_ok = terminal_ok && worst_terminal <= 1e-5;
    }
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "tabular equivalence on 10 random MDPs: worst per-step gap %.3g "
                  "(tol 1e-6), worst terminal gap %.3g (tol 1e-5)",
                  worst_step, worst_terminal);
    record(2, per_step_ok && terminal_ok, buf);
}

// Criterion 6: simplex vs brute-force vertex enumeration on 200 random LPs.
void run_lp_oracle() {
    Rng rng(424242);
    int optimal_cases = 0;
    int infeasible_cases = 0;
    bool all_ok = true;
    double worst_gap = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const LinearProgram lp = rpi_test::random_lp(rng, trial % 3 != 0);
        const rpi_test::VertexScan oracle = rpi_test::enumerate_vertices(lp);
        const LpSolution sol = lp_solve(lp);
        if (sol.status == LpStatus::Optimal) {
            ++optimal_cases;
            if (!oracle.any_feasible_vertex) {
                all_ok = false;
                continue;
            }
            const double gap = std::fabs(sol.objective_value - oracle.best_objective);
            worst_gap = std::max(worst_gap, gap);
            if (gap > 1e-7 * (1.0 + std::fabs(oracle.best_objective))) all_ok = false;
            for (std::size_t i = 0; i < lp.constraint_rhs.size(); ++i) {
                const double lhs = kernels::dot(lp.constraint_matrix.row(i),
                                                sol.point.data(), sol.point.size());
                if (lhs > lp.constraint_rhs[i] + 1e-7) all_ok = false;
            }
        } else if (sol.status == LpStatus::Infeasible) {
            ++infeasible_cases;
            if (oracle.any_feasible_vertex) all_ok = false;
        } else {
            all_ok = false;  // box rows forbid unbounded instances
        }
    }
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "simplex vs vertex enumeration on 200 LPs (%d optimal, %d infeasible): "
                  "worst objective gap %.3g (tol 1e-7), certificates clean",
                  optimal_cases, infeasible_cases, worst_gap);
    record(6, all_ok && optimal_cases >= 100, buf);
}

// Criterion 7: loss gradients vs central finite differences, 50 batches.
void run_gradient_check() {
    Rng rng(777);
    const RpiLossParams params;
    bool ok = true;
    double worst_rel = 0.0;
    for (int batch_idx = 0; batch_idx < 50; ++batch_idx) {
        nn::Mlp net = nn::init_params({4, 16, 2}, rng.next_u64());
        const nn::Mlp target = nn::init_params({4, 16, 2}, rng.next_u64());

        std::vector<Transition> batch;
        while (batch.size() < 8) {
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
                const Vec qn =
                    nn::forward(target, {t.next_state.x, t.next_state.x_dot,
                                         t.next_state.theta, t.next_state.theta_dot});
                y += 0.99 * kernels::reduce_max(qn.data(), qn.size());
            }
            // Kink-avoiding sampling keeps finite differences smooth.
            if (std::fabs(q_sa - y) < 1e-3 || std::fabs(params.q_min - q_sa) < 1e-3) continue;
            batch.push_back(t);
        }

        const bool use_rpi = batch_idx % 2 == 0;
        const LossValue lv = use_rpi ? rpi_loss(batch, net, target, 0.99, params)
                                     : msbe_loss(batch, net, target, 0.99);
        const auto loss_at = [&](const nn::Mlp& candidate) {
            return use_rpi ? rpi_loss(batch, candidate, target, 0.99, params).loss
                           : msbe_loss(batch, candidate, target, 0.99).loss;
        };
        for (int sample = 0; sample < 30; ++sample) {
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
            const double rel = std::fabs(fd - grads_vec[idx]) / denom;
            worst_rel = std::max(worst_rel, rel);
            if (rel >= 1e-4) ok = false;
        }
    }
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "msbe and rpi loss gradients vs finite differences on 50 batches: worst "
                  "relative error %.3g (tol 1e-4)",
                  worst_rel);
    record(7, ok, buf);
}

// Criterion 8: sampled penalty dominates the exact penalty (Jensen).
void run_jensen_check() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(4242);
    bool ok = true;
    double worst_margin = 1e300;
    for (int trial = 0; trial < 5; ++trial) {
        TabularMdp mdp = random_mdp(rng, 5, 3, 0.9);
        QTable f(mdp.n_pairs());
        for (double& v : f) v = rng.uniform(-3.0, 3.0);
        DeterministicPolicy mu(5);
        for (int& a : mu) a = rng.uniform_int(3);
        const JensenGap gap = jensen_gap_check(mdp, f, mu, 100000, rng.next_u64());
        const double margin = gap.relaxed - (gap.exact - 3.0 * gap.std_error);
        worst_margin = std::min(worst_margin, margin);
        if (margin < 0.0) ok = false;
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "sampled penalty >= exact penalty - 3se on 5 MDPs at 100k samples "
                  "(worst margin %.3g, %.1fs, budget 60s)",
                  worst_margin, elapsed);
    record(8, ok && elapsed < 60.0, buf);
}

// Criterion 9: desk-scale CartPole campaign, 5 seeds x 50k steps per loss.
void run_cartpole_campaign() {
    harness::ExperimentConfig config =
        harness::default_config(harness::ExperimentKind::CartpoleModelFree, false);
    config.out_dir = "acceptance_out/cartpole";
    config.threads = 0;  // wall-clock budget; determinism is covered separately

    const auto t0 = std::chrono::steady_clock::now();
    const harness::MetricsSummary summary = harness::run_cartpole_experiment(config);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::map<std::uint64_t, double> dqn_holding;
    std::map<std::uint64_t, double> rpi_holding;
    int rpi_solved = 0;
    for (const auto& row : summary.rows) {
        if (row.algo == "dqn") dqn_holding[row.seed] = row.holding_pct;
        if (row.algo == "rpi_dqn") {
            rpi_holding[row.seed] = row.holding_pct;
            if (row.timesteps_to_solve >= 0) ++rpi_solved;
        }
    }
    bool holding_ok = rpi_holding.size() == config.seeds.size();
    double min_rpi_holding = 100.0;
    for (const auto& [seed, holding] : rpi_holding) {
        min_rpi_holding = std::min(min_rpi_holding, holding);
        if (holding < 90.0) holding_ok = false;
        const auto other = dqn_holding.find(seed);
        if (other == dqn_holding.end() || holding <= other->second) holding_ok = false;
    }

    // (c) caps: discounted returns and bound-flagged estimates below the
    // maximum attainable discounted return plus slack.
    const double cap = 99.34 + config.cartpole.lower_bound_slack;
    bool cap_ok = true;
    const harness::CsvTable table = harness::parse_csv(
        harness::read_text_file(config.out_dir + "/cartpole_checkpoints.csv"));
    const int disc_col = table.column("mean_discounted_return");
    const int est_col = table.column("mean_critic_start_estimate");
    const int ok_col = table.column("lower_bound_ok");
    for (const auto& row : table.rows) {
        const double disc = std::stod(row[static_cast<std::size_t>(disc_col)]);
        if (disc > cap) cap_ok = false;
        if (row[static_cast<std::size_t>(ok_col)] == "1" &&
            std::stod(row[static_cast<std::size_t>(est_col)]) > cap)
            cap_ok = false;
    }

    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "cartpole 5x50k: rpi_dqn holding >= 90%% per seed and above dqn (min "
                  "%.1f%%) [%s]; solved in %d/5 seeds (need >= 3); caps respected [%s]; "
                  "%.0fs (budget 7200s)",
                  min_rpi_holding, holding_ok ? "yes" : "no", rpi_solved,
                  cap_ok ? "yes" : "no", elapsed);
    record(9, holding_ok && rpi_solved >= 3 && cap_ok && elapsed < 7200.0, buf);
}

// Criterion 10: byte-identical reruns of both experiment kinds.
void run_determinism_check() {
    bool ok = true;

    harness::ExperimentConfig inv =
        harness::default_config(harness::ExperimentKind::InventoryModelBased, false);
    inv.seeds = {0, 1};
    inv.inventory.iterations = 6;
    inv.inventory.feature_dim = 50;
    inv.threads = 2;
    inv.out_dir = "acceptance_out/det_inv_a";
    harness::run_inventory_experiment(inv);
    const std::string inv_a =
        harness::read_text_file(inv.out_dir + "/inventory_iterations.csv");
    inv.out_dir = "acceptance_out/det_inv_b";
    inv.threads = 1;
    harness::run_inventory_experiment(inv);
    if (harness::read_text_file(inv.out_dir + "/inventory_iterations.csv") != inv_a) ok = false;

    harness::ExperimentConfig cart =
        harness::default_config(harness::ExperimentKind::CartpoleModelFree, false);
    cart.seeds = {0};
    cart.cartpole.dqn.total_steps = 3000;
    cart.cartpole.dqn.eval_interval = 1000;
    cart.cartpole.dqn.n_eval = 5;
    cart.threads = 2;
    cart.out_dir = "acceptance_out/det_cart_a";
    harness::run_cartpole_experiment(cart);
    const std::string cart_a =
        harness::read_text_file(cart.out_dir + "/cartpole_checkpoints.csv");
    cart.out_dir = "acceptance_out/det_cart_b";
    cart.threads = 1;
    harness::run_cartpole_experiment(cart);
    if (harness::read_text_file(cart.out_dir + "/cartpole_checkpoints.csv") != cart_a)
        ok = false;

    record(10, ok, "repeated experiments produce byte-identical CSVs across thread counts");
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
    if (wanted.empty())
        for (int id = 1; id <= 10; ++id) wanted.insert(id);

    if (wanted.count(1) || wanted.count(3) || wanted.count(4) || wanted.count(5))
        run_model_based_campaign(wanted);
    if (wanted.count(2)) run_tabular_equivalence();
    if (wanted.count(6)) run_lp_oracle();
    if (wanted.count(7)) run_gradient_check();
    if (wanted.count(8)) run_jensen_check();
    if (wanted.count(9)) run_cartpole_campaign();
    if (wanted.count(10)) run_determinism_check();

    int failures = 0;
    for (const Criterion& c : g_results)
        if (!c.passed) ++failures;
    std::printf("%d criteria run, %d failed\n", static_cast<int>(g_results.size()), failures);
    return failures == 0 ? 0 : 1;
}
