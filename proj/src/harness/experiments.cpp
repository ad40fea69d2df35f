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

#include <atomic>
#include <exception>
#include <filesystem>
#include <iostream>
#include <thread>

#include <json.hpp>

#include "rpi/harness.hpp"
#include "rpi/rng.hpp"

namespace rpi::harness {

namespace {

using nlohmann::json;

// Seeds fan out to workers; each job owns its slot, the caller is the only
// writer of output files. Job errors are rethrown in job order.
void parallel_for(int n_jobs, int threads, const std::function<void(int)>& fn) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, n_jobs));
    if (threads == 1) {
        for (int i = 0; i < n_jobs; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_jobs));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n_jobs) return;
                try {
                    fn(i);
                } catch (...) {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        });
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
}

struct IterationRow {
    std::string algo;
    int k = 0;
    double est_mean = 0.0;
    double true_mean = 0.0;
    double residual = 0.0;
    double mono_slack = 0.0;
    double lb_slack = 0.0;
};

std::vector<IterationRow> rows_from_trace(const RunTrace& trace, std::size_t n_actions) {
    std::vector<IterationRow> rows;
    rows.reserve(trace.records.size());
    for (std::size_t k = 0; k < trace.records.size(); ++k) {
        const IterationRecord& rec = trace.records[k];
        IterationRow row;
        row.algo = trace.metadata.algorithm;
        row.k = rec.index;
        row.est_mean = policy_mean(rec.estimate, rec.policy, n_actions);
        row.true_mean = policy_mean(rec.true_q, rec.policy, n_actions);
        row.residual = rec.bellman_residual;
        if (k == 0) {
            row.mono_slack = 0.0;
        } else {
            double slack = std::numeric_limits<double>::infinity();
            const QTable& prev = trace.records[k - 1].estimate;
            for (std::size_t i = 0; i < rec.estimate.size(); ++i)
                slack = std::min(slack, rec.estimate[i] - prev[i]);
            row.mono_slack = slack;
        }
        double lb = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < rec.estimate.size(); ++i)
            lb = std::min(lb, rec.true_q[i] - rec.estimate[i]);
        row.lb_slack = lb;
        rows.push_back(row);
    }
    return rows;
}

SeedMetrics metrics_from_rows(const std::vector<IterationRow>& rows, std::uint64_t seed) {
    SeedMetrics m;
    m.algo = rows.front().algo;
    m.seed = seed;
    m.terminal_true_value = rows.back().true_mean;
    m.terminal_estimated_value = rows.back().est_mean;
    m.min_monotonicity_slack = std::numeric_limits<double>::infinity();
    m.min_lowerbound_slack = std::numeric_limits<double>::infinity();
    std::size_t held = 0;
    for (const IterationRow& row : rows) {
        m.min_monotonicity_slack = std::min(m.min_monotonicity_slack, row.mono_slack);
        m.min_lowerbound_slack = std::min(m.min_lowerbound_slack, row.lb_slack);
        if (row.lb_slack >= -1e-6) ++held;
    }
    m.holding_pct = 100.0 * static_cast<double>(held) / static_cast<double>(rows.size());
    return m;
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir);
}

}  // namespace

MetricsSummary run_inventory_experiment(const ExperimentConfig& config) {
    const InventorySettings& inv = config.inventory;
    ensure_out_dir(config.out_dir);

    const TabularMdp mdp = build_inventory_mdp(inv.params);
    const std::size_t n_pairs = mdp.n_pairs();
    const QTable weights(n_pairs, 1.0);

    struct SeedResult {
        std::vector<IterationRow> rows;  // all algorithms, algorithm-major
        std::vector<SeedMetrics> metrics;
        std::uint64_t feature_seed = 0;
        bool rpi_feasible = true;
    };
    std::vector<SeedResult> results(config.seeds.size());

    parallel_for(static_cast<int>(config.seeds.size()), config.threads, [&](int i) {
        const std::uint64_t seed = config.seeds[static_cast<std::size_t>(i)];
        SeedResult& result = results[static_cast<std::size_t>(i)];
        result.feature_seed = Rng(seed).substream(7).next_u64();
        const FeatureMap phi =
            sample_features(mdp.n_states(), mdp.n_actions(), inv.feature_dim, inv.feature_low,
                            inv.feature_high, result.feature_seed);

        auto append = [&](const RunTrace& trace) {
            std::vector<IterationRow> rows = rows_from_trace(trace, mdp.n_actions());
            result.metrics.push_back(metrics_from_rows(rows, seed));
            result.rows.insert(result.rows.end(), rows.begin(), rows.end());
        };

        if (inv.run_rpi) {
            try {
                append(rpi_run(mdp, phi, inv.iterations, weights, seed));
            } catch (const NoFeasibleStartError&) {
                result.rpi_feasible = false;
                SeedMetrics m;
                m.algo = "rpi";
                m.seed = seed;
                m.feasible = false;
                result.metrics.push_back(m);
            }
        }
        if (inv.run_ampiq)
            append(ampiq_run(mdp, phi, ParamVector(inv.feature_dim, 0.0), inv.ampiq_m,
                             inv.iterations));
        if (inv.run_trpo)
            append(trpo_run(mdp, phi, ParamVector(inv.feature_dim, 0.0), inv.trpo_delta,
                            inv.iterations));
    });

    MetricsSummary summary;
    std::string iter_csv =
        "seed,algo,k,mean_estimated_value,mean_true_value,bellman_residual,"
        "min_monotonicity_slack,min_lowerbound_slack\n";
    std::string summary_csv =
        "algo,seed,feasible,terminal_true_value,terminal_estimated_value,holding_pct,"
        "min_monotonicity_slack,min_lowerbound_slack\n";
    json feature_seeds = json::object();

    for (std::size_t i = 0; i < config.seeds.size(); ++i) {
        const SeedResult& result = results[i];
        const std::uint64_t seed = config.seeds[i];
        if (!result.rpi_feasible)
            std::cerr << "warning: seed " << seed
                      << " admits no feasible start for rpi; excluded from aggregates\n";
        feature_seeds[std::to_string(seed)] = result.feature_seed;
        for (const IterationRow& row : result.rows) {
            iter_csv += std::to_string(seed) + "," + row.algo + "," + std::to_string(row.k) + "," +
                        format_double(row.est_mean) + "," + format_double(row.true_mean) + "," +
                        format_double(row.residual) + "," + format_double(row.mono_slack) + "," +
                        format_double(row.lb_slack) + "\n";
        }
        for (const SeedMetrics& m : result.metrics) {
            summary.rows.push_back(m);
            summary_csv += m.algo + "," + std::to_string(seed) + "," +
                           (m.feasible ? "1" : "0") + "," + format_double(m.terminal_true_value) +
                           "," + format_double(m.terminal_estimated_value) + "," +
                           format_double(m.holding_pct) + "," +
                           format_double(m.min_monotonicity_slack) + "," +
                           format_double(m.min_lowerbound_slack) + "\n";
        }
    }
    summary.aggregates = aggregate_metrics(summary.rows, ExperimentKind::InventoryModelBased);

    write_text_file(config.out_dir + "/inventory_iterations.csv", iter_csv);
    write_text_file(config.out_dir + "/inventory_summary.csv", summary_csv);

    json meta;
    meta["experiment"] = "inventory-model-based";
    meta["capacity"] = inv.params.capacity;
    meta["unit_cost"] = inv.params.unit_cost;
    meta["holding_cost"] = inv.params.holding_cost;
    meta["price"] = inv.params.price;
    meta["discount"] = inv.params.discount;
    meta["demand"] = "uniform over 0..capacity";
    meta["iterations"] = inv.iterations;
    meta["feature_dim"] = inv.feature_dim;
    meta["feature_interval"] = {inv.feature_low, inv.feature_high};
    meta["feature_seeds"] = feature_seeds;
    meta["weights"] = "uniform (all-ones l1 weight vector)";
    meta["ampiq_m"] = inv.ampiq_m;
    meta["trpo_delta"] = inv.trpo_delta;
    meta["seeds"] = config.seeds;
    write_text_file(config.out_dir + "/metadata.json", meta.dump(2) + "\n");
    return summary;
}

MetricsSummary run_cartpole_experiment(const ExperimentConfig& config) {
    const CartpoleSettings& cp = config.cartpole;
    ensure_out_dir(config.out_dir);

    std::vector<std::string> algos;
    if (cp.run_dqn) algos.push_back("dqn");
    if (cp.run_rpi_dqn) algos.push_back("rpi_dqn");
    if (algos.empty()) throw ConfigError("cartpole: no algorithms enabled");

    struct Job {
        std::uint64_t seed;
        std::string algo;
        std::vector<EvalCheckpoint> checkpoints;
    };
    std::vector<Job> jobs;
    for (const std::uint64_t seed : config.seeds)
        for (const std::string& algo : algos) jobs.push_back(Job{seed, algo, {}});

    parallel_for(static_cast<int>(jobs.size()), config.threads, [&](int i) {
        Job& job = jobs[static_cast<std::size_t>(i)];
        DqnConfig dqn = cp.dqn;
        dqn.seed = job.seed;
        dqn.loss = (job.algo == "dqn") ? LossKind::Msbe : LossKind::Rpi;
        job.checkpoints = dqn_train(dqn).checkpoints;
    });

    MetricsSummary summary;
    std::string cp_csv =
        "seed,algo,env_step,mean_discounted_return,mean_undiscounted_return,"
        "mean_critic_start_estimate,lower_bound_ok\n";
    std::string summary_csv = "algo,seed,timesteps_to_solve,solved,holding_pct\n";

    for (const Job& job : jobs) {
        for (const EvalCheckpoint& c : job.checkpoints) {
            const bool ok =
                c.mean_critic_start_estimate <= c.mean_discounted_return + cp.lower_bound_slack;
            cp_csv += std::to_string(job.seed) + "," + job.algo + "," +
                      std::to_string(c.env_step) + "," + format_double(c.mean_discounted_return) +
                      "," + format_double(c.mean_undiscounted_return) + "," +
                      format_double(c.mean_critic_start_estimate) + "," + (ok ? "1" : "0") + "\n";
        }
        SeedMetrics m;
        m.algo = job.algo;
        m.seed = job.seed;
        m.timesteps_to_solve = timesteps_to_solve(job.checkpoints, cp.solve_threshold);
        m.holding_pct = lower_bound_holding(job.checkpoints, cp.lower_bound_slack);
        summary.rows.push_back(m);
        summary_csv += m.algo + "," + std::to_string(job.seed) + "," +
                       std::to_string(m.timesteps_to_solve) + "," +
                       (m.timesteps_to_solve >= 0 ? "1" : "0") + "," +
                       format_double(m.holding_pct) + "\n";
    }
    summary.aggregates = aggregate_metrics(summary.rows, ExperimentKind::CartpoleModelFree);

    write_text_file(config.out_dir + "/cartpole_checkpoints.csv", cp_csv);
    write_text_file(config.out_dir + "/cartpole_summary.csv", summary_csv);

    json meta;
    meta["experiment"] = "cartpole-model-free";
    meta["seeds"] = config.seeds;
    meta["solve_threshold"] = cp.solve_threshold;
    meta["solve_threshold_note"] =
        "first evaluation checkpoint whose mean undiscounted return reaches the threshold; "
        "475 is the conventional solved bar for this task";
    meta["lower_bound_slack"] = cp.lower_bound_slack;
    meta["gamma"] = cp.dqn.gamma;
    meta["learning_rate"] = cp.dqn.learning_rate;
    meta["batch_size"] = cp.dqn.batch_size;
    meta["buffer_capacity"] = cp.dqn.buffer_capacity;
    meta["target_update_interval"] = cp.dqn.target_update_interval;
    meta["eps_start"] = cp.dqn.eps_start;
    meta["eps_end"] = cp.dqn.eps_end;
    meta["eps_fraction"] = cp.dqn.eps_fraction;
    meta["total_steps"] = cp.dqn.total_steps;
    meta["learn_start"] = cp.dqn.learn_start;
    meta["train_frequency"] = cp.dqn.train_frequency;
    meta["eval_interval"] = cp.dqn.eval_interval;
    meta["n_eval"] = cp.dqn.n_eval;
    meta["hidden_widths"] = cp.dqn.hidden_widths;
    meta["rpi_loss"] = {{"c", cp.dqn.rpi.c},
                        {"lambda1", cp.dqn.rpi.lambda1},
                        {"lambda2", cp.dqn.rpi.lambda2},
                        {"q_min", cp.dqn.rpi.q_min}};
    write_text_file(config.out_dir + "/metadata.json", meta.dump(2) + "\n");
    return summary;
}

}  // namespace rpi::harness
