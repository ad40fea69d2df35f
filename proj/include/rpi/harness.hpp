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

#ifndef RPI_HARNESS_HPP_
#define RPI_HARNESS_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rpi/dqn.hpp"
#include "rpi/inventory.hpp"
#include "rpi/model_based.hpp"

namespace rpi::harness {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class ExperimentKind { InventoryModelBased, CartpoleModelFree, InvariantSuite };

struct InventorySettings {
    InventoryParams params;  // demand filled with uniform_demand by default
    int iterations = 50;
    std::size_t feature_dim = 50;
    double feature_low = 1.0;
    double feature_high = 5.0;
    int ampiq_m = 1;       // 1 reduces AMPI-Q to Fitted Q Iteration
    double trpo_delta = 2.0;
    bool run_rpi = true;
    bool run_ampiq = true;
    bool run_trpo = true;
};

struct CartpoleSettings {
    DqnConfig dqn;  // loss selector is overridden per algorithm
    bool run_dqn = true;
    bool run_rpi_dqn = true;
    double solve_threshold = 475.0;   // conventional solved bar for this task
    double lower_bound_slack = 0.5;   // tau absorbing Monte-Carlo noise
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::InventoryModelBased;
    std::vector<std::uint64_t> seeds;
    std::string out_dir = "out";
    int threads = 0;  // 0 = hardware concurrency
    bool paper_scale = false;
    InventorySettings inventory;
    CartpoleSettings cartpole;
};

/// Defaults for a kind (desk scale; paper_scale widens the seed list), then
/// TOML overrides, in that order.
ExperimentConfig default_config(ExperimentKind kind, bool paper_scale);
ExperimentConfig load_config(const std::string& path, ExperimentKind kind, bool paper_scale);

struct SeedMetrics {
    std::string algo;
    std::uint64_t seed = 0;
    bool feasible = true;               // inventory: feasible-start flag
    double terminal_true_value = 0.0;   // inventory primary metric
    double terminal_estimated_value = 0.0;
    long timesteps_to_solve = -1;       // cartpole primary metric; -1 unsolved
    double holding_pct = 0.0;           // lower-bound holding percentage
    double min_monotonicity_slack = 0.0;
    double min_lowerbound_slack = 0.0;
};

struct AlgoAggregate {
    std::string algo;
    double primary_mean = 0.0;  // terminal true value or timesteps-to-solve
    double primary_std = 0.0;
    double holding_mean = 0.0;
    double holding_std = 0.0;
    int n_seeds = 0;
    int n_excluded = 0;  // infeasible starts (inventory) / unsolved (cartpole)
};

struct MetricsSummary {
    std::vector<SeedMetrics> rows;
    std::vector<AlgoAggregate> aggregates;
};

/// Aggregates recomputed from per-seed rows; the summary CSV holds the rows,
/// so every statistic stays derivable from files on disk.
std::vector<AlgoAggregate> aggregate_metrics(const std::vector<SeedMetrics>& rows,
                                             ExperimentKind kind);

/// Runs RPI / AMPI-Q / TRPO per seed over freshly sampled features and
/// writes inventory_iterations.csv, inventory_summary.csv, metadata.json.
MetricsSummary run_inventory_experiment(const ExperimentConfig& config);

/// Trains DQN and RPI_DQN per seed and writes cartpole_checkpoints.csv,
/// cartpole_summary.csv, metadata.json.
MetricsSummary run_cartpole_experiment(const ExperimentConfig& config);

/// 100 x fraction of checkpoints whose critic start estimate stays below the
/// Monte-Carlo discounted return plus tau.
double lower_bound_holding(const std::vector<EvalCheckpoint>& trace, double tau = 0.5);

/// First checkpoint env_step with mean undiscounted return >= threshold;
/// -1 when the trace never crosses it.
long timesteps_to_solve(const std::vector<EvalCheckpoint>& trace, double threshold = 475.0);

/// Checkers shared by the invariant suite and its negative controls.
bool check_rpi_trace_monotone_lower_bound(const RunTrace& trace, double tol, std::string* why);
bool check_rpi_trace_feasibility(const TabularMdp& mdp, const RunTrace& trace, double tol,
                                 std::string* why);
bool check_projection_identity(const QTable& f_prev, const QTable& f_next, const QTable& q_mu,
                               const QTable& weights, double rel_tol, std::string* why);

/// Every module's invariant battery on seeded random instances plus the
/// inventory benchmark instance; one report line per invariant. Returns true
/// only when everything passed.
bool run_invariant_suite(std::ostream& report);

/// Mean +/- std band plots (solid true value, dashed estimate) rendered as
/// standalone SVG files next to the CSVs. Throws ConfigError when a CSV is
/// missing, empty, or lacks the expected columns.
std::vector<std::string> emit_plots(const std::string& dir);

// CSV helpers (shortest round-trip float formatting, \n line endings).
std::string format_double(double v);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    int column(const std::string& name) const;  // -1 when absent
};
CsvTable parse_csv(const std::string& text);

}  // namespace rpi::harness

#endif  // RPI_HARNESS_HPP_
