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

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rpi/harness.hpp"
#include "rpi/toml.hpp"

namespace rpi::harness {

namespace {

std::vector<std::uint64_t> seed_range(std::uint64_t n) {
    std::vector<std::uint64_t> seeds(n);
    for (std::uint64_t i = 0; i < n; ++i) seeds[i] = i;
    return seeds;
}

}  // namespace

ExperimentConfig default_config(ExperimentKind kind, bool paper_scale) {
    ExperimentConfig config;
    config.kind = kind;
    config.paper_scale = paper_scale;
    config.inventory.params.demand = uniform_demand(config.inventory.params.capacity);
    switch (kind) {
        case ExperimentKind::InventoryModelBased:
            config.seeds = seed_range(paper_scale ? 500 : 20);
            break;
        case ExperimentKind::CartpoleModelFree:
            config.seeds = seed_range(paper_scale ? 25 : 5);
            break;
        case ExperimentKind::InvariantSuite:
            config.seeds = {0};
            break;
    }
    return config;
}

ExperimentConfig load_config(const std::string& path, ExperimentKind kind, bool paper_scale) {
    ExperimentConfig config = default_config(kind, paper_scale);
    toml::Document doc;
    try {
        doc = toml::Document::parse_file(path);
    } catch (const toml::ParseError& e) {
        throw ConfigError(e.what());
    }

    try {
        if (doc.has("", "seeds")) {
            config.seeds.clear();
            for (double s : doc.get_double_array("", "seeds"))
                config.seeds.push_back(static_cast<std::uint64_t>(s));
        }
        config.out_dir = doc.get_string("", "out_dir", config.out_dir);
        config.threads = static_cast<int>(doc.get_integer("", "threads", config.threads));

        InventorySettings& inv = config.inventory;
        inv.params.capacity =
            static_cast<int>(doc.get_integer("inventory", "capacity", inv.params.capacity));
        inv.params.unit_cost = doc.get_double("inventory", "unit_cost", inv.params.unit_cost);
        inv.params.holding_cost =
            doc.get_double("inventory", "holding_cost", inv.params.holding_cost);
        inv.params.price = doc.get_double("inventory", "price", inv.params.price);
        inv.params.discount = doc.get_double("inventory", "discount", inv.params.discount);
        inv.params.demand = uniform_demand(inv.params.capacity);
        if (doc.has("inventory", "demand")) {
            inv.params.demand.clear();
            for (double p : doc.get_double_array("inventory", "demand"))
                inv.params.demand.push_back(p);
        }
        inv.iterations = static_cast<int>(doc.get_integer("inventory", "iterations", inv.iterations));
        inv.feature_dim = static_cast<std::size_t>(
            doc.get_integer("inventory", "feature_dim", static_cast<long long>(inv.feature_dim)));
        inv.feature_low = doc.get_double("inventory", "feature_low", inv.feature_low);
        inv.feature_high = doc.get_double("inventory", "feature_high", inv.feature_high);
        inv.run_rpi = doc.get_bool("rpi", "enabled", inv.run_rpi);
        inv.run_ampiq = doc.get_bool("ampiq", "enabled", inv.run_ampiq);
        inv.run_trpo = doc.get_bool("trpo", "enabled", inv.run_trpo);
        inv.ampiq_m = static_cast<int>(doc.get_integer("ampiq", "m", inv.ampiq_m));
        inv.trpo_delta = doc.get_double("trpo", "delta", inv.trpo_delta);

        CartpoleSettings& cp = config.cartpole;
        DqnConfig& dqn = cp.dqn;
        dqn.learning_rate = doc.get_double("dqn", "learning_rate", dqn.learning_rate);
        dqn.batch_size = static_cast<std::size_t>(
            doc.get_integer("dqn", "batch_size", static_cast<long long>(dqn.batch_size)));
        dqn.buffer_capacity = static_cast<std::size_t>(doc.get_integer(
            "dqn", "buffer_capacity", static_cast<long long>(dqn.buffer_capacity)));
        dqn.target_update_interval = static_cast<int>(
            doc.get_integer("dqn", "target_update_interval", dqn.target_update_interval));
        dqn.eps_start = doc.get_double("dqn", "eps_start", dqn.eps_start);
        dqn.eps_end = doc.get_double("dqn", "eps_end", dqn.eps_end);
        dqn.eps_fraction = doc.get_double("dqn", "eps_fraction", dqn.eps_fraction);
        dqn.total_steps = doc.get_integer("dqn", "total_steps", dqn.total_steps);
        dqn.learn_start = doc.get_integer("dqn", "learn_start", dqn.learn_start);
        dqn.train_frequency =
            static_cast<int>(doc.get_integer("dqn", "train_frequency", dqn.train_frequency));
        dqn.gamma = doc.get_double("dqn", "gamma", dqn.gamma);
        dqn.eval_interval = doc.get_integer("dqn", "eval_interval", dqn.eval_interval);
        dqn.n_eval = static_cast<int>(doc.get_integer("dqn", "n_eval", dqn.n_eval));
        dqn.rpi.c = doc.get_double("rpi_dqn", "c", dqn.rpi.c);
        dqn.rpi.lambda1 = doc.get_double("rpi_dqn", "lambda1", dqn.rpi.lambda1);
        dqn.rpi.lambda2 = doc.get_double("rpi_dqn", "lambda2", dqn.rpi.lambda2);
        dqn.rpi.q_min = doc.get_double("rpi_dqn", "q_min", dqn.rpi.q_min);
        cp.run_dqn = doc.get_bool("dqn", "enabled", cp.run_dqn);
        cp.run_rpi_dqn = doc.get_bool("rpi_dqn", "enabled", cp.run_rpi_dqn);
        cp.solve_threshold = doc.get_double("cartpole", "solve_threshold", cp.solve_threshold);
        cp.lower_bound_slack =
            doc.get_double("cartpole", "lower_bound_slack", cp.lower_bound_slack);
    } catch (const toml::ParseError& e) {
        throw ConfigError(e.what());
    }

    if (config.seeds.empty()) throw ConfigError("config: seed list must be non-empty");
    return config;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream row(line);
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (first) {
            table.header = std::move(cells);
            first = false;
        } else {
            table.rows.push_back(std::move(cells));
        }
    }
    return table;
}

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

double lower_bound_holding(const std::vector<EvalCheckpoint>& trace, double tau) {
    if (trace.empty()) throw std::invalid_argument("lower_bound_holding: empty trace");
    std::size_t held = 0;
    for (const EvalCheckpoint& cp : trace)
        if (cp.mean_critic_start_estimate <= cp.mean_discounted_return + tau) ++held;
    return 100.0 * static_cast<double>(held) / static_cast<double>(trace.size());
}

long timesteps_to_solve(const std::vector<EvalCheckpoint>& trace, double threshold) {
    for (const EvalCheckpoint& cp : trace)
        if (cp.mean_undiscounted_return >= threshold) return cp.env_step;
    return -1;
}

std::vector<AlgoAggregate> aggregate_metrics(const std::vector<SeedMetrics>& rows,
                                             ExperimentKind kind) {
    std::vector<AlgoAggregate> out;
    auto slot = [&out](const std::string& algo) -> AlgoAggregate& {
        for (AlgoAggregate& agg : out)
            if (agg.algo == algo) return agg;
        out.push_back(AlgoAggregate{});
        out.back().algo = algo;
        return out.back();
    };

    // Two passes: means, then sample standard deviations.
    for (const SeedMetrics& row : rows) {
        AlgoAggregate& agg = slot(row.algo);
        const bool included = (kind == ExperimentKind::CartpoleModelFree)
                                  ? row.timesteps_to_solve >= 0
                                  : row.feasible;
        if (!included) {
            ++agg.n_excluded;
            if (kind == ExperimentKind::CartpoleModelFree) {
                agg.holding_mean += row.holding_pct;  // holding counts every seed
            }
            continue;
        }
        ++agg.n_seeds;
        agg.primary_mean += (kind == ExperimentKind::CartpoleModelFree)
                                ? static_cast<double>(row.timesteps_to_solve)
                                : row.terminal_true_value;
        agg.holding_mean += row.holding_pct;
    }
    for (AlgoAggregate& agg : out) {
        const int holding_n = agg.n_seeds + (kind == ExperimentKind::CartpoleModelFree
                                                 ? agg.n_excluded
                                                 : 0);
        if (agg.n_seeds > 0) agg.primary_mean /= agg.n_seeds;
        if (holding_n > 0) agg.holding_mean /= holding_n;
    }
    for (const SeedMetrics& row : rows) {
        AlgoAggregate& agg = slot(row.algo);
        const bool included = (kind == ExperimentKind::CartpoleModelFree)
                                  ? row.timesteps_to_solve >= 0
                                  : row.feasible;
        if (included) {
            const double primary = (kind == ExperimentKind::CartpoleModelFree)
                                       ? static_cast<double>(row.timesteps_to_solve)
                                       : row.terminal_true_value;
            agg.primary_std += (primary - agg.primary_mean) * (primary - agg.primary_mean);
        }
        if (included || kind == ExperimentKind::CartpoleModelFree)
            agg.holding_std += (row.holding_pct - agg.holding_mean) * (row.holding_pct - agg.holding_mean);
    }
    for (AlgoAggregate& agg : out) {
        const int holding_n = agg.n_seeds + (kind == ExperimentKind::CartpoleModelFree
                                                 ? agg.n_excluded
                                                 : 0);
        agg.primary_std = agg.n_seeds > 1 ? std::sqrt(agg.primary_std / (agg.n_seeds - 1)) : 0.0;
        agg.holding_std = holding_n > 1 ? std::sqrt(agg.holding_std / (holding_n - 1)) : 0.0;
    }
    return out;
}

}  // namespace rpi::harness
