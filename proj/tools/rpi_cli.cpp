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

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rpi/harness.hpp"
#include "rpi/kernels.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvariantFailure = 1;
constexpr int kExitConfigError = 2;

struct CommonFlags {
    std::string config_path;
    std::string seeds;
    std::string out_dir;
    bool paper_scale = false;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "TOML config file");
    cmd->add_option("--seeds", flags.seeds, "comma-separated seed list, e.g. 0,1,2");
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_flag("--paper-scale", flags.paper_scale, "paper-scale seed counts (500 / 25)");
    cmd->add_option("--threads", flags.threads, "worker threads (0 = hardware)");
}

rpi::harness::ExperimentConfig build_config(const CommonFlags& flags,
                                            rpi::harness::ExperimentKind kind) {
    using rpi::harness::ConfigError;
    rpi::harness::ExperimentConfig config =
        flags.config_path.empty()
            ? rpi::harness::default_config(kind, flags.paper_scale)
            : rpi::harness::load_config(flags.config_path, kind, flags.paper_scale);
    if (!flags.seeds.empty()) {
        config.seeds.clear();
        std::string item;
        std::istringstream in(flags.seeds);
        while (std::getline(in, item, ',')) {
            if (item.empty()) continue;
            try {
                config.seeds.push_back(std::stoull(item));
            } catch (const std::exception&) {
                throw ConfigError("bad seed '" + item + "'");
            }
        }
        if (config.seeds.empty()) throw ConfigError("--seeds produced an empty list");
    }
    if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
    if (flags.threads > 0) config.threads = flags.threads;
    return config;
}

void print_summary(const rpi::harness::MetricsSummary& summary, const std::string& primary_name) {
    std::printf("%-10s %22s %24s %10s\n", "algo", (primary_name + " (mean+-std)").c_str(),
                "lower-bound holding %", "excluded");
    for (const auto& agg : summary.aggregates) {
        std::printf("%-10s %10.3f +- %-9.3f %12.2f +- %-9.2f %6d\n", agg.algo.c_str(),
                    agg.primary_mean, agg.primary_std, agg.holding_mean, agg.holding_std,
                    agg.n_excluded);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reliable policy iteration benchmarks"};
    app.require_subcommand(1);

    CommonFlags inventory_flags;
    CommonFlags cartpole_flags;
    CommonFlags plot_flags;
    CLI::App* inventory =
        app.add_subcommand("inventory", "model-based RPI / AMPI-Q / TRPO on inventory control");
    add_common(inventory, inventory_flags);
    CLI::App* cartpole = app.add_subcommand("cartpole", "model-free DQN vs RPI_DQN on CartPole");
    add_common(cartpole, cartpole_flags);
    CLI::App* invariants = app.add_subcommand("invariants", "run every invariant battery");
    CLI::App* plot = app.add_subcommand("plot", "render SVG plots from experiment CSVs");
    plot->add_option("--out", plot_flags.out_dir, "directory holding the CSVs")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (inventory->parsed()) {
            const auto config =
                build_config(inventory_flags, rpi::harness::ExperimentKind::InventoryModelBased);
            std::printf("kernels: %s\n", rpi::kernels::active().name);
            const auto summary = rpi::harness::run_inventory_experiment(config);
            print_summary(summary, "terminal value");
            std::printf("outputs in %s\n", config.out_dir.c_str());
        } else if (cartpole->parsed()) {
            const auto config =
                build_config(cartpole_flags, rpi::harness::ExperimentKind::CartpoleModelFree);
            std::printf("kernels: %s\n", rpi::kernels::active().name);
            const auto summary = rpi::harness::run_cartpole_experiment(config);
            print_summary(summary, "steps to solve");
            std::printf("outputs in %s\n", config.out_dir.c_str());
        } else if (invariants->parsed()) {
            const bool ok = rpi::harness::run_invariant_suite(std::cout);
            return ok ? kExitOk : kExitInvariantFailure;
        } else if (plot->parsed()) {
            for (const std::string& path : rpi::harness::emit_plots(plot_flags.out_dir))
                std::printf("wrote %s\n", path.c_str());
        }
    } catch (const rpi::harness::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvariantFailure;
    }
    return kExitOk;
}
