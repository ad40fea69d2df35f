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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rpi/harness.hpp"

// Mean +/- std band plots rendered directly as SVG: solid mean for the true
// value, dashed mean for the estimate, translucent band for +/- one std.

namespace rpi::harness {

namespace {

struct Series {
    std::string label;
    std::string color;
    bool dashed = false;
    std::vector<double> x;
    std::vector<double> mean;
    std::vector<double> stddev;  // may be empty (no band)
};

std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

const char* color_for(const std::string& algo) {
    static const std::map<std::string, const char*> palette = {
        {"rpi", "#1f77b4"},     {"ampiq", "#ff7f0e"}, {"trpo", "#2ca02c"},
        {"rpi_dqn", "#1f77b4"}, {"dqn", "#d62728"},
    };
    const auto it = palette.find(algo);
    return it == palette.end() ? "#7f7f7f" : it->second;
}

std::string render_plot(const std::vector<Series>& series, const std::string& title,
                        const std::string& x_label, const std::string& y_label) {
    const double width = 860.0;
    const double height = 520.0;
    const double ml = 80.0;  // margins
    const double mr = 180.0;
    const double mt = 50.0;
    const double mb = 60.0;

    double x_min = std::numeric_limits<double>::infinity();
    double x_max = -x_min;
    double y_min = x_min;
    double y_max = -x_min;
    for (const Series& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double sd = s.stddev.empty() ? 0.0 : s.stddev[i];
            x_min = std::min(x_min, s.x[i]);
            x_max = std::max(x_max, s.x[i]);
            y_min = std::min(y_min, s.mean[i] - sd);
            y_max = std::max(y_max, s.mean[i] + sd);
        }
    if (!(x_max > x_min)) x_max = x_min + 1.0;
    if (!(y_max > y_min)) y_max = y_min + 1.0;
    const double y_pad = 0.05 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;

    const auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * (width - ml - mr); };
    const auto py = [&](double y) {
        return height - mb - (y - y_min) / (y_max - y_min) * (height - mt - mb);
    };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_num(width) +
           "\" height=\"" + svg_num(height) + "\" viewBox=\"0 0 " + svg_num(width) + " " +
           svg_num(height) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + svg_num(width / 2) + "\" y=\"28\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"18\">" + title + "</text>\n";

    // Axes with five ticks per side.
    out += "<line x1=\"" + svg_num(ml) + "\" y1=\"" + svg_num(height - mb) + "\" x2=\"" +
           svg_num(width - mr) + "\" y2=\"" + svg_num(height - mb) +
           "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out += "<line x1=\"" + svg_num(ml) + "\" y1=\"" + svg_num(mt) + "\" x2=\"" + svg_num(ml) +
           "\" y2=\"" + svg_num(height - mb) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double fx = x_min + (x_max - x_min) * t / 4.0;
        const double fy = y_min + (y_max - y_min) * t / 4.0;
        out += "<line x1=\"" + svg_num(px(fx)) + "\" y1=\"" + svg_num(height - mb) + "\" x2=\"" +
               svg_num(px(fx)) + "\" y2=\"" + svg_num(height - mb + 5) +
               "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + svg_num(px(fx)) + "\" y=\"" + svg_num(height - mb + 20) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
               format_double(std::round(fx * 100.0) / 100.0) + "</text>\n";
        out += "<line x1=\"" + svg_num(ml - 5) + "\" y1=\"" + svg_num(py(fy)) + "\" x2=\"" +
               svg_num(ml) + "\" y2=\"" + svg_num(py(fy)) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + svg_num(ml - 9) + "\" y=\"" + svg_num(py(fy) + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" +
               format_double(std::round(fy * 100.0) / 100.0) + "</text>\n";
    }
    out += "<text x=\"" + svg_num((ml + width - mr) / 2) + "\" y=\"" + svg_num(height - 15) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" + x_label +
           "</text>\n";
    out += "<text x=\"20\" y=\"" + svg_num((mt + height - mb) / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
           "transform=\"rotate(-90 20 " + svg_num((mt + height - mb) / 2) + ")\">" + y_label +
           "</text>\n";

    // Bands first so lines stay on top.
    for (const Series& s : series) {
        if (s.stddev.empty()) continue;
        std::string points;
        for (std::size_t i = 0; i < s.x.size(); ++i)
            points += svg_num(px(s.x[i])) + "," + svg_num(py(s.mean[i] + s.stddev[i])) + " ";
        for (std::size_t i = s.x.size(); i-- > 0;)
            points += svg_num(px(s.x[i])) + "," + svg_num(py(s.mean[i] - s.stddev[i])) + " ";
        out += "<polygon points=\"" + points + "\" fill=\"" + s.color +
               "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
    }
    for (const Series& s : series) {
        std::string points;
        for (std::size_t i = 0; i < s.x.size(); ++i)
            points += svg_num(px(s.x[i])) + "," + svg_num(py(s.mean[i])) + " ";
        out += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" + s.color +
               "\" stroke-width=\"2\"" +
               (s.dashed ? " stroke-dasharray=\"7,4\"" : "") + "/>\n";
    }

    double legend_y = mt + 10.0;
    for (const Series& s : series) {
        const double lx = width - mr + 15.0;
        out += "<line x1=\"" + svg_num(lx) + "\" y1=\"" + svg_num(legend_y) + "\" x2=\"" +
               svg_num(lx + 30.0) + "\" y2=\"" + svg_num(legend_y) + "\" stroke=\"" + s.color +
               "\" stroke-width=\"2\"" + (s.dashed ? " stroke-dasharray=\"7,4\"" : "") + "/>\n";
        out += "<text x=\"" + svg_num(lx + 38.0) + "\" y=\"" + svg_num(legend_y + 4.0) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + s.label + "</text>\n";
        legend_y += 20.0;
    }
    out += "</svg>\n";
    return out;
}

struct GroupedColumn {
    std::vector<double> xs;  // sorted unique x values
    // per algo: x -> samples
    std::map<std::string, std::map<double, std::vector<double>>> samples;
};

GroupedColumn group_column(const CsvTable& table, const std::string& x_name,
                           const std::string& y_name) {
    const int algo_col = table.column("algo");
    const int x_col = table.column(x_name);
    const int y_col = table.column(y_name);
    if (algo_col < 0 || x_col < 0 || y_col < 0)
        throw ConfigError("plot: CSV lacks column algo/" + x_name + "/" + y_name);
    GroupedColumn g;
    std::map<double, bool> seen;
    for (const auto& cells : table.rows) {
        const double x = std::stod(cells[static_cast<std::size_t>(x_col)]);
        const double y = std::stod(cells[static_cast<std::size_t>(y_col)]);
        g.samples[cells[static_cast<std::size_t>(algo_col)]][x].push_back(y);
        seen[x] = true;
    }
    for (const auto& [x, _] : seen) g.xs.push_back(x);
    return g;
}

Series to_series(const GroupedColumn& g, const std::string& algo, const std::string& label,
                 bool dashed) {
    Series s;
    s.label = label;
    s.color = color_for(algo);
    s.dashed = dashed;
    const auto it = g.samples.find(algo);
    if (it == g.samples.end()) return s;
    for (const double x : g.xs) {
        const auto ys = it->second.find(x);
        if (ys == it->second.end()) continue;
        double mean = 0.0;
        for (double y : ys->second) mean += y;
        mean /= static_cast<double>(ys->second.size());
        double var = 0.0;
        for (double y : ys->second) var += (y - mean) * (y - mean);
        const double sd = ys->second.size() > 1
                              ? std::sqrt(var / static_cast<double>(ys->second.size() - 1))
                              : 0.0;
        s.x.push_back(x);
        s.mean.push_back(mean);
        s.stddev.push_back(sd);
    }
    return s;
}

}  // namespace

std::vector<std::string> emit_plots(const std::string& dir) {
    std::vector<std::string> written;

    const std::string inventory_path = dir + "/inventory_iterations.csv";
    const std::string cartpole_path = dir + "/cartpole_checkpoints.csv";
    const bool have_inventory = std::filesystem::exists(inventory_path);
    const bool have_cartpole = std::filesystem::exists(cartpole_path);
    if (!have_inventory && !have_cartpole)
        throw ConfigError("plot: no inventory_iterations.csv or cartpole_checkpoints.csv in " +
                          dir);

    if (have_inventory) {
        const CsvTable table = parse_csv(read_text_file(inventory_path));
        if (table.rows.empty()) throw ConfigError("plot: " + inventory_path + " has no data rows");
        const GroupedColumn true_values = group_column(table, "k", "mean_true_value");
        const GroupedColumn estimates = group_column(table, "k", "mean_estimated_value");
        std::vector<Series> series;
        for (const auto& [algo, _] : true_values.samples) {
            series.push_back(to_series(true_values, algo, algo + " true", false));
            series.push_back(to_series(estimates, algo, algo + " estimate", true));
        }
        const std::string path = dir + "/inventory_values.svg";
        write_text_file(path, render_plot(series, "Inventory control: value vs iteration",
                                          "iteration", "mean value (uniform start)"));
        written.push_back(path);
    }

    if (have_cartpole) {
        const CsvTable table = parse_csv(read_text_file(cartpole_path));
        if (table.rows.empty()) throw ConfigError("plot: " + cartpole_path + " has no data rows");
        const GroupedColumn returns = group_column(table, "env_step", "mean_undiscounted_return");
        std::vector<Series> series;
        for (const auto& [algo, _] : returns.samples)
            series.push_back(to_series(returns, algo, algo, false));
        const std::string returns_path = dir + "/cartpole_returns.svg";
        write_text_file(returns_path, render_plot(series, "CartPole: evaluation return",
                                                  "environment step", "mean undiscounted return"));
        written.push_back(returns_path);

        const GroupedColumn disc = group_column(table, "env_step", "mean_discounted_return");
        const GroupedColumn est = group_column(table, "env_step", "mean_critic_start_estimate");
        std::vector<Series> bound_series;
        for (const auto& [algo, _] : disc.samples) {
            bound_series.push_back(to_series(disc, algo, algo + " true", false));
            bound_series.push_back(to_series(est, algo, algo + " estimate", true));
        }
        const std::string bounds_path = dir + "/cartpole_bounds.svg";
        write_text_file(bounds_path,
                        render_plot(bound_series, "CartPole: critic estimate vs Monte-Carlo value",
                                    "environment step", "discounted return"));
        written.push_back(bounds_path);
    }
    return written;
}

}  // namespace rpi::harness
