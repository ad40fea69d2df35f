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

#ifndef RPI_NN_HPP_
#define RPI_NN_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "rpi/linalg.hpp"

// Fully-connected rectifier network with a linear output layer and exact
// reverse-mode gradients, sized for CartPole-scale critics. The rectifier
// subgradient at exactly 0 is 0, so hinge-style losses differentiate the
// same way in tests and in training.

namespace rpi::nn {

struct Mlp {
    std::vector<std::size_t> widths;  // e.g. {4, 64, 64, 2}
    std::vector<Matrix> weights;      // layer l: widths[l+1] x widths[l]
    std::vector<Vec> biases;          // layer l: widths[l+1]

    std::size_t n_layers() const { return weights.size(); }
    std::size_t input_width() const { return widths.front(); }
    std::size_t output_width() const { return widths.back(); }
};

struct GradientSet {
    std::vector<Matrix> weights;
    std::vector<Vec> biases;
};

GradientSet zero_gradients(const Mlp& net);

/// Uniform init on [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
Mlp init_params(const std::vector<std::size_t>& widths, std::uint64_t seed);

Vec forward(const Mlp& net, const Vec& input);

/// Exact gradients of sum_i loss_i where upstream[i] = d loss_i / d output_i.
/// Callers fold any 1/batch factor into upstream.
GradientSet backward(const Mlp& net, const std::vector<Vec>& inputs,
                     const std::vector<Vec>& upstream);

struct AdamState {
    double learning_rate = 2.5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step = 0;
    GradientSet m;  // first moments
    GradientSet v;  // second moments
};

AdamState make_adam_state(const Mlp& net, double learning_rate);

/// Bias-corrected adaptive-moment update in place.
void adam_step(Mlp& net, const GradientSet& grads, AdamState& state);

/// Checkpoint: u64 width count, u64 widths, then every parameter as a
/// little-endian f64 (weights row-major then biases, layer by layer).
void save_checkpoint(const Mlp& net, const std::string& path);
Mlp load_checkpoint(const std::string& path);

}  // namespace rpi::nn

#endif  // RPI_NN_HPP_
