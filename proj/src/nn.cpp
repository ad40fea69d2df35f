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

#include "rpi/nn.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "rpi/rng.hpp"

namespace rpi::nn {

namespace {

void check_shapes(const Mlp& net, const GradientSet& grads) {
    if (grads.weights.size() != net.n_layers() || grads.biases.size() != net.n_layers())
        throw std::invalid_argument("nn: gradient layer count mismatch");
    for (std::size_t l = 0; l < net.n_layers(); ++l)
        if (grads.weights[l].rows() != net.weights[l].rows() ||
            grads.weights[l].cols() != net.weights[l].cols() ||
            grads.biases[l].size() != net.biases[l].size())
            throw std::invalid_argument("nn: gradient shape mismatch");
}

}  // namespace

GradientSet zero_gradients(const Mlp& net) {
    GradientSet g;
    g.weights.reserve(net.n_layers());
    g.biases.reserve(net.n_layers());
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
        g.weights.emplace_back(net.weights[l].rows(), net.weights[l].cols());
        g.biases.emplace_back(net.biases[l].size(), 0.0);
    }
    return g;
}

Mlp init_params(const std::vector<std::size_t>& widths, std::uint64_t seed) {
    if (widths.size() < 2) throw std::invalid_argument("init_params: need at least two widths");
    for (std::size_t w : widths)
        if (w == 0) throw std::invalid_argument("init_params: zero layer width");

    Rng rng(seed);
    Mlp net;
    net.widths = widths;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
        Matrix w(widths[l + 1], widths[l]);
        for (double& v : w.data()) v = rng.uniform(-bound, bound);
        Vec b(widths[l + 1]);
        for (double& v : b) v = rng.uniform(-bound, bound);
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    return net;
}

Vec forward(const Mlp& net, const Vec& input) {
    if (input.size() != net.input_width())
        throw std::invalid_argument("forward: input width mismatch");
    Vec act = input;
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
        Vec next = matvec(net.weights[l], act);
        kernels::axpy(1.0, net.biases[l].data(), next.data(), next.size());
        if (l + 1 < net.n_layers()) kernels::relu(next.data(), next.size());
        act = std::move(next);
    }
    return act;
}

GradientSet backward(const Mlp& net, const std::vector<Vec>& inputs,
                     const std::vector<Vec>& upstream) {
    if (inputs.empty()) throw std::invalid_argument("backward: empty batch");
    if (inputs.size() != upstream.size())
        throw std::invalid_argument("backward: batch size mismatch");

    GradientSet grads = zero_gradients(net);
    const std::size_t L = net.n_layers();

    std::vector<Vec> pre(L);   // pre-activations per layer
    std::vector<Vec> act(L + 1);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].size() != net.input_width() || upstream[i].size() != net.output_width())
            throw std::invalid_argument("backward: sample width mismatch");

        act[0] = inputs[i];
        for (std::size_t l = 0; l < L; ++l) {
            pre[l] = matvec(net.weights[l], act[l]);
            kernels::axpy(1.0, net.biases[l].data(), pre[l].data(), pre[l].size());
            act[l + 1] = pre[l];
            if (l + 1 < L) kernels::relu(act[l + 1].data(), act[l + 1].size());
        }

        Vec delta = upstream[i];
        for (std::size_t l = L; l-- > 0;) {
            // dL/dW_l += delta outer act_l ; dL/db_l += delta
            for (std::size_t r = 0; r < delta.size(); ++r)
                kernels::axpy(delta[r], act[l].data(), grads.weights[l].row(r), act[l].size());
            kernels::axpy(1.0, delta.data(), grads.biases[l].data(), delta.size());
            if (l == 0) break;
            Vec prev = matvec_t(net.weights[l], delta);
            kernels::relu_grad(pre[l - 1].data(), prev.data(), prev.size());
            delta = std::move(prev);
        }
    }
    return grads;
}

AdamState make_adam_state(const Mlp& net, double learning_rate) {
    AdamState state;
    state.learning_rate = learning_rate;
    state.m = zero_gradients(net);
    state.v = zero_gradients(net);
    return state;
}

void adam_step(Mlp& net, const GradientSet& grads, AdamState& state) {
    check_shapes(net, grads);
    check_shapes(net, state.m);
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    auto update = [&](Vec& params, Vec& m, Vec& v, const Vec& g) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            params[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    };
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
        update(net.weights[l].data(), state.m.weights[l].data(), state.v.weights[l].data(),
               grads.weights[l].data());
        update(net.biases[l], state.m.biases[l], state.v.biases[l], grads.biases[l]);
    }
}

namespace {

void write_u64(std::FILE* f, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    if (std::fwrite(buf, 1, 8, f) != 8) throw std::runtime_error("checkpoint: write failed");
}

std::uint64_t read_u64(std::FILE* f) {
    unsigned char buf[8];
    if (std::fread(buf, 1, 8, f) != 8) throw std::runtime_error("checkpoint: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void write_f64(std::FILE* f, double d) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(d));
    __builtin_memcpy(&bits, &d, 8);
    write_u64(f, bits);
}

double read_f64(std::FILE* f) {
    const std::uint64_t bits = read_u64(f);
    double d;
    __builtin_memcpy(&d, &bits, 8);
    return d;
}

}  // namespace

void save_checkpoint(const Mlp& net, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) throw std::runtime_error("checkpoint: cannot open " + path);
    write_u64(f, net.widths.size());
    for (std::size_t w : net.widths) write_u64(f, w);
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
        for (double v : net.weights[l].data()) write_f64(f, v);
        for (double v : net.biases[l]) write_f64(f, v);
    }
    std::fclose(f);
}

Mlp load_checkpoint(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (f == nullptr) throw std::runtime_error("checkpoint: cannot open " + path);
    try {
        const std::uint64_t n = read_u64(f);
        if (n < 2 || n > 64) throw std::runtime_error("checkpoint: implausible width count");
        std::vector<std::size_t> widths(n);
        for (auto& w : widths) w = static_cast<std::size_t>(read_u64(f));
        Mlp net;
        net.widths = widths;
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            Matrix w(widths[l + 1], widths[l]);
            for (double& v : w.data()) v = read_f64(f);
            Vec b(widths[l + 1]);
            for (double& v : b) v = read_f64(f);
            net.weights.push_back(std::move(w));
            net.biases.push_back(std::move(b));
        }
        std::fclose(f);
        return net;
    } catch (...) {
        std::fclose(f);
        throw;
    }
}

}  // namespace rpi::nn
