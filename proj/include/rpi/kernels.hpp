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

#ifndef RPI_KERNELS_HPP_
#define RPI_KERNELS_HPP_

#include <cstddef>

// Double-precision inner-loop kernels. Every dense sweep in the library
// (Bellman backups, simplex pivots, QR, MLP layers) routes through this
// table. A scalar reference implementation always exists; an AVX2 variant
// is selected at startup when the CPU supports it. Set RPI_KERNELS=scalar
// or RPI_KERNELS=avx2 in the environment to force a backend.
//
// Reductions may reassociate, so scalar and SIMD backends agree to rounding
// error, not bit-for-bit. Within one process the selection is fixed, which
// keeps every run deterministic.

namespace rpi::kernels {

struct Ops {
    // sum_i x[i]*y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    // y[i] += a*x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // x[i] *= a
    void (*scal)(double a, double* x, std::size_t n);
    double (*reduce_max)(const double* x, std::size_t n);
    double (*reduce_min)(const double* x, std::size_t n);
    double (*reduce_sum)(const double* x, std::size_t n);
    // max_i |x[i] - y[i]|
    double (*max_abs_diff)(const double* x, const double* y, std::size_t n);
    // x[i] = max(x[i], 0)
    void (*relu)(double* x, std::size_t n);
    // g[i] = pre[i] > 0 ? g[i] : 0   (rectifier subgradient at 0 is 0)
    void (*relu_grad)(const double* pre, double* g, std::size_t n);
    const char* name;
};

// Backend chosen at first use; stable for the process lifetime.
const Ops& active();

const Ops& scalar_ops();

// Null when the binary lacks AVX2 support or the CPU does not report it.
const Ops* avx2_ops();

inline double dot(const double* x, const double* y, std::size_t n) {
    return active().dot(x, y, n);
}
inline void axpy(double a, const double* x, double* y, std::size_t n) {
    active().axpy(a, x, y, n);
}
inline void scal(double a, double* x, std::size_t n) { active().scal(a, x, n); }
inline double reduce_max(const double* x, std::size_t n) { return active().reduce_max(x, n); }
inline double reduce_min(const double* x, std::size_t n) { return active().reduce_min(x, n); }
inline double reduce_sum(const double* x, std::size_t n) { return active().reduce_sum(x, n); }
inline double max_abs_diff(const double* x, const double* y, std::size_t n) {
    return active().max_abs_diff(x, y, n);
}
inline void relu(double* x, std::size_t n) { active().relu(x, n); }
inline void relu_grad(const double* pre, double* g, std::size_t n) {
    active().relu_grad(pre, g, n);
}

}  // namespace rpi::kernels

#endif  // RPI_KERNELS_HPP_
