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

#include "rpi/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <limits>

namespace rpi::kernels {

namespace scalar {

double dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

double reduce_max(const double* x, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] > m) m = x[i];
    return m;
}

double reduce_min(const double* x, std::size_t n) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] < m) m = x[i];
    return m;
}

double reduce_sum(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

double max_abs_diff(const double* x, const double* y, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = x[i] - y[i];
        if (d < 0) d = -d;
        if (d > m) m = d;
    }
    return m;
}

void relu(double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] < 0.0) x[i] = 0.0;
}

void relu_grad(const double* pre, double* g, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (!(pre[i] > 0.0)) g[i] = 0.0;
}

}  // namespace scalar

const Ops& scalar_ops() {
    static const Ops ops{scalar::dot,        scalar::axpy,       scalar::scal,
                         scalar::reduce_max, scalar::reduce_min, scalar::reduce_sum,
                         scalar::max_abs_diff, scalar::relu,     scalar::relu_grad,
                         "scalar"};
    return ops;
}

#if !defined(RPI_HAVE_AVX2)
const Ops* avx2_ops() { return nullptr; }
#endif

namespace {

const Ops& select() {
    const char* forced = std::getenv("RPI_KERNELS");
    if (forced != nullptr) {
        if (std::strcmp(forced, "scalar") == 0) return scalar_ops();
        if (std::strcmp(forced, "avx2") == 0 && avx2_ops() != nullptr) return *avx2_ops();
    }
    if (const Ops* v = avx2_ops()) return *v;
    return scalar_ops();
}

}  // namespace

const Ops& active() {
    static const Ops& chosen = select();
    return chosen;
}

}  // namespace rpi::kernels
