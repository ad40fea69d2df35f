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

#ifndef RPI_LINALG_HPP_
#define RPI_LINALG_HPP_

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "rpi/kernels.hpp"

namespace rpi {

using Vec = std::vector<double>;

/// Dense row-major matrix.
class Matrix {
  public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    Vec& data() { return data_; }
    const Vec& data() const { return data_; }

  private:
    std::size_t rows_;
    std::size_t cols_;
    Vec data_;
};

/// y = A x
inline Vec matvec(const Matrix& a, const Vec& x) {
    if (x.size() != a.cols()) throw std::invalid_argument("matvec: dimension mismatch");
    Vec y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] = kernels::dot(a.row(i), x.data(), a.cols());
    return y;
}

/// y = A^T x
inline Vec matvec_t(const Matrix& a, const Vec& x) {
    if (x.size() != a.rows()) throw std::invalid_argument("matvec_t: dimension mismatch");
    Vec y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) kernels::axpy(x[i], a.row(i), y.data(), a.cols());
    return y;
}

inline double inf_norm(const Vec& x) {
    double m = 0.0;
    for (double v : x) {
        double a = v < 0 ? -v : v;
        if (a > m) m = a;
    }
    return m;
}

inline double inf_norm_diff(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("inf_norm_diff: dimension mismatch");
    if (x.empty()) return 0.0;
    return kernels::max_abs_diff(x.data(), y.data(), x.size());
}

}  // namespace rpi

#endif  // RPI_LINALG_HPP_
