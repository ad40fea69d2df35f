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

#ifndef RPI_NUMERICS_HPP_
#define RPI_NUMERICS_HPP_

#include <stdexcept>
#include <string>

#include "rpi/linalg.hpp"

namespace rpi {

/// Shared tolerances. Solver and tests read the same record so they cannot
/// drift apart.
struct NumericPolicy {
    double pivot_tol = 1e-12;
    double feasibility_tol = 1e-7;
    double optimality_tol = 1e-9;
    // Simplex basis-change cap per phase: cap_factor * (rows + cols).
    int iteration_cap_factor = 10;
};

inline const NumericPolicy& default_policy() {
    static const NumericPolicy policy{};
    return policy;
}

struct SingularMatrixError : std::runtime_error {
    explicit SingularMatrixError(const std::string& what) : std::runtime_error(what) {}
};

struct RankDeficiencyError : std::runtime_error {
    explicit RankDeficiencyError(const std::string& what) : std::runtime_error(what) {}
};

/// The simplex hit its basis-change cap; distinct from Infeasible.
struct SolverStallError : std::runtime_error {
    explicit SolverStallError(const std::string& what) : std::runtime_error(what) {}
};

/// Solve a x = b by Gaussian elimination with partial pivoting.
/// Throws SingularMatrixError when the largest available pivot drops below
/// the pivot tolerance.
Vec solve_linear_system(const Matrix& a, const Vec& b,
                        const NumericPolicy& policy = default_policy());

/// Minimize ||a theta - b||_2 for a of full column rank (m >= n), via
/// Householder QR. Throws RankDeficiencyError when a diagonal of R falls
/// below the pivot tolerance relative to the column scale.
Vec least_squares(const Matrix& a, const Vec& b,
                  const NumericPolicy& policy = default_policy());

/// maximize c.x  subject to  A x <= b,  x free.
struct LinearProgram {
    Vec objective;           // c, length n
    Matrix constraint_matrix;  // A, m x n
    Vec constraint_rhs;      // b, length m
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    Vec point;              // present iff Optimal
    double objective_value = 0.0;  // present iff Optimal
    // Certified unbounded ray (A ray <= 0, c.ray > 0); present iff Unbounded.
    Vec ray;
    int pivots = 0;
};

const char* to_string(LpStatus status);

/// Two-phase primal simplex. Free variables are sign-split (x = x+ - x-),
/// rows get slacks, and phase 1 drives a single artificial variable out of
/// the basis. Entering column: lowest eligible variable index (Bland);
/// leaving row: minimum ratio with ties to the largest pivot element, then
/// the lowest basic-variable index. Degeneracy and elimination noise are
/// handled by a deterministic outward rhs perturbation, a minimum-step rule,
/// refactorization from pristine data, and a final vertex polish; tall
/// programs (m >> n) run through delayed row generation over the same
/// machinery. Optimal points carry feasibility and optimality certificates.
/// Deterministic: identical inputs give bit-identical solutions.
LpSolution lp_solve(const LinearProgram& lp, const NumericPolicy& policy = default_policy());

}  // namespace rpi

#endif  // RPI_NUMERICS_HPP_
