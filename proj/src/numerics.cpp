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

#include "rpi/numerics.hpp"

#include "rpi/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <limits>

namespace rpi {

const char* to_string(LpStatus status) {
    switch (status) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
    }
    return "unknown";
}

Vec solve_linear_system(const Matrix& a, const Vec& b, const NumericPolicy& policy) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n)
        throw std::invalid_argument("solve_linear_system: dimension mismatch");

    Matrix work = a;
    Vec rhs = b;
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t best = k;
        double best_abs = std::fabs(work(perm[k], k));
        for (std::size_t i = k + 1; i < n; ++i) {
            double v = std::fabs(work(perm[i], k));
            if (v > best_abs) {
                best_abs = v;
                best = i;
            }
        }
        if (best_abs < policy.pivot_tol)
            throw SingularMatrixError("solve_linear_system: pivot below threshold");
        std::swap(perm[k], perm[best]);

        const double* prow = work.row(perm[k]);
        const double pivot = prow[k];
        for (std::size_t i = k + 1; i < n; ++i) {
            double* irow = work.row(perm[i]);
            const double factor = irow[k] / pivot;
            if (factor == 0.0) continue;
            kernels::axpy(-factor, prow + k, irow + k, n - k);
            irow[k] = 0.0;
            rhs[perm[i]] -= factor * rhs[perm[k]];
        }
    }

    Vec x(n);
    for (std::size_t kk = n; kk-- > 0;) {
        const double* row = work.row(perm[kk]);
        double s = rhs[perm[kk]];
        for (std::size_t j = kk + 1; j < n; ++j) s -= row[j] * x[j];
        x[kk] = s / row[kk];
    }
    return x;
}

Vec least_squares(const Matrix& a, const Vec& b, const NumericPolicy& policy) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (m < n) throw std::invalid_argument("least_squares: need rows >= cols");
    if (b.size() != m) throw std::invalid_argument("least_squares: dimension mismatch");

    // Householder QR in place; columns are strided so this stays plain loops.
    Matrix r = a;
    Vec qtb = b;
    double scale = 0.0;
    for (double v : r.data()) scale = std::max(scale, std::fabs(v));
    const double rank_tol = policy.pivot_tol * std::max(1.0, scale) * static_cast<double>(m);

    for (std::size_t k = 0; k < n; ++k) {
        double norm2 = 0.0;
        for (std::size_t i = k; i < m; ++i) norm2 += r(i, k) * r(i, k);
        const double norm = std::sqrt(norm2);
        if (norm < rank_tol) throw RankDeficiencyError("least_squares: rank-deficient column");

        const double alpha = (r(k, k) >= 0.0) ? -norm : norm;
        Vec v(m - k);
        v[0] = r(k, k) - alpha;
        for (std::size_t i = k + 1; i < m; ++i) v[i - k] = r(i, k);
        double vtv = 0.0;
        for (double e : v) vtv += e * e;
        if (vtv == 0.0) continue;

        r(k, k) = alpha;
        for (std::size_t i = k + 1; i < m; ++i) r(i, k) = 0.0;

        for (std::size_t j = k + 1; j < n; ++j) {
            double proj = 0.0;
            for (std::size_t i = k; i < m; ++i) proj += v[i - k] * r(i, j);
            const double beta = 2.0 * proj / vtv;
            for (std::size_t i = k; i < m; ++i) r(i, j) -= beta * v[i - k];
        }
        double proj = 0.0;
        for (std::size_t i = k; i < m; ++i) proj += v[i - k] * qtb[i];
        const double beta = 2.0 * proj / vtv;
        for (std::size_t i = k; i < m; ++i) qtb[i] -= beta * v[i - k];
    }

    Vec theta(n);
    for (std::size_t kk = n; kk-- > 0;) {
        double s = qtb[kk];
        for (std::size_t j = kk + 1; j < n; ++j) s -= r(kk, j) * theta[j];
        if (std::fabs(r(kk, kk)) < rank_tol)
            throw RankDeficiencyError("least_squares: rank-deficient system");
        theta[kk] = s / r(kk, kk);
    }
    return theta;
}

namespace {

// Condensed-tableau primal simplex over the sign-split standard form.
//
// Variable ids: [0, n) = x+, [n, 2n) = x-, [2n, 2n+m) = slacks, 2n+m = the
// phase-1 artificial. Constraint rows hold "basic = rhs - sum coef*nonbasic";
// the objective row uses the same convention, so one pivot routine updates
// everything. Inactive column slots are kept at zero so row-length axpy
// sweeps stay valid.
class SimplexTableau {
  public:
    SimplexTableau(const LinearProgram& lp, const NumericPolicy& policy)
        : policy_(policy),
          source_(lp),
          n_(lp.objective.size()),
          m_(lp.constraint_rhs.size()),
          m_orig_(lp.constraint_rhs.size()),
          width_(2 * n_ + 2),        // split vars + artificial slot + rhs
          rhs_col_(2 * n_ + 1),
          tableau_(m_, width_),
          zrow_(width_, 0.0),
          col_label_(2 * n_ + 1, -1),
          row_label_(m_, -1),
          row_origin_(m_) {
        for (std::size_t i = 0; i < m_; ++i) row_origin_[i] = i;
        step_floor_ = 1e-12 * std::max(1.0, inf_norm(lp.constraint_rhs));
        reset_from_source();
    }

    // Fresh slack-basis tableau over the retained rows of the source data.
    void reset_from_source() {
        ncols_ = 2 * n_;
        std::fill(col_label_.begin(), col_label_.end(), -1);
        std::fill(zrow_.begin(), zrow_.end(), 0.0);
        for (std::size_t j = 0; j < n_; ++j) {
            col_label_[j] = static_cast<int>(j);            // x+
            col_label_[n_ + j] = static_cast<int>(n_ + j);  // x-
        }
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t src = row_origin_[i];
            row_label_[i] = static_cast<int>(2 * n_ + src);  // slack of source row
            double* row = tableau_.row(i);
            std::fill(row, row + width_, 0.0);
            const double* arow = source_.constraint_matrix.row(src);
            for (std::size_t j = 0; j < n_; ++j) {
                row[j] = arow[j];
                row[n_ + j] = -arow[j];
            }
            row[rhs_col_] = source_.constraint_rhs[src];
        }
    }

    /**
     * Rebuilds the tableau for the current basis from pristine source data,
     * wiping accumulated elimination noise. Structural basics re-enter one
     * by one through their stablest available pivot. Returns false (state
     * restored) when the basis is numerically singular against clean data.
     */
    bool refactorize() {
        const std::vector<int> target = row_label_;
        std::vector<char> is_target_slack(2 * n_ + m_orig_ + 1, 0);
        std::vector<int> structural;
        for (int id : target) {
            if (id < static_cast<int>(2 * n_))
                structural.push_back(id);
            else
                is_target_slack[static_cast<std::size_t>(id)] = 1;
        }
        std::sort(structural.begin(), structural.end());

        const Matrix saved_tableau = tableau_;
        const std::vector<int> saved_rows = row_label_;
        const std::vector<int> saved_cols = col_label_;
        const Vec saved_zrow = zrow_;
        const std::size_t saved_ncols = ncols_;

        reset_from_source();
        for (const int id : structural) {
            int col = -1;
            for (std::size_t j = 0; j < ncols_; ++j)
                if (col_label_[j] == id) col = static_cast<int>(j);
            int row = -1;
            double best = policy_.pivot_tol;
            for (std::size_t i = 0; i < m_; ++i) {
                const int basic = row_label_[i];
                if (basic < static_cast<int>(2 * n_) ||
                    is_target_slack[static_cast<std::size_t>(basic)])
                    continue;  // only non-target slacks may leave
                const double mag = std::fabs(tableau_(i, static_cast<std::size_t>(col)));
                if (mag > best) {
                    best = mag;
                    row = static_cast<int>(i);
                }
            }
            if (col < 0 || row < 0) {
                tableau_ = saved_tableau;
                row_label_ = saved_rows;
                col_label_ = saved_cols;
                zrow_ = saved_zrow;
                ncols_ = saved_ncols;
                return false;
            }
            pivot(static_cast<std::size_t>(row), static_cast<std::size_t>(col));
        }
        load_objective(loaded_objective_);
        return true;
    }

    // Returns false on Infeasible.
    bool phase1() {
        std::size_t worst = 0;
        double worst_rhs = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            const double v = tableau_(i, rhs_col_);
            if (v < worst_rhs) {
                worst_rhs = v;
                worst = i;
            }
        }
        if (worst_rhs >= 0.0) return true;  // slack basis already feasible

        // Install the artificial column (coefficient -1 in every row) and
        // pivot it in at the most negative row, which makes all rhs >= 0.
        const int art_id = static_cast<int>(2 * n_ + m_);
        const std::size_t art_col = ncols_++;
        col_label_[art_col] = art_id;
        for (std::size_t i = 0; i < m_; ++i) tableau_(i, art_col) = -1.0;
        std::fill(zrow_.begin(), zrow_.end(), 0.0);
        zrow_[art_col] = 1.0;  // maximize -x0
        pivot(worst, art_col);

        if (!iterate()) throw SolverStallError("lp_solve: phase 1 unbounded");

        // Value of the artificial at phase-1 optimum.
        double art_value = 0.0;
        int art_row = -1;
        for (std::size_t i = 0; i < m_; ++i)
            if (row_label_[i] == art_id) {
                art_row = static_cast<int>(i);
                art_value = tableau_(i, rhs_col_);
            }
        if (art_value > policy_.feasibility_tol) return false;

        if (art_row >= 0) {
            // Degenerate: artificial basic at zero. Pivot it out through the
            // lowest-id usable column, or drop the (redundant) row.
            int best_col = -1;
            for (std::size_t j = 0; j < ncols_; ++j) {
                if (std::fabs(tableau_(art_row, j)) <= policy_.pivot_tol) continue;
                if (best_col < 0 || col_label_[j] < col_label_[best_col]) best_col = static_cast<int>(j);
            }
            if (best_col >= 0) {
                pivot(static_cast<std::size_t>(art_row), static_cast<std::size_t>(best_col));
            } else {
                drop_row(static_cast<std::size_t>(art_row));
                art_row = -1;
            }
        }
        // Remove the artificial column.
        for (std::size_t j = 0; j < ncols_; ++j)
            if (col_label_[j] == art_id) {
                remove_column(j);
                break;
            }
        return true;
    }

    void load_objective(const Vec& c) {
        loaded_objective_ = c;
        allow_refactor_ = true;
        obj_scale_ = 1.0;
        for (double v : c) obj_scale_ = std::max(obj_scale_, std::fabs(v));
        std::fill(zrow_.begin(), zrow_.end(), 0.0);
        for (std::size_t v = 0; v < 2 * n_; ++v) {
            const double coeff = (v < n_) ? c[v] : -c[v - n_];
            if (coeff == 0.0) continue;
            bool placed = false;
            for (std::size_t j = 0; j < ncols_; ++j)
                if (col_label_[j] == static_cast<int>(v)) {
                    zrow_[j] -= coeff;
                    placed = true;
                    break;
                }
            if (placed) continue;
            for (std::size_t i = 0; i < m_; ++i)
                if (row_label_[i] == static_cast<int>(v)) {
                    kernels::axpy(coeff, tableau_.row(i), zrow_.data(), width_);
                    break;
                }
        }
    }

    // Bland entering rule (lowest eligible variable index). Returns false
    // when the entering column has no blocking row (unbounded).
    bool iterate() {
        const int cap = policy_.iteration_cap_factor * static_cast<int>(m_ + 2 * n_ + 1);
        int steps = 0;
        for (;;) {
            // The reduced-cost threshold scales with the objective: below
            // that, candidate columns are indistinguishable from noise and
            // chasing them stalls the walk on the optimal face.
            const double improving = policy_.optimality_tol * obj_scale_;
            int enter = -1;
            for (std::size_t j = 0; j < ncols_; ++j) {
                if (zrow_[j] < -improving && (enter < 0 || col_label_[j] < col_label_[enter]))
                    enter = static_cast<int>(j);
            }
            if (enter < 0) return true;  // optimal

            int leave = select_leaving(static_cast<std::size_t>(enter));
            if (leave < 0) {
                // A column of fake zeros (eroded by elimination noise) looks
                // unbounded; rebuild from pristine data before believing it.
                if (allow_refactor_ && refactor_budget_ > 0 && refactorize()) {
                    --refactor_budget_;
                    continue;
                }
                unbounded_col_ = enter;
                return false;
            }
            {
                // A pivot far below the column scale is noise, not data;
                // refactorize instead of amplifying it.
                double col_scale = 0.0;
                for (std::size_t i = 0; i < m_; ++i)
                    col_scale = std::max(col_scale,
                                         std::fabs(tableau_(i, static_cast<std::size_t>(enter))));
                const double chosen =
                    tableau_(static_cast<std::size_t>(leave), static_cast<std::size_t>(enter));
                if (chosen < 1e-7 * col_scale && allow_refactor_ && refactor_budget_ > 0 &&
                    refactorize()) {
                    --refactor_budget_;
                    continue;
                }
            }
            // Minimum-step rule: a degenerate (zero-length) pivot makes no
            // progress and opens the door to stalling on a tied face, so the
            // blocking row is relaxed by up to step_floor_ to guarantee
            // strictly positive movement. The accumulated slack stays far
            // below the feasibility tolerance and the final vertex is
            // polished against unperturbed data anyway.
            {
                const std::size_t lr = static_cast<std::size_t>(leave);
                if (tableau_(lr, rhs_col_) < step_floor_)
                    tableau_(lr, rhs_col_) = step_floor_;
            }
            pivot(static_cast<std::size_t>(leave), static_cast<std::size_t>(enter));
            if (++steps > cap)
                throw SolverStallError("lp_solve: basis-change cap exceeded");
        }
    }

    // Ratio test in two tiers: prefer rows whose coefficient clears a scale-
    // relative threshold (entries a few ulps above zero are elimination
    // noise, and pivoting on them amplifies tableau error by their inverse);
    // fall back to the absolute floor so genuinely small columns still
    // block. Ties on the ratio take the largest pivot element, then the
    // lowest basic-variable id, which keeps the walk deterministic.
    int select_leaving(std::size_t enter) const {
        double col_scale = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            const double mag = std::fabs(tableau_(i, enter));
            if (mag > col_scale) col_scale = mag;
        }
        const double strong = std::max(policy_.pivot_tol, 1e-7 * col_scale);

        for (const double threshold : {strong, policy_.pivot_tol}) {
            int leave = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            double best_coef = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                const double coef = tableau_(i, enter);
                if (coef <= threshold) continue;
                const double ratio = tableau_(i, rhs_col_) / coef;
                const double tie = 1e-9 * (1.0 + std::fabs(best_ratio));
                if (leave < 0 || ratio < best_ratio - tie) {
                    best_ratio = ratio;
                    best_coef = coef;
                    leave = static_cast<int>(i);
                } else if (ratio <= best_ratio + tie) {
                    if (coef > best_coef * (1.0 + 1e-12) ||
                        (coef >= best_coef * (1.0 - 1e-12) &&
                         row_label_[i] < row_label_[static_cast<std::size_t>(leave)])) {
                        best_ratio = std::min(best_ratio, ratio);
                        best_coef = coef;
                        leave = static_cast<int>(i);
                    }
                }
            }
            if (leave >= 0) return leave;
            if (threshold == policy_.pivot_tol) break;
        }
        return -1;
    }

    bool optimal_certificate() const {
        for (std::size_t j = 0; j < ncols_; ++j)
            if (zrow_[j] < -policy_.optimality_tol * obj_scale_) return false;
        return true;
    }

    Vec extract_point() const {
        Vec split(2 * n_ + m_ + 1, 0.0);
        for (std::size_t i = 0; i < m_; ++i)
            split[static_cast<std::size_t>(row_label_[i])] = tableau_(i, rhs_col_);
        Vec x(n_);
        for (std::size_t j = 0; j < n_; ++j) x[j] = split[j] - split[n_ + j];
        return x;
    }

    // Improving ray for the recorded unbounded column, in original x space.
    Vec extract_ray() const {
        Vec split(2 * n_ + m_ + 1, 0.0);
        const std::size_t j = static_cast<std::size_t>(unbounded_col_);
        split[static_cast<std::size_t>(col_label_[j])] = 1.0;
        for (std::size_t i = 0; i < m_; ++i)
            split[static_cast<std::size_t>(row_label_[i])] = -tableau_(i, j);
        Vec d(n_);
        for (std::size_t k = 0; k < n_; ++k) d[k] = split[k] - split[n_ + k];
        const double norm = inf_norm(d);
        if (norm > 0.0) kernels::scal(1.0 / norm, d.data(), d.size());
        return d;
    }

    int pivots() const { return pivots_; }
    double min_pivot() const { return min_pivot_; }

    // Original-row indices whose slack sits nonbasic, i.e. the constraints
    // tight at the final vertex.
    std::vector<std::size_t> active_rows() const {
        std::vector<std::size_t> rows;
        for (std::size_t j = 0; j < ncols_; ++j) {
            const int id = col_label_[j];
            if (id >= static_cast<int>(2 * n_) && id < static_cast<int>(2 * n_ + m_orig_))
                rows.push_back(static_cast<std::size_t>(id) - 2 * n_);
        }
        std::sort(rows.begin(), rows.end());
        return rows;
    }

    // Variables whose split halves are both nonbasic, hence exactly zero.
    std::vector<bool> pinned_vars() const {
        std::vector<bool> nonbasic(2 * n_, false);
        for (std::size_t j = 0; j < ncols_; ++j)
            if (col_label_[j] >= 0 && col_label_[j] < static_cast<int>(2 * n_))
                nonbasic[static_cast<std::size_t>(col_label_[j])] = true;
        std::vector<bool> pinned(n_, false);
        for (std::size_t k = 0; k < n_; ++k) pinned[k] = nonbasic[k] && nonbasic[n_ + k];
        return pinned;
    }

  private:
    void pivot(std::size_t r, std::size_t p) {
        double* prow = tableau_.row(r);
        const double alpha = prow[p];
        if (std::fabs(alpha) < min_pivot_) min_pivot_ = std::fabs(alpha);
        kernels::scal(1.0 / alpha, prow, width_);
        const double inv = 1.0 / alpha;
        prow[p] = 0.0;  // masked so full-row axpy skips the pivot column
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r) continue;
            double* irow = tableau_.row(i);
            const double f = irow[p];
            if (f != 0.0) {
                kernels::axpy(-f, prow, irow, width_);
                irow[p] = -f * inv;
            }
        }
        const double fz = zrow_[p];
        if (fz != 0.0) {
            kernels::axpy(-fz, prow, zrow_.data(), width_);
            zrow_[p] = -fz * inv;
        }
        prow[p] = inv;
        std::swap(row_label_[r], col_label_[p]);
        ++pivots_;
    }

    void remove_column(std::size_t j) {
        const std::size_t last = ncols_ - 1;
        if (j != last) {
            for (std::size_t i = 0; i < m_; ++i) {
                tableau_(i, j) = tableau_(i, last);
                tableau_(i, last) = 0.0;
            }
            zrow_[j] = zrow_[last];
            col_label_[j] = col_label_[last];
        } else {
            for (std::size_t i = 0; i < m_; ++i) tableau_(i, last) = 0.0;
        }
        zrow_[last] = 0.0;
        col_label_[last] = -1;
        --ncols_;
    }

    void drop_row(std::size_t r) {
        const std::size_t last = m_ - 1;
        if (r != last) {
            double* dst = tableau_.row(r);
            const double* src = tableau_.row(last);
            std::copy(src, src + width_, dst);
            row_label_[r] = row_label_[last];
            row_origin_[r] = row_origin_[last];
        }
        std::fill(tableau_.row(last), tableau_.row(last) + width_, 0.0);
        row_label_[last] = -1;
        --m_;
    }

    const NumericPolicy& policy_;
    LinearProgram source_;
    std::size_t n_;
    std::size_t m_;
    std::size_t m_orig_;
    std::size_t width_;
    std::size_t rhs_col_;
    std::size_t ncols_;
    Matrix tableau_;
    Vec zrow_;
    std::vector<int> col_label_;
    std::vector<int> row_label_;
    std::vector<std::size_t> row_origin_;
    int unbounded_col_ = -1;
    int pivots_ = 0;
    double obj_scale_ = 1.0;
    Vec loaded_objective_;
    bool allow_refactor_ = false;
    int refactor_budget_ = 4;
  public:
    double step_floor_ = 0.0;
  private:
    double min_pivot_ = std::numeric_limits<double>::infinity();
};

void check_lp_dimensions(const LinearProgram& lp) {
    if (lp.constraint_matrix.rows() != lp.constraint_rhs.size() ||
        lp.constraint_matrix.cols() != lp.objective.size())
        throw std::invalid_argument("lp_solve: dimension mismatch");
    for (double v : lp.objective)
        if (!std::isfinite(v)) throw std::invalid_argument("lp_solve: non-finite objective");
    for (double v : lp.constraint_rhs)
        if (!std::isfinite(v)) throw std::invalid_argument("lp_solve: non-finite rhs");
    for (double v : lp.constraint_matrix.data())
        if (!std::isfinite(v)) throw std::invalid_argument("lp_solve: non-finite constraint");
}

double max_violation(const LinearProgram& lp, const Vec& x) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lp.constraint_rhs.size(); ++i) {
        const double lhs = kernels::dot(lp.constraint_matrix.row(i), x.data(), x.size());
        worst = std::max(worst, lhs - lp.constraint_rhs[i]);
    }
    return worst;
}

// Re-solves the tight constraint system of the final basis against pristine
// data, wiping the drift a long pivot walk leaves in the condensed tableau.
// Falls back to a ridge-regularized fit pulled toward the raw point when the
// plain active system is singular, and keeps whichever candidate violates
// the original rows least (objective breaks ties).
Vec polish_vertex(const LinearProgram& lp, const SimplexTableau& tableau, const Vec& raw,
                  const NumericPolicy& policy) {
    const std::size_t n = lp.objective.size();
    const std::vector<std::size_t> active = tableau.active_rows();
    const std::vector<bool> pinned = tableau.pinned_vars();
    const bool debug = std::getenv("RPI_LP_DEBUG") != nullptr;

    std::vector<std::size_t> unknowns;
    for (std::size_t k = 0; k < n; ++k)
        if (!pinned[k]) unknowns.push_back(k);
    if (unknowns.empty()) return Vec(n, 0.0);
    if (active.empty()) return raw;

    Matrix system(active.size(), unknowns.size());
    Vec rhs(active.size());
    for (std::size_t r = 0; r < active.size(); ++r) {
        const double* row = lp.constraint_matrix.row(active[r]);
        for (std::size_t c = 0; c < unknowns.size(); ++c) system(r, c) = row[unknowns[c]];
        rhs[r] = lp.constraint_rhs[active[r]];
    }

    std::vector<Vec> candidates{raw};
    if (active.size() >= unknowns.size()) {
        try {
            const Vec solved = least_squares(system, rhs, policy);
            Vec candidate(n, 0.0);
            for (std::size_t c = 0; c < unknowns.size(); ++c) candidate[unknowns[c]] = solved[c];
            candidates.push_back(std::move(candidate));
        } catch (const std::exception&) {
            // fall through to the ridge variant
        }
    }
    {
        // Ridge rows anchor the fit near the raw point; always full rank.
        const double mu = 1e-6;
        Matrix augmented(active.size() + unknowns.size(), unknowns.size());
        Vec augmented_rhs(active.size() + unknowns.size());
        for (std::size_t r = 0; r < active.size(); ++r) {
            for (std::size_t c = 0; c < unknowns.size(); ++c) augmented(r, c) = system(r, c);
            augmented_rhs[r] = rhs[r];
        }
        for (std::size_t c = 0; c < unknowns.size(); ++c) {
            augmented(active.size() + c, c) = mu;
            augmented_rhs[active.size() + c] = mu * raw[unknowns[c]];
        }
        try {
            const Vec solved = least_squares(augmented, augmented_rhs, policy);
            Vec candidate(n, 0.0);
            for (std::size_t c = 0; c < unknowns.size(); ++c) candidate[unknowns[c]] = solved[c];
            candidates.push_back(std::move(candidate));
        } catch (const std::exception&) {
        }
    }

    const double clean = 1e-9;  // violations below this are equivalent
    std::size_t best = 0;
    double best_viol = max_violation(lp, candidates[0]);
    double best_obj = kernels::dot(lp.objective.data(), candidates[0].data(), n);
    for (std::size_t c = 1; c < candidates.size(); ++c) {
        const double viol = max_violation(lp, candidates[c]);
        const double obj = kernels::dot(lp.objective.data(), candidates[c].data(), n);
        const double a = std::max(viol, clean);
        const double b = std::max(best_viol, clean);
        if (a < b || (a == b && obj > best_obj)) {
            best = c;
            best_viol = viol;
            best_obj = obj;
        }
    }
    if (debug)
        std::fprintf(stderr, "  polish: picked candidate %zu of %zu (viol=%.3g, active=%zu)\n",
                     best, candidates.size(), best_viol, active.size());
    return candidates[best];
}



LpSolution solve_dense_attempt(const LinearProgram& lp, const NumericPolicy& policy,
                               std::uint64_t attempt) {
    // Deterministic outward perturbation of the rhs lifts the ties massive
    // degeneracy would otherwise feed the ratio test; the final vertex is
    // polished back onto the unperturbed constraints. Each retry attempt
    // reseeds the perturbation, steering the walk down a different path.
    LinearProgram perturbed = lp;
    std::uint64_t noise = 0x9e3779b97f4a7c15ULL ^ (attempt * 0xda942042e4dd58b5ULL);
    // Retries shrink the perturbation: when the perturbed optimum sits on a
    // different vertex than the original (its polish then violates some
    // row), a smaller shift converges to the true one.
    const double magnitude = (attempt == 0) ? 1e-9 : (attempt == 1 ? 1e-12 : 0.0);
    for (std::size_t i = 0; i < perturbed.constraint_rhs.size() && magnitude > 0.0; ++i) {
        const double u =
            static_cast<double>(splitmix64(noise) >> 11) * 0x1.0p-53;  // [0, 1)
        perturbed.constraint_rhs[i] +=
            magnitude * (1.0 + std::fabs(perturbed.constraint_rhs[i])) * (1.0 + u);
    }

    SimplexTableau tableau(perturbed, policy);
    LpSolution solution;

    if (!tableau.phase1()) {
        solution.status = LpStatus::Infeasible;
        solution.pivots = tableau.pivots();
        return solution;
    }

    tableau.load_objective(lp.objective);
    if (!tableau.iterate()) {
        solution.status = LpStatus::Unbounded;
        solution.ray = tableau.extract_ray();
        solution.pivots = tableau.pivots();
        return solution;
    }

    if (!tableau.optimal_certificate())
        throw std::logic_error("lp_solve: optimality certificate failed");

    solution.status = LpStatus::Optimal;
    solution.point = polish_vertex(lp, tableau, tableau.extract_point(), policy);
    solution.pivots = tableau.pivots();
    solution.objective_value =
        kernels::dot(lp.objective.data(), solution.point.data(), solution.point.size());

    if (std::getenv("RPI_LP_DEBUG") != nullptr)
        std::fprintf(stderr,
                     "lp_solve: m=%zu n=%zu pivots=%d obj=%.6g worst_violation=%.3g "
                     "min_pivot=%.3g attempt=%llu\n",
                     lp.constraint_rhs.size(), lp.objective.size(), solution.pivots,
                     solution.objective_value, max_violation(lp, solution.point),
                     tableau.min_pivot(), static_cast<unsigned long long>(attempt));
    return solution;
}

// A long degenerate walk can still sneak a noise-scale pivot through and
// poison the tableau, so each solve is quality-checked against pristine
// data and retried under a fresh perturbation when it falls short.
LpSolution solve_dense(const LinearProgram& lp, const NumericPolicy& policy) {
    constexpr int kAttempts = 3;
    constexpr double kQualityBar = 1e-8;  // absolute per-row violation
    const double obj_scale = std::max(1.0, inf_norm(lp.objective));
    LpSolution best;
    double best_worst = std::numeric_limits<double>::infinity();
    for (std::uint64_t attempt = 0; attempt < kAttempts; ++attempt) {
        LpSolution sol = solve_dense_attempt(lp, policy, attempt);
        if (sol.status == LpStatus::Infeasible) return sol;  // relaxed rhs: sound verdict
        if (sol.status == LpStatus::Unbounded) {
            // Trust the ray only when it certifies against the original data
            // (rays are normalized to unit infinity norm).
            const double gain =
                kernels::dot(lp.objective.data(), sol.ray.data(), sol.ray.size());
            double drift = 0.0;
            for (std::size_t i = 0; i < lp.constraint_rhs.size(); ++i)
                drift = std::max(drift, kernels::dot(lp.constraint_matrix.row(i),
                                                     sol.ray.data(), sol.ray.size()));
            if (std::getenv("RPI_LP_DEBUG") != nullptr)
                std::fprintf(stderr,
                             "lp_solve: m=%zu n=%zu UNBOUNDED gain=%.3g drift=%.3g scale=%.3g "
                             "attempt=%llu\n",
                             lp.constraint_rhs.size(), lp.objective.size(), gain, drift,
                             obj_scale, static_cast<unsigned long long>(attempt));
            if (gain > 1e-10 * obj_scale && drift <= 1e-9) return sol;
            continue;  // noise ray: retry under a fresh perturbation
        }
        const double worst = max_violation(lp, sol.point);
        if (worst <= kQualityBar) return sol;
        if (worst < best_worst) {
            best_worst = worst;
            best = std::move(sol);
        }
    }
    if (best.status == LpStatus::Optimal && best_worst <= policy.feasibility_tol) return best;
    throw std::logic_error("lp_solve: feasibility certificate failed after retries (violation " +
                           std::to_string(best_worst) + ")");
}

// Delayed row generation for tall programs. Only a vertex-sized subset of a
// tall constraint system can bind, so the dense simplex runs on growing
// subsets until the full program is satisfied; the subset optimum is then
// optimal for the whole program. This keeps the tableau small and sidesteps
// the degenerate chatter a few thousand simultaneously tight rows cause.
LpSolution solve_by_row_generation(const LinearProgram& lp, const NumericPolicy& policy) {
    const std::size_t n = lp.objective.size();
    const std::size_t m = lp.constraint_rhs.size();
    const double scale = std::max(1.0, inf_norm(lp.constraint_rhs));
    const double admit_tol = 1e-10 * scale;
    const std::size_t batch = std::max<std::size_t>(2 * n, 64);

    std::vector<std::size_t> rows;
    std::vector<char> included(m, 0);
    int total_pivots = 0;

    struct Scored {
        double score;
        std::size_t row;
    };

    for (std::size_t round = 0; round <= m; ++round) {
        LinearProgram sub;
        sub.objective = lp.objective;
        sub.constraint_matrix = Matrix(rows.size(), n);
        sub.constraint_rhs.resize(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const double* src_row = lp.constraint_matrix.row(rows[r]);
            std::copy(src_row, src_row + n, sub.constraint_matrix.row(r));
            sub.constraint_rhs[r] = lp.constraint_rhs[rows[r]];
        }

        LpSolution sol = solve_dense(sub, policy);
        total_pivots += sol.pivots;
        sol.pivots = total_pivots;
        if (sol.status == LpStatus::Infeasible) return sol;  // subset already infeasible

        const Vec& direction = (sol.status == LpStatus::Optimal) ? sol.point : sol.ray;
        std::vector<Scored> candidates;
        for (std::size_t i = 0; i < m; ++i) {
            if (included[i]) continue;
            const double lhs = kernels::dot(lp.constraint_matrix.row(i), direction.data(), n);
            const double gap =
                (sol.status == LpStatus::Optimal) ? lhs - lp.constraint_rhs[i] : lhs;
            if (gap > admit_tol) candidates.push_back({gap, i});
        }
        if (candidates.empty()) return sol;  // feasible everywhere, hence optimal; or a true ray

        std::sort(candidates.begin(), candidates.end(), [](const Scored& a, const Scored& b) {
            return a.score > b.score || (a.score == b.score && a.row < b.row);
        });
        const std::size_t take = std::min(batch, candidates.size());
        for (std::size_t c = 0; c < take; ++c) {
            rows.push_back(candidates[c].row);
            included[candidates[c].row] = 1;
        }
    }
    throw SolverStallError("lp_solve: row generation failed to converge");
}

}  // namespace

LpSolution lp_solve(const LinearProgram& lp, const NumericPolicy& policy) {
    check_lp_dimensions(lp);
    const std::size_t n = lp.objective.size();
    const std::size_t m = lp.constraint_rhs.size();
    if (m >= std::max<std::size_t>(256, 6 * n)) return solve_by_row_generation(lp, policy);
    return solve_dense(lp, policy);
}

}  // namespace rpi
