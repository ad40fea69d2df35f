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

#include "rpi/model_based.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rpi {

namespace {

constexpr double kStartAcceptTol = 1e-9;
constexpr double kFeasiblePreTol = 1e-7;

// G = (I - gamma P Pi_mu) Phi, one row per (s,a).
Matrix bellman_inequality_matrix(const TabularMdp& mdp, const FeatureMap& phi,
                                 const DeterministicPolicy& mu) {
    const std::size_t S = mdp.n_states();
    const std::size_t A = mdp.n_actions();
    const std::size_t d = phi.dim();
    const double gamma = mdp.discount();

    // Features of the on-policy pairs (s', mu(s')).
    Matrix phi_mu(S, d);
    for (std::size_t s = 0; s < S; ++s) {
        const double* src = phi.features.row(mdp.pair_index(s, static_cast<std::size_t>(mu[s])));
        std::copy(src, src + d, phi_mu.row(s));
    }

    Matrix g(S * A, d);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const std::size_t row = mdp.pair_index(s, a);
            double* out = g.row(row);
            const double* p = mdp.transition_row(s, a);
            for (std::size_t sp = 0; sp < S; ++sp)
                if (p[sp] != 0.0) kernels::axpy(-gamma * p[sp], phi_mu.row(sp), out, d);
            kernels::axpy(1.0, phi.features.row(row), out, d);
        }
    return g;
}

IterationRecord make_record(int index, const TabularMdp& mdp, ParamVector theta,
                            PolicyVariant policy, QTable estimate, LpStatus status) {
    IterationRecord rec;
    rec.index = index;
    rec.theta = std::move(theta);
    rec.estimate = std::move(estimate);
    rec.lp_status = status;
    QTable image;
    if (const auto* det = std::get_if<DeterministicPolicy>(&policy)) {
        rec.true_q = exact_q_value(mdp, *det);
        image = bellman_apply(mdp, *det, rec.estimate);
    } else {
        const auto& stoch = std::get<StochasticPolicy>(policy);
        rec.true_q = exact_q_value(mdp, stoch);
        image = bellman_apply(mdp, stoch, rec.estimate);
    }
    rec.bellman_residual = inf_norm_diff(image, rec.estimate);
    rec.policy = std::move(policy);
    return rec;
}

}  // namespace

double policy_mean(const QTable& q, const DeterministicPolicy& policy, std::size_t n_actions) {
    double sum = 0.0;
    for (std::size_t s = 0; s < policy.size(); ++s)
        sum += q[s * n_actions + static_cast<std::size_t>(policy[s])];
    return sum / static_cast<double>(policy.size());
}

double policy_mean(const QTable& q, const StochasticPolicy& policy) {
    const std::size_t S = policy.probs.rows();
    const std::size_t A = policy.probs.cols();
    double sum = 0.0;
    for (std::size_t s = 0; s < S; ++s)
        sum += kernels::dot(policy.probs.row(s), q.data() + s * A, A);
    return sum / static_cast<double>(S);
}

double policy_mean(const QTable& q, const PolicyVariant& policy, std::size_t n_actions) {
    if (const auto* det = std::get_if<DeterministicPolicy>(&policy))
        return policy_mean(q, *det, n_actions);
    return policy_mean(q, std::get<StochasticPolicy>(policy));
}

ParamVector find_feasible_initial_theta(const TabularMdp& mdp, const FeatureMap& phi,
                                        const DeterministicPolicy& mu0,
                                        const NumericPolicy& policy) {
    validate_policy(mdp, mu0);
    const std::size_t n_pairs = mdp.n_pairs();
    const std::size_t d = phi.dim();
    if (phi.features.rows() != n_pairs)
        throw std::invalid_argument("find_feasible_initial_theta: feature rows mismatch");

    const Matrix g = bellman_inequality_matrix(mdp, phi, mu0);

    // Variables (theta, t): G theta - t 1 <= r plus the boundedness row -t <= 1.
    LinearProgram lp;
    lp.objective.assign(d + 1, 0.0);
    lp.objective[d] = -1.0;  // maximize -t
    lp.constraint_matrix = Matrix(n_pairs + 1, d + 1);
    lp.constraint_rhs.assign(n_pairs + 1, 0.0);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        std::copy(g.row(i), g.row(i) + d, lp.constraint_matrix.row(i));
        lp.constraint_matrix(i, d) = -1.0;
        lp.constraint_rhs[i] = mdp.reward_table()[i];
    }
    lp.constraint_matrix(n_pairs, d) = -1.0;
    lp.constraint_rhs[n_pairs] = 1.0;

    const LpSolution sol = lp_solve(lp, policy);
    if (sol.status != LpStatus::Optimal)
        throw std::logic_error("find_feasible_initial_theta: auxiliary program must be solvable");
    const double t = sol.point[d];
    if (t > kStartAcceptTol)
        throw NoFeasibleStartError("find_feasible_initial_theta: best achievable violation " +
                                   std::to_string(t));
    return ParamVector(sol.point.begin(), sol.point.begin() + static_cast<std::ptrdiff_t>(d));
}

ParamVector rpi_policy_evaluation(const TabularMdp& mdp, const FeatureMap& phi,
                                  const DeterministicPolicy& mu_k, const QTable& f_k,
                                  const QTable& weights, const ParamVector& theta_hint,
                                  const NumericPolicy& policy) {
    validate_policy(mdp, mu_k);
    const std::size_t n_pairs = mdp.n_pairs();
    const std::size_t d = phi.dim();
    if (f_k.size() != n_pairs || weights.size() != n_pairs)
        throw std::invalid_argument("rpi_policy_evaluation: dimension mismatch");
    for (double w : weights)
        if (!(w > 0.0))
            throw std::invalid_argument("rpi_policy_evaluation: weights must be strictly positive");

    {
        const QTable image = bellman_apply(mdp, mu_k, f_k);
        for (std::size_t i = 0; i < n_pairs; ++i)
            if (image[i] < f_k[i] - kFeasiblePreTol)
                throw std::invalid_argument("rpi_policy_evaluation: f_k violates T_mu f >= f");
    }

    ParamVector base = theta_hint;
    if (base.empty()) base = least_squares(phi.features, f_k);
    if (base.size() != d) throw std::invalid_argument("rpi_policy_evaluation: bad theta hint");

    const Matrix g = bellman_inequality_matrix(mdp, phi, mu_k);
    const Vec g_base = matvec(g, base);
    const QTable f_base = evaluate(phi, base);

    // Solve in shifted variables delta = theta - base so the slack basis is
    // already the feasible f_k vertex. Residual negativity up to the
    // feasibility tolerance is rounded up to zero, which perturbs each
    // constraint by no more than the tolerance the contract grants.
    LinearProgram lp;
    lp.objective = matvec_t(phi.features, weights);
    lp.constraint_matrix = Matrix(2 * n_pairs, d);
    lp.constraint_rhs.assign(2 * n_pairs, 0.0);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        std::copy(g.row(i), g.row(i) + d, lp.constraint_matrix.row(i));
        double slack = mdp.reward_table()[i] - g_base[i];
        if (slack < 0.0 && slack >= -policy.feasibility_tol) slack = 0.0;
        lp.constraint_rhs[i] = slack;

        double* floor_row = lp.constraint_matrix.row(n_pairs + i);
        const double* phi_row = phi.features.row(i);
        for (std::size_t j = 0; j < d; ++j) floor_row[j] = -phi_row[j];
        double floor_slack = f_base[i] - f_k[i];
        if (floor_slack < 0.0 && floor_slack >= -policy.feasibility_tol) floor_slack = 0.0;
        lp.constraint_rhs[n_pairs + i] = floor_slack;
    }

    const LpSolution sol = lp_solve(lp, policy);
    if (sol.status == LpStatus::Infeasible)
        throw std::logic_error("rpi_policy_evaluation: program infeasible despite feasible f_k");
    if (sol.status == LpStatus::Unbounded)
        throw std::logic_error(
            "rpi_policy_evaluation: unbounded status contradicts the Q_mu upper bound");

    ParamVector theta(d);
    for (std::size_t j = 0; j < d; ++j) theta[j] = base[j] + sol.point[j];
    return theta;
}

RunTrace rpi_run(const TabularMdp& mdp, const FeatureMap& phi, int iterations,
                 const QTable& weights, std::uint64_t seed, const NumericPolicy& policy) {
    if (iterations < 1) throw std::invalid_argument("rpi_run: iterations must be >= 1");

    RunTrace trace;
    trace.metadata.algorithm = "rpi";
    trace.metadata.seed = seed;

    // Initial policy: greedy w.r.t. Phi * 0, i.e. action 0 everywhere by the
    // tie rule; the feasible start certified for it transfers to the greedy
    // policy of f_0 because T f_0 >= T_mu f_0.
    const DeterministicPolicy mu_init = greedy_policy(QTable(mdp.n_pairs(), 0.0), mdp);
    ParamVector theta = find_feasible_initial_theta(mdp, phi, mu_init, policy);
    QTable f = evaluate(phi, theta);
    DeterministicPolicy mu = greedy_policy(f, mdp);
    trace.records.push_back(make_record(0, mdp, theta, mu, f, LpStatus::Optimal));

    for (int k = 0; k < iterations; ++k) {
        ParamVector next_theta = rpi_policy_evaluation(mdp, phi, mu, f, weights, theta, policy);
        QTable next_f = evaluate(phi, next_theta);
        DeterministicPolicy next_mu = greedy_policy(next_f, mdp);
        trace.records.push_back(make_record(k + 1, mdp, next_theta, next_mu, next_f,
                                            LpStatus::Optimal));
        theta = std::move(next_theta);
        f = std::move(next_f);
        mu = std::move(next_mu);
    }
    return trace;
}

RunTrace ampiq_run(const TabularMdp& mdp, const FeatureMap& phi, const ParamVector& theta0,
                   int m, int iterations) {
    if (m < 1) throw std::invalid_argument("ampiq_run: m must be >= 1");
    if (iterations < 1) throw std::invalid_argument("ampiq_run: iterations must be >= 1");

    RunTrace trace;
    trace.metadata.algorithm = "ampiq";
    trace.metadata.env["m"] = m;

    ParamVector theta = theta0;
    for (int k = 0; k <= iterations; ++k) {
        QTable f = evaluate(phi, theta);
        DeterministicPolicy mu = greedy_policy(f, mdp);
        trace.records.push_back(make_record(k, mdp, theta, mu, f, LpStatus::Optimal));
        if (k == iterations) break;

        QTable target = std::move(f);
        for (int step = 0; step < m; ++step) target = bellman_apply(mdp, mu, target);
        theta = least_squares(phi.features, target);
    }
    return trace;
}

Vec discounted_occupancy(const TabularMdp& mdp, const StochasticPolicy& policy, const Vec& nu) {
    validate_policy(mdp, policy);
    const std::size_t S = mdp.n_states();
    if (nu.size() != S) throw std::invalid_argument("discounted_occupancy: nu size mismatch");

    // rho solves (I - gamma P_mu^T) rho = nu.
    Matrix system(S, S);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
            const double w = policy.probs(s, a);
            if (w == 0.0) continue;
            const double* p = mdp.transition_row(s, a);
            for (std::size_t sp = 0; sp < S; ++sp) system(sp, s) -= mdp.discount() * w * p[sp];
        }
    for (std::size_t s = 0; s < S; ++s) system(s, s) += 1.0;
    return solve_linear_system(system, nu);
}

namespace {

// pi_eta(a|s) ~ mu(a|s) exp(A(s,a)/eta), support preserved.
StochasticPolicy tilted_policy(const TabularMdp& mdp, const StochasticPolicy& mu,
                               const QTable& advantage, double eta) {
    const std::size_t S = mdp.n_states();
    const std::size_t A = mdp.n_actions();
    StochasticPolicy pi{Matrix(S, A)};
    for (std::size_t s = 0; s < S; ++s) {
        double amax = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < A; ++a)
            if (mu.probs(s, a) > 0.0) amax = std::max(amax, advantage[s * A + a]);
        double z = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
            const double w = mu.probs(s, a);
            if (w == 0.0) continue;
            const double v = w * std::exp((advantage[s * A + a] - amax) / eta);
            pi.probs(s, a) = v;
            z += v;
        }
        for (std::size_t a = 0; a < A; ++a) pi.probs(s, a) /= z;
    }
    return pi;
}

// sum_s rho(s) KL(mu(.|s) || pi(.|s)) with 0 log 0 = 0; +inf when pi loses
// support that mu still uses.
double weighted_kl(const StochasticPolicy& mu, const StochasticPolicy& pi, const Vec& rho) {
    const std::size_t S = mu.probs.rows();
    const std::size_t A = mu.probs.cols();
    double total = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        if (rho[s] == 0.0) continue;
        double kl = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
            const double p = mu.probs(s, a);
            if (p == 0.0) continue;
            const double q = pi.probs(s, a);
            if (q == 0.0) return std::numeric_limits<double>::infinity();
            kl += p * std::log(p / q);
        }
        total += rho[s] * kl;
    }
    return total;
}

}  // namespace

StochasticPolicy trpo_policy_update(const TabularMdp& mdp, const StochasticPolicy& mu_k,
                                    const QTable& advantage, const Vec& rho, double delta) {
    validate_policy(mdp, mu_k);
    if (!(delta > 0.0)) throw std::invalid_argument("trpo_policy_update: delta must be positive");
    if (advantage.size() != mdp.n_pairs() || rho.size() != mdp.n_states())
        throw std::invalid_argument("trpo_policy_update: dimension mismatch");

    double lo = 1e-6;
    double hi = 1e6;

    StochasticPolicy pi_lo = tilted_policy(mdp, mu_k, advantage, lo);
    if (weighted_kl(mu_k, pi_lo, rho) <= delta) return pi_lo;  // unconstrained greedy limit

    if (weighted_kl(mu_k, tilted_policy(mdp, mu_k, advantage, hi), rho) > delta) {
        hi = 1e12;  // widen once
        if (weighted_kl(mu_k, tilted_policy(mdp, mu_k, advantage, hi), rho) > delta)
            throw std::runtime_error("trpo_policy_update: temperature bracket exhausted");
    }

    // Geometric bisection: KL decreases as the temperature grows; keep hi on
    // the feasible side so the returned policy always satisfies the
    // constraint.
    for (int it = 0; it < 50; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (weighted_kl(mu_k, tilted_policy(mdp, mu_k, advantage, mid), rho) > delta)
            lo = mid;
        else
            hi = mid;
    }
    return tilted_policy(mdp, mu_k, advantage, hi);
}

RunTrace trpo_run(const TabularMdp& mdp, const FeatureMap& phi, const ParamVector& theta0,
                  double delta, int iterations, const Vec& nu_in) {
    if (!(delta > 0.0)) throw std::invalid_argument("trpo_run: delta must be positive");
    if (iterations < 1) throw std::invalid_argument("trpo_run: iterations must be >= 1");
    const std::size_t S = mdp.n_states();
    const std::size_t A = mdp.n_actions();

    Vec nu = nu_in;
    if (nu.empty()) nu.assign(S, 1.0 / static_cast<double>(S));
    if (nu.size() != S) throw std::invalid_argument("trpo_run: nu size mismatch");

    RunTrace trace;
    trace.metadata.algorithm = "trpo";
    trace.metadata.env["delta"] = delta;

    StochasticPolicy mu{Matrix(S, A, 1.0 / static_cast<double>(A))};
    ParamVector theta = theta0;

    for (int k = 0; k <= iterations; ++k) {
        QTable f = evaluate(phi, theta);
        trace.records.push_back(make_record(k, mdp, theta, mu, f, LpStatus::Optimal));
        if (k == iterations) break;

        // A(s,a) = f(s,a) - sum_b mu(b|s) f(s,b)
        QTable adv(mdp.n_pairs());
        for (std::size_t s = 0; s < S; ++s) {
            const double v = kernels::dot(mu.probs.row(s), f.data() + s * A, A);
            for (std::size_t a = 0; a < A; ++a) adv[s * A + a] = f[s * A + a] - v;
        }
        const Vec rho = discounted_occupancy(mdp, mu, nu);
        mu = trpo_policy_update(mdp, mu, adv, rho, delta);
        theta = least_squares(phi.features, exact_q_value(mdp, mu));
    }
    return trace;
}

}  // namespace rpi
