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

#ifndef RPI_MODEL_BASED_HPP_
#define RPI_MODEL_BASED_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "rpi/linear_fa.hpp"
#include "rpi/mdp.hpp"
#include "rpi/numerics.hpp"

namespace rpi {

/// The feature class admits no Bellman subsolution for the initial policy.
struct NoFeasibleStartError : std::runtime_error {
    explicit NoFeasibleStartError(const std::string& what) : std::runtime_error(what) {}
};

using PolicyVariant = std::variant<DeterministicPolicy, StochasticPolicy>;

struct IterationRecord {
    int index = 0;
    ParamVector theta;
    PolicyVariant policy;
    QTable estimate;  // Phi theta
    QTable true_q;    // exact Q of this record's policy
    double bellman_residual = 0.0;  // ||T_mu f - f||_inf at the iterate
    LpStatus lp_status = LpStatus::Optimal;
};

struct TraceMetadata {
    std::string algorithm;
    std::uint64_t seed = 0;
    std::uint64_t feature_seed = 0;
    std::string weights = "uniform";
    std::map<std::string, double> env;
};

struct RunTrace {
    std::vector<IterationRecord> records;
    TraceMetadata metadata;
};

/// E_{s ~ uniform, a ~ policy}[q(s,a)].
double policy_mean(const QTable& q, const DeterministicPolicy& policy, std::size_t n_actions);
double policy_mean(const QTable& q, const StochasticPolicy& policy);
double policy_mean(const QTable& q, const PolicyVariant& policy, std::size_t n_actions);

/**
 * Smallest-violation start: minimize t subject to
 *   ((I - gamma P Pi_mu0) Phi) theta - r <= t 1,   t >= -1,
 * and accept theta when the optimum satisfies t <= 1e-9, which certifies
 * T_mu0 Phi theta >= Phi theta within tolerance. The t >= -1 floor only
 * keeps the program bounded; it cannot change the accept/reject decision.
 * Throws NoFeasibleStartError when the optimum stays above 1e-9.
 */
ParamVector find_feasible_initial_theta(const TabularMdp& mdp, const FeatureMap& phi,
                                        const DeterministicPolicy& mu0,
                                        const NumericPolicy& policy = default_policy());

/**
 * Evaluation step: maximize sum_{s,a} w(s,a) (Phi theta)(s,a) subject to
 *   (I - gamma P Pi_mu) Phi theta <= r      (Bellman inequality)
 *   -Phi theta <= -f_k                      (floor)
 * Requires strictly positive weights and T_mu f_k >= f_k - 1e-7.
 * theta_hint, when given, must satisfy Phi theta_hint = f_k; the program is
 * then solved in shifted variables so the simplex starts at the feasible
 * f_k vertex. Infeasible or Unbounded solver statuses violate the operation's
 * contract and abort.
 */
ParamVector rpi_policy_evaluation(const TabularMdp& mdp, const FeatureMap& phi,
                                  const DeterministicPolicy& mu_k, const QTable& f_k,
                                  const QTable& weights, const ParamVector& theta_hint = {},
                                  const NumericPolicy& policy = default_policy());

/// Full run: feasible start under the greedy-of-zero policy, then K
/// evaluation/improvement rounds. Every record carries the exact Q of its
/// policy for diagnostics.
RunTrace rpi_run(const TabularMdp& mdp, const FeatureMap& phi, int iterations,
                 const QTable& weights, std::uint64_t seed,
                 const NumericPolicy& policy = default_policy());

/// mu_{k+1} greedy w.r.t. Phi theta_k; theta_{k+1} the least-squares fit of
/// the m-fold Bellman image of Phi theta_k under mu_{k+1}. m = 1 is Fitted
/// Q Iteration.
RunTrace ampiq_run(const TabularMdp& mdp, const FeatureMap& phi, const ParamVector& theta0,
                   int m, int iterations);

/// Unnormalized discounted state visitation: rho = (I - gamma P_mu^T)^{-1} nu.
Vec discounted_occupancy(const TabularMdp& mdp, const StochasticPolicy& policy, const Vec& nu);

/**
 * KL-constrained improvement over stochastic policies:
 *   maximize sum_s rho(s) sum_a pi(a|s) A(s,a)
 *   s.t.     sum_s rho(s) KL(mu_k(.|s) || pi(.|s)) <= delta,
 * solved within the tilted family pi_eta(a|s) ~ mu_k(a|s) exp(A(s,a)/eta)
 * by temperature bisection (50 iterations, bracket [1e-6, 1e6], widened once
 * before a hard error). Returns the low-temperature family member directly
 * when even that satisfies the constraint.
 */
StochasticPolicy trpo_policy_update(const TabularMdp& mdp, const StochasticPolicy& mu_k,
                                    const QTable& advantage, const Vec& rho, double delta);

/// Trust-region baseline: advantage from the linear critic, tilted policy
/// update, then a least-squares critic refit against the exact Q of the new
/// policy. nu empty selects the uniform state distribution.
RunTrace trpo_run(const TabularMdp& mdp, const FeatureMap& phi, const ParamVector& theta0,
                  double delta, int iterations, const Vec& nu = {});

}  // namespace rpi

#endif  // RPI_MODEL_BASED_HPP_
