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

#ifndef RPI_CARTPOLE_HPP_
#define RPI_CARTPOLE_HPP_

#include <functional>
#include <utility>

#include "rpi/rng.hpp"

namespace rpi::cartpole {

struct State {
    double x = 0.0;          // cart position (m)
    double x_dot = 0.0;      // cart velocity (m/s)
    double theta = 0.0;      // pole angle (rad)
    double theta_dot = 0.0;  // pole angular velocity (rad/s)
};

struct StepResult {
    State next_state;
    double reward = 0.0;  // 1 on every step, including the terminating one
    bool terminated = false;
    bool truncated = false;
};

// Canonical constants of the published cart-pole system.
inline constexpr double kGravity = 9.8;
inline constexpr double kMassCart = 1.0;
inline constexpr double kMassPole = 0.1;
inline constexpr double kHalfLength = 0.5;
inline constexpr double kForceMag = 10.0;
inline constexpr double kTau = 0.02;  // seconds per step
inline constexpr double kThetaThreshold = 12.0 * 3.14159265358979323846 / 180.0;
inline constexpr double kXThreshold = 2.4;
inline constexpr int kMaxEpisodeSteps = 500;

/// (x_acc, theta_acc) of the canonical dynamics under a horizontal force.
std::pair<double, double> accelerations(const State& state, double force);

/// One semi-implicit Euler step under the given force; no termination logic.
State integrate(const State& state, double force);

/**
 * Episode environment with the published termination semantics: terminate
 * when |theta| > 12 degrees or |x| > 2.4, truncate at 500 steps. Fully
 * deterministic given the reset stream.
 */
class CartPole {
  public:
    explicit CartPole(Rng rng) : rng_(rng) {}

    /// New episode; each state coordinate i.i.d. uniform on [-0.05, 0.05].
    State reset();

    /// action 0 pushes left, 1 pushes right. Requires an active episode.
    StepResult step(int action);

    const State& state() const { return state_; }
    int steps_taken() const { return steps_; }

  private:
    Rng rng_;
    State state_;
    int steps_ = 0;
    bool done_ = true;
};

/// Runs one episode under the supplied action selector and returns
/// (discounted return, undiscounted return).
std::pair<double, double> rollout_return(CartPole& env,
                                         const std::function<int(const State&)>& select_action,
                                         double gamma, int max_steps = kMaxEpisodeSteps);

/// Largest attainable discounted return: a full-length episode of unit
/// rewards, sum_{t<500} gamma^t.
double max_discounted_return(double gamma);

}  // namespace rpi::cartpole

#endif  // RPI_CARTPOLE_HPP_
