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

#include "rpi/cartpole.hpp"

#include <cmath>
#include <stdexcept>

namespace rpi::cartpole {

std::pair<double, double> accelerations(const State& state, double force) {
    const double cos_t = std::cos(state.theta);
    const double sin_t = std::sin(state.theta);
    const double total_mass = kMassCart + kMassPole;
    const double polemass_length = kMassPole * kHalfLength;

    const double temp =
        (force + polemass_length * state.theta_dot * state.theta_dot * sin_t) / total_mass;
    const double theta_acc = (kGravity * sin_t - cos_t * temp) /
                             (kHalfLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / total_mass));
    const double x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;
    return {x_acc, theta_acc};
}

State integrate(const State& state, double force) {
    const auto [x_acc, theta_acc] = accelerations(state, force);
    State next;
    next.x_dot = state.x_dot + kTau * x_acc;
    next.x = state.x + kTau * next.x_dot;
    next.theta_dot = state.theta_dot + kTau * theta_acc;
    next.theta = state.theta + kTau * next.theta_dot;
    return next;
}

State CartPole::reset() {
    state_.x = rng_.uniform(-0.05, 0.05);
    state_.x_dot = rng_.uniform(-0.05, 0.05);
    state_.theta = rng_.uniform(-0.05, 0.05);
    state_.theta_dot = rng_.uniform(-0.05, 0.05);
    steps_ = 0;
    done_ = false;
    return state_;
}

StepResult CartPole::step(int action) {
    if (action != 0 && action != 1) throw std::invalid_argument("CartPole::step: action must be 0 or 1");
    if (done_) throw std::logic_error("CartPole::step: episode finished; call reset");

    state_ = integrate(state_, action == 1 ? kForceMag : -kForceMag);
    ++steps_;

    StepResult result;
    result.next_state = state_;
    result.reward = 1.0;
    result.terminated =
        std::fabs(state_.theta) > kThetaThreshold || std::fabs(state_.x) > kXThreshold;
    result.truncated = !result.terminated && steps_ >= kMaxEpisodeSteps;
    done_ = result.terminated || result.truncated;
    return result;
}

std::pair<double, double> rollout_return(CartPole& env,
                                         const std::function<int(const State&)>& select_action,
                                         double gamma, int max_steps) {
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw std::invalid_argument("rollout_return: gamma must lie in [0, 1]");
    State s = env.reset();
    double discounted = 0.0;
    double undiscounted = 0.0;
    double weight = 1.0;
    for (int t = 0; t < max_steps; ++t) {
        const StepResult r = env.step(select_action(s));
        discounted += weight * r.reward;
        undiscounted += r.reward;
        weight *= gamma;
        if (r.terminated || r.truncated) break;
        s = r.next_state;
    }
    return {discounted, undiscounted};
}

double max_discounted_return(double gamma) {
    if (gamma == 1.0) return static_cast<double>(kMaxEpisodeSteps);
    return (1.0 - std::pow(gamma, kMaxEpisodeSteps)) / (1.0 - gamma);
}

}  // namespace rpi::cartpole
