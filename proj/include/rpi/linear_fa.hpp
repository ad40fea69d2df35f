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

#ifndef RPI_LINEAR_FA_HPP_
#define RPI_LINEAR_FA_HPP_

#include <cstdint>

#include "rpi/mdp.hpp"

namespace rpi {

using ParamVector = Vec;

/// Feature matrix Phi of shape (S*A) x d; rows follow the flat (s,a) order
/// of TabularMdp, so Phi theta lines up with QTable coordinate by coordinate.
struct FeatureMap {
    Matrix features;
    std::size_t dim() const { return features.cols(); }
};

/// Entries i.i.d. uniform on [low, high) from the seeded stream.
FeatureMap sample_features(std::size_t n_states, std::size_t n_actions, std::size_t dim,
                           double low, double high, std::uint64_t seed);

/// Phi theta.
QTable evaluate(const FeatureMap& phi, const ParamVector& theta);

/// Phi = I of size S*A; makes the function class the whole of R^{SA}.
FeatureMap identity_features(std::size_t n_states, std::size_t n_actions);

}  // namespace rpi

#endif  // RPI_LINEAR_FA_HPP_
