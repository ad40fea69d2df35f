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

#include "rpi/linear_fa.hpp"

#include <stdexcept>

#include "rpi/rng.hpp"

namespace rpi {

FeatureMap sample_features(std::size_t n_states, std::size_t n_actions, std::size_t dim,
                           double low, double high, std::uint64_t seed) {
    if (dim < 1) throw std::invalid_argument("sample_features: dim must be >= 1");
    if (!(low < high)) throw std::invalid_argument("sample_features: need low < high");
    Rng rng(seed);
    FeatureMap phi{Matrix(n_states * n_actions, dim)};
    for (double& v : phi.features.data()) v = rng.uniform(low, high);
    return phi;
}

QTable evaluate(const FeatureMap& phi, const ParamVector& theta) {
    if (theta.size() != phi.dim()) throw std::invalid_argument("evaluate: dimension mismatch");
    return matvec(phi.features, theta);
}

FeatureMap identity_features(std::size_t n_states, std::size_t n_actions) {
    return FeatureMap{Matrix::identity(n_states * n_actions)};
}

}  // namespace rpi
