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

#include "rpi/inventory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rpi {

Vec uniform_demand(int capacity) {
    if (capacity < 1) throw std::invalid_argument("uniform_demand: capacity must be >= 1");
    return Vec(static_cast<std::size_t>(capacity) + 1, 1.0 / (capacity + 1));
}

TabularMdp build_inventory_mdp(const InventoryParams& params) {
    const int M = params.capacity;
    if (M < 1) throw std::invalid_argument("build_inventory_mdp: capacity must be >= 1");
    if (params.demand.size() != static_cast<std::size_t>(M) + 1)
        throw std::invalid_argument("build_inventory_mdp: demand must cover 0..M");
    double mass = 0.0;
    for (double p : params.demand) {
        if (p < 0.0) throw std::invalid_argument("build_inventory_mdp: negative demand mass");
        mass += p;
    }
    if (std::fabs(mass - 1.0) > 1e-12)
        throw std::invalid_argument("build_inventory_mdp: demand must sum to 1");

    const std::size_t S = static_cast<std::size_t>(M) + 1;
    Vec transition(S * S * S, 0.0);
    Vec reward(S * S, 0.0);

    for (int s = 0; s <= M; ++s)
        for (int a = 0; a <= M; ++a) {
            const int stocked = std::min(s + a, M);
            const std::size_t pair = static_cast<std::size_t>(s) * S + static_cast<std::size_t>(a);
            double* row = transition.data() + pair * S;
            double expected = 0.0;
            for (int d = 0; d <= M; ++d) {
                const double p = params.demand[static_cast<std::size_t>(d)];
                if (p == 0.0) continue;
                const int next = std::max(stocked - d, 0);
                row[static_cast<std::size_t>(next)] += p;
                expected += p * (params.price * std::min(stocked, d) - params.unit_cost * a -
                                 params.holding_cost * std::max(stocked - d, 0));
            }
            reward[pair] = expected;
        }

    return TabularMdp(S, S, std::move(transition), std::move(reward), params.discount);
}

}  // namespace rpi
