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

#ifndef RPI_INVENTORY_HPP_
#define RPI_INVENTORY_HPP_

#include "rpi/mdp.hpp"

namespace rpi {

/**
 * Inventory control with capacity M: states and actions are stock levels
 * 0..M, demand is drawn per day from a fixed distribution over 0..M.
 * The post-order stock is s_hat = min(s + a, M); demand d moves the system
 * to max(s_hat - d, 0) and yields p*min(s_hat, d) - c*a - h*max(s_hat - d, 0).
 * Procurement is charged on the full order a even when the stock clips at
 * capacity.
 */
struct InventoryParams {
    int capacity = 49;       // M
    double unit_cost = 5.0;  // c
    double holding_cost = 1.0;  // h
    double price = 10.0;     // p
    Vec demand;              // probabilities over demand 0..M
    double discount = 0.9;
};

/// Demand uniform over {0, ..., M}.
Vec uniform_demand(int capacity);

/// Dense MDP with S = A = M+1 and rewards stored as exact expectations
/// over the demand distribution.
TabularMdp build_inventory_mdp(const InventoryParams& params);

}  // namespace rpi

#endif  // RPI_INVENTORY_HPP_
