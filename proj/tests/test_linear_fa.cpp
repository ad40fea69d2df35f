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

#include <cmath>

#include <doctest.h>

#include "rpi/linear_fa.hpp"
#include "rpi/rng.hpp"

using namespace rpi;

TEST_CASE("sample_features: degenerate interval rejected, ranges honored") {
    CHECK_THROWS_AS(sample_features(2, 2, 3, 1.0, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(sample_features(2, 2, 0, 0.0, 1.0, 0), std::invalid_argument);

    const FeatureMap tiny = sample_features(1, 1, 1, -2.0, 3.0, 5);
    REQUIRE(tiny.features.rows() == 1);
    REQUIRE(tiny.dim() == 1);
    CHECK(tiny.features(0, 0) >= -2.0);
    CHECK(tiny.features(0, 0) < 3.0);
}

TEST_CASE("sample_features: same seed, same matrix; new seed, new matrix") {
    const FeatureMap a = sample_features(5, 4, 6, 1.0, 5.0, 77);
    const FeatureMap b = sample_features(5, 4, 6, 1.0, 5.0, 77);
    CHECK(a.features.data() == b.features.data());

    const FeatureMap c = sample_features(5, 4, 6, 1.0, 5.0, 78);
    CHECK(a.features.data() != c.features.data());

    for (double v : a.features.data()) {
        CHECK(v >= 1.0);
        CHECK(v < 5.0);
    }
}

TEST_CASE("evaluate: zero parameters, identity features, and dot-product oracle") {
    const FeatureMap phi = sample_features(4, 3, 5, -1.0, 1.0, 3);
    CHECK(inf_norm(evaluate(phi, ParamVector(5, 0.0))) == 0.0);
    CHECK_THROWS_AS(evaluate(phi, ParamVector(4, 0.0)), std::invalid_argument);

    const FeatureMap id = identity_features(3, 2);
    ParamVector theta{1.0, -2.0, 3.0, 0.5, 0.0, 9.0};
    CHECK(evaluate(id, theta) == theta);

    Rng rng(4);
    ParamVector t(5);
    for (double& v : t) v = rng.uniform(-2.0, 2.0);
    const QTable out = evaluate(phi, t);
    for (std::size_t i = 0; i < out.size(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < 5; ++j) dot += phi.features(i, j) * t[j];
        CHECK(out[i] == doctest::Approx(dot).epsilon(1e-13));
    }
}

TEST_CASE("identity_features: single pair and linearity") {
    const FeatureMap one = identity_features(1, 1);
    REQUIRE(one.features.rows() == 1);
    CHECK(one.features(0, 0) == 1.0);

    const FeatureMap phi = sample_features(6, 3, 4, -2.0, 2.0, 6);
    Rng rng(6);
    for (int trial = 0; trial < 30; ++trial) {
        ParamVector t1(4);
        ParamVector t2(4);
        ParamVector sum(4);
        for (std::size_t j = 0; j < 4; ++j) {
            t1[j] = rng.uniform(-3.0, 3.0);
            t2[j] = rng.uniform(-3.0, 3.0);
            sum[j] = t1[j] + t2[j];
        }
        const QTable lhs = evaluate(phi, sum);
        const QTable a = evaluate(phi, t1);
        const QTable b = evaluate(phi, t2);
        for (std::size_t i = 0; i < lhs.size(); ++i)
            CHECK(std::fabs(lhs[i] - a[i] - b[i]) <= 1e-12);
    }
}
