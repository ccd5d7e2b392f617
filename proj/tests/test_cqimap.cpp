// SPDX-License-Identifier: Apache-2.0
//
// cqipred: per-resource-block channel quality measurement and prediction
// Copyright (C) 2026 the cqipred authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "cqipred/cqimap.hpp"
#include "testutil.hpp"

using namespace cqipred;
using namespace cqipred::cqimap;

TEST_CASE("mapping examples against the default table") {
    const auto table = CqiTable::defaults();
    CHECK(sinr_to_cqi(-10.0, table) == 0);
    CHECK(sinr_to_cqi(0.2, table) == 4);
    CHECK(sinr_to_cqi(23.0, table) == 15);
}

TEST_CASE("threshold boundaries are inclusive from above") {
    const auto table = CqiTable::defaults();
    for (int i = 1; i <= 15; ++i) {
        const double t = table.thresholds_db[static_cast<std::size_t>(i - 1)];
        CHECK(sinr_to_cqi(t, table) == i);
        CHECK(sinr_to_cqi(t - 1e-9, table) == i - 1);
    }
}

TEST_CASE("non-finite SINR is rejected") {
    const auto table = CqiTable::defaults();
    CHECK_THROWS_AS(sinr_to_cqi(std::nan(""), table), ArgumentError);
    CHECK_THROWS_AS(sinr_to_cqi(std::numeric_limits<double>::infinity(), table), ArgumentError);
}

TEST_CASE("monotonicity over random pairs") {
    const auto table = CqiTable::defaults();
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> sinr(-30.0, 40.0);
    for (int i = 0; i < 2000; ++i) {
        double a = sinr(rng), b = sinr(rng);
        if (a > b)
            std::swap(a, b);
        CHECK(sinr_to_cqi(a, table) <= sinr_to_cqi(b, table));
    }
}

TEST_CASE("efficiency lookup") {
    const auto table = CqiTable::defaults();
    CHECK(cqi_to_efficiency(0, table) == 0.0);
    for (int i = 0; i + 1 < kCqiLevels; ++i)
        CHECK(cqi_to_efficiency(i, table) <= cqi_to_efficiency(i + 1, table));
    CHECK_THROWS_AS(cqi_to_efficiency(16, table), ArgumentError);
    CHECK_THROWS_AS(cqi_to_efficiency(-1, table), ArgumentError);
}

TEST_CASE("map_grid saturates, floors, and preserves shape") {
    const auto table = CqiTable::defaults();
    std::mt19937_64 rng(22);
    auto grid = testutil::random_grid(rng, 3, 2);

    grid.data.setConstant(100.0f);
    CHECK((map_grid(grid, table).data.array() == 15).all());

    grid.data.setConstant(-100.0f);
    CHECK((map_grid(grid, table).data.array() == 0).all());

    grid.data << -10.0f, 0.2f, 23.0f, 5.0f, 1.0f, 1.0f;
    const auto cqi = map_grid(grid, table);
    CHECK(cqi.data(0, 0) == 0);
    CHECK(cqi.data(0, 1) == 4);
    CHECK(cqi.data(1, 0) == 15);
    CHECK(cqi.data(1, 1) == 6);
    CHECK(cqi.n_subframes() == grid.n_subframes());
    CHECK(cqi.n_rb() == grid.n_rb());
    CHECK(cqi.meta.name == grid.meta.name);
    CHECK(cqi.dt_ms == grid.dt_ms);
}

TEST_CASE("map_grid is a pure elementwise map") {
    const auto table = CqiTable::defaults();
    std::mt19937_64 rng(23);
    const auto grid = testutil::random_grid(rng, 7, 5);
    const auto cqi = map_grid(grid, table);
    for (Eigen::Index t = 0; t < grid.n_subframes(); ++t)
        for (Eigen::Index r = 0; r < grid.n_rb(); ++r)
            CHECK(cqi.data(t, r) == sinr_to_cqi(grid.data(t, r), table));
}

TEST_CASE("as_reals widens without changing values") {
    const auto table = CqiTable::defaults();
    std::mt19937_64 rng(24);
    const auto grid = testutil::random_grid(rng, 4, 3);
    const auto cqi = map_grid(grid, table);
    const auto reals = cqi.as_reals();
    for (Eigen::Index t = 0; t < grid.n_subframes(); ++t)
        for (Eigen::Index r = 0; r < grid.n_rb(); ++r)
            CHECK(reals(t, r) == static_cast<float>(cqi.data(t, r)));
}

TEST_CASE("table round-trips through its config format") {
    const auto table = CqiTable::defaults();
    std::stringstream buf;
    table.save(buf);
    const auto loaded = CqiTable::from_stream(buf, "test");
    CHECK(loaded.thresholds_db == table.thresholds_db);
    CHECK(loaded.efficiencies == table.efficiencies);
}

TEST_CASE("invalid tables are rejected") {
    auto table = CqiTable::defaults();
    table.thresholds_db[3] = table.thresholds_db[2]; // not strictly ascending
    CHECK_THROWS_AS(table.validate(), ValidationError);

    auto table2 = CqiTable::defaults();
    table2.efficiencies[0] = 0.5;
    CHECK_THROWS_AS(table2.validate(), ValidationError);

    std::stringstream buf("thresholds_db = 1, 2\nefficiencies = 0, 1\n");
    CHECK_THROWS_AS(CqiTable::from_stream(buf, "test"), SchemaError);
}
