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

#include <cmath>
#include <sstream>

#include "cqipred/grid.hpp"
#include "testutil.hpp"

using namespace cqipred;
using namespace cqipred::gridio;

namespace {

SinrGrid small_grid(std::initializer_list<std::initializer_list<float>> rows) {
    SinrGrid grid;
    const auto t_count = static_cast<Eigen::Index>(rows.size());
    const auto r_count = static_cast<Eigen::Index>(rows.begin()->size());
    grid.data.resize(t_count, r_count);
    Eigen::Index t = 0;
    for (const auto& row : rows) {
        Eigen::Index r = 0;
        for (float v : row)
            grid.data(t, r++) = v;
        ++t;
    }
    grid.meta.name = "test";
    grid.meta.n_rb = static_cast<int>(r_count);
    grid.meta.bandwidth_hz = nominal_bandwidth_hz(static_cast<int>(r_count));
    return grid;
}

} // namespace

TEST_CASE("binary round-trip is bit-exact") {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 200; ++i) {
        std::uniform_int_distribution<Eigen::Index> dim(1, 9);
        const auto grid = testutil::random_grid(rng, dim(rng), dim(rng));
        std::stringstream buf;
        save_grid(grid, buf, GridFormat::binary);
        const auto loaded = load_grid(buf, GridFormat::binary);
        REQUIRE(loaded.data.rows() == grid.data.rows());
        REQUIRE(loaded.data.cols() == grid.data.cols());
        CHECK(std::memcmp(loaded.data.data(), grid.data.data(),
                          sizeof(float) * static_cast<std::size_t>(grid.data.size())) == 0);
        CHECK(loaded.dt_ms == grid.dt_ms);
        CHECK(loaded.meta.name == grid.meta.name);
        CHECK(loaded.meta.n_rb == grid.meta.n_rb);
    }
}

TEST_CASE("2x2 grid file round-trip through disk") {
    testutil::TmpDir tmp("gridio");
    const auto grid = small_grid({{1.5f, -2.25f}, {3.0f, 4.125f}});
    const auto path = tmp.file("g.sgr");
    save_grid(grid, path, GridFormat::binary);
    const auto loaded = load_grid(path, GridFormat::binary);
    CHECK(loaded.data == grid.data);
}

TEST_CASE("grid with NaN is rejected before any write") {
    testutil::TmpDir tmp("gridio");
    auto grid = small_grid({{1.0f, 2.0f}, {3.0f, std::nanf("")}});
    const auto path = tmp.file("bad.sgr");
    CHECK_THROWS_AS(save_grid(grid, path, GridFormat::binary), ValidationError);
    CHECK(!std::filesystem::exists(path) || std::filesystem::file_size(path) == 0);
}

TEST_CASE("1000x50 file size equals header plus payload") {
    std::mt19937_64 rng(7);
    const auto grid = testutil::random_grid(rng, 1000, 50);
    std::stringstream buf;
    save_grid(grid, buf, GridFormat::binary);
    const std::string bytes = buf.str();

    // Independent byte count: fixed preamble + the JSON header this format
    // pins (sorted keys, no padding) + T*R*4 payload.
    REQUIRE(bytes.size() > 8);
    const auto head_len = static_cast<std::size_t>(static_cast<unsigned char>(bytes[4])) |
                          (static_cast<std::size_t>(static_cast<unsigned char>(bytes[5])) << 8) |
                          (static_cast<std::size_t>(static_cast<unsigned char>(bytes[6])) << 16) |
                          (static_cast<std::size_t>(static_cast<unsigned char>(bytes[7])) << 24);
    CHECK(bytes.size() == 4 + 4 + head_len + 1000 * 50 * 4);
    CHECK(bytes.substr(0, 4) == "SGR1");
}

TEST_CASE("truncated payload raises a framing error") {
    std::mt19937_64 rng(3);
    const auto grid = testutil::random_grid(rng, 4, 3);
    std::stringstream buf;
    save_grid(grid, buf, GridFormat::binary);
    std::string bytes = buf.str();
    bytes.resize(bytes.size() - 5);
    std::stringstream cut(bytes);
    CHECK_THROWS_AS(load_grid(cut, GridFormat::binary), FramingError);
}

TEST_CASE("bad magic raises a schema error") {
    std::stringstream buf("XXXX not a grid at all");
    CHECK_THROWS_AS(load_grid(buf, GridFormat::binary), SchemaError);
}

TEST_CASE("csv round-trip preserves values") {
    std::mt19937_64 rng(11);
    const auto grid = testutil::random_grid(rng, 6, 4);
    std::stringstream buf;
    save_grid(grid, buf, GridFormat::csv);
    const auto loaded = load_grid(buf, GridFormat::csv);
    REQUIRE(loaded.data.rows() == 6);
    REQUIRE(loaded.data.cols() == 4);
    CHECK(loaded.meta.source == GridSource::imported);
    for (Eigen::Index t = 0; t < 6; ++t)
        for (Eigen::Index r = 0; r < 4; ++r)
            CHECK(loaded.data(t, r) == doctest::Approx(grid.data(t, r)).epsilon(1e-6));
}

TEST_CASE("csv with a non-numeric cell names row and column") {
    std::stringstream buf("rb0,rb1\n1.0,2.0\n3.0,oops\n");
    try {
        load_grid(buf, GridFormat::csv);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 3") != std::string::npos);
        CHECK(msg.find("column 1") != std::string::npos);
    }
}

TEST_CASE("delta CDF of a constant grid is a unit step at zero") {
    const auto grid = small_grid({{5.0f, 5.0f}, {5.0f, 5.0f}, {5.0f, 5.0f}});
    const auto cdf = delta_cdf(grid);
    CHECK(cdf.query(0.0) == 1.0);
    CHECK(cdf.query(-0.001) == 0.0);
}

TEST_CASE("delta CDF of [[0],[1],[3]] has samples {1,2}") {
    const auto grid = small_grid({{0.0f}, {1.0f}, {3.0f}});
    const auto cdf = delta_cdf(grid);
    REQUIRE(cdf.size() == 2);
    CHECK(cdf.query(1.0) == 0.5);
    CHECK(cdf.query(2.0) == 1.0);
    CHECK(cdf.query(0.5) == 0.0);
}

TEST_CASE("delta CDF sample count is (T-1)*R") {
    std::mt19937_64 rng(5);
    const auto grid = testutil::random_grid(rng, 17, 9);
    CHECK(delta_cdf(grid).size() == 16 * 9);
}

TEST_CASE("delta CDF is shift-invariant") {
    std::mt19937_64 rng(6);
    auto grid = testutil::random_grid(rng, 12, 5);
    const auto cdf = delta_cdf(grid);
    auto shifted = grid;
    shifted.data.array() += 17.25f;
    const auto cdf2 = delta_cdf(shifted);
    REQUIRE(cdf.size() == cdf2.size());
    for (std::size_t i = 0; i < cdf.size(); ++i)
        CHECK(cdf.samples()[i] == doctest::Approx(cdf2.samples()[i]).epsilon(1e-5));
}

TEST_CASE("signed delta CDF keeps signs") {
    const auto grid = small_grid({{0.0f}, {-2.0f}});
    const auto cdf = delta_cdf(grid, true);
    CHECK(cdf.query(-2.0) == 1.0);
    CHECK(cdf.query(-3.0) == 0.0);
}

TEST_CASE("delta CDF needs at least two subframes") {
    const auto grid = small_grid({{1.0f, 2.0f}});
    CHECK_THROWS_AS(delta_cdf(grid), InsufficientDataError);
}

TEST_CASE("split follows floor arithmetic") {
    std::mt19937_64 rng(9);
    {
        const auto grid = testutil::random_grid(rng, 10, 3);
        const auto [train, test] = split(grid, 0.8);
        CHECK(train.n_subframes() == 8);
        CHECK(test.n_subframes() == 2);
    }
    {
        const auto grid = testutil::random_grid(rng, 2, 3);
        const auto [train, test] = split(grid, 0.5);
        CHECK(train.n_subframes() == 1);
        CHECK(test.n_subframes() == 1);
    }
}

TEST_CASE("split parts stack back to the original") {
    std::mt19937_64 rng(10);
    const auto grid = testutil::random_grid(rng, 23, 4);
    const auto [train, test] = split(grid, 0.61);
    GridMatrix stacked(grid.data.rows(), grid.data.cols());
    stacked.topRows(train.n_subframes()) = train.data;
    stacked.bottomRows(test.n_subframes()) = test.data;
    CHECK(stacked == grid.data);
    CHECK(train.meta.name == grid.meta.name);
}

TEST_CASE("split rejects fractions outside (0,1) and empty parts") {
    std::mt19937_64 rng(12);
    const auto grid = testutil::random_grid(rng, 10, 2);
    CHECK_THROWS_AS(split(grid, 0.0), ArgumentError);
    CHECK_THROWS_AS(split(grid, 1.0), ArgumentError);
    CHECK_THROWS_AS(split(grid, -0.2), ArgumentError);
    const auto tiny = testutil::random_grid(rng, 3, 2);
    CHECK_THROWS_AS(split(tiny, 0.01), InsufficientDataError);
}

TEST_CASE("windows count, indexing and boundaries") {
    std::mt19937_64 rng(13);
    const auto grid = testutil::random_grid(rng, 5, 3);
    const SlidingWindows windows(grid, 3, 1);
    CHECK(windows.size() == 2);
    // First pair's target is row w.
    CHECK(Eigen::RowVectorXf(windows.target(0)) == Eigen::RowVectorXf(grid.data.row(3)));
    CHECK(Eigen::MatrixXf(windows.window(0)) == Eigen::MatrixXf(grid.data.topRows(3)));

    const auto exact = testutil::random_grid(rng, 4, 2);
    const SlidingWindows one(exact, 3, 1);
    CHECK(one.size() == 1);

    CHECK_THROWS_AS(SlidingWindows(exact, 4, 1), InsufficientDataError);
}

TEST_CASE("windows jointly cover every grid row") {
    std::mt19937_64 rng(14);
    const auto grid = testutil::random_grid(rng, 11, 2);
    const int w = 4, horizon = 2;
    const SlidingWindows windows(grid, w, horizon);
    std::vector<bool> covered(static_cast<std::size_t>(grid.n_subframes()), false);
    for (std::size_t i = 0; i < windows.size(); ++i) {
        for (int t = 0; t < w; ++t)
            covered[i + static_cast<std::size_t>(t)] = true;
        covered[i + static_cast<std::size_t>(w + horizon - 1)] = true;
    }
    for (bool c : covered)
        CHECK(c);
}

TEST_CASE("empirical CDF quantiles") {
    EmpiricalCdf cdf({3.0f, 1.0f, 2.0f, 4.0f});
    CHECK(cdf.quantile(0.5) == 2.0f);
    CHECK(cdf.quantile(1.0) == 4.0f);
    CHECK(cdf.quantile(0.25) == 1.0f);
    CHECK(cdf.query(2.5) == 0.5);
    const auto pts = cdf.points(3);
    REQUIRE(pts.size() == 3);
    CHECK(pts.front().first == 1.0);
    CHECK(pts.back().second == 1.0);
}
