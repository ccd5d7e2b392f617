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

#ifndef CQIPRED_TESTS_TESTUTIL_HPP
#define CQIPRED_TESTS_TESTUTIL_HPP

#include <filesystem>
#include <random>
#include <string>

#include "cqipred/grid.hpp"

namespace testutil {

/// Temporary directory wiped on destruction.
class TmpDir {
  public:
    explicit TmpDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path();
        path_ = base / ("cqipred-" + tag + "-" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path_);
    }
    ~TmpDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline cqipred::gridio::SinrGrid random_grid(std::mt19937_64& rng, Eigen::Index t_count,
                                             Eigen::Index r_count) {
    std::uniform_real_distribution<float> value(-25.0f, 45.0f);
    cqipred::gridio::SinrGrid grid;
    grid.data.resize(t_count, r_count);
    for (Eigen::Index t = 0; t < t_count; ++t)
        for (Eigen::Index r = 0; r < r_count; ++r)
            grid.data(t, r) = value(rng);
    grid.dt_ms = 1.0;
    grid.meta.name = "random";
    grid.meta.n_rb = static_cast<int>(r_count);
    grid.meta.bandwidth_hz = cqipred::gridio::nominal_bandwidth_hz(static_cast<int>(r_count));
    return grid;
}

} // namespace testutil

#endif // CQIPRED_TESTS_TESTUTIL_HPP
