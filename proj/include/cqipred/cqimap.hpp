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

#ifndef CQIPRED_CQIMAP_HPP
#define CQIPRED_CQIMAP_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>

#include "cqipred/grid.hpp"

namespace cqipred::cqimap {

inline constexpr int kCqiLevels = 16;

/// SINR thresholds T1..T15 (dB) and per-CQI spectral efficiencies (bits/s/Hz).
/// CQI i is reported for SINR >= T_i; CQI 0 below T_1.
struct CqiTable {
    std::array<double, kCqiLevels - 1> thresholds_db;
    std::array<double, kCqiLevels> efficiencies;

    /// Thresholds strictly ascending, efficiencies nondecreasing with e0 = 0.
    void validate() const;

    static CqiTable defaults();
    static CqiTable from_stream(std::istream& is, const std::string& origin);
    static CqiTable from_file(const std::filesystem::path& path);
    void save(std::ostream& os) const;
    void save(const std::filesystem::path& path) const;
};

/// Largest i with sinr_db >= T_i; 0 when below every threshold.
int sinr_to_cqi(double sinr_db, const CqiTable& table);

double cqi_to_efficiency(int cqi, const CqiTable& table);

using CqiMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct CqiGrid {
    CqiMatrix data;
    double dt_ms = 1.0;
    gridio::ScenarioMeta meta;

    Eigen::Index n_subframes() const { return data.rows(); }
    Eigen::Index n_rb() const { return data.cols(); }

    /// CQI values widened to float, for feeding the predictor.
    gridio::GridMatrix as_reals() const;
};

/// Elementwise sinr_to_cqi; shape and metadata preserved.
CqiGrid map_grid(const gridio::SinrGrid& sinr, const CqiTable& table);

} // namespace cqipred::cqimap

#endif // CQIPRED_CQIMAP_HPP
