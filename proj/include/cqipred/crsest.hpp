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

#ifndef CQIPRED_CRSEST_HPP
#define CQIPRED_CRSEST_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "cqipred/errors.hpp"

namespace cqipred::crsest {

inline constexpr int kSymbolsPerSubframe = 14; // normal cyclic prefix
inline constexpr int kSubcarriersPerRb = 12;
inline constexpr int kPilotsPerRb = 8;
inline constexpr int kMaxCellId = 503;

/// Reported SINR range; estimates are clipped into it.
inline constexpr double kSinrFloorDb = -20.0;
inline constexpr double kSinrCapDb = 40.0;

/// Received OFDM subframe: 14 symbols x (12 * n_rb) subcarriers.
using ResourceGrid = Eigen::Matrix<std::complex<float>, Eigen::Dynamic, Eigen::Dynamic>;

/// Single-port reference-signal pattern: pilot symbols {0, 4, 7, 11}; within
/// a pilot symbol, every 6th subcarrier starting at v_shift = cell_id mod 6
/// (symbols 0 and 7) or (v_shift + 3) mod 6 (symbols 4 and 11).
struct CrsLayout {
    int cell_id = 0;
    int n_rb = 0;
    int v_shift = 0;
    /// (symbol, subcarrier), sorted by symbol then subcarrier. Pilot i of the
    /// subframe corresponds to entry i of a pilot sequence.
    std::vector<std::pair<int, int>> positions;

    int n_pilots() const { return static_cast<int>(positions.size()); }
};

CrsLayout crs_positions(int cell_id, int n_rb);

/// Deterministic unit-modulus QPSK pilot values keyed by (cell_id, subframe).
/// The receiver regenerates the same sequence to remove the pilot modulation.
Eigen::VectorXcf crs_sequence(int cell_id, std::uint32_t subframe_index, int n_pilots);

/// Simulated downlink subframe: y = H .* x + n at pilot positions, zeros on
/// data positions. `channel` is the full 14 x (12 n_rb) response; noise is
/// circular complex Gaussian with per-RE variance noise_var, seeded.
ResourceGrid build_subframe(const CrsLayout& layout, const Eigen::VectorXcf& pilots,
                            const ResourceGrid& channel, double noise_var, std::uint64_t seed);

/// Constant-in-time channel helper: replicates a per-subcarrier response
/// across the 14 symbols of one subframe.
ResourceGrid replicate_channel(const Eigen::VectorXcf& per_subcarrier, int n_rb);

/// Per-RB signal/noise power estimates from least-squares pilot estimates:
/// noise = half the mean squared difference of frequency-adjacent pilot pairs
/// within a symbol, signal = mean |h_ls|^2 minus that noise estimate.
struct RbPowerEstimate {
    double signal = 0.0; // may be negative before flooring in the dB step
    double noise = 0.0;
};

std::vector<RbPowerEstimate> estimate_rb_powers(const ResourceGrid& received,
                                                const CrsLayout& layout,
                                                const Eigen::VectorXcf& expected_pilots);

/// Per-RB SINR (dB), clipped to [kSinrFloorDb, kSinrCapDb].
Eigen::VectorXf estimate_sinr(const ResourceGrid& received, const CrsLayout& layout,
                              const Eigen::VectorXcf& expected_pilots);

} // namespace cqipred::crsest

#endif // CQIPRED_CRSEST_HPP
