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

#include "cqipred/crsest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "cqipred/common.hpp"

namespace cqipred::crsest {

namespace {

constexpr double kPowerEpsilon = 1e-12;
constexpr std::array<int, 4> kPilotSymbols = {0, 4, 7, 11};

// Pilot subcarrier offset alternates by 3 between consecutive pilot symbols.
int pilot_offset(int v_shift, int pilot_symbol_index) {
    return (pilot_symbol_index % 2 == 0) ? v_shift : (v_shift + 3) % 6;
}

} // namespace

CrsLayout crs_positions(int cell_id, int n_rb) {
    if (cell_id < 0 || cell_id > kMaxCellId)
        throw ArgumentError("cell_id out of range [0, 503]: " + std::to_string(cell_id));
    if (n_rb < 1)
        throw ArgumentError("n_rb must be positive");

    CrsLayout layout;
    layout.cell_id = cell_id;
    layout.n_rb = n_rb;
    layout.v_shift = cell_id % 6;
    const int k_count = kSubcarriersPerRb * n_rb;
    layout.positions.reserve(static_cast<std::size_t>(kPilotsPerRb) * n_rb);
    for (std::size_t si = 0; si < kPilotSymbols.size(); ++si) {
        const int offset = pilot_offset(layout.v_shift, static_cast<int>(si));
        for (int k = offset; k < k_count; k += 6)
            layout.positions.emplace_back(kPilotSymbols[si], k);
    }
    return layout;
}

Eigen::VectorXcf crs_sequence(int cell_id, std::uint32_t subframe_index, int n_pilots) {
    if (cell_id < 0 || cell_id > kMaxCellId)
        throw ArgumentError("cell_id out of range [0, 503]: " + std::to_string(cell_id));
    if (n_pilots < 1)
        throw ArgumentError("n_pilots must be positive");

    const std::uint64_t key =
        (static_cast<std::uint64_t>(cell_id) << 32) | static_cast<std::uint64_t>(subframe_index);
    std::mt19937_64 rng(splitmix64(key));

    static const float inv_sqrt2 = 1.0f / std::sqrt(2.0f);
    Eigen::VectorXcf seq(n_pilots);
    for (int i = 0; i < n_pilots; ++i) {
        const auto bits = static_cast<unsigned>(rng() & 0x3u);
        const float re = (bits & 1u) ? -inv_sqrt2 : inv_sqrt2;
        const float im = (bits & 2u) ? -inv_sqrt2 : inv_sqrt2;
        seq[i] = {re, im};
    }
    return seq;
}

ResourceGrid replicate_channel(const Eigen::VectorXcf& per_subcarrier, int n_rb) {
    if (per_subcarrier.size() != static_cast<Eigen::Index>(kSubcarriersPerRb) * n_rb)
        throw ArgumentError("per-subcarrier channel length does not match n_rb");
    ResourceGrid grid(kSymbolsPerSubframe, per_subcarrier.size());
    for (int s = 0; s < kSymbolsPerSubframe; ++s)
        grid.row(s) = per_subcarrier.transpose();
    return grid;
}

ResourceGrid build_subframe(const CrsLayout& layout, const Eigen::VectorXcf& pilots,
                            const ResourceGrid& channel, double noise_var, std::uint64_t seed) {
    const Eigen::Index k_count = static_cast<Eigen::Index>(kSubcarriersPerRb) * layout.n_rb;
    if (channel.rows() != kSymbolsPerSubframe || channel.cols() != k_count)
        throw ArgumentError("channel grid shape does not match layout");
    if (pilots.size() != layout.n_pilots())
        throw ArgumentError("pilot sequence length does not match layout (" +
                            std::to_string(pilots.size()) + " vs " +
                            std::to_string(layout.n_pilots()) + ")");
    if (noise_var < 0.0)
        throw ArgumentError("noise variance must be nonnegative");

    ResourceGrid grid = ResourceGrid::Zero(kSymbolsPerSubframe, k_count);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise_var / 2.0));
    for (int i = 0; i < layout.n_pilots(); ++i) {
        const auto [sym, sc] = layout.positions[static_cast<std::size_t>(i)];
        std::complex<float> y = channel(sym, sc) * pilots[i];
        if (noise_var > 0.0)
            y += std::complex<float>(static_cast<float>(gauss(rng)), static_cast<float>(gauss(rng)));
        grid(sym, sc) = y;
    }
    return grid;
}

std::vector<RbPowerEstimate> estimate_rb_powers(const ResourceGrid& received,
                                                const CrsLayout& layout,
                                                const Eigen::VectorXcf& expected_pilots) {
    const Eigen::Index k_count = static_cast<Eigen::Index>(kSubcarriersPerRb) * layout.n_rb;
    if (received.rows() != kSymbolsPerSubframe || received.cols() != k_count)
        throw ArgumentError("received grid shape does not match layout");
    if (expected_pilots.size() != layout.n_pilots())
        throw ArgumentError("expected pilot sequence length does not match layout");

    // Least-squares estimates grouped as (rb, symbol) -> pilots in frequency order.
    // positions are sorted by symbol then subcarrier, so a linear pass suffices.
    struct Accum {
        double power_sum = 0.0;
        double diff_sum = 0.0;
        int n_pilots = 0;
        int n_pairs = 0;
    };
    std::vector<Accum> acc(static_cast<std::size_t>(layout.n_rb));
    std::vector<int> symbol_count(static_cast<std::size_t>(layout.n_rb));

    int i = 0;
    const int n = layout.n_pilots();
    while (i < n) {
        const int sym = layout.positions[static_cast<std::size_t>(i)].first;
        // Walk one pilot symbol, tracking the previous estimate per RB.
        std::fill(symbol_count.begin(), symbol_count.end(), 0);
        int prev_rb = -1;
        std::complex<double> prev_h;
        while (i < n && layout.positions[static_cast<std::size_t>(i)].first == sym) {
            const int sc = layout.positions[static_cast<std::size_t>(i)].second;
            if (sc < 0 || sc >= k_count)
                throw ArgumentError("pilot subcarrier out of range");
            const int rb = sc / kSubcarriersPerRb;
            const std::complex<double> h =
                std::complex<double>(received(sym, sc)) / std::complex<double>(expected_pilots[i]);
            auto& a = acc[static_cast<std::size_t>(rb)];
            a.power_sum += std::norm(h);
            a.n_pilots += 1;
            symbol_count[static_cast<std::size_t>(rb)] += 1;
            if (rb == prev_rb) {
                a.diff_sum += std::norm(h - prev_h);
                a.n_pairs += 1;
            }
            prev_rb = rb;
            prev_h = h;
            ++i;
        }
        for (int rb = 0; rb < layout.n_rb; ++rb)
            if (symbol_count[static_cast<std::size_t>(rb)] < 2)
                throw EstimationError("resource block " + std::to_string(rb) +
                                      " has fewer than 2 pilots in symbol " + std::to_string(sym));
    }

    std::vector<RbPowerEstimate> out(static_cast<std::size_t>(layout.n_rb));
    for (int rb = 0; rb < layout.n_rb; ++rb) {
        const auto& a = acc[static_cast<std::size_t>(rb)];
        if (a.n_pairs == 0)
            throw EstimationError("resource block " + std::to_string(rb) +
                                  " has no adjacent pilot pair for noise estimation");
        const double noise = 0.5 * a.diff_sum / a.n_pairs;
        const double mean_power = a.power_sum / a.n_pilots;
        out[static_cast<std::size_t>(rb)] = {mean_power - noise, noise};
    }
    return out;
}

Eigen::VectorXf estimate_sinr(const ResourceGrid& received, const CrsLayout& layout,
                              const Eigen::VectorXcf& expected_pilots) {
    const auto powers = estimate_rb_powers(received, layout, expected_pilots);
    Eigen::VectorXf sinr(layout.n_rb);
    for (int rb = 0; rb < layout.n_rb; ++rb) {
        const auto& p = powers[static_cast<std::size_t>(rb)];
        const double ratio = std::max(p.signal, kPowerEpsilon) / std::max(p.noise, kPowerEpsilon);
        const double db = 10.0 * std::log10(ratio);
        sinr[rb] = static_cast<float>(std::clamp(db, kSinrFloorDb, kSinrCapDb));
    }
    return sinr;
}

} // namespace cqipred::crsest
