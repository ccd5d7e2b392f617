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

#ifndef CQIPRED_GRID_HPP
#define CQIPRED_GRID_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "cqipred/errors.hpp"

namespace cqipred::gridio {

/// Row t = subframe t (1 ms apart by default), column r = resource block r.
using GridMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class GridSource { synthetic, imported };

const char* to_string(GridSource s);
GridSource grid_source_from_string(const std::string& s);

struct ScenarioMeta {
    std::string name;
    double speed_kmh = 0.0;
    double carrier_hz = 2.6e9;
    int n_rb = 0;
    double bandwidth_hz = 0.0;
    GridSource source = GridSource::synthetic;
};

/// Nominal channel width for a resource-block count at the given subcarrier
/// spacing (50 RB at 15 kHz -> 10 MHz).
double nominal_bandwidth_hz(int n_rb, double subcarrier_hz = 15e3);

/// Time-frequency SINR grid in dB, 1 row per subframe.
struct SinrGrid {
    GridMatrix data;
    double dt_ms = 1.0;
    ScenarioMeta meta;

    Eigen::Index n_subframes() const { return data.rows(); }
    Eigen::Index n_rb() const { return data.cols(); }

    /// Throws ValidationError/ArgumentError if any invariant is broken:
    /// T >= 1, R >= 1, every entry finite, dt_ms > 0, meta.n_rb == R.
    void validate() const;
};

// ---------------------------------------------------------------------------
// Serialization
//
// binary: magic "SGR1", u32-le header length, UTF-8 JSON header
//         {dt_ms, meta{...}, n_rb, n_subframes}, then row-major f32-le payload
//         of exactly n_subframes*n_rb*4 bytes.
// csv:    header line "rb0,...,rb{R-1}", one comma-separated row per subframe.
// ---------------------------------------------------------------------------

enum class GridFormat { binary, csv };

void save_grid(const SinrGrid& grid, std::ostream& os, GridFormat format);
void save_grid(const SinrGrid& grid, const std::filesystem::path& path, GridFormat format);
SinrGrid load_grid(std::istream& is, GridFormat format);
SinrGrid load_grid(const std::filesystem::path& path, GridFormat format);

// ---------------------------------------------------------------------------
// Analysis
// ---------------------------------------------------------------------------

/// Right-continuous empirical CDF over a sample set.
class EmpiricalCdf {
  public:
    explicit EmpiricalCdf(std::vector<float> samples);

    /// P[X <= x]; nondecreasing, 0 below the sample range, 1 at and above max.
    double query(double x) const;

    /// Smallest sample v with query(v) >= p, p in (0, 1].
    double quantile(double p) const;

    double median() const { return quantile(0.5); }

    std::size_t size() const { return samples_.size(); }
    const std::vector<float>& samples() const { return samples_; }

    /// At most max_points (x, F(x)) pairs evenly spaced through the sorted
    /// samples; plot-ready.
    std::vector<std::pair<double, double>> points(std::size_t max_points = 1000) const;

  private:
    std::vector<float> samples_; // sorted ascending
};

/// Distribution of per-subframe SINR change, one sample per (t, r) with
/// t in [0, T-2]: |data[t+1][r] - data[t][r]|, or the signed difference
/// when signed_deltas is set. Requires T >= 2.
EmpiricalCdf delta_cdf(const SinrGrid& grid, bool signed_deltas = false);

// ---------------------------------------------------------------------------
// Dataset handling
// ---------------------------------------------------------------------------

/// Temporal prefix/suffix split: train gets floor(T*train_fraction) rows,
/// test the rest; metadata copied to both parts. No shuffling.
std::pair<SinrGrid, SinrGrid> split(const SinrGrid& grid, double train_fraction);

/// Sliding windows over the grid rows: pair i is (rows i..i+w-1, row
/// i+w+horizon-1). A view — the grid must outlive it.
class SlidingWindows {
  public:
    SlidingWindows(const SinrGrid& grid, int w, int horizon = 1);
    SlidingWindows(const GridMatrix& data, int w, int horizon = 1);

    std::size_t size() const { return count_; }
    int window_length() const { return w_; }
    int horizon() const { return horizon_; }

    auto window(std::size_t i) const { return data_->middleRows(static_cast<Eigen::Index>(i), w_); }
    auto target(std::size_t i) const {
        return data_->row(static_cast<Eigen::Index>(i) + w_ + horizon_ - 1);
    }

  private:
    const GridMatrix* data_;
    int w_;
    int horizon_;
    std::size_t count_;
};

} // namespace cqipred::gridio

#endif // CQIPRED_GRID_HPP
