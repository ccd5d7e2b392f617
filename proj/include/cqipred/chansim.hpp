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

#ifndef CQIPRED_CHANSIM_HPP
#define CQIPRED_CHANSIM_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cqipred/grid.hpp"

namespace cqipred::chansim {

inline constexpr double kSpeedOfLightMps = 299'792'458.0;

/// Maximum Doppler shift f_d = v * f_c / c.
double doppler_hz(double speed_mps, double carrier_hz);

inline double kmh_to_mps(double kmh) {
    return kmh / 3.6;
}

/// Bessel function of the first kind, order zero. Polynomial for |x| <= 8,
/// asymptotic expansion beyond; absolute error < 1e-6 over the working range.
double bessel_j0(double x);

/// Theoretical autocorrelation of isotropic-scattering fading at lag tau:
/// J0(2 pi f_d tau). Reference oracle for the sum-of-sinusoids generator.
double jakes_autocorr(double fd_hz, double tau_s);

struct TapSpec {
    double delay_s = 0.0;
    double power_db = 0.0;
};

/// Mobility scenario driving the channel synthesizer.
struct ScenarioConfig {
    std::string name = "custom";
    double speed_kmh = 0.0;
    double carrier_hz = 2.6e9;
    int n_rb = 50;
    double subcarrier_hz = 15e3;
    double mean_snr_db = 15.0;
    std::vector<TapSpec> delay_profile;
    int n_sinusoids = 64;
    std::uint64_t seed = 1;

    void validate() const;

    double doppler() const { return doppler_hz(kmh_to_mps(speed_kmh), carrier_hz); }

    /// Linear tap powers normalized to sum to 1.
    std::vector<double> normalized_tap_powers() const;

    // Bundled presets (speeds from the three recorded mobility scenarios;
    // low/medium/high delay-spread profiles).
    static ScenarioConfig pedestrian(std::uint64_t seed = 1);
    static ScenarioConfig vehicle(std::uint64_t seed = 1);
    static ScenarioConfig train(std::uint64_t seed = 1);

    /// Preset by name ("pedestrian" | "vehicle" | "train").
    static ScenarioConfig preset(const std::string& name, std::uint64_t seed = 1);

    static ScenarioConfig from_stream(std::istream& is, const std::string& origin);
    static ScenarioConfig from_file(const std::filesystem::path& path);
    void save(std::ostream& os) const;
    void save(const std::filesystem::path& path) const;
};

/// One multipath tap: a complex gain sequence sampled every dt_ms plus its delay.
struct TapProcess {
    double delay_s = 0.0;
    double power_linear = 1.0;
    double fd_hz = 0.0;
    double dt_ms = 1.0;
    Eigen::VectorXcd gains;
};

/// Clarke/Jakes sum-of-sinusoids realization:
///   a(t) = sqrt(P/M) * sum_m exp(j(2 pi f_d cos(alpha_m) t + phi_m)),
/// alpha_m, phi_m i.i.d. uniform on [0, 2pi) from the seeded generator.
/// fd = 0 degenerates to a constant complex gain of power P.
TapProcess gen_tap(double fd_hz, double power_db, int n_sinusoids, double duration_ms,
                   double dt_ms, std::uint64_t seed);

/// Tapped-delay-line response H(f, t) = sum_l a_l(t) exp(-j 2 pi f tau_l),
/// one entry per requested subcarrier frequency.
Eigen::VectorXcd freq_response(const std::vector<TapProcess>& taps, Eigen::Index t_index,
                               const std::vector<double>& subcarrier_freqs_hz);

/// Streams per-subframe frequency responses for a scenario without holding
/// the full time-frequency response in memory.
class ChannelSynthesizer {
  public:
    ChannelSynthesizer(const ScenarioConfig& config, int duration_ms);

    Eigen::Index n_subframes() const { return n_subframes_; }
    int n_subcarriers() const { return static_cast<int>(subcarrier_freqs_.size()); }
    const ScenarioConfig& config() const { return config_; }
    const std::vector<TapProcess>& taps() const { return taps_; }
    const std::vector<double>& subcarrier_freqs() const { return subcarrier_freqs_; }

    /// Fills `out` (count x n_subcarriers) with H for subframes [t0, t0+count).
    void response_block(Eigen::Index t0, Eigen::Index count, Eigen::MatrixXcf& out) const;

  private:
    ScenarioConfig config_;
    Eigen::Index n_subframes_;
    std::vector<TapProcess> taps_;
    std::vector<double> subcarrier_freqs_;
    Eigen::MatrixXcd steering_; // taps x subcarriers: exp(-j 2 pi f tau_l)
};

/// Synthesizes a duration_ms x n_rb SINR grid:
/// SINR[t][r] = mean_snr_db + 10 log10(mean over the RB's 12 subcarriers of |H|^2).
/// Deterministic for a given config (including seed).
gridio::SinrGrid synth_sinr_grid(const ScenarioConfig& config, int duration_ms);

// ---------------------------------------------------------------------------
// Stored channel realizations ("CHR1": magic, u32-le header length, JSON
// header {dt_ms, mean_snr_db, n_subcarriers, n_subframes, name}, then
// row-major complex64-le payload, 8 bytes per (t, subcarrier) entry).
// ---------------------------------------------------------------------------

class ChannelFileWriter {
  public:
    ChannelFileWriter(const std::filesystem::path& path, const std::string& name,
                      Eigen::Index n_subframes, int n_subcarriers, double dt_ms,
                      double mean_snr_db);
    ~ChannelFileWriter();

    /// Rows must be appended in order; `block` is rows x n_subcarriers.
    void append(const Eigen::MatrixXcf& block);
    void close();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

class ChannelFileReader {
  public:
    explicit ChannelFileReader(const std::filesystem::path& path);
    ~ChannelFileReader();

    Eigen::Index n_subframes() const;
    int n_subcarriers() const;
    double dt_ms() const;
    double mean_snr_db() const;
    const std::string& name() const;

    /// Reads rows [t0, t0+count) into `out` (count x n_subcarriers).
    void read_block(Eigen::Index t0, Eigen::Index count, Eigen::MatrixXcf& out);

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace cqipred::chansim

#endif // CQIPRED_CHANSIM_HPP
