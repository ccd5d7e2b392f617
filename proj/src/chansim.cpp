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

#include "cqipred/chansim.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>
#include <sstream>

#include "cqipred/common.hpp"

namespace cqipred::chansim {

using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string list_to_string(const std::vector<double>& v) {
    std::ostringstream os;
    char buf[32];
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
        os << (i ? ", " : "") << buf;
    }
    return os.str();
}

} // namespace

double doppler_hz(double speed_mps, double carrier_hz) {
    if (!std::isfinite(speed_mps) || !std::isfinite(carrier_hz))
        throw ArgumentError("doppler_hz: inputs must be finite");
    if (speed_mps < 0.0)
        throw ArgumentError("doppler_hz: speed must be nonnegative");
    if (!(carrier_hz > 0.0))
        throw ArgumentError("doppler_hz: carrier frequency must be positive");
    return speed_mps * carrier_hz / kSpeedOfLightMps;
}

double bessel_j0(double x) {
    // Rational approximation below 8, asymptotic form above (Abramowitz &
    // Stegun 9.4.x coefficients); |error| < 1e-7 on both branches.
    const double ax = std::abs(x);
    if (ax < 8.0) {
        const double y = x * x;
        const double p1 =
            -2957821389.0 +
            y * (7062834065.0 +
                 y * (-512359803.6 + y * (10879881.29 + y * (-86327.92757 + y * 228.4622733))));
        const double p2 =
            40076544269.0 +
            y * (745249964.8 + y * (7189466.438 + y * (47447.26470 + y * (226.1030244 + y))));
        return p1 / p2;
    }
    const double z = 8.0 / ax;
    const double y = z * z;
    const double xx = ax - 0.785398164;
    const double p1 =
        1.0 + y * (-0.1098628627e-2 +
                   y * (0.2734510407e-4 + y * (-0.2073370639e-5 + y * 0.2093887211e-6)));
    const double p2 =
        -0.1562499995e-1 +
        y * (0.1430488765e-3 +
             y * (-0.6911147651e-5 + y * (0.7621095161e-6 + y * (-0.934935152e-7))));
    return std::sqrt(0.636619772 / ax) * (std::cos(xx) * p1 - z * std::sin(xx) * p2);
}

double jakes_autocorr(double fd_hz, double tau_s) {
    if (fd_hz < 0.0)
        throw ArgumentError("jakes_autocorr: Doppler must be nonnegative");
    return bessel_j0(kTwoPi * fd_hz * tau_s);
}

void ScenarioConfig::validate() const {
    if (speed_kmh < 0.0)
        throw ArgumentError("scenario: speed must be nonnegative");
    if (!(carrier_hz > 0.0))
        throw ArgumentError("scenario: carrier frequency must be positive");
    if (n_rb < 1)
        throw ArgumentError("scenario: n_rb must be positive");
    if (!(subcarrier_hz > 0.0))
        throw ArgumentError("scenario: subcarrier spacing must be positive");
    if (!std::isfinite(mean_snr_db))
        throw ArgumentError("scenario: mean_snr_db must be finite");
    if (delay_profile.empty())
        throw ArgumentError("scenario: delay profile must have at least one tap");
    if (n_sinusoids < 8)
        throw ArgumentError("scenario: need at least 8 sinusoids");
    for (const auto& tap : delay_profile)
        if (tap.delay_s < 0.0 || !std::isfinite(tap.power_db))
            throw ArgumentError("scenario: tap delays must be nonnegative, powers finite");
}

std::vector<double> ScenarioConfig::normalized_tap_powers() const {
    std::vector<double> powers;
    powers.reserve(delay_profile.size());
    double sum = 0.0;
    for (const auto& tap : delay_profile) {
        powers.push_back(std::pow(10.0, tap.power_db / 10.0));
        sum += powers.back();
    }
    for (double& p : powers)
        p /= sum;
    return powers;
}

ScenarioConfig ScenarioConfig::pedestrian(std::uint64_t seed) {
    ScenarioConfig c;
    c.name = "pedestrian";
    c.speed_kmh = 3.0;
    c.seed = seed;
    // Low delay spread.
    c.delay_profile = {{0e-9, 0.0},    {30e-9, -1.0},   {70e-9, -2.0},  {90e-9, -3.0},
                       {110e-9, -8.0}, {190e-9, -17.2}, {410e-9, -20.8}};
    return c;
}

ScenarioConfig ScenarioConfig::vehicle(std::uint64_t seed) {
    ScenarioConfig c;
    c.name = "vehicle";
    c.speed_kmh = 60.0;
    c.seed = seed;
    // Medium delay spread.
    c.delay_profile = {{0e-9, 0.0},    {30e-9, -1.5},  {150e-9, -1.4},
                       {310e-9, -3.6}, {370e-9, -0.6}, {710e-9, -9.1},
                       {1090e-9, -7.0}, {1730e-9, -12.0}, {2510e-9, -16.9}};
    return c;
}

ScenarioConfig ScenarioConfig::train(std::uint64_t seed) {
    ScenarioConfig c;
    c.name = "train";
    c.speed_kmh = 80.0;
    c.seed = seed;
    // High delay spread.
    c.delay_profile = {{0e-9, -1.0},   {50e-9, -1.0},  {120e-9, -1.0},
                       {200e-9, 0.0},  {230e-9, 0.0},  {500e-9, 0.0},
                       {1600e-9, -3.0}, {2300e-9, -5.0}, {5000e-9, -7.0}};
    return c;
}

ScenarioConfig ScenarioConfig::preset(const std::string& name, std::uint64_t seed) {
    if (name == "pedestrian")
        return pedestrian(seed);
    if (name == "vehicle")
        return vehicle(seed);
    if (name == "train")
        return train(seed);
    throw ArgumentError("unknown scenario preset '" + name +
                        "' (expected pedestrian|vehicle|train)");
}

ScenarioConfig ScenarioConfig::from_stream(std::istream& is, const std::string& origin) {
    const KvMap kv = parse_kv(is, origin);
    ScenarioConfig c;
    c.name = kv_get_or(kv, "name", "custom");
    c.speed_kmh = kv_get_double(kv, "speed_kmh", origin);
    c.carrier_hz = kv_get_double_or(kv, "carrier_hz", c.carrier_hz, origin);
    c.n_rb = static_cast<int>(kv_get_u64_or(kv, "n_rb", static_cast<std::uint64_t>(c.n_rb), origin));
    c.subcarrier_hz = kv_get_double_or(kv, "subcarrier_hz", c.subcarrier_hz, origin);
    c.mean_snr_db = kv_get_double_or(kv, "mean_snr_db", c.mean_snr_db, origin);
    c.n_sinusoids =
        static_cast<int>(kv_get_u64_or(kv, "n_sinusoids", static_cast<std::uint64_t>(c.n_sinusoids), origin));
    c.seed = kv_get_u64_or(kv, "seed", c.seed, origin);
    const auto delays = kv_get_list(kv, "tap_delays_s", origin);
    const auto powers = kv_get_list(kv, "tap_powers_db", origin);
    if (delays.size() != powers.size())
        throw SchemaError(origin + ": tap_delays_s and tap_powers_db differ in length");
    c.delay_profile.clear();
    for (std::size_t i = 0; i < delays.size(); ++i)
        c.delay_profile.push_back({delays[i], powers[i]});
    c.validate();
    return c;
}

ScenarioConfig ScenarioConfig::from_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f)
        throw IoError("cannot open scenario config: " + path.string());
    return from_stream(f, path.string());
}

void ScenarioConfig::save(std::ostream& os) const {
    std::vector<double> delays, powers;
    for (const auto& tap : delay_profile) {
        delays.push_back(tap.delay_s);
        powers.push_back(tap.power_db);
    }
    char buf[32];
    os << "# mobility scenario for the channel synthesizer\n";
    os << "name = " << name << '\n';
    std::snprintf(buf, sizeof(buf), "%.17g", speed_kmh);
    os << "speed_kmh = " << buf << '\n';
    std::snprintf(buf, sizeof(buf), "%.17g", carrier_hz);
    os << "carrier_hz = " << buf << '\n';
    os << "n_rb = " << n_rb << '\n';
    std::snprintf(buf, sizeof(buf), "%.17g", subcarrier_hz);
    os << "subcarrier_hz = " << buf << '\n';
    std::snprintf(buf, sizeof(buf), "%.17g", mean_snr_db);
    os << "mean_snr_db = " << buf << '\n';
    os << "n_sinusoids = " << n_sinusoids << '\n';
    os << "seed = " << seed << '\n';
    os << "tap_delays_s = " << list_to_string(delays) << '\n';
    os << "tap_powers_db = " << list_to_string(powers) << '\n';
}

void ScenarioConfig::save(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f)
        throw IoError("cannot open for writing: " + path.string());
    save(f);
}

TapProcess gen_tap(double fd_hz, double power_db, int n_sinusoids, double duration_ms,
                   double dt_ms, std::uint64_t seed) {
    if (!std::isfinite(fd_hz) || fd_hz < 0.0)
        throw ArgumentError("gen_tap: Doppler must be finite and nonnegative");
    if (n_sinusoids < 8)
        throw ArgumentError("gen_tap: need at least 8 sinusoids");
    if (!(duration_ms > 0.0) || !(dt_ms > 0.0))
        throw ArgumentError("gen_tap: duration and dt must be positive");

    const auto n_samples = static_cast<Eigen::Index>(std::llround(duration_ms / dt_ms));
    if (n_samples < 1)
        throw ArgumentError("gen_tap: duration shorter than one sample");

    const int m_count = n_sinusoids;
    const double power = std::pow(10.0, power_db / 10.0);
    const double dt_s = dt_ms * 1e-3;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform_angle(0.0, kTwoPi);

    TapProcess tap;
    tap.power_linear = power;
    tap.fd_hz = fd_hz;
    tap.dt_ms = dt_ms;
    tap.gains = Eigen::VectorXcd::Zero(n_samples);

    for (int m = 0; m < m_count; ++m) {
        const double alpha = uniform_angle(rng);
        const double phi = uniform_angle(rng);
        const double omega = kTwoPi * fd_hz * std::cos(alpha);
        const std::complex<double> step = std::polar(1.0, omega * dt_s);
        std::complex<double> cur = std::polar(1.0, phi);
        for (Eigen::Index t = 0; t < n_samples; ++t) {
            tap.gains[t] += cur;
            cur *= step;
            if ((t & 0xfff) == 0xfff)
                cur /= std::abs(cur); // keep the rotor on the unit circle
        }
    }
    tap.gains *= std::sqrt(power / m_count);
    return tap;
}

Eigen::VectorXcd freq_response(const std::vector<TapProcess>& taps, Eigen::Index t_index,
                               const std::vector<double>& subcarrier_freqs_hz) {
    if (taps.empty())
        throw ArgumentError("freq_response: need at least one tap");
    for (const auto& tap : taps)
        if (t_index < 0 || t_index >= tap.gains.size())
            throw ArgumentError("freq_response: t_index out of range");

    Eigen::VectorXcd h = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(subcarrier_freqs_hz.size()));
    for (const auto& tap : taps) {
        const std::complex<double> a = tap.gains[t_index];
        for (std::size_t k = 0; k < subcarrier_freqs_hz.size(); ++k)
            h[static_cast<Eigen::Index>(k)] +=
                a * std::polar(1.0, -kTwoPi * subcarrier_freqs_hz[k] * tap.delay_s);
    }
    return h;
}

ChannelSynthesizer::ChannelSynthesizer(const ScenarioConfig& config, int duration_ms)
    : config_(config) {
    config_.validate();
    if (duration_ms < 1)
        throw ArgumentError("channel synthesis needs duration_ms >= 1");
    n_subframes_ = duration_ms;

    const double fd = config_.doppler();
    const auto powers = config_.normalized_tap_powers();
    taps_.reserve(powers.size());
    for (std::size_t l = 0; l < powers.size(); ++l) {
        // Per-tap seed stream: splitmix64 of (master seed, tap index).
        const std::uint64_t tap_seed = derive_seed(config_.seed, l);
        TapProcess tap = gen_tap(fd, 10.0 * std::log10(powers[l]), config_.n_sinusoids,
                                 static_cast<double>(duration_ms), 1.0, tap_seed);
        tap.delay_s = config_.delay_profile[l].delay_s;
        taps_.push_back(std::move(tap));
    }

    const int k_count = 12 * config_.n_rb;
    subcarrier_freqs_.resize(k_count);
    for (int k = 0; k < k_count; ++k)
        subcarrier_freqs_[k] = (k - 0.5 * (k_count - 1)) * config_.subcarrier_hz;

    steering_.resize(static_cast<Eigen::Index>(taps_.size()), k_count);
    for (std::size_t l = 0; l < taps_.size(); ++l)
        for (int k = 0; k < k_count; ++k)
            steering_(static_cast<Eigen::Index>(l), k) =
                std::polar(1.0, -kTwoPi * subcarrier_freqs_[k] * taps_[l].delay_s);
}

void ChannelSynthesizer::response_block(Eigen::Index t0, Eigen::Index count,
                                        Eigen::MatrixXcf& out) const {
    if (t0 < 0 || count < 0 || t0 + count > n_subframes_)
        throw ArgumentError("response_block: subframe range out of bounds");
    const auto l_count = static_cast<Eigen::Index>(taps_.size());
    Eigen::MatrixXcd gains(count, l_count);
    for (Eigen::Index l = 0; l < l_count; ++l)
        gains.col(l) = taps_[static_cast<std::size_t>(l)].gains.segment(t0, count);
    out = (gains * steering_).cast<std::complex<float>>();
}

gridio::SinrGrid synth_sinr_grid(const ScenarioConfig& config, int duration_ms) {
    ChannelSynthesizer synth(config, duration_ms);
    const Eigen::Index t_count = synth.n_subframes();
    const int k_count = synth.n_subcarriers();
    const int r_count = config.n_rb;

    gridio::SinrGrid grid;
    grid.dt_ms = 1.0;
    grid.meta.name = config.name;
    grid.meta.speed_kmh = config.speed_kmh;
    grid.meta.carrier_hz = config.carrier_hz;
    grid.meta.n_rb = r_count;
    grid.meta.bandwidth_hz = gridio::nominal_bandwidth_hz(r_count, config.subcarrier_hz);
    grid.meta.source = gridio::GridSource::synthetic;
    grid.data.resize(t_count, r_count);

    constexpr Eigen::Index kChunk = 2048;
    Eigen::MatrixXcf block;
    for (Eigen::Index t0 = 0; t0 < t_count; t0 += kChunk) {
        const Eigen::Index rows = std::min(kChunk, t_count - t0);
        synth.response_block(t0, rows, block);
        for (Eigen::Index t = 0; t < rows; ++t) {
            for (int r = 0; r < r_count; ++r) {
                double p = 0.0;
                for (int k = 0; k < 12; ++k)
                    p += std::norm(std::complex<double>(block(t, 12 * r + k)));
                p /= 12.0;
                grid.data(t0 + t, r) =
                    static_cast<float>(config.mean_snr_db + 10.0 * std::log10(std::max(p, 1e-30)));
            }
        }
    }
    return grid;
}

// ---------------------------------------------------------------------------
// CHR1 channel realization files
// ---------------------------------------------------------------------------

namespace {
constexpr char kChanMagic[4] = {'C', 'H', 'R', '1'};
}

struct ChannelFileWriter::Impl {
    std::ofstream file;
    std::filesystem::path path;
    Eigen::Index rows_expected = 0;
    Eigen::Index rows_written = 0;
    int k_count = 0;
    bool closed = false;
};

ChannelFileWriter::ChannelFileWriter(const std::filesystem::path& path, const std::string& name,
                                     Eigen::Index n_subframes, int n_subcarriers, double dt_ms,
                                     double mean_snr_db)
    : impl_(std::make_unique<Impl>()) {
    impl_->path = path;
    impl_->rows_expected = n_subframes;
    impl_->k_count = n_subcarriers;
    impl_->file.open(path, std::ios::binary | std::ios::trunc);
    if (!impl_->file)
        throw IoError("cannot open for writing: " + path.string());
    const json header{{"dt_ms", dt_ms},
                      {"mean_snr_db", mean_snr_db},
                      {"n_subcarriers", n_subcarriers},
                      {"n_subframes", n_subframes},
                      {"name", name}};
    const std::string head = header.dump();
    impl_->file.write(kChanMagic, 4);
    write_le<std::uint32_t>(impl_->file, static_cast<std::uint32_t>(head.size()));
    impl_->file.write(head.data(), static_cast<std::streamsize>(head.size()));
}

ChannelFileWriter::~ChannelFileWriter() {
    if (impl_ && !impl_->closed) {
        try {
            close();
        } catch (...) {
            // destructor must not throw; close() explicitly to observe errors
        }
    }
}

void ChannelFileWriter::append(const Eigen::MatrixXcf& block) {
    if (block.cols() != impl_->k_count)
        throw ArgumentError("channel block width does not match header");
    if (impl_->rows_written + block.rows() > impl_->rows_expected)
        throw ArgumentError("channel block exceeds declared subframe count");
    std::vector<float> row(static_cast<std::size_t>(impl_->k_count) * 2);
    for (Eigen::Index t = 0; t < block.rows(); ++t) {
        for (Eigen::Index k = 0; k < block.cols(); ++k) {
            row[2 * static_cast<std::size_t>(k)] = block(t, k).real();
            row[2 * static_cast<std::size_t>(k) + 1] = block(t, k).imag();
        }
        if constexpr (std::endian::native == std::endian::little) {
            impl_->file.write(reinterpret_cast<const char*>(row.data()),
                              static_cast<std::streamsize>(row.size() * sizeof(float)));
        } else {
            for (float v : row)
                write_le<float>(impl_->file, v);
        }
    }
    impl_->rows_written += block.rows();
    if (!impl_->file)
        throw IoError("write failed: " + impl_->path.string());
}

void ChannelFileWriter::close() {
    if (impl_->closed)
        return;
    impl_->closed = true;
    if (impl_->rows_written != impl_->rows_expected)
        throw IoError("channel file " + impl_->path.string() + " closed after " +
                      std::to_string(impl_->rows_written) + " of " +
                      std::to_string(impl_->rows_expected) + " subframes");
    impl_->file.close();
    if (!impl_->file)
        throw IoError("close failed: " + impl_->path.string());
}

struct ChannelFileReader::Impl {
    std::ifstream file;
    std::filesystem::path path;
    Eigen::Index t_count = 0;
    int k_count = 0;
    double dt_ms = 1.0;
    double mean_snr_db = 0.0;
    std::string name;
    std::streamoff payload_start = 0;
};

ChannelFileReader::ChannelFileReader(const std::filesystem::path& path)
    : impl_(std::make_unique<Impl>()) {
    impl_->path = path;
    impl_->file.open(path, std::ios::binary);
    if (!impl_->file)
        throw IoError("cannot open channel file: " + path.string());
    char magic[4];
    impl_->file.read(magic, 4);
    if (impl_->file.gcount() != 4 || std::memcmp(magic, kChanMagic, 4) != 0)
        throw SchemaError("not a channel file (bad magic): " + path.string());
    const auto head_len = read_le<std::uint32_t>(impl_->file, "channel header length");
    std::string head(head_len, '\0');
    impl_->file.read(head.data(), head_len);
    if (static_cast<std::uint32_t>(impl_->file.gcount()) != head_len)
        throw FramingError("channel header truncated: " + path.string());
    json j;
    try {
        j = json::parse(head);
        impl_->dt_ms = j.at("dt_ms").get<double>();
        impl_->mean_snr_db = j.at("mean_snr_db").get<double>();
        impl_->k_count = j.at("n_subcarriers").get<int>();
        impl_->t_count = j.at("n_subframes").get<Eigen::Index>();
        impl_->name = j.at("name").get<std::string>();
    } catch (const json::exception& e) {
        throw SchemaError(std::string("bad channel header: ") + e.what());
    }
    if (impl_->t_count < 1 || impl_->k_count < 1)
        throw SchemaError("channel header declares empty shape");
    impl_->payload_start = impl_->file.tellg();
}

ChannelFileReader::~ChannelFileReader() = default;

Eigen::Index ChannelFileReader::n_subframes() const {
    return impl_->t_count;
}
int ChannelFileReader::n_subcarriers() const {
    return impl_->k_count;
}
double ChannelFileReader::dt_ms() const {
    return impl_->dt_ms;
}
double ChannelFileReader::mean_snr_db() const {
    return impl_->mean_snr_db;
}
const std::string& ChannelFileReader::name() const {
    return impl_->name;
}

void ChannelFileReader::read_block(Eigen::Index t0, Eigen::Index count, Eigen::MatrixXcf& out) {
    if (t0 < 0 || count < 0 || t0 + count > impl_->t_count)
        throw ArgumentError("read_block: subframe range out of bounds");
    const std::size_t row_floats = static_cast<std::size_t>(impl_->k_count) * 2;
    out.resize(count, impl_->k_count);
    impl_->file.clear();
    impl_->file.seekg(impl_->payload_start +
                      static_cast<std::streamoff>(t0 * static_cast<Eigen::Index>(row_floats) * 4));
    std::vector<float> row(row_floats);
    for (Eigen::Index t = 0; t < count; ++t) {
        impl_->file.read(reinterpret_cast<char*>(row.data()),
                         static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (static_cast<std::size_t>(impl_->file.gcount()) != row.size() * sizeof(float))
            throw FramingError("channel payload truncated at subframe " + std::to_string(t0 + t));
        if constexpr (std::endian::native != std::endian::little) {
            for (float& v : row) {
                unsigned char b[4];
                std::memcpy(b, &v, 4);
                std::swap(b[0], b[3]);
                std::swap(b[1], b[2]);
                std::memcpy(&v, b, 4);
            }
        }
        for (int k = 0; k < impl_->k_count; ++k)
            out(t, k) = {row[2 * static_cast<std::size_t>(k)],
                         row[2 * static_cast<std::size_t>(k) + 1]};
    }
}

} // namespace cqipred::chansim
