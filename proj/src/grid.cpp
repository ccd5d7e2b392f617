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

#include "cqipred/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cqipred/common.hpp"

namespace cqipred::gridio {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'S', 'G', 'R', '1'};
constexpr std::uint32_t kMaxHeaderBytes = 1u << 20;

json meta_to_json(const ScenarioMeta& meta) {
    return json{{"name", meta.name},
                {"speed_kmh", meta.speed_kmh},
                {"carrier_hz", meta.carrier_hz},
                {"n_rb", meta.n_rb},
                {"bandwidth_hz", meta.bandwidth_hz},
                {"source", to_string(meta.source)}};
}

ScenarioMeta meta_from_json(const json& j) {
    ScenarioMeta meta;
    meta.name = j.at("name").get<std::string>();
    meta.speed_kmh = j.at("speed_kmh").get<double>();
    meta.carrier_hz = j.at("carrier_hz").get<double>();
    meta.n_rb = j.at("n_rb").get<int>();
    meta.bandwidth_hz = j.at("bandwidth_hz").get<double>();
    meta.source = grid_source_from_string(j.at("source").get<std::string>());
    return meta;
}

void save_binary(const SinrGrid& grid, std::ostream& os) {
    const json header{{"dt_ms", grid.dt_ms},
                      {"meta", meta_to_json(grid.meta)},
                      {"n_rb", grid.n_rb()},
                      {"n_subframes", grid.n_subframes()}};
    const std::string head = header.dump();
    os.write(kMagic, 4);
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(head.size()));
    os.write(head.data(), static_cast<std::streamsize>(head.size()));
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(grid.data.data()),
                 static_cast<std::streamsize>(sizeof(float) * grid.data.size()));
    } else {
        for (Eigen::Index t = 0; t < grid.data.rows(); ++t)
            for (Eigen::Index r = 0; r < grid.data.cols(); ++r)
                write_le<float>(os, grid.data(t, r));
    }
    if (!os)
        throw IoError("write failed while saving grid");
}

SinrGrid load_binary(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (is.gcount() != 4)
        throw FramingError("grid file shorter than its magic");
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw SchemaError("not a grid file (bad magic)");
    const auto head_len = read_le<std::uint32_t>(is, "grid header length");
    if (head_len == 0 || head_len > kMaxHeaderBytes)
        throw SchemaError("implausible grid header length " + std::to_string(head_len));
    std::string head(head_len, '\0');
    is.read(head.data(), head_len);
    if (static_cast<std::uint32_t>(is.gcount()) != head_len)
        throw FramingError("grid header truncated");

    json j;
    try {
        j = json::parse(head);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("grid header is not valid JSON: ") + e.what());
    }

    SinrGrid grid;
    Eigen::Index t_count = 0, r_count = 0;
    try {
        grid.dt_ms = j.at("dt_ms").get<double>();
        t_count = j.at("n_subframes").get<Eigen::Index>();
        r_count = j.at("n_rb").get<Eigen::Index>();
        grid.meta = meta_from_json(j.at("meta"));
    } catch (const json::exception& e) {
        throw SchemaError(std::string("grid header missing field: ") + e.what());
    }
    if (t_count < 1 || r_count < 1)
        throw SchemaError("grid header declares empty shape");
    if (grid.meta.n_rb != r_count)
        throw SchemaError("grid header meta.n_rb disagrees with payload width");

    grid.data.resize(t_count, r_count);
    const std::streamsize payload = static_cast<std::streamsize>(sizeof(float)) * t_count * r_count;
    is.read(reinterpret_cast<char*>(grid.data.data()), payload);
    if (is.gcount() != payload)
        throw FramingError("grid payload truncated: expected " + std::to_string(payload) +
                           " bytes, got " + std::to_string(is.gcount()));
    if constexpr (std::endian::native != std::endian::little) {
        for (Eigen::Index i = 0; i < grid.data.size(); ++i) {
            float v = grid.data.data()[i];
            unsigned char b[4];
            std::memcpy(b, &v, 4);
            std::swap(b[0], b[3]);
            std::swap(b[1], b[2]);
            std::memcpy(grid.data.data() + i, b, 4);
        }
    }
    if (is.peek() != std::char_traits<char>::eof())
        throw FramingError("grid file has trailing bytes after declared payload");
    grid.validate();
    return grid;
}

void save_csv(const SinrGrid& grid, std::ostream& os) {
    for (Eigen::Index r = 0; r < grid.n_rb(); ++r)
        os << (r ? "," : "") << "rb" << r;
    os << '\n';
    char buf[48];
    for (Eigen::Index t = 0; t < grid.n_subframes(); ++t) {
        for (Eigen::Index r = 0; r < grid.n_rb(); ++r) {
            std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(grid.data(t, r)));
            if (r)
                os.put(',');
            os << buf;
        }
        os.put('\n');
    }
    if (!os)
        throw IoError("write failed while saving grid CSV");
}

SinrGrid load_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line))
        throw FramingError("empty CSV grid file");
    // Header row only fixes the column count; names are not interpreted.
    Eigen::Index r_count = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',')) + 1;

    std::vector<float> values;
    Eigen::Index t_count = 0;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::stringstream ss(line);
        std::string cell;
        Eigen::Index col = 0;
        while (std::getline(ss, cell, ',')) {
            errno = 0;
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0' || errno == ERANGE)
                throw ParseError("CSV grid row " + std::to_string(lineno) + ", column " +
                                 std::to_string(col) + ": not a number: '" + cell + "'");
            values.push_back(static_cast<float>(v));
            ++col;
        }
        if (col != r_count)
            throw ParseError("CSV grid row " + std::to_string(lineno) + ": expected " +
                             std::to_string(r_count) + " columns, got " + std::to_string(col));
        ++t_count;
    }
    if (t_count == 0)
        throw FramingError("CSV grid file has a header but no rows");

    SinrGrid grid;
    grid.data = Eigen::Map<const GridMatrix>(values.data(), t_count, r_count);
    grid.meta.name = "imported";
    grid.meta.source = GridSource::imported;
    grid.meta.n_rb = static_cast<int>(r_count);
    grid.meta.bandwidth_hz = nominal_bandwidth_hz(static_cast<int>(r_count));
    grid.validate();
    return grid;
}

} // namespace

const char* to_string(GridSource s) {
    return s == GridSource::synthetic ? "synthetic" : "imported";
}

GridSource grid_source_from_string(const std::string& s) {
    if (s == "synthetic")
        return GridSource::synthetic;
    if (s == "imported")
        return GridSource::imported;
    throw SchemaError("unknown grid source '" + s + "'");
}

double nominal_bandwidth_hz(int n_rb, double subcarrier_hz) {
    // 90% spectral occupancy, as in the standard RB counts (50 RB @15kHz -> 10 MHz).
    return n_rb * 12.0 * subcarrier_hz / 0.9;
}

void SinrGrid::validate() const {
    if (data.rows() < 1 || data.cols() < 1)
        throw ValidationError("grid must have at least one subframe and one resource block");
    if (!(dt_ms > 0.0))
        throw ValidationError("grid dt_ms must be positive");
    if (!data.allFinite())
        throw ValidationError("grid contains a non-finite SINR entry");
    if (meta.n_rb != data.cols())
        throw ValidationError("meta.n_rb (" + std::to_string(meta.n_rb) +
                              ") does not match grid width (" + std::to_string(data.cols()) + ")");
    if (meta.speed_kmh < 0.0)
        throw ValidationError("meta.speed_kmh must be nonnegative");
    if (!(meta.carrier_hz > 0.0))
        throw ValidationError("meta.carrier_hz must be positive");
    if (!(meta.bandwidth_hz > 0.0))
        throw ValidationError("meta.bandwidth_hz must be positive");
}

void save_grid(const SinrGrid& grid, std::ostream& os, GridFormat format) {
    grid.validate(); // rejects non-finite entries before any write
    if (format == GridFormat::binary)
        save_binary(grid, os);
    else
        save_csv(grid, os);
}

void save_grid(const SinrGrid& grid, const std::filesystem::path& path, GridFormat format) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot open for writing: " + path.string());
    save_grid(grid, f, format);
    f.flush();
    if (!f)
        throw IoError("write failed: " + path.string());
}

SinrGrid load_grid(std::istream& is, GridFormat format) {
    return format == GridFormat::binary ? load_binary(is) : load_csv(is);
}

SinrGrid load_grid(const std::filesystem::path& path, GridFormat format) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open for reading: " + path.string());
    return load_grid(f, format);
}

EmpiricalCdf::EmpiricalCdf(std::vector<float> samples) : samples_(std::move(samples)) {
    if (samples_.empty())
        throw ArgumentError("empirical CDF needs at least one sample");
    std::sort(samples_.begin(), samples_.end());
}

double EmpiricalCdf::query(double x) const {
    const auto it = std::upper_bound(samples_.begin(), samples_.end(), x);
    return static_cast<double>(it - samples_.begin()) / static_cast<double>(samples_.size());
}

double EmpiricalCdf::quantile(double p) const {
    if (!(p > 0.0) || p > 1.0)
        throw ArgumentError("quantile level must be in (0, 1]");
    const auto n = samples_.size();
    const auto idx = std::min(n - 1, static_cast<std::size_t>(std::ceil(p * n)) - 1);
    return samples_[idx];
}

std::vector<std::pair<double, double>> EmpiricalCdf::points(std::size_t max_points) const {
    const std::size_t n = samples_.size();
    const std::size_t count = std::min(max_points, n);
    std::vector<std::pair<double, double>> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t idx = (count == 1) ? n - 1 : i * (n - 1) / (count - 1);
        out.emplace_back(samples_[idx], static_cast<double>(idx + 1) / static_cast<double>(n));
    }
    return out;
}

EmpiricalCdf delta_cdf(const SinrGrid& grid, bool signed_deltas) {
    grid.validate();
    const Eigen::Index t_count = grid.n_subframes();
    const Eigen::Index r_count = grid.n_rb();
    if (t_count < 2)
        throw InsufficientDataError("delta CDF needs at least 2 subframes");
    std::vector<float> deltas;
    deltas.reserve(static_cast<std::size_t>((t_count - 1) * r_count));
    for (Eigen::Index t = 0; t + 1 < t_count; ++t)
        for (Eigen::Index r = 0; r < r_count; ++r) {
            const float d = grid.data(t + 1, r) - grid.data(t, r);
            deltas.push_back(signed_deltas ? d : std::abs(d));
        }
    return EmpiricalCdf(std::move(deltas));
}

std::pair<SinrGrid, SinrGrid> split(const SinrGrid& grid, double train_fraction) {
    grid.validate();
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
        throw ArgumentError("train_fraction must be inside (0, 1)");
    const Eigen::Index t_count = grid.n_subframes();
    const auto train_rows = static_cast<Eigen::Index>(
        std::floor(static_cast<double>(t_count) * train_fraction));
    if (train_rows < 1 || t_count - train_rows < 1)
        throw InsufficientDataError("split would leave an empty part (T=" +
                                    std::to_string(t_count) + ", fraction=" +
                                    std::to_string(train_fraction) + ")");
    SinrGrid train{grid.data.topRows(train_rows), grid.dt_ms, grid.meta};
    SinrGrid test{grid.data.bottomRows(t_count - train_rows), grid.dt_ms, grid.meta};
    return {std::move(train), std::move(test)};
}

SlidingWindows::SlidingWindows(const SinrGrid& grid, int w, int horizon)
    : SlidingWindows(grid.data, w, horizon) {}

SlidingWindows::SlidingWindows(const GridMatrix& data, int w, int horizon)
    : data_(&data), w_(w), horizon_(horizon) {
    if (w < 1 || horizon < 1)
        throw ArgumentError("window length and horizon must be positive");
    const Eigen::Index t_count = data.rows();
    if (t_count < w + horizon)
        throw InsufficientDataError("grid too short for windows: T=" + std::to_string(t_count) +
                                    ", need at least " + std::to_string(w + horizon));
    count_ = static_cast<std::size_t>(t_count - w - horizon + 1);
}

} // namespace cqipred::gridio
