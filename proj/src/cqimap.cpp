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

#include "cqipred/cqimap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "cqipred/common.hpp"

namespace cqipred::cqimap {

void CqiTable::validate() const {
    for (std::size_t i = 1; i < thresholds_db.size(); ++i)
        if (!(thresholds_db[i] > thresholds_db[i - 1]))
            throw ValidationError("CQI thresholds must be strictly ascending (T" +
                                  std::to_string(i) + " <= T" + std::to_string(i + 1) + " fails)");
    if (efficiencies[0] != 0.0)
        throw ValidationError("efficiency of CQI 0 must be 0");
    for (std::size_t i = 1; i < efficiencies.size(); ++i)
        if (efficiencies[i] < efficiencies[i - 1])
            throw ValidationError("CQI efficiencies must be nondecreasing");
    for (double t : thresholds_db)
        if (!std::isfinite(t))
            throw ValidationError("CQI threshold is not finite");
}

CqiTable CqiTable::defaults() {
    // Link-adaptation operating points targeting ~10% BLER at each threshold;
    // efficiencies are the standard 4-bit CQI ladder. Swappable via config file.
    CqiTable t;
    t.thresholds_db = {-6.7, -4.7, -2.3, 0.2, 2.4, 4.3, 5.9, 8.1,
                       10.3, 11.7, 14.1, 16.3, 18.7, 21.0, 22.7};
    t.efficiencies = {0.0,    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766,
                      1.9141, 2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547};
    t.validate();
    return t;
}

CqiTable CqiTable::from_stream(std::istream& is, const std::string& origin) {
    const KvMap kv = parse_kv(is, origin);
    const auto thresholds = kv_get_list(kv, "thresholds_db", origin);
    const auto efficiencies = kv_get_list(kv, "efficiencies", origin);
    if (thresholds.size() != kCqiLevels - 1)
        throw SchemaError(origin + ": expected " + std::to_string(kCqiLevels - 1) +
                          " thresholds, got " + std::to_string(thresholds.size()));
    if (efficiencies.size() != kCqiLevels)
        throw SchemaError(origin + ": expected " + std::to_string(kCqiLevels) +
                          " efficiencies, got " + std::to_string(efficiencies.size()));
    CqiTable t;
    std::copy(thresholds.begin(), thresholds.end(), t.thresholds_db.begin());
    std::copy(efficiencies.begin(), efficiencies.end(), t.efficiencies.begin());
    t.validate();
    return t;
}

CqiTable CqiTable::from_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f)
        throw IoError("cannot open CQI table: " + path.string());
    return from_stream(f, path.string());
}

void CqiTable::save(std::ostream& os) const {
    char buf[32];
    os << "# SINR -> CQI mapping: CQI i is reported for SINR >= thresholds_db[i-1]\n";
    os << "thresholds_db = ";
    for (std::size_t i = 0; i < thresholds_db.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", thresholds_db[i]);
        os << (i ? ", " : "") << buf;
    }
    os << "\nefficiencies = ";
    for (std::size_t i = 0; i < efficiencies.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", efficiencies[i]);
        os << (i ? ", " : "") << buf;
    }
    os << '\n';
}

void CqiTable::save(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f)
        throw IoError("cannot open for writing: " + path.string());
    save(f);
}

int sinr_to_cqi(double sinr_db, const CqiTable& table) {
    if (!std::isfinite(sinr_db))
        throw ArgumentError("SINR must be finite");
    const auto it =
        std::upper_bound(table.thresholds_db.begin(), table.thresholds_db.end(), sinr_db);
    // Count of thresholds <= sinr_db equals the CQI index (>= rule at boundaries).
    return static_cast<int>(it - table.thresholds_db.begin());
}

double cqi_to_efficiency(int cqi, const CqiTable& table) {
    if (cqi < 0 || cqi >= kCqiLevels)
        throw ArgumentError("CQI out of range [0, 15]: " + std::to_string(cqi));
    return table.efficiencies[static_cast<std::size_t>(cqi)];
}

gridio::GridMatrix CqiGrid::as_reals() const {
    return data.cast<float>();
}

CqiGrid map_grid(const gridio::SinrGrid& sinr, const CqiTable& table) {
    sinr.validate();
    table.validate();
    CqiGrid out;
    out.dt_ms = sinr.dt_ms;
    out.meta = sinr.meta;
    out.data.resize(sinr.n_subframes(), sinr.n_rb());
    for (Eigen::Index t = 0; t < sinr.n_subframes(); ++t)
        for (Eigen::Index r = 0; r < sinr.n_rb(); ++r)
            out.data(t, r) = static_cast<std::uint8_t>(sinr_to_cqi(sinr.data(t, r), table));
    return out;
}

} // namespace cqipred::cqimap
