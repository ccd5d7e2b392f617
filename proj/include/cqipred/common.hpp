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

#ifndef CQIPRED_COMMON_HPP
#define CQIPRED_COMMON_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "cqipred/errors.hpp"

namespace cqipred {

// ---------------------------------------------------------------------------
// Seeding
// ---------------------------------------------------------------------------

/// SplitMix64 finalizer. Used everywhere a master seed has to be split into
/// independent per-stream seeds (per channel tap, per subframe, per epoch, ...)
/// so that parallel generation stays deterministic regardless of schedule.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Seed for stream number `stream` derived from `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
    return splitmix64(master ^ splitmix64(stream + 0x9e3779b97f4a7c15ull));
}

// ---------------------------------------------------------------------------
// Little-endian binary I/O (file formats and wire frames are little-endian
// by definition, independent of the host)
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
inline void store_le(T value, unsigned char* out) noexcept {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(out, &value, sizeof(T));
    } else {
        unsigned char tmp[sizeof(T)];
        std::memcpy(tmp, &value, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T); ++i)
            out[i] = tmp[sizeof(T) - 1 - i];
    }
}

template <typename T>
inline T load_le(const unsigned char* in) noexcept {
    static_assert(std::is_trivially_copyable_v<T>);
    T value;
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(&value, in, sizeof(T));
    } else {
        unsigned char tmp[sizeof(T)];
        for (std::size_t i = 0; i < sizeof(T); ++i)
            tmp[i] = in[sizeof(T) - 1 - i];
        std::memcpy(&value, tmp, sizeof(T));
    }
    return value;
}

} // namespace detail

template <typename T>
inline void write_le(std::ostream& os, T value) {
    unsigned char buf[sizeof(T)];
    detail::store_le(value, buf);
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

/// Reads a little-endian scalar; throws FramingError on short read.
template <typename T>
inline T read_le(std::istream& is, const char* what) {
    unsigned char buf[sizeof(T)];
    is.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (static_cast<std::size_t>(is.gcount()) != sizeof(T))
        throw FramingError(std::string("truncated input while reading ") + what);
    return detail::load_le<T>(buf);
}

template <typename T>
inline void append_le(std::vector<std::uint8_t>& out, T value) {
    unsigned char buf[sizeof(T)];
    detail::store_le(value, buf);
    out.insert(out.end(), buf, buf + sizeof(T));
}

template <typename T>
inline T load_le_at(const std::uint8_t* p) noexcept {
    return detail::load_le<T>(p);
}

// ---------------------------------------------------------------------------
// key = value config files
// ---------------------------------------------------------------------------

/// Parsed `key = value` file. Lines starting with '#' and blank lines are
/// ignored; keys are unique (duplicate -> ParseError).
using KvMap = std::map<std::string, std::string>;

KvMap parse_kv(std::istream& is, const std::string& origin);
KvMap parse_kv_file(const std::string& path);

std::string kv_get(const KvMap& kv, const std::string& key, const std::string& origin);
double kv_get_double(const KvMap& kv, const std::string& key, const std::string& origin);
std::uint64_t kv_get_u64(const KvMap& kv, const std::string& key, const std::string& origin);
std::vector<double> kv_get_list(const KvMap& kv, const std::string& key, const std::string& origin);

/// Optional lookups fall back to `fallback` when the key is absent.
double kv_get_double_or(const KvMap& kv, const std::string& key, double fallback,
                        const std::string& origin);
std::uint64_t kv_get_u64_or(const KvMap& kv, const std::string& key, std::uint64_t fallback,
                            const std::string& origin);
std::string kv_get_or(const KvMap& kv, const std::string& key, const std::string& fallback);

// ---------------------------------------------------------------------------
// Logging (stderr, level from CQIPRED_LOG: error|warn|info|debug)
// ---------------------------------------------------------------------------

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

LogLevel log_level();
void log_message(LogLevel level, const std::string& msg);

inline void log_error(const std::string& m) { log_message(LogLevel::error, m); }
inline void log_warn(const std::string& m) { log_message(LogLevel::warn, m); }
inline void log_info(const std::string& m) { log_message(LogLevel::info, m); }
inline void log_debug(const std::string& m) { log_message(LogLevel::debug, m); }

} // namespace cqipred

#endif // CQIPRED_COMMON_HPP
