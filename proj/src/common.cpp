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

#include "cqipred/common.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>

namespace cqipred {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, const std::string& key, const std::string& origin) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0' || errno == ERANGE)
        throw ParseError(origin + ": value of '" + key + "' is not a number: '" + text + "'");
    return v;
}

} // namespace

KvMap parse_kv(std::istream& is, const std::string& origin) {
    KvMap kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#')
            continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ParseError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (!kv.emplace(key, value).second)
            throw ParseError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                             "'");
    }
    return kv;
}

KvMap parse_kv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw IoError("cannot open config file: " + path);
    return parse_kv(f, path);
}

std::string kv_get(const KvMap& kv, const std::string& key, const std::string& origin) {
    const auto it = kv.find(key);
    if (it == kv.end())
        throw ParseError(origin + ": missing required key '" + key + "'");
    return it->second;
}

double kv_get_double(const KvMap& kv, const std::string& key, const std::string& origin) {
    return parse_double(kv_get(kv, key, origin), key, origin);
}

std::uint64_t kv_get_u64(const KvMap& kv, const std::string& key, const std::string& origin) {
    const std::string text = kv_get(kv, key, origin);
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size())
        throw ParseError(origin + ": value of '" + key + "' is not an unsigned integer: '" + text +
                         "'");
    return v;
}

std::vector<double> kv_get_list(const KvMap& kv, const std::string& key,
                                const std::string& origin) {
    const std::string text = kv_get(kv, key, origin);
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (t.empty())
            throw ParseError(origin + ": empty element in list '" + key + "'");
        out.push_back(parse_double(t, key, origin));
    }
    if (out.empty())
        throw ParseError(origin + ": list '" + key + "' is empty");
    return out;
}

double kv_get_double_or(const KvMap& kv, const std::string& key, double fallback,
                        const std::string& origin) {
    return kv.count(key) ? kv_get_double(kv, key, origin) : fallback;
}

std::uint64_t kv_get_u64_or(const KvMap& kv, const std::string& key, std::uint64_t fallback,
                            const std::string& origin) {
    return kv.count(key) ? kv_get_u64(kv, key, origin) : fallback;
}

std::string kv_get_or(const KvMap& kv, const std::string& key, const std::string& fallback) {
    const auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("CQIPRED_LOG");
        if (!env)
            return LogLevel::warn;
        const std::string v(env);
        if (v == "error")
            return LogLevel::error;
        if (v == "warn")
            return LogLevel::warn;
        if (v == "info")
            return LogLevel::info;
        if (v == "debug")
            return LogLevel::debug;
        return LogLevel::warn;
    }();
    return level;
}

void log_message(LogLevel level, const std::string& msg) {
    if (level > log_level())
        return;
    static std::mutex mu;
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::lock_guard<std::mutex> lock(mu);
    std::fprintf(stderr, "[cqipred:%s] %s\n", names[static_cast<int>(level)], msg.c_str());
}

} // namespace cqipred
