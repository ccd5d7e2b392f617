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

#ifndef CQIPRED_RUNTIME_HPP
#define CQIPRED_RUNTIME_HPP

#include <Eigen/Dense>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cqipred/cqimap.hpp"
#include "cqipred/crnn.hpp"
#include "cqipred/grid.hpp"

namespace cqipred::runtime {

// ---------------------------------------------------------------------------
// Wire protocol (all integers little-endian)
//
// SINR frame: magic "SFR1" | u64 timestamp_ms | u16 n_rb | n_rb * f32 (dB)
//             total 14 + 4*n_rb bytes
// CQI frame:  magic "CQF1" | u64 timestamp_ms | u16 n_rb | n_rb * u8
//             total 14 + n_rb bytes
// ---------------------------------------------------------------------------

struct SinrFrame {
    std::uint64_t timestamp_ms = 0;
    Eigen::VectorXf sinr;

    int n_rb() const { return static_cast<int>(sinr.size()); }
    void validate() const; // n_rb >= 1, all values finite
};

struct CqiFrame {
    std::uint64_t timestamp_ms = 0;
    std::vector<std::uint8_t> cqi;

    int n_rb() const { return static_cast<int>(cqi.size()); }
    void validate() const; // n_rb >= 1, every value <= 15
};

inline constexpr std::size_t kFrameHeaderBytes = 14;
inline constexpr int kMaxFrameRb = 4096; // larger widths are treated as garbage

constexpr std::size_t sinr_frame_bytes(int n_rb) {
    return kFrameHeaderBytes + 4 * static_cast<std::size_t>(n_rb);
}
constexpr std::size_t cqi_frame_bytes(int n_rb) {
    return kFrameHeaderBytes + static_cast<std::size_t>(n_rb);
}

std::vector<std::uint8_t> encode_frame(const SinrFrame& frame);
std::vector<std::uint8_t> encode_frame(const CqiFrame& frame);

/// Exact-buffer decoders: the span must hold exactly one frame.
/// Bad magic -> ProtocolError; short/overlong buffer -> FramingError;
/// non-finite SINR or CQI > 15 -> ValidationError.
SinrFrame decode_sinr_frame(std::span<const std::uint8_t> bytes);
CqiFrame decode_cqi_frame(std::span<const std::uint8_t> bytes);

/// Incremental SINR-frame parser for byte streams: buffers partial input,
/// resynchronizes after garbage by scanning for the next magic, rejects (and
/// counts) frames with non-finite payloads.
class FrameParser {
  public:
    void feed(std::span<const std::uint8_t> bytes);

    /// Next complete valid frame, or nullopt when more bytes are needed.
    std::optional<SinrFrame> next();

    std::uint64_t bytes_skipped() const { return bytes_skipped_; }
    std::uint64_t frames_rejected() const { return frames_rejected_; }

  private:
    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
    std::uint64_t bytes_skipped_ = 0;
    std::uint64_t frames_rejected_ = 0;
};

// ---------------------------------------------------------------------------
// Streaming pipeline
// ---------------------------------------------------------------------------

struct StreamStats {
    std::uint64_t frames_processed = 0;    // decoded frames entering the pipeline
    std::uint64_t frames_rejected = 0;     // undecodable/garbage input
    std::uint64_t frames_dropped_queue = 0; // overwritten in the hand-off slot
    std::uint64_t frames_emitted = 0;
    std::uint64_t deadline_misses = 0;
    double latency_p50_us = 0.0;
    double latency_p99_us = 0.0;
    double latency_max_us = 0.0;

    void print(std::ostream& os) const; // key = value lines
};

struct StreamOptions {
    int deadline_us = 1000;
    bool realtime = false;      // pace file replay at the grid's dt_ms
    bool exact_window = false;  // recompute the full window every frame
    bool threaded = false;      // two-stage pipeline with a capacity-1 hand-off
    std::uint64_t max_frames = 0;   // stop after this many input frames (0 = all)
    int idle_timeout_ms = 5000;     // listen mode: stop after this much silence
};

class FrameSink {
  public:
    virtual ~FrameSink() = default;
    /// False signals backpressure; the frame is dropped and counted as a miss.
    virtual bool write(const CqiFrame& frame) = 0;
};

class FileFrameSink : public FrameSink {
  public:
    explicit FileFrameSink(const std::filesystem::path& path);
    bool write(const CqiFrame& frame) override;

  private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

class UdpFrameSink : public FrameSink {
  public:
    UdpFrameSink(const std::string& host, std::uint16_t port);
    ~UdpFrameSink() override;
    bool write(const CqiFrame& frame) override;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Test-friendly sink that keeps every emitted frame.
class CollectFrameSink : public FrameSink {
  public:
    bool write(const CqiFrame& frame) override {
        frames.push_back(frame);
        return true;
    }
    std::vector<CqiFrame> frames;
};

class FrameSource {
  public:
    virtual ~FrameSource() = default;
    /// Next frame, or nullopt at end of stream. Undecodable input is counted
    /// internally and surfaced through rejected().
    virtual std::optional<SinrFrame> next() = 0;
    virtual std::uint64_t rejected() const { return 0; }
};

/// Replays a stored SINR grid row by row; timestamps are round(t * dt_ms).
/// With realtime set, frames are released on the grid's subframe cadence.
class ReplaySource : public FrameSource {
  public:
    ReplaySource(const std::filesystem::path& grid_file, bool realtime);
    explicit ReplaySource(gridio::SinrGrid grid, bool realtime = false);
    std::optional<SinrFrame> next() override;
    const gridio::SinrGrid& grid() const { return grid_; }

  private:
    gridio::SinrGrid grid_;
    Eigen::Index row_ = 0;
    bool realtime_ = false;
    std::chrono::steady_clock::time_point start_{};
};

/// One frame per UDP datagram on the given port.
class UdpSource : public FrameSource {
  public:
    UdpSource(std::uint16_t port, int idle_timeout_ms, std::uint64_t max_frames = 0);
    ~UdpSource() override;
    std::optional<SinrFrame> next() override;
    std::uint64_t rejected() const override;
    std::uint16_t port() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Map -> window -> predict for one session. Stateless across sessions.
class Pipeline {
  public:
    Pipeline(const crnn::ModelParams& model, const cqimap::CqiTable& table, double dt_ms,
             bool exact_window);

    /// Feeds one frame. Returns the predicted CQI frame once the window has
    /// filled, nullopt during warm-up. Width mismatch -> SchemaError.
    std::optional<CqiFrame> process(const SinrFrame& frame);

    std::uint64_t nonmonotonic_skips() const { return nonmonotonic_skips_; }

  private:
    const crnn::ModelParams& model_;
    const cqimap::CqiTable& table_;
    double dt_ms_;
    std::uint64_t ts_advance_ms_;
    bool exact_window_;
    int count_ = 0;
    Eigen::MatrixXd hidden_;      // incremental recurrent state
    Eigen::MatrixXd ring_;        // window_w x n_rb, exact mode only
    int ring_pos_ = 0;
    std::uint64_t last_out_ts_ = 0;
    bool emitted_any_ = false;
    std::uint64_t nonmonotonic_skips_ = 0;
};

/// Runs a full session: source -> pipeline -> sink with per-frame latency
/// accounting (ingest-complete to emit-complete) against the deadline.
StreamStats run_stream(FrameSource& source, const crnn::ModelParams& model,
                       const cqimap::CqiTable& table, FrameSink& sink,
                       const StreamOptions& options);

/// Summary of a stored CQI-frame file (as written by FileFrameSink).
struct FrameFileSummary {
    std::uint64_t count = 0;
    std::uint64_t first_timestamp_ms = 0;
    std::uint64_t last_timestamp_ms = 0;
    int n_rb = 0;
};

FrameFileSummary summarize_cqi_frames(const std::filesystem::path& path);

} // namespace cqipred::runtime

#endif // CQIPRED_RUNTIME_HPP
