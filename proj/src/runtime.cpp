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

#include "cqipred/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <fstream>
#include <mutex>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "cqipred/common.hpp"

namespace cqipred::runtime {

namespace {

constexpr char kSinrMagic[4] = {'S', 'F', 'R', '1'};
constexpr char kCqiMagic[4] = {'C', 'Q', 'F', '1'};

using Clock = std::chrono::steady_clock;

double us_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::micro>(b - a).count();
}

} // namespace

void SinrFrame::validate() const {
    if (sinr.size() < 1)
        throw ValidationError("SINR frame must carry at least one resource block");
    if (sinr.size() > kMaxFrameRb)
        throw ValidationError("SINR frame width exceeds the supported maximum");
    if (!sinr.allFinite())
        throw ValidationError("SINR frame contains a non-finite value");
}

void CqiFrame::validate() const {
    if (cqi.empty())
        throw ValidationError("CQI frame must carry at least one resource block");
    for (std::uint8_t v : cqi)
        if (v > 15)
            throw ValidationError("CQI frame value out of range [0, 15]");
}

std::vector<std::uint8_t> encode_frame(const SinrFrame& frame) {
    frame.validate();
    std::vector<std::uint8_t> out;
    out.reserve(sinr_frame_bytes(frame.n_rb()));
    out.insert(out.end(), kSinrMagic, kSinrMagic + 4);
    append_le<std::uint64_t>(out, frame.timestamp_ms);
    append_le<std::uint16_t>(out, static_cast<std::uint16_t>(frame.n_rb()));
    for (Eigen::Index i = 0; i < frame.sinr.size(); ++i)
        append_le<float>(out, frame.sinr[i]);
    return out;
}

std::vector<std::uint8_t> encode_frame(const CqiFrame& frame) {
    frame.validate();
    std::vector<std::uint8_t> out;
    out.reserve(cqi_frame_bytes(frame.n_rb()));
    out.insert(out.end(), kCqiMagic, kCqiMagic + 4);
    append_le<std::uint64_t>(out, frame.timestamp_ms);
    append_le<std::uint16_t>(out, static_cast<std::uint16_t>(frame.n_rb()));
    out.insert(out.end(), frame.cqi.begin(), frame.cqi.end());
    return out;
}

SinrFrame decode_sinr_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kFrameHeaderBytes)
        throw FramingError("SINR frame truncated before header");
    if (std::memcmp(bytes.data(), kSinrMagic, 4) != 0)
        throw ProtocolError("bad SINR frame magic");
    SinrFrame frame;
    frame.timestamp_ms = load_le_at<std::uint64_t>(bytes.data() + 4);
    const auto n_rb = load_le_at<std::uint16_t>(bytes.data() + 12);
    const std::size_t expected = sinr_frame_bytes(n_rb);
    if (bytes.size() < expected)
        throw FramingError("SINR frame payload truncated");
    if (bytes.size() > expected)
        throw FramingError("SINR frame buffer longer than declared length");
    frame.sinr.resize(n_rb);
    for (int i = 0; i < n_rb; ++i)
        frame.sinr[i] = load_le_at<float>(bytes.data() + kFrameHeaderBytes + 4 * static_cast<std::size_t>(i));
    frame.validate();
    return frame;
}

CqiFrame decode_cqi_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kFrameHeaderBytes)
        throw FramingError("CQI frame truncated before header");
    if (std::memcmp(bytes.data(), kCqiMagic, 4) != 0)
        throw ProtocolError("bad CQI frame magic");
    CqiFrame frame;
    frame.timestamp_ms = load_le_at<std::uint64_t>(bytes.data() + 4);
    const auto n_rb = load_le_at<std::uint16_t>(bytes.data() + 12);
    const std::size_t expected = cqi_frame_bytes(n_rb);
    if (bytes.size() < expected)
        throw FramingError("CQI frame payload truncated");
    if (bytes.size() > expected)
        throw FramingError("CQI frame buffer longer than declared length");
    frame.cqi.assign(bytes.begin() + kFrameHeaderBytes, bytes.begin() + static_cast<std::ptrdiff_t>(expected));
    frame.validate();
    return frame;
}

void FrameParser::feed(std::span<const std::uint8_t> bytes) {
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<SinrFrame> FrameParser::next() {
    for (;;) {
        // Hunt for the next magic, counting skipped garbage.
        while (buf_.size() - pos_ >= 4 && std::memcmp(buf_.data() + pos_, kSinrMagic, 4) != 0) {
            ++pos_;
            ++bytes_skipped_;
        }
        if (pos_ > 0) {
            buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
            pos_ = 0;
        }
        if (buf_.size() < kFrameHeaderBytes)
            return std::nullopt;
        const auto n_rb = load_le_at<std::uint16_t>(buf_.data() + 12);
        if (n_rb == 0 || n_rb > kMaxFrameRb) {
            // Implausible width: this was not a real frame boundary.
            ++pos_;
            ++bytes_skipped_;
            continue;
        }
        const std::size_t total = sinr_frame_bytes(n_rb);
        if (buf_.size() < total)
            return std::nullopt;
        try {
            SinrFrame frame = decode_sinr_frame({buf_.data(), total});
            buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(total));
            return frame;
        } catch (const ValidationError&) {
            ++frames_rejected_;
            buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(total));
        }
    }
}

void StreamStats::print(std::ostream& os) const {
    os << "frames_processed = " << frames_processed << '\n'
       << "frames_rejected = " << frames_rejected << '\n'
       << "frames_dropped_queue = " << frames_dropped_queue << '\n'
       << "frames_emitted = " << frames_emitted << '\n'
       << "deadline_misses = " << deadline_misses << '\n'
       << "latency_p50_us = " << latency_p50_us << '\n'
       << "latency_p99_us = " << latency_p99_us << '\n'
       << "latency_max_us = " << latency_max_us << '\n';
}

// ---------------------------------------------------------------------------
// Sinks
// ---------------------------------------------------------------------------

struct FileFrameSink::Impl {
    std::ofstream file;
};

FileFrameSink::FileFrameSink(const std::filesystem::path& path) : impl_(std::make_shared<Impl>()) {
    impl_->file.open(path, std::ios::binary | std::ios::trunc);
    if (!impl_->file)
        throw IoError("cannot open frame sink: " + path.string());
}

bool FileFrameSink::write(const CqiFrame& frame) {
    const auto bytes = encode_frame(frame);
    impl_->file.write(reinterpret_cast<const char*>(bytes.data()),
                      static_cast<std::streamsize>(bytes.size()));
    return static_cast<bool>(impl_->file);
}

struct UdpFrameSink::Impl {
    int fd = -1;
    sockaddr_in addr{};
};

UdpFrameSink::UdpFrameSink(const std::string& host, std::uint16_t port)
    : impl_(std::make_unique<Impl>()) {
    impl_->fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (impl_->fd < 0)
        throw IoError("cannot create UDP socket");
    impl_->addr.sin_family = AF_INET;
    impl_->addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &impl_->addr.sin_addr) != 1) {
        ::close(impl_->fd);
        throw ArgumentError("not an IPv4 address: " + host);
    }
}

UdpFrameSink::~UdpFrameSink() {
    if (impl_ && impl_->fd >= 0)
        ::close(impl_->fd);
}

bool UdpFrameSink::write(const CqiFrame& frame) {
    const auto bytes = encode_frame(frame);
    const auto sent = ::sendto(impl_->fd, bytes.data(), bytes.size(), 0,
                               reinterpret_cast<const sockaddr*>(&impl_->addr),
                               sizeof(impl_->addr));
    return sent == static_cast<ssize_t>(bytes.size());
}

// ---------------------------------------------------------------------------
// Sources
// ---------------------------------------------------------------------------

ReplaySource::ReplaySource(const std::filesystem::path& grid_file, bool realtime)
    : ReplaySource(gridio::load_grid(grid_file, gridio::GridFormat::binary), realtime) {}

ReplaySource::ReplaySource(gridio::SinrGrid grid, bool realtime)
    : grid_(std::move(grid)), realtime_(realtime) {
    grid_.validate();
}

std::optional<SinrFrame> ReplaySource::next() {
    if (row_ >= grid_.n_subframes())
        return std::nullopt;
    if (realtime_) {
        if (row_ == 0)
            start_ = Clock::now();
        const auto target =
            start_ + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double, std::milli>(
                         static_cast<double>(row_) * grid_.dt_ms));
        std::this_thread::sleep_until(target);
    }
    SinrFrame frame;
    frame.timestamp_ms =
        static_cast<std::uint64_t>(std::llround(static_cast<double>(row_) * grid_.dt_ms));
    frame.sinr = grid_.data.row(row_).transpose();
    ++row_;
    return frame;
}

struct UdpSource::Impl {
    int fd = -1;
    std::uint16_t port = 0;
    int idle_timeout_ms = 5000;
    std::uint64_t max_frames = 0;
    std::uint64_t returned = 0;
    std::uint64_t rejected = 0;
};

UdpSource::UdpSource(std::uint16_t port, int idle_timeout_ms, std::uint64_t max_frames)
    : impl_(std::make_unique<Impl>()) {
    impl_->port = port;
    impl_->idle_timeout_ms = idle_timeout_ms;
    impl_->max_frames = max_frames;
    impl_->fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (impl_->fd < 0)
        throw IoError("cannot create UDP socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(port);
    if (::bind(impl_->fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(impl_->fd);
        throw IoError("cannot bind UDP port " + std::to_string(port));
    }
    if (port == 0) { // ephemeral port requested; report the actual one
        sockaddr_in bound{};
        socklen_t len = sizeof(bound);
        ::getsockname(impl_->fd, reinterpret_cast<sockaddr*>(&bound), &len);
        impl_->port = ntohs(bound.sin_port);
    }
    timeval tv{};
    tv.tv_usec = 100 * 1000; // poll granularity for the idle timeout
    ::setsockopt(impl_->fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
}

UdpSource::~UdpSource() {
    if (impl_ && impl_->fd >= 0)
        ::close(impl_->fd);
}

std::uint16_t UdpSource::port() const {
    return impl_->port;
}

std::uint64_t UdpSource::rejected() const {
    return impl_->rejected;
}

std::optional<SinrFrame> UdpSource::next() {
    if (impl_->max_frames && impl_->returned >= impl_->max_frames)
        return std::nullopt;
    std::uint8_t buf[65536];
    int idle_ms = 0;
    for (;;) {
        const auto got = ::recvfrom(impl_->fd, buf, sizeof(buf), 0, nullptr, nullptr);
        if (got < 0) {
            idle_ms += 100;
            if (idle_ms >= impl_->idle_timeout_ms)
                return std::nullopt;
            continue;
        }
        try {
            SinrFrame frame = decode_sinr_frame({buf, static_cast<std::size_t>(got)});
            ++impl_->returned;
            return frame;
        } catch (const Error& e) {
            ++impl_->rejected;
            log_debug(std::string("rejected datagram: ") + e.what());
        }
    }
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

Pipeline::Pipeline(const crnn::ModelParams& model, const cqimap::CqiTable& table, double dt_ms,
                   bool exact_window)
    : model_(model), table_(table), dt_ms_(dt_ms), exact_window_(exact_window) {
    if (!(dt_ms > 0.0))
        throw ArgumentError("pipeline dt_ms must be positive");
    ts_advance_ms_ = static_cast<std::uint64_t>(
        std::llround(static_cast<double>(model.config.horizon) * dt_ms));
    hidden_ = Eigen::MatrixXd::Zero(model.config.hidden, 1);
    if (exact_window_)
        ring_ = Eigen::MatrixXd::Zero(model.config.window_w, model.config.n_rb);
}

std::optional<CqiFrame> Pipeline::process(const SinrFrame& frame) {
    const auto& cfg = model_.config;
    if (frame.n_rb() != cfg.n_rb)
        throw SchemaError("session width mismatch: frame has " + std::to_string(frame.n_rb()) +
                          " resource blocks, model expects " + std::to_string(cfg.n_rb));

    // SINR -> CQI, the grid the predictor was trained on.
    Eigen::MatrixXd cqi_row(cfg.n_rb, 1);
    for (int r = 0; r < cfg.n_rb; ++r)
        cqi_row(r, 0) = static_cast<double>(
            cqimap::sinr_to_cqi(static_cast<double>(frame.sinr[r]), table_));

    if (exact_window_) {
        ring_.row(ring_pos_) = cqi_row.col(0).transpose();
        ring_pos_ = (ring_pos_ + 1) % cfg.window_w;
    } else {
        const Eigen::MatrixXd features = crnn::conv_features(model_, cqi_row);
        crnn::gru_step(model_, features, hidden_);
    }
    if (count_ < cfg.window_w)
        ++count_;
    if (count_ < cfg.window_w)
        return std::nullopt;

    Eigen::VectorXd y;
    if (exact_window_) {
        Eigen::MatrixXd window(cfg.window_w, cfg.n_rb);
        const int oldest = ring_pos_; // one past the newest row
        for (int t = 0; t < cfg.window_w; ++t)
            window.row(t) = ring_.row((oldest + t) % cfg.window_w);
        y = crnn::forward(model_, window);
    } else {
        y = crnn::readout(model_, hidden_).col(0);
    }

    CqiFrame out;
    out.timestamp_ms = frame.timestamp_ms + ts_advance_ms_;
    out.cqi.resize(static_cast<std::size_t>(cfg.n_rb));
    for (int r = 0; r < cfg.n_rb; ++r)
        out.cqi[static_cast<std::size_t>(r)] = static_cast<std::uint8_t>(crnn::quantize_cqi(y[r]));

    if (emitted_any_ && out.timestamp_ms <= last_out_ts_) {
        ++nonmonotonic_skips_;
        return std::nullopt;
    }
    last_out_ts_ = out.timestamp_ms;
    emitted_any_ = true;
    return out;
}

// ---------------------------------------------------------------------------
// Session driver
// ---------------------------------------------------------------------------

namespace {

struct LatencyRecorder {
    std::vector<double> samples_us;

    void finalize(StreamStats& stats) {
        if (samples_us.empty())
            return;
        std::sort(samples_us.begin(), samples_us.end());
        const auto at = [&](double p) {
            const auto n = samples_us.size();
            const auto idx = std::min(n - 1, static_cast<std::size_t>(std::ceil(p * n)) - 1);
            return samples_us[idx];
        };
        stats.latency_p50_us = at(0.50);
        stats.latency_p99_us = at(0.99);
        stats.latency_max_us = samples_us.back();
    }
};

struct TimedFrame {
    SinrFrame frame;
    Clock::time_point ingest;
};

/// Capacity-1 hand-off between the ingest and compute stages; a newer frame
/// overwrites an unconsumed one (drop-oldest).
class HandoffSlot {
  public:
    // Returns true if an unconsumed frame was overwritten.
    bool push(TimedFrame&& item) {
        std::lock_guard<std::mutex> lock(mu_);
        const bool dropped = slot_.has_value();
        slot_ = std::move(item);
        cv_.notify_one();
        return dropped;
    }

    void close() {
        std::lock_guard<std::mutex> lock(mu_);
        done_ = true;
        cv_.notify_one();
    }

    std::optional<TimedFrame> pop() {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return slot_.has_value() || done_; });
        if (slot_.has_value()) {
            std::optional<TimedFrame> out = std::move(slot_);
            slot_.reset();
            return out;
        }
        return std::nullopt;
    }

  private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::optional<TimedFrame> slot_;
    bool done_ = false;
};

void compute_stage(Pipeline& pipeline, FrameSink& sink, const StreamOptions& options,
                   StreamStats& stats, LatencyRecorder& recorder, const TimedFrame& item) {
    const auto out = pipeline.process(item.frame);
    if (!out)
        return; // warm-up
    const double compute_us = us_between(item.ingest, Clock::now());
    if (compute_us > options.deadline_us) {
        // A late prediction is useless for the next subframe: drop it.
        ++stats.deadline_misses;
        recorder.samples_us.push_back(compute_us);
        return;
    }
    const bool ok = sink.write(*out);
    const double total_us = us_between(item.ingest, Clock::now());
    recorder.samples_us.push_back(total_us);
    if (!ok) {
        ++stats.deadline_misses; // sink backpressure
        return;
    }
    ++stats.frames_emitted;
    if (total_us > options.deadline_us)
        ++stats.deadline_misses;
}

} // namespace

StreamStats run_stream(FrameSource& source, const crnn::ModelParams& model,
                       const cqimap::CqiTable& table, FrameSink& sink,
                       const StreamOptions& options) {
    double dt_ms = 1.0;
    if (auto* replay = dynamic_cast<ReplaySource*>(&source))
        dt_ms = replay->grid().dt_ms;

    Pipeline pipeline(model, table, dt_ms, options.exact_window);
    StreamStats stats;
    LatencyRecorder recorder;

    if (!options.threaded) {
        std::uint64_t taken = 0;
        while (auto frame = source.next()) {
            const Clock::time_point ingest = Clock::now();
            ++stats.frames_processed;
            compute_stage(pipeline, sink, options, stats, recorder, {std::move(*frame), ingest});
            if (options.max_frames && ++taken >= options.max_frames)
                break;
        }
    } else {
        HandoffSlot slot;
        // Stage 1 mutates only the ingest counters, stage 2 only the
        // emit/miss counters; the fields are distinct memory locations.
        std::thread ingest([&] {
            std::uint64_t taken = 0;
            while (auto frame = source.next()) {
                ++stats.frames_processed;
                if (slot.push({std::move(*frame), Clock::now()}))
                    ++stats.frames_dropped_queue;
                if (options.max_frames && ++taken >= options.max_frames)
                    break;
            }
            slot.close();
        });
        while (auto item = slot.pop())
            compute_stage(pipeline, sink, options, stats, recorder, *item);
        ingest.join();
    }

    stats.frames_rejected = source.rejected();
    recorder.finalize(stats);
    if (pipeline.nonmonotonic_skips() > 0)
        log_warn(std::to_string(pipeline.nonmonotonic_skips()) +
                 " output frames skipped to keep timestamps strictly increasing");
    return stats;
}

FrameFileSummary summarize_cqi_frames(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open frame file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    FrameFileSummary summary;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        if (bytes.size() - pos < kFrameHeaderBytes)
            throw FramingError("trailing partial frame in " + path.string());
        const auto n_rb = load_le_at<std::uint16_t>(bytes.data() + pos + 12);
        const std::size_t total = cqi_frame_bytes(n_rb);
        if (bytes.size() - pos < total)
            throw FramingError("trailing partial frame in " + path.string());
        const CqiFrame frame = decode_cqi_frame({bytes.data() + pos, total});
        if (summary.count == 0) {
            summary.first_timestamp_ms = frame.timestamp_ms;
            summary.n_rb = frame.n_rb();
        }
        summary.last_timestamp_ms = frame.timestamp_ms;
        ++summary.count;
        pos += total;
    }
    return summary;
}

} // namespace cqipred::runtime
