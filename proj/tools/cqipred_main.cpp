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

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "cqipred/chansim.hpp"
#include "cqipred/common.hpp"
#include "cqipred/cqimap.hpp"
#include "cqipred/crnn.hpp"
#include "cqipred/crsest.hpp"
#include "cqipred/grid.hpp"
#include "cqipred/runtime.hpp"

namespace {

using namespace cqipred;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitProtocol = 2;
constexpr int kExitConfigMismatch = 3;

gridio::GridFormat parse_format(const std::string& name) {
    if (name == "binary")
        return gridio::GridFormat::binary;
    if (name == "csv")
        return gridio::GridFormat::csv;
    throw ArgumentError("unknown grid format '" + name + "' (binary|csv)");
}

/// Scenario argument: a preset name or a config file path.
chansim::ScenarioConfig resolve_scenario(const std::string& arg, std::uint64_t seed_override,
                                         bool has_seed) {
    chansim::ScenarioConfig cfg;
    if (std::filesystem::exists(arg))
        cfg = chansim::ScenarioConfig::from_file(arg);
    else
        cfg = chansim::ScenarioConfig::preset(arg);
    if (has_seed)
        cfg.seed = seed_override;
    return cfg;
}

cqimap::CqiTable resolve_table(const std::string& path) {
    return path.empty() ? cqimap::CqiTable::defaults() : cqimap::CqiTable::from_file(path);
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string scenario = "pedestrian";
    int duration_ms = 10000;
    std::uint64_t seed = 0;
    bool has_seed = false;
    std::string out;
    std::string format = "binary";
    std::string dump_channel;
};

int run_synth(const SynthArgs& args) {
    auto cfg = resolve_scenario(args.scenario, args.seed, args.has_seed);
    const auto grid = chansim::synth_sinr_grid(cfg, args.duration_ms);
    gridio::save_grid(grid, std::filesystem::path(args.out), parse_format(args.format));
    std::cerr << "wrote " << grid.n_subframes() << "x" << grid.n_rb() << " grid to " << args.out
              << "\n";

    if (!args.dump_channel.empty()) {
        chansim::ChannelSynthesizer synth(cfg, args.duration_ms);
        chansim::ChannelFileWriter writer(args.dump_channel, cfg.name, synth.n_subframes(),
                                          synth.n_subcarriers(), 1.0, cfg.mean_snr_db);
        Eigen::MatrixXcf block;
        constexpr Eigen::Index kChunk = 1024;
        for (Eigen::Index t0 = 0; t0 < synth.n_subframes(); t0 += kChunk) {
            const Eigen::Index rows = std::min(kChunk, synth.n_subframes() - t0);
            synth.response_block(t0, rows, block);
            writer.append(block);
        }
        writer.close();
        std::cerr << "wrote channel realization to " << args.dump_channel << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// estimate: stored channel realization -> CRS subframes -> SINR grid
// ---------------------------------------------------------------------------

struct EstimateArgs {
    std::string channel;
    std::string out;
    std::string format = "binary";
    int cell_id = 1;
    std::uint64_t seed = 1;
    double snr_override = std::numeric_limits<double>::quiet_NaN();
};

int run_estimate(const EstimateArgs& args) {
    chansim::ChannelFileReader reader(args.channel);
    const int k_count = reader.n_subcarriers();
    if (k_count % crsest::kSubcarriersPerRb != 0)
        throw SchemaError("channel width is not a whole number of resource blocks");
    const int n_rb = k_count / crsest::kSubcarriersPerRb;
    const double mean_snr_db =
        std::isnan(args.snr_override) ? reader.mean_snr_db() : args.snr_override;
    const double noise_var = std::pow(10.0, -mean_snr_db / 10.0);

    const auto layout = crsest::crs_positions(args.cell_id, n_rb);
    gridio::SinrGrid grid;
    grid.dt_ms = reader.dt_ms();
    grid.meta.name = reader.name() + "-estimated";
    grid.meta.n_rb = n_rb;
    grid.meta.bandwidth_hz = gridio::nominal_bandwidth_hz(n_rb);
    grid.meta.source = gridio::GridSource::synthetic;
    grid.data.resize(reader.n_subframes(), n_rb);

    Eigen::MatrixXcf block;
    constexpr Eigen::Index kChunk = 512;
    for (Eigen::Index t0 = 0; t0 < reader.n_subframes(); t0 += kChunk) {
        const Eigen::Index rows = std::min(kChunk, reader.n_subframes() - t0);
        reader.read_block(t0, rows, block);
        for (Eigen::Index t = 0; t < rows; ++t) {
            const auto subframe_index = static_cast<std::uint32_t>(t0 + t);
            const auto pilots = crsest::crs_sequence(args.cell_id, subframe_index, layout.n_pilots());
            const Eigen::VectorXcf response = block.row(t).transpose();
            const auto channel = crsest::replicate_channel(response, n_rb);
            const auto received = crsest::build_subframe(
                layout, pilots, channel, noise_var, derive_seed(args.seed, subframe_index));
            grid.data.row(t0 + t) = crsest::estimate_sinr(received, layout, pilots).transpose();
        }
    }
    gridio::save_grid(grid, std::filesystem::path(args.out), parse_format(args.format));
    std::cerr << "wrote estimated " << grid.n_subframes() << "x" << grid.n_rb() << " grid to "
              << args.out << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// map
// ---------------------------------------------------------------------------

struct MapArgs {
    std::string in;
    std::string out;
    std::string table;
    std::string in_format = "binary";
    std::string out_format = "binary";
};

int run_map(const MapArgs& args) {
    const auto table = resolve_table(args.table);
    const auto sinr = gridio::load_grid(std::filesystem::path(args.in), parse_format(args.in_format));
    const auto cqi = cqimap::map_grid(sinr, table);
    // CQI grids reuse the grid container with integer-valued entries.
    gridio::SinrGrid out{cqi.as_reals(), cqi.dt_ms, cqi.meta};
    out.meta.name = cqi.meta.name + "-cqi";
    gridio::save_grid(out, std::filesystem::path(args.out), parse_format(args.out_format));
    std::cerr << "wrote CQI grid to " << args.out << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string grid;
    std::string format = "binary";
    std::string out;
    std::string table;
    bool raw = false; // feed the grid as-is instead of mapping SINR -> CQI
    double train_fraction = 0.8;
    int window_w = 32;
    int conv_filters = 16;
    int conv_kernel = 3;
    int hidden = 64;
    int horizon = 1;
    double alpha = 4.0;
    std::uint64_t seed = 0x5eed;
    int epochs = 30;
    int batch_size = 32;
    double lr = 5e-3;
    double lr_decay = 0.9;
    std::size_t epoch_window_cap = 0;
    std::string loss_history;
};

gridio::GridMatrix training_series(const gridio::SinrGrid& grid, bool raw,
                                   const std::string& table_path) {
    if (raw)
        return grid.data;
    const auto table = resolve_table(table_path);
    return cqimap::map_grid(grid, table).as_reals();
}

int run_train(const TrainArgs& args) {
    const auto grid = gridio::load_grid(std::filesystem::path(args.grid), parse_format(args.format));
    const auto [train_part, test_part] = gridio::split(grid, args.train_fraction);
    const auto series = training_series(train_part, args.raw, args.table);

    crnn::ModelConfig cfg;
    cfg.window_w = args.window_w;
    cfg.n_rb = static_cast<int>(grid.n_rb());
    cfg.conv_filters = args.conv_filters;
    cfg.conv_kernel = args.conv_kernel;
    cfg.hidden = args.hidden;
    cfg.horizon = args.horizon;
    cfg.loss_alpha = args.alpha;
    cfg.input_scale = args.raw ? 40.0 : 15.0;
    cfg.seed = args.seed;

    crnn::TrainOptions opt;
    opt.epochs = args.epochs;
    opt.batch_size = args.batch_size;
    opt.lr = args.lr;
    opt.lr_decay = args.lr_decay;
    opt.epoch_window_cap = args.epoch_window_cap;

    const auto result = crnn::train(crnn::init_model(cfg), series, opt);
    if (result.diverged)
        std::cerr << "training diverged after " << result.completed_epochs
                  << " epochs; saving the last good checkpoint\n";
    crnn::save_model(result.params, std::filesystem::path(args.out));
    std::cerr << "wrote model (" << result.params.parameter_count() << " parameters) to "
              << args.out << "\n";

    if (!args.loss_history.empty()) {
        std::ofstream f(args.loss_history, std::ios::trunc);
        if (!f)
            throw IoError("cannot open " + args.loss_history);
        f << "epoch,loss\n";
        for (std::size_t i = 0; i < result.epoch_loss.size(); ++i)
            f << i << ',' << result.epoch_loss[i] << '\n';
    }
    for (std::size_t i = 0; i < result.epoch_loss.size(); ++i)
        std::cerr << "epoch " << i << ": loss " << result.epoch_loss[i] << "\n";
    return result.diverged ? kExitFailure : kExitOk;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictArgs {
    std::string model;
    std::string grid;
    std::string format = "binary";
    std::string table;
    bool raw = false;
    long at = -1; // window start row; -1 = last full window
};

int run_predict(const PredictArgs& args) {
    const auto params = crnn::load_model(std::filesystem::path(args.model));
    const auto grid = gridio::load_grid(std::filesystem::path(args.grid), parse_format(args.format));
    const auto series = training_series(grid, args.raw, args.table);
    const auto& cfg = params.config;
    if (series.cols() != cfg.n_rb)
        throw SchemaError("grid width does not match the model");
    if (series.rows() < cfg.window_w)
        throw InsufficientDataError("grid shorter than one window");
    const long last_start = static_cast<long>(series.rows()) - cfg.window_w;
    const long start = args.at < 0 ? last_start : args.at;
    if (start < 0 || start > last_start)
        throw ArgumentError("window start out of range");
    const Eigen::MatrixXd window =
        series.middleRows(start, cfg.window_w).cast<double>();
    const Eigen::VectorXi cqi = crnn::predict_next(params, window);
    for (Eigen::Index i = 0; i < cqi.size(); ++i)
        std::cout << (i ? "," : "") << cqi[i];
    std::cout << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string model;
    std::string grid;
    std::string format = "binary";
    std::string table;
    bool raw = false;
    double train_fraction = 0.8;
    std::string baseline; // "persistence" compares against the baseline too
    std::string metrics_out;
    std::string trace_out;
    int trace_rb = -1;
    int window_stride = 1;
};

void print_metrics(std::ostream& os, const std::string& prefix, const crnn::Metrics& m) {
    os << prefix << "rmse = " << m.rmse << '\n'
       << prefix << "mae = " << m.mae << '\n'
       << prefix << "asym_loss = " << m.asym_loss << '\n'
       << prefix << "overprediction_rate = " << m.overprediction_rate << '\n'
       << prefix << "exact_match_rate = " << m.exact_match_rate << '\n'
       << prefix << "n_windows = " << m.n_windows << '\n';
    os << prefix << "per_rb_rmse =";
    for (Eigen::Index i = 0; i < m.per_rb_rmse.size(); ++i)
        os << (i ? "," : " ") << m.per_rb_rmse[i];
    os << '\n';
}

int run_eval(const EvalArgs& args) {
    const auto params = crnn::load_model(std::filesystem::path(args.model));
    const auto grid = gridio::load_grid(std::filesystem::path(args.grid), parse_format(args.format));
    const auto [train_part, test_part] = gridio::split(grid, args.train_fraction);
    const auto series = training_series(test_part, args.raw, args.table);
    if (series.cols() != params.config.n_rb)
        throw SchemaError("grid width does not match the model");

    std::ofstream trace_file;
    crnn::EvalOptions opt;
    opt.window_stride = args.window_stride;
    opt.trace_rb = args.trace_rb;
    if (!args.trace_out.empty()) {
        trace_file.open(args.trace_out, std::ios::trunc);
        if (!trace_file)
            throw IoError("cannot open " + args.trace_out);
        opt.trace = &trace_file;
    }

    const auto metrics = crnn::evaluate(crnn::make_predictor(params), series, params.config, opt);
    print_metrics(std::cout, "", metrics);

    std::optional<crnn::Metrics> base;
    if (args.baseline == "persistence") {
        crnn::EvalOptions base_opt;
        base_opt.window_stride = args.window_stride;
        base = crnn::evaluate(crnn::make_persistence_predictor(), series, params.config, base_opt);
        print_metrics(std::cout, "baseline_", *base);
    }

    if (!args.metrics_out.empty()) {
        std::ofstream f(args.metrics_out, std::ios::trunc);
        if (!f)
            throw IoError("cannot open " + args.metrics_out);
        print_metrics(f, "", metrics);
        if (base)
            print_metrics(f, "baseline_", *base);
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// stream
// ---------------------------------------------------------------------------

struct StreamArgs {
    std::string replay;
    bool realtime = false;
    int listen_port = -1;
    std::string model;
    std::string table;
    std::string sink_file;
    std::string send_to; // host:port
    int deadline_us = 1000;
    bool exact_window = false;
    bool threaded = false;
    std::uint64_t max_frames = 0;
    int idle_timeout_ms = 5000;
    std::string stats_out;
};

int run_stream_cmd(const StreamArgs& args) {
    const auto params = crnn::load_model(std::filesystem::path(args.model));
    const auto table = resolve_table(args.table);

    std::unique_ptr<runtime::FrameSource> source;
    if (!args.replay.empty())
        source = std::make_unique<runtime::ReplaySource>(std::filesystem::path(args.replay),
                                                         args.realtime);
    else if (args.listen_port >= 0)
        source = std::make_unique<runtime::UdpSource>(static_cast<std::uint16_t>(args.listen_port),
                                                      args.idle_timeout_ms, args.max_frames);
    else
        throw ArgumentError("stream needs --replay <file> or --listen <port>");

    std::unique_ptr<runtime::FrameSink> sink;
    if (!args.sink_file.empty()) {
        sink = std::make_unique<runtime::FileFrameSink>(std::filesystem::path(args.sink_file));
    } else if (!args.send_to.empty()) {
        const auto colon = args.send_to.rfind(':');
        if (colon == std::string::npos)
            throw ArgumentError("--send expects host:port");
        sink = std::make_unique<runtime::UdpFrameSink>(
            args.send_to.substr(0, colon),
            static_cast<std::uint16_t>(std::stoi(args.send_to.substr(colon + 1))));
    } else {
        throw ArgumentError("stream needs --sink-file <path> or --send <host:port>");
    }

    runtime::StreamOptions opt;
    opt.deadline_us = args.deadline_us;
    opt.realtime = args.realtime;
    opt.exact_window = args.exact_window;
    opt.threaded = args.threaded;
    opt.max_frames = args.max_frames;
    opt.idle_timeout_ms = args.idle_timeout_ms;

    const auto stats = runtime::run_stream(*source, params, table, *sink, opt);
    stats.print(std::cout);
    if (!args.stats_out.empty()) {
        std::ofstream f(args.stats_out, std::ios::trunc);
        if (!f)
            throw IoError("cannot open " + args.stats_out);
        stats.print(f);
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

struct StatsArgs {
    std::string grid;
    std::string format = "binary";
    bool signed_deltas = false;
    std::size_t max_points = 1000;
    std::string frames;
};

int run_stats(const StatsArgs& args) {
    if (!args.grid.empty()) {
        const auto grid =
            gridio::load_grid(std::filesystem::path(args.grid), parse_format(args.format));
        const auto cdf = gridio::delta_cdf(grid, args.signed_deltas);
        std::cout << "delta_db,cdf\n";
        for (const auto& [x, p] : cdf.points(args.max_points))
            std::cout << x << ',' << p << '\n';
    }
    if (!args.frames.empty()) {
        const auto summary = runtime::summarize_cqi_frames(args.frames);
        std::cout << "frames = " << summary.count << '\n'
                  << "n_rb = " << summary.n_rb << '\n'
                  << "first_timestamp_ms = " << summary.first_timestamp_ms << '\n'
                  << "last_timestamp_ms = " << summary.last_timestamp_ms << '\n';
    }
    if (args.grid.empty() && args.frames.empty())
        throw ArgumentError("stats needs --grid and/or --frames");
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"per-resource-block channel quality measurement, prediction and streaming"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "synthesize a fading-channel SINR grid");
    synth->add_option("--scenario", synth_args.scenario,
                      "preset name (pedestrian|vehicle|train) or scenario config file");
    synth->add_option("--duration-ms", synth_args.duration_ms, "grid length in subframes");
    auto* seed_opt = synth->add_option("--seed", synth_args.seed, "override the scenario seed");
    synth->add_option("--out", synth_args.out, "output grid file")->required();
    synth->add_option("--format", synth_args.format, "binary|csv");
    synth->add_option("--dump-channel", synth_args.dump_channel,
                      "also store the per-subcarrier channel realization");

    EstimateArgs est_args;
    auto* estimate = app.add_subcommand(
        "estimate", "estimate per-RB SINR from reference signals over a stored channel");
    estimate->add_option("--channel", est_args.channel, "channel realization file")->required();
    estimate->add_option("--out", est_args.out, "output grid file")->required();
    estimate->add_option("--format", est_args.format, "binary|csv");
    estimate->add_option("--cell-id", est_args.cell_id, "cell identity in [0, 503]");
    estimate->add_option("--seed", est_args.seed, "noise seed");
    estimate->add_option("--mean-snr-db", est_args.snr_override,
                         "override the SNR stored in the channel file");

    MapArgs map_args;
    auto* map_cmd = app.add_subcommand("map", "map a SINR grid to a CQI grid");
    map_cmd->add_option("--in", map_args.in, "input SINR grid")->required();
    map_cmd->add_option("--out", map_args.out, "output CQI grid")->required();
    map_cmd->add_option("--table", map_args.table, "CQI table config file");
    map_cmd->add_option("--in-format", map_args.in_format, "binary|csv");
    map_cmd->add_option("--out-format", map_args.out_format, "binary|csv");

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "train the predictor on a grid file");
    train_cmd->add_option("--grid", train_args.grid, "input grid")->required();
    train_cmd->add_option("--format", train_args.format, "binary|csv");
    train_cmd->add_option("--out", train_args.out, "output model file")->required();
    train_cmd->add_option("--table", train_args.table, "CQI table config file");
    train_cmd->add_flag("--raw", train_args.raw, "train on raw grid values (skip CQI mapping)");
    train_cmd->add_option("--train-fraction", train_args.train_fraction, "temporal split point");
    train_cmd->add_option("--window", train_args.window_w, "input window length");
    train_cmd->add_option("--filters", train_args.conv_filters, "conv filter count");
    train_cmd->add_option("--kernel", train_args.conv_kernel, "conv kernel (odd)");
    train_cmd->add_option("--hidden", train_args.hidden, "recurrent state size");
    train_cmd->add_option("--horizon", train_args.horizon, "prediction horizon, subframes");
    train_cmd->add_option("--alpha", train_args.alpha, "over-prediction penalty (>= 1)");
    train_cmd->add_option("--seed", train_args.seed, "init/shuffle seed");
    train_cmd->add_option("--epochs", train_args.epochs, "training epochs");
    train_cmd->add_option("--batch", train_args.batch_size, "mini-batch size");
    train_cmd->add_option("--lr", train_args.lr, "learning rate");
    train_cmd->add_option("--lr-decay", train_args.lr_decay, "per-epoch learning-rate factor");
    train_cmd->add_option("--epoch-window-cap", train_args.epoch_window_cap,
                          "windows per epoch (0 = all)");
    train_cmd->add_option("--loss-history", train_args.loss_history, "per-epoch loss CSV");

    PredictArgs predict_args;
    auto* predict_cmd = app.add_subcommand("predict", "predict the next CQI row from a grid");
    predict_cmd->add_option("--model", predict_args.model, "model file")->required();
    predict_cmd->add_option("--grid", predict_args.grid, "input grid")->required();
    predict_cmd->add_option("--format", predict_args.format, "binary|csv");
    predict_cmd->add_option("--table", predict_args.table, "CQI table config file");
    predict_cmd->add_flag("--raw", predict_args.raw, "feed raw grid values");
    predict_cmd->add_option("--at", predict_args.at, "window start row (-1 = latest)");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a model on the test split of a grid");
    eval_cmd->add_option("--model", eval_args.model, "model file")->required();
    eval_cmd->add_option("--grid", eval_args.grid, "input grid")->required();
    eval_cmd->add_option("--format", eval_args.format, "binary|csv");
    eval_cmd->add_option("--table", eval_args.table, "CQI table config file");
    eval_cmd->add_flag("--raw", eval_args.raw, "feed raw grid values");
    eval_cmd->add_option("--train-fraction", eval_args.train_fraction, "temporal split point");
    eval_cmd->add_option("--baseline", eval_args.baseline, "persistence");
    eval_cmd->add_option("--metrics-out", eval_args.metrics_out, "metrics key/value file");
    eval_cmd->add_option("--trace-out", eval_args.trace_out, "prediction-vs-truth trace CSV");
    eval_cmd->add_option("--trace-rb", eval_args.trace_rb, "trace one resource block (-1 = all)");
    eval_cmd->add_option("--stride", eval_args.window_stride, "evaluate every k-th window");

    StreamArgs stream_args;
    auto* stream_cmd = app.add_subcommand("stream", "run the real-time prediction pipeline");
    stream_cmd->add_option("--replay", stream_args.replay, "replay a stored grid file");
    stream_cmd->add_flag("--realtime", stream_args.realtime, "pace replay at the grid cadence");
    stream_cmd->add_option("--listen", stream_args.listen_port, "listen for frames on a UDP port");
    stream_cmd->add_option("--model", stream_args.model, "model file")->required();
    stream_cmd->add_option("--table", stream_args.table, "CQI table config file");
    stream_cmd->add_option("--sink-file", stream_args.sink_file, "write CQI frames to a file");
    stream_cmd->add_option("--send", stream_args.send_to, "send CQI frames to host:port");
    stream_cmd->add_option("--deadline-us", stream_args.deadline_us, "per-frame deadline");
    stream_cmd->add_flag("--exact-window", stream_args.exact_window,
                         "recompute the full window every frame");
    stream_cmd->add_flag("--threaded", stream_args.threaded, "two-stage ingest/compute pipeline");
    stream_cmd->add_option("--max-frames", stream_args.max_frames, "stop after N input frames");
    stream_cmd->add_option("--idle-timeout-ms", stream_args.idle_timeout_ms,
                           "listen mode: stop after this much silence");
    stream_cmd->add_option("--stats-out", stream_args.stats_out, "write stats key/value file");

    StatsArgs stats_args;
    auto* stats_cmd = app.add_subcommand("stats", "grid delta-SINR CDF and frame-file summaries");
    stats_cmd->add_option("--grid", stats_args.grid, "grid file for the delta CDF");
    stats_cmd->add_option("--format", stats_args.format, "binary|csv");
    stats_cmd->add_flag("--signed", stats_args.signed_deltas, "signed deltas instead of |delta|");
    stats_cmd->add_option("--max-points", stats_args.max_points, "CDF points to emit");
    stats_cmd->add_option("--frames", stats_args.frames, "CQI frame file to summarize");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            synth_args.has_seed = seed_opt->count() > 0;
            return run_synth(synth_args);
        }
        if (estimate->parsed())
            return run_estimate(est_args);
        if (map_cmd->parsed())
            return run_map(map_args);
        if (train_cmd->parsed())
            return run_train(train_args);
        if (predict_cmd->parsed())
            return run_predict(predict_args);
        if (eval_cmd->parsed())
            return run_eval(eval_args);
        if (stream_cmd->parsed())
            return run_stream_cmd(stream_args);
        if (stats_cmd->parsed())
            return run_stats(stats_args);
    } catch (const ProtocolError& e) {
        std::cerr << "protocol error: " << e.what() << "\n";
        return kExitProtocol;
    } catch (const SchemaError& e) {
        std::cerr << "config mismatch: " << e.what() << "\n";
        return kExitConfigMismatch;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitOk;
}
