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

#include "cqipred/crnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>

#include "cqipred/common.hpp"

namespace cqipred::crnn {

using nlohmann::json;

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr char kModelMagic[4] = {'C', 'R', 'N', '1'};

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& a) {
    return (1.0 / (1.0 + (-a.array()).exp())).matrix();
}

/// Rows shifted by `offset` with replicate edges: out.row(j) = in.row(clamp(j+offset)).
Eigen::MatrixXd shifted_rows(const Eigen::MatrixXd& in, int offset) {
    const Eigen::Index r_count = in.rows();
    Eigen::MatrixXd out(r_count, in.cols());
    for (Eigen::Index j = 0; j < r_count; ++j) {
        const Eigen::Index src = std::clamp<Eigen::Index>(j + offset, 0, r_count - 1);
        out.row(j) = in.row(src);
    }
    return out;
}

/// Conv bank pre-activation over scaled rows (n_rb x B) -> (input_dim x B).
Eigen::MatrixXd conv_preactivation(const ModelParams& p, const Eigen::MatrixXd& in_scaled) {
    const int r_count = p.config.n_rb;
    const int filters = p.config.conv_filters;
    const int kernel = p.config.conv_kernel;
    const int half = (kernel - 1) / 2;
    const Eigen::Index batch = in_scaled.cols();

    Eigen::MatrixXd out(static_cast<Eigen::Index>(filters) * r_count, batch);
    std::vector<Eigen::MatrixXd> shifts;
    shifts.reserve(static_cast<std::size_t>(kernel));
    for (int u = 0; u < kernel; ++u)
        shifts.push_back(shifted_rows(in_scaled, u - half));
    for (int f = 0; f < filters; ++f) {
        auto block = out.middleRows(static_cast<Eigen::Index>(f) * r_count, r_count);
        block.setConstant(p.conv_b(f, 0));
        for (int u = 0; u < kernel; ++u)
            block += p.conv_w(f, u) * shifts[static_cast<std::size_t>(u)];
    }
    return out;
}

void gru_step_cached(const ModelParams& p, const Eigen::MatrixXd& x, const Eigen::MatrixXd& h_prev,
                     Eigen::MatrixXd& z, Eigen::MatrixXd& r, Eigen::MatrixXd& hc,
                     Eigen::MatrixXd& h_out) {
    z = sigmoid(((p.w_z * x + p.u_z * h_prev).colwise() + p.b_z.col(0)));
    r = sigmoid(((p.w_r * x + p.u_r * h_prev).colwise() + p.b_r.col(0)));
    hc = ((p.w_h * x + p.u_h * r.cwiseProduct(h_prev)).colwise() + p.b_h.col(0))
             .array()
             .tanh()
             .matrix();
    h_out = (1.0 - z.array()).matrix().cwiseProduct(hc) + z.cwiseProduct(h_prev);
}

struct BatchCache {
    std::vector<Eigen::MatrixXd> in_rows;  // w of n_rb x B (scaled)
    std::vector<Eigen::MatrixXd> conv_pre; // w of input_dim x B
    std::vector<Eigen::MatrixXd> x;        // w of input_dim x B
    std::vector<Eigen::MatrixXd> z, r, hc, h;
};

/// Forward over a batch (columns = samples); caches everything backprop needs.
Eigen::MatrixXd batch_forward(const ModelParams& p, const std::vector<Eigen::MatrixXd>& windows,
                              BatchCache* cache) {
    const auto& cfg = p.config;
    const auto batch = static_cast<Eigen::Index>(windows.size());
    const int w = cfg.window_w;

    if (cache) {
        cache->in_rows.resize(static_cast<std::size_t>(w));
        cache->conv_pre.resize(static_cast<std::size_t>(w));
        cache->x.resize(static_cast<std::size_t>(w));
        cache->z.resize(static_cast<std::size_t>(w));
        cache->r.resize(static_cast<std::size_t>(w));
        cache->hc.resize(static_cast<std::size_t>(w));
        cache->h.resize(static_cast<std::size_t>(w));
    }

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(cfg.hidden, batch);
    Eigen::MatrixXd rows(cfg.n_rb, batch);
    for (int t = 0; t < w; ++t) {
        for (Eigen::Index b = 0; b < batch; ++b)
            rows.col(b) = windows[static_cast<std::size_t>(b)].row(t).transpose();
        Eigen::MatrixXd in_scaled = rows / cfg.input_scale;
        Eigen::MatrixXd pre = conv_preactivation(p, in_scaled);
        Eigen::MatrixXd x = pre.cwiseMax(0.0);
        Eigen::MatrixXd z, r, hc, h_next;
        gru_step_cached(p, x, h, z, r, hc, h_next);
        if (cache) {
            const auto ti = static_cast<std::size_t>(t);
            cache->in_rows[ti] = std::move(in_scaled);
            cache->conv_pre[ti] = std::move(pre);
            cache->x[ti] = std::move(x);
            cache->z[ti] = std::move(z);
            cache->r[ti] = std::move(r);
            cache->hc[ti] = std::move(hc);
            cache->h[ti] = h_next;
        }
        h = std::move(h_next);
    }
    return ((p.w_out * h).colwise() + p.b_out.col(0)) * cfg.input_scale;
}

void validate_window_shape(const ModelConfig& cfg, const Eigen::MatrixXd& window) {
    if (window.rows() != cfg.window_w || window.cols() != cfg.n_rb)
        throw ArgumentError("window shape " + std::to_string(window.rows()) + "x" +
                            std::to_string(window.cols()) + " does not match config " +
                            std::to_string(cfg.window_w) + "x" + std::to_string(cfg.n_rb));
    if (!window.allFinite())
        throw ArgumentError("window contains non-finite entries");
}

} // namespace

void ModelConfig::validate() const {
    if (window_w < 1 || n_rb < 1 || conv_filters < 1 || hidden < 1 || horizon < 1)
        throw ArgumentError("model dimensions must be positive");
    if (conv_kernel < 1 || conv_kernel % 2 == 0)
        throw ArgumentError("conv kernel must be odd and positive");
    if (!(loss_alpha >= 1.0))
        throw ArgumentError("loss_alpha must be >= 1");
    if (!(input_scale > 0.0))
        throw ArgumentError("input_scale must be positive");
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
    config.validate();
    ModelParams p;
    p.config = config;
    const int in = config.input_dim();
    const int hid = config.hidden;
    p.conv_w.setZero(config.conv_filters, config.conv_kernel);
    p.conv_b.setZero(config.conv_filters, 1);
    p.w_z.setZero(hid, in);
    p.u_z.setZero(hid, hid);
    p.b_z.setZero(hid, 1);
    p.w_r.setZero(hid, in);
    p.u_r.setZero(hid, hid);
    p.b_r.setZero(hid, 1);
    p.w_h.setZero(hid, in);
    p.u_h.setZero(hid, hid);
    p.b_h.setZero(hid, 1);
    p.w_out.setZero(config.n_rb, hid);
    p.b_out.setZero(config.n_rb, 1);
    return p;
}

std::array<Eigen::MatrixXd*, ModelParams::kTensorCount> ModelParams::tensors() {
    return {&conv_w, &conv_b, &w_z, &u_z, &b_z, &w_r, &u_r,
            &b_r,    &w_h,    &u_h, &b_h, &w_out, &b_out};
}

std::array<const Eigen::MatrixXd*, ModelParams::kTensorCount> ModelParams::tensors() const {
    return {&conv_w, &conv_b, &w_z, &u_z, &b_z, &w_r, &u_r,
            &b_r,    &w_h,    &u_h, &b_h, &w_out, &b_out};
}

const std::array<const char*, ModelParams::kTensorCount>& ModelParams::tensor_names() {
    static const std::array<const char*, kTensorCount> names = {
        "conv_w", "conv_b", "w_z", "u_z", "b_z", "w_r", "u_r",
        "b_r",    "w_h",    "u_h", "b_h", "w_out", "b_out"};
    return names;
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto* t : tensors())
        n += static_cast<std::size_t>(t->size());
    return n;
}

bool ModelParams::all_finite() const {
    for (const auto* t : tensors())
        if (!t->allFinite())
            return false;
    return true;
}

ModelParams init_model(const ModelConfig& config) {
    ModelParams p = ModelParams::zeros(config);
    std::mt19937_64 rng(config.seed);

    const auto fill_uniform = [&rng](Eigen::MatrixXd& m, int fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                m(i, j) = dist(rng);
    };

    // Draw order is part of the determinism contract: conv, gates z/r/h, output.
    fill_uniform(p.conv_w, config.conv_kernel);
    fill_uniform(p.w_z, config.input_dim());
    fill_uniform(p.u_z, config.hidden);
    fill_uniform(p.w_r, config.input_dim());
    fill_uniform(p.u_r, config.hidden);
    fill_uniform(p.w_h, config.input_dim());
    fill_uniform(p.u_h, config.hidden);
    fill_uniform(p.w_out, config.hidden);
    return p;
}

Eigen::MatrixXd conv_features(const ModelParams& params, const Eigen::MatrixXd& rows_raw) {
    if (rows_raw.rows() != params.config.n_rb)
        throw ArgumentError("conv input rows must equal n_rb");
    const Eigen::MatrixXd scaled = rows_raw / params.config.input_scale;
    return conv_preactivation(params, scaled).cwiseMax(0.0);
}

void gru_step(const ModelParams& params, const Eigen::MatrixXd& x, Eigen::MatrixXd& h) {
    if (x.rows() != params.config.input_dim() || h.rows() != params.config.hidden ||
        x.cols() != h.cols())
        throw ArgumentError("gru_step shape mismatch");
    Eigen::MatrixXd z, r, hc, h_next;
    gru_step_cached(params, x, h, z, r, hc, h_next);
    h = std::move(h_next);
}

Eigen::MatrixXd readout(const ModelParams& params, const Eigen::MatrixXd& h) {
    return ((params.w_out * h).colwise() + params.b_out.col(0)) * params.config.input_scale;
}

Eigen::VectorXd forward(const ModelParams& params, const Eigen::MatrixXd& window) {
    validate_window_shape(params.config, window);
    std::vector<Eigen::MatrixXd> one{window};
    return batch_forward(params, one, nullptr).col(0);
}

int quantize_cqi(double value) {
    if (!(value >= 0.0))
        return 0;
    if (value >= 15.0)
        return 15;
    return static_cast<int>(value); // truncation == floor for nonnegative values
}

Eigen::VectorXi predict_next(const ModelParams& params, const Eigen::MatrixXd& window) {
    const Eigen::VectorXd y = forward(params, window);
    Eigen::VectorXi q(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i)
        q[i] = quantize_cqi(y[i]);
    return q;
}

Eigen::VectorXd baseline_persistence(const Eigen::MatrixXd& window) {
    if (window.rows() < 1)
        throw ArgumentError("persistence needs at least one row");
    return window.row(window.rows() - 1).transpose();
}

double asymmetric_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth, double alpha) {
    if (pred.size() != truth.size())
        throw ArgumentError("asymmetric_loss: length mismatch (" + std::to_string(pred.size()) +
                            " vs " + std::to_string(truth.size()) + ")");
    if (!(alpha >= 1.0))
        throw ArgumentError("asymmetric_loss: alpha must be >= 1");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - truth[i];
        sum += (e > 0.0 ? alpha : 1.0) * e * e;
    }
    return sum / static_cast<double>(pred.size());
}

GradientSet gradients(const ModelParams& params, const TrainingBatch& batch, double alpha,
                      double* mean_loss) {
    const auto& cfg = params.config;
    if (batch.windows.empty())
        throw ArgumentError("gradients: batch must be nonempty");
    if (!(alpha >= 1.0))
        throw ArgumentError("gradients: alpha must be >= 1");
    const auto b_count = static_cast<Eigen::Index>(batch.windows.size());
    if (batch.targets.rows() != cfg.n_rb || batch.targets.cols() != b_count)
        throw ArgumentError("gradients: targets must be n_rb x batch");
    for (const auto& window : batch.windows)
        validate_window_shape(cfg, window);

    BatchCache cache;
    const Eigen::MatrixXd y = batch_forward(params, batch.windows, &cache);
    if (!y.allFinite())
        throw NumericalError("non-finite output at the readout layer");

    const Eigen::MatrixXd err = y - batch.targets;
    const Eigen::ArrayXXd weights = 1.0 + (alpha - 1.0) * (err.array() > 0.0).cast<double>();
    const double denom = static_cast<double>(b_count) * cfg.n_rb;
    if (mean_loss)
        *mean_loss = (weights * err.array().square()).sum() / denom;

    GradientSet g = ModelParams::zeros(cfg);
    const Eigen::MatrixXd dy = (2.0 / denom) * (weights * err.array()).matrix();

    // Readout (output scaling folds into every upstream gradient via dh).
    const int w = cfg.window_w;
    const auto& h_last = cache.h[static_cast<std::size_t>(w - 1)];
    g.w_out = cfg.input_scale * (dy * h_last.transpose());
    g.b_out = cfg.input_scale * dy.rowwise().sum();

    Eigen::MatrixXd dh = cfg.input_scale * (params.w_out.transpose() * dy);
    const Eigen::MatrixXd h0 = Eigen::MatrixXd::Zero(cfg.hidden, b_count);

    for (int t = w - 1; t >= 0; --t) {
        const auto ti = static_cast<std::size_t>(t);
        const Eigen::MatrixXd& h_prev = (t > 0) ? cache.h[ti - 1] : h0;
        const Eigen::MatrixXd& z = cache.z[ti];
        const Eigen::MatrixXd& r = cache.r[ti];
        const Eigen::MatrixXd& hc = cache.hc[ti];
        const Eigen::MatrixXd& x = cache.x[ti];

        // h_t = (1 - z) .* hc + z .* h_prev
        const Eigen::MatrixXd dz = dh.cwiseProduct(h_prev - hc);
        const Eigen::MatrixXd dhc = dh.cwiseProduct((1.0 - z.array()).matrix());
        Eigen::MatrixXd dh_prev = dh.cwiseProduct(z);

        const Eigen::MatrixXd da_c =
            dhc.cwiseProduct((1.0 - hc.array().square()).matrix()); // tanh'
        g.w_h += da_c * x.transpose();
        g.u_h += da_c * r.cwiseProduct(h_prev).transpose();
        g.b_h += da_c.rowwise().sum();

        const Eigen::MatrixXd through_uh = params.u_h.transpose() * da_c;
        const Eigen::MatrixXd dr = through_uh.cwiseProduct(h_prev);
        dh_prev += through_uh.cwiseProduct(r);

        const Eigen::MatrixXd da_r =
            dr.cwiseProduct((r.array() * (1.0 - r.array())).matrix()); // sigmoid'
        g.w_r += da_r * x.transpose();
        g.u_r += da_r * h_prev.transpose();
        g.b_r += da_r.rowwise().sum();
        dh_prev += params.u_r.transpose() * da_r;

        const Eigen::MatrixXd da_z =
            dz.cwiseProduct((z.array() * (1.0 - z.array())).matrix());
        g.w_z += da_z * x.transpose();
        g.u_z += da_z * h_prev.transpose();
        g.b_z += da_z.rowwise().sum();
        dh_prev += params.u_z.transpose() * da_z;

        const Eigen::MatrixXd dx = params.w_z.transpose() * da_z +
                                   params.w_r.transpose() * da_r +
                                   params.w_h.transpose() * da_c;

        // Conv bank: dpre = dx masked by ReLU; accumulate filter taps against
        // the same shifted inputs the forward pass saw.
        const Eigen::MatrixXd dpre =
            dx.cwiseProduct((cache.conv_pre[ti].array() > 0.0).cast<double>().matrix());
        const int half = (cfg.conv_kernel - 1) / 2;
        for (int u = 0; u < cfg.conv_kernel; ++u) {
            const Eigen::MatrixXd shift = shifted_rows(cache.in_rows[ti], u - half);
            for (int f = 0; f < cfg.conv_filters; ++f) {
                const auto block =
                    dpre.middleRows(static_cast<Eigen::Index>(f) * cfg.n_rb, cfg.n_rb);
                g.conv_w(f, u) += block.cwiseProduct(shift).sum();
            }
        }
        for (int f = 0; f < cfg.conv_filters; ++f)
            g.conv_b(f, 0) +=
                dpre.middleRows(static_cast<Eigen::Index>(f) * cfg.n_rb, cfg.n_rb).sum();

        dh = std::move(dh_prev);
    }

    const auto tensor_ptrs = g.tensors();
    for (std::size_t i = 0; i < ModelParams::kTensorCount; ++i)
        if (!tensor_ptrs[i]->allFinite())
            throw NumericalError(std::string("non-finite gradient in tensor ") +
                                 ModelParams::tensor_names()[i]);
    return g;
}

namespace {

struct AdamState {
    GradientSet m, v;
    long step = 0;

    explicit AdamState(const ModelConfig& cfg)
        : m(ModelParams::zeros(cfg)), v(ModelParams::zeros(cfg)) {}

    void update(ModelParams& p, const GradientSet& g, double lr) {
        ++step;
        const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
        auto pt = p.tensors();
        auto gt = g.tensors();
        auto mt = m.tensors();
        auto vt = v.tensors();
        for (std::size_t i = 0; i < ModelParams::kTensorCount; ++i) {
            auto& pm = *pt[i];
            const auto& gm = *gt[i];
            auto& mm = *mt[i];
            auto& vm = *vt[i];
            mm = kAdamBeta1 * mm + (1.0 - kAdamBeta1) * gm;
            vm = (kAdamBeta2 * vm.array() + (1.0 - kAdamBeta2) * gm.array().square()).matrix();
            pm.array() -= lr * (mm.array() / bc1) / ((vm.array() / bc2).sqrt() + kAdamEps);
        }
    }
};

} // namespace

TrainResult train(const ModelParams& initial, const gridio::GridMatrix& series,
                  const TrainOptions& options) {
    const ModelConfig& cfg = initial.config;
    cfg.validate();
    if (options.epochs < 1 || options.batch_size < 1)
        throw ArgumentError("train: epochs and batch_size must be positive");
    if (!(options.lr > 0.0) || !(options.lr_decay > 0.0))
        throw ArgumentError("train: learning rate and decay must be positive");
    if (series.cols() != cfg.n_rb)
        throw ArgumentError("train: series width " + std::to_string(series.cols()) +
                            " does not match config n_rb " + std::to_string(cfg.n_rb));
    if (!series.allFinite())
        throw ValidationError("train: series contains non-finite values");

    const gridio::SlidingWindows windows(series, cfg.window_w, cfg.horizon);
    const std::size_t n_windows = windows.size();
    std::vector<std::size_t> order(n_windows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 0x747261696eull));

    const std::size_t per_epoch =
        options.epoch_window_cap ? std::min(options.epoch_window_cap, n_windows) : n_windows;

    TrainResult result;
    result.params = initial;
    ModelParams checkpoint = initial;
    AdamState adam(cfg);

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        const double lr = options.lr * std::pow(options.lr_decay, epoch);
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double loss_sum = 0.0;
        std::size_t sample_count = 0;
        bool diverged = false;

        for (std::size_t start = 0; start < per_epoch; start += options.batch_size) {
            const std::size_t bs =
                std::min<std::size_t>(options.batch_size, per_epoch - start);
            TrainingBatch batch;
            batch.windows.reserve(bs);
            batch.targets.resize(cfg.n_rb, static_cast<Eigen::Index>(bs));
            for (std::size_t b = 0; b < bs; ++b) {
                const std::size_t idx = order[start + b];
                batch.windows.push_back(windows.window(idx).cast<double>());
                batch.targets.col(static_cast<Eigen::Index>(b)) =
                    windows.target(idx).transpose().cast<double>();
            }

            double batch_loss = 0.0;
            GradientSet grads;
            try {
                grads = gradients(result.params, batch, cfg.loss_alpha, &batch_loss);
            } catch (const NumericalError& e) {
                log_warn(std::string("training diverged: ") + e.what());
                diverged = true;
                break;
            }
            if (!std::isfinite(batch_loss)) {
                log_warn("training diverged: non-finite loss");
                diverged = true;
                break;
            }
            adam.update(result.params, grads, lr);
            loss_sum += batch_loss * static_cast<double>(bs);
            sample_count += bs;
        }

        if (diverged || !result.params.all_finite()) {
            result.params = checkpoint;
            result.diverged = true;
            return result;
        }
        result.epoch_loss.push_back(loss_sum / static_cast<double>(sample_count));
        result.completed_epochs = epoch + 1;
        checkpoint = result.params;
    }
    return result;
}

Predictor make_predictor(const ModelParams& params) {
    return [params](const Eigen::MatrixXd& window) { return forward(params, window); };
}

Predictor make_persistence_predictor() {
    return [](const Eigen::MatrixXd& window) { return baseline_persistence(window); };
}

Metrics evaluate(const Predictor& predictor, const gridio::GridMatrix& grid,
                 const ModelConfig& config, const EvalOptions& options) {
    config.validate();
    if (options.window_stride < 1)
        throw ArgumentError("evaluate: window_stride must be positive");
    const gridio::SlidingWindows windows(grid, config.window_w, config.horizon);

    Metrics m;
    m.per_rb_rmse = Eigen::VectorXd::Zero(config.n_rb);
    Eigen::VectorXd per_rb_sq = Eigen::VectorXd::Zero(config.n_rb);
    double sq_sum = 0.0, abs_sum = 0.0, asym_sum = 0.0;
    std::size_t over_count = 0, match_count = 0, entry_count = 0;

    if (options.trace)
        *options.trace << "t,rb,truth,prediction,predicted_cqi\n";

    for (std::size_t i = 0; i < windows.size(); i += static_cast<std::size_t>(options.window_stride)) {
        const Eigen::MatrixXd window = windows.window(i).cast<double>();
        const Eigen::VectorXd pred = predictor(window);
        if (pred.size() != config.n_rb)
            throw ArgumentError("predictor returned wrong width");
        const Eigen::VectorXd truth = windows.target(i).transpose().cast<double>();
        const std::size_t target_row = i + static_cast<std::size_t>(config.window_w) +
                                       static_cast<std::size_t>(config.horizon) - 1;

        for (int rb = 0; rb < config.n_rb; ++rb) {
            const double e = pred[rb] - truth[rb];
            sq_sum += e * e;
            per_rb_sq[rb] += e * e;
            abs_sum += std::abs(e);
            asym_sum += (e > 0.0 ? config.loss_alpha : 1.0) * e * e;
            if (e > 0.0)
                ++over_count;
            const int q = quantize_cqi(pred[rb]);
            const int truth_q = std::clamp(static_cast<int>(std::lround(truth[rb])), 0, 15);
            if (q == truth_q)
                ++match_count;
            ++entry_count;
            if (options.trace && (options.trace_rb < 0 || options.trace_rb == rb))
                *options.trace << target_row << ',' << rb << ',' << truth[rb] << ',' << pred[rb]
                               << ',' << q << '\n';
        }
        ++m.n_windows;
    }

    if (entry_count == 0)
        throw InsufficientDataError("evaluate: no windows to evaluate");
    const double n = static_cast<double>(entry_count);
    m.rmse = std::sqrt(sq_sum / n);
    m.mae = abs_sum / n;
    m.asym_loss = asym_sum / n;
    m.overprediction_rate = static_cast<double>(over_count) / n;
    m.exact_match_rate = static_cast<double>(match_count) / n;
    const double per_rb_n = static_cast<double>(m.n_windows);
    for (int rb = 0; rb < config.n_rb; ++rb)
        m.per_rb_rmse[rb] = std::sqrt(per_rb_sq[rb] / per_rb_n);
    return m;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void save_model(const ModelParams& params, std::ostream& os) {
    params.config.validate();
    if (!params.all_finite())
        throw ValidationError("refusing to save non-finite model parameters");
    const json header{{"conv_filters", params.config.conv_filters},
                      {"conv_kernel", params.config.conv_kernel},
                      {"hidden", params.config.hidden},
                      {"horizon", params.config.horizon},
                      {"input_scale", params.config.input_scale},
                      {"loss_alpha", params.config.loss_alpha},
                      {"n_rb", params.config.n_rb},
                      {"seed", params.config.seed},
                      {"version", 1},
                      {"window_w", params.config.window_w}};
    const std::string head = header.dump();
    os.write(kModelMagic, 4);
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(head.size()));
    os.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const auto* t : params.tensors())
        for (Eigen::Index i = 0; i < t->rows(); ++i)
            for (Eigen::Index j = 0; j < t->cols(); ++j)
                write_le<double>(os, (*t)(i, j));
    if (!os)
        throw IoError("write failed while saving model");
}

void save_model(const ModelParams& params, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot open for writing: " + path.string());
    save_model(params, f);
}

ModelParams load_model(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (is.gcount() != 4)
        throw FramingError("model file shorter than its magic");
    if (std::memcmp(magic, kModelMagic, 4) != 0)
        throw SchemaError("not a model file (bad magic)");
    const auto head_len = read_le<std::uint32_t>(is, "model header length");
    if (head_len == 0 || head_len > (1u << 20))
        throw SchemaError("implausible model header length");
    std::string head(head_len, '\0');
    is.read(head.data(), head_len);
    if (static_cast<std::uint32_t>(is.gcount()) != head_len)
        throw FramingError("model header truncated");

    ModelConfig cfg;
    try {
        const json j = json::parse(head);
        if (j.at("version").get<int>() != 1)
            throw SchemaError("unsupported model version");
        cfg.conv_filters = j.at("conv_filters").get<int>();
        cfg.conv_kernel = j.at("conv_kernel").get<int>();
        cfg.hidden = j.at("hidden").get<int>();
        cfg.horizon = j.at("horizon").get<int>();
        cfg.input_scale = j.at("input_scale").get<double>();
        cfg.loss_alpha = j.at("loss_alpha").get<double>();
        cfg.n_rb = j.at("n_rb").get<int>();
        cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.window_w = j.at("window_w").get<int>();
    } catch (const json::exception& e) {
        throw SchemaError(std::string("bad model header: ") + e.what());
    }
    cfg.validate();

    ModelParams p = ModelParams::zeros(cfg);
    for (auto* t : p.tensors())
        for (Eigen::Index i = 0; i < t->rows(); ++i)
            for (Eigen::Index j = 0; j < t->cols(); ++j)
                (*t)(i, j) = read_le<double>(is, "model tensor payload");
    if (is.peek() != std::char_traits<char>::eof())
        throw FramingError("model file has trailing bytes after declared tensors");
    if (!p.all_finite())
        throw ValidationError("model file contains non-finite parameters");
    return p;
}

ModelParams load_model(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open model file: " + path.string());
    return load_model(f);
}

ModelParams load_model(const std::filesystem::path& path, const ModelConfig& expected) {
    ModelParams p = load_model(path);
    const auto check = [](const char* field, auto got, auto want) {
        if (got != want)
            throw SchemaError(std::string("model field ") + field + "=" + std::to_string(got) +
                              " does not match expected " + std::to_string(want));
    };
    check("window_w", p.config.window_w, expected.window_w);
    check("n_rb", p.config.n_rb, expected.n_rb);
    check("conv_filters", p.config.conv_filters, expected.conv_filters);
    check("conv_kernel", p.config.conv_kernel, expected.conv_kernel);
    check("hidden", p.config.hidden, expected.hidden);
    check("horizon", p.config.horizon, expected.horizon);
    return p;
}

} // namespace cqipred::crnn
