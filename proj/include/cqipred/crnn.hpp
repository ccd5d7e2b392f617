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

#ifndef CQIPRED_CRNN_HPP
#define CQIPRED_CRNN_HPP

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <ostream>
#include <vector>

#include "cqipred/grid.hpp"

namespace cqipred::crnn {

/// Architecture and training hyperparameters. All sizes are config, nothing
/// is hard-coded into the network.
struct ModelConfig {
    int window_w = 32;     // input window length, subframes
    int n_rb = 50;         // grid width
    int conv_filters = 16; // frequency-axis conv bank size
    int conv_kernel = 3;   // odd; replicate edge padding
    int hidden = 64;       // recurrent state size
    int horizon = 1;       // prediction distance, subframes
    double loss_alpha = 4.0;  // over-prediction penalty multiplier, >= 1
    double input_scale = 15.0; // grid values divided by this on input,
                               // outputs multiplied by it
    std::uint64_t seed = 0x5eed;

    void validate() const;
    int input_dim() const { return conv_filters * n_rb; }
};

/// All learnable tensors. Vectors are stored as n x 1 matrices so the whole
/// set can be visited uniformly (serialization, Adam, finite differences).
struct ModelParams {
    ModelConfig config;

    Eigen::MatrixXd conv_w; // conv_filters x conv_kernel
    Eigen::MatrixXd conv_b; // conv_filters x 1
    Eigen::MatrixXd w_z, u_z, b_z; // update gate: hidden x input_dim, hidden x hidden, hidden x 1
    Eigen::MatrixXd w_r, u_r, b_r; // reset gate
    Eigen::MatrixXd w_h, u_h, b_h; // candidate state
    Eigen::MatrixXd w_out; // n_rb x hidden
    Eigen::MatrixXd b_out; // n_rb x 1

    static constexpr std::size_t kTensorCount = 13;
    static ModelParams zeros(const ModelConfig& config);

    std::array<Eigen::MatrixXd*, kTensorCount> tensors();
    std::array<const Eigen::MatrixXd*, kTensorCount> tensors() const;
    static const std::array<const char*, kTensorCount>& tensor_names();

    std::size_t parameter_count() const;
    bool all_finite() const;
};

/// Gradients (and Adam moments) share the parameter container.
using GradientSet = ModelParams;

/// Seeded init: weights uniform in (-1/sqrt(fan_in), 1/sqrt(fan_in)), biases 0.
ModelParams init_model(const ModelConfig& config);

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

/// Per-timestep pieces, shared by the windowed forward pass and streaming
/// inference so both produce bit-identical results. Columns are batch samples.

/// rows_raw is n_rb x B (one grid row per sample); returns input_dim x B
/// conv features: scaled input -> 1-D frequency conv, replicate edges -> ReLU.
Eigen::MatrixXd conv_features(const ModelParams& params, const Eigen::MatrixXd& rows_raw);

/// Advances the recurrent state in place given conv features x (input_dim x B).
void gru_step(const ModelParams& params, const Eigen::MatrixXd& x, Eigen::MatrixXd& h);

/// Continuous per-RB outputs (n_rb x B) from a hidden state.
Eigen::MatrixXd readout(const ModelParams& params, const Eigen::MatrixXd& h);

/// Full forward pass over one window (window_w x n_rb, raw grid values):
/// conv per timestep, GRU from a zero state in time order, linear readout.
/// Returns unquantized per-RB predictions.
Eigen::VectorXd forward(const ModelParams& params, const Eigen::MatrixXd& window);

/// floor(forward) clamped to [0, 15]: the conservative quantizer.
Eigen::VectorXi predict_next(const ModelParams& params, const Eigen::MatrixXd& window);

int quantize_cqi(double value);

/// Repeats the last observed row; the comparison baseline.
Eigen::VectorXd baseline_persistence(const Eigen::MatrixXd& window);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

/// Squared error with multiplicative penalty on over-prediction:
/// mean over entries of alpha*e^2 if e > 0 else e^2, where e = pred - truth.
double asymmetric_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth, double alpha);

struct TrainingBatch {
    std::vector<Eigen::MatrixXd> windows; // each window_w x n_rb, raw values
    Eigen::MatrixXd targets;              // n_rb x batch, column per sample
};

/// Exact analytic gradients of the mean asymmetric loss over the batch.
/// Subgradient 0 is used at the loss kink (e = 0) and the ReLU kink.
GradientSet gradients(const ModelParams& params, const TrainingBatch& batch, double alpha,
                      double* mean_loss = nullptr);

struct TrainOptions {
    int epochs = 30;
    int batch_size = 32;
    double lr = 5e-3;
    double lr_decay = 1.0;             // per-epoch geometric factor
    std::size_t epoch_window_cap = 0;  // 0 = every window, else random subset per epoch
};

struct TrainResult {
    ModelParams params;
    std::vector<double> epoch_loss; // mean training loss per completed epoch
    bool diverged = false;          // true -> params hold the last good checkpoint
    int completed_epochs = 0;
};

/// Mini-batch Adam (beta1 0.9, beta2 0.999, eps 1e-8) on shuffled windows of
/// `series` (T x n_rb raw grid values, CQI-as-reals or SINR dB). Deterministic
/// for a fixed seed; aborts to the last epoch checkpoint on divergence.
TrainResult train(const ModelParams& initial, const gridio::GridMatrix& series,
                  const TrainOptions& options);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Continuous predictor over a raw window; both the CRNN and the persistence
/// baseline fit this shape.
using Predictor = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

Predictor make_predictor(const ModelParams& params);
Predictor make_persistence_predictor();

struct Metrics {
    double rmse = 0.0;
    double mae = 0.0;
    double asym_loss = 0.0;
    double overprediction_rate = 0.0; // fraction of entries with pred > truth
    double exact_match_rate = 0.0;    // quantized CQI equals (rounded) truth
    Eigen::VectorXd per_rb_rmse;
    std::size_t n_windows = 0;
};

struct EvalOptions {
    int window_stride = 1;         // evaluate every k-th window
    std::ostream* trace = nullptr; // per-RB prediction-vs-truth CSV sink
    int trace_rb = -1;             // -1 = all resource blocks
};

/// Runs the predictor over the grid's windows and reports metrics on the
/// continuous predictions (quantization only affects exact_match_rate and
/// the trace column).
Metrics evaluate(const Predictor& predictor, const gridio::GridMatrix& grid,
                 const ModelConfig& config, const EvalOptions& options = {});

// ---------------------------------------------------------------------------
// Serialization ("CRN1": magic, u32-le header length, JSON config header,
// then every tensor row-major as little-endian f64)
// ---------------------------------------------------------------------------

void save_model(const ModelParams& params, std::ostream& os);
void save_model(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_model(std::istream& is);
ModelParams load_model(const std::filesystem::path& path);

/// Loads and additionally checks the structural fields against `expected`
/// (window_w, n_rb, conv_filters, conv_kernel, hidden, horizon); a mismatch
/// raises SchemaError naming the field.
ModelParams load_model(const std::filesystem::path& path, const ModelConfig& expected);

} // namespace cqipred::crnn

#endif // CQIPRED_CRNN_HPP
