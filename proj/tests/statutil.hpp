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

#ifndef CQIPRED_TESTS_STATUTIL_HPP
#define CQIPRED_TESTS_STATUTIL_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "cqipred/chansim.hpp"
#include "cqipred/common.hpp"

namespace statutil {

/// Normalized fading autocorrelation Re{r(lag)}/r(0), ensemble-averaged over
/// independent sum-of-sinusoids realizations. A single finite-M realization's
/// time average converges to its own 64-term sum, not to J0, so averaging
/// across realizations is required to compare against the J0 oracle.
inline std::vector<double> ensemble_autocorr(double fd_hz, int n_sinusoids, int n_realizations,
                                             int samples_per_realization, double dt_ms,
                                             int max_lag, std::uint64_t seed) {
    std::vector<double> acc(static_cast<std::size_t>(max_lag) + 1, 0.0);
    for (int k = 0; k < n_realizations; ++k) {
        const auto tap = cqipred::chansim::gen_tap(
            fd_hz, 0.0, n_sinusoids, samples_per_realization * dt_ms, dt_ms,
            cqipred::derive_seed(seed, static_cast<std::uint64_t>(k)));
        const auto& g = tap.gains;
        const Eigen::Index n = g.size();
        for (int lag = 0; lag <= max_lag; ++lag) {
            std::complex<double> sum = 0.0;
            for (Eigen::Index t = 0; t + lag < n; ++t)
                sum += g[t] * std::conj(g[t + lag]);
            acc[static_cast<std::size_t>(lag)] += sum.real() / static_cast<double>(n - lag);
        }
    }
    const double r0 = acc[0];
    for (double& v : acc)
        v /= r0;
    return acc;
}

/// One-sample Kolmogorov-Smirnov distance of `samples` against the Rayleigh
/// CDF with unit mean-square (F(x) = 1 - exp(-x^2)).
inline double ks_vs_unit_rayleigh(std::vector<double> samples) {
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = 1.0 - std::exp(-samples[i] * samples[i]);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max({d, std::abs(f - lo), std::abs(f - hi)});
    }
    return d;
}

/// Asymptotic KS critical value at significance alpha.
inline double ks_critical(double alpha, std::size_t n) {
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

/// i.i.d. envelope samples: one time sample from each of `count` independent
/// realizations (within-realization samples are correlated and would break
/// the KS critical value).
inline std::vector<double> iid_envelope_samples(double fd_hz, int n_sinusoids, int count,
                                                std::uint64_t seed) {
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const auto tap =
            cqipred::chansim::gen_tap(fd_hz, 0.0, n_sinusoids, 1.0, 1.0,
                                      cqipred::derive_seed(seed, static_cast<std::uint64_t>(k)));
        samples.push_back(std::abs(tap.gains[0]));
    }
    return samples;
}

} // namespace statutil

#endif // CQIPRED_TESTS_STATUTIL_HPP
