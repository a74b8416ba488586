/*
 * Copyright 2026 The Swivel Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "swivel/objective.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "softplus_kernel.h"
#include "swivel/errors.h"

namespace swivel {

void WeightParams::Validate() const {
  if (!(b0 >= 0) || !std::isfinite(b0)) throw UsageError("b0 must be >= 0");
  if (!(b > 0) || !std::isfinite(b)) throw UsageError("b must be > 0");
  if (!(alpha > 0 && alpha <= 1)) throw UsageError("alpha must be in (0, 1]");
}

void ObjectiveConfig::Validate() const {
  weights.Validate();
  if (!std::isfinite(shift)) throw UsageError("shift must be finite");
}

double Pmi(double count, double row_marginal, double col_marginal,
           double total) {
  if (!(count > 0 && row_marginal > 0 && col_marginal > 0 && total > 0)) {
    throw UsageError(fmt::format(
        "pmi needs positive counts, got x={} row={} col={} total={}", count,
        row_marginal, col_marginal, total));
  }
  return std::log(count) + std::log(total) - std::log(row_marginal) -
         std::log(col_marginal);
}

double SmoothedPmi(double row_marginal, double col_marginal, double total) {
  return Pmi(1.0, row_marginal, col_marginal, total);
}

double Confidence(double count, const WeightParams& weights) {
  if (!(count > 0)) throw UsageError("confidence needs a positive count");
  return weights.b0 + weights.b * std::pow(count, weights.alpha);
}

double Softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LossAndGradient ObservedLoss(double prediction, double count,
                             double row_marginal, double col_marginal,
                             double total, const ObjectiveConfig& config) {
  const double target =
      Pmi(count, row_marginal, col_marginal, total) - config.shift;
  const double f = Confidence(count, config.weights);
  const double error = prediction - target;
  return {0.5 * f * error * error, f * error};
}

LossAndGradient UnobservedLoss(double prediction, double row_marginal,
                               double col_marginal, double total,
                               const ObjectiveConfig& config) {
  const double target =
      SmoothedPmi(row_marginal, col_marginal, total) - config.shift;
  const double z = prediction - target;
  return {Softplus(z), Sigmoid(z)};
}

ShardGradient ShardObjective(std::span<const double> predictions,
                             const Shard& shard, const ObjectiveConfig& config) {
  ShardGradient result;
  result.grad.resize(size_t{shard.k} * shard.k);
  result.loss = ShardObjectiveInto(predictions, shard, config, result.grad);
  return result;
}

double ShardObjectiveInto(std::span<const double> predictions,
                          const Shard& shard, const ObjectiveConfig& config,
                          std::span<double> grad) {
  const size_t k = shard.k;
  if (predictions.size() != k * k || grad.size() != k * k ||
      shard.counts.size() != k * k || shard.row_marginals.size() != k ||
      shard.col_marginals.size() != k) {
    throw UsageError(fmt::format(
        "shard objective shape mismatch: {} predictions for a {}x{} shard",
        predictions.size(), k, k));
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  if (!(shard.total > 0)) return 0.0;

  thread_local std::vector<double> log_col, z, row_loss, row_grad;
  log_col.resize(k);
  z.resize(k);
  row_loss.resize(k);
  row_grad.resize(k);
  for (size_t u = 0; u < k; ++u) {
    const double c = shard.col_marginals[u];
    log_col[u] = c > 0 ? std::log(c) : 0.0;
  }
  const double log_total = std::log(shard.total);
  const WeightParams& w = config.weights;

  double loss = 0.0;
  for (size_t t = 0; t < k; ++t) {
    const double row_marginal = shard.row_marginals[t];
    if (!(row_marginal > 0)) continue;
    // Target of an unobserved cell, less the column term.
    const double base = log_total - std::log(row_marginal) - config.shift;
    const double* p = predictions.data() + t * k;
    const float* x = shard.counts.data() + t * k;
    double* g = grad.data() + t * k;
    bool finite = true;
    for (size_t u = 0; u < k; ++u) {
      z[u] = p[u] - (base - log_col[u]);
      finite &= std::isfinite(z[u]);
    }
    if (finite) {
      internal::CellLossRow(z.data(), x, k, w.b0, w.b, w.alpha,
                            row_loss.data(), row_grad.data());
    } else {
      // Exact path so non-finite values propagate to the caller's check.
      for (size_t u = 0; u < k; ++u) {
        if (x[u] > 0) {
          const double f = Confidence(x[u], w);
          const double error = z[u] - std::log(x[u]);
          row_loss[u] = 0.5 * f * error * error;
          row_grad[u] = f * error;
        } else {
          row_loss[u] = Softplus(z[u]);
          row_grad[u] = Sigmoid(z[u]);
        }
      }
    }
    for (size_t u = 0; u < k; ++u) {
      if (!(shard.col_marginals[u] > 0)) continue;
      loss += row_loss[u];
      g[u] = row_grad[u];
    }
  }
  return loss;
}

}  // namespace swivel
