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

// PMI targets, confidence weights, and the piecewise reconstruction loss.
//
// Observed cells (x_ij > 0) use a confidence-weighted squared error against
// the PMI. Unobserved cells use a softplus "soft hinge" against the PMI
// computed as if the count were 1, which penalizes over-estimates and is
// nearly free for under-estimates. All math is in double precision.

#ifndef SWIVEL_OBJECTIVE_H_
#define SWIVEL_OBJECTIVE_H_

#include <span>
#include <vector>

#include "swivel/matrix.h"

namespace swivel {

// f(x) = b0 + b * x^alpha.
struct WeightParams {
  double alpha = 0.5;
  double b0 = 0.1;
  double b = 0.25;

  void Validate() const;
};

struct ObjectiveConfig {
  WeightParams weights;
  // Subtracted from every target; log(k) emulates a k-negative-sample
  // shifted PMI.
  double shift = 0.0;

  void Validate() const;
};

struct LossAndGradient {
  double loss = 0.0;
  double grad = 0.0;  // d loss / d prediction
};

// log x_ij + log |D| - log x_i* - log x_*j. Throws UsageError unless every
// argument is strictly positive.
double Pmi(double count, double row_marginal, double col_marginal,
           double total);

// Pmi() with the count replaced by 1.
double SmoothedPmi(double row_marginal, double col_marginal, double total);

double Confidence(double count, const WeightParams& weights);

// log(1 + e^z) without overflow.
double Softplus(double z);
// 1 / (1 + e^-z) without overflow.
double Sigmoid(double z);

// 0.5 * f(x) * (p - target)^2 with target = Pmi(...) - shift.
LossAndGradient ObservedLoss(double prediction, double count,
                             double row_marginal, double col_marginal,
                             double total, const ObjectiveConfig& config);

// Softplus(p - target) with target = SmoothedPmi(...) - shift.
LossAndGradient UnobservedLoss(double prediction, double row_marginal,
                               double col_marginal, double total,
                               const ObjectiveConfig& config);

struct ShardGradient {
  double loss = 0.0;          // summed over all k*k cells
  std::vector<double> grad;   // k*k, d loss / d prediction per cell
};

// Evaluates every cell of `shard` against `predictions` (k*k, row-major).
// Cells in a row or column with zero marginal are padding and contribute
// neither loss nor gradient. Throws UsageError on a shape mismatch.
ShardGradient ShardObjective(std::span<const double> predictions,
                             const Shard& shard, const ObjectiveConfig& config);

// Allocation-free variant used by the trainer: writes the gradient into
// `grad` (k*k) and returns the summed loss.
double ShardObjectiveInto(std::span<const double> predictions,
                          const Shard& shard, const ObjectiveConfig& config,
                          std::span<double> grad);

}  // namespace swivel

#endif  // SWIVEL_OBJECTIVE_H_
