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

#include "softplus_kernel.h"

#include <algorithm>
#include <cmath>

namespace swivel::internal {

void CellLossRow(const double* z, const float* x, size_t n, double b0,
                 double b, double alpha, double* loss, double* grad) {
  const bool sqrt_weight = alpha == 0.5;
  for (size_t i = 0; i < n; ++i) {
    const double e = std::exp(-std::abs(z[i]));
    const double hinge_loss = std::max(z[i], 0.0) + std::log1p(e);
    const double hinge_grad = (z[i] >= 0.0 ? 1.0 : e) / (1.0 + e);
    const double count = std::max(static_cast<double>(x[i]), 1e-300);
    const double f =
        b0 + b * (sqrt_weight ? std::sqrt(count) : std::pow(count, alpha));
    const double error = z[i] - std::log(count);
    const bool observed = x[i] > 0.0f;
    loss[i] = observed ? 0.5 * f * error * error : hinge_loss;
    grad[i] = observed ? f * error : hinge_grad;
  }
}

}  // namespace swivel::internal
