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

// Per-cell loss kernel. This file is compiled with -ffast-math so the
// transcendental calls vectorize; callers must only pass finite inputs.

#ifndef SWIVEL_SOFTPLUS_KERNEL_H_
#define SWIVEL_SOFTPLUS_KERNEL_H_

#include <cstddef>

namespace swivel::internal {

// z[i] is the prediction less the unobserved target and x[i] the count.
// Observed cells (x > 0) get the weighted squared error against log x[i]
// and the others the soft hinge. Writes per-cell loss and gradient.
void CellLossRow(const double* z, const float* x, size_t n, double b0,
                 double b, double alpha, double* loss, double* grad);

}  // namespace swivel::internal

#endif  // SWIVEL_SOFTPLUS_KERNEL_H_
