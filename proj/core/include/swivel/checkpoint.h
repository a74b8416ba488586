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

// Versioned, CRC-protected training checkpoints.
//
// Layout (little-endian):
//   "SWCK"  u32 version
//   plan:   u32 m_raw, u32 n_raw, u32 k
//   config: u32 dim, u64 steps, f64 eta, f64 epsilon, u64 seed, u32 workers,
//           u32 schedule, f64 alpha, f64 b0, f64 b, f64 shift, u32 early_stop
//   state:  u64 step, f64 epoch_loss, u64 epoch_steps, u32 stalled_epochs,
//           u32 stopped_early, u64 trace_length, f64[trace_length] trace
//   store:  u64 rows, u64 cols, u32 dim, then f32 arrays W (rows*dim),
//           W~ (cols*dim), W accumulators, W~ accumulators
//   u32 CRC-32 of every preceding byte

#ifndef SWIVEL_CHECKPOINT_H_
#define SWIVEL_CHECKPOINT_H_

#include <iosfwd>
#include <string>

#include "swivel/matrix.h"
#include "swivel/trainer.h"

namespace swivel {

inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ShardPlan plan;
  TrainConfig config;
  TrainState state;
  EmbeddingStore store;
};

void WriteCheckpoint(std::ostream& out, const Checkpoint& checkpoint);
// Throws DataError on bad magic, version mismatch, truncation, or a
// checksum failure.
Checkpoint ReadCheckpoint(std::istream& in);

// Writes to a temporary file and renames it into place.
void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace swivel

#endif  // SWIVEL_CHECKPOINT_H_
