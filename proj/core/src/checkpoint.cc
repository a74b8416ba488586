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

#include "swivel/checkpoint.h"

#include <fmt/format.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "swivel/binary_io.h"
#include "swivel/errors.h"

namespace swivel {

void WriteCheckpoint(std::ostream& out, const Checkpoint& checkpoint) {
  const auto& [plan, config, state, store] = checkpoint;
  BinaryWriter w(out);
  w.PutBytes("SWCK", 4);
  w.PutU32(kCheckpointVersion);

  w.PutU32(plan.m_raw());
  w.PutU32(plan.n_raw());
  w.PutU32(plan.k());

  w.PutU32(config.dim);
  w.PutU64(config.steps);
  w.PutF64(config.eta);
  w.PutF64(config.epsilon);
  w.PutU64(config.seed);
  w.PutU32(static_cast<uint32_t>(config.workers));
  w.PutU32(static_cast<uint32_t>(config.schedule));
  w.PutF64(config.objective.weights.alpha);
  w.PutF64(config.objective.weights.b0);
  w.PutF64(config.objective.weights.b);
  w.PutF64(config.objective.shift);
  w.PutU32(config.early_stop ? 1 : 0);

  w.PutU64(state.step);
  w.PutF64(state.epoch_loss);
  w.PutU64(state.epoch_steps);
  w.PutU32(state.stalled_epochs);
  w.PutU32(state.stopped_early ? 1 : 0);
  w.PutU64(state.loss_trace.size());
  w.PutF64s(state.loss_trace);

  w.PutU64(store.rows());
  w.PutU64(store.cols());
  w.PutU32(store.dim());
  w.PutF32s(store.row_embeddings());
  w.PutF32s(store.col_embeddings());
  w.PutF32s(store.row_accumulators());
  w.PutF32s(store.col_accumulators());

  const uint32_t crc = w.crc();
  w.PutU32(crc);
}

Checkpoint ReadCheckpoint(std::istream& in) {
  BinaryReader r(in, "checkpoint");
  char magic[4];
  r.GetBytes(magic, 4);
  if (std::memcmp(magic, "SWCK", 4) != 0) {
    throw DataError("checkpoint: bad magic");
  }
  const uint32_t version = r.GetU32();
  if (version != kCheckpointVersion) {
    throw DataError(fmt::format(
        "checkpoint: version {} is not supported (expected {})", version,
        kCheckpointVersion));
  }

  Checkpoint cp;
  const uint32_t m_raw = r.GetU32();
  const uint32_t n_raw = r.GetU32();
  const uint32_t k = r.GetU32();
  try {
    cp.plan = ShardPlan(m_raw, n_raw, k);
  } catch (const UsageError& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }

  TrainConfig& c = cp.config;
  c.dim = r.GetU32();
  c.steps = r.GetU64();
  c.eta = r.GetF64();
  c.epsilon = r.GetF64();
  c.seed = r.GetU64();
  c.workers = static_cast<int>(r.GetU32());
  const uint32_t schedule = r.GetU32();
  if (schedule > static_cast<uint32_t>(Schedule::kUniform)) {
    throw DataError("checkpoint: unknown schedule");
  }
  c.schedule = static_cast<Schedule>(schedule);
  c.objective.weights.alpha = r.GetF64();
  c.objective.weights.b0 = r.GetF64();
  c.objective.weights.b = r.GetF64();
  c.objective.shift = r.GetF64();
  c.early_stop = r.GetU32() != 0;

  TrainState& s = cp.state;
  s.step = r.GetU64();
  s.epoch_loss = r.GetF64();
  s.epoch_steps = r.GetU64();
  s.stalled_epochs = r.GetU32();
  s.stopped_early = r.GetU32() != 0;
  const uint64_t trace_length = r.GetU64();
  if (trace_length > s.step) throw DataError("checkpoint: corrupt loss trace");
  s.loss_trace.resize(trace_length);
  r.GetF64s(s.loss_trace);

  const uint64_t rows = r.GetU64();
  const uint64_t cols = r.GetU64();
  const uint32_t dim = r.GetU32();
  if (rows != cp.plan.m() || cols != cp.plan.n() || dim != c.dim) {
    throw DataError("checkpoint: store shape disagrees with plan and config");
  }
  if ((rows + cols) * dim > (uint64_t{1} << 36)) {
    throw DataError("checkpoint: implausible store size");
  }
  cp.store = EmbeddingStore(rows, cols, dim);
  r.GetF32s(cp.store.row_embeddings());
  r.GetF32s(cp.store.col_embeddings());
  r.GetF32s(cp.store.row_accumulators());
  r.GetF32s(cp.store.col_accumulators());

  const uint32_t expected = r.crc();
  const uint32_t stored = r.GetU32();
  if (stored != expected) throw DataError("checkpoint: checksum mismatch");
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError("checkpoint: trailing bytes");
  }
  return cp;
}

void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint) {
  const std::string temp = path + ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + temp + " for writing");
    WriteCheckpoint(out, checkpoint);
    out.flush();
    if (!out) throw DataError("error writing " + temp);
  }
  std::filesystem::rename(temp, path);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  return ReadCheckpoint(in);
}

}  // namespace swivel
