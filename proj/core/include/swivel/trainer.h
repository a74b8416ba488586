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

// Embedding parameters and the shard-sampling Adagrad training loop.

#ifndef SWIVEL_TRAINER_H_
#define SWIVEL_TRAINER_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "swivel/matrix.h"
#include "swivel/objective.h"

namespace swivel {

// Row (focus) embeddings W, column (context) embeddings W~, and their
// per-parameter Adagrad accumulators, all row-major single precision.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  // All parameters and accumulators zero.
  EmbeddingStore(uint64_t rows, uint64_t cols, uint32_t dim);

  // Entries i.i.d. N(0, sigma^2) with sigma = dim^-1/2; deterministic in seed.
  static EmbeddingStore Initialize(uint64_t rows, uint64_t cols, uint32_t dim,
                                   uint64_t seed);

  uint64_t rows() const { return rows_; }
  uint64_t cols() const { return cols_; }
  uint32_t dim() const { return dim_; }

  std::span<float> row_vector(uint64_t i) {
    return {row_embeddings_.data() + i * dim_, dim_};
  }
  std::span<const float> row_vector(uint64_t i) const {
    return {row_embeddings_.data() + i * dim_, dim_};
  }
  std::span<float> col_vector(uint64_t j) {
    return {col_embeddings_.data() + j * dim_, dim_};
  }
  std::span<const float> col_vector(uint64_t j) const {
    return {col_embeddings_.data() + j * dim_, dim_};
  }

  std::vector<float>& row_embeddings() { return row_embeddings_; }
  const std::vector<float>& row_embeddings() const { return row_embeddings_; }
  std::vector<float>& col_embeddings() { return col_embeddings_; }
  const std::vector<float>& col_embeddings() const { return col_embeddings_; }
  std::vector<float>& row_accumulators() { return row_accumulators_; }
  const std::vector<float>& row_accumulators() const {
    return row_accumulators_;
  }
  std::vector<float>& col_accumulators() { return col_accumulators_; }
  const std::vector<float>& col_accumulators() const {
    return col_accumulators_;
  }

  bool AllFinite() const;

  friend bool operator==(const EmbeddingStore&,
                         const EmbeddingStore&) = default;

 private:
  uint64_t rows_ = 0;
  uint64_t cols_ = 0;
  uint32_t dim_ = 0;
  std::vector<float> row_embeddings_;
  std::vector<float> col_embeddings_;
  std::vector<float> row_accumulators_;
  std::vector<float> col_accumulators_;
};

enum class Schedule { kPermutation, kUniform };

std::string_view ScheduleName(Schedule schedule);
std::optional<Schedule> ParseSchedule(std::string_view name);

struct TrainConfig {
  uint32_t dim = 300;
  uint64_t steps = 1'000'000;
  double eta = 0.1;
  double epsilon = 1e-8;
  uint64_t seed = 42;
  int workers = 1;
  Schedule schedule = Schedule::kPermutation;
  ObjectiveConfig objective;
  // Stop once the epoch-mean loss improves by less than 0.1% for three
  // consecutive epochs.
  bool early_stop = false;

  void Validate() const;
};

// Deterministic map from a global step number to a shard index. The
// permutation schedule visits every shard once per epoch of num_shards steps
// in an order derived from (seed, epoch); the uniform schedule draws each
// step's shard independently from (seed, step).
class ShardSchedule {
 public:
  ShardSchedule(Schedule kind, size_t num_shards, uint64_t seed);

  size_t ShardAt(uint64_t step);
  size_t num_shards() const { return num_shards_; }

 private:
  Schedule kind_;
  size_t num_shards_;
  uint64_t seed_;
  uint64_t cached_epoch_ = UINT64_MAX;
  std::vector<size_t> permutation_;
};

// Read access to the shards of one plan, indexed by plan.ShardIndex().
class ShardSource {
 public:
  virtual ~ShardSource() = default;
  virtual const ShardPlan& plan() const = 0;
  // Returns the shard, either from internal storage or loaded into
  // `scratch`. Safe to call concurrently with distinct scratch buffers.
  virtual const Shard& Get(size_t index, Shard& scratch) const = 0;
  size_t size() const { return plan().num_shards(); }
};

class InMemoryShards : public ShardSource {
 public:
  InMemoryShards(ShardPlan plan, std::vector<Shard> shards);
  // Extracts every shard of a finalized matrix.
  static InMemoryShards FromMatrix(const FinalizedMatrix& finalized);

  const ShardPlan& plan() const override { return plan_; }
  const Shard& Get(size_t index, Shard& scratch) const override;

 private:
  ShardPlan plan_;
  std::vector<Shard> shards_;
};

// Shard files plus manifest as written by the `shard` command. With
// `preload` every shard is read once up front; otherwise each Get() reads
// the file.
class ShardDirectory : public ShardSource {
 public:
  ShardDirectory(std::string directory, bool preload);

  const ShardPlan& plan() const override { return manifest_.plan; }
  const Shard& Get(size_t index, Shard& scratch) const override;
  const PlanManifest& manifest() const { return manifest_; }

 private:
  std::string directory_;
  PlanManifest manifest_;
  std::vector<Shard> cache_;
};

// Reusable per-worker buffers for one training step.
class StepWorkspace {
 public:
  StepWorkspace();
  ~StepWorkspace();
  StepWorkspace(StepWorkspace&&) noexcept;
  StepWorkspace& operator=(StepWorkspace&&) noexcept;

  // Gradients of the last ComputeBlockGradients() call, k x dim row-major:
  // row t is the gradient for W row (row_block + t * R), likewise for W~.
  std::span<const double> row_gradients() const;
  std::span<const double> col_gradients() const;

 private:
  friend double ComputeBlockGradients(const EmbeddingStore&, const Shard&,
                                      const ObjectiveConfig&, StepWorkspace&);
  friend double TrainStep(EmbeddingStore&, const Shard&, const TrainConfig&,
                          StepWorkspace&);
  struct Buffers;
  std::unique_ptr<Buffers> buffers_;
};

// Predicts the shard's k x k PMI block as W_rows * W~_colsᵀ and returns its
// loss, leaving the block gradients in the workspace. Parameters are read
// with word-atomic loads so this may run concurrently with TrainStep().
double ComputeBlockGradients(const EmbeddingStore& store, const Shard& shard,
                             const ObjectiveConfig& objective,
                             StepWorkspace& workspace);

// One Adagrad step on the shard's row and column blocks. Returns the loss
// before the update. Throws NumericalError, leaving the store untouched,
// if the loss or any gradient is non-finite. Parameters with a zero gradient
// are not modified.
double TrainStep(EmbeddingStore& store, const Shard& shard,
                 const TrainConfig& config, StepWorkspace& workspace);

// Progress of a training run; everything needed to resume it exactly.
struct TrainState {
  uint64_t step = 0;
  double epoch_loss = 0.0;   // summed loss of the current partial epoch
  uint64_t epoch_steps = 0;  // steps in the current partial epoch
  std::vector<double> loss_trace;  // mean loss of each finished epoch
  uint32_t stalled_epochs = 0;
  bool stopped_early = false;

  friend bool operator==(const TrainState&, const TrainState&) = default;
};

struct EpochStats {
  uint64_t epoch = 0;  // 1-based
  uint64_t steps = 0;  // global step count at the end of the epoch
  double mean_loss = 0.0;
  double steps_per_second = 0.0;
};

using ProgressSink = std::function<void(const EpochStats&)>;

struct CheckpointHook {
  uint64_t every = 0;  // steps between saves; 0 disables
  std::function<void(const EmbeddingStore&, const TrainState&)> save;
};

// Trains until state.step reaches config.steps or early stopping triggers.
// With workers > 1 the workers take consecutive scheduled shards and update
// the shared store without locks, so results vary between runs. Checkpoints
// and progress reports happen only while workers are quiescent.
void Train(const ShardSource& shards, EmbeddingStore& store,
           const TrainConfig& config, TrainState& state,
           const ProgressSink& progress = {},
           const CheckpointHook& checkpoint = {});

}  // namespace swivel

#endif  // SWIVEL_TRAINER_H_
