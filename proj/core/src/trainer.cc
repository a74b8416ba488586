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

#include "swivel/trainer.h"

#include <fmt/format.h>

#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

#include "swivel/errors.h"

namespace swivel {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Unbiased integer in [0, n) (Lemire's multiply-and-reject).
uint64_t UniformBelow(std::mt19937_64& rng, uint64_t n) {
  unsigned __int128 product = static_cast<unsigned __int128>(rng()) * n;
  auto low = static_cast<uint64_t>(product);
  if (low < n) {
    const uint64_t threshold = -n % n;
    while (low < threshold) {
      product = static_cast<unsigned __int128>(rng()) * n;
      low = static_cast<uint64_t>(product);
    }
  }
  return static_cast<uint64_t>(product >> 64);
}

// Parameters are shared between workers without locks; every access goes
// through a relaxed atomic_ref so individual floats never tear.
float LoadParam(const float& value) {
  return std::atomic_ref<float>(const_cast<float&>(value))
      .load(std::memory_order_relaxed);
}

void StoreParam(float& slot, float value) {
  std::atomic_ref<float>(slot).store(value, std::memory_order_relaxed);
}

void Gather(const std::vector<float>& params, uint32_t dim, uint32_t block,
            uint32_t stride, RowMatrix& out) {
  for (Eigen::Index t = 0; t < out.rows(); ++t) {
    const float* src =
        params.data() + (block + static_cast<uint64_t>(t) * stride) * dim;
    double* dst = out.row(t).data();
    for (uint32_t c = 0; c < dim; ++c) dst[c] = LoadParam(src[c]);
  }
}

void ApplyAdagrad(std::vector<float>& params, std::vector<float>& accumulators,
                  uint32_t dim, uint32_t block, uint32_t stride,
                  const RowMatrix& grad, double eta, double epsilon) {
  for (Eigen::Index t = 0; t < grad.rows(); ++t) {
    const uint64_t offset = (block + static_cast<uint64_t>(t) * stride) * dim;
    float* theta = params.data() + offset;
    float* acc = accumulators.data() + offset;
    const double* g = grad.row(t).data();
    for (uint32_t c = 0; c < dim; ++c) {
      if (g[c] == 0.0) continue;
      const double updated_acc =
          static_cast<double>(LoadParam(acc[c])) + g[c] * g[c];
      StoreParam(acc[c], static_cast<float>(updated_acc));
      const double value = LoadParam(theta[c]);
      StoreParam(theta[c], static_cast<float>(
                               value - eta * g[c] /
                                           (std::sqrt(updated_acc) + epsilon)));
    }
  }
}

void CheckShape(const EmbeddingStore& store, const Shard& shard) {
  if (store.rows() != uint64_t{shard.row_blocks} * shard.k ||
      store.cols() != uint64_t{shard.col_blocks} * shard.k) {
    throw UsageError(fmt::format(
        "shard ({}, {}) with k={} does not match a {}x{} embedding store",
        shard.row_block, shard.col_block, shard.k, store.rows(), store.cols()));
  }
}

}  // namespace

EmbeddingStore::EmbeddingStore(uint64_t rows, uint64_t cols, uint32_t dim)
    : rows_(rows),
      cols_(cols),
      dim_(dim),
      row_embeddings_(rows * dim, 0.0f),
      col_embeddings_(cols * dim, 0.0f),
      row_accumulators_(rows * dim, 0.0f),
      col_accumulators_(cols * dim, 0.0f) {}

EmbeddingStore EmbeddingStore::Initialize(uint64_t rows, uint64_t cols,
                                          uint32_t dim, uint64_t seed) {
  if (rows < 1 || cols < 1 || dim < 1) {
    throw UsageError("embedding store dimensions must be >= 1");
  }
  EmbeddingStore store(rows, cols, dim);
  std::mt19937_64 rng(seed);
  const double sigma = 1.0 / std::sqrt(static_cast<double>(dim));
  // Box-Muller on 53-bit uniforms; u1 lies in (0, 1].
  auto fill = [&](std::vector<float>& values) {
    for (size_t i = 0; i < values.size(); i += 2) {
      const double u1 = static_cast<double>((rng() >> 11) + 1) * 0x1p-53;
      const double u2 = static_cast<double>(rng() >> 11) * 0x1p-53;
      const double radius = std::sqrt(-2.0 * std::log(u1));
      const double angle = 2.0 * std::numbers::pi * u2;
      values[i] = static_cast<float>(sigma * radius * std::cos(angle));
      if (i + 1 < values.size()) {
        values[i + 1] = static_cast<float>(sigma * radius * std::sin(angle));
      }
    }
  };
  fill(store.row_embeddings_);
  fill(store.col_embeddings_);
  return store;
}

bool EmbeddingStore::AllFinite() const {
  auto finite = [](const std::vector<float>& values) {
    return std::all_of(values.begin(), values.end(),
                       [](float v) { return std::isfinite(v); });
  };
  return finite(row_embeddings_) && finite(col_embeddings_) &&
         finite(row_accumulators_) && finite(col_accumulators_);
}

std::string_view ScheduleName(Schedule schedule) {
  return schedule == Schedule::kPermutation ? "permutation" : "uniform";
}

std::optional<Schedule> ParseSchedule(std::string_view name) {
  if (name == "permutation") return Schedule::kPermutation;
  if (name == "uniform") return Schedule::kUniform;
  return std::nullopt;
}

void TrainConfig::Validate() const {
  if (dim < 1) throw UsageError("dim must be >= 1");
  if (steps < 1) throw UsageError("steps must be >= 1");
  if (!(eta > 0) || !std::isfinite(eta)) throw UsageError("eta must be > 0");
  if (!(epsilon >= 0) || !std::isfinite(epsilon)) {
    throw UsageError("epsilon must be >= 0");
  }
  if (workers < 1) throw UsageError("workers must be >= 1");
  objective.Validate();
}

ShardSchedule::ShardSchedule(Schedule kind, size_t num_shards, uint64_t seed)
    : kind_(kind), num_shards_(num_shards), seed_(seed) {
  if (num_shards == 0) throw UsageError("training needs at least one shard");
}

size_t ShardSchedule::ShardAt(uint64_t step) {
  if (kind_ == Schedule::kUniform) {
    std::mt19937_64 rng(SplitMix64(seed_ ^ SplitMix64(step)));
    return static_cast<size_t>(UniformBelow(rng, num_shards_));
  }
  const uint64_t epoch = step / num_shards_;
  if (epoch != cached_epoch_) {
    permutation_.resize(num_shards_);
    for (size_t i = 0; i < num_shards_; ++i) permutation_[i] = i;
    std::mt19937_64 rng(SplitMix64(seed_ ^ SplitMix64(~epoch)));
    for (size_t i = num_shards_ - 1; i > 0; --i) {
      std::swap(permutation_[i], permutation_[UniformBelow(rng, i + 1)]);
    }
    cached_epoch_ = epoch;
  }
  return permutation_[step % num_shards_];
}

InMemoryShards::InMemoryShards(ShardPlan plan, std::vector<Shard> shards)
    : plan_(plan), shards_(std::move(shards)) {
  if (shards_.size() != plan_.num_shards()) {
    throw DataError(fmt::format("expected {} shards, got {}",
                                plan_.num_shards(), shards_.size()));
  }
  for (size_t index = 0; index < shards_.size(); ++index) {
    const Shard& s = shards_[index];
    if (s.k != plan_.k() || plan_.ShardIndex(s.row_block, s.col_block) != index) {
      throw DataError(fmt::format("shard {} is out of place", index));
    }
  }
}

InMemoryShards InMemoryShards::FromMatrix(const FinalizedMatrix& finalized) {
  std::vector<Shard> shards;
  shards.reserve(finalized.plan.num_shards());
  ForEachShard(finalized.matrix, finalized.plan,
               [&](const Shard& s) { shards.push_back(s); });
  return InMemoryShards(finalized.plan, std::move(shards));
}

const Shard& InMemoryShards::Get(size_t index, Shard&) const {
  return shards_.at(index);
}

ShardDirectory::ShardDirectory(std::string directory, bool preload)
    : directory_(std::move(directory)),
      manifest_(PlanManifest::Load(
          (std::filesystem::path(directory_) / kManifestFileName).string())) {
  const ShardPlan& p = manifest_.plan;
  for (uint32_t rb = 0; rb < p.row_blocks(); ++rb) {
    for (uint32_t cb = 0; cb < p.col_blocks(); ++cb) {
      const auto path = std::filesystem::path(directory_) / ShardFileName(rb, cb);
      if (!std::filesystem::exists(path)) {
        throw DataError("missing shard file " + path.string());
      }
    }
  }
  if (preload) {
    std::vector<Shard> loaded(p.num_shards());
    for (size_t index = 0; index < loaded.size(); ++index) {
      Get(index, loaded[index]);
    }
    cache_ = std::move(loaded);
  }
}

const Shard& ShardDirectory::Get(size_t index, Shard& scratch) const {
  if (!cache_.empty()) return cache_.at(index);
  const ShardPlan& p = manifest_.plan;
  const auto rb = static_cast<uint32_t>(index / p.col_blocks());
  const auto cb = static_cast<uint32_t>(index % p.col_blocks());
  const auto path = std::filesystem::path(directory_) / ShardFileName(rb, cb);
  LoadShard(path.string(), scratch);
  if (scratch.k != p.k() || scratch.row_block != rb || scratch.col_block != cb ||
      scratch.row_blocks != p.row_blocks() ||
      scratch.col_blocks != p.col_blocks()) {
    throw DataError(path.string() + ": header disagrees with the plan manifest");
  }
  return scratch;
}

struct StepWorkspace::Buffers {
  RowMatrix rows;         // k x dim
  RowMatrix cols;         // k x dim
  RowMatrix predictions;  // k x k
  RowMatrix gradient;     // k x k
  RowMatrix row_grad;     // k x dim
  RowMatrix col_grad;     // k x dim
};

StepWorkspace::StepWorkspace() : buffers_(std::make_unique<Buffers>()) {}
StepWorkspace::~StepWorkspace() = default;
StepWorkspace::StepWorkspace(StepWorkspace&&) noexcept = default;
StepWorkspace& StepWorkspace::operator=(StepWorkspace&&) noexcept = default;

std::span<const double> StepWorkspace::row_gradients() const {
  return {buffers_->row_grad.data(),
          static_cast<size_t>(buffers_->row_grad.size())};
}

std::span<const double> StepWorkspace::col_gradients() const {
  return {buffers_->col_grad.data(),
          static_cast<size_t>(buffers_->col_grad.size())};
}

double ComputeBlockGradients(const EmbeddingStore& store, const Shard& shard,
                             const ObjectiveConfig& objective,
                             StepWorkspace& workspace) {
  CheckShape(store, shard);
  auto& b = *workspace.buffers_;
  const Eigen::Index k = shard.k;
  const uint32_t dim = store.dim();
  b.rows.resize(k, dim);
  b.cols.resize(k, dim);
  b.predictions.resize(k, k);
  b.gradient.resize(k, k);
  Gather(store.row_embeddings(), dim, shard.row_block, shard.row_blocks, b.rows);
  Gather(store.col_embeddings(), dim, shard.col_block, shard.col_blocks, b.cols);

  b.predictions.noalias() = b.rows * b.cols.transpose();
  const size_t cells = static_cast<size_t>(k * k);
  const double loss = ShardObjectiveInto({b.predictions.data(), cells}, shard,
                                         objective, {b.gradient.data(), cells});
  b.row_grad.noalias() = b.gradient * b.cols;
  b.col_grad.noalias() = b.gradient.transpose() * b.rows;
  return loss;
}

double TrainStep(EmbeddingStore& store, const Shard& shard,
                 const TrainConfig& config, StepWorkspace& workspace) {
  const double loss =
      ComputeBlockGradients(store, shard, config.objective, workspace);
  auto& b = *workspace.buffers_;
  if (!std::isfinite(loss) || !b.row_grad.allFinite() ||
      !b.col_grad.allFinite()) {
    throw NumericalError(fmt::format(
        "non-finite loss or gradient in shard (row block {}, col block {})",
        shard.row_block, shard.col_block));
  }
  const uint32_t dim = store.dim();
  ApplyAdagrad(store.row_embeddings(), store.row_accumulators(), dim,
               shard.row_block, shard.row_blocks, b.row_grad, config.eta,
               config.epsilon);
  ApplyAdagrad(store.col_embeddings(), store.col_accumulators(), dim,
               shard.col_block, shard.col_blocks, b.col_grad, config.eta,
               config.epsilon);
  return loss;
}

namespace {

// Runs the scheduled shards of one chunk. On failure, losses[pos] is still
// valid wherever done[pos] is set.
void RunChunk(const ShardSource& shards, EmbeddingStore& store,
              const TrainConfig& config, std::span<const size_t> schedule,
              std::vector<double>& losses, std::vector<uint8_t>& done,
              std::vector<StepWorkspace>& workspaces,
              std::vector<Shard>& scratch) {
  losses.assign(schedule.size(), 0.0);
  done.assign(schedule.size(), 0);
  if (config.workers == 1) {
    for (size_t pos = 0; pos < schedule.size(); ++pos) {
      const Shard& shard = shards.Get(schedule[pos], scratch[0]);
      losses[pos] = TrainStep(store, shard, config, workspaces[0]);
      done[pos] = 1;
    }
    return;
  }
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (int w = 0; w < config.workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        while (!failed.load(std::memory_order_relaxed)) {
          const size_t pos = next.fetch_add(1, std::memory_order_relaxed);
          if (pos >= schedule.size()) break;
          const Shard& shard = shards.Get(schedule[pos], scratch[w]);
          losses[pos] = TrainStep(store, shard, config, workspaces[w]);
          done[pos] = 1;
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

void Train(const ShardSource& shards, EmbeddingStore& store,
           const TrainConfig& config, TrainState& state,
           const ProgressSink& progress, const CheckpointHook& checkpoint) {
  config.Validate();
  const ShardPlan& plan = shards.plan();
  if (store.rows() != plan.m() || store.cols() != plan.n() ||
      store.dim() != config.dim) {
    throw UsageError(fmt::format(
        "embedding store {}x{}x{} does not match plan {}x{} with dim {}",
        store.rows(), store.cols(), store.dim(), plan.m(), plan.n(),
        config.dim));
  }
  const size_t num_shards = plan.num_shards();
  ShardSchedule schedule(config.schedule, num_shards, config.seed);
  const auto workers = static_cast<size_t>(config.workers);
  std::vector<StepWorkspace> workspaces(workers);
  std::vector<Shard> scratch(workers);
  std::vector<size_t> chunk;
  std::vector<double> losses;
  std::vector<uint8_t> done;
  using Clock = std::chrono::steady_clock;
  auto epoch_start = Clock::now();
  uint64_t epoch_start_step = state.step;

  while (state.step < config.steps && !state.stopped_early) {
    const uint64_t epoch_end = (state.step / num_shards + 1) * num_shards;
    uint64_t end = std::min<uint64_t>(epoch_end, config.steps);
    if (checkpoint.every > 0) {
      end = std::min(end, (state.step / checkpoint.every + 1) * checkpoint.every);
    }
    chunk.clear();
    for (uint64_t s = state.step; s < end; ++s) chunk.push_back(schedule.ShardAt(s));

    std::exception_ptr error;
    try {
      RunChunk(shards, store, config, chunk, losses, done, workspaces, scratch);
    } catch (...) {
      error = std::current_exception();
    }
    // Single-worker losses are summed in step order, so the trace is
    // reproducible.
    for (size_t pos = 0; pos < chunk.size(); ++pos) {
      if (!done[pos]) continue;
      state.epoch_loss += losses[pos];
      ++state.epoch_steps;
      ++state.step;
    }
    if (error) std::rethrow_exception(error);

    const bool epoch_complete = state.step % num_shards == 0;
    if (epoch_complete || state.step == config.steps) {
      const double seconds =
          std::chrono::duration<double>(Clock::now() - epoch_start).count();
      EpochStats stats;
      stats.epoch = (state.step - 1) / num_shards + 1;
      stats.steps = state.step;
      stats.mean_loss = state.epoch_steps > 0
                            ? state.epoch_loss / state.epoch_steps
                            : 0.0;
      stats.steps_per_second =
          seconds > 0 ? (state.step - epoch_start_step) / seconds : 0.0;
      if (progress) progress(stats);
      if (epoch_complete) {
        if (config.early_stop && !state.loss_trace.empty()) {
          const double previous = state.loss_trace.back();
          const double improvement =
              previous != 0 ? (previous - stats.mean_loss) / std::abs(previous)
                            : 0.0;
          state.stalled_epochs = improvement < 1e-3 ? state.stalled_epochs + 1 : 0;
          if (state.stalled_epochs >= 3) state.stopped_early = true;
        }
        state.loss_trace.push_back(stats.mean_loss);
        state.epoch_loss = 0.0;
        state.epoch_steps = 0;
      }
      epoch_start = Clock::now();
      epoch_start_step = state.step;
    }
    if (checkpoint.every > 0 && checkpoint.save &&
        state.step % checkpoint.every == 0) {
      checkpoint.save(store, state);
    }
  }
}

}  // namespace swivel
