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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <map>

#include "swivel/embedding_table.h"
#include "swivel/errors.h"
#include "swivel/trainer.h"
#include "test_util.h"

namespace swivel {
namespace {

TEST(InitializeTest, DeterministicGivenSeed) {
  EXPECT_EQ(EmbeddingStore::Initialize(20, 30, 8, 1),
            EmbeddingStore::Initialize(20, 30, 8, 1));
  EXPECT_NE(EmbeddingStore::Initialize(20, 30, 8, 1),
            EmbeddingStore::Initialize(20, 30, 8, 2));
}

TEST(InitializeTest, StandardDeviationIsInverseSqrtDim) {
  const auto store = EmbeddingStore::Initialize(1000, 1000, 100, 42);
  double sum = 0, sq = 0;
  for (float v : store.row_embeddings()) {
    sum += v;
    sq += double{v} * v;
  }
  const double n = store.row_embeddings().size();
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(mean, 0.0, 0.005);
  EXPECT_NEAR(sd, 0.1, 0.005);
  for (float a : store.row_accumulators()) ASSERT_EQ(a, 0.0f);
  for (float a : store.col_accumulators()) ASSERT_EQ(a, 0.0f);
}

TEST(TrainConfigTest, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.Validate());
  cfg.steps = 0;
  EXPECT_THROW(cfg.Validate(), UsageError);
  cfg = {};
  cfg.dim = 0;
  EXPECT_THROW(cfg.Validate(), UsageError);
  cfg = {};
  cfg.eta = 0;
  EXPECT_THROW(cfg.Validate(), UsageError);
  cfg = {};
  cfg.workers = 0;
  EXPECT_THROW(cfg.Validate(), UsageError);
}

TEST(ScheduleTest, PermutationVisitsEveryShardOncePerEpoch) {
  ShardSchedule schedule(Schedule::kPermutation, 37, 9);
  std::map<size_t, int> visits;
  for (uint64_t step = 0; step < 2 * 37; ++step) ++visits[schedule.ShardAt(step)];
  ASSERT_EQ(visits.size(), 37u);
  for (const auto& [shard, count] : visits) EXPECT_EQ(count, 2) << shard;
}

TEST(ScheduleTest, PureFunctionOfSeedAndStep) {
  ShardSchedule a(Schedule::kPermutation, 50, 3), b(Schedule::kPermutation, 50, 3);
  std::vector<size_t> forward, backward(200);
  for (uint64_t s = 0; s < 200; ++s) forward.push_back(a.ShardAt(s));
  for (uint64_t s = 200; s-- > 0;) backward[s] = b.ShardAt(s);
  EXPECT_EQ(forward, backward);
  ShardSchedule u(Schedule::kUniform, 50, 3), v(Schedule::kUniform, 50, 3);
  for (uint64_t s = 0; s < 200; ++s) {
    const size_t x = u.ShardAt(s);
    EXPECT_LT(x, 50u);
    EXPECT_EQ(x, v.ShardAt(s));
  }
}

TEST(ScheduleTest, PermutationsDifferAcrossEpochs) {
  ShardSchedule schedule(Schedule::kPermutation, 20, 1);
  std::vector<size_t> first, second;
  for (uint64_t s = 0; s < 20; ++s) first.push_back(schedule.ShardAt(s));
  for (uint64_t s = 20; s < 40; ++s) second.push_back(schedule.ShardAt(s));
  EXPECT_NE(first, second);
}

TEST(ScheduleTest, NamesRoundTrip) {
  for (auto s : {Schedule::kPermutation, Schedule::kUniform}) {
    EXPECT_EQ(ParseSchedule(ScheduleName(s)), s);
  }
  EXPECT_FALSE(ParseSchedule("random").has_value());
}

TEST(TrainStepTest, HandComputedAdagradStep) {
  // One observed cell with pmi 0 and f = 1, W = W~ = [1]: g = 1, so the
  // first Adagrad step moves each parameter by exactly eta.
  Shard shard;
  shard.k = 1;
  shard.row_blocks = shard.col_blocks = 1;
  shard.counts = {1};
  shard.row_marginals = {1};
  shard.col_marginals = {1};
  shard.total = 1;
  EmbeddingStore store(1, 1, 1);
  store.row_embeddings()[0] = 1;
  store.col_embeddings()[0] = 1;
  TrainConfig cfg;
  cfg.dim = 1;
  cfg.eta = 1;
  cfg.epsilon = 0;
  cfg.objective.weights = {1.0, 0.0, 1.0};
  StepWorkspace ws;
  EXPECT_DOUBLE_EQ(TrainStep(store, shard, cfg, ws), 0.5);
  EXPECT_EQ(store.row_embeddings()[0], 0.0f);
  EXPECT_EQ(store.col_embeddings()[0], 0.0f);
  EXPECT_EQ(store.row_accumulators()[0], 1.0f);
  EXPECT_EQ(store.col_accumulators()[0], 1.0f);
}

TEST(TrainStepTest, PaddedShardLeavesStoreUnchanged) {
  CoocAccumulator acc;
  acc.Add(0, 0, 4);
  const FinalizedMatrix fm = FinalizeMatrix(acc, 3, 3, 2);  // ids 1..3 empty
  const Shard shard = ExtractShard(fm.matrix, fm.plan, 1, 1);
  EmbeddingStore store = EmbeddingStore::Initialize(4, 4, 3, 1);
  const EmbeddingStore before = store;
  TrainConfig cfg;
  cfg.dim = 3;
  StepWorkspace ws;
  EXPECT_EQ(TrainStep(store, shard, cfg, ws), 0.0);
  EXPECT_EQ(store, before);
}

TEST(TrainStepTest, NonFiniteParametersAbortTheStep) {
  const FinalizedMatrix fm =
      FinalizeMatrix(testing::RandomPositiveCounts(4, 4, 1), 4, 4, 4);
  const Shard shard = ExtractShard(fm.matrix, fm.plan, 0, 0);
  EmbeddingStore store = EmbeddingStore::Initialize(4, 4, 2, 1);
  store.row_embeddings()[3] = std::numeric_limits<float>::quiet_NaN();
  const std::vector<float> cols = store.col_embeddings();
  TrainConfig cfg;
  cfg.dim = 2;
  StepWorkspace ws;
  EXPECT_THROW(TrainStep(store, shard, cfg, ws), NumericalError);
  EXPECT_EQ(store.col_embeddings(), cols);
}

TEST(TrainStepTest, RepeatedStepsOnOneShardConverge) {
  constexpr uint32_t kK = 12;
  const FinalizedMatrix fm =
      FinalizeMatrix(testing::RandomPositiveCounts(kK, kK, 4), kK, kK, kK);
  const Shard shard = ExtractShard(fm.matrix, fm.plan, 0, 0);
  TrainConfig cfg;
  cfg.dim = kK;
  EmbeddingStore store = EmbeddingStore::Initialize(kK, kK, cfg.dim, 3);
  StepWorkspace ws;
  double previous = TrainStep(store, shard, cfg, ws);
  const double first = previous;
  int rises = 0;
  for (int step = 1; step < 100; ++step) {
    const double loss = TrainStep(store, shard, cfg, ws);
    rises += loss > previous;
    previous = loss;
  }
  EXPECT_LE(rises, 5);
  EXPECT_LT(previous, 1e-3 * first);
}

TEST(TrainStepTest, AccumulatorsNeverDecrease) {
  const FinalizedMatrix fm =
      FinalizeMatrix(testing::RandomSparseCounts(12, 12, 0.4, 2), 12, 12, 4);
  const InMemoryShards shards = InMemoryShards::FromMatrix(fm);
  TrainConfig cfg;
  cfg.dim = 5;
  EmbeddingStore store = EmbeddingStore::Initialize(12, 12, 5, 2);
  StepWorkspace ws;
  Shard scratch;
  ShardSchedule schedule(Schedule::kUniform, shards.size(), 1);
  for (uint64_t step = 0; step < 200; ++step) {
    const auto rows = store.row_accumulators();
    const auto cols = store.col_accumulators();
    TrainStep(store, shards.Get(schedule.ShardAt(step), scratch), cfg, ws);
    for (size_t p = 0; p < rows.size(); ++p) {
      ASSERT_GE(store.row_accumulators()[p], rows[p]);
      ASSERT_GE(store.col_accumulators()[p], cols[p]);
    }
    ASSERT_TRUE(store.AllFinite());
  }
}

struct SmallTask {
  FinalizedMatrix fm;
  InMemoryShards shards;
  TrainConfig cfg;

  SmallTask(uint32_t size, uint32_t k, uint64_t steps)
      : fm(FinalizeMatrix(testing::RandomSparseCounts(size, size, 0.3, 21), size,
                          size, k)),
        shards(InMemoryShards::FromMatrix(fm)) {
    cfg.dim = 8;
    cfg.steps = steps;
  }
  EmbeddingStore Fresh() const {
    return EmbeddingStore::Initialize(fm.plan.m(), fm.plan.n(), cfg.dim, cfg.seed);
  }
};

TEST(TrainTest, SingleWorkerIsDeterministic) {
  const SmallTask task(30, 5, 400);
  EmbeddingStore a = task.Fresh(), b = task.Fresh();
  TrainState sa, sb;
  Train(task.shards, a, task.cfg, sa);
  Train(task.shards, b, task.cfg, sb);
  EXPECT_EQ(a, b);
  EXPECT_EQ(sa, sb);
  EXPECT_EQ(sa.step, 400u);
  EXPECT_EQ(sa.loss_trace.size(), 400u / 36);
}

TEST(TrainTest, ResumeMatchesUninterruptedRun) {
  const SmallTask task(30, 5, 400);
  EmbeddingStore whole = task.Fresh();
  TrainState whole_state;
  Train(task.shards, whole, task.cfg, whole_state);

  EmbeddingStore split = task.Fresh();
  TrainState split_state;
  TrainConfig first = task.cfg;
  first.steps = 130;  // mid-epoch
  Train(task.shards, split, first, split_state);
  Train(task.shards, split, task.cfg, split_state);
  EXPECT_EQ(split, whole);
  EXPECT_EQ(split_state, whole_state);
}

TEST(TrainTest, EpochTraceDecreasesOnSmallMatrix) {
  const SmallTask task(24, 6, 16 * 40);
  EmbeddingStore store = task.Fresh();
  TrainState state;
  std::vector<EpochStats> reported;
  Train(task.shards, store, task.cfg, state,
        [&](const EpochStats& s) { reported.push_back(s); });
  ASSERT_EQ(state.loss_trace.size(), 40u);
  ASSERT_EQ(reported.size(), 40u);
  for (size_t e = 1; e < state.loss_trace.size(); ++e) {
    EXPECT_LE(state.loss_trace[e], state.loss_trace[e - 1]) << "epoch " << e;
    EXPECT_EQ(reported[e].epoch, e + 1);
  }
}

TEST(TrainTest, CheckpointHookFiresOnSchedule) {
  const SmallTask task(20, 5, 100);
  EmbeddingStore store = task.Fresh();
  TrainState state;
  std::vector<uint64_t> saved;
  CheckpointHook hook{30, [&](const EmbeddingStore&, const TrainState& s) {
                        saved.push_back(s.step);
                      }};
  Train(task.shards, store, task.cfg, state, {}, hook);
  EXPECT_EQ(saved, (std::vector<uint64_t>{30, 60, 90}));
}

TEST(TrainTest, EarlyStopHaltsOnPlateau) {
  SmallTask task(8, 4, 1'000'000);
  task.cfg.dim = 16;
  task.cfg.early_stop = true;
  EmbeddingStore store = task.Fresh();
  TrainState state;
  Train(task.shards, store, task.cfg, state);
  EXPECT_TRUE(state.stopped_early);
  EXPECT_LT(state.step, task.cfg.steps);
  EXPECT_GE(state.stalled_epochs, 3u);
}

TEST(TrainTest, MultipleWorkersStayFinite) {
  SmallTask task(40, 5, 2000);
  task.cfg.workers = 4;
  EmbeddingStore store = task.Fresh();
  TrainState state;
  Train(task.shards, store, task.cfg, state);
  EXPECT_EQ(state.step, 2000u);
  EXPECT_TRUE(store.AllFinite());
  EXPECT_LT(state.loss_trace.back(), state.loss_trace.front());
}

TEST(TrainTest, RejectsMismatchedStore) {
  const SmallTask task(20, 5, 10);
  EmbeddingStore store(8, 8, task.cfg.dim);
  TrainState state;
  EXPECT_THROW(Train(task.shards, store, task.cfg, state), UsageError);
}

TEST(ShardDirectoryTest, MatchesInMemoryTraining) {
  const SmallTask task(17, 4, 150);
  testing::TempDir dir("shards");
  ForEachShard(task.fm.matrix, task.fm.plan, [&](const Shard& s) {
    SaveShard(dir.file(ShardFileName(s.row_block, s.col_block)), s);
  });
  PlanManifest{task.fm.plan, task.fm.matrix.total()}.Save(dir.file(kManifestFileName));
  EmbeddingStore expected = task.Fresh();
  TrainState es;
  Train(task.shards, expected, task.cfg, es);
  for (bool preload : {true, false}) {
    const ShardDirectory shards(dir.path().string(), preload);
    EmbeddingStore store = task.Fresh();
    TrainState state;
    Train(shards, store, task.cfg, state);
    EXPECT_EQ(store, expected) << "preload " << preload;
  }
  std::filesystem::remove(dir.file(ShardFileName(2, 3)));
  EXPECT_THROW(ShardDirectory(dir.path().string(), false), DataError);
}

Vocabulary Words(std::vector<std::string> tokens) {
  std::vector<Vocabulary::Entry> entries;
  for (auto& t : tokens) entries.push_back({t, 1});
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.token < b.token; });
  return Vocabulary(std::move(entries));
}

TEST(CombineTest, ModesAndPaddingDropped) {
  EmbeddingStore store = EmbeddingStore::Initialize(4, 4, 3, 7);
  const Vocabulary vocab = Words({"a", "b", "c"});
  const auto word = CombineEmbeddings(store, vocab, vocab, CombineMode::kWord);
  ASSERT_EQ(word.size(), 3u);
  for (uint32_t i = 0; i < 3; ++i) {
    EXPECT_EQ(word.token(i), vocab.token(i));
    EXPECT_TRUE(std::equal(word.vector(i).begin(), word.vector(i).end(),
                           store.row_vector(i).begin()));
  }
  const auto context = CombineEmbeddings(store, vocab, vocab, CombineMode::kContext);
  EXPECT_TRUE(std::equal(context.vector(2).begin(), context.vector(2).end(),
                         store.col_vector(2).begin()));
  for (size_t p = 0; p < store.col_embeddings().size(); ++p) {
    store.col_embeddings()[p] = -store.row_embeddings()[p];
  }
  const auto sum = CombineEmbeddings(store, vocab, vocab, CombineMode::kSum);
  for (float v : sum.values()) EXPECT_EQ(v, 0.0f);
}

TEST(CombineTest, SumRejectsMismatchedVocabularies) {
  const EmbeddingStore store = EmbeddingStore::Initialize(4, 4, 3, 7);
  EXPECT_THROW(CombineEmbeddings(store, Words({"a", "b"}), Words({"a", "c"}),
                                 CombineMode::kSum),
               UsageError);
  EXPECT_NO_THROW(CombineEmbeddings(store, Words({"a", "b"}), Words({"a", "c"}),
                                    CombineMode::kWord));
}

}  // namespace
}  // namespace swivel
