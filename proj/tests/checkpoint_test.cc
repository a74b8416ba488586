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

#include <sstream>

#include "swivel/checkpoint.h"
#include "swivel/errors.h"
#include "test_util.h"

namespace swivel {
namespace {

Checkpoint TrainedCheckpoint(uint64_t steps) {
  const FinalizedMatrix fm =
      FinalizeMatrix(testing::RandomSparseCounts(13, 13, 0.3, 4), 13, 13, 4);
  Checkpoint cp;
  cp.plan = fm.plan;
  cp.config.dim = 6;
  cp.config.steps = steps;
  cp.config.schedule = Schedule::kUniform;
  cp.config.objective.shift = 1.609;
  cp.store = EmbeddingStore::Initialize(fm.plan.m(), fm.plan.n(), 6, 8);
  Train(InMemoryShards::FromMatrix(fm), cp.store, cp.config, cp.state);
  return cp;
}

std::string Serialize(const Checkpoint& cp) {
  std::ostringstream out;
  WriteCheckpoint(out, cp);
  return out.str();
}

TEST(CheckpointTest, RoundTripIsExact) {
  const Checkpoint cp = TrainedCheckpoint(37);  // ends mid-epoch
  const std::string bytes = Serialize(cp);
  std::istringstream in(bytes);
  const Checkpoint back = ReadCheckpoint(in);
  EXPECT_EQ(back.plan, cp.plan);
  EXPECT_EQ(back.state, cp.state);
  EXPECT_EQ(back.store, cp.store);
  EXPECT_EQ(back.config.dim, cp.config.dim);
  EXPECT_EQ(back.config.schedule, Schedule::kUniform);
  EXPECT_EQ(back.config.objective.shift, 1.609);
  EXPECT_EQ(Serialize(back), bytes);
}

TEST(CheckpointTest, SaveLoadSaveIsByteIdentical) {
  testing::TempDir dir("ckpt");
  const Checkpoint cp = TrainedCheckpoint(20);
  SaveCheckpoint(dir.file("a.ckpt"), cp);
  SaveCheckpoint(dir.file("b.ckpt"), LoadCheckpoint(dir.file("a.ckpt")));
  EXPECT_EQ(testing::ReadFile(dir.file("a.ckpt")),
            testing::ReadFile(dir.file("b.ckpt")));
  EXPECT_FALSE(std::filesystem::exists(dir.file("a.ckpt.tmp")));
}

TEST(CheckpointTest, DetectsCorruption) {
  const std::string bytes = Serialize(TrainedCheckpoint(10));
  for (size_t pos : {size_t{40}, bytes.size() / 2, bytes.size() - 10}) {
    std::string flipped = bytes;
    flipped[pos] ^= 0x01;
    std::istringstream in(flipped);
    EXPECT_THROW(ReadCheckpoint(in), DataError) << "byte " << pos;
  }
}

TEST(CheckpointTest, DetectsTruncationAndTrailingBytes) {
  const std::string bytes = Serialize(TrainedCheckpoint(10));
  std::istringstream truncated(bytes.substr(0, bytes.size() - 1));
  EXPECT_THROW(ReadCheckpoint(truncated), DataError);
  std::istringstream longer(bytes + "x");
  EXPECT_THROW(ReadCheckpoint(longer), DataError);
}

TEST(CheckpointTest, RejectsOtherVersionsAndFiles) {
  std::string bytes = Serialize(TrainedCheckpoint(10));
  bytes[4] = 2;  // version field
  std::istringstream future(bytes);
  EXPECT_THROW(ReadCheckpoint(future), DataError);
  std::istringstream text("SWVL not a checkpoint");
  EXPECT_THROW(ReadCheckpoint(text), DataError);
  EXPECT_THROW(LoadCheckpoint("/nonexistent/model.ckpt"), DataError);
}

TEST(CheckpointTest, ResumeFromFileMatchesUninterrupted) {
  const Checkpoint whole = TrainedCheckpoint(90);
  Checkpoint part = TrainedCheckpoint(33);
  std::istringstream in(Serialize(part));
  Checkpoint resumed = ReadCheckpoint(in);
  resumed.config.steps = 90;
  const FinalizedMatrix fm =
      FinalizeMatrix(testing::RandomSparseCounts(13, 13, 0.3, 4), 13, 13, 4);
  Train(InMemoryShards::FromMatrix(fm), resumed.store, resumed.config,
        resumed.state);
  EXPECT_EQ(resumed.store, whole.store);
  EXPECT_EQ(resumed.state, whole.state);
  EXPECT_EQ(Serialize(resumed), Serialize(whole));
}

}  // namespace
}  // namespace swivel
