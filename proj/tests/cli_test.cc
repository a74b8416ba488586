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

#include <chrono>
#include <filesystem>
#include <sstream>

#include "cli.h"
#include "swivel/checkpoint.h"
#include "swivel/embedding_table.h"
#include "test_util.h"

namespace swivel::cli {
namespace {

using swivel::testing::ReadFile;
using swivel::testing::TempDir;
using swivel::testing::WriteFile;

const std::string kData = std::string(SWIVEL_SOURCE_DIR) + "/tests/data/";

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "swivel");
  std::ostringstream out, err;
  Result r;
  r.code = Run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

TEST(CliTest, UsageErrors) {
  EXPECT_EQ(Cli({}).code, kExitUsage);
  EXPECT_EQ(Cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(Cli({"vocab", "--input", "x"}).code, kExitUsage);  // no --output
  EXPECT_EQ(Cli({"vocab", "--input", "x", "--output", "y", "--bogus", "1"}).code,
            kExitUsage);
  EXPECT_EQ(Cli({"--help"}).code, kExitOk);
}

TEST(CliTest, VocabMatchesGoldenFile) {
  TempDir dir("cli-vocab");
  const auto r = Cli({"vocab", "--input", kData + "tiny_corpus.txt", "--output",
                      dir.file("vocab.txt")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(ReadFile(dir.file("vocab.txt")), ReadFile(kData + "tiny_vocab.golden"));
  EXPECT_NE(r.err.find("max-vocab=397312"), std::string::npos) << r.err;
}

TEST(CliTest, VocabMinCountAndErrors) {
  TempDir dir("cli-vocab2");
  ASSERT_EQ(Cli({"vocab", "--input", kData + "tiny_corpus.txt", "--min-count",
                 "2", "--output", dir.file("v.txt")})
                .code,
            kExitOk);
  EXPECT_EQ(ReadFile(dir.file("v.txt")), "the\t3\nsat\t2\n");
  EXPECT_EQ(Cli({"vocab", "--input", kData + "tiny_corpus.txt", "--min-count",
                 "65", "--output", dir.file("v.txt")})
                .code,
            kExitData);
  EXPECT_EQ(Cli({"vocab", "--input", dir.file("missing.txt"), "--output",
                 dir.file("v.txt")})
                .code,
            kExitData);
}

TEST(CliTest, CoocUniformFixture) {
  TempDir dir("cli-cooc");
  WriteFile(dir.file("corpus.txt"), "a b c a\n");
  WriteFile(dir.file("vocab.txt"), "a\t2\nb\t1\nc\t1\n");
  const auto r = Cli({"cooc", "--input", dir.file("corpus.txt"), "--vocab",
                      dir.file("vocab.txt"), "--window", "2", "--scaling",
                      "uniform", "--output", dir.file("cooc.txt")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(ReadFile(dir.file("cooc.txt")),
            "0 1 2\n0 2 2\n1 0 2\n1 2 1\n2 0 2\n2 1 1\n");
}

TEST(CliTest, CoocParallelMatchesSerialWithIntegerWeights) {
  TempDir dir("cli-cooc-par");
  const std::string vocab = dir.file("vocab.txt");
  ASSERT_EQ(Cli({"vocab", "--input", kData + "fixture_corpus.txt", "--output", vocab}).code,
            kExitOk);
  for (const char* workers : {"1", "3"}) {
    ASSERT_EQ(Cli({"cooc", "--input", kData + "fixture_corpus.txt", "--vocab", vocab,
                   "--scaling", "uniform", "--workers", workers, "--output",
                   dir.file(std::string("cooc") + workers)})
                  .code,
              kExitOk);
  }
  EXPECT_EQ(ReadFile(dir.file("cooc1")), ReadFile(dir.file("cooc3")));
}

TEST(CliTest, CoocEmptyCorpusAndMismatchWarning) {
  TempDir dir("cli-cooc-empty");
  WriteFile(dir.file("empty.txt"), "");
  WriteFile(dir.file("vocab.txt"), "a\t2\nb\t1\n");
  auto r = Cli({"cooc", "--input", dir.file("empty.txt"), "--vocab",
                dir.file("vocab.txt"), "--output", dir.file("cooc.txt")});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir.file("cooc.txt")));
  EXPECT_EQ(ReadFile(dir.file("cooc.txt")), "");
  WriteFile(dir.file("other.txt"), "x y z w a\n");
  r = Cli({"cooc", "--input", dir.file("other.txt"), "--vocab",
           dir.file("vocab.txt"), "--output", dir.file("cooc.txt")});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  r = Cli({"cooc", "--input", dir.file("empty.txt"), "--vocab",
           dir.file("vocab.txt"), "--scaling", "gaussian", "--output",
           dir.file("cooc.txt")});
  EXPECT_EQ(r.code, kExitUsage);
}

TEST(CliTest, ShardWritesAllFilesIdempotently) {
  TempDir dir("cli-shard");
  const std::string corpus = kData + "tiny_corpus.txt";
  ASSERT_EQ(Cli({"vocab", "--input", corpus, "--output", dir.file("v.txt")}).code, 0);
  ASSERT_EQ(Cli({"cooc", "--input", corpus, "--vocab", dir.file("v.txt"),
                 "--output", dir.file("c.txt")})
                .code,
            0);
  auto shard = [&](const std::string& out) {
    return Cli({"shard", "--cooc", dir.file("c.txt"), "--vocab", dir.file("v.txt"),
                "--k", "2", "--output-dir", dir.file(out)})
        .code;
  };
  ASSERT_EQ(shard("s1"), kExitOk);
  ASSERT_EQ(shard("s2"), kExitOk);
  size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir.file("s1"))) {
    const std::string name = entry.path().filename().string();
    if (name.ends_with(".swvl")) ++files;
    EXPECT_EQ(ReadFile(entry.path().string()),
              ReadFile(dir.file("s2/" + name)));
  }
  EXPECT_EQ(files, 9u);
  EXPECT_EQ(Cli({"shard", "--cooc", dir.file("c.txt"), "--vocab", dir.file("v.txt"),
                 "--k", "7", "--output-dir", dir.file("s3")})
                .code,
            kExitUsage);
}

// Runs vocab, cooc and shard on the fixture corpus.
void PrepareFixture(const TempDir& dir, const std::string& k = "64") {
  const std::string corpus = kData + "fixture_corpus.txt";
  ASSERT_EQ(Cli({"vocab", "--input", corpus, "--output", dir.file("vocab.txt")}).code, 0);
  ASSERT_EQ(Cli({"cooc", "--input", corpus, "--vocab", dir.file("vocab.txt"),
                 "--output", dir.file("cooc.txt")})
                .code,
            0);
  ASSERT_EQ(Cli({"shard", "--cooc", dir.file("cooc.txt"), "--vocab",
                 dir.file("vocab.txt"), "--k", k, "--output-dir",
                 dir.file("shards")})
                .code,
            0);
}

TEST(CliTest, TrainValidationAndMissingInputs) {
  TempDir dir("cli-train-bad");
  EXPECT_EQ(Cli({"train", "--shards", dir.file("nope"), "--output",
                 dir.file("m.ckpt")})
                .code,
            kExitData);
  PrepareFixture(dir, "512");
  EXPECT_EQ(Cli({"train", "--shards", dir.file("shards"), "--steps", "0",
                 "--output", dir.file("m.ckpt")})
                .code,
            kExitUsage);
  EXPECT_EQ(Cli({"train", "--shards", dir.file("shards"), "--schedule", "zigzag",
                 "--output", dir.file("m.ckpt")})
                .code,
            kExitUsage);
  std::filesystem::remove(dir.file("shards/" + ShardFileName(1, 0)));
  EXPECT_EQ(Cli({"train", "--shards", dir.file("shards"), "--steps", "4",
                 "--output", dir.file("m.ckpt")})
                .code,
            kExitData);
}

TEST(CliTest, NumericalFailureExitsWithCheckpoint) {
  TempDir dir("cli-train-nan");
  PrepareFixture(dir, "512");
  const auto r = Cli({"train", "--shards", dir.file("shards"), "--dim", "8",
                      "--steps", "400", "--eta", "1e200", "--output",
                      dir.file("m.ckpt")});
  EXPECT_EQ(r.code, kExitNumerical) << r.err;
  ASSERT_TRUE(std::filesystem::exists(dir.file("m.ckpt")));
  const Checkpoint cp = LoadCheckpoint(dir.file("m.ckpt"));
  EXPECT_LT(cp.state.step, 400u);
}

TEST(CliTest, PrintedConfigReproducesTheRun) {
  TempDir dir("cli-config");
  PrepareFixture(dir);
  const auto first = Cli({"train", "--shards", dir.file("shards"), "--dim", "12",
                          "--steps", "300", "--shift", "1.609", "--output",
                          dir.file("a.ckpt")});
  ASSERT_EQ(first.code, kExitOk) << first.err;
  // Keep only the echoed configuration, then point it at a new output.
  std::istringstream lines(first.err);
  std::string config;
  for (std::string line; std::getline(lines, line);) {
    if (line.starts_with("output=")) line = "output=\"" + dir.file("b.ckpt") + "\"";
    if (line.starts_with("[") || line.find('=') != std::string::npos) {
      config += line + "\n";
    }
  }
  EXPECT_NE(config.find("[train]"), std::string::npos);
  EXPECT_NE(config.find("alpha=0.5"), std::string::npos) << config;
  EXPECT_NE(config.find("seed=42"), std::string::npos) << config;
  WriteFile(dir.file("run.ini"), config);
  const auto second = Cli({"--config", dir.file("run.ini"), "train"});
  ASSERT_EQ(second.code, kExitOk) << second.err;
  EXPECT_EQ(ReadFile(dir.file("a.ckpt")), ReadFile(dir.file("b.ckpt")));
}

TEST(CliTest, ExportModesAndFormats) {
  TempDir dir("cli-export");
  PrepareFixture(dir);
  ASSERT_EQ(Cli({"train", "--shards", dir.file("shards"), "--dim", "6", "--steps",
                 "50", "--output", dir.file("m.ckpt")})
                .code,
            0);
  const Checkpoint cp = LoadCheckpoint(dir.file("m.ckpt"));
  const auto vocab = Vocabulary::Load(dir.file("vocab.txt"));
  for (const char* mode : {"word", "context", "sum"}) {
    ASSERT_EQ(Cli({"export", "--checkpoint", dir.file("m.ckpt"), "--vocab",
                   dir.file("vocab.txt"), "--combine", mode, "--output",
                   dir.file(std::string(mode) + ".txt")})
                  .code,
              kExitOk);
  }
  const auto sum = EmbeddingTable::LoadText(dir.file("sum.txt"));
  ASSERT_EQ(sum.size(), vocab.size());
  const auto word = EmbeddingTable::LoadText(dir.file("word.txt"));
  EXPECT_NEAR(word.vector(5)[2], cp.store.row_vector(5)[2], 1e-6);
  const auto context = EmbeddingTable::LoadText(dir.file("context.txt"));
  EXPECT_NEAR(context.vector(5)[2], cp.store.col_vector(5)[2], 1e-6);
  EXPECT_NEAR(sum.vector(5)[2], cp.store.row_vector(5)[2] + cp.store.col_vector(5)[2],
              1e-6);

  ASSERT_EQ(Cli({"export", "--checkpoint", dir.file("m.ckpt"), "--vocab",
                 dir.file("vocab.txt"), "--format", "binary", "--output",
                 dir.file("sum.bin")})
                .code,
            kExitOk);
  std::ifstream bin(dir.file("sum.bin"), std::ios::binary);
  const auto binary = EmbeddingTable::ReadBinary(
      bin, Vocabulary::Load(dir.file("sum.bin.vocab")));
  EXPECT_EQ(binary.tokens(), sum.tokens());

  WriteFile(dir.file("other.txt"), "x\t5\n");
  EXPECT_EQ(Cli({"export", "--checkpoint", dir.file("m.ckpt"), "--vocab",
                 dir.file("other.txt"), "--output", dir.file("x.txt")})
                .code,
            kExitData);
  EXPECT_EQ(Cli({"export", "--checkpoint", dir.file("m.ckpt"), "--vocab",
                 dir.file("vocab.txt"), "--format", "xml", "--output",
                 dir.file("x.txt")})
                .code,
            kExitUsage);
}

TEST(CliTest, EvalPerfectEmbeddingsAndJson) {
  TempDir dir("cli-eval");
  WriteFile(dir.file("emb.txt"),
            "7 3\nman 1 0 0\nking 1 1 0\nwoman 0 0 1\nqueen 0 1 1\n"
            "apple -1 0 0\nriver 0 -1 0\nstone 0 0 -1\n");
  WriteFile(dir.file("sim.txt"),
            "man king 5\nman queen 1\nking queen 4\nman apple -3\nking river -2\n");
  WriteFile(dir.file("an.txt"),
            ": royals\nman king woman queen\nwoman queen man king\n"
            ": missing\nman king woman empress\n");
  const auto r = Cli({"eval", "--embeddings", dir.file("emb.txt"), "--similarity",
                      dir.file("sim.txt"), "--analogy", dir.file("an.txt"),
                      "--json", dir.file("report.jsonl")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("spearman_rho"), std::string::npos) << r.out;
  const std::string json = ReadFile(dir.file("report.jsonl"));
  EXPECT_NE(json.find(R"({"metric":"spearman_rho","name":"sim.txt","skipped":0,"used":5,"value":1.0})"),
            std::string::npos)
      << json;
  EXPECT_NE(json.find(R"("name":"an.txt/royals","skipped":0,"used":2,"value":1.0)"),
            std::string::npos)
      << json;
  EXPECT_NE(json.find(R"("name":"an.txt/missing","skipped":1,"used":0,"value":0.0)"),
            std::string::npos)
      << json;
}

TEST(CliTest, EvalPoorScoresStillSucceed) {
  TempDir dir("cli-eval-poor");
  WriteFile(dir.file("emb.txt"), "3 2\na 1 0\nb 0 1\nc 1 1\n");
  WriteFile(dir.file("sim.txt"), "a c 1\nb c 2\na b 9\n");
  const auto r = Cli({"eval", "--embeddings", dir.file("emb.txt"), "--similarity",
                      dir.file("sim.txt")});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(Cli({"eval", "--embeddings", dir.file("emb.txt")}).code, kExitUsage);
  WriteFile(dir.file("oov.txt"), "x y 1\n");
  EXPECT_EQ(Cli({"eval", "--embeddings", dir.file("emb.txt"), "--similarity",
                 dir.file("oov.txt")})
                .code,
            kExitData);
}

TEST(CliTest, EvalFrequencyBuckets) {
  TempDir dir("cli-eval-freq");
  std::string emb = "40 2\n", vocab, questions;
  for (int i = 0; i < 40; ++i) {
    emb += "w" + std::to_string(100 + i) + " " + std::to_string(i % 7) + " 1\n";
    vocab += "w" + std::to_string(100 + i) + "\t" + std::to_string(1000 - 20 * i) + "\n";
  }
  for (int q = 0; q < 300; ++q) {
    auto w = [&](int o) { return "w" + std::to_string(100 + (q * 7 + o * 13) % 40); };
    questions += w(0) + " " + w(1) + " " + w(2) + " " + w(3) + "\n";
  }
  WriteFile(dir.file("emb.txt"), emb);
  WriteFile(dir.file("vocab.txt"), vocab);
  WriteFile(dir.file("an.txt"), questions);
  const auto r = Cli({"eval", "--embeddings", dir.file("emb.txt"), "--analogy",
                      dir.file("an.txt"), "--freq-buckets", "3", "--vocab",
                      dir.file("vocab.txt"), "--json", "-"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("an.txt/freq0"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("mean_log10_frequency"), std::string::npos) << r.out;
  EXPECT_EQ(Cli({"eval", "--embeddings", dir.file("emb.txt"), "--analogy",
                 dir.file("an.txt"), "--freq-buckets", "3"})
                .code,
            kExitUsage);
}

TEST(CliTest, NeighborsListsClosestTokens) {
  TempDir dir("cli-nn");
  WriteFile(dir.file("emb.txt"), "3 2\na 1 0\nb 0.9 0.1\nc -1 0\n");
  const auto r = Cli({"neighbors", "--embeddings", dir.file("emb.txt"), "--query",
                      "a", "--top-n", "1"});
  ASSERT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out.substr(0, 4), "a\n  ");
  EXPECT_NE(r.out.find("b "), std::string::npos);
  EXPECT_EQ(r.out.find("c "), std::string::npos);
  EXPECT_EQ(Cli({"neighbors", "--embeddings", dir.file("emb.txt"), "--query", "zz"})
                .code,
            kExitData);
}

// The whole pipeline on the bundled ~100 KB fixture corpus.
TEST(CliTest, PipelineOnFixtureCorpus) {
  const auto start = std::chrono::steady_clock::now();
  TempDir dir("cli-pipeline");
  PrepareFixture(dir, "128");
  ASSERT_EQ(Cli({"train", "--shards", dir.file("shards"), "--dim", "32",
                 "--steps", "3000", "--workers", "2", "--checkpoint-every", "1000",
                 "--output", dir.file("m.ckpt")})
                .code,
            kExitOk);
  ASSERT_EQ(Cli({"export", "--checkpoint", dir.file("m.ckpt"), "--vocab",
                 dir.file("vocab.txt"), "--output", dir.file("vectors.txt")})
                .code,
            kExitOk);
  const auto r = Cli({"eval", "--embeddings", dir.file("vectors.txt"),
                      "--similarity", kData + "wordsim353.tsv"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  const double seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();
  EXPECT_LT(seconds, 120.0);
}

}  // namespace
}  // namespace swivel::cli
