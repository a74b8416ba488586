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

#include "cli.h"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <sstream>

#include "swivel/checkpoint.h"
#include "swivel/corpus.h"
#include "swivel/embedding_table.h"
#include "swivel/errors.h"
#include "swivel/eval.h"
#include "swivel/matrix.h"
#include "swivel/objective.h"
#include "swivel/trainer.h"

namespace swivel::cli {
namespace {

namespace fs = std::filesystem;

// Feeds every input ("-" is standard input) through the tokenizer.
void ForEachSentence(const std::vector<std::string>& inputs,
                     const Tokenizer::SentenceSink& sink) {
  for (const std::string& path : inputs) {
    if (path == "-") {
      TokenizeStream(std::cin, sink);
      continue;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read corpus " + path);
    TokenizeStream(in, sink);
  }
}

std::ofstream OpenOutput(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path + " for writing");
  return out;
}

// Echoes a subcommand's options as a config section that can be fed back
// through --config.
void PrintResolvedConfig(const CLI::App& command, std::ostream& err) {
  std::istringstream lines(command.config_to_str(true, false));
  err << "# resolved configuration\n[" << command.get_name() << "]\n";
  for (std::string line; std::getline(lines, line);) {
    if (line.ends_with("=\"\"")) continue;  // unset optional values
    err << line << '\n';
  }
}

struct VocabOptions {
  std::vector<std::string> inputs;
  size_t max_vocab = 397312;
  uint64_t min_count = 1;
  std::string output;
};

int RunVocab(const VocabOptions& o, std::ostream& err) {
  VocabularyBuilder builder;
  uint64_t sentences = 0;
  ForEachSentence(o.inputs, [&](Sentence& s) {
    builder.Add(s);
    ++sentences;
  });
  const Vocabulary vocab = builder.Build(o.max_vocab, o.min_count);
  if (vocab.empty()) {
    throw DataError(fmt::format("no token occurs at least {} times",
                                o.min_count));
  }
  vocab.Save(o.output);
  fmt::print(err, "vocab: {} sentences, {} tokens kept\n", sentences,
             vocab.size());
  return kExitOk;
}

struct CoocOptions {
  std::vector<std::string> inputs;
  std::string vocab;
  int window = 10;
  std::string scaling = "harmonic";
  int workers = 1;
  std::string output;
};

int RunCooc(const CoocOptions& o, std::ostream& err) {
  CoocConfig config;
  config.window = o.window;
  auto scaling = ParseScaling(o.scaling);
  if (!scaling) throw UsageError("unknown scaling '" + o.scaling + "'");
  config.scaling = *scaling;
  config.Validate();
  if (o.workers < 1) throw UsageError("workers must be >= 1");
  const Vocabulary vocab = Vocabulary::Load(o.vocab);
  if (vocab.empty()) throw DataError("vocabulary " + o.vocab + " is empty");

  uint64_t tokens = 0, oov = 0;
  auto tally = [&](const Sentence& s) {
    tokens += s.size();
    for (const auto& t : s) oov += vocab.Find(t) ? 0 : 1;
  };
  CoocAccumulator acc;
  if (o.workers == 1) {
    CoocCounter counter(vocab, config);
    ForEachSentence(o.inputs, [&](Sentence& s) {
      tally(s);
      counter.AddSentence(s);
    });
    acc = counter.Release();
  } else {
    constexpr size_t kBatch = 100000;
    std::vector<Sentence> batch;
    auto flush = [&] {
      acc.Merge(CountCooccurrencesParallel(batch, vocab, config, o.workers));
      batch.clear();
    };
    ForEachSentence(o.inputs, [&](Sentence& s) {
      tally(s);
      batch.push_back(std::move(s));
      if (batch.size() == kBatch) flush();
    });
    if (!batch.empty()) flush();
  }
  if (tokens > 0 && oov * 2 > tokens) {
    fmt::print(err,
               "warning: {:.1f}% of corpus tokens are not in {}; was the "
               "vocabulary built from this corpus?\n",
               100.0 * oov / tokens, o.vocab);
  }
  auto out = OpenOutput(o.output);
  acc.WriteText(out);
  if (!out) throw DataError("error writing " + o.output);
  fmt::print(err, "cooc: {} tokens ({} out of vocabulary), {} nonzero cells\n",
             tokens, oov, acc.size());
  return kExitOk;
}

struct ShardOptions {
  std::string cooc;
  std::string vocab;
  uint32_t k = 1024;
  std::string output_dir;
};

int RunShard(const ShardOptions& o, std::ostream& err) {
  const Vocabulary vocab = Vocabulary::Load(o.vocab);
  if (vocab.empty()) throw DataError("vocabulary " + o.vocab + " is empty");
  std::ifstream in(o.cooc, std::ios::binary);
  if (!in) throw DataError("cannot read " + o.cooc);
  const CoocAccumulator acc = CoocAccumulator::ReadText(in);
  const auto m_raw = static_cast<uint32_t>(vocab.size());
  const FinalizedMatrix finalized = FinalizeMatrix(acc, m_raw, m_raw, o.k);
  fs::create_directories(o.output_dir);
  ForEachShard(finalized.matrix, finalized.plan, [&](const Shard& shard) {
    SaveShard((fs::path(o.output_dir) /
               ShardFileName(shard.row_block, shard.col_block))
                  .string(),
              shard);
  });
  PlanManifest{finalized.plan, finalized.matrix.total()}.Save(
      (fs::path(o.output_dir) / kManifestFileName).string());
  fmt::print(err, "shard: {}x{} padded to {}x{}, k={}, {} shards\n", m_raw,
             m_raw, finalized.plan.m(), finalized.plan.n(), o.k,
             finalized.plan.num_shards());
  return kExitOk;
}

struct TrainOptions {
  std::string shards;
  TrainConfig config;
  std::string schedule = "permutation";
  uint64_t checkpoint_every = 0;
  std::string resume;
  size_t preload_limit_mb = 1024;
  std::string output;
};

int RunTrain(TrainOptions o, std::ostream& err) {
  auto schedule = ParseSchedule(o.schedule);
  if (!schedule) throw UsageError("unknown schedule '" + o.schedule + "'");
  o.config.schedule = *schedule;
  o.config.Validate();

  PlanManifest manifest =
      PlanManifest::Load((fs::path(o.shards) / kManifestFileName).string());
  const uint64_t shard_bytes =
      manifest.plan.num_shards() *
      (uint64_t{manifest.plan.k()} * manifest.plan.k() * 4 +
       uint64_t{manifest.plan.k()} * 16);
  const ShardDirectory shards(o.shards,
                              shard_bytes <= uint64_t{o.preload_limit_mb} << 20);
  const ShardPlan& plan = shards.plan();

  Checkpoint cp;
  cp.plan = plan;
  cp.config = o.config;
  if (!o.resume.empty()) {
    Checkpoint resumed = LoadCheckpoint(o.resume);
    if (!(resumed.plan == plan) || resumed.config.dim != o.config.dim) {
      throw DataError("checkpoint " + o.resume +
                      " was trained on a different plan or dimension");
    }
    cp.state = std::move(resumed.state);
    cp.store = std::move(resumed.store);
    fmt::print(err, "resuming from step {}\n", cp.state.step);
  } else {
    cp.store = EmbeddingStore::Initialize(plan.m(), plan.n(), o.config.dim,
                                          o.config.seed);
  }

  auto progress = [&](const EpochStats& s) {
    fmt::print(err, "epoch {} steps {} loss {:.6f} steps/sec {:.1f}\n", s.epoch,
               s.steps, s.mean_loss, s.steps_per_second);
  };
  CheckpointHook hook;
  hook.every = o.checkpoint_every;
  hook.save = [&](const EmbeddingStore& store, const TrainState& state) {
    SaveCheckpoint(o.output, {plan, o.config, state, store});
  };
  try {
    Train(shards, cp.store, o.config, cp.state, progress, hook);
  } catch (const NumericalError&) {
    SaveCheckpoint(o.output, cp);
    fmt::print(err, "training aborted at step {}; checkpoint written to {}\n",
               cp.state.step, o.output);
    throw;
  }
  SaveCheckpoint(o.output, cp);
  fmt::print(err, "train: {} steps, checkpoint written to {}\n", cp.state.step,
             o.output);
  return kExitOk;
}

struct ExportOptions {
  std::string checkpoint;
  std::string vocab;
  std::string col_vocab;
  std::string combine = "sum";
  std::string format = "text";
  std::string output;
};

int RunExport(const ExportOptions& o, std::ostream& err) {
  auto mode = ParseCombineMode(o.combine);
  if (!mode) throw UsageError("unknown combine mode '" + o.combine + "'");
  if (o.format != "text" && o.format != "binary") {
    throw UsageError("unknown format '" + o.format + "'");
  }
  const Checkpoint cp = LoadCheckpoint(o.checkpoint);
  const Vocabulary rows = Vocabulary::Load(o.vocab);
  const Vocabulary cols =
      o.col_vocab.empty() ? rows : Vocabulary::Load(o.col_vocab);
  if (rows.size() != cp.plan.m_raw() || cols.size() != cp.plan.n_raw()) {
    throw DataError(fmt::format(
        "vocabulary sizes {}x{} do not match the trained {}x{} matrix",
        rows.size(), cols.size(), cp.plan.m_raw(), cp.plan.n_raw()));
  }
  const EmbeddingTable table = CombineEmbeddings(cp.store, rows, cols, *mode);
  auto out = OpenOutput(o.output);
  if (o.format == "text") {
    table.WriteText(out);
  } else {
    table.WriteBinary(out);
    (*mode == CombineMode::kContext ? cols : rows).Save(o.output + ".vocab");
  }
  if (!out) throw DataError("error writing " + o.output);
  fmt::print(err, "export: {} vectors of dimension {} ({})\n", table.size(),
             table.dim(), o.combine);
  return kExitOk;
}

struct EvalOptions {
  std::string embeddings;
  std::string binary_vocab;
  std::vector<std::string> similarity;
  std::vector<std::string> analogy;
  std::string vocab;
  size_t freq_buckets = 0;
  size_t min_bucket = 100;
  int workers = 1;
  std::string json;
};

EmbeddingTable LoadTable(const std::string& path,
                         const std::string& binary_vocab) {
  if (binary_vocab.empty()) return EmbeddingTable::LoadText(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embeddings " + path);
  return EmbeddingTable::ReadBinary(in, Vocabulary::Load(binary_vocab));
}

int RunEval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  if (o.similarity.empty() && o.analogy.empty()) {
    throw UsageError("give at least one --similarity or --analogy dataset");
  }
  if (o.freq_buckets > 0 && o.vocab.empty()) {
    throw UsageError("--freq-buckets needs --vocab for corpus frequencies");
  }
  const EmbeddingTable table = LoadTable(o.embeddings, o.binary_vocab);
  Vocabulary vocab;
  if (!o.vocab.empty()) vocab = Vocabulary::Load(o.vocab);

  std::vector<nlohmann::json> records;
  auto record = [&](const std::string& name, const std::string& metric,
                    std::optional<double> value, size_t used, size_t skipped) {
    nlohmann::json r = {{"name", name},
                        {"metric", metric},
                        {"value", value ? nlohmann::json(*value) : nullptr},
                        {"used", used},
                        {"skipped", skipped}};
    fmt::print(out, "{:<40} {:<14} {:>8} {:>8} {:>8}\n", name, metric,
               value ? fmt::format("{:.4f}", *value) : "n/a", used, skipped);
    records.push_back(std::move(r));
    return &records.back();
  };
  fmt::print(out, "{:<40} {:<14} {:>8} {:>8} {:>8}\n", "dataset", "metric",
             "value", "used", "skipped");

  for (const std::string& path : o.similarity) {
    const auto dataset = SimilarityDataset::Load(path);
    const auto result = EvaluateSimilarity(table, dataset);
    record(fs::path(path).filename().string(), "spearman_rho", result.rho,
           result.used, result.skipped);
  }
  for (const std::string& path : o.analogy) {
    const auto dataset = AnalogyDataset::Load(path);
    const auto result = EvaluateAnalogy(table, dataset, o.workers);
    const std::string name = fs::path(path).filename().string();
    const auto& all = result.overall;
    record(name, "accuracy", all.accuracy(), all.total - all.oov, all.oov);
    for (const auto& s : result.sections) {
      if (s.name.empty()) continue;
      record(name + "/" + s.name, "accuracy", s.accuracy(), s.total - s.oov,
             s.oov);
    }
    if (o.freq_buckets > 0) {
      const auto breakdown = BucketByFrequency(
          dataset, result.outcomes, vocab, o.freq_buckets, o.min_bucket);
      if (breakdown.merged > 0) {
        fmt::print(err, "{}: merged {} undersized frequency bucket(s)\n", name,
                   breakdown.merged);
      }
      for (size_t b = 0; b < breakdown.buckets.size(); ++b) {
        const auto& bucket = breakdown.buckets[b];
        auto* r = record(fmt::format("{}/freq{}", name, b), "accuracy",
                         bucket.accuracy(), bucket.count, 0);
        (*r)["mean_log10_frequency"] = bucket.mean_log10_frequency;
        fmt::print(out, "{:>40} mean log10 frequency {:.3f}\n", "",
                   bucket.mean_log10_frequency);
      }
    }
  }

  if (!o.json.empty()) {
    std::ofstream file;
    std::ostream* json_out = &out;
    if (o.json != "-") {
      file = OpenOutput(o.json);
      json_out = &file;
    }
    for (const auto& r : records) *json_out << r.dump() << '\n';
  }
  return kExitOk;
}

struct NeighborsOptions {
  std::string embeddings;
  std::string binary_vocab;
  std::vector<std::string> queries;
  size_t top_n = 10;
};

int RunNeighbors(const NeighborsOptions& o, std::ostream& out) {
  const EmbeddingTable table = LoadTable(o.embeddings, o.binary_vocab);
  for (const std::string& query : o.queries) {
    fmt::print(out, "{}\n", query);
    for (const Neighbor& n : NearestNeighbors(table, query, o.top_n)) {
      fmt::print(out, "  {:<24} {:.4f}\n", n.token, n.cosine);
    }
  }
  return kExitOk;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app("Swivel: embeddings by factorizing a PMI matrix in shards",
               "swivel");
  app.set_config("--config", "", "Read options from a key = value file");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  VocabOptions vocab;
  auto* vocab_cmd = app.add_subcommand("vocab", "Build a vocabulary file");
  vocab_cmd->add_option("--input", vocab.inputs, "Corpus files, - for stdin")
      ->required();
  vocab_cmd->add_option("--max-vocab", vocab.max_vocab, "Keep this many tokens");
  vocab_cmd->add_option("--min-count", vocab.min_count, "Minimum token count");
  vocab_cmd->add_option("--output", vocab.output, "Vocabulary file")->required();

  CoocOptions cooc;
  auto* cooc_cmd = app.add_subcommand("cooc", "Count windowed co-occurrences");
  cooc_cmd->add_option("--input", cooc.inputs, "Corpus files, - for stdin")
      ->required();
  cooc_cmd->add_option("--vocab", cooc.vocab, "Vocabulary file")->required();
  cooc_cmd->add_option("--window", cooc.window, "Tokens on each side");
  cooc_cmd->add_option("--scaling", cooc.scaling, "harmonic, linear or uniform");
  cooc_cmd->add_option("--workers", cooc.workers, "Counting threads");
  cooc_cmd->add_option("--output", cooc.output, "Sparse `i j count` file")
      ->required();

  ShardOptions shard;
  auto* shard_cmd = app.add_subcommand("shard", "Write k x k training shards");
  shard_cmd->add_option("--cooc", shard.cooc, "Co-occurrence file")->required();
  shard_cmd->add_option("--vocab", shard.vocab, "Vocabulary file")->required();
  shard_cmd->add_option("--k", shard.k, "Shard size");
  shard_cmd->add_option("--output-dir", shard.output_dir, "Shard directory")
      ->required();

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train embeddings on shards");
  auto& tc = train.config;
  train_cmd->add_option("--shards", train.shards, "Shard directory")->required();
  train_cmd->add_option("--dim", tc.dim, "Embedding dimension");
  train_cmd->add_option("--steps", tc.steps, "Total shard steps");
  train_cmd->add_option("--eta", tc.eta, "Adagrad learning rate");
  train_cmd->add_option("--epsilon", tc.epsilon, "Adagrad denominator guard");
  train_cmd->add_option("--alpha", tc.objective.weights.alpha,
                        "Confidence exponent");
  train_cmd->add_option("--b0", tc.objective.weights.b0, "Confidence offset");
  train_cmd->add_option("--b", tc.objective.weights.b, "Confidence scale");
  train_cmd->add_option("--shift", tc.objective.shift,
                        "Subtracted from PMI targets");
  train_cmd->add_option("--seed", tc.seed, "Random seed");
  train_cmd->add_option("--workers", tc.workers, "Training threads");
  train_cmd->add_option("--schedule", train.schedule, "permutation or uniform");
  train_cmd->add_flag("--early-stop", tc.early_stop,
                      "Stop when the epoch loss stops improving");
  train_cmd->add_option("--checkpoint-every", train.checkpoint_every,
                        "Steps between checkpoints (0: only at the end)");
  train_cmd->add_option("--resume", train.resume, "Checkpoint to continue from");
  train_cmd->add_option("--preload-limit-mb", train.preload_limit_mb,
                        "Keep shards in memory when they fit in this budget");
  train_cmd->add_option("--output", train.output, "Checkpoint file")->required();

  ExportOptions exp;
  auto* export_cmd = app.add_subcommand("export", "Write embedding vectors");
  export_cmd->add_option("--checkpoint", exp.checkpoint, "Checkpoint file")
      ->required();
  export_cmd->add_option("--vocab", exp.vocab, "Row vocabulary")->required();
  export_cmd->add_option("--col-vocab", exp.col_vocab,
                         "Column vocabulary (default: --vocab)");
  export_cmd->add_option("--combine", exp.combine, "word, context or sum");
  export_cmd->add_option("--format", exp.format, "text or binary");
  export_cmd->add_option("--output", exp.output, "Output file")->required();

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score embeddings");
  eval_cmd->add_option("--embeddings", ev.embeddings, "Embedding file")
      ->required();
  eval_cmd->add_option("--binary-vocab", ev.binary_vocab,
                       "Read --embeddings as raw f32 with this vocabulary");
  eval_cmd->add_option("--similarity", ev.similarity, "Word-pair datasets");
  eval_cmd->add_option("--analogy", ev.analogy, "Analogy datasets");
  eval_cmd->add_option("--vocab", ev.vocab,
                       "Corpus vocabulary for --freq-buckets");
  eval_cmd->add_option("--freq-buckets", ev.freq_buckets,
                       "Analogy accuracy by word frequency (0: off)");
  eval_cmd->add_option("--min-bucket", ev.min_bucket,
                       "Minimum analogies per frequency bucket");
  eval_cmd->add_option("--workers", ev.workers, "Evaluation threads");
  eval_cmd->add_option("--json", ev.json, "JSON-lines report, - for stdout");

  NeighborsOptions nb;
  auto* neighbors_cmd =
      app.add_subcommand("neighbors", "Nearest neighbors by cosine");
  neighbors_cmd->add_option("--embeddings", nb.embeddings, "Embedding file")
      ->required();
  neighbors_cmd->add_option("--binary-vocab", nb.binary_vocab,
                            "Read --embeddings as raw f32 with this vocabulary");
  neighbors_cmd->add_option("--query", nb.queries, "Query tokens")->required();
  neighbors_cmd->add_option("--top-n", nb.top_n, "Neighbors per query");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    for (CLI::App* command : app.get_subcommands()) {
      PrintResolvedConfig(*command, err);
    }
    if (*vocab_cmd) return RunVocab(vocab, err);
    if (*cooc_cmd) return RunCooc(cooc, err);
    if (*shard_cmd) return RunShard(shard, err);
    if (*train_cmd) return RunTrain(train, err);
    if (*export_cmd) return RunExport(exp, err);
    if (*eval_cmd) return RunEval(ev, out, err);
    if (*neighbors_cmd) return RunNeighbors(nb, out);
  } catch (const UsageError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitUsage;
  } catch (const NumericalError& e) {
    fmt::print(err, "numerical failure: {}\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace swivel::cli
