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

#include "swivel/eval.h"

#include <fmt/format.h>

#include <Eigen/Core>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>
#include <thread>

#include "swivel/errors.h"

namespace swivel {
namespace {

std::string Lowercase(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

std::vector<std::string> SplitFields(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream in(line);
  for (std::string field; in >> field;) fields.push_back(std::move(field));
  return fields;
}

std::vector<double> AverageRanks(std::span<const double> values) {
  std::vector<size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t x, size_t y) { return values[x] < values[y]; });
  std::vector<double> ranks(values.size());
  for (size_t start = 0; start < order.size();) {
    size_t end = start + 1;
    while (end < order.size() && values[order[end]] == values[order[start]]) {
      ++end;
    }
    // Ranks are 1-based; a tie group shares the mean of its positions.
    const double rank = 0.5 * static_cast<double>(start + 1 + end);
    for (size_t i = start; i < end; ++i) ranks[order[i]] = rank;
    start = end;
  }
  return ranks;
}

using ConstRowMatrixF =
    Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;

}  // namespace

double Cosine(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) {
    throw UsageError(
        fmt::format("cosine of vectors of length {} and {}", u.size(), v.size()));
  }
  double dot = 0, uu = 0, vv = 0;
  for (size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<double>(u[i]) * v[i];
    uu += static_cast<double>(u[i]) * u[i];
    vv += static_cast<double>(v[i]) * v[i];
  }
  if (uu == 0 || vv == 0) return 0.0;
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

std::optional<double> SpearmanRho(std::span<const double> a,
                                  std::span<const double> b) {
  if (a.size() != b.size()) {
    throw UsageError("spearman: score lists differ in length");
  }
  if (a.size() < 2) throw UsageError("spearman: need at least two pairs");
  const auto ra = AverageRanks(a);
  const auto rb = AverageRanks(b);
  const double n = static_cast<double>(a.size());
  const double mean = (n + 1) / 2;  // mean of average ranks is always (n+1)/2
  double cov = 0, va = 0, vb = 0;
  for (size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - mean) * (rb[i] - mean);
    va += (ra[i] - mean) * (ra[i] - mean);
    vb += (rb[i] - mean) * (rb[i] - mean);
  }
  if (va == 0 || vb == 0) return std::nullopt;
  return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

SimilarityDataset SimilarityDataset::Read(std::istream& in, std::string name) {
  SimilarityDataset dataset;
  dataset.name = std::move(name);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto fields = SplitFields(line);
    if (fields.size() < 3) continue;
    double score = 0;
    const std::string& text = fields[2];
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), score);
    if (ec != std::errc() || ptr != text.data() + text.size() ||
        !std::isfinite(score)) {
      continue;
    }
    dataset.pairs.push_back(
        {Lowercase(std::move(fields[0])), Lowercase(std::move(fields[1])), score});
  }
  return dataset;
}

SimilarityDataset SimilarityDataset::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open similarity dataset " + path);
  return Read(in, path);
}

SimilarityResult EvaluateSimilarity(const EmbeddingTable& table,
                                    const SimilarityDataset& dataset) {
  if (dataset.pairs.empty()) {
    throw DataError("similarity dataset " + dataset.name + " is empty");
  }
  SimilarityResult result;
  std::vector<double> model, human;
  for (const SimilarityPair& pair : dataset.pairs) {
    auto x = table.Find(pair.first);
    auto y = table.Find(pair.second);
    if (!x || !y) {
      ++result.skipped;
      continue;
    }
    model.push_back(Cosine(table.vector(*x), table.vector(*y)));
    human.push_back(pair.score);
  }
  result.used = model.size();
  if (result.used == 0) {
    throw DataError("similarity dataset " + dataset.name +
                    ": no pair is in the vocabulary");
  }
  if (result.used >= 2) result.rho = SpearmanRho(model, human);
  return result;
}

AnalogyDataset AnalogyDataset::Read(std::istream& in, std::string name) {
  AnalogyDataset dataset;
  dataset.name = std::move(name);
  dataset.sections.emplace_back();
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.starts_with("//")) continue;
    if (line.starts_with(":")) {
      auto fields = SplitFields(line.substr(1));
      dataset.sections.push_back(fields.empty() ? "" : fields[0]);
      continue;
    }
    auto fields = SplitFields(line);
    if (fields.empty()) continue;
    if (fields.size() != 4) {
      throw DataError(fmt::format("analogy dataset {} line {}: expected 4 words",
                                  dataset.name, line_no));
    }
    dataset.questions.push_back(
        {Lowercase(fields[0]), Lowercase(fields[1]), Lowercase(fields[2]),
         Lowercase(fields[3]),
         static_cast<uint32_t>(dataset.sections.size() - 1)});
  }
  return dataset;
}

AnalogyDataset AnalogyDataset::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open analogy dataset " + path);
  return Read(in, path);
}

NormalizedTable::NormalizedTable(const EmbeddingTable& table)
    : table_(table), unit_(table.values()) {
  const uint32_t dim = table.dim();
  for (size_t id = 0; id < table.size(); ++id) {
    float* v = unit_.data() + id * dim;
    double norm = 0;
    for (uint32_t c = 0; c < dim; ++c) norm += static_cast<double>(v[c]) * v[c];
    if (norm == 0) continue;
    const double scale = 1.0 / std::sqrt(norm);
    for (uint32_t c = 0; c < dim; ++c) v[c] = static_cast<float>(v[c] * scale);
  }
}

void NormalizedTable::Scores(std::span<const float> query,
                             std::vector<float>& scores) const {
  const auto rows = static_cast<Eigen::Index>(table_.size());
  const auto dim = static_cast<Eigen::Index>(table_.dim());
  scores.resize(table_.size());
  ConstRowMatrixF unit(unit_.data(), rows, dim);
  Eigen::Map<const Eigen::VectorXf> q(query.data(), dim);
  Eigen::Map<Eigen::VectorXf> out(scores.data(), rows);
  out.noalias() = unit * q;
}

std::optional<uint32_t> NormalizedTable::SolveAnalogy(
    uint32_t a, uint32_t b, uint32_t c, std::vector<float>& query,
    std::vector<float>& scores) const {
  const uint32_t dim = table_.dim();
  query.resize(dim);
  auto va = unit_vector(a), vb = unit_vector(b), vc = unit_vector(c);
  for (uint32_t i = 0; i < dim; ++i) query[i] = vb[i] - va[i] + vc[i];
  Scores(query, scores);
  std::optional<uint32_t> best;
  float best_score = 0;
  for (uint32_t id = 0; id < scores.size(); ++id) {
    if (id == a || id == b || id == c) continue;
    if (!best || scores[id] > best_score) {
      best = id;
      best_score = scores[id];
    }
  }
  return best;
}

AnalogyResult EvaluateAnalogy(const EmbeddingTable& table,
                              const AnalogyDataset& dataset, int workers) {
  if (dataset.questions.empty()) {
    throw DataError("analogy dataset " + dataset.name + " is empty");
  }
  if (workers < 1) throw UsageError("workers must be >= 1");
  const NormalizedTable normalized(table);
  const size_t n = dataset.questions.size();
  AnalogyResult result;
  result.outcomes.assign(n, 0);
  std::vector<uint8_t> oov(n, 0);

  auto solve_range = [&](size_t begin, size_t end) {
    std::vector<float> query, scores;
    for (size_t q = begin; q < end; ++q) {
      const AnalogyQuestion& question = dataset.questions[q];
      auto a = table.Find(question.a);
      auto b = table.Find(question.b);
      auto c = table.Find(question.c);
      auto d = table.Find(question.d);
      if (!a || !b || !c || !d) {
        oov[q] = 1;
        continue;
      }
      auto answer = normalized.SolveAnalogy(*a, *b, *c, query, scores);
      result.outcomes[q] = answer && *answer == *d ? 1 : 0;
    }
  };
  const size_t parts = std::min<size_t>(static_cast<size_t>(workers), n);
  if (parts <= 1) {
    solve_range(0, n);
  } else {
    std::vector<std::thread> threads;
    for (size_t w = 0; w < parts; ++w) {
      threads.emplace_back(solve_range, n * w / parts, n * (w + 1) / parts);
    }
    for (auto& t : threads) t.join();
  }

  std::vector<AnalogyScore> sections(dataset.sections.size());
  for (size_t s = 0; s < sections.size(); ++s) {
    sections[s].name = dataset.sections[s];
  }
  result.overall.name = dataset.name;
  for (size_t q = 0; q < n; ++q) {
    for (AnalogyScore* score :
         {&result.overall, &sections[dataset.questions[q].section]}) {
      ++score->total;
      score->correct += result.outcomes[q];
      score->oov += oov[q];
    }
  }
  for (auto& s : sections) {
    if (s.total > 0) result.sections.push_back(std::move(s));
  }
  return result;
}

FrequencyBreakdown BucketByFrequency(const AnalogyDataset& dataset,
                                     std::span<const uint8_t> outcomes,
                                     const Vocabulary& vocab,
                                     size_t num_buckets,
                                     size_t min_bucket_size) {
  if (num_buckets < 1) throw UsageError("need at least one frequency bucket");
  if (outcomes.size() != dataset.questions.size()) {
    throw UsageError("outcomes do not match the analogy dataset");
  }
  FrequencyBreakdown breakdown;
  const size_t n = dataset.questions.size();
  if (n == 0) return breakdown;

  auto frequency = [&](const std::string& token) -> double {
    auto id = vocab.Find(token);
    return id ? static_cast<double>(vocab.count(*id)) : 0.0;
  };
  std::vector<double> keys(n);
  for (size_t q = 0; q < n; ++q) {
    const auto& x = dataset.questions[q];
    const double mean = (frequency(x.a) + frequency(x.b) + frequency(x.c) +
                         frequency(x.d)) / 4.0;
    keys[q] = std::log10(std::max(mean, 1.0));
  }
  const auto [lo, hi] = std::minmax_element(keys.begin(), keys.end());
  const double low = *lo;
  const double width = (*hi - low) / static_cast<double>(num_buckets);

  struct Accumulator {
    double key_sum = 0;
    size_t correct = 0;
    size_t count = 0;
  };
  std::vector<Accumulator> raw(width > 0 ? num_buckets : 1);
  for (size_t q = 0; q < n; ++q) {
    size_t bucket = 0;
    if (width > 0) {
      bucket = std::min(num_buckets - 1,
                        static_cast<size_t>((keys[q] - low) / width));
    }
    raw[bucket].key_sum += keys[q];
    raw[bucket].correct += outcomes[q];
    ++raw[bucket].count;
  }

  std::vector<Accumulator> merged;
  Accumulator pending;
  size_t pending_parts = 0;
  for (const Accumulator& a : raw) {
    if (a.count == 0) continue;
    pending.key_sum += a.key_sum;
    pending.correct += a.correct;
    pending.count += a.count;
    ++pending_parts;
    if (pending.count >= min_bucket_size) {
      breakdown.merged += pending_parts - 1;
      merged.push_back(pending);
      pending = {};
      pending_parts = 0;
    }
  }
  if (pending.count > 0) {
    if (merged.empty()) {
      breakdown.merged += pending_parts - 1;
      merged.push_back(pending);
    } else {
      breakdown.merged += pending_parts;
      merged.back().key_sum += pending.key_sum;
      merged.back().correct += pending.correct;
      merged.back().count += pending.count;
    }
  }
  for (const Accumulator& a : merged) {
    breakdown.buckets.push_back(
        {a.key_sum / static_cast<double>(a.count), a.correct, a.count});
  }
  return breakdown;
}

FrequencyBreakdown AnalogyAccuracyByFrequency(const EmbeddingTable& table,
                                              const AnalogyDataset& dataset,
                                              const Vocabulary& vocab,
                                              size_t num_buckets,
                                              size_t min_bucket_size) {
  const AnalogyResult result = EvaluateAnalogy(table, dataset);
  return BucketByFrequency(dataset, result.outcomes, vocab, num_buckets,
                           min_bucket_size);
}

std::vector<Neighbor> NearestNeighbors(const EmbeddingTable& table,
                                       const std::string& query, size_t top_n) {
  auto id = table.Find(query);
  if (!id) throw DataError("'" + query + "' is not in the vocabulary");
  const NormalizedTable normalized(table);
  const auto unit = normalized.unit_vector(*id);
  std::vector<float> q(unit.begin(), unit.end());
  std::vector<float> scores;
  normalized.Scores(q, scores);
  std::vector<uint32_t> candidates;
  candidates.reserve(table.size());
  for (uint32_t other = 0; other < table.size(); ++other) {
    if (other != *id) candidates.push_back(other);
  }
  auto better = [&](uint32_t x, uint32_t y) {
    return scores[x] != scores[y] ? scores[x] > scores[y] : x < y;
  };
  const size_t n = std::min(top_n, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + n,
                    candidates.end(), better);
  std::vector<Neighbor> neighbors;
  for (size_t i = 0; i < n; ++i) {
    const uint32_t other = candidates[i];
    neighbors.push_back({table.token(other), other, scores[other]});
  }
  return neighbors;
}

}  // namespace swivel
