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

// Word-similarity and analogy evaluation.
//
// Similarity: Spearman's rank correlation between model cosines and human
// scores over the pairs whose words are both in the table.
// Analogy: "a is to b as c is to d" is answered by 3CosAdd over unit-length
// vectors, excluding a, b and c from the candidates; any out-of-vocabulary
// word makes the question a loss.

#ifndef SWIVEL_EVAL_H_
#define SWIVEL_EVAL_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swivel/corpus.h"
#include "swivel/embedding_table.h"

namespace swivel {

// Zero when either vector is all zeros. Throws UsageError on a dimension
// mismatch.
double Cosine(std::span<const float> u, std::span<const float> v);

// Pearson correlation of average ranks. Throws UsageError for fewer than two
// pairs or unequal lengths; returns nullopt when either side has zero rank
// variance.
std::optional<double> SpearmanRho(std::span<const double> a,
                                  std::span<const double> b);

struct SimilarityPair {
  std::string first;
  std::string second;
  double score = 0.0;
};

struct SimilarityDataset {
  std::string name;
  std::vector<SimilarityPair> pairs;

  // `word1 word2 score` per line, tab or space separated. Lines whose score
  // does not parse (headers, comments) are skipped. Words are lowercased.
  static SimilarityDataset Read(std::istream& in, std::string name);
  static SimilarityDataset Load(const std::string& path);
};

struct SimilarityResult {
  std::optional<double> rho;  // nullopt: degenerate ranking
  size_t used = 0;
  size_t skipped = 0;
};

// Throws DataError when the dataset is empty or every pair is OOV.
SimilarityResult EvaluateSimilarity(const EmbeddingTable& table,
                                    const SimilarityDataset& dataset);

struct AnalogyQuestion {
  std::string a, b, c, d;
  uint32_t section = 0;
};

struct AnalogyDataset {
  std::string name;
  std::vector<std::string> sections;  // sections[0] is "" for unlabeled lines
  std::vector<AnalogyQuestion> questions;

  // `a b c d` per line; `: name` starts a section; `//` lines are comments.
  static AnalogyDataset Read(std::istream& in, std::string name);
  static AnalogyDataset Load(const std::string& path);
};

struct AnalogyScore {
  std::string name;
  size_t correct = 0;
  size_t total = 0;
  size_t oov = 0;  // questions lost to out-of-vocabulary words
  double accuracy() const {
    return total > 0 ? static_cast<double>(correct) / total : 0.0;
  }
};

struct AnalogyResult {
  AnalogyScore overall;
  std::vector<AnalogyScore> sections;  // non-empty sections, in file order
  std::vector<uint8_t> outcomes;       // 1 when question i was answered right
};

// Unit-normalized copy of a table for repeated cosine searches.
class NormalizedTable {
 public:
  explicit NormalizedTable(const EmbeddingTable& table);

  const EmbeddingTable& table() const { return table_; }
  std::span<const float> unit_vector(size_t id) const {
    return {unit_.data() + id * table_.dim(), table_.dim()};
  }
  // Cosine-equivalent scores of every row against `query` (not normalized).
  void Scores(std::span<const float> query, std::vector<float>& scores) const;

  // argmax_x cos(x, b - a + c) over ids other than a, b, c; ties go to the
  // lowest id. nullopt if the table has no other rows.
  std::optional<uint32_t> SolveAnalogy(uint32_t a, uint32_t b, uint32_t c,
                                       std::vector<float>& query,
                                       std::vector<float>& scores) const;

 private:
  const EmbeddingTable& table_;
  std::vector<float> unit_;
};

AnalogyResult EvaluateAnalogy(const EmbeddingTable& table,
                              const AnalogyDataset& dataset, int workers = 1);

struct FrequencyBucket {
  double mean_log10_frequency = 0.0;
  size_t correct = 0;
  size_t count = 0;
  double accuracy() const {
    return count > 0 ? static_cast<double>(correct) / count : 0.0;
  }
};

struct FrequencyBreakdown {
  std::vector<FrequencyBucket> buckets;  // ascending frequency
  size_t merged = 0;  // undersized buckets folded into a neighbor
};

// Groups questions by log10 of the mean corpus count of their four words
// (words missing from `vocab` count as 0, the log is floored at 0) into
// `num_buckets` equal-width buckets, then merges any bucket holding fewer
// than `min_bucket_size` questions into its neighbor.
FrequencyBreakdown AnalogyAccuracyByFrequency(const EmbeddingTable& table,
                                              const AnalogyDataset& dataset,
                                              const Vocabulary& vocab,
                                              size_t num_buckets,
                                              size_t min_bucket_size = 100);

// Same grouping given precomputed outcomes of EvaluateAnalogy().
FrequencyBreakdown BucketByFrequency(const AnalogyDataset& dataset,
                                     std::span<const uint8_t> outcomes,
                                     const Vocabulary& vocab,
                                     size_t num_buckets,
                                     size_t min_bucket_size = 100);

struct Neighbor {
  std::string token;
  uint32_t id = 0;
  double cosine = 0.0;
};

// The top_n most similar tokens, excluding the query; ties go to the lowest
// id. Throws DataError for an out-of-vocabulary query.
std::vector<Neighbor> NearestNeighbors(const EmbeddingTable& table,
                                       const std::string& query, size_t top_n);

}  // namespace swivel

#endif  // SWIVEL_EVAL_H_
