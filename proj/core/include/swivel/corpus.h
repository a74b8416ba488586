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

// Corpus processing: tokenization, vocabulary construction, and windowed
// co-occurrence counting.

#ifndef SWIVEL_CORPUS_H_
#define SWIVEL_CORPUS_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace swivel {

using Sentence = std::vector<std::string>;

// Streaming tokenizer. Text is lowercased (ASCII), split into sentences at
// '.', '!', '?' and newline, and into tokens at whitespace and punctuation.
// Hyphens and apostrophes inside a token are kept ("state-of-the-art",
// "isn't"); at token edges they are dropped. Bytes >= 0x80 are treated as
// word characters so UTF-8 text passes through unchanged.
class Tokenizer {
 public:
  using SentenceSink = std::function<void(Sentence&)>;

  explicit Tokenizer(SentenceSink sink) : sink_(std::move(sink)) {}

  void Feed(std::string_view chunk);
  // Flushes the final sentence if the input did not end with a boundary.
  void Finish();

 private:
  void FlushToken();
  void FlushSentence();

  SentenceSink sink_;
  std::string token_;
  Sentence sentence_;
};

std::vector<Sentence> Tokenize(std::string_view text);

// Tokenizes a whole stream, calling `sink` once per sentence.
void TokenizeStream(std::istream& in, const Tokenizer::SentenceSink& sink);

using TokenId = uint32_t;

// Frequency-ranked token table. Ids are assigned by descending count, ties
// broken by ascending byte-wise token order.
class Vocabulary {
 public:
  struct Entry {
    std::string token;
    uint64_t count = 0;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  Vocabulary() = default;
  // Entries must already be in id order; throws DataError otherwise.
  explicit Vocabulary(std::vector<Entry> entries);

  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }
  const std::string& token(TokenId id) const { return entries_[id].token; }
  uint64_t count(TokenId id) const { return entries_[id].count; }
  std::optional<TokenId> Find(const std::string& token) const;

  // One `token<TAB>count` line per entry, in id order.
  void Write(std::ostream& out) const;
  static Vocabulary Read(std::istream& in);
  void Save(const std::string& path) const;
  static Vocabulary Load(const std::string& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, TokenId> index_;
};

// Accumulates unigram counts over a stream of sentences.
class VocabularyBuilder {
 public:
  void Add(const Sentence& sentence);
  void Merge(const VocabularyBuilder& other);
  // The `max_size` most frequent tokens with count >= min_count.
  Vocabulary Build(size_t max_size, uint64_t min_count) const;

 private:
  std::unordered_map<std::string, uint64_t> counts_;
};

Vocabulary BuildVocabulary(std::span<const Sentence> sentences,
                           size_t max_size, uint64_t min_count);

enum class WindowScaling { kHarmonic, kLinear, kUniform };

std::string_view ScalingName(WindowScaling scaling);
std::optional<WindowScaling> ParseScaling(std::string_view name);

struct CoocConfig {
  int window = 10;
  WindowScaling scaling = WindowScaling::kHarmonic;
  // Count contexts on both sides of the focus token. When false only
  // contexts to the right are counted.
  bool symmetric = true;

  void Validate() const;
};

// Weight contributed by a context token `distance` positions from the focus:
// 1/d (harmonic), (window-d+1)/window (linear) or 1 (uniform).
double WindowWeight(WindowScaling scaling, int distance, int window);

// Sparse (row, col) -> count table. Absent cells are zero; stored cells are
// always positive.
class CoocAccumulator {
 public:
  struct Cell {
    TokenId row = 0;
    TokenId col = 0;
    double count = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
  };

  void Add(TokenId row, TokenId col, double weight);
  // Cell-wise addition.
  void Merge(const CoocAccumulator& other);

  double Get(TokenId row, TokenId col) const;
  size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }
  double Total() const;
  // Cells ordered by (row, col).
  std::vector<Cell> SortedCells() const;

  // Sorted sparse text: one `row col count` line per cell. Counts use the
  // shortest decimal form that round-trips exactly.
  void WriteText(std::ostream& out) const;
  static CoocAccumulator ReadText(std::istream& in);

 private:
  static uint64_t Key(TokenId row, TokenId col) {
    return (static_cast<uint64_t>(row) << 32) | col;
  }
  std::unordered_map<uint64_t, double> cells_;
};

// Single-writer streaming counter. Out-of-vocabulary tokens contribute no
// counts but still occupy window positions; windows stop at sentence ends.
class CoocCounter {
 public:
  CoocCounter(const Vocabulary& vocab, const CoocConfig& config);

  void AddSentence(const Sentence& sentence);

  const CoocAccumulator& accumulator() const { return acc_; }
  CoocAccumulator Release() { return std::move(acc_); }

 private:
  const Vocabulary& vocab_;
  CoocConfig config_;
  std::vector<double> weights_;  // weights_[d] for d in [1, window]
  std::vector<int64_t> ids_;
  CoocAccumulator acc_;
};

CoocAccumulator CountCooccurrences(std::span<const Sentence> sentences,
                                   const Vocabulary& vocab,
                                   const CoocConfig& config);

// Splits `sentences` into `workers` contiguous ranges counted concurrently,
// then merges the partial tables in range order.
CoocAccumulator CountCooccurrencesParallel(std::span<const Sentence> sentences,
                                           const Vocabulary& vocab,
                                           const CoocConfig& config,
                                           int workers);

}  // namespace swivel

#endif  // SWIVEL_CORPUS_H_
