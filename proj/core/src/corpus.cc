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

#include "swivel/corpus.h"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <thread>

#include "swivel/errors.h"

namespace swivel {
namespace {

bool IsSentenceBoundary(unsigned char c) {
  return c == '.' || c == '!' || c == '?' || c == '\n';
}


bool IsWordChar(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c >= 0x80;
}

bool IsJoiner(unsigned char c) { return c == '-' || c == '\''; }

template <typename T>
T ParseNumber(std::string_view text, std::string_view what, size_t line) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw DataError(fmt::format("{} line {}: cannot parse '{}'", what, line,
                                text));
  }
  return value;
}

}  // namespace

void Tokenizer::Feed(std::string_view chunk) {
  for (const char ch : chunk) {
    const auto c = static_cast<unsigned char>(ch);
    if (IsSentenceBoundary(c)) {
      FlushToken();
      FlushSentence();
    } else if (IsWordChar(c)) {
      token_.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                            : ch);
    } else if (IsJoiner(c)) {
      token_.push_back(ch);
    } else {
      // Whitespace and all other punctuation separate tokens.
      FlushToken();
    }
  }
}

void Tokenizer::Finish() {
  FlushToken();
  FlushSentence();
}

void Tokenizer::FlushToken() {
  size_t begin = 0;
  size_t end = token_.size();
  while (begin < end && IsJoiner(token_[begin])) ++begin;
  while (end > begin && IsJoiner(token_[end - 1])) --end;
  if (begin < end) sentence_.emplace_back(token_, begin, end - begin);
  token_.clear();
}

void Tokenizer::FlushSentence() {
  if (sentence_.empty()) return;
  sink_(sentence_);
  sentence_.clear();
}

std::vector<Sentence> Tokenize(std::string_view text) {
  std::vector<Sentence> sentences;
  Tokenizer tokenizer([&](Sentence& s) { sentences.push_back(std::move(s)); });
  tokenizer.Feed(text);
  tokenizer.Finish();
  return sentences;
}

void TokenizeStream(std::istream& in, const Tokenizer::SentenceSink& sink) {
  Tokenizer tokenizer(sink);
  std::string buffer(1 << 16, '\0');
  while (in) {
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    tokenizer.Feed(std::string_view(buffer.data(),
                                    static_cast<size_t>(in.gcount())));
  }
  tokenizer.Finish();
}

Vocabulary::Vocabulary(std::vector<Entry> entries)
    : entries_(std::move(entries)) {
  index_.reserve(entries_.size());
  for (size_t id = 0; id < entries_.size(); ++id) {
    const Entry& e = entries_[id];
    if (e.token.empty()) {
      throw DataError(fmt::format("vocabulary id {}: empty token", id));
    }
    if (id > 0) {
      const Entry& prev = entries_[id - 1];
      if (prev.count < e.count ||
          (prev.count == e.count && !(prev.token < e.token))) {
        throw DataError(fmt::format(
            "vocabulary id {}: '{}' is out of frequency order", id, e.token));
      }
    }
    if (!index_.emplace(e.token, static_cast<TokenId>(id)).second) {
      throw DataError(fmt::format("vocabulary: duplicate token '{}'", e.token));
    }
  }
}

std::optional<TokenId> Vocabulary::Find(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::Write(std::ostream& out) const {
  for (const Entry& e : entries_) out << e.token << '\t' << e.count << '\n';
}

Vocabulary Vocabulary::Read(std::istream& in) {
  std::vector<Entry> entries;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw DataError(
          fmt::format("vocabulary line {}: expected token<TAB>count", line_no));
    }
    entries.push_back(
        {line.substr(0, tab),
         ParseNumber<uint64_t>(std::string_view(line).substr(tab + 1),
                               "vocabulary", line_no)});
  }
  return Vocabulary(std::move(entries));
}

void Vocabulary::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  Write(out);
  if (!out) throw DataError("error writing " + path);
}

Vocabulary Vocabulary::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary " + path);
  return Read(in);
}

void VocabularyBuilder::Add(const Sentence& sentence) {
  for (const std::string& token : sentence) ++counts_[token];
}

void VocabularyBuilder::Merge(const VocabularyBuilder& other) {
  for (const auto& [token, count] : other.counts_) counts_[token] += count;
}

Vocabulary VocabularyBuilder::Build(size_t max_size, uint64_t min_count) const {
  if (max_size < 1) throw UsageError("max vocabulary size must be >= 1");
  if (min_count < 1) throw UsageError("min count must be >= 1");
  std::vector<Vocabulary::Entry> entries;
  for (const auto& [token, count] : counts_) {
    if (count >= min_count) entries.push_back({token, count});
  }
  auto by_rank = [](const Vocabulary::Entry& a, const Vocabulary::Entry& b) {
    return a.count != b.count ? a.count > b.count : a.token < b.token;
  };
  if (entries.size() > max_size) {
    std::partial_sort(entries.begin(), entries.begin() + max_size,
                      entries.end(), by_rank);
    entries.resize(max_size);
  } else {
    std::sort(entries.begin(), entries.end(), by_rank);
  }
  return Vocabulary(std::move(entries));
}

Vocabulary BuildVocabulary(std::span<const Sentence> sentences,
                           size_t max_size, uint64_t min_count) {
  VocabularyBuilder builder;
  for (const Sentence& s : sentences) builder.Add(s);
  return builder.Build(max_size, min_count);
}

std::string_view ScalingName(WindowScaling scaling) {
  switch (scaling) {
    case WindowScaling::kHarmonic:
      return "harmonic";
    case WindowScaling::kLinear:
      return "linear";
    case WindowScaling::kUniform:
      return "uniform";
  }
  return "unknown";
}

std::optional<WindowScaling> ParseScaling(std::string_view name) {
  for (auto s : {WindowScaling::kHarmonic, WindowScaling::kLinear,
                 WindowScaling::kUniform}) {
    if (ScalingName(s) == name) return s;
  }
  return std::nullopt;
}

void CoocConfig::Validate() const {
  if (window < 1) throw UsageError("window must be >= 1");
}

double WindowWeight(WindowScaling scaling, int distance, int window) {
  switch (scaling) {
    case WindowScaling::kHarmonic:
      return 1.0 / distance;
    case WindowScaling::kLinear:
      return static_cast<double>(window - distance + 1) / window;
    case WindowScaling::kUniform:
      return 1.0;
  }
  return 0.0;
}

void CoocAccumulator::Add(TokenId row, TokenId col, double weight) {
  if (weight > 0) cells_[Key(row, col)] += weight;
}

void CoocAccumulator::Merge(const CoocAccumulator& other) {
  if (cells_.empty()) {
    cells_ = other.cells_;
    return;
  }
  for (const auto& [key, count] : other.cells_) cells_[key] += count;
}

double CoocAccumulator::Get(TokenId row, TokenId col) const {
  auto it = cells_.find(Key(row, col));
  return it == cells_.end() ? 0.0 : it->second;
}

double CoocAccumulator::Total() const {
  double total = 0;
  for (const Cell& c : SortedCells()) total += c.count;
  return total;
}

std::vector<CoocAccumulator::Cell> CoocAccumulator::SortedCells() const {
  std::vector<Cell> cells;
  cells.reserve(cells_.size());
  for (const auto& [key, count] : cells_) {
    cells.push_back({static_cast<TokenId>(key >> 32),
                     static_cast<TokenId>(key & 0xffffffffu), count});
  }
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  return cells;
}

void CoocAccumulator::WriteText(std::ostream& out) const {
  fmt::memory_buffer buffer;
  for (const Cell& c : SortedCells()) {
    fmt::format_to(std::back_inserter(buffer), "{} {} {}\n", c.row, c.col,
                   c.count);
    if (buffer.size() > (1 << 16)) {
      out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
      buffer.clear();
    }
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
}

CoocAccumulator CoocAccumulator::ReadText(std::istream& in) {
  CoocAccumulator acc;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const size_t a = line.find(' ');
    const size_t b = a == std::string::npos ? a : line.find(' ', a + 1);
    if (b == std::string::npos) {
      throw DataError(fmt::format("cooc line {}: expected 'row col count'",
                                  line_no));
    }
    std::string_view view(line);
    const auto row = ParseNumber<TokenId>(view.substr(0, a), "cooc", line_no);
    const auto col =
        ParseNumber<TokenId>(view.substr(a + 1, b - a - 1), "cooc", line_no);
    const auto count = ParseNumber<double>(view.substr(b + 1), "cooc", line_no);
    if (!(count > 0) || !std::isfinite(count)) {
      throw DataError(
          fmt::format("cooc line {}: count must be positive", line_no));
    }
    if (!acc.cells_.emplace(Key(row, col), count).second) {
      throw DataError(fmt::format("cooc line {}: duplicate cell ({}, {})",
                                  line_no, row, col));
    }
  }
  return acc;
}

CoocCounter::CoocCounter(const Vocabulary& vocab, const CoocConfig& config)
    : vocab_(vocab), config_(config) {
  config_.Validate();
  if (vocab_.empty()) throw DataError("co-occurrence counting needs a vocabulary");
  weights_.resize(static_cast<size_t>(config_.window) + 1, 0.0);
  for (int d = 1; d <= config_.window; ++d) {
    weights_[d] = WindowWeight(config_.scaling, d, config_.window);
  }
}

void CoocCounter::AddSentence(const Sentence& sentence) {
  ids_.clear();
  for (const std::string& token : sentence) {
    auto id = vocab_.Find(token);
    ids_.push_back(id ? static_cast<int64_t>(*id) : -1);
  }
  const auto n = static_cast<int64_t>(ids_.size());
  const int64_t window = config_.window;
  for (int64_t p = 0; p < n; ++p) {
    if (ids_[p] < 0) continue;
    const int64_t first = config_.symmetric ? std::max<int64_t>(0, p - window)
                                            : p + 1;
    const int64_t last = std::min(n - 1, p + window);
    for (int64_t q = first; q <= last; ++q) {
      if (q == p || ids_[q] < 0) continue;
      acc_.Add(static_cast<TokenId>(ids_[p]), static_cast<TokenId>(ids_[q]),
               weights_[static_cast<size_t>(q > p ? q - p : p - q)]);
    }
  }
}

CoocAccumulator CountCooccurrences(std::span<const Sentence> sentences,
                                   const Vocabulary& vocab,
                                   const CoocConfig& config) {
  CoocCounter counter(vocab, config);
  for (const Sentence& s : sentences) counter.AddSentence(s);
  return counter.Release();
}

CoocAccumulator CountCooccurrencesParallel(std::span<const Sentence> sentences,
                                           const Vocabulary& vocab,
                                           const CoocConfig& config,
                                           int workers) {
  if (workers < 1) throw UsageError("workers must be >= 1");
  config.Validate();
  if (vocab.empty()) throw DataError("co-occurrence counting needs a vocabulary");
  if (workers == 1 || sentences.size() < 2) {
    return CountCooccurrences(sentences, vocab, config);
  }
  const size_t parts = std::min<size_t>(workers, sentences.size());
  std::vector<CoocAccumulator> partial(parts);
  std::vector<std::thread> threads;
  for (size_t w = 0; w < parts; ++w) {
    const size_t begin = sentences.size() * w / parts;
    const size_t end = sentences.size() * (w + 1) / parts;
    threads.emplace_back([&, w, begin, end] {
      partial[w] =
          CountCooccurrences(sentences.subspan(begin, end - begin), vocab, config);
    });
  }
  for (auto& t : threads) t.join();
  CoocAccumulator merged = std::move(partial[0]);
  for (size_t w = 1; w < parts; ++w) merged.Merge(partial[w]);
  return merged;
}

}  // namespace swivel
