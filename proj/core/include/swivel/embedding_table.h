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

// Token -> vector tables: exporting trained embeddings and loading them for
// evaluation.

#ifndef SWIVEL_EMBEDDING_TABLE_H_
#define SWIVEL_EMBEDDING_TABLE_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "swivel/corpus.h"
#include "swivel/trainer.h"

namespace swivel {

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  // `values` holds tokens.size() * dim floats, row-major. When a token occurs
  // twice, lookups resolve to its first (lowest) id.
  EmbeddingTable(std::vector<std::string> tokens, uint32_t dim,
                 std::vector<float> values);

  size_t size() const { return tokens_.size(); }
  uint32_t dim() const { return dim_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(size_t id) const { return tokens_[id]; }
  std::span<const float> vector(size_t id) const {
    return {values_.data() + id * dim_, dim_};
  }
  const std::vector<float>& values() const { return values_; }
  std::optional<uint32_t> Find(const std::string& token) const;

  // Header line `count dim`, then `token v1 ... vd` with 6 significant
  // digits.
  void WriteText(std::ostream& out) const;
  // Tokens are lowercased at load.
  static EmbeddingTable ReadText(std::istream& in);
  void SaveText(const std::string& path) const;
  static EmbeddingTable LoadText(const std::string& path);

  // Raw little-endian f32, count * dim values, no header. The token list
  // travels separately as a vocabulary file.
  void WriteBinary(std::ostream& out) const;
  static EmbeddingTable ReadBinary(std::istream& in, const Vocabulary& vocab);

 private:
  std::vector<std::string> tokens_;
  uint32_t dim_ = 0;
  std::vector<float> values_;
  std::unordered_map<std::string, uint32_t> index_;
};

enum class CombineMode { kWord, kContext, kSum };

std::string_view CombineModeName(CombineMode mode);
std::optional<CombineMode> ParseCombineMode(std::string_view name);

// Builds the exported table over the unpadded vocabulary: W rows (word), W~
// rows (context), or W + W~ (sum). kSum requires identical row and column
// vocabularies and throws UsageError otherwise.
EmbeddingTable CombineEmbeddings(const EmbeddingStore& store,
                                 const Vocabulary& row_vocab,
                                 const Vocabulary& col_vocab, CombineMode mode);

}  // namespace swivel

#endif  // SWIVEL_EMBEDDING_TABLE_H_
