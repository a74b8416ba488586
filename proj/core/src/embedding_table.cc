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

#include "swivel/embedding_table.h"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "swivel/binary_io.h"
#include "swivel/errors.h"

namespace swivel {
namespace {

std::string Lowercase(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::vector<std::string> tokens, uint32_t dim,
                               std::vector<float> values)
    : tokens_(std::move(tokens)), dim_(dim), values_(std::move(values)) {
  if (values_.size() != tokens_.size() * dim_) {
    throw DataError(fmt::format("embedding table: {} values for {} x {}",
                                values_.size(), tokens_.size(), dim_));
  }
  index_.reserve(tokens_.size());
  for (size_t id = 0; id < tokens_.size(); ++id) {
    index_.emplace(tokens_[id], static_cast<uint32_t>(id));
  }
}

std::optional<uint32_t> EmbeddingTable::Find(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingTable::WriteText(std::ostream& out) const {
  fmt::memory_buffer buffer;
  fmt::format_to(std::back_inserter(buffer), "{} {}\n", size(), dim_);
  for (size_t id = 0; id < size(); ++id) {
    fmt::format_to(std::back_inserter(buffer), "{}", tokens_[id]);
    for (float v : vector(id)) {
      fmt::format_to(std::back_inserter(buffer), " {:.6g}", v);
    }
    buffer.push_back('\n');
    if (buffer.size() > (1 << 16)) {
      out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
      buffer.clear();
    }
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
}

EmbeddingTable EmbeddingTable::ReadText(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("embeddings: empty file");
  size_t count = 0;
  uint32_t dim = 0;
  {
    std::istringstream header(line);
    if (!(header >> count >> dim) || dim == 0) {
      throw DataError("embeddings: expected header 'count dim'");
    }
  }
  std::vector<std::string> tokens;
  std::vector<float> values;
  tokens.reserve(count);
  values.reserve(count * dim);
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::string_view rest(line);
    size_t space = rest.find(' ');
    if (space == std::string_view::npos) {
      throw DataError(fmt::format("embeddings line {}: no values", line_no));
    }
    tokens.push_back(Lowercase(std::string(rest.substr(0, space))));
    for (uint32_t c = 0; c < dim; ++c) {
      rest.remove_prefix(space + 1);
      space = rest.find(' ');
      const std::string_view field = rest.substr(0, space);
      float value = 0;
      auto [ptr, ec] =
          std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw DataError(
            fmt::format("embeddings line {}: bad value '{}'", line_no, field));
      }
      values.push_back(value);
      if (space == std::string_view::npos && c + 1 < dim) {
        throw DataError(fmt::format("embeddings line {}: expected {} values",
                                    line_no, dim));
      }
    }
    if (space != std::string_view::npos) {
      throw DataError(
          fmt::format("embeddings line {}: more than {} values", line_no, dim));
    }
  }
  if (tokens.size() != count) {
    throw DataError(fmt::format("embeddings: header promises {} rows, found {}",
                                count, tokens.size()));
  }
  return EmbeddingTable(std::move(tokens), dim, std::move(values));
}

void EmbeddingTable::SaveText(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  WriteText(out);
  if (!out) throw DataError("error writing " + path);
}

EmbeddingTable EmbeddingTable::LoadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embeddings " + path);
  return ReadText(in);
}

void EmbeddingTable::WriteBinary(std::ostream& out) const {
  BinaryWriter writer(out);
  writer.PutF32s(values_);
}

EmbeddingTable EmbeddingTable::ReadBinary(std::istream& in,
                                          const Vocabulary& vocab) {
  if (vocab.empty()) throw DataError("binary embeddings need a vocabulary");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  const size_t floats = bytes.size() / sizeof(float);
  if (bytes.size() % sizeof(float) != 0 || floats % vocab.size() != 0 ||
      floats == 0) {
    throw DataError("binary embeddings: size is not a multiple of the vocabulary");
  }
  std::vector<float> values(floats);
  std::istringstream buffer(std::string(bytes.begin(), bytes.end()));
  BinaryReader reader(buffer, "binary embeddings");
  reader.GetF32s(values);
  std::vector<std::string> tokens;
  tokens.reserve(vocab.size());
  for (const auto& e : vocab.entries()) tokens.push_back(Lowercase(e.token));
  return EmbeddingTable(std::move(tokens),
                        static_cast<uint32_t>(floats / vocab.size()),
                        std::move(values));
}

std::string_view CombineModeName(CombineMode mode) {
  switch (mode) {
    case CombineMode::kWord:
      return "word";
    case CombineMode::kContext:
      return "context";
    case CombineMode::kSum:
      return "sum";
  }
  return "unknown";
}

std::optional<CombineMode> ParseCombineMode(std::string_view name) {
  for (auto m : {CombineMode::kWord, CombineMode::kContext, CombineMode::kSum}) {
    if (CombineModeName(m) == name) return m;
  }
  return std::nullopt;
}

EmbeddingTable CombineEmbeddings(const EmbeddingStore& store,
                                 const Vocabulary& row_vocab,
                                 const Vocabulary& col_vocab,
                                 CombineMode mode) {
  if (row_vocab.size() > store.rows() || col_vocab.size() > store.cols()) {
    throw DataError("vocabulary is larger than the embedding store");
  }
  if (mode == CombineMode::kSum && !(row_vocab == col_vocab)) {
    throw UsageError(
        "combine=sum needs identical row and column vocabularies");
  }
  const Vocabulary& vocab = mode == CombineMode::kContext ? col_vocab : row_vocab;
  const uint32_t dim = store.dim();
  std::vector<std::string> tokens;
  std::vector<float> values;
  tokens.reserve(vocab.size());
  values.reserve(vocab.size() * dim);
  for (TokenId id = 0; id < vocab.size(); ++id) {
    tokens.push_back(vocab.token(id));
    for (uint32_t c = 0; c < dim; ++c) {
      switch (mode) {
        case CombineMode::kWord:
          values.push_back(store.row_vector(id)[c]);
          break;
        case CombineMode::kContext:
          values.push_back(store.col_vector(id)[c]);
          break;
        case CombineMode::kSum:
          values.push_back(store.row_vector(id)[c] + store.col_vector(id)[c]);
          break;
      }
    }
  }
  return EmbeddingTable(std::move(tokens), dim, std::move(values));
}

}  // namespace swivel
