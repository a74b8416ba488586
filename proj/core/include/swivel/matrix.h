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

// The full co-occurrence matrix with its marginals, and its partition into
// k x k shards. Row block b holds rows {b, b + R, b + 2R, ...}, so with
// frequency-sorted ids every block mixes common and rare features.

#ifndef SWIVEL_MATRIX_H_
#define SWIVEL_MATRIX_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "swivel/corpus.h"

namespace swivel {

struct ShardCoordinate {
  uint32_t row_block = 0;
  uint32_t col_block = 0;
  uint32_t t = 0;  // local row
  uint32_t u = 0;  // local column
  friend bool operator==(const ShardCoordinate&,
                         const ShardCoordinate&) = default;
};

// Blocking of an m_raw x n_raw matrix padded up to multiples of k.
class ShardPlan {
 public:
  ShardPlan() = default;
  // Throws UsageError unless 1 <= k <= min(m_raw, n_raw).
  ShardPlan(uint32_t m_raw, uint32_t n_raw, uint32_t k);

  uint32_t k() const { return k_; }
  uint32_t m_raw() const { return m_raw_; }
  uint32_t n_raw() const { return n_raw_; }
  uint32_t row_blocks() const { return row_blocks_; }
  uint32_t col_blocks() const { return col_blocks_; }
  uint64_t m() const { return uint64_t{row_blocks_} * k_; }
  uint64_t n() const { return uint64_t{col_blocks_} * k_; }
  size_t num_shards() const { return size_t{row_blocks_} * col_blocks_; }

  // Throws UsageError if (i, j) lies outside the padded matrix.
  ShardCoordinate Locate(uint64_t i, uint64_t j) const;
  uint64_t GlobalRow(uint32_t row_block, uint32_t t) const {
    return row_block + uint64_t{t} * row_blocks_;
  }
  uint64_t GlobalCol(uint32_t col_block, uint32_t u) const {
    return col_block + uint64_t{u} * col_blocks_;
  }
  size_t ShardIndex(uint32_t row_block, uint32_t col_block) const {
    return size_t{row_block} * col_blocks_ + col_block;
  }

  friend bool operator==(const ShardPlan&, const ShardPlan&) = default;

 private:
  uint32_t k_ = 0;
  uint32_t m_raw_ = 0;
  uint32_t n_raw_ = 0;
  uint32_t row_blocks_ = 0;
  uint32_t col_blocks_ = 0;
};

// Immutable sparse matrix in compressed-row form. Rows and columns beyond
// m_raw / n_raw are padding with zero marginals.
class CoocMatrix {
 public:
  uint64_t rows() const { return row_marginals_.size(); }
  uint64_t cols() const { return col_marginals_.size(); }
  size_t nonzeros() const { return values_.size(); }

  double Get(uint64_t i, uint64_t j) const;
  std::span<const uint32_t> RowColumns(uint64_t i) const {
    return {col_index_.data() + row_start_[i],
            col_index_.data() + row_start_[i + 1]};
  }
  std::span<const double> RowValues(uint64_t i) const {
    return {values_.data() + row_start_[i], values_.data() + row_start_[i + 1]};
  }

  const std::vector<double>& row_marginals() const { return row_marginals_; }
  const std::vector<double>& col_marginals() const { return col_marginals_; }
  // |D|, the sum of all cells.
  double total() const { return total_; }

 private:
  friend struct MatrixBuilder;

  std::vector<uint64_t> row_start_;
  std::vector<uint32_t> col_index_;
  std::vector<double> values_;
  std::vector<double> row_marginals_;
  std::vector<double> col_marginals_;
  double total_ = 0;
};

struct FinalizedMatrix {
  CoocMatrix matrix;
  ShardPlan plan;
};

// Pads to multiples of k and computes marginals. Throws UsageError when k is
// out of range and DataError when a cell id is >= m_raw / n_raw.
FinalizedMatrix FinalizeMatrix(const CoocAccumulator& acc, uint32_t m_raw,
                               uint32_t n_raw, uint32_t k);

// One k x k training block: local cell (t, u) is global cell
// (row_block + t * R, col_block + u * C). Counts are dense; zeros are
// unobserved pairs.
struct Shard {
  uint32_t k = 0;
  uint32_t row_block = 0;
  uint32_t col_block = 0;
  uint32_t row_blocks = 0;
  uint32_t col_blocks = 0;
  std::vector<double> row_marginals;  // size k
  std::vector<double> col_marginals;  // size k
  double total = 0;
  std::vector<float> counts;  // k * k, row-major in local order

  float count(uint32_t t, uint32_t u) const {
    return counts[size_t{t} * k + u];
  }
  friend bool operator==(const Shard&, const Shard&) = default;
};

Shard ExtractShard(const CoocMatrix& matrix, const ShardPlan& plan,
                   uint32_t row_block, uint32_t col_block);

// Visits every shard in (row_block, col_block) order, scanning each row block
// of the sparse matrix once.
void ForEachShard(const CoocMatrix& matrix, const ShardPlan& plan,
                  const std::function<void(const Shard&)>& visit);

// Binary shard file, little-endian:
//   "SWVL", u32 version, u32 k, u32 row_block, u32 col_block, u32 R, u32 C,
//   f64[k] row marginals, f64[k] column marginals, f64 total,
//   f32[k*k] counts (row-major local order), u32 CRC-32 of all prior bytes.
inline constexpr uint32_t kShardFormatVersion = 1;

void WriteShard(std::ostream& out, const Shard& shard);
// Reads into `shard`, reusing its buffers.
void ReadShard(std::istream& in, Shard& shard);
void SaveShard(const std::string& path, const Shard& shard);
void LoadShard(const std::string& path, Shard& shard);

// "shard-{row_block:04}-{col_block:04}.swvl"
std::string ShardFileName(uint32_t row_block, uint32_t col_block);

// Text manifest written next to the shard files.
struct PlanManifest {
  ShardPlan plan;
  double total = 0;

  void Write(std::ostream& out) const;
  static PlanManifest Read(std::istream& in);
  void Save(const std::string& path) const;
  static PlanManifest Load(const std::string& path);
};

inline constexpr const char* kManifestFileName = "plan.txt";

}  // namespace swivel

#endif  // SWIVEL_MATRIX_H_
