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

#include "swivel/matrix.h"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "swivel/binary_io.h"
#include "swivel/errors.h"

namespace swivel {

ShardPlan::ShardPlan(uint32_t m_raw, uint32_t n_raw, uint32_t k)
    : k_(k), m_raw_(m_raw), n_raw_(n_raw) {
  if (k < 1) throw UsageError("shard size k must be >= 1");
  if (k > m_raw || k > n_raw) {
    throw UsageError(fmt::format(
        "shard size k={} exceeds the matrix dimensions {}x{}", k, m_raw, n_raw));
  }
  row_blocks_ = (m_raw + k - 1) / k;
  col_blocks_ = (n_raw + k - 1) / k;
}

ShardCoordinate ShardPlan::Locate(uint64_t i, uint64_t j) const {
  if (i >= m() || j >= n()) {
    throw UsageError(fmt::format("cell ({}, {}) outside the {}x{} matrix", i,
                                 j, m(), n()));
  }
  return {static_cast<uint32_t>(i % row_blocks_),
          static_cast<uint32_t>(j % col_blocks_),
          static_cast<uint32_t>(i / row_blocks_),
          static_cast<uint32_t>(j / col_blocks_)};
}

double CoocMatrix::Get(uint64_t i, uint64_t j) const {
  if (i >= rows() || j >= cols()) return 0.0;
  auto columns = RowColumns(i);
  auto it = std::lower_bound(columns.begin(), columns.end(), j);
  if (it == columns.end() || *it != j) return 0.0;
  return RowValues(i)[static_cast<size_t>(it - columns.begin())];
}

struct MatrixBuilder {
  static CoocMatrix Build(const CoocAccumulator& acc, const ShardPlan& plan) {
    CoocMatrix matrix;
    const auto cells = acc.SortedCells();
    matrix.row_start_.assign(plan.m() + 1, 0);
    matrix.col_index_.reserve(cells.size());
    matrix.values_.reserve(cells.size());
    matrix.row_marginals_.assign(plan.m(), 0.0);
    matrix.col_marginals_.assign(plan.n(), 0.0);
    for (const auto& c : cells) {
      if (c.row >= plan.m_raw() || c.col >= plan.n_raw()) {
        throw DataError(fmt::format(
            "cell ({}, {}) outside the {}x{} vocabulary", c.row, c.col,
            plan.m_raw(), plan.n_raw()));
      }
      ++matrix.row_start_[c.row + 1];
      matrix.col_index_.push_back(c.col);
      matrix.values_.push_back(c.count);
      matrix.row_marginals_[c.row] += c.count;
      matrix.col_marginals_[c.col] += c.count;
      matrix.total_ += c.count;
    }
    for (size_t i = 1; i < matrix.row_start_.size(); ++i) {
      matrix.row_start_[i] += matrix.row_start_[i - 1];
    }
    return matrix;
  }
};

FinalizedMatrix FinalizeMatrix(const CoocAccumulator& acc, uint32_t m_raw,
                               uint32_t n_raw, uint32_t k) {
  ShardPlan plan(m_raw, n_raw, k);
  return {MatrixBuilder::Build(acc, plan), plan};
}

namespace {

Shard EmptyShard(const CoocMatrix& matrix, const ShardPlan& plan,
                 uint32_t row_block, uint32_t col_block) {
  Shard shard;
  shard.k = plan.k();
  shard.row_block = row_block;
  shard.col_block = col_block;
  shard.row_blocks = plan.row_blocks();
  shard.col_blocks = plan.col_blocks();
  shard.row_marginals.resize(plan.k());
  shard.col_marginals.resize(plan.k());
  for (uint32_t t = 0; t < plan.k(); ++t) {
    shard.row_marginals[t] = matrix.row_marginals()[plan.GlobalRow(row_block, t)];
    shard.col_marginals[t] = matrix.col_marginals()[plan.GlobalCol(col_block, t)];
  }
  shard.total = matrix.total();
  shard.counts.assign(size_t{plan.k()} * plan.k(), 0.0f);
  return shard;
}

void CheckBlocks(const ShardPlan& plan, uint32_t row_block,
                 uint32_t col_block) {
  if (row_block >= plan.row_blocks() || col_block >= plan.col_blocks()) {
    throw UsageError(fmt::format("shard ({}, {}) outside the {}x{} plan",
                                 row_block, col_block, plan.row_blocks(),
                                 plan.col_blocks()));
  }
}

}  // namespace

Shard ExtractShard(const CoocMatrix& matrix, const ShardPlan& plan,
                   uint32_t row_block, uint32_t col_block) {
  CheckBlocks(plan, row_block, col_block);
  Shard shard = EmptyShard(matrix, plan, row_block, col_block);
  const uint32_t C = plan.col_blocks();
  for (uint32_t t = 0; t < plan.k(); ++t) {
    const uint64_t i = plan.GlobalRow(row_block, t);
    auto columns = matrix.RowColumns(i);
    auto values = matrix.RowValues(i);
    for (size_t e = 0; e < columns.size(); ++e) {
      if (columns[e] % C != col_block) continue;
      shard.counts[size_t{t} * plan.k() + columns[e] / C] =
          static_cast<float>(values[e]);
    }
  }
  return shard;
}

void ForEachShard(const CoocMatrix& matrix, const ShardPlan& plan,
                  const std::function<void(const Shard&)>& visit) {
  struct Entry {
    uint32_t t;
    uint32_t u;
    float value;
  };
  const uint32_t C = plan.col_blocks();
  std::vector<std::vector<Entry>> buckets(C);
  for (uint32_t rb = 0; rb < plan.row_blocks(); ++rb) {
    for (auto& b : buckets) b.clear();
    for (uint32_t t = 0; t < plan.k(); ++t) {
      const uint64_t i = plan.GlobalRow(rb, t);
      auto columns = matrix.RowColumns(i);
      auto values = matrix.RowValues(i);
      for (size_t e = 0; e < columns.size(); ++e) {
        buckets[columns[e] % C].push_back(
            {t, columns[e] / C, static_cast<float>(values[e])});
      }
    }
    for (uint32_t cb = 0; cb < C; ++cb) {
      Shard shard = EmptyShard(matrix, plan, rb, cb);
      for (const Entry& e : buckets[cb]) {
        shard.counts[size_t{e.t} * plan.k() + e.u] = e.value;
      }
      visit(shard);
    }
  }
}

void WriteShard(std::ostream& out, const Shard& shard) {
  BinaryWriter writer(out);
  writer.PutBytes("SWVL", 4);
  writer.PutU32(kShardFormatVersion);
  writer.PutU32(shard.k);
  writer.PutU32(shard.row_block);
  writer.PutU32(shard.col_block);
  writer.PutU32(shard.row_blocks);
  writer.PutU32(shard.col_blocks);
  writer.PutF64s(shard.row_marginals);
  writer.PutF64s(shard.col_marginals);
  writer.PutF64(shard.total);
  writer.PutF32s(shard.counts);
  writer.PutU32(writer.crc());
}

void ReadShard(std::istream& in, Shard& shard) {
  BinaryReader reader(in, "shard");
  char magic[4];
  reader.GetBytes(magic, 4);
  if (std::memcmp(magic, "SWVL", 4) != 0) throw DataError("shard: bad magic");
  const uint32_t version = reader.GetU32();
  if (version != kShardFormatVersion) {
    throw DataError(fmt::format("shard: unsupported format version {}", version));
  }
  shard.k = reader.GetU32();
  shard.row_block = reader.GetU32();
  shard.col_block = reader.GetU32();
  shard.row_blocks = reader.GetU32();
  shard.col_blocks = reader.GetU32();
  if (shard.k == 0 || shard.k > (1u << 16) ||
      shard.row_block >= shard.row_blocks ||
      shard.col_block >= shard.col_blocks) {
    throw DataError("shard: inconsistent header");
  }
  shard.row_marginals.resize(shard.k);
  shard.col_marginals.resize(shard.k);
  shard.counts.resize(size_t{shard.k} * shard.k);
  reader.GetF64s(shard.row_marginals);
  reader.GetF64s(shard.col_marginals);
  shard.total = reader.GetF64();
  reader.GetF32s(shard.counts);
  const uint32_t expected = reader.crc();
  if (reader.GetU32() != expected) throw DataError("shard: checksum mismatch");
  auto valid = [](double v) { return std::isfinite(v) && v >= 0; };
  if (!valid(shard.total) ||
      !std::all_of(shard.row_marginals.begin(), shard.row_marginals.end(), valid) ||
      !std::all_of(shard.col_marginals.begin(), shard.col_marginals.end(), valid) ||
      !std::all_of(shard.counts.begin(), shard.counts.end(), valid)) {
    throw DataError("shard: negative or non-finite values");
  }
}

void SaveShard(const std::string& path, const Shard& shard) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  WriteShard(out, shard);
  if (!out) throw DataError("error writing " + path);
}

void LoadShard(const std::string& path, Shard& shard) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open shard " + path);
  ReadShard(in, shard);
}

std::string ShardFileName(uint32_t row_block, uint32_t col_block) {
  return fmt::format("shard-{:04}-{:04}.swvl", row_block, col_block);
}

void PlanManifest::Write(std::ostream& out) const {
  out << fmt::format(
      "m_raw = {}\nn_raw = {}\nm = {}\nn = {}\nk = {}\nR = {}\nC = {}\n"
      "total = {}\n",
      plan.m_raw(), plan.n_raw(), plan.m(), plan.n(), plan.k(),
      plan.row_blocks(), plan.col_blocks(), total);
}

PlanManifest PlanManifest::Read(std::istream& in) {
  std::map<std::string, std::string> fields;
  std::string line;
  while (std::getline(in, line)) {
    const size_t eq = line.find(" = ");
    if (line.empty() || line[0] == '#') continue;
    if (eq == std::string::npos) throw DataError("manifest: malformed line");
    fields[line.substr(0, eq)] = line.substr(eq + 3);
  }
  auto field = [&](const std::string& key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end()) throw DataError("manifest: missing " + key);
    return it->second;
  };
  auto integer = [&](const std::string& key) {
    uint64_t value = 0;
    const std::string& text = field(key);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() ||
        value > UINT32_MAX) {
      throw DataError("manifest: bad value for " + key);
    }
    return static_cast<uint32_t>(value);
  };
  PlanManifest manifest;
  manifest.plan = ShardPlan(integer("m_raw"), integer("n_raw"), integer("k"));
  if (integer("R") != manifest.plan.row_blocks() ||
      integer("C") != manifest.plan.col_blocks() ||
      integer("m") != manifest.plan.m() || integer("n") != manifest.plan.n()) {
    throw DataError("manifest: block counts disagree with m_raw, n_raw, k");
  }
  const std::string& total = field("total");
  auto [ptr, ec] = std::from_chars(total.data(), total.data() + total.size(),
                                   manifest.total);
  if (ec != std::errc() || ptr != total.data() + total.size()) {
    throw DataError("manifest: bad value for total");
  }
  return manifest;
}

void PlanManifest::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  Write(out);
}

PlanManifest PlanManifest::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest " + path);
  return Read(in);
}

}  // namespace swivel
