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

#include "swivel/binary_io.h"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstring>

namespace swivel {
namespace {

constexpr size_t kChunk = 1 << 14;

uint32_t UpdateCrc(uint32_t crc, const void* data, size_t size) {
  const auto* bytes = static_cast<const Bytef*>(data);
  while (size > 0) {
    const auto n = static_cast<uInt>(std::min<size_t>(size, 1u << 30));
    crc = static_cast<uint32_t>(crc32(crc, bytes, n));
    bytes += n;
    size -= n;
  }
  return crc;
}

template <typename Word>
void EncodeLittleEndian(Word value, unsigned char* out) {
  for (size_t b = 0; b < sizeof(Word); ++b) {
    out[b] = static_cast<unsigned char>(value >> (8 * b));
  }
}

template <typename Word>
Word DecodeLittleEndian(const unsigned char* in) {
  Word value = 0;
  for (size_t b = 0; b < sizeof(Word); ++b) {
    value |= static_cast<Word>(in[b]) << (8 * b);
  }
  return value;
}

template <typename Word, typename Value>
void PutArray(BinaryWriter& writer, std::span<const Value> values) {
  std::array<unsigned char, kChunk> buffer;
  constexpr size_t kPerChunk = kChunk / sizeof(Word);
  for (size_t start = 0; start < values.size(); start += kPerChunk) {
    const size_t n = std::min(kPerChunk, values.size() - start);
    for (size_t i = 0; i < n; ++i) {
      EncodeLittleEndian(std::bit_cast<Word>(values[start + i]),
                         buffer.data() + i * sizeof(Word));
    }
    writer.PutBytes(buffer.data(), n * sizeof(Word));
  }
}

template <typename Word, typename Value>
void GetArray(BinaryReader& reader, std::span<Value> values) {
  std::array<unsigned char, kChunk> buffer;
  constexpr size_t kPerChunk = kChunk / sizeof(Word);
  for (size_t start = 0; start < values.size(); start += kPerChunk) {
    const size_t n = std::min(kPerChunk, values.size() - start);
    reader.GetBytes(buffer.data(), n * sizeof(Word));
    for (size_t i = 0; i < n; ++i) {
      values[start + i] = std::bit_cast<Value>(
          DecodeLittleEndian<Word>(buffer.data() + i * sizeof(Word)));
    }
  }
}

}  // namespace

void BinaryWriter::PutBytes(const void* data, size_t size) {
  out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  crc_ = UpdateCrc(crc_, data, size);
}

void BinaryWriter::PutU32(uint32_t value) {
  unsigned char bytes[4];
  EncodeLittleEndian(value, bytes);
  PutBytes(bytes, sizeof(bytes));
}

void BinaryWriter::PutU64(uint64_t value) {
  unsigned char bytes[8];
  EncodeLittleEndian(value, bytes);
  PutBytes(bytes, sizeof(bytes));
}

void BinaryWriter::PutString(const std::string& value) {
  PutU32(static_cast<uint32_t>(value.size()));
  PutBytes(value.data(), value.size());
}

void BinaryWriter::PutF32s(std::span<const float> values) {
  PutArray<uint32_t>(*this, values);
}

void BinaryWriter::PutF64s(std::span<const double> values) {
  PutArray<uint64_t>(*this, values);
}

void BinaryReader::GetBytes(void* data, size_t size) {
  in_.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
  if (static_cast<size_t>(in_.gcount()) != size) {
    throw DataError(what_ + ": truncated input");
  }
  crc_ = UpdateCrc(crc_, data, size);
}

uint32_t BinaryReader::GetU32() {
  unsigned char bytes[4];
  GetBytes(bytes, sizeof(bytes));
  return DecodeLittleEndian<uint32_t>(bytes);
}

uint64_t BinaryReader::GetU64() {
  unsigned char bytes[8];
  GetBytes(bytes, sizeof(bytes));
  return DecodeLittleEndian<uint64_t>(bytes);
}

std::string BinaryReader::GetString(size_t max_size) {
  const uint32_t size = GetU32();
  if (size > max_size) throw DataError(what_ + ": string field too long");
  std::string value(size, '\0');
  GetBytes(value.data(), size);
  return value;
}

void BinaryReader::GetF32s(std::span<float> values) {
  GetArray<uint32_t>(*this, values);
}

void BinaryReader::GetF64s(std::span<double> values) {
  GetArray<uint64_t>(*this, values);
}

}  // namespace swivel
