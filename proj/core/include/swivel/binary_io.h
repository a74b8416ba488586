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

// Little-endian binary encoding helpers shared by the shard and checkpoint
// formats. Values are encoded byte by byte so the files are identical on any
// host.

#ifndef SWIVEL_BINARY_IO_H_
#define SWIVEL_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "swivel/errors.h"

namespace swivel {

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void PutBytes(const void* data, size_t size);
  void PutU32(uint32_t value);
  void PutU64(uint64_t value);
  void PutF32(float value) { PutU32(std::bit_cast<uint32_t>(value)); }
  void PutF64(double value) { PutU64(std::bit_cast<uint64_t>(value)); }
  void PutString(const std::string& value);
  void PutF32s(std::span<const float> values);
  void PutF64s(std::span<const double> values);

  // CRC-32 over every byte written so far.
  uint32_t crc() const { return crc_; }

 private:
  std::ostream& out_;
  uint32_t crc_ = 0;
};

// Reads values written by BinaryWriter. Every accessor throws DataError on a
// short read, naming `what` in the message.
class BinaryReader {
 public:
  BinaryReader(std::istream& in, std::string what)
      : in_(in), what_(std::move(what)) {}

  void GetBytes(void* data, size_t size);
  uint32_t GetU32();
  uint64_t GetU64();
  float GetF32() { return std::bit_cast<float>(GetU32()); }
  double GetF64() { return std::bit_cast<double>(GetU64()); }
  std::string GetString(size_t max_size = 1 << 20);
  void GetF32s(std::span<float> values);
  void GetF64s(std::span<double> values);

  uint32_t crc() const { return crc_; }

 private:
  std::istream& in_;
  std::string what_;
  uint32_t crc_ = 0;
};

}  // namespace swivel

#endif  // SWIVEL_BINARY_IO_H_
