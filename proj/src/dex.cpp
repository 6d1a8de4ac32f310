// Copyright (C) 2026 The dexfreq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dexfreq/dex.hpp"

#include <cstring>
#include <unordered_set>

namespace dexfreq {

OpcodeHistogram& OpcodeHistogram::operator+=(const OpcodeHistogram& other) {
  for (std::size_t i = 0; i < kOpcodeCount; ++i) counts[i] += other.counts[i];
  total += other.total;
  return *this;
}

namespace {

constexpr std::uint16_t kPackedSwitchIdent = 0x0100;
constexpr std::uint16_t kSparseSwitchIdent = 0x0200;
constexpr std::uint16_t kFillArrayDataIdent = 0x0300;

constexpr std::size_t kHeaderSize = 0x70;
constexpr std::size_t kClassDefSize = 32;
constexpr std::size_t kCodeItemHeaderSize = 16;

[[noreturn]] void truncated_stream(std::size_t offset, std::uint64_t width,
                                   std::size_t remaining) {
  throw Error(ErrorCode::kTruncatedStream,
              "instruction of width " + std::to_string(width) +
                  " units exceeds remaining " + std::to_string(remaining),
              offset);
}

// Little-endian reader over the raw file with bounds-checked access.
class DexReader {
 public:
  explicit DexReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t size() const { return bytes_.size(); }

  std::uint32_t u32(std::size_t at) const {
    require(at, 4, ErrorCode::kTruncatedFile);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[at + i];
    return v;
  }

  std::uint16_t u16(std::size_t at) const {
    require(at, 2, ErrorCode::kTruncatedFile);
    return static_cast<std::uint16_t>(bytes_[at] | (bytes_[at + 1] << 8));
  }

  std::uint32_t uleb128(std::size_t& cursor) const {
    std::uint32_t result = 0;
    for (int shift = 0; shift < 35; shift += 7) {
      if (cursor >= bytes_.size())
        throw Error(ErrorCode::kTruncatedFile, "uleb128 runs past end of file",
                    cursor);
      const std::uint8_t b = bytes_[cursor++];
      result |= static_cast<std::uint32_t>(b & 0x7f) << shift;
      if ((b & 0x80) == 0) return result;
    }
    throw Error(ErrorCode::kMalformedOffset, "uleb128 longer than 5 bytes",
                cursor);
  }

  void require(std::size_t at, std::uint64_t len, ErrorCode code) const {
    if (at > bytes_.size() || len > bytes_.size() - at)
      throw Error(code,
                  "range of " + std::to_string(len) +
                      " bytes outside file of size " +
                      std::to_string(bytes_.size()),
                  at);
  }

  std::vector<std::uint16_t> code_units(std::size_t at,
                                        std::size_t count) const {
    std::vector<std::uint16_t> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = u16(at + 2 * i);
    return out;
  }

 private:
  std::span<const std::uint8_t> bytes_;
};

void check_magic(std::span<const std::uint8_t> bytes) {
  static constexpr char kPrefix[] = {'d', 'e', 'x', '\n', '0', '3'};
  if (bytes.size() < 8 ||
      std::memcmp(bytes.data(), kPrefix, sizeof kPrefix) != 0 ||
      bytes[6] < '5' || bytes[6] > '9' || bytes[7] != 0) {
    throw Error(ErrorCode::kBadMagic,
                "expected dex\\n035\\0 through dex\\n039\\0", 0);
  }
}

}  // namespace

DecodedInstruction decode_instruction(std::span<const std::uint16_t> units,
                                      std::size_t offset) {
  if (offset >= units.size())
    throw Error(ErrorCode::kTruncatedStream, "offset past end of stream",
                offset);
  const std::size_t remaining = units.size() - offset;
  const std::uint16_t first = units[offset];
  const auto opcode = static_cast<std::uint8_t>(first & 0xff);

  PayloadKind payload = PayloadKind::kNone;
  std::uint64_t width = 0;
  switch (first) {
    case kPackedSwitchIdent:
      if (remaining < 2) truncated_stream(offset, 2, remaining);
      payload = PayloadKind::kPackedSwitch;
      width = std::uint64_t{units[offset + 1]} * 2 + 4;
      break;
    case kSparseSwitchIdent:
      if (remaining < 2) truncated_stream(offset, 2, remaining);
      payload = PayloadKind::kSparseSwitch;
      width = std::uint64_t{units[offset + 1]} * 4 + 2;
      break;
    case kFillArrayDataIdent: {
      if (remaining < 4) truncated_stream(offset, 4, remaining);
      payload = PayloadKind::kFillArrayData;
      const std::uint64_t element_width = units[offset + 1];
      const std::uint64_t size =
          units[offset + 2] | (std::uint64_t{units[offset + 3]} << 16);
      width = 4 + (size * element_width + 1) / 2;
      break;
    }
    default:
      width = opcode_table()[opcode].width;
      break;
  }
  if (width > remaining) truncated_stream(offset, width, remaining);
  return {opcode, static_cast<std::size_t>(width), payload};
}

void count_instructions(std::span<const std::uint16_t> units,
                        OpcodeHistogram& histogram) {
  std::size_t pc = 0;
  while (pc < units.size()) {
    const DecodedInstruction insn = decode_instruction(units, pc);
    if (insn.payload == PayloadKind::kNone) histogram.add(insn.opcode);
    pc += insn.width;
  }
}

OpcodeHistogram parse_dex(std::span<const std::uint8_t> bytes) {
  check_magic(bytes);
  const DexReader in(bytes);
  if (bytes.size() < kHeaderSize)
    throw Error(ErrorCode::kTruncatedFile,
                "file shorter than the 0x70-byte header", bytes.size());
  const std::uint32_t declared_size = in.u32(32);
  if (declared_size > bytes.size())
    throw Error(ErrorCode::kTruncatedFile,
                "header declares " + std::to_string(declared_size) +
                    " bytes, file has " + std::to_string(bytes.size()),
                32);

  const std::uint32_t class_defs_size = in.u32(96);
  const std::uint32_t class_defs_off = in.u32(100);
  in.require(class_defs_off, std::uint64_t{class_defs_size} * kClassDefSize,
             ErrorCode::kMalformedOffset);

  OpcodeHistogram histogram;
  std::unordered_set<std::uint32_t> seen_code;
  for (std::uint32_t c = 0; c < class_defs_size; ++c) {
    const std::size_t def = class_defs_off + std::size_t{c} * kClassDefSize;
    const std::uint32_t class_data_off = in.u32(def + 24);
    if (class_data_off == 0) continue;
    in.require(class_data_off, 1, ErrorCode::kMalformedOffset);

    std::size_t cursor = class_data_off;
    const std::uint32_t static_fields = in.uleb128(cursor);
    const std::uint32_t instance_fields = in.uleb128(cursor);
    const std::uint32_t direct_methods = in.uleb128(cursor);
    const std::uint32_t virtual_methods = in.uleb128(cursor);
    const std::uint64_t fields =
        std::uint64_t{static_fields} + instance_fields;
    for (std::uint64_t f = 0; f < fields; ++f) {
      in.uleb128(cursor);  // field_idx_diff
      in.uleb128(cursor);  // access_flags
    }
    const std::uint64_t methods =
        std::uint64_t{direct_methods} + virtual_methods;
    for (std::uint64_t m = 0; m < methods; ++m) {
      in.uleb128(cursor);  // method_idx_diff
      in.uleb128(cursor);  // access_flags
      const std::size_t code_field = cursor;
      const std::uint32_t code_off = in.uleb128(cursor);
      if (code_off == 0 || !seen_code.insert(code_off).second) continue;
      if (code_off > bytes.size() ||
          bytes.size() - code_off < kCodeItemHeaderSize)
        throw Error(ErrorCode::kMalformedOffset,
                    "code_off " + std::to_string(code_off) +
                        " outside file",
                    code_field);
      const std::uint32_t insns_size = in.u32(code_off + 12);
      const std::size_t insns_at = code_off + kCodeItemHeaderSize;
      in.require(insns_at, std::uint64_t{insns_size} * 2,
                 ErrorCode::kMalformedOffset);
      const auto units = in.code_units(insns_at, insns_size);
      try {
        count_instructions(units, histogram);
      } catch (const Error& e) {
        // Re-anchor the unit offset to a file offset.
        throw Error(e.code(), "in code item at " + std::to_string(code_off),
                    insns_at + 2 * e.offset().value_or(0));
      }
    }
  }
  return histogram;
}

}  // namespace dexfreq
