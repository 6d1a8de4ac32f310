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

#ifndef DEXFREQ_DEX_HPP_
#define DEXFREQ_DEX_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dexfreq/error.hpp"
#include "dexfreq/opcodes.hpp"

namespace dexfreq {

struct OpcodeHistogram {
  std::array<std::uint64_t, kOpcodeCount> counts{};
  std::uint64_t total = 0;
  std::string app_id;

  void add(std::uint8_t opcode, std::uint64_t n = 1) {
    counts[opcode] += n;
    total += n;
  }
  OpcodeHistogram& operator+=(const OpcodeHistogram& other);
  friend bool operator==(const OpcodeHistogram&,
                         const OpcodeHistogram&) = default;
};

enum class PayloadKind : std::uint8_t {
  kNone,
  kPackedSwitch,
  kSparseSwitch,
  kFillArrayData,
};

struct DecodedInstruction {
  std::uint8_t opcode;
  std::size_t width;  // in 16-bit code units
  PayloadKind payload;

  friend bool operator==(const DecodedInstruction&,
                         const DecodedInstruction&) = default;
};

// Decodes the instruction starting at `offset`. Payload pseudo-instructions
// (ident 0x0100, 0x0200, 0x0300) report opcode 0x00 with the payload kind and
// the full width of their data table.
// Throws Error{kTruncatedStream} if the width runs past the end.
DecodedInstruction decode_instruction(std::span<const std::uint16_t> units,
                                      std::size_t offset);

// Counts opcodes over one instruction stream. Payloads contribute nothing.
void count_instructions(std::span<const std::uint16_t> units,
                        OpcodeHistogram& histogram);

// Walks class_defs -> class_data -> code_item and histograms every distinct
// code item. Supported versions are 035 through 039.
OpcodeHistogram parse_dex(std::span<const std::uint8_t> bytes);

}  // namespace dexfreq

#endif  // DEXFREQ_DEX_HPP_
