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

#ifndef DEXFREQ_OPCODES_HPP_
#define DEXFREQ_OPCODES_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace dexfreq {

inline constexpr std::size_t kOpcodeCount = 256;

// Dalvik instruction formats. The digit prefix is the width in 16-bit units.
enum class InsnFormat : std::uint8_t {
  k10x, k12x, k11n, k11x, k10t,
  k20t, k22x, k21t, k21s, k21h, k21c, k23x, k22b, k22t, k22s, k22c,
  k30t, k32x, k31i, k31t, k31c, k35c, k3rc,
  k45cc, k4rcc,
  k51l,
};

std::string_view format_name(InsnFormat format);
std::size_t format_width(InsnFormat format);

struct OpcodeInfo {
  std::string_view mnemonic;
  InsnFormat format;
  std::uint8_t width;  // in 16-bit code units
  bool unused;
};

class OpcodeTable {
 public:
  const OpcodeInfo& operator[](std::uint8_t opcode) const {
    return entries_[opcode];
  }
  std::optional<std::uint8_t> lookup(std::string_view mnemonic) const;
  std::size_t unused_count() const;

  const std::array<OpcodeInfo, kOpcodeCount>& entries() const {
    return entries_;
  }

 private:
  friend const OpcodeTable& opcode_table();
  OpcodeTable();
  std::array<OpcodeInfo, kOpcodeCount> entries_;
};

// The static table, built once.
const OpcodeTable& opcode_table();

// Column name used in feature-matrix files, e.g. "op_1a".
std::string opcode_column_name(std::uint8_t opcode);

}  // namespace dexfreq

#endif  // DEXFREQ_OPCODES_HPP_
