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

#ifndef DEXFREQ_SMALI_HPP_
#define DEXFREQ_SMALI_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "dexfreq/dex.hpp"

namespace dexfreq {

struct SmaliParseResult {
  OpcodeHistogram histogram;
  // First tokens that are not Dalvik mnemonics, with occurrence counts.
  std::map<std::string, std::uint64_t, std::less<>> unknown_tokens;
  std::uint64_t unknown_lines = 0;
};

// Line-based: comments (#), directives (.xxx), labels (:xxx) and blank lines
// are skipped; the first token of any other line is looked up as a mnemonic.
// Operands are ignored.
SmaliParseResult parse_smali(std::string_view text);

// Emits one bare mnemonic line per counted opcode, in opcode order.
std::string render_smali(const OpcodeHistogram& histogram);

}  // namespace dexfreq

#endif  // DEXFREQ_SMALI_HPP_
