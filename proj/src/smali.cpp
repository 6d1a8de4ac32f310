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

#include "dexfreq/smali.hpp"

namespace dexfreq {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view first_token(std::string_view line) {
  std::size_t begin = 0;
  while (begin < line.size() && is_space(line[begin])) ++begin;
  std::size_t end = begin;
  while (end < line.size() && !is_space(line[end])) ++end;
  return line.substr(begin, end - begin);
}

}  // namespace

SmaliParseResult parse_smali(std::string_view text) {
  SmaliParseResult result;
  const OpcodeTable& table = opcode_table();
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view token = first_token(text.substr(pos, eol - pos));
    pos = eol + 1;

    if (token.empty() || token[0] == '#' || token[0] == '.' ||
        token[0] == ':')
      continue;
    if (const auto opcode = table.lookup(token)) {
      result.histogram.add(*opcode);
    } else {
      ++result.unknown_lines;
      auto it = result.unknown_tokens.find(token);
      if (it == result.unknown_tokens.end())
        result.unknown_tokens.emplace(std::string(token), 1);
      else
        ++it->second;
    }
  }
  return result;
}

std::string render_smali(const OpcodeHistogram& histogram) {
  const OpcodeTable& table = opcode_table();
  std::string out;
  for (std::size_t op = 0; op < kOpcodeCount; ++op) {
    const auto mnemonic = table[static_cast<std::uint8_t>(op)].mnemonic;
    for (std::uint64_t i = 0; i < histogram.counts[op]; ++i) {
      out += mnemonic;
      out += '\n';
    }
  }
  return out;
}

}  // namespace dexfreq
