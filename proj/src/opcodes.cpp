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

#include "dexfreq/opcodes.hpp"

#include <cstdio>
#include <string>
#include <unordered_map>

namespace dexfreq {

namespace {

using F = InsnFormat;

struct RawEntry {
  const char* mnemonic;  // nullptr marks a reserved slot
  F format;
};

// Dalvik bytecode list, 0x00..0xff in order.
constexpr RawEntry kRaw[kOpcodeCount] = {
    {"nop", F::k10x},
    {"move", F::k12x},
    {"move/from16", F::k22x},
    {"move/16", F::k32x},
    {"move-wide", F::k12x},
    {"move-wide/from16", F::k22x},
    {"move-wide/16", F::k32x},
    {"move-object", F::k12x},
    {"move-object/from16", F::k22x},
    {"move-object/16", F::k32x},
    {"move-result", F::k11x},
    {"move-result-wide", F::k11x},
    {"move-result-object", F::k11x},
    {"move-exception", F::k11x},
    {"return-void", F::k10x},
    {"return", F::k11x},
    // 0x10
    {"return-wide", F::k11x},
    {"return-object", F::k11x},
    {"const/4", F::k11n},
    {"const/16", F::k21s},
    {"const", F::k31i},
    {"const/high16", F::k21h},
    {"const-wide/16", F::k21s},
    {"const-wide/32", F::k31i},
    {"const-wide", F::k51l},
    {"const-wide/high16", F::k21h},
    {"const-string", F::k21c},
    {"const-string/jumbo", F::k31c},
    {"const-class", F::k21c},
    {"monitor-enter", F::k11x},
    {"monitor-exit", F::k11x},
    {"check-cast", F::k21c},
    // 0x20
    {"instance-of", F::k22c},
    {"array-length", F::k12x},
    {"new-instance", F::k21c},
    {"new-array", F::k22c},
    {"filled-new-array", F::k35c},
    {"filled-new-array/range", F::k3rc},
    {"fill-array-data", F::k31t},
    {"throw", F::k11x},
    {"goto", F::k10t},
    {"goto/16", F::k20t},
    {"goto/32", F::k30t},
    {"packed-switch", F::k31t},
    {"sparse-switch", F::k31t},
    {"cmpl-float", F::k23x},
    {"cmpg-float", F::k23x},
    {"cmpl-double", F::k23x},
    // 0x30
    {"cmpg-double", F::k23x},
    {"cmp-long", F::k23x},
    {"if-eq", F::k22t},
    {"if-ne", F::k22t},
    {"if-lt", F::k22t},
    {"if-ge", F::k22t},
    {"if-gt", F::k22t},
    {"if-le", F::k22t},
    {"if-eqz", F::k21t},
    {"if-nez", F::k21t},
    {"if-ltz", F::k21t},
    {"if-gez", F::k21t},
    {"if-gtz", F::k21t},
    {"if-lez", F::k21t},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    // 0x40
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {"aget", F::k23x},
    {"aget-wide", F::k23x},
    {"aget-object", F::k23x},
    {"aget-boolean", F::k23x},
    {"aget-byte", F::k23x},
    {"aget-char", F::k23x},
    {"aget-short", F::k23x},
    {"aput", F::k23x},
    {"aput-wide", F::k23x},
    {"aput-object", F::k23x},
    {"aput-boolean", F::k23x},
    {"aput-byte", F::k23x},
    // 0x50
    {"aput-char", F::k23x},
    {"aput-short", F::k23x},
    {"iget", F::k22c},
    {"iget-wide", F::k22c},
    {"iget-object", F::k22c},
    {"iget-boolean", F::k22c},
    {"iget-byte", F::k22c},
    {"iget-char", F::k22c},
    {"iget-short", F::k22c},
    {"iput", F::k22c},
    {"iput-wide", F::k22c},
    {"iput-object", F::k22c},
    {"iput-boolean", F::k22c},
    {"iput-byte", F::k22c},
    {"iput-char", F::k22c},
    {"iput-short", F::k22c},
    // 0x60
    {"sget", F::k21c},
    {"sget-wide", F::k21c},
    {"sget-object", F::k21c},
    {"sget-boolean", F::k21c},
    {"sget-byte", F::k21c},
    {"sget-char", F::k21c},
    {"sget-short", F::k21c},
    {"sput", F::k21c},
    {"sput-wide", F::k21c},
    {"sput-object", F::k21c},
    {"sput-boolean", F::k21c},
    {"sput-byte", F::k21c},
    {"sput-char", F::k21c},
    {"sput-short", F::k21c},
    {"invoke-virtual", F::k35c},
    {"invoke-super", F::k35c},
    // 0x70
    {"invoke-direct", F::k35c},
    {"invoke-static", F::k35c},
    {"invoke-interface", F::k35c},
    {nullptr, F::k10x},
    {"invoke-virtual/range", F::k3rc},
    {"invoke-super/range", F::k3rc},
    {"invoke-direct/range", F::k3rc},
    {"invoke-static/range", F::k3rc},
    {"invoke-interface/range", F::k3rc},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {"neg-int", F::k12x},
    {"not-int", F::k12x},
    {"neg-long", F::k12x},
    {"not-long", F::k12x},
    {"neg-float", F::k12x},
    // 0x80
    {"neg-double", F::k12x},
    {"int-to-long", F::k12x},
    {"int-to-float", F::k12x},
    {"int-to-double", F::k12x},
    {"long-to-int", F::k12x},
    {"long-to-float", F::k12x},
    {"long-to-double", F::k12x},
    {"float-to-int", F::k12x},
    {"float-to-long", F::k12x},
    {"float-to-double", F::k12x},
    {"double-to-int", F::k12x},
    {"double-to-long", F::k12x},
    {"double-to-float", F::k12x},
    {"int-to-byte", F::k12x},
    {"int-to-char", F::k12x},
    {"int-to-short", F::k12x},
    // 0x90
    {"add-int", F::k23x},
    {"sub-int", F::k23x},
    {"mul-int", F::k23x},
    {"div-int", F::k23x},
    {"rem-int", F::k23x},
    {"and-int", F::k23x},
    {"or-int", F::k23x},
    {"xor-int", F::k23x},
    {"shl-int", F::k23x},
    {"shr-int", F::k23x},
    {"ushr-int", F::k23x},
    {"add-long", F::k23x},
    {"sub-long", F::k23x},
    {"mul-long", F::k23x},
    {"div-long", F::k23x},
    {"rem-long", F::k23x},
    // 0xa0
    {"and-long", F::k23x},
    {"or-long", F::k23x},
    {"xor-long", F::k23x},
    {"shl-long", F::k23x},
    {"shr-long", F::k23x},
    {"ushr-long", F::k23x},
    {"add-float", F::k23x},
    {"sub-float", F::k23x},
    {"mul-float", F::k23x},
    {"div-float", F::k23x},
    {"rem-float", F::k23x},
    {"add-double", F::k23x},
    {"sub-double", F::k23x},
    {"mul-double", F::k23x},
    {"div-double", F::k23x},
    {"rem-double", F::k23x},
    // 0xb0
    {"add-int/2addr", F::k12x},
    {"sub-int/2addr", F::k12x},
    {"mul-int/2addr", F::k12x},
    {"div-int/2addr", F::k12x},
    {"rem-int/2addr", F::k12x},
    {"and-int/2addr", F::k12x},
    {"or-int/2addr", F::k12x},
    {"xor-int/2addr", F::k12x},
    {"shl-int/2addr", F::k12x},
    {"shr-int/2addr", F::k12x},
    {"ushr-int/2addr", F::k12x},
    {"add-long/2addr", F::k12x},
    {"sub-long/2addr", F::k12x},
    {"mul-long/2addr", F::k12x},
    {"div-long/2addr", F::k12x},
    {"rem-long/2addr", F::k12x},
    // 0xc0
    {"and-long/2addr", F::k12x},
    {"or-long/2addr", F::k12x},
    {"xor-long/2addr", F::k12x},
    {"shl-long/2addr", F::k12x},
    {"shr-long/2addr", F::k12x},
    {"ushr-long/2addr", F::k12x},
    {"add-float/2addr", F::k12x},
    {"sub-float/2addr", F::k12x},
    {"mul-float/2addr", F::k12x},
    {"div-float/2addr", F::k12x},
    {"rem-float/2addr", F::k12x},
    {"add-double/2addr", F::k12x},
    {"sub-double/2addr", F::k12x},
    {"mul-double/2addr", F::k12x},
    {"div-double/2addr", F::k12x},
    {"rem-double/2addr", F::k12x},
    // 0xd0
    {"add-int/lit16", F::k22s},
    {"rsub-int", F::k22s},
    {"mul-int/lit16", F::k22s},
    {"div-int/lit16", F::k22s},
    {"rem-int/lit16", F::k22s},
    {"and-int/lit16", F::k22s},
    {"or-int/lit16", F::k22s},
    {"xor-int/lit16", F::k22s},
    {"add-int/lit8", F::k22b},
    {"rsub-int/lit8", F::k22b},
    {"mul-int/lit8", F::k22b},
    {"div-int/lit8", F::k22b},
    {"rem-int/lit8", F::k22b},
    {"and-int/lit8", F::k22b},
    {"or-int/lit8", F::k22b},
    {"xor-int/lit8", F::k22b},
    // 0xe0
    {"shl-int/lit8", F::k22b},
    {"shr-int/lit8", F::k22b},
    {"ushr-int/lit8", F::k22b},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    // 0xf0
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {nullptr, F::k10x},
    {"invoke-polymorphic", F::k45cc},
    {"invoke-polymorphic/range", F::k4rcc},
    {"invoke-custom", F::k35c},
    {"invoke-custom/range", F::k3rc},
    {"const-method-handle", F::k21c},
    {"const-method-type", F::k21c},
};

// Storage for the synthesized "unused-xx" names so string_views stay valid.
const std::array<std::string, kOpcodeCount>& unused_names() {
  static const auto names = [] {
    std::array<std::string, kOpcodeCount> out;
    for (std::size_t i = 0; i < kOpcodeCount; ++i) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "unused-%02x", static_cast<unsigned>(i));
      out[i] = buf;
    }
    return out;
  }();
  return names;
}

}  // namespace

std::string_view format_name(InsnFormat format) {
  switch (format) {
    case F::k10x: return "10x";
    case F::k12x: return "12x";
    case F::k11n: return "11n";
    case F::k11x: return "11x";
    case F::k10t: return "10t";
    case F::k20t: return "20t";
    case F::k22x: return "22x";
    case F::k21t: return "21t";
    case F::k21s: return "21s";
    case F::k21h: return "21h";
    case F::k21c: return "21c";
    case F::k23x: return "23x";
    case F::k22b: return "22b";
    case F::k22t: return "22t";
    case F::k22s: return "22s";
    case F::k22c: return "22c";
    case F::k30t: return "30t";
    case F::k32x: return "32x";
    case F::k31i: return "31i";
    case F::k31t: return "31t";
    case F::k31c: return "31c";
    case F::k35c: return "35c";
    case F::k3rc: return "3rc";
    case F::k45cc: return "45cc";
    case F::k4rcc: return "4rcc";
    case F::k51l: return "51l";
  }
  return "?";
}

std::size_t format_width(InsnFormat format) {
  return static_cast<std::size_t>(format_name(format)[0] - '0');
}

OpcodeTable::OpcodeTable() {
  const auto& names = unused_names();
  for (std::size_t i = 0; i < kOpcodeCount; ++i) {
    const RawEntry& raw = kRaw[i];
    const bool unused = raw.mnemonic == nullptr;
    entries_[i] = OpcodeInfo{
        unused ? std::string_view(names[i]) : std::string_view(raw.mnemonic),
        raw.format, static_cast<std::uint8_t>(format_width(raw.format)),
        unused};
  }
}

std::optional<std::uint8_t> OpcodeTable::lookup(
    std::string_view mnemonic) const {
  static const auto index = [this] {
    std::unordered_map<std::string_view, std::uint8_t> m;
    for (std::size_t i = 0; i < kOpcodeCount; ++i)
      m.emplace(entries_[i].mnemonic, static_cast<std::uint8_t>(i));
    return m;
  }();
  const auto it = index.find(mnemonic);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

std::size_t OpcodeTable::unused_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.unused ? 1 : 0;
  return n;
}

const OpcodeTable& opcode_table() {
  static const OpcodeTable table;
  return table;
}

std::string opcode_column_name(std::uint8_t opcode) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "op_%02x", static_cast<unsigned>(opcode));
  return buf;
}

}  // namespace dexfreq
