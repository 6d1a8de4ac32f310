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

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "dexfreq/dex.hpp"
#include "dexfreq/opcodes.hpp"
#include "dexfreq/rng.hpp"
#include "dexfreq/smali.hpp"
#include "support/test_support.hpp"

using namespace dexfreq;
using dexfreq::test::DexBuilder;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("opcode table matches published Dalvik entries") {
  const OpcodeTable& t = opcode_table();
  CHECK(t.lookup("nop") == std::optional<std::uint8_t>(0x00));
  CHECK(t.lookup("move") == std::optional<std::uint8_t>(0x01));
  CHECK(t.lookup("return-void") == std::optional<std::uint8_t>(0x0E));
  CHECK(t.lookup("const/4") == std::optional<std::uint8_t>(0x12));
  CHECK(t.lookup("const-string") == std::optional<std::uint8_t>(0x1A));
  CHECK(t.lookup("iget-object") == std::optional<std::uint8_t>(0x54));
  CHECK(t.lookup("invoke-virtual") == std::optional<std::uint8_t>(0x6E));
  CHECK(t.lookup("monitor-enter") == std::optional<std::uint8_t>(0x1D));
  CHECK(t.lookup("rsub-int/lit8") == std::optional<std::uint8_t>(0xD9));
  CHECK(t.lookup("const-method-type") == std::optional<std::uint8_t>(0xFF));
  CHECK_FALSE(t.lookup("frobnicate").has_value());

  // Widths by format: 11n=1, 35c=3, 51l=5, 45cc=4, 31t=3.
  CHECK(t[0x12].width == 1);
  CHECK(t[0x6E].width == 3);
  CHECK(t[0x18].width == 5);
  CHECK(t[0xFA].width == 4);
  CHECK(t[0x2B].width == 3);
  CHECK(format_name(t[0x12].format) == "11n");

  CHECK(t[0x3E].unused);
  CHECK_FALSE(t[0x00].unused);
  // Reserved slots of the current list: 3e-43, 73, 79-7a, e3-f9.
  std::vector<int> reserved;
  for (int op = 0; op < 256; ++op)
    if (t[static_cast<std::uint8_t>(op)].unused) reserved.push_back(op);
  std::vector<int> expected = {0x3E, 0x3F, 0x40, 0x41, 0x42, 0x43, 0x73, 0x79, 0x7A};
  for (int op = 0xE3; op <= 0xF9; ++op) expected.push_back(op);
  CHECK(reserved == expected);
  CHECK(t.unused_count() == 32);

  // Every byte appears once and mnemonics are unique.
  for (int op = 0; op < 256; ++op) {
    const auto& e = t[static_cast<std::uint8_t>(op)];
    CHECK(e.width >= 1);
    CHECK(t.lookup(e.mnemonic) == std::optional<std::uint8_t>(op));
  }
}

TEST_CASE("decode_instruction widths") {
  const std::vector<std::uint16_t> const4 = {0x1012};
  CHECK(decode_instruction(const4, 0) ==
        DecodedInstruction{0x12, 1, PayloadKind::kNone});
  const std::vector<std::uint16_t> nop = {0x0000};
  CHECK(decode_instruction(nop, 0) ==
        DecodedInstruction{0x00, 1, PayloadKind::kNone});

  const std::vector<std::uint16_t> packed = {0x0100, 0x0002, 0x0000, 0x0000,
                                             0x0004, 0x0000, 0x0006, 0x0000};
  CHECK(decode_instruction(packed, 0) ==
        DecodedInstruction{0x00, 8, PayloadKind::kPackedSwitch});

  // sparse-switch: size 2 -> 2 + 4*2 units.
  std::vector<std::uint16_t> sparse = {0x0200, 0x0002};
  sparse.resize(10, 0);
  CHECK(decode_instruction(sparse, 0) ==
        DecodedInstruction{0x00, 10, PayloadKind::kSparseSwitch});

  // fill-array-data: width 1, size 3 -> 4 + ceil(3/2) units.
  std::vector<std::uint16_t> fill = {0x0300, 0x0001, 0x0003, 0x0000, 0, 0};
  CHECK(decode_instruction(fill, 0) ==
        DecodedInstruction{0x00, 6, PayloadKind::kFillArrayData});

  // Truncations.
  const std::vector<std::uint16_t> short_invoke = {0x206E, 0x0001};
  CHECK(code_of([&] { decode_instruction(short_invoke, 0); }) ==
        ErrorCode::kTruncatedStream);
  std::vector<std::uint16_t> short_packed = packed;
  short_packed.pop_back();
  CHECK(code_of([&] { decode_instruction(short_packed, 0); }) ==
        ErrorCode::kTruncatedStream);
  CHECK(code_of([&] { decode_instruction(nop, 1); }) ==
        ErrorCode::kTruncatedStream);
}

TEST_CASE("payloads contribute nothing to the histogram") {
  std::vector<std::uint16_t> units = {0x0000, 0x000E, 0x0100, 0x0001,
                                      0x0000, 0x0000, 0x0000, 0x0000};
  OpcodeHistogram h;
  count_instructions(units, h);
  CHECK(h.counts[0x00] == 1);
  CHECK(h.counts[0x0E] == 1);
  CHECK(h.total == 2);
}

TEST_CASE("decoding random streams partitions them or stops on truncation") {
  Rng rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<std::uint16_t> units(1 + rng.below(40));
    for (auto& u : units) u = static_cast<std::uint16_t>(rng.below(65536));
    std::size_t pc = 0;
    bool truncated = false;
    while (pc < units.size()) {
      try {
        const auto insn = decode_instruction(units, pc);
        REQUIRE(insn.width >= 1);
        REQUIRE(insn.width <= units.size() - pc);
        pc += insn.width;
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kTruncatedStream);
        truncated = true;
        break;
      }
    }
    CHECK((truncated || pc == units.size()));
  }
}

TEST_CASE("minimal DEX fixture") {
  const auto bytes = test::read_bytes(test::fixture_dir() / "minimal.dex");
  REQUIRE(!bytes.empty());
  const OpcodeHistogram h = parse_dex(bytes);
  CHECK(h.counts[0x00] == 2);
  CHECK(h.counts[0x0E] == 1);
  CHECK(h.total == 3);

  // The in-test assembler agrees with the fixture generator.
  const auto built = DexBuilder().add_class({{0x0000, 0x0000, 0x000E}}).build();
  CHECK(parse_dex(built) == h);
}

TEST_CASE("two-class DEX fixture with payload and version 039") {
  const auto bytes = test::read_bytes(test::fixture_dir() / "two_classes.dex");
  const OpcodeHistogram h = parse_dex(bytes);
  CHECK(h.counts[0x12] == 1);
  CHECK(h.counts[0x0F] == 1);
  CHECK(h.counts[0x6E] == 1);
  CHECK(h.counts[0x0E] == 2);
  CHECK(h.counts[0x00] == 1);
  CHECK(h.total == 6);
}

TEST_CASE("parse_dex error paths") {
  CHECK(code_of([] { parse_dex({}); }) == ErrorCode::kBadMagic);
  const auto good = DexBuilder().add_class({{0x000E}}).build();

  for (const char* v : {"034", "040", "0x5"}) {
    const auto b = DexBuilder(v).add_class({{0x000E}}).build();
    CHECK(code_of([&] { parse_dex(b); }) == ErrorCode::kBadMagic);
  }
  for (const char* v : {"035", "036", "037", "038", "039"})
    CHECK_NOTHROW(parse_dex(DexBuilder(v).add_class({{0x000E}}).build()));

  // class_defs beyond the end of the file.
  auto bad_defs = good;
  DexBuilder::set32(bad_defs, 100, static_cast<std::uint32_t>(good.size() + 64));
  try {
    parse_dex(bad_defs);
    FAIL("expected MalformedOffset");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMalformedOffset);
    CHECK(e.offset().has_value());
  }

  // Header declares more bytes than present.
  auto short_file = good;
  short_file.resize(0x50);
  CHECK(code_of([&] { parse_dex(short_file); }) == ErrorCode::kTruncatedFile);

  // Instruction stream ending mid-instruction.
  const auto truncated = DexBuilder().add_class({{0x206E, 0x0001}}).build();
  CHECK(code_of([&] { parse_dex(truncated); }) == ErrorCode::kTruncatedStream);
}

TEST_CASE("histogram is independent of class and method order") {
  const DexBuilder::Method a = {0x1012, 0x000F};
  const DexBuilder::Method b = {0x206E, 0x0001, 0x0010, 0x000E};
  const DexBuilder::Method c = {0x0000, 0x001A, 0x0003, 0x000E};
  const DexBuilder::Method d = {0x001D, 0x001E, 0x000E};
  const auto h1 = parse_dex(DexBuilder().add_class({a, b}).add_class({c, d}).build());
  const auto h2 = parse_dex(DexBuilder().add_class({d, c}).add_class({b, a}).build());
  const auto h3 = parse_dex(DexBuilder().add_class({c}).add_class({b, d, a}).build());
  CHECK(h1 == h2);
  CHECK(h1 == h3);
  CHECK(h1.total == 10);
}

TEST_CASE("DEX fuzzing never crashes or hangs") {
  const auto seed_file = test::read_bytes(test::fixture_dir() / "two_classes.dex");
  Rng rng(2024);
  const auto start = std::chrono::steady_clock::now();
  std::size_t ok = 0;
  std::size_t errors = 0;
  for (int i = 0; i < 3000; ++i) {
    auto bytes = seed_file;
    const std::size_t flips = 1 + rng.below(8);
    for (std::size_t f = 0; f < flips; ++f) {
      const std::size_t at = rng.below(std::min<std::size_t>(bytes.size(), 0x70 + 64));
      bytes[at] = static_cast<std::uint8_t>(rng.below(256));
    }
    if (rng.below(4) == 0) bytes.resize(rng.below(bytes.size() + 1));
    try {
      const auto h = parse_dex(bytes);
      std::uint64_t sum = 0;
      for (auto c : h.counts) sum += c;
      CHECK(sum == h.total);
      ++ok;
    } catch (const Error&) {
      ++errors;
    }
  }
  CHECK(ok + errors == 3000);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(20));
}

TEST_CASE("smali line parser") {
  auto h = parse_smali("const-string v0, \"a\"\n").histogram;
  CHECK(h.counts[0x1A] == 1);
  CHECK(h.total == 1);

  CHECK(parse_smali(".method foo()V\n").histogram.total == 0);

  const std::string invoke = "invoke-virtual {v0}, La;->b()V\n";
  h = parse_smali(invoke + invoke + invoke).histogram;
  CHECK(h.counts[0x6E] == 3);

  const auto r = parse_smali(
      "# comment\n"
      "\n"
      ":label_0\n"
      "    .registers 2\n"
      "    nop # trailing comment\n"
      "    frobnicate v0\n"
      "    frobnicate v1\n"
      "\treturn-void\r\n");
  CHECK(r.histogram.counts[0x00] == 1);
  CHECK(r.histogram.counts[0x0E] == 1);
  CHECK(r.histogram.total == 2);
  CHECK(r.unknown_lines == 2);
  CHECK(r.unknown_tokens.at("frobnicate") == 2);
}

TEST_CASE("smali fixtures parse to the expected counts") {
  const auto a = parse_smali(test::read_text(test::fixture_dir() / "a.smali"));
  CHECK(a.histogram.counts[0x1A] == 1);
  CHECK(a.histogram.counts[0x71] == 1);
  CHECK(a.histogram.counts[0x12] == 1);
  CHECK(a.histogram.counts[0x38] == 1);
  CHECK(a.histogram.counts[0x6E] == 1);
  CHECK(a.histogram.counts[0x0A] == 1);
  CHECK(a.histogram.counts[0x0E] == 1);
  CHECK(a.histogram.total == 7);
  CHECK(a.unknown_lines == 0);

  const auto c = parse_smali(test::read_text(test::fixture_dir() / "c.smali"));
  CHECK(c.histogram.counts[0x2B] == 1);
  CHECK(c.histogram.counts[0x12] == 2);
  CHECK(c.histogram.counts[0x0F] == 2);
  CHECK(c.histogram.total == 5);
}

TEST_CASE("render then parse round-trips") {
  for (const char* name : {"a.smali", "b.smali", "c.smali"}) {
    const auto h = parse_smali(test::read_text(test::fixture_dir() / name)).histogram;
    CHECK(parse_smali(render_smali(h)).histogram == h);
  }
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    OpcodeHistogram h;
    for (int i = 0; i < 40; ++i)
      h.add(static_cast<std::uint8_t>(rng.below(256)), 1 + rng.below(3));
    const auto back = parse_smali(render_smali(h));
    CHECK(back.histogram == h);
    CHECK(back.unknown_lines == 0);
  }
}
