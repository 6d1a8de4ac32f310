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
#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "dexfreq/corpus.hpp"
#include "dexfreq/dex.hpp"
#include "dexfreq/features.hpp"
#include "dexfreq/smali.hpp"
#include "dexfreq/synth.hpp"
#include "support/test_support.hpp"

using namespace dexfreq;
namespace fs = std::filesystem;

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

FeatureMatrix ten_rows() {
  Matrix v;
  std::vector<Label> labels;
  for (int i = 0; i < 10; ++i) {
    v.append_row(std::vector<double>{double(i), double(10 - i)});
    labels.push_back(i < 5 ? Label::kBenign : Label::kMalware);
  }
  return test::labelled(v, labels, Scale::kRawCounts);
}

// Malware draws everything from one bin.
SynthProfile single_bin_profile(std::uint8_t bin) {
  SynthProfile p = default_profile();
  for (auto& c : p.components)
    if (c.label == Label::kMalware) {
      c.probabilities.fill(0.0);
      c.probabilities[bin] = 1.0;
    }
  return p;
}

}  // namespace

TEST_CASE("load_manifest") {
  const auto m = load_manifest(test::fixture_dir() / "two_row_manifest.csv");
  REQUIRE(m.entries.size() == 2);
  CHECK(m.entries[0].label == Label::kMalware);
  CHECK(m.entries[1].label == Label::kBenign);
  CHECK(m.entries[0].path == test::fixture_dir() / "a.smali");

  CHECK(code_of([] { load_manifest(test::fixture_dir() / "trojan_manifest.csv"); }) ==
        ErrorCode::kUnknownLabel);
  CHECK(code_of([] { load_manifest(test::fixture_dir() / "duplicate_manifest.csv"); }) ==
        ErrorCode::kDuplicateId);
  CHECK(code_of([] { load_manifest(test::fixture_dir() / "missing.csv"); }) ==
        ErrorCode::kMissingFile);

  const auto dir = test::scratch_dir("manifest");
  test::write_text(dir / "bad.csv", "id,file,class\nx,y,benign\n");
  CHECK(code_of([&] { load_manifest(dir / "bad.csv"); }) == ErrorCode::kBadHeader);
}

TEST_CASE("extract_corpus over smali fixtures") {
  const auto manifest = load_manifest(test::fixture_dir() / "smali_manifest.csv");
  const ExtractResult r = extract_corpus(manifest, 1);
  CHECK(r.failures.empty());
  REQUIRE(r.matrix.rows() == 3);
  CHECK(r.matrix.cols() == 256);
  CHECK(r.matrix.scale == Scale::kRawCounts);
  CHECK(r.matrix.app_ids == std::vector<std::string>{"app-a", "app-b", "app-c"});
  for (std::size_t i = 0; i < 3; ++i) CHECK(r.matrix.values(i, 0xFF) == 0.0);

  // Each row equals a parse of its file alone.
  for (std::size_t i = 0; i < 3; ++i) {
    const auto h = parse_smali(test::read_text(manifest.entries[i].path)).histogram;
    CHECK(histogram_row(h) ==
          std::vector<double>(r.matrix.values.row(i).begin(), r.matrix.values.row(i).end()));
  }

  // Output does not depend on the worker count.
  CHECK(extract_corpus(manifest, 4).matrix == r.matrix);
}

TEST_CASE("extract_corpus skips corrupt files") {
  const ExtractResult r =
      extract_corpus(load_manifest(test::fixture_dir() / "mixed_manifest.csv"), 2);
  REQUIRE(r.matrix.rows() == 2);
  CHECK(r.matrix.app_ids == std::vector<std::string>{"good-dex", "good-smali"});
  REQUIRE(r.failures.size() == 1);
  CHECK(r.failures[0].first == "bad-dex");
  CHECK(r.matrix.values(0, 0x00) == 2.0);
  CHECK(r.matrix.values(0, 0x0E) == 1.0);

  LabelManifest only_bad;
  only_bad.entries.push_back({"x", test::fixture_dir() / "corrupt.dex", Label::kBenign});
  CHECK(code_of([&] { extract_corpus(only_bad); }) == ErrorCode::kAllFilesFailed);
}

TEST_CASE("directory inputs sum every DEX and smali file") {
  const auto dir = test::scratch_dir("dir_input");
  fs::create_directories(dir / "app" / "smali");
  fs::copy_file(test::fixture_dir() / "a.smali", dir / "app" / "smali" / "a.smali");
  fs::copy_file(test::fixture_dir() / "minimal.dex", dir / "app" / "classes.dex");
  const OpcodeHistogram h = extract_file(dir / "app");
  CHECK(h.total == 7 + 3);
  CHECK(h.counts[0x0E] == 2);
}

TEST_CASE("synthetic corpus") {
  const SynthProfile single = single_bin_profile(0x52);
  const FeatureMatrix m = synth_corpus(20, 20, single, 3);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (m.labels[r] != Label::kMalware) continue;
    for (std::size_t c = 0; c < 256; ++c)
      if (c != 0x52) CHECK(m.values(r, c) == 0.0);
    CHECK(m.values(r, 0x52) > 0.0);
  }

  const FeatureMatrix only_malware = synth_corpus(0, 7, default_profile(), 1);
  CHECK(only_malware.rows() == 7);
  CHECK(only_malware.count(Label::kBenign) == 0);

  CHECK(matrix_to_csv(synth_corpus(30, 30, default_profile(), 7)) ==
        matrix_to_csv(synth_corpus(30, 30, default_profile(), 7)));
  CHECK(synth_corpus(30, 30, default_profile(), 7) !=
        synth_corpus(30, 30, default_profile(), 8));

  CHECK(code_of([] { synth_corpus(0, 0, default_profile(), 1); }) ==
        ErrorCode::kInvalidCounts);
}

TEST_CASE("default profile differs on exactly 20 bins") {
  const SynthProfile p = default_profile();
  const SynthComponent* b = nullptr;
  const SynthComponent* m = nullptr;
  for (const auto& c : p.components) (c.label == Label::kBenign ? b : m) = &c;
  REQUIRE(b != nullptr);
  REQUIRE(m != nullptr);
  int differing = 0;
  for (std::size_t j = 0; j < 256; ++j) differing += b->probabilities[j] != m->probabilities[j];
  CHECK(differing == 20);
}

TEST_CASE("synthetic class means converge to the profile") {
  // Sampling std of a bin's class-mean frequency, from the generator's model:
  // Var f = p(1-p) [a/(a+1) E(1/L) + 1/(a+1)] for Dirichlet concentration a
  // and app length L uniform on [min, max].
  const SynthProfile p = default_profile();
  const std::size_t n = 2000;
  const FeatureMatrix freq = normalize_rows(synth_corpus(n, n, p, 42)).matrix;
  for (const SynthComponent& c : p.components) {
    double inv_len = 0.0;
    for (auto len = c.length_min; len <= c.length_max; ++len) inv_len += 1.0 / double(len);
    inv_len /= double(c.length_max - c.length_min + 1);
    const double a = c.concentration;
    double worst = 0.0;
    double z2 = 0.0;
    std::size_t bins = 0;
    std::size_t beyond3 = 0;
    for (std::size_t j = 0; j < 256; ++j) {
      const double pj = c.probabilities[j];
      double s = 0.0;
      for (std::size_t r = 0; r < freq.rows(); ++r)
        if (freq.labels[r] == c.label) s += freq.values(r, j);
      const double mean = s / double(n);
      const double var = pj * (1 - pj) * (a / (a + 1) * inv_len + 1 / (a + 1));
      if (var == 0.0) {
        CHECK(mean == 0.0);
        continue;
      }
      const double z = (mean - pj) / std::sqrt(var / double(n));
      worst = std::max(worst, std::abs(z));
      z2 += z * z;
      ++bins;
      beyond3 += std::abs(z) >= 3.0;
    }
    // Unbiased and correctly scaled: mean z^2 near 1.
    CHECK(z2 / double(bins) == doctest::Approx(1.0).epsilon(0.25));
    // 3 sigma per bin; across all bins the family-wise equivalent is ~4.5.
    CHECK(double(beyond3) <= 0.01 * double(bins));
    CHECK(worst < 4.5);
  }
}

TEST_CASE("profile text round trip and validation") {
  const SynthProfile p = benign_mode_profile();
  const SynthProfile back = parse_profile(render_profile(p));
  REQUIRE(back.components.size() == p.components.size());
  for (std::size_t i = 0; i < p.components.size(); ++i) {
    CHECK(back.components[i].name == p.components[i].name);
    CHECK(back.components[i].label == p.components[i].label);
    CHECK(back.components[i].probabilities == p.components[i].probabilities);
    CHECK(back.components[i].length_min == p.components[i].length_min);
  }
  CHECK(matrix_to_csv(synth_corpus(10, 10, back, 1)) ==
        matrix_to_csv(synth_corpus(10, 10, p, 1)));

  CHECK(code_of([] {
          parse_profile("components = a\na.label = benign\na.op_00 = 0.5\n");
        }) == ErrorCode::kInvalidProfile);
  CHECK(code_of([] {
          parse_profile("components = a\na.label = benign\na.op_00 = 1.5\na.op_01 = -0.5\n");
        }) == ErrorCode::kInvalidProfile);
  CHECK(parse_profile("# comment\ncomponents = a\na.label = malware\na.op_52 = 1\n")
            .components[0]
            .probabilities[0x52] == 1.0);
}

TEST_CASE("split") {
  const FeatureMatrix m = ten_rows();
  const SplitPair s = split(m, 0.8, 1);
  CHECK(s.train.rows() == 8);
  CHECK(s.test.rows() == 2);
  CHECK(s.train.count(Label::kBenign) == 4);
  CHECK(s.test.count(Label::kMalware) == 1);

  std::set<std::size_t> all(s.train_indices.begin(), s.train_indices.end());
  all.insert(s.test_indices.begin(), s.test_indices.end());
  CHECK(all.size() == 10);
  for (std::size_t i = 0; i < s.test_indices.size(); ++i)
    CHECK(s.test.app_ids[i] == m.app_ids[s.test_indices[i]]);

  const SplitPair again = split(m, 0.8, 1);
  CHECK(again.train_indices == s.train_indices);
  CHECK(again.test_indices == s.test_indices);

  CHECK(code_of([&] { split(m, 1.0, 1); }) == ErrorCode::kTooFewRows);
  CHECK(code_of([&] { split(m.select_rows(std::vector<std::size_t>{0}), 0.8, 1); }) ==
        ErrorCode::kTooFewRows);

  // Stratified counts stay within one row of exact proportions.
  const FeatureMatrix big = synth_corpus(37, 91, default_profile(), 2);
  const SplitPair b = split(big, 0.8, 9);
  CHECK(std::abs(double(b.train.count(Label::kBenign)) - 0.8 * 37) <= 1.0);
  CHECK(std::abs(double(b.train.count(Label::kMalware)) - 0.8 * 91) <= 1.0);
}

TEST_CASE("matrix CSV round trip") {
  const auto dir = test::scratch_dir("matrix_io");
  const FeatureMatrix raw = synth_corpus(5, 5, default_profile(), 4);
  save_matrix(raw, dir / "raw.csv");
  CHECK(load_matrix(dir / "raw.csv") == raw);

  const FeatureMatrix norm = normalize_rows(raw).matrix;
  save_matrix(norm, dir / "norm.csv");
  const FeatureMatrix back = load_matrix(dir / "norm.csv");
  CHECK(back.values == norm.values);
  CHECK(back.scale == Scale::kRowNormalized);

  FeatureMatrix empty = make_opcode_matrix();
  const std::string text = matrix_to_csv(empty);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  CHECK(matrix_from_csv(text) == empty);

  // 255 feature columns.
  std::string header = "app_id,label";
  for (int op = 0; op < 255; ++op) header += "," + opcode_column_name(std::uint8_t(op));
  CHECK(code_of([&] { matrix_from_csv(header + "\n"); }) == ErrorCode::kSchemaMismatch);
  CHECK(code_of([&] { load_matrix(dir / "absent.csv"); }) != ErrorCode::kSchemaMismatch);
}
