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

#include "doctest.h"
#include "dexfreq/features.hpp"
#include "dexfreq/synth.hpp"
#include "support/test_support.hpp"

using namespace dexfreq;

namespace {

constexpr Label B = Label::kBenign;
constexpr Label M = Label::kMalware;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInvalidArgument;
}

// Direct Pearson r for the oracle.
double pearson(const Matrix& x, std::size_t a, std::size_t b) {
  const double n = double(x.rows());
  double ma = 0, mb = 0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    ma += x(r, a);
    mb += x(r, b);
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    sab += (x(r, a) - ma) * (x(r, b) - mb);
    saa += (x(r, a) - ma) * (x(r, a) - ma);
    sbb += (x(r, b) - mb) * (x(r, b) - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("normalize_rows") {
  const FeatureMatrix raw = test::labelled(
      test::matrix_of({{2, 2, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 3}}),
      {B, M, B}, Scale::kRawCounts);
  const NormalizeResult r = normalize_rows(raw);
  CHECK(r.matrix.scale == Scale::kRowNormalized);
  CHECK(r.matrix.values(0, 0) == 0.5);
  CHECK(r.matrix.values(0, 1) == 0.5);
  for (std::size_t c = 0; c < 6; ++c) CHECK(r.matrix.values(1, c) == 0.0);
  CHECK(r.zero_rows == std::vector<std::size_t>{1});
  CHECK(r.matrix.values(2, 5) == 1.0);

  // Idempotent and rows sum to one.
  Rng rng(3);
  const FeatureMatrix synth = synth_corpus(20, 20, default_profile(), 5);
  const FeatureMatrix once = normalize_rows(synth).matrix;
  const FeatureMatrix twice = normalize_rows(once).matrix;
  for (std::size_t r2 = 0; r2 < once.rows(); ++r2) {
    double s = 0;
    for (std::size_t c = 0; c < 256; ++c) {
      s += once.values(r2, c);
      CHECK(std::abs(once.values(r2, c) - twice.values(r2, c)) <= 1e-12);
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("prominent_opcodes on a hand example") {
  const FeatureMatrix m = test::labelled(test::matrix_of({{0.5, 0.5}, {1.0, 0.0}}), {B, M});
  const ProminentOpcodeReport r = prominent_opcodes(m, 1);
  CHECK(r.benign_mean == std::vector<double>{0.5, 0.5});
  CHECK(r.malware_mean == std::vector<double>{1.0, 0.0});
  CHECK(r.difference == std::vector<double>{0.5, 0.5});
  CHECK(r.top() == std::vector<std::size_t>{0});
  CHECK(r.ranking == std::vector<std::size_t>{0, 1});

  // |returned| = min(k, columns).
  CHECK(prominent_opcodes(m, 0).top().empty());
  CHECK(prominent_opcodes(m, 10).top().size() == 2);

  const FeatureMatrix same = test::labelled(test::matrix_of({{0.3, 0.7}, {0.3, 0.7}}), {B, M});
  for (double d : prominent_opcodes(same, 2).difference) CHECK(d == 0.0);

  const FeatureMatrix one_class = test::labelled(test::matrix_of({{0.3, 0.7}}), {B});
  CHECK(code_of([&] { prominent_opcodes(one_class, 2); }) == ErrorCode::kSingleClass);
}

TEST_CASE("prominent_opcodes invariants") {
  const FeatureMatrix m = normalize_rows(synth_corpus(40, 40, default_profile(), 9)).matrix;
  const ProminentOpcodeReport base = prominent_opcodes(m, 15);

  // Ranking is a permutation ordered by D descending, ties low-first.
  std::vector<std::size_t> sorted = base.ranking;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 256; ++i) CHECK(sorted[i] == i);
  for (std::size_t i = 1; i < 256; ++i) {
    const double prev = base.difference[base.ranking[i - 1]];
    const double cur = base.difference[base.ranking[i]];
    CHECK(prev >= cur);
    if (prev == cur) CHECK(base.ranking[i - 1] < base.ranking[i]);
  }

  // Row order and dataset duplication leave the means unchanged.
  std::vector<std::size_t> order(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) order[i] = m.rows() - 1 - i;
  const auto reversed = prominent_opcodes(m.select_rows(order), 15);
  std::vector<std::size_t> doubled_idx;
  for (int rep = 0; rep < 2; ++rep)
    for (std::size_t i = 0; i < m.rows(); ++i) doubled_idx.push_back(i);
  const auto doubled = prominent_opcodes(m.select_rows(doubled_idx), 15);
  for (std::size_t j = 0; j < 256; ++j) {
    CHECK(reversed.difference[j] == doctest::Approx(base.difference[j]).epsilon(1e-12));
    CHECK(doubled.difference[j] == doctest::Approx(base.difference[j]).epsilon(1e-12));
  }

  // Swapping labels keeps D.
  FeatureMatrix swapped = m;
  for (Label& l : swapped.labels) l = l == B ? M : B;
  const auto sw = prominent_opcodes(swapped, 15);
  for (std::size_t j = 0; j < 256; ++j) CHECK(sw.difference[j] == base.difference[j]);
}

TEST_CASE("planted 0x52 difference ranks first") {
  // Malware shrinks every bin by 15% and moves the freed mass onto op 0x52.
  SynthProfile p = default_profile();
  for (auto& c : p.components) {
    if (c.label != M) continue;
    for (double& q : c.probabilities) q *= 0.85;
    c.probabilities[0x52] += 0.15;
  }
  p.validate();
  const FeatureMatrix m = normalize_rows(synth_corpus(300, 300, p, 1)).matrix;
  const ProminentOpcodeReport r = prominent_opcodes(m, 15);
  CHECK(r.ranking[0] == 0x52);
  CHECK(r.difference[0x52] - r.difference[r.ranking[1]] >= 0.1);
}

TEST_CASE("unused_opcodes") {
  FeatureMatrix m = synth_corpus(10, 10, default_profile(), 2);
  const auto unused = unused_opcodes(m);
  CHECK(std::find(unused.begin(), unused.end(), 0x3E) != unused.end());
  for (std::size_t c : unused)
    for (std::size_t r = 0; r < m.rows(); ++r) CHECK(m.values(r, c) == 0.0);

  Rng rng(1);
  const FeatureMatrix dense =
      test::labelled(test::random_matrix(5, 8, rng, 0.1, 1.0), {B, M, B, M, B});
  CHECK(unused_opcodes(dense).empty());
}

TEST_CASE("correlation_pairs") {
  // Columns: A, B = 2A, C = -A + 5, D constant, E noise.
  Matrix v(6, 5);
  const double a[] = {1, 3, 2, 7, 4, 5};
  const double e[] = {0.3, -1.0, 2.0, 0.1, 0.7, -0.4};
  for (std::size_t r = 0; r < 6; ++r) {
    v(r, 0) = a[r];
    v(r, 1) = 2 * a[r];
    v(r, 2) = -a[r] + 5;
    v(r, 3) = 4.0;
    v(r, 4) = e[r];
  }
  const FeatureMatrix m = test::labelled(v, {B, M, B, M, B, M});
  const auto pairs = correlation_pairs(m, ClassFilter::kAll, 10);
  REQUIRE(!pairs.empty());
  CHECK(pairs[0].a == 0);
  CHECK(pairs[0].b == 1);
  CHECK(pairs[0].r == doctest::Approx(1.0).epsilon(1e-12));
  for (const auto& p : pairs) {
    CHECK(p.a < p.b);
    CHECK(p.a != 3);
    CHECK(p.b != 3);
    CHECK(std::abs(p.r) <= 1.0 + 1e-12);
    CHECK(p.r == doctest::Approx(pearson(v, p.a, p.b)).epsilon(1e-12));
  }
  // 4 non-constant columns -> 6 pairs, ordered by r descending.
  CHECK(pairs.size() == 6);
  CHECK(pairs.back().r == doctest::Approx(-1.0).epsilon(1e-12));
  for (std::size_t i = 1; i < pairs.size(); ++i) CHECK(pairs[i - 1].r >= pairs[i].r);

  // Positive affine transforms keep r.
  Matrix t = v;
  for (std::size_t r = 0; r < 6; ++r) t(r, 4) = 3.0 * v(r, 4) + 11.0;
  const auto affine = correlation_pairs(test::labelled(t, m.labels), ClassFilter::kAll, 10);
  for (std::size_t i = 0; i < pairs.size(); ++i)
    CHECK(affine[i].r == doctest::Approx(pairs[i].r).epsilon(1e-12));

  // Class filtering: three benign rows.
  const auto benign = correlation_pairs(m, ClassFilter::kBenign, 1);
  REQUIRE(benign.size() == 1);
  CHECK(benign[0].cls == ClassFilter::kBenign);

  const FeatureMatrix tiny = test::labelled(test::matrix_of({{1, 2}, {3, 4}}), {B, M});
  CHECK(code_of([&] { correlation_pairs(tiny, ClassFilter::kMalware, 1); }) ==
        ErrorCode::kTooFewRows);
}

TEST_CASE("report CSV shapes") {
  const FeatureMatrix m = normalize_rows(synth_corpus(10, 10, default_profile(), 1)).matrix;
  const auto report = prominent_opcodes(m, 15);
  const std::string csv = prominent_report_csv(m, report);
  CHECK(csv.rfind("opcode,mnemonic,F_B,F_M,D\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 16);
  CHECK(prominent_report_csv(m, prominent_opcodes(m, 0)) == "opcode,mnemonic,F_B,F_M,D\n");
  const std::string corr =
      correlation_csv(m, correlation_pairs(m, ClassFilter::kMalware, 3));
  CHECK(corr.rfind("op_a,op_b,r,class\n", 0) == 0);
  CHECK(std::count(corr.begin(), corr.end(), '\n') == 4);
}
