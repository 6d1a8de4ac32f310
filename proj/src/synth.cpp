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

#include "dexfreq/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "csv.hpp"
#include "dexfreq/rng.hpp"

namespace dexfreq {

namespace {

constexpr double kSumTolerance = 1e-9;

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

[[noreturn]] void invalid(const std::string& message) {
  throw Error(ErrorCode::kInvalidProfile, message);
}

// Base opcode mix shared by both classes. Reserved slots and the newest
// invoke-polymorphic/custom family stay at zero mass.
std::array<double, kOpcodeCount> base_distribution() {
  std::array<double, kOpcodeCount> p{};
  const OpcodeTable& table = opcode_table();
  for (std::size_t op = 0; op < kOpcodeCount; ++op) {
    if (table[static_cast<std::uint8_t>(op)].unused) continue;
    p[op] = 0.05;
  }
  for (std::size_t op = 0xfa; op <= 0xff; ++op) p[op] = 0.0;
  p[0x03] = p[0x06] = p[0x09] = 0.0;

  const std::pair<std::uint8_t, double> common[] = {
      {0x6e, 10.0}, {0x0c, 7.0}, {0x54, 7.0}, {0x1a, 5.0}, {0x70, 5.0},
      {0x71, 5.0},  {0x12, 5.0}, {0x0e, 4.0}, {0x22, 3.0}, {0x0a, 3.0},
      {0x38, 3.0},  {0x5b, 3.0}, {0x52, 3.0}, {0x28, 2.5}, {0x72, 2.5},
      {0x1f, 2.0},  {0x11, 2.0}, {0x62, 2.0}, {0x39, 2.0}, {0x59, 1.5},
      {0x46, 1.0},  {0x13, 1.0}, {0x0f, 1.0}, {0xd8, 1.0}, {0x55, 1.0},
      {0x0d, 0.8},  {0x27, 0.5}, {0x1d, 0.3}, {0x1e, 0.3}, {0x69, 1.0},
      {0x60, 0.8},  {0x5c, 0.8}, {0x6f, 0.8}, {0x74, 0.5}, {0x23, 0.5},
      {0x21, 0.5},  {0x20, 0.5}, {0x1c, 0.6}, {0x07, 0.8}, {0x01, 0.6},
  };
  for (const auto& [op, w] : common) p[op] = w;

  double sum = 0.0;
  for (double v : p) sum += v;
  for (double& v : p) v /= sum;
  return p;
}

// Ten (gain, loss, fraction-of-loss-bin) transfers: exactly 20 bins differ.
std::array<double, kOpcodeCount> malware_distribution(
    const std::array<double, kOpcodeCount>& base) {
  struct Transfer {
    std::uint8_t gain;
    std::uint8_t loss;
    double fraction;
  };
  constexpr Transfer kTransfers[] = {
      {0x1a, 0x54, 0.35}, {0x71, 0x52, 0.35}, {0x62, 0x5b, 0.30},
      {0x0a, 0x0e, 0.25}, {0x13, 0x11, 0.30}, {0x1d, 0x70, 0.06},
      {0x1e, 0x72, 0.12}, {0x23, 0x28, 0.15}, {0x46, 0x1f, 0.20},
      {0x60, 0x38, 0.12},
  };
  auto p = base;
  for (const auto& t : kTransfers) {
    const double delta = t.fraction * base[t.loss];
    p[t.gain] += delta;
    p[t.loss] -= delta;
  }
  return p;
}

SynthComponent make_component(std::string name, Label label,
                              const std::array<double, kOpcodeCount>& p) {
  SynthComponent c;
  c.name = std::move(name);
  c.label = label;
  c.weight = 1.0;
  c.length_min = 200;
  c.length_max = 4000;
  c.concentration = 300.0;
  c.probabilities = p;
  return c;
}

// Largest-remainder allocation of n rows across component weights.
std::vector<std::size_t> allocate(std::size_t n,
                                  const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  std::vector<std::size_t> out(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t used = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(n) * weights[i] / total;
    out[i] = static_cast<std::size_t>(std::floor(exact));
    used += out[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < n; ++k, ++used) ++out[remainders[k].second];
  return out;
}

void sample_app(const SynthComponent& c, Rng& rng,
                std::span<double> counts) {
  const std::uint64_t length =
      c.length_min + rng.below(c.length_max - c.length_min + 1);

  std::array<double, kOpcodeCount> p = c.probabilities;
  if (c.concentration > 0.0) {
    double sum = 0.0;
    for (std::size_t j = 0; j < kOpcodeCount; ++j) {
      p[j] = p[j] > 0.0 ? rng.gamma(c.concentration * p[j]) : 0.0;
      sum += p[j];
    }
    for (double& v : p) v /= sum;
  }
  std::array<double, kOpcodeCount> cdf{};
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t j = 0; j < kOpcodeCount; ++j) {
    acc += p[j];
    cdf[j] = acc;
    if (p[j] > 0.0) last = j;
  }
  for (std::size_t j = last; j < kOpcodeCount; ++j) cdf[j] = 2.0;

  std::fill(counts.begin(), counts.end(), 0.0);
  for (std::uint64_t i = 0; i < length; ++i) {
    const double u = rng.uniform() * acc;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    counts[static_cast<std::size_t>(it - cdf.begin())] += 1.0;
  }
}

}  // namespace

void SynthProfile::validate() const {
  if (components.empty()) invalid("profile has no components");
  for (const auto& c : components) {
    double sum = 0.0;
    for (std::size_t j = 0; j < kOpcodeCount; ++j) {
      if (!(c.probabilities[j] >= 0.0))
        invalid(c.name + ": negative or NaN mass at " +
                opcode_column_name(static_cast<std::uint8_t>(j)));
      sum += c.probabilities[j];
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
      invalid(c.name + ": probabilities sum to " + csv::format_double(sum));
    if (!(c.weight > 0.0)) invalid(c.name + ": weight must be positive");
    if (c.length_min < 1 || c.length_max < c.length_min)
      invalid(c.name + ": need 1 <= length_min <= length_max");
    if (!(c.concentration >= 0.0))
      invalid(c.name + ": concentration must be >= 0");
  }
}

SynthProfile default_profile() {
  const auto base = base_distribution();
  SynthProfile profile;
  profile.components.push_back(make_component("benign", Label::kBenign, base));
  profile.components.push_back(
      make_component("malware", Label::kMalware, malware_distribution(base)));
  return profile;
}

SynthProfile benign_mode_profile() {
  SynthProfile profile = default_profile();
  profile.components[0].weight = 0.65;

  // Large apps with a distinct, benign-only opcode mix.
  auto p = base_distribution();
  const std::pair<std::uint8_t, double> shifts[] = {
      {0x6e, 0.5}, {0x12, 0.6}, {0xd8, 3.0}, {0x90, 8.0}, {0x44, 6.0},
      {0x4b, 6.0}, {0x35, 8.0}, {0x01, 2.0},
  };
  for (const auto& [op, factor] : shifts) p[op] *= factor;
  double sum = 0.0;
  for (double v : p) sum += v;
  for (double& v : p) v /= sum;

  SynthComponent large = make_component("benign_large", Label::kBenign, p);
  large.weight = 0.35;
  large.length_min = 30000;
  large.length_max = 60000;
  profile.components.push_back(std::move(large));
  return profile;
}

SynthProfile parse_profile(std::string_view text) {
  std::map<std::string, std::string, std::less<>> kv;
  for (auto line : csv::lines(text)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) invalid("expected key = value: " + t);
    kv[trim(std::string_view(t).substr(0, eq))] =
        trim(std::string_view(t).substr(eq + 1));
  }
  const auto comps = kv.find("components");
  if (comps == kv.end()) invalid("missing 'components' key");

  auto number = [&](const std::string& key, const std::string& value) {
    const auto v = csv::parse_double(value);
    if (!v) invalid("bad number for " + key + ": " + value);
    return *v;
  };

  SynthProfile profile;
  std::stringstream names(comps->second);
  std::string name;
  while (std::getline(names, name, ',')) {
    name = trim(name);
    if (name.empty()) continue;
    SynthComponent c;
    c.name = name;
    const std::string prefix = name + ".";
    bool has_label = false;
    for (auto it = kv.lower_bound(prefix);
         it != kv.end() && it->first.compare(0, prefix.size(), prefix) == 0;
         ++it) {
      const std::string key = it->first.substr(prefix.size());
      if (key == "label") {
        try {
          c.label = parse_label(it->second);
        } catch (const Error&) {
          invalid(it->first + ": unknown label " + it->second);
        }
        has_label = true;
      } else if (key == "weight") {
        c.weight = number(it->first, it->second);
      } else if (key == "length_min") {
        c.length_min = static_cast<std::uint64_t>(number(it->first, it->second));
      } else if (key == "length_max") {
        c.length_max = static_cast<std::uint64_t>(number(it->first, it->second));
      } else if (key == "concentration") {
        c.concentration = number(it->first, it->second);
      } else if (key.size() == 5 && key.compare(0, 3, "op_") == 0) {
        unsigned op = 0;
        const auto res =
            std::from_chars(key.data() + 3, key.data() + 5, op, 16);
        if (res.ec != std::errc{} || res.ptr != key.data() + 5)
          invalid("bad opcode key " + it->first);
        c.probabilities[op] = number(it->first, it->second);
      } else {
        invalid("unknown key " + it->first);
      }
    }
    if (!has_label) invalid(name + ": missing label");
    profile.components.push_back(std::move(c));
  }
  profile.validate();
  return profile;
}

SynthProfile load_profile(const std::filesystem::path& path) {
  return parse_profile(csv::read_file(path));
}

std::string render_profile(const SynthProfile& profile) {
  std::string out = "components = ";
  for (std::size_t i = 0; i < profile.components.size(); ++i) {
    if (i) out += ", ";
    out += profile.components[i].name;
  }
  out += '\n';
  for (const auto& c : profile.components) {
    const std::string p = c.name + ".";
    out += p + "label = " + std::string(label_name(c.label)) + '\n';
    out += p + "weight = " + csv::format_double(c.weight) + '\n';
    out += p + "length_min = " + std::to_string(c.length_min) + '\n';
    out += p + "length_max = " + std::to_string(c.length_max) + '\n';
    out += p + "concentration = " + csv::format_double(c.concentration) + '\n';
    for (std::size_t j = 0; j < kOpcodeCount; ++j) {
      if (c.probabilities[j] == 0.0) continue;
      out += p + opcode_column_name(static_cast<std::uint8_t>(j)) + " = " +
             csv::format_double(c.probabilities[j]) + '\n';
    }
  }
  return out;
}

FeatureMatrix synth_corpus(std::size_t n_benign, std::size_t n_malware,
                           const SynthProfile& profile, std::uint64_t seed) {
  if (n_benign + n_malware == 0)
    throw Error(ErrorCode::kInvalidCounts, "synthetic corpus needs at least one row");
  profile.validate();
  FeatureMatrix m = make_opcode_matrix();
  m.values = Matrix(n_benign + n_malware, kOpcodeCount);
  m.app_ids.reserve(n_benign + n_malware);
  m.labels.reserve(n_benign + n_malware);

  Rng rng(seed);
  for (Label label : {Label::kBenign, Label::kMalware}) {
    const std::size_t n = label == Label::kBenign ? n_benign : n_malware;
    if (n == 0) continue;
    std::vector<const SynthComponent*> comps;
    std::vector<double> weights;
    for (const auto& c : profile.components) {
      if (c.label != label) continue;
      comps.push_back(&c);
      weights.push_back(c.weight);
    }
    if (comps.empty())
      invalid("no component for class " + std::string(label_name(label)));
    const auto alloc = allocate(n, weights);
    std::size_t idx = 0;
    for (std::size_t ci = 0; ci < comps.size(); ++ci) {
      for (std::size_t k = 0; k < alloc[ci]; ++k, ++idx) {
        const std::size_t r = m.labels.size();
        sample_app(*comps[ci], rng, m.values.row(r));
        char id[64];
        std::snprintf(id, sizeof id, "synth-%c-%06zu",
                      label == Label::kMalware ? 'm' : 'b', idx);
        m.app_ids.emplace_back(id);
        m.labels.push_back(label);
      }
    }
  }
  return m;
}

}  // namespace dexfreq
