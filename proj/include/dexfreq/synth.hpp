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

#ifndef DEXFREQ_SYNTH_HPP_
#define DEXFREQ_SYNTH_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dexfreq/corpus.hpp"

namespace dexfreq {

// One mixture component of a class-conditional opcode generator. An app drawn
// from it has a length uniform in [length_min, length_max], per-app opcode
// probabilities drawn from Dirichlet(concentration * probabilities) (or the
// probabilities themselves when concentration is 0), and multinomial counts.
struct SynthComponent {
  std::string name;
  Label label = Label::kBenign;
  double weight = 1.0;  // relative share within its class
  std::uint64_t length_min = 200;
  std::uint64_t length_max = 4000;
  double concentration = 0.0;
  std::array<double, kOpcodeCount> probabilities{};
};

struct SynthProfile {
  std::vector<SynthComponent> components;

  // Throws Error{kInvalidProfile} on negative mass, a probability vector not
  // summing to 1 within 1e-9, or bad lengths/weights.
  void validate() const;
};

// Benign and malware share a base distribution and differ on exactly 20 bins.
SynthProfile default_profile();

// default_profile() plus a large-app benign-only mode that k-means separates.
SynthProfile benign_mode_profile();

// Key-value document:
//   components = benign, malware
//   benign.label = benign
//   benign.weight = 1
//   benign.length_min = 200
//   benign.length_max = 4000
//   benign.concentration = 300
//   benign.op_1a = 0.05
// Lines starting with '#' are comments; unlisted bins have probability 0.
SynthProfile parse_profile(std::string_view text);
SynthProfile load_profile(const std::filesystem::path& path);
std::string render_profile(const SynthProfile& profile);

// Raw-count matrix with n_benign benign rows followed by n_malware malware
// rows. Deterministic for a given seed. Throws Error{kInvalidCounts} when
// both counts are zero.
FeatureMatrix synth_corpus(std::size_t n_benign, std::size_t n_malware,
                           const SynthProfile& profile, std::uint64_t seed);

}  // namespace dexfreq

#endif  // DEXFREQ_SYNTH_HPP_
