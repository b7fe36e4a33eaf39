// SPDX-License-Identifier: Apache-2.0
//
// Synthetic charts of accounts and noisy custom descriptions, for running the
// pipeline end to end without real company data.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "topoledger/augment.h"
#include "topoledger/coa_graph.h"

namespace topoledger {

struct SynthConfig {
  std::string config_id = "synthetic";
  std::size_t n_vertices = 100;
  std::size_t max_children = 4;
  // 0 = unbounded. Otherwise vertices attach only to parents shallower than
  // max_depth, so the root-to-leaf depth never exceeds it.
  std::size_t max_depth = 0;
  // Terms are "<modifier> <head>" or bare heads; empty means the built-in
  // accounting word lists.
  std::vector<std::string> heads;
  std::vector<std::string> modifiers;
  double synonym_probability = 0.0;
  double drop_probability = 0.0;
  double abbreviation_probability = 0.0;
  std::size_t records_per_vertex = 1;
  std::size_t companies = 0;  // > 0 tags each record with a random company id
  std::uint64_t seed = 0;

  void validate() const;
};

// Built-in pools and the accounting synonym table.
std::span<const std::string_view> default_heads();
std::span<const std::string_view> default_modifiers();
std::span<const std::pair<std::string_view, std::string_view>> synonym_table();
std::span<const std::pair<std::string_view, std::string_view>> abbreviation_table();

// Random tree by sequential attachment: vertex i picks a uniformly random
// earlier vertex that still has fewer than max_children children (and, with
// a depth bound, sits above max_depth). Labels are
// "<parent term> / <own term>" (the root carries its bare term).
// Throws Error(kInvalidArgument) when the pools cannot give n unique terms.
CoaTree generate_coa(const SynthConfig& cfg);

// records_per_vertex noisy variants of every label. Noise acts per word:
// synonym swap, abbreviation, drop (at least one word always survives).
std::vector<MappingRecord> generate_records(const CoaTree& tree, const SynthConfig& cfg);

struct SynthCorpus {
  CoaCatalog catalog;
  std::vector<MappingRecord> records;  // config by config, in config order
};

// n_configs COAs "cfg1".."cfgN" sharing `cfg` except the id and seed (config
// c, counted from 0, uses splitmix64(seed + c)). Company ids get the config id
// as prefix so companies never span configs.
SynthCorpus generate_corpus(const SynthConfig& cfg, std::size_t n_configs, std::uint64_t seed);

// Applies the noise model to a single label; exposed for tests.
std::string perturb_label(std::string_view label, const SynthConfig& cfg, Rng& rng);

}  // namespace topoledger
