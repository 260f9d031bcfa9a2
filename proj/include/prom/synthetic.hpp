#pragma once

#include <cstdint>
#include <vector>

#include "prom/model.hpp"

namespace prom {

// Generator for a self-contained copy task. Sources interleave common
// filler runs with phrases drawn from a rare-token bank at the top of the
// vocabulary; targets wrap those phrases in a fixed function-token template
// (open 3, separator 4, close 5). Filler ids never occur in targets and
// function ids never occur in sources, so with min_phrase_len >= n the
// copy labels mark exactly the phrase positions.
struct SyntheticConfig {
  int vocab_size = 200;
  int phrase_token_count = 120;  // size of the rare bank
  int sample_count = 2000;
  int max_phrases = 3;  // 1..max_phrases per sample
  int min_phrase_len = 2;
  int max_phrase_len = 4;
  int min_filler = 1;
  int max_filler = 3;
  int n = 2;  // copy label order
  std::uint64_t seed = 0;

  void validate() const;
  int filler_lo() const { return 6; }
  int filler_hi() const { return vocab_size - phrase_token_count; }
  int bank_lo() const { return vocab_size - phrase_token_count; }
  int max_src_len() const {
    return max_phrases * max_phrase_len + (max_phrases + 1) * max_filler;
  }
  int max_tgt_len() const {
    return max_phrases * max_phrase_len + max_phrases + 1;
  }
};

std::vector<Sample> make_synthetic_task(const SyntheticConfig& cfg);

}  // namespace prom
