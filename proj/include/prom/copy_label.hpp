#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "prom/text.hpp"

namespace prom {

// Per-source-token copy labels: labels[i] == 1 iff some n-window of the
// source containing position i matches a target n-gram.
struct CopyLabelMask {
  std::vector<std::uint8_t> labels;
  int n = 0;
};

// Marks every source position covered by an n-window whose n-gram occurs in
// the target (distinct-set matching). Sources shorter than n get all zeros.
std::vector<std::uint8_t> label_copy_ids(std::span<const int> src,
                                         std::span<const int> tgt, int n);

CopyLabelMask label_copy_tokens(const TokenSeq& src, const TokenSeq& tgt,
                                int n);

}  // namespace prom
