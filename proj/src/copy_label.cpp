#include "prom/copy_label.hpp"

#include <cstring>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace prom {

namespace {

std::string window_key(std::span<const int> seq, std::size_t i,
                       std::size_t n) {
  std::string key(n * sizeof(int), '\0');
  std::memcpy(key.data(), seq.data() + i, n * sizeof(int));
  return key;
}

}  // namespace

std::vector<std::uint8_t> label_copy_ids(std::span<const int> src,
                                         std::span<const int> tgt, int n) {
  if (n <= 0) throw std::invalid_argument("label_copy_ids: n must be >= 1");
  const std::size_t un = static_cast<std::size_t>(n);
  std::vector<std::uint8_t> labels(src.size(), 0);
  if (src.size() < un || tgt.size() < un) return labels;

  std::unordered_set<std::string> tgt_ngrams;
  for (std::size_t i = 0; i + un <= tgt.size(); ++i) {
    tgt_ngrams.insert(window_key(tgt, i, un));
  }
  for (std::size_t i = 0; i + un <= src.size(); ++i) {
    if (tgt_ngrams.count(window_key(src, i, un)) != 0) {
      for (std::size_t k = 0; k < un; ++k) labels[i + k] = 1;
    }
  }
  return labels;
}

CopyLabelMask label_copy_tokens(const TokenSeq& src, const TokenSeq& tgt,
                                int n) {
  std::unordered_map<std::string, int> table;
  std::vector<int> s = intern_tokens(src, table);
  std::vector<int> t = intern_tokens(tgt, table);
  return {label_copy_ids(s, t, n), n};
}

}  // namespace prom
