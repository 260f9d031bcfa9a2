#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace prom {

// Word-level tokenization. A token is a maximal run of alphanumeric or
// non-ASCII bytes; whitespace and ASCII punctuation delimit tokens and are
// not emitted. Offsets index the original string, so slicing it reproduces
// each token before case folding.
struct TokenSeq {
  std::vector<std::string> tokens;
  std::vector<std::pair<std::size_t, std::size_t>> offsets;  // [start, end)
  bool case_folded = false;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
};

TokenSeq tokenize(std::string_view text, bool fold_case = true);

// Half-open token-index range of one sentence.
struct SentenceSpan {
  std::size_t start_token = 0;
  std::size_t end_token = 0;
};

struct SplitOptions {
  bool use_abbreviation_guard = true;
  // Folded abbreviation words (no trailing period). nullptr selects the
  // built-in list.
  const std::unordered_set<std::string>* abbreviations = nullptr;
};

const std::unordered_set<std::string>& builtin_abbreviations();
std::unordered_set<std::string> load_abbreviations(const std::string& path);

// Sentence boundaries sit between tokens whose gap in the raw text contains
// terminal punctuation (. ! ?) followed by whitespace, when the next token
// starts with an uppercase letter. A '.' does not end a sentence after an
// abbreviation when the guard is on. Spans partition [0, toks.size()).
std::vector<SentenceSpan> split_sentences(std::string_view text,
                                          const TokenSeq& toks,
                                          const SplitOptions& opts = {});
std::vector<SentenceSpan> split_sentences(std::string_view text,
                                          const SplitOptions& opts = {});

// n-gram multiset, keyed by the window's tokens joined with '\x1e'.
using NGramCounts = std::unordered_map<std::string, int>;

std::string ngram_key(std::span<const std::string> window);
std::vector<std::string> ngram_key_tokens(const std::string& key);
NGramCounts extract_ngrams(const TokenSeq& seq, int n);

// Shared verbatim fragment: y[tgt_start, tgt_start+length) ==
// x[src_start, src_start+length).
struct Fragment {
  std::size_t src_start = 0;
  std::size_t tgt_start = 0;
  std::size_t length = 0;
};

struct FragmentSet {
  std::vector<Fragment> fragments;  // ordered by tgt_start
  std::size_t x_len = 0;
  std::size_t y_len = 0;
};

// Greedy left-to-right scan of y: at each position take the longest match
// found anywhere in x (leftmost occurrence on ties), emit it and jump past
// it; unmatched positions advance by one.
FragmentSet extract_fragments(const TokenSeq& x, const TokenSeq& y);

// Maps each token to a dense int id via the shared table (insertion order).
std::vector<int> intern_tokens(const TokenSeq& seq,
                               std::unordered_map<std::string, int>& table);

}  // namespace prom
