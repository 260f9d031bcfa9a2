#include "prom/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

namespace prom {

namespace {

inline bool is_word_byte(unsigned char c) {
  return std::isalnum(c) != 0 || c >= 0x80;
}

inline char fold_byte(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  if (u >= 'A' && u <= 'Z') return static_cast<char>(u - 'A' + 'a');
  return c;
}

std::string fold_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = fold_byte(c);
  return out;
}

}  // namespace

TokenSeq tokenize(std::string_view text, bool fold_case) {
  TokenSeq out;
  out.case_folded = fold_case;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < n && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
    std::string_view raw = text.substr(i, j - i);
    out.tokens.push_back(fold_case ? fold_ascii(raw) : std::string(raw));
    out.offsets.emplace_back(i, j);
    i = j;
  }
  return out;
}

const std::unordered_set<std::string>& builtin_abbreviations() {
  static const std::unordered_set<std::string> kAbbrev = [] {
    std::unordered_set<std::string> s = {
        "mr",   "mrs",  "ms",   "dr",   "prof", "rev",  "gen",  "sen",
        "rep",  "gov",  "capt", "col",  "lt",   "maj",  "sgt",  "st",
        "mt",   "ft",   "jr",   "sr",   "vs",   "etc",  "inc",  "ltd",
        "co",   "corp", "univ", "dept", "approx", "ave", "blvd", "rd",
        "hwy",  "fig",  "figs", "eq",   "eqs",  "sec",  "secs", "ch",
        "pp",   "vol",  "vols", "ed",   "eds",  "al",   "jan",  "feb",
        "mar",  "apr",  "jun",  "jul",  "aug",  "sep",  "sept", "oct",
        "nov",  "dec"};
    for (char c = 'a'; c <= 'z'; ++c) s.insert(std::string(1, c));
    return s;
  }();
  return kAbbrev;
}

std::unordered_set<std::string> load_abbreviations(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open abbreviation file: " + path);
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    while (!line.empty() && line.back() == '.') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.insert(fold_ascii(line));
  }
  return out;
}

std::vector<SentenceSpan> split_sentences(std::string_view text,
                                          const TokenSeq& toks,
                                          const SplitOptions& opts) {
  std::vector<SentenceSpan> spans;
  if (toks.empty()) return spans;
  const std::unordered_set<std::string>& abbrev =
      opts.abbreviations ? *opts.abbreviations : builtin_abbreviations();

  std::size_t start = 0;
  for (std::size_t k = 0; k + 1 < toks.size(); ++k) {
    std::string_view gap = text.substr(
        toks.offsets[k].second,
        toks.offsets[k + 1].first - toks.offsets[k].second);
    bool strong = false;  // ! or ? present
    bool period = false;
    std::size_t last_term = std::string_view::npos;
    for (std::size_t p = 0; p < gap.size(); ++p) {
      char c = gap[p];
      if (c == '!' || c == '?') {
        strong = true;
        last_term = p;
      } else if (c == '.') {
        period = true;
        last_term = p;
      }
    }
    if (!strong && !period) continue;
    bool ws_after = false;
    for (std::size_t p = last_term + 1; p < gap.size(); ++p) {
      if (std::isspace(static_cast<unsigned char>(gap[p]))) {
        ws_after = true;
        break;
      }
    }
    if (!ws_after) continue;
    char first = text[toks.offsets[k + 1].first];
    if (!(first >= 'A' && first <= 'Z')) continue;
    if (!strong && opts.use_abbreviation_guard) {
      std::string prev = toks.case_folded ? toks.tokens[k]
                                          : fold_ascii(toks.tokens[k]);
      if (abbrev.count(prev) != 0) continue;
    }
    spans.push_back({start, k + 1});
    start = k + 1;
  }
  spans.push_back({start, toks.size()});
  return spans;
}

std::vector<SentenceSpan> split_sentences(std::string_view text,
                                          const SplitOptions& opts) {
  TokenSeq toks = tokenize(text, false);
  return split_sentences(text, toks, opts);
}

std::string ngram_key(std::span<const std::string> window) {
  std::string key;
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (i) key.push_back('\x1e');
    key += window[i];
  }
  return key;
}

std::vector<std::string> ngram_key_tokens(const std::string& key) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = key.find('\x1e', start);
    if (pos == std::string::npos) {
      out.push_back(key.substr(start));
      break;
    }
    out.push_back(key.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

NGramCounts extract_ngrams(const TokenSeq& seq, int n) {
  if (n <= 0) throw std::invalid_argument("extract_ngrams: n must be >= 1");
  NGramCounts counts;
  const std::size_t un = static_cast<std::size_t>(n);
  if (seq.size() < un) return counts;
  for (std::size_t i = 0; i + un <= seq.size(); ++i) {
    counts[ngram_key(std::span(seq.tokens).subspan(i, un))] += 1;
  }
  return counts;
}

std::vector<int> intern_tokens(const TokenSeq& seq,
                               std::unordered_map<std::string, int>& table) {
  std::vector<int> ids;
  ids.reserve(seq.size());
  for (const std::string& t : seq.tokens) {
    auto [it, inserted] =
        table.emplace(t, static_cast<int>(table.size()));
    ids.push_back(it->second);
  }
  return ids;
}

FragmentSet extract_fragments(const TokenSeq& x, const TokenSeq& y) {
  FragmentSet fs;
  fs.x_len = x.size();
  fs.y_len = y.size();
  if (x.empty() || y.empty()) return fs;

  std::unordered_map<std::string, int> table;
  std::vector<int> xs = intern_tokens(x, table);
  std::vector<int> ys = intern_tokens(y, table);

  std::unordered_map<int, std::vector<std::size_t>> where;
  for (std::size_t i = 0; i < xs.size(); ++i) where[xs[i]].push_back(i);

  std::size_t j = 0;
  while (j < ys.size()) {
    std::size_t best_len = 0;
    std::size_t best_src = 0;
    auto it = where.find(ys[j]);
    if (it != where.end()) {
      for (std::size_t i : it->second) {
        std::size_t l = 0;
        while (j + l < ys.size() && i + l < xs.size() &&
               xs[i + l] == ys[j + l]) {
          ++l;
        }
        if (l > best_len) {  // strictly longer keeps the leftmost occurrence
          best_len = l;
          best_src = i;
        }
      }
    }
    if (best_len > 0) {
      fs.fragments.push_back({best_src, j, best_len});
      j += best_len;
    } else {
      ++j;
    }
  }
  return fs;
}

}  // namespace prom
