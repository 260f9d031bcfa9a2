#include "prom/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace prom {

namespace {

std::unordered_set<std::string> distinct_ngrams(const TokenSeq& seq, int n) {
  std::unordered_set<std::string> out;
  const std::size_t un = static_cast<std::size_t>(n);
  if (n <= 0 || seq.size() < un) return out;
  for (std::size_t i = 0; i + un <= seq.size(); ++i) {
    out.insert(ngram_key(std::span(seq.tokens).subspan(i, un)));
  }
  return out;
}

std::string fold_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

}  // namespace

double efd(const TokenSeq& x, const TokenSeq& y, EfdNorm norm) {
  if (x.empty()) throw std::invalid_argument("efd: empty source");
  const std::size_t denom = norm == EfdNorm::source ? x.size() : y.size();
  if (denom == 0) throw std::invalid_argument("efd: empty normalizer side");
  FragmentSet fs = extract_fragments(x, y);
  double sum = 0.0;
  for (const Fragment& f : fs.fragments) {
    sum += static_cast<double>(f.length) * static_cast<double>(f.length);
  }
  return sum / static_cast<double>(denom);
}

double gsg_score(const TokenSeq& doc_tokens,
                 std::span<const SentenceSpan> sentences, std::size_t i) {
  if (sentences.size() < 2) {
    throw std::invalid_argument("gsg_score: need at least two sentences");
  }
  if (i >= sentences.size()) {
    throw std::invalid_argument("gsg_score: sentence index out of range");
  }
  TokenSeq self;
  TokenSeq rest;
  self.case_folded = rest.case_folded = doc_tokens.case_folded;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    TokenSeq& dst = (s == i) ? self : rest;
    for (std::size_t t = sentences[s].start_token;
         t < sentences[s].end_token; ++t) {
      dst.tokens.push_back(doc_tokens.tokens[t]);
      dst.offsets.push_back(doc_tokens.offsets[t]);
    }
  }
  if (self.empty()) throw std::invalid_argument("gsg_score: empty sentence");
  if (rest.empty()) {
    throw std::invalid_argument("gsg_score: empty complement");
  }
  return efd(self, rest);
}

double copy_length(const TokenSeq& x, const TokenSeq& y) {
  FragmentSet fs = extract_fragments(x, y);
  if (fs.fragments.empty()) return 0.0;
  double sum = 0.0;
  for (const Fragment& f : fs.fragments) sum += static_cast<double>(f.length);
  return sum / static_cast<double>(fs.fragments.size());
}

double ngram_novelty(const TokenSeq& x, const TokenSeq& y, int n) {
  if (n <= 0) throw std::invalid_argument("ngram_novelty: n must be >= 1");
  if (y.size() < static_cast<std::size_t>(n)) {
    throw std::invalid_argument("ngram_novelty: target shorter than n");
  }
  auto ys = distinct_ngrams(y, n);
  auto xs = distinct_ngrams(x, n);
  std::size_t novel = 0;
  for (const std::string& g : ys) {
    if (xs.count(g) == 0) ++novel;
  }
  return static_cast<double>(novel) / static_cast<double>(ys.size());
}

Prf make_prf(double precision, double recall) {
  Prf out;
  out.precision = precision;
  out.recall = recall;
  out.f1 = (precision + recall) > 0.0
               ? 2.0 * precision * recall / (precision + recall)
               : 0.0;
  return out;
}

Prf copied_ngram_f1(const TokenSeq& src, const TokenSeq& ref,
                    const TokenSeq& pred, int n) {
  auto s = distinct_ngrams(src, n);
  auto r = distinct_ngrams(ref, n);
  auto p = distinct_ngrams(pred, n);

  std::unordered_set<std::string> ought;
  for (const std::string& g : r) {
    if (s.count(g) != 0) ought.insert(g);
  }
  std::unordered_set<std::string> actual;
  for (const std::string& g : p) {
    if (s.count(g) != 0) actual.insert(g);
  }
  std::size_t hit = 0;
  for (const std::string& g : actual) {
    if (ought.count(g) != 0) ++hit;
  }
  double precision = actual.empty() ? 0.0
                                    : static_cast<double>(hit) /
                                          static_cast<double>(actual.size());
  double recall = ought.empty() ? 0.0
                                : static_cast<double>(hit) /
                                      static_cast<double>(ought.size());
  return make_prf(precision, recall);
}

const std::unordered_set<std::string>& builtin_entity_stopwords() {
  static const std::unordered_set<std::string> kStop = {
      "a",    "an",      "and",   "as",    "at",    "but",   "by",
      "for",  "he",      "her",   "his",   "how",   "i",     "if",
      "in",   "it",      "its",   "most",  "my",    "now",   "of",
      "on",   "or",      "our",   "she",   "so",    "some",  "that",
      "the",  "their",   "then",  "there", "these", "they",  "this",
      "those", "to",     "we",    "what",  "when",  "where", "which",
      "while", "who",    "why",   "with",  "yet",   "you",   "after",
      "all",  "also",    "before", "both", "even",  "her",   "here",
      "however", "many", "meanwhile", "more", "no",  "not",   "one",
      "since", "such",   "two",   "until", "your",  "according"};
  return kStop;
}

std::vector<std::string> load_gazetteer(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open gazetteer file: " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    TokenSeq toks = tokenize(line, true);
    if (toks.empty()) continue;
    std::string norm;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (i) norm.push_back(' ');
      norm += toks.tokens[i];
    }
    out.push_back(norm);
  }
  return out;
}

EntitySet recognize_entities(const std::string& text,
                             const EntityRecognizerOptions& opts) {
  EntitySet out;
  TokenSeq raw = tokenize(text, false);
  if (raw.empty()) return out;

  if (opts.use_capitalized_runs) {
    const std::unordered_set<std::string>& stop =
        opts.stopwords ? *opts.stopwords : builtin_entity_stopwords();
    std::vector<SentenceSpan> sentences = split_sentences(text, raw);
    auto is_cap = [&](std::size_t t) {
      char c = raw.tokens[t][0];
      return c >= 'A' && c <= 'Z';
    };
    for (const SentenceSpan& sp : sentences) {
      std::size_t t = sp.start_token;
      while (t < sp.end_token) {
        if (!is_cap(t)) {
          ++t;
          continue;
        }
        std::size_t e = t;
        while (e < sp.end_token && is_cap(e)) ++e;
        bool lone_initial_stopword =
            (e - t == 1) && t == sp.start_token &&
            stop.count(fold_ascii(raw.tokens[t])) != 0;
        if (!lone_initial_stopword) {
          std::string norm;
          for (std::size_t k = t; k < e; ++k) {
            if (k > t) norm.push_back(' ');
            norm += fold_ascii(raw.tokens[k]);
          }
          out.insert(norm);
        }
        t = e;
      }
    }
  }

  if (!opts.gazetteer.empty()) {
    std::vector<std::string> folded;
    folded.reserve(raw.size());
    for (const std::string& t : raw.tokens) folded.push_back(fold_ascii(t));
    for (const std::string& entry : opts.gazetteer) {
      TokenSeq etoks = tokenize(entry, true);
      if (etoks.empty() || etoks.size() > folded.size()) continue;
      for (std::size_t i = 0; i + etoks.size() <= folded.size(); ++i) {
        bool match = true;
        for (std::size_t k = 0; k < etoks.size(); ++k) {
          if (folded[i + k] != etoks.tokens[k]) {
            match = false;
            break;
          }
        }
        if (match) {
          out.insert(entry);
          break;
        }
      }
    }
  }
  return out;
}

Prf entity_prf(const std::string& ref_text, const std::string& pred_text,
               const EntityRecognizer& recognizer) {
  EntitySet ref = recognizer(ref_text);
  EntitySet pred = recognizer(pred_text);
  std::size_t hit = 0;
  for (const std::string& e : pred) {
    if (ref.count(e) != 0) ++hit;
  }
  double precision = pred.empty() ? 0.0
                                  : static_cast<double>(hit) /
                                        static_cast<double>(pred.size());
  double recall = ref.empty() ? 0.0
                              : static_cast<double>(hit) /
                                    static_cast<double>(ref.size());
  return make_prf(precision, recall);
}

OverlapHistogramAccumulator::OverlapHistogramAccumulator(int bins, int n,
                                                         PositionStat stat)
    : bins_(bins), n_(n), stat_(stat), counts_(0) {
  if (bins < 2) {
    throw std::invalid_argument("overlap histogram: bins must be >= 2");
  }
  if (n <= 0) throw std::invalid_argument("overlap histogram: n must be >= 1");
  counts_.assign(static_cast<std::size_t>(bins), 0.0);
}

void OverlapHistogramAccumulator::add(const TokenSeq& src,
                                      const TokenSeq& tgt) {
  const std::size_t un = static_cast<std::size_t>(n_);
  if (src.size() < un || tgt.size() < un) return;
  auto tgt_ngrams = distinct_ngrams(tgt, n_);
  for (std::size_t i = 0; i + un <= src.size(); ++i) {
    if (tgt_ngrams.count(
            ngram_key(std::span(src.tokens).subspan(i, un))) == 0) {
      continue;
    }
    double pos = 0.0;
    if (src.size() > 1) {
      double stat_index = static_cast<double>(i);
      if (stat_ == PositionStat::window_midpoint) {
        stat_index += (static_cast<double>(n_) - 1.0) / 2.0;
      }
      pos = stat_index / static_cast<double>(src.size() - 1);
    }
    int b = static_cast<int>(pos * bins_);
    b = std::clamp(b, 0, bins_ - 1);
    counts_[static_cast<std::size_t>(b)] += 1.0;
  }
}

void OverlapHistogramAccumulator::merge(
    const OverlapHistogramAccumulator& other) {
  if (other.bins_ != bins_ || other.n_ != n_ || other.stat_ != stat_) {
    throw std::invalid_argument("overlap histogram: incompatible merge");
  }
  for (std::size_t b = 0; b < counts_.size(); ++b) {
    counts_[b] += other.counts_[b];
  }
}

PositionHistogram OverlapHistogramAccumulator::finalize() const {
  PositionHistogram h;
  h.bins = bins_;
  h.mass.assign(counts_.size(), 0.0);
  double total = 0.0;
  for (double c : counts_) total += c;
  if (total > 0.0) {
    for (std::size_t b = 0; b < counts_.size(); ++b) {
      h.mass[b] = counts_[b] / total;
    }
  }
  return h;
}

PositionHistogram overlap_position_histogram(
    std::span<const std::pair<TokenSeq, TokenSeq>> pairs, int n, int bins,
    PositionStat stat) {
  OverlapHistogramAccumulator acc(bins, n, stat);
  for (const auto& [src, tgt] : pairs) acc.add(src, tgt);
  return acc.finalize();
}

}  // namespace prom
