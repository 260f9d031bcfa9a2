#pragma once

#include <cstddef>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "prom/text.hpp"

namespace prom {

enum class EfdNorm { source, summary };

// Extractive fragments density: sum over shared fragments of length^2,
// divided by the source length (or summary length when norm == summary).
double efd(const TokenSeq& x, const TokenSeq& y,
           EfdNorm norm = EfdNorm::source);

// Density of sentence i against the concatenation of all other sentences.
// Requires at least two sentences.
double gsg_score(const TokenSeq& doc_tokens,
                 std::span<const SentenceSpan> sentences, std::size_t i);

// Mean shared-fragment length; 0 when nothing is shared.
double copy_length(const TokenSeq& x, const TokenSeq& y);

// Share of distinct target n-grams absent from the source. Requires
// y.size() >= n.
double ngram_novelty(const TokenSeq& x, const TokenSeq& y, int n);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

Prf make_prf(double precision, double recall);

// Precision/recall/F1 of distinct n-grams shared by source and prediction
// ("actual") against those shared by source and reference ("ought").
Prf copied_ngram_f1(const TokenSeq& src, const TokenSeq& ref,
                    const TokenSeq& pred, int n);

// Entities normalized to folded, single-spaced strings.
using EntitySet = std::set<std::string>;

struct EntityRecognizerOptions {
  bool use_capitalized_runs = true;
  // Folded gazetteer entries matched as contiguous token subsequences.
  std::vector<std::string> gazetteer;
  const std::unordered_set<std::string>* stopwords = nullptr;  // folded
};

const std::unordered_set<std::string>& builtin_entity_stopwords();
std::vector<std::string> load_gazetteer(const std::string& path);

// Default recognizer: maximal runs of capitalized tokens, excluding a lone
// sentence-initial stopword, plus gazetteer matches.
EntitySet recognize_entities(const std::string& text,
                             const EntityRecognizerOptions& opts = {});

using EntityRecognizer = std::function<EntitySet(const std::string&)>;

Prf entity_prf(const std::string& ref_text, const std::string& pred_text,
               const EntityRecognizer& recognizer);

enum class PositionStat { window_start, window_midpoint };

struct PositionHistogram {
  int bins = 0;
  std::vector<double> mass;  // sums to 1, or all zeros when nothing matched
};

// Streaming accumulator over (source, target) pairs: one count per source
// n-window whose n-gram occurs in the target, at the window's normalized
// source position. Merge is order-independent.
class OverlapHistogramAccumulator {
 public:
  OverlapHistogramAccumulator(int bins, int n,
                              PositionStat stat = PositionStat::window_start);

  void add(const TokenSeq& src, const TokenSeq& tgt);
  void merge(const OverlapHistogramAccumulator& other);
  PositionHistogram finalize() const;

  int bins() const { return bins_; }
  int order() const { return n_; }
  const std::vector<double>& counts() const { return counts_; }

 private:
  int bins_;
  int n_;
  PositionStat stat_;
  std::vector<double> counts_;
};

PositionHistogram overlap_position_histogram(
    std::span<const std::pair<TokenSeq, TokenSeq>> pairs, int n, int bins,
    PositionStat stat = PositionStat::window_start);

}  // namespace prom
