#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "prom/metrics.hpp"
#include "prom/text.hpp"

namespace prom {

struct Document {
  std::string id;
  std::string text;
  std::optional<std::string> genre;
  TokenSeq tokens;                      // folded tokens of text
  std::vector<SentenceSpan> sentences;  // spans over tokens
  // Character start of each sentence; sentence i owns text
  // [char_starts[i], char_starts[i+1]) and char_starts.back() == text.size(),
  // so sentence slices concatenate back to the full text.
  std::vector<std::size_t> char_starts;

  std::string sentence_text(std::size_t i) const;
  std::size_t sentence_count() const { return sentences.size(); }
};

Document make_document(std::string id, std::string text,
                       std::optional<std::string> genre = std::nullopt,
                       const SplitOptions& split = {});

enum class Provenance { nat, chunk, lead };
const char* provenance_name(Provenance p);

enum class Orientation {
  selected_as_document,  // document := selected sentences, summary := rest
  selected_as_summary    // document := rest, summary := selected sentences
};

struct PseudoPair {
  std::string id;
  std::string document_text;
  std::string summary_text;
  Provenance provenance = Provenance::nat;
  double efd = 0.0;
  std::vector<std::size_t> selected_indices;  // top-scoring sentence indices
};

struct BuildConfig {
  double select_ratio = 0.25;   // share of sentences placed on selected side
  std::size_t max_sents = 8;    // chunk length
  std::size_t min_sents = 4;    // minimum size of the final chunk
  double min_efd = 3.0;
  std::size_t lead_k = 3;       // leading sentences forming a lead summary
  Orientation orientation = Orientation::selected_as_document;
  std::set<Provenance> modes = {Provenance::nat, Provenance::chunk};

  void validate() const;  // throws std::invalid_argument
};

// Drop bookkeeping for one build run; merge is order-independent.
struct BuildManifest {
  std::uint64_t documents = 0;
  std::uint64_t pairs_emitted = 0;
  std::uint64_t nat_built = 0;
  std::uint64_t chunk_built = 0;
  std::uint64_t lead_built = 0;
  // Selection skips cover both nat and chunk pair construction.
  std::uint64_t selection_skipped_too_few_sentences = 0;
  std::uint64_t selection_skipped_empty_side = 0;
  std::uint64_t chunks_discarded_below_min = 0;
  std::uint64_t lead_skipped_too_short = 0;
  std::uint64_t dropped_below_min_efd = 0;
  std::uint64_t documents_failed = 0;

  void merge(const BuildManifest& other);
};

// Number of sentences placed on the selected side: round-half-up of
// ratio * count, floored at 1.
std::size_t selected_sentence_count(std::size_t sentence_count, double ratio);

// Scores every sentence against the rest of the document, selects the
// top-scoring ones (ties go to the lower index), and splits the text into
// selected/remainder sides per the orientation. Returns nullopt when the
// document has fewer than two usable sentences or a side would be empty.
std::optional<PseudoPair> build_nat(const Document& doc,
                                    const BuildConfig& cfg,
                                    BuildManifest* manifest = nullptr);

// Splits the document into consecutive runs of max_sents sentences (the
// final run is kept only when it has at least min_sents) and builds a nat
// pair per surviving chunk.
std::vector<PseudoPair> build_chunk(const Document& doc,
                                    const BuildConfig& cfg,
                                    BuildManifest* manifest = nullptr);

// First lead_k sentences become the summary, the remainder the document.
// Needs more than lead_k sentences.
std::optional<PseudoPair> build_lead(const Document& doc,
                                     const BuildConfig& cfg,
                                     BuildManifest* manifest = nullptr);

// Keeps pairs with efd >= min_efd, preserving order; counts drops.
std::vector<PseudoPair> filter_min_efd(std::vector<PseudoPair> pairs,
                                       double min_efd,
                                       BuildManifest* manifest = nullptr);

// Enabled modes in nat, chunk, lead order; the min-EFD filter applies to nat
// and chunk pairs (lead pairs pass through unfiltered).
std::vector<PseudoPair> build_document_pairs(const Document& doc,
                                             const BuildConfig& cfg,
                                             BuildManifest& manifest);

std::vector<PseudoPair> build_corpus(const std::vector<Document>& docs,
                                     const BuildConfig& cfg,
                                     BuildManifest& manifest);

}  // namespace prom
