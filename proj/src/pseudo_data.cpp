#include "prom/pseudo_data.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace prom {

namespace {

TokenSeq side_tokens(const std::string& text) { return tokenize(text, true); }

struct SplitSides {
  std::string selected;
  std::string remainder;
};

SplitSides slice_sides(const Document& doc,
                       const std::vector<std::size_t>& selected,
                       std::size_t first_sentence,
                       std::size_t sentence_count) {
  SplitSides out;
  std::vector<bool> is_selected(sentence_count, false);
  for (std::size_t idx : selected) is_selected[idx] = true;
  for (std::size_t i = 0; i < sentence_count; ++i) {
    std::string piece = doc.sentence_text(first_sentence + i);
    (is_selected[i] ? out.selected : out.remainder) += piece;
  }
  return out;
}

std::optional<PseudoPair> build_nat_range(const Document& doc,
                                          const BuildConfig& cfg,
                                          std::size_t first_sentence,
                                          std::size_t sentence_count,
                                          const std::string& pair_id,
                                          Provenance provenance,
                                          BuildManifest* manifest) {
  if (sentence_count < 2) {
    if (manifest) manifest->selection_skipped_too_few_sentences += 1;
    return std::nullopt;
  }

  std::vector<SentenceSpan> local(
      doc.sentences.begin() + static_cast<std::ptrdiff_t>(first_sentence),
      doc.sentences.begin() +
          static_cast<std::ptrdiff_t>(first_sentence + sentence_count));

  std::vector<double> scores(sentence_count, 0.0);
  for (std::size_t i = 0; i < sentence_count; ++i) {
    scores[i] = gsg_score(doc.tokens, local, i);
  }

  std::size_t k = selected_sentence_count(sentence_count, cfg.select_ratio);
  if (k >= sentence_count) {
    if (manifest) manifest->selection_skipped_empty_side += 1;
    return std::nullopt;
  }

  std::vector<std::size_t> order(sentence_count);
  for (std::size_t i = 0; i < sentence_count; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (scores[a] != scores[b]) return scores[a] > scores[b];
                     return a < b;
                   });
  std::vector<std::size_t> selected(order.begin(),
                                    order.begin() +
                                        static_cast<std::ptrdiff_t>(k));
  std::sort(selected.begin(), selected.end());

  SplitSides sides = slice_sides(doc, selected, first_sentence,
                                 sentence_count);
  PseudoPair pair;
  pair.id = pair_id;
  pair.provenance = provenance;
  pair.selected_indices = selected;
  if (cfg.orientation == Orientation::selected_as_document) {
    pair.document_text = sides.selected;
    pair.summary_text = sides.remainder;
  } else {
    pair.document_text = sides.remainder;
    pair.summary_text = sides.selected;
  }

  TokenSeq x = side_tokens(pair.document_text);
  TokenSeq y = side_tokens(pair.summary_text);
  if (x.empty() || y.empty()) {
    if (manifest) manifest->selection_skipped_empty_side += 1;
    return std::nullopt;
  }
  pair.efd = efd(x, y);
  if (manifest) {
    if (provenance == Provenance::chunk) {
      manifest->chunk_built += 1;
    } else {
      manifest->nat_built += 1;
    }
  }
  return pair;
}

}  // namespace

std::string Document::sentence_text(std::size_t i) const {
  return text.substr(char_starts[i], char_starts[i + 1] - char_starts[i]);
}

Document make_document(std::string id, std::string text,
                       std::optional<std::string> genre,
                       const SplitOptions& split) {
  Document doc;
  doc.id = std::move(id);
  doc.text = std::move(text);
  doc.genre = std::move(genre);
  doc.tokens = tokenize(doc.text, true);
  doc.sentences = split_sentences(doc.text, doc.tokens, split);
  doc.char_starts.clear();
  if (!doc.sentences.empty()) {
    doc.char_starts.push_back(0);
    for (std::size_t s = 1; s < doc.sentences.size(); ++s) {
      doc.char_starts.push_back(
          doc.tokens.offsets[doc.sentences[s].start_token].first);
    }
    doc.char_starts.push_back(doc.text.size());
  }
  return doc;
}

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::nat: return "nat";
    case Provenance::chunk: return "chunk";
    case Provenance::lead: return "lead";
  }
  return "?";
}

void BuildConfig::validate() const {
  if (!(select_ratio > 0.0 && select_ratio < 1.0)) {
    throw std::invalid_argument("build config: select_ratio must be in (0,1)");
  }
  if (max_sents == 0 || min_sents == 0 || min_sents > max_sents) {
    throw std::invalid_argument(
        "build config: need 1 <= min_sents <= max_sents");
  }
  if (min_efd < 0.0) {
    throw std::invalid_argument("build config: min_efd must be >= 0");
  }
  if (lead_k == 0) {
    throw std::invalid_argument("build config: lead_k must be >= 1");
  }
  if (modes.empty()) {
    throw std::invalid_argument("build config: no modes enabled");
  }
}

void BuildManifest::merge(const BuildManifest& other) {
  documents += other.documents;
  pairs_emitted += other.pairs_emitted;
  nat_built += other.nat_built;
  chunk_built += other.chunk_built;
  lead_built += other.lead_built;
  selection_skipped_too_few_sentences +=
      other.selection_skipped_too_few_sentences;
  selection_skipped_empty_side += other.selection_skipped_empty_side;
  chunks_discarded_below_min += other.chunks_discarded_below_min;
  lead_skipped_too_short += other.lead_skipped_too_short;
  dropped_below_min_efd += other.dropped_below_min_efd;
  documents_failed += other.documents_failed;
}

std::size_t selected_sentence_count(std::size_t sentence_count,
                                    double ratio) {
  double k = std::floor(ratio * static_cast<double>(sentence_count) + 0.5);
  return std::max<std::size_t>(1, static_cast<std::size_t>(k));
}

std::optional<PseudoPair> build_nat(const Document& doc,
                                    const BuildConfig& cfg,
                                    BuildManifest* manifest) {
  return build_nat_range(doc, cfg, 0, doc.sentence_count(), doc.id + ":nat",
                         Provenance::nat, manifest);
}

std::vector<PseudoPair> build_chunk(const Document& doc,
                                    const BuildConfig& cfg,
                                    BuildManifest* manifest) {
  std::vector<PseudoPair> out;
  const std::size_t total = doc.sentence_count();
  std::size_t chunk_index = 0;
  for (std::size_t first = 0; first < total; first += cfg.max_sents) {
    std::size_t count = std::min(cfg.max_sents, total - first);
    if (count < cfg.max_sents && count < cfg.min_sents) {
      if (manifest) manifest->chunks_discarded_below_min += 1;
      continue;
    }
    std::string pair_id =
        doc.id + ":chunk" + std::to_string(chunk_index);
    auto pair = build_nat_range(doc, cfg, first, count, pair_id,
                                Provenance::chunk, manifest);
    if (pair) out.push_back(std::move(*pair));
    ++chunk_index;
  }
  return out;
}

std::optional<PseudoPair> build_lead(const Document& doc,
                                     const BuildConfig& cfg,
                                     BuildManifest* manifest) {
  const std::size_t total = doc.sentence_count();
  if (total <= cfg.lead_k) {
    if (manifest) manifest->lead_skipped_too_short += 1;
    return std::nullopt;
  }
  PseudoPair pair;
  pair.id = doc.id + ":lead";
  pair.provenance = Provenance::lead;
  for (std::size_t i = 0; i < cfg.lead_k; ++i) {
    pair.selected_indices.push_back(i);
    pair.summary_text += doc.sentence_text(i);
  }
  for (std::size_t i = cfg.lead_k; i < total; ++i) {
    pair.document_text += doc.sentence_text(i);
  }
  TokenSeq x = side_tokens(pair.document_text);
  TokenSeq y = side_tokens(pair.summary_text);
  if (x.empty() || y.empty()) {
    if (manifest) manifest->lead_skipped_too_short += 1;
    return std::nullopt;
  }
  pair.efd = efd(x, y);
  if (manifest) manifest->lead_built += 1;
  return pair;
}

std::vector<PseudoPair> filter_min_efd(std::vector<PseudoPair> pairs,
                                       double min_efd,
                                       BuildManifest* manifest) {
  std::vector<PseudoPair> kept;
  kept.reserve(pairs.size());
  for (PseudoPair& p : pairs) {
    if (p.efd >= min_efd) {
      kept.push_back(std::move(p));
    } else if (manifest) {
      manifest->dropped_below_min_efd += 1;
    }
  }
  return kept;
}

std::vector<PseudoPair> build_document_pairs(const Document& doc,
                                             const BuildConfig& cfg,
                                             BuildManifest& manifest) {
  manifest.documents += 1;
  std::vector<PseudoPair> filtered_modes;
  if (cfg.modes.count(Provenance::nat) != 0) {
    if (auto p = build_nat(doc, cfg, &manifest)) {
      filtered_modes.push_back(std::move(*p));
    }
  }
  if (cfg.modes.count(Provenance::chunk) != 0) {
    for (PseudoPair& p : build_chunk(doc, cfg, &manifest)) {
      filtered_modes.push_back(std::move(p));
    }
  }
  std::vector<PseudoPair> out =
      filter_min_efd(std::move(filtered_modes), cfg.min_efd, &manifest);
  if (cfg.modes.count(Provenance::lead) != 0) {
    if (auto p = build_lead(doc, cfg, &manifest)) {
      out.push_back(std::move(*p));
    }
  }
  manifest.pairs_emitted += out.size();
  return out;
}

std::vector<PseudoPair> build_corpus(const std::vector<Document>& docs,
                                     const BuildConfig& cfg,
                                     BuildManifest& manifest) {
  cfg.validate();
  std::vector<PseudoPair> out;
  for (const Document& doc : docs) {
    for (PseudoPair& p : build_document_pairs(doc, cfg, manifest)) {
      out.push_back(std::move(p));
    }
  }
  return out;
}

}  // namespace prom
