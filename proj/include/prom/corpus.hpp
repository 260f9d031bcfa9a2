#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "prom/copy_label.hpp"
#include "prom/metrics.hpp"
#include "prom/pseudo_data.hpp"

namespace prom {

// One JSONL corpus row. "document"/"summary" are raw text; "prediction" is a
// system output; copy labels ride along after `label` runs.
struct SummRecord {
  std::string id;
  std::string document;
  std::string summary;
  std::optional<std::string> prediction;
  std::optional<std::vector<std::uint8_t>> copy_labels;
  std::optional<int> copy_label_n;
  std::optional<std::string> provenance;
  std::optional<double> efd;
  std::optional<std::vector<std::size_t>> selected_indices;
};

SummRecord parse_summ_record(const std::string& line);  // throws on bad rows
std::string serialize_summ_record(const SummRecord& rec);

struct CorpusReport {
  std::uint64_t lines = 0;
  std::uint64_t processed = 0;
  std::uint64_t skipped = 0;
  // (1-based line number, message) per skipped row
  std::vector<std::pair<std::size_t, std::string>> errors;
};

// Streams records, attaches copy labels, writes rows in input order.
CorpusReport label_corpus(std::istream& in, std::ostream& out, int n,
                          bool fold_case, std::size_t threads);

struct DocRecord {
  std::string id;
  std::string text;
  std::optional<std::string> genre;
};

std::optional<DocRecord> parse_doc_record(const std::string& line);

// Plain mode: passages separated by blank lines, ids assigned by position.
std::vector<DocRecord> read_plain_documents(std::istream& in);

std::string serialize_pseudo_pair(const PseudoPair& pair);
nlohmann::ordered_json manifest_to_json(const BuildManifest& manifest,
                                        const BuildConfig& cfg);

// Streams documents (JSONL or plain), builds pseudo pairs per document in
// input order, writes them as JSONL.
CorpusReport build_corpus_stream(std::istream& in, bool plain_input,
                                 std::ostream& out, const BuildConfig& cfg,
                                 std::size_t threads, BuildManifest& manifest,
                                 const SplitOptions& split = {});

struct StatsOptions {
  std::vector<int> novelty_orders = {1, 2, 3, 4};
  int histogram_n = 2;
  int histogram_bins = 20;
  PositionStat position_stat = PositionStat::window_start;
  EfdNorm efd_norm = EfdNorm::source;
};

// Corpus means of the overlap diagnostics plus the position histogram.
struct StatsReport {
  std::uint64_t records = 0;
  std::uint64_t efd_records = 0;
  double efd_mean = 0.0;
  double copy_length_mean = 0.0;
  std::map<int, double> novelty_mean;
  std::map<int, std::uint64_t> novelty_records;
  PositionHistogram histogram;
};

StatsReport compute_stats(std::istream& in, const StatsOptions& opts,
                          std::size_t threads, CorpusReport& report);

nlohmann::ordered_json stats_to_json(const StatsReport& stats,
                                     const std::string& dataset);
std::string stats_to_csv(const StatsReport& stats,
                         const std::string& dataset);

// Shortest round-trip decimal form; used everywhere a double lands in CSV.
std::string format_double(double v);

}  // namespace prom
