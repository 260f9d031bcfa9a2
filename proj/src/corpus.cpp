#include "prom/corpus.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "prom/parallel.hpp"

namespace prom {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string require_string(const json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end() || !it->is_string()) {
    throw std::runtime_error(std::string("missing string field \"") + field +
                             "\"");
  }
  return it->get<std::string>();
}

struct NumberedLine {
  std::size_t number = 0;
  std::string text;
};

// Pulls non-empty lines off a stream, tracking 1-based numbers.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::optional<NumberedLine> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++number_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      return NumberedLine{number_, std::move(line)};
    }
    return std::nullopt;
  }

 private:
  std::istream& in_;
  std::size_t number_ = 0;
};

}  // namespace

SummRecord parse_summ_record(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("record is not an object");
  SummRecord rec;
  rec.id = require_string(j, "id");
  rec.document = require_string(j, "document");
  rec.summary = require_string(j, "summary");
  if (auto it = j.find("prediction"); it != j.end()) {
    if (!it->is_string()) {
      throw std::runtime_error("field \"prediction\" is not a string");
    }
    rec.prediction = it->get<std::string>();
  }
  if (auto it = j.find("copy_labels"); it != j.end()) {
    if (!it->is_array()) {
      throw std::runtime_error("field \"copy_labels\" is not an array");
    }
    std::vector<std::uint8_t> labels;
    labels.reserve(it->size());
    for (const auto& v : *it) {
      if (!v.is_number_integer()) {
        throw std::runtime_error("copy_labels entries must be 0 or 1");
      }
      int x = v.get<int>();
      if (x != 0 && x != 1) {
        throw std::runtime_error("copy_labels entries must be 0 or 1");
      }
      labels.push_back(static_cast<std::uint8_t>(x));
    }
    rec.copy_labels = std::move(labels);
  }
  if (auto it = j.find("copy_label_n"); it != j.end()) {
    if (!it->is_number_integer()) {
      throw std::runtime_error("field \"copy_label_n\" is not an integer");
    }
    rec.copy_label_n = it->get<int>();
  }
  if (auto it = j.find("provenance"); it != j.end() && it->is_string()) {
    rec.provenance = it->get<std::string>();
  }
  if (auto it = j.find("efd"); it != j.end() && it->is_number()) {
    rec.efd = it->get<double>();
  }
  if (auto it = j.find("selected_indices");
      it != j.end() && it->is_array()) {
    std::vector<std::size_t> idx;
    for (const auto& v : *it) idx.push_back(v.get<std::size_t>());
    rec.selected_indices = std::move(idx);
  }
  return rec;
}

std::string serialize_summ_record(const SummRecord& rec) {
  ordered_json j;
  j["id"] = rec.id;
  j["document"] = rec.document;
  j["summary"] = rec.summary;
  if (rec.prediction) j["prediction"] = *rec.prediction;
  if (rec.copy_labels) {
    json labels = json::array();
    for (std::uint8_t b : *rec.copy_labels) labels.push_back(int(b));
    j["copy_labels"] = std::move(labels);
  }
  if (rec.copy_label_n) j["copy_label_n"] = *rec.copy_label_n;
  if (rec.provenance) j["provenance"] = *rec.provenance;
  if (rec.efd) j["efd"] = *rec.efd;
  if (rec.selected_indices) j["selected_indices"] = *rec.selected_indices;
  return j.dump();
}

CorpusReport label_corpus(std::istream& in, std::ostream& out, int n,
                          bool fold_case, std::size_t threads) {
  if (n <= 0) throw std::invalid_argument("label_corpus: n must be >= 1");
  CorpusReport report;
  LineReader reader(in);

  struct RowResult {
    std::size_t line = 0;
    std::string output;  // empty -> error
    std::string error;
  };

  parallel_map_ordered<NumberedLine, RowResult>(
      threads,
      [&]() -> std::optional<NumberedLine> {
        auto line = reader.next();
        if (line) report.lines += 1;
        return line;
      },
      [n, fold_case](NumberedLine&& line) -> RowResult {
        RowResult res;
        res.line = line.number;
        try {
          SummRecord rec = parse_summ_record(line.text);
          CopyLabelMask mask = label_copy_tokens(
              tokenize(rec.document, fold_case),
              tokenize(rec.summary, fold_case), n);
          rec.copy_labels = mask.labels;
          rec.copy_label_n = n;
          res.output = serialize_summ_record(rec);
        } catch (const std::exception& e) {
          res.error = e.what();
        }
        return res;
      },
      [&](RowResult&& res) {
        if (!res.error.empty()) {
          report.skipped += 1;
          report.errors.emplace_back(res.line, res.error);
        } else {
          report.processed += 1;
          out << res.output << '\n';
        }
      });
  return report;
}

std::optional<DocRecord> parse_doc_record(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("record is not an object");
  DocRecord rec;
  rec.id = require_string(j, "id");
  rec.text = require_string(j, "text");
  if (auto it = j.find("genre"); it != j.end() && it->is_string()) {
    rec.genre = it->get<std::string>();
  }
  return rec;
}

std::vector<DocRecord> read_plain_documents(std::istream& in) {
  std::vector<DocRecord> docs;
  std::string line;
  std::string passage;
  auto flush = [&]() {
    if (passage.empty()) return;
    DocRecord rec;
    char id[16];
    std::snprintf(id, sizeof(id), "doc%06zu", docs.size());
    rec.id = id;
    rec.text = passage;
    docs.push_back(std::move(rec));
    passage.clear();
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (!passage.empty()) passage.push_back('\n');
    passage += line;
  }
  flush();
  return docs;
}

std::string serialize_pseudo_pair(const PseudoPair& pair) {
  ordered_json j;
  j["id"] = pair.id;
  j["document"] = pair.document_text;
  j["summary"] = pair.summary_text;
  j["provenance"] = provenance_name(pair.provenance);
  j["efd"] = pair.efd;
  j["selected_indices"] = pair.selected_indices;
  return j.dump();
}

nlohmann::ordered_json manifest_to_json(const BuildManifest& manifest,
                                        const BuildConfig& cfg) {
  ordered_json config;
  config["select_ratio"] = cfg.select_ratio;
  config["max_sents"] = cfg.max_sents;
  config["min_sents"] = cfg.min_sents;
  config["min_efd"] = cfg.min_efd;
  config["lead_k"] = cfg.lead_k;
  config["orientation"] = cfg.orientation == Orientation::selected_as_document
                              ? "document"
                              : "summary";
  std::vector<std::string> modes;
  for (Provenance p : cfg.modes) modes.push_back(provenance_name(p));
  config["modes"] = modes;

  ordered_json counts;
  counts["documents"] = manifest.documents;
  counts["pairs_emitted"] = manifest.pairs_emitted;
  counts["nat_built"] = manifest.nat_built;
  counts["chunk_built"] = manifest.chunk_built;
  counts["lead_built"] = manifest.lead_built;

  ordered_json drops;
  drops["selection_skipped_too_few_sentences"] =
      manifest.selection_skipped_too_few_sentences;
  drops["selection_skipped_empty_side"] =
      manifest.selection_skipped_empty_side;
  drops["chunks_discarded_below_min"] = manifest.chunks_discarded_below_min;
  drops["lead_skipped_too_short"] = manifest.lead_skipped_too_short;
  drops["dropped_below_min_efd"] = manifest.dropped_below_min_efd;
  drops["documents_failed"] = manifest.documents_failed;

  ordered_json j;
  j["config"] = std::move(config);
  j["counts"] = std::move(counts);
  j["drops"] = std::move(drops);
  return j;
}

CorpusReport build_corpus_stream(std::istream& in, bool plain_input,
                                 std::ostream& out, const BuildConfig& cfg,
                                 std::size_t threads, BuildManifest& manifest,
                                 const SplitOptions& split) {
  cfg.validate();
  CorpusReport report;

  struct DocResult {
    std::size_t line = 0;
    std::vector<std::string> rows;
    BuildManifest manifest;
    std::string error;
  };

  auto process = [&cfg, &split](DocRecord&& rec,
                                std::size_t line_number) -> DocResult {
    DocResult res;
    res.line = line_number;
    try {
      Document doc = make_document(std::move(rec.id), std::move(rec.text),
                                   rec.genre, split);
      for (const PseudoPair& p :
           build_document_pairs(doc, cfg, res.manifest)) {
        res.rows.push_back(serialize_pseudo_pair(p));
      }
    } catch (const std::exception& e) {
      res.manifest.documents_failed += 1;
      res.error = e.what();
    }
    return res;
  };

  auto emit = [&](DocResult&& res) {
    manifest.merge(res.manifest);
    if (!res.error.empty()) {
      report.skipped += 1;
      report.errors.emplace_back(res.line, res.error);
      return;
    }
    report.processed += 1;
    for (const std::string& row : res.rows) out << row << '\n';
  };

  if (plain_input) {
    std::vector<DocRecord> docs = read_plain_documents(in);
    report.lines = docs.size();
    std::size_t cursor = 0;
    parallel_map_ordered<std::pair<std::size_t, DocRecord>, DocResult>(
        threads,
        [&]() -> std::optional<std::pair<std::size_t, DocRecord>> {
          if (cursor >= docs.size()) return std::nullopt;
          std::size_t i = cursor++;
          return std::make_pair(i + 1, std::move(docs[i]));
        },
        [&](std::pair<std::size_t, DocRecord>&& job) {
          return process(std::move(job.second), job.first);
        },
        emit);
    return report;
  }

  LineReader reader(in);
  parallel_map_ordered<NumberedLine, DocResult>(
      threads,
      [&]() -> std::optional<NumberedLine> {
        auto line = reader.next();
        if (line) report.lines += 1;
        return line;
      },
      [&](NumberedLine&& line) -> DocResult {
        try {
          auto rec = parse_doc_record(line.text);
          return process(std::move(*rec), line.number);
        } catch (const std::exception& e) {
          DocResult res;
          res.line = line.number;
          res.error = e.what();
          return res;
        }
      },
      emit);
  return report;
}

namespace {

struct RecordStats {
  bool ok = false;
  std::string error;
  std::size_t line = 0;
  bool has_efd = false;
  double efd_value = 0.0;
  double copy_length_value = 0.0;
  std::vector<std::pair<int, double>> novelty;
  std::vector<double> hist_counts;
};

}  // namespace

StatsReport compute_stats(std::istream& in, const StatsOptions& opts,
                          std::size_t threads, CorpusReport& report) {
  StatsReport stats;
  OverlapHistogramAccumulator hist(opts.histogram_bins, opts.histogram_n,
                                   opts.position_stat);
  double efd_sum = 0.0;
  double copy_sum = 0.0;
  std::map<int, double> novelty_sum;
  LineReader reader(in);

  std::vector<double> hist_acc(
      static_cast<std::size_t>(opts.histogram_bins), 0.0);

  parallel_map_ordered<NumberedLine, RecordStats>(
      threads,
      [&]() -> std::optional<NumberedLine> {
        auto line = reader.next();
        if (line) report.lines += 1;
        return line;
      },
      [&opts](NumberedLine&& line) -> RecordStats {
        RecordStats rs;
        rs.line = line.number;
        try {
          SummRecord rec = parse_summ_record(line.text);
          TokenSeq x = tokenize(rec.document, true);
          TokenSeq y = tokenize(rec.summary, true);
          if (!x.empty() && !y.empty()) {
            rs.has_efd = true;
            rs.efd_value = efd(x, y, opts.efd_norm);
            rs.copy_length_value = copy_length(x, y);
          }
          for (int n : opts.novelty_orders) {
            if (y.size() >= static_cast<std::size_t>(n)) {
              rs.novelty.emplace_back(n, ngram_novelty(x, y, n));
            }
          }
          OverlapHistogramAccumulator h(opts.histogram_bins,
                                        opts.histogram_n,
                                        opts.position_stat);
          h.add(x, y);
          rs.hist_counts = h.counts();
          rs.ok = true;
        } catch (const std::exception& e) {
          rs.ok = false;
          rs.error = e.what();
        }
        return rs;
      },
      [&](RecordStats&& rs) {
        if (!rs.ok) {
          report.skipped += 1;
          report.errors.emplace_back(rs.line, rs.error);
          return;
        }
        report.processed += 1;
        stats.records += 1;
        if (rs.has_efd) {
          stats.efd_records += 1;
          efd_sum += rs.efd_value;
          copy_sum += rs.copy_length_value;
        }
        for (auto& [n, v] : rs.novelty) {
          novelty_sum[n] += v;
          stats.novelty_records[n] += 1;
        }
        for (std::size_t b = 0; b < rs.hist_counts.size(); ++b) {
          hist_acc[b] += rs.hist_counts[b];
        }
      });

  if (stats.efd_records > 0) {
    stats.efd_mean = efd_sum / static_cast<double>(stats.efd_records);
    stats.copy_length_mean =
        copy_sum / static_cast<double>(stats.efd_records);
  }
  for (auto& [n, sum] : novelty_sum) {
    stats.novelty_mean[n] =
        sum / static_cast<double>(stats.novelty_records[n]);
  }
  stats.histogram.bins = opts.histogram_bins;
  double total = 0.0;
  for (double c : hist_acc) total += c;
  stats.histogram.mass.assign(hist_acc.size(), 0.0);
  if (total > 0.0) {
    for (std::size_t b = 0; b < hist_acc.size(); ++b) {
      stats.histogram.mass[b] = hist_acc[b] / total;
    }
  }
  return stats;
}

nlohmann::ordered_json stats_to_json(const StatsReport& stats,
                                     const std::string& dataset) {
  ordered_json j;
  j["dataset"] = dataset;
  j["records"] = stats.records;
  j["efd_records"] = stats.efd_records;
  j["efd_mean"] = stats.efd_mean;
  j["copy_length_mean"] = stats.copy_length_mean;
  ordered_json novelty;
  for (const auto& [n, v] : stats.novelty_mean) {
    ordered_json entry;
    entry["n"] = n;
    entry["novelty_mean"] = v;
    entry["records"] = stats.novelty_records.at(n);
    novelty.push_back(std::move(entry));
  }
  j["novelty"] = std::move(novelty);
  ordered_json hist;
  hist["bins"] = stats.histogram.bins;
  hist["mass"] = stats.histogram.mass;
  j["overlap_position_histogram"] = std::move(hist);
  return j;
}

std::string stats_to_csv(const StatsReport& stats,
                         const std::string& dataset) {
  std::string out = "dataset,metric,value\n";
  auto row = [&](const std::string& metric, const std::string& value) {
    out += dataset;
    out.push_back(',');
    out += metric;
    out.push_back(',');
    out += value;
    out.push_back('\n');
  };
  row("records", std::to_string(stats.records));
  row("efd_records", std::to_string(stats.efd_records));
  row("efd_mean", format_double(stats.efd_mean));
  row("copy_length_mean", format_double(stats.copy_length_mean));
  for (const auto& [n, v] : stats.novelty_mean) {
    row("novelty_" + std::to_string(n), format_double(v));
  }
  for (std::size_t b = 0; b < stats.histogram.mass.size(); ++b) {
    char name[32];
    std::snprintf(name, sizeof(name), "hist_bin_%02zu", b);
    row(name, format_double(stats.histogram.mass[b]));
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

}  // namespace prom
