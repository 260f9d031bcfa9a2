#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>

#include "prom/checkpoint.hpp"
#include "prom/copy_label.hpp"
#include "prom/corpus.hpp"
#include "prom/gradcheck.hpp"
#include "prom/metrics.hpp"
#include "prom/model.hpp"
#include "prom/parallel.hpp"
#include "prom/pseudo_data.hpp"
#include "prom/rouge.hpp"
#include "prom/synthetic.hpp"
#include "prom/text.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class InputStream {
 public:
  explicit InputStream(const std::string& path) {
    if (path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw DataError("cannot open input: " + path);
      stream_ = &file_;
    }
  }
  std::istream& get() { return *stream_; }

 private:
  std::ifstream file_;
  std::istream* stream_ = &std::cin;
};

class OutputStream {
 public:
  explicit OutputStream(const std::string& path) : path_(path) {
    if (path != "-") {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw DataError("cannot open output: " + path);
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw DataError("write failed: " + path_);
  }

 private:
  std::string path_;
  std::ofstream file_;
  std::ostream* stream_ = &std::cout;
};

std::vector<prom::SummRecord> read_records(std::istream& in) {
  std::vector<prom::SummRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      records.push_back(prom::parse_summ_record(line));
    } catch (const std::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::vector<std::string> read_lines(const std::string& path) {
  InputStream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in.get(), line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::string join_ids(const std::vector<int>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += std::to_string(ids[i]);
  }
  return out;
}

std::vector<int> split_ids(const std::string& text, const char* what) {
  std::vector<int> ids;
  std::istringstream in(text);
  std::string token;
  while (in >> token) {
    try {
      std::size_t used = 0;
      int value = std::stoi(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      ids.push_back(value);
    } catch (const std::exception&) {
      throw DataError(std::string(what) + ": bad token id '" + token + "'");
    }
  }
  return ids;
}

void report_corpus(const prom::CorpusReport& report, const char* verb) {
  std::cerr << verb << " " << report.processed << " of " << report.lines
            << " records";
  if (report.skipped > 0) std::cerr << ", skipped " << report.skipped;
  std::cerr << "\n";
  for (const auto& [line_no, message] : report.errors) {
    std::cerr << "  line " << line_no << ": " << message << "\n";
  }
}

struct GlobalOptions {
  std::size_t threads = 1;
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------- label

struct LabelOptions {
  std::string input = "-";
  std::string output = "-";
  int n = 2;
  bool keep_case = false;
};

int run_label(const GlobalOptions& g, const LabelOptions& o) {
  InputStream in(o.input);
  OutputStream out(o.output);
  prom::CorpusReport report =
      prom::label_corpus(in.get(), out.get(), o.n, !o.keep_case, g.threads);
  out.finish();
  report_corpus(report, "labeled");
  return report.skipped == 0 ? kExitOk : kExitData;
}

// ---------------------------------------------------------------- stats

struct StatsCliOptions {
  std::string input = "-";
  std::string output = "-";
  std::string name = "dataset";
  std::string format = "csv";
  int novelty_max = 4;
  int histogram_n = 2;
  int bins = 20;
  bool midpoint = false;
  std::string efd_norm = "source";
};

int run_stats(const GlobalOptions& g, const StatsCliOptions& o) {
  prom::StatsOptions opts;
  opts.novelty_orders.clear();
  for (int i = 1; i <= o.novelty_max; ++i) opts.novelty_orders.push_back(i);
  opts.histogram_n = o.histogram_n;
  opts.histogram_bins = o.bins;
  opts.position_stat = o.midpoint ? prom::PositionStat::window_midpoint
                                  : prom::PositionStat::window_start;
  opts.efd_norm = o.efd_norm == "summary" ? prom::EfdNorm::summary
                                          : prom::EfdNorm::source;
  InputStream in(o.input);
  prom::CorpusReport report;
  prom::StatsReport stats =
      prom::compute_stats(in.get(), opts, g.threads, report);
  OutputStream out(o.output);
  if (o.format == "json") {
    out.get() << prom::stats_to_json(stats, o.name).dump(2) << "\n";
  } else {
    out.get() << prom::stats_to_csv(stats, o.name);
  }
  out.finish();
  report_corpus(report, "measured");
  return report.skipped == 0 ? kExitOk : kExitData;
}

// ---------------------------------------------------------------- build

struct BuildOptions {
  std::string input = "-";
  std::string output = "-";
  std::string manifest;
  bool jsonl = false;
  std::vector<std::string> modes = {"nat", "chunk"};
  double ratio = 0.25;
  std::size_t max_sents = 8;
  std::size_t min_sents = 4;
  double min_efd = 3.0;
  std::size_t lead_k = 3;
  std::string orientation = "document";
  std::string abbrev;
};

int run_build(const GlobalOptions& g, const BuildOptions& o) {
  prom::BuildConfig cfg;
  cfg.select_ratio = o.ratio;
  cfg.max_sents = o.max_sents;
  cfg.min_sents = o.min_sents;
  cfg.min_efd = o.min_efd;
  cfg.lead_k = o.lead_k;
  cfg.orientation = o.orientation == "summary"
                        ? prom::Orientation::selected_as_summary
                        : prom::Orientation::selected_as_document;
  cfg.modes.clear();
  for (const std::string& mode : o.modes) {
    if (mode == "nat") {
      cfg.modes.insert(prom::Provenance::nat);
    } else if (mode == "chunk") {
      cfg.modes.insert(prom::Provenance::chunk);
    } else {
      cfg.modes.insert(prom::Provenance::lead);
    }
  }
  cfg.validate();

  prom::SplitOptions split;
  std::unordered_set<std::string> abbrev;
  if (!o.abbrev.empty()) {
    abbrev = prom::load_abbreviations(o.abbrev);
    split.abbreviations = &abbrev;
  }

  InputStream in(o.input);
  OutputStream out(o.output);
  prom::BuildManifest manifest;
  prom::CorpusReport report = prom::build_corpus_stream(
      in.get(), !o.jsonl, out.get(), cfg, g.threads, manifest, split);
  out.finish();
  std::string manifest_json = prom::manifest_to_json(manifest, cfg).dump(2);
  if (!o.manifest.empty()) {
    OutputStream mout(o.manifest);
    mout.get() << manifest_json << "\n";
    mout.finish();
  } else {
    std::cerr << manifest_json << "\n";
  }
  report_corpus(report, "built from");
  return report.skipped == 0 ? kExitOk : kExitData;
}

// ---------------------------------------------------------------- rouge

struct RougeOptions {
  std::string input;
  std::string pred;
  std::string ref;
  std::string output = "-";
};

int run_rouge(const GlobalOptions& g, const RougeOptions& o) {
  std::vector<std::pair<std::string, std::string>> pairs;  // (pred, ref)
  if (!o.input.empty()) {
    InputStream in(o.input);
    for (const prom::SummRecord& rec : read_records(in.get())) {
      if (!rec.prediction) {
        throw DataError("record '" + rec.id + "' has no prediction");
      }
      pairs.emplace_back(*rec.prediction, rec.summary);
    }
  } else {
    std::vector<std::string> preds = read_lines(o.pred);
    std::vector<std::string> refs = read_lines(o.ref);
    if (preds.size() != refs.size()) {
      throw DataError("prediction and reference line counts differ");
    }
    for (std::size_t i = 0; i < preds.size(); ++i) {
      pairs.emplace_back(preds[i], refs[i]);
    }
  }
  if (pairs.empty()) throw DataError("no prediction/reference pairs");

  const prom::RougeVariant variants[] = {
      prom::RougeVariant::rouge1, prom::RougeVariant::rouge2,
      prom::RougeVariant::rougeL, prom::RougeVariant::rougeLsum};
  struct Row {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
  };
  std::map<prom::RougeVariant, Row> sums;
  using Scores = std::vector<prom::RougeScore>;
  std::size_t cursor = 0;
  prom::parallel_map_ordered<std::pair<std::string, std::string>, Scores>(
      g.threads,
      [&]() -> std::optional<std::pair<std::string, std::string>> {
        if (cursor == pairs.size()) return std::nullopt;
        return pairs[cursor++];
      },
      [&](std::pair<std::string, std::string>&& pair) {
        Scores scores;
        for (prom::RougeVariant v : variants) {
          scores.push_back(prom::rouge_f1(pair.first, pair.second, v));
        }
        return scores;
      },
      [&](Scores&& scores) {
        for (const prom::RougeScore& s : scores) {
          Row& row = sums[s.variant];
          row.precision += s.precision;
          row.recall += s.recall;
          row.f1 += s.f1;
        }
      });

  OutputStream out(o.output);
  out.get() << "variant,precision,recall,f1\n";
  const double inv = 1.0 / static_cast<double>(pairs.size());
  for (prom::RougeVariant v : variants) {
    const Row& row = sums[v];
    out.get() << prom::rouge_variant_name(v) << ","
              << prom::format_double(row.precision * inv) << ","
              << prom::format_double(row.recall * inv) << ","
              << prom::format_double(row.f1 * inv) << "\n";
  }
  out.finish();
  return kExitOk;
}

// ---------------------------------------------------------------- copied-f1

struct CopiedF1Options {
  std::string input = "-";
  std::string output = "-";
  int max_n = 4;
};

int run_copied_f1(const GlobalOptions& g, const CopiedF1Options& o) {
  InputStream in(o.input);
  std::vector<prom::SummRecord> records = read_records(in.get());
  if (records.empty()) throw DataError("no records");

  struct Row {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
  };
  std::vector<Row> sums(static_cast<std::size_t>(o.max_n));
  std::size_t cursor = 0;
  prom::parallel_map_ordered<prom::SummRecord, std::vector<prom::Prf>>(
      g.threads,
      [&]() -> std::optional<prom::SummRecord> {
        if (cursor == records.size()) return std::nullopt;
        return records[cursor++];
      },
      [&](prom::SummRecord&& rec) {
        if (!rec.prediction) {
          throw DataError("record '" + rec.id + "' has no prediction");
        }
        prom::TokenSeq src = prom::tokenize(rec.document);
        prom::TokenSeq ref = prom::tokenize(rec.summary);
        prom::TokenSeq pred = prom::tokenize(*rec.prediction);
        std::vector<prom::Prf> prfs;
        for (int n = 1; n <= o.max_n; ++n) {
          prfs.push_back(prom::copied_ngram_f1(src, ref, pred, n));
        }
        return prfs;
      },
      [&](std::vector<prom::Prf>&& prfs) {
        for (std::size_t i = 0; i < prfs.size(); ++i) {
          sums[i].precision += prfs[i].precision;
          sums[i].recall += prfs[i].recall;
          sums[i].f1 += prfs[i].f1;
        }
      });

  OutputStream out(o.output);
  out.get() << "n,precision,recall,f1\n";
  const double inv = 1.0 / static_cast<double>(records.size());
  for (int n = 1; n <= o.max_n; ++n) {
    const Row& row = sums[static_cast<std::size_t>(n - 1)];
    out.get() << n << "," << prom::format_double(row.precision * inv) << ","
              << prom::format_double(row.recall * inv) << ","
              << prom::format_double(row.f1 * inv) << "\n";
  }
  out.finish();
  return kExitOk;
}

// ------------------------------------------------------- entity-coverage

struct EntityOptions {
  std::string input = "-";
  std::string output = "-";
  std::string gazetteer;
};

int run_entity_coverage(const GlobalOptions& g, const EntityOptions& o) {
  prom::EntityRecognizerOptions ropts;
  if (!o.gazetteer.empty()) {
    ropts.gazetteer = prom::load_gazetteer(o.gazetteer);
  }
  auto recognizer = [&ropts](const std::string& text) {
    return prom::recognize_entities(text, ropts);
  };

  InputStream in(o.input);
  std::vector<prom::SummRecord> records = read_records(in.get());
  if (records.empty()) throw DataError("no records");

  double precision = 0.0, recall = 0.0, f1 = 0.0;
  std::size_t cursor = 0;
  prom::parallel_map_ordered<prom::SummRecord, prom::Prf>(
      g.threads,
      [&]() -> std::optional<prom::SummRecord> {
        if (cursor == records.size()) return std::nullopt;
        return records[cursor++];
      },
      [&](prom::SummRecord&& rec) {
        if (!rec.prediction) {
          throw DataError("record '" + rec.id + "' has no prediction");
        }
        return prom::entity_prf(rec.summary, *rec.prediction, recognizer);
      },
      [&](prom::Prf&& prf) {
        precision += prf.precision;
        recall += prf.recall;
        f1 += prf.f1;
      });

  OutputStream out(o.output);
  const double inv = 1.0 / static_cast<double>(records.size());
  out.get() << "metric,value\n";
  out.get() << "records," << records.size() << "\n";
  out.get() << "entity_precision," << prom::format_double(precision * inv)
            << "\n";
  out.get() << "entity_recall," << prom::format_double(recall * inv) << "\n";
  out.get() << "entity_f1," << prom::format_double(f1 * inv) << "\n";
  out.finish();
  return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
  std::string output = "-";
  int samples = 2000;
  int vocab = 200;
  int bank = 120;
  int max_phrases = 3;
  int min_phrase_len = 2;
  int max_phrase_len = 4;
  int min_filler = 1;
  int max_filler = 3;
  int n = 2;
};

prom::SyntheticConfig synth_config(const SynthOptions& o,
                                   std::uint64_t seed) {
  prom::SyntheticConfig cfg;
  cfg.vocab_size = o.vocab;
  cfg.phrase_token_count = o.bank;
  cfg.sample_count = o.samples;
  cfg.max_phrases = o.max_phrases;
  cfg.min_phrase_len = o.min_phrase_len;
  cfg.max_phrase_len = o.max_phrase_len;
  cfg.min_filler = o.min_filler;
  cfg.max_filler = o.max_filler;
  cfg.n = o.n;
  cfg.seed = seed;
  return cfg;
}

int run_synth(const GlobalOptions& g, const SynthOptions& o) {
  prom::SyntheticConfig cfg = synth_config(o, g.seed);
  std::vector<prom::Sample> samples = prom::make_synthetic_task(cfg);
  OutputStream out(o.output);
  char id[32];
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::snprintf(id, sizeof(id), "synth%06zu", i);
    prom::SummRecord rec;
    rec.id = id;
    rec.document = join_ids(samples[i].src);
    rec.summary = join_ids(samples[i].tgt);
    rec.copy_labels = samples[i].copy_mask;
    rec.copy_label_n = cfg.n;
    out.get() << prom::serialize_summ_record(rec) << "\n";
  }
  out.finish();
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::string data;             // JSONL of id-sequence records; empty: synth
  std::string checkpoint;       // output path (required)
  std::string log;              // JSONL loss log; empty: none
  SynthOptions synth;           // generator knobs when --data is absent
  int dim = 32;
  int heads = 2;
  int enc_layers = 1;
  int dec_layers = 1;
  int ffn = 64;
  int vocab = 200;
  int n = 2;
  double lambda = 1.0;
  bool no_indicator = false;
  std::string strategy = "multi-task";
  int warmup = -1;
  int steps = 1000;
  int batch = 8;
  double lr = 0.05;
  int beam = 4;
};

std::vector<prom::Sample> load_id_samples(const std::string& path, int n) {
  InputStream in(path);
  std::vector<prom::Sample> samples;
  for (const prom::SummRecord& rec : read_records(in.get())) {
    prom::Sample sample;
    sample.src = split_ids(rec.document, "document");
    sample.tgt = split_ids(rec.summary, "summary");
    if (rec.copy_labels) {
      sample.copy_mask = *rec.copy_labels;
      if (sample.copy_mask.size() != sample.src.size()) {
        throw DataError("record '" + rec.id +
                        "': copy label length mismatch");
      }
    } else {
      sample.copy_mask = prom::label_copy_ids(sample.src, sample.tgt, n);
    }
    samples.push_back(std::move(sample));
  }
  if (samples.empty()) throw DataError("no training samples");
  return samples;
}

prom::ModelConfig model_config_for(const TrainOptions& o,
                                   const std::vector<prom::Sample>& samples,
                                   std::uint64_t seed) {
  prom::ModelConfig cfg;
  cfg.vocab_size = o.vocab;
  cfg.model_dim = o.dim;
  cfg.head_count = o.heads;
  cfg.encoder_layers = o.enc_layers;
  cfg.decoder_layers = o.dec_layers;
  cfg.feedforward_dim = o.ffn;
  cfg.n = o.n;
  cfg.lambda = o.lambda;
  cfg.use_copy_indicator = !o.no_indicator;
  cfg.seed = seed;
  std::size_t max_src = 1, max_tgt = 1;
  for (const prom::Sample& s : samples) {
    max_src = std::max(max_src, s.src.size());
    max_tgt = std::max(max_tgt, s.tgt.size());
  }
  cfg.max_src_len = static_cast<int>(max_src);
  cfg.max_tgt_len = static_cast<int>(max_tgt);
  return cfg;
}

int run_train(const GlobalOptions& g, const TrainOptions& o) {
  std::vector<prom::Sample> samples;
  if (!o.data.empty()) {
    samples = load_id_samples(o.data, o.n);
  } else {
    SynthOptions synth = o.synth;
    synth.vocab = o.vocab;
    synth.n = o.n;
    samples = prom::make_synthetic_task(synth_config(synth, g.seed + 2));
  }
  prom::ModelConfig cfg = model_config_for(o, samples, g.seed);
  prom::TrainConfig tcfg;
  tcfg.strategy = o.strategy == "two-stage"
                      ? prom::TrainStrategy::two_stage
                      : prom::TrainStrategy::multi_task;
  tcfg.warmup_steps = o.warmup;
  tcfg.total_steps = o.steps;
  tcfg.batch_size = o.batch;
  tcfg.learning_rate = o.lr;
  tcfg.beam_size = o.beam;
  tcfg.seed = g.seed + 1;

  prom::TrainResult result = prom::train(cfg, tcfg, samples);
  prom::save_checkpoint(o.checkpoint, cfg, result.params);
  if (!o.log.empty()) {
    OutputStream log(o.log);
    for (std::size_t step = 0; step < result.log.size(); ++step) {
      const prom::LossBreakdown& row = result.log[step];
      nlohmann::ordered_json j;
      j["step"] = step;
      j["loss_summ"] = row.loss_summ;
      j["loss_copy"] = row.loss_copy;
      j["loss_total"] = row.loss_total;
      j["token_count"] = row.token_count;
      log.get() << j.dump() << "\n";
    }
    log.finish();
  }
  std::cerr << "trained " << result.log.size() << " steps";
  if (!result.log.empty()) {
    std::cerr << ", final loss "
              << prom::format_double(result.log.back().loss_total);
  }
  std::cerr << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- decode

struct DecodeOptions {
  std::string checkpoint;
  std::string input = "-";
  std::string output = "-";
  int beam = 4;
  int max_len = 0;  // 0: the checkpoint's max_tgt_len
};

int run_decode(const GlobalOptions& g, const DecodeOptions& o) {
  prom::Checkpoint ckpt = prom::load_checkpoint(o.checkpoint);
  const int max_len = o.max_len > 0 ? o.max_len : ckpt.config.max_tgt_len;

  InputStream in(o.input);
  std::vector<prom::SummRecord> records = read_records(in.get());
  OutputStream out(o.output);
  std::size_t cursor = 0;
  prom::parallel_map_ordered<prom::SummRecord, std::string>(
      g.threads,
      [&]() -> std::optional<prom::SummRecord> {
        if (cursor == records.size()) return std::nullopt;
        return records[cursor++];
      },
      [&](prom::SummRecord&& rec) {
        std::vector<int> src = split_ids(rec.document, "document");
        std::vector<int> decoded = prom::beam_decode(
            ckpt.params, ckpt.config, src, o.beam, max_len);
        rec.prediction = join_ids(decoded);
        return prom::serialize_summ_record(rec);
      },
      [&](std::string&& line) { out.get() << line << "\n"; });
  out.finish();
  return kExitOk;
}

// ---------------------------------------------------------------- gradcheck

struct GradCheckOptions {
  int dim = 8;
  int heads = 1;
  int enc_layers = 1;
  int dec_layers = 1;
  int ffn = 16;
  int vocab = 23;
  int src_len = 7;
  int tgt_len = 5;
  int coords = 200;
  double step = 1e-5;
  double tol = 1e-4;
  double lambda = 1.0;
  std::string output = "-";
};

int run_gradcheck(const GlobalOptions& g, const GradCheckOptions& o) {
  prom::GradCheckConfig cfg;
  cfg.model.vocab_size = o.vocab;
  cfg.model.model_dim = o.dim;
  cfg.model.head_count = o.heads;
  cfg.model.encoder_layers = o.enc_layers;
  cfg.model.decoder_layers = o.dec_layers;
  cfg.model.feedforward_dim = o.ffn;
  cfg.model.max_src_len = o.src_len;
  cfg.model.max_tgt_len = o.tgt_len;
  cfg.model.lambda = o.lambda;
  cfg.model.seed = g.seed;
  cfg.src_len = o.src_len;
  cfg.tgt_len = o.tgt_len;
  cfg.coords = o.coords;
  cfg.step = o.step;
  cfg.seed = g.seed;

  prom::GradCheckResult result = prom::gradcheck(cfg);
  OutputStream out(o.output);
  out.get() << "metric,value\n";
  out.get() << "coords_checked," << result.coords_checked << "\n";
  out.get() << "max_rel_err," << prom::format_double(result.max_rel_err)
            << "\n";
  out.get() << "mean_rel_err," << prom::format_double(result.mean_rel_err)
            << "\n";
  out.get() << "tolerance," << prom::format_double(o.tol) << "\n";
  out.finish();
  if (result.max_rel_err > o.tol) {
    std::cerr << "gradient check failed: max relative error "
              << prom::format_double(result.max_rel_err) << " > "
              << prom::format_double(o.tol) << "\n";
    return kExitData;
  }
  return kExitOk;
}

void add_synth_options(CLI::App* cmd, SynthOptions& o, bool with_output) {
  if (with_output) {
    cmd->add_option("--output,-o", o.output, "JSONL output path or -")
        ->capture_default_str();
    cmd->add_option("--vocab", o.vocab, "vocabulary size")
        ->capture_default_str();
    cmd->add_option("--n", o.n, "copy label order")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }
  cmd->add_option("--samples", o.samples, "sample count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--bank", o.bank, "rare phrase bank size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--max-phrases", o.max_phrases, "phrases per sample")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--min-phrase-len", o.min_phrase_len, "shortest phrase")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--max-phrase-len", o.max_phrase_len, "longest phrase")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--min-filler", o.min_filler, "shortest filler run")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--max-filler", o.max_filler, "longest filler run")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phrase-copying summarization toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML config file (flags win over file)");

  GlobalOptions g;
  app.add_option("--threads", g.threads, "worker threads")
      ->envname("PROM_THREADS")
      ->check(CLI::Range(static_cast<std::size_t>(1),
                         static_cast<std::size_t>(512)))
      ->capture_default_str();
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();

  LabelOptions label_opts;
  CLI::App* label =
      app.add_subcommand("label", "attach n-gram copy labels to a corpus");
  label->add_option("--input,-i", label_opts.input, "JSONL input path or -")
      ->capture_default_str();
  label->add_option("--output,-o", label_opts.output, "JSONL output path or -")
      ->capture_default_str();
  label->add_option("--n", label_opts.n, "label n-gram order")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  label->add_flag("--keep-case", label_opts.keep_case,
                  "match case-sensitively");

  StatsCliOptions stats_opts;
  CLI::App* stats = app.add_subcommand(
      "stats", "corpus overlap diagnostics and position histogram");
  stats->add_option("--input,-i", stats_opts.input, "JSONL input path or -")
      ->capture_default_str();
  stats->add_option("--output,-o", stats_opts.output, "output path or -")
      ->capture_default_str();
  stats->add_option("--name", stats_opts.name, "dataset label in the output")
      ->capture_default_str();
  stats->add_option("--format", stats_opts.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  stats->add_option("--novelty-max", stats_opts.novelty_max,
                    "report novelty for 1..k")
      ->check(CLI::Range(1, 8))
      ->capture_default_str();
  stats->add_option("--histogram-n", stats_opts.histogram_n,
                    "n-gram order of the position histogram")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  stats->add_option("--bins", stats_opts.bins, "histogram bin count")
      ->check(CLI::Range(2, 1000))
      ->capture_default_str();
  stats->add_flag("--midpoint", stats_opts.midpoint,
                  "bin window midpoints instead of starts");
  stats->add_option("--efd-norm", stats_opts.efd_norm,
                    "EFD length normalizer")
      ->check(CLI::IsMember({"source", "summary"}))
      ->capture_default_str();

  BuildOptions build_opts;
  CLI::App* build = app.add_subcommand(
      "build", "construct pseudo summary pairs from raw documents");
  build
      ->add_option("--input,-i", build_opts.input,
                   "plain passages (blank-line separated) or JSONL with "
                   "--jsonl; - for stdin")
      ->capture_default_str();
  build->add_option("--output,-o", build_opts.output, "JSONL output path or -")
      ->capture_default_str();
  build->add_option("--manifest", build_opts.manifest,
                    "write the build manifest JSON here (default stderr)");
  build->add_flag("--jsonl", build_opts.jsonl,
                  "input is JSONL documents, not plain text");
  build
      ->add_option("--mode", build_opts.modes,
                   "pair construction modes (nat, chunk, lead)")
      ->delimiter(',')
      ->check(CLI::IsMember({"nat", "chunk", "lead"}))
      ->capture_default_str();
  build->add_option("--ratio", build_opts.ratio, "selected sentence share")
      ->capture_default_str();
  build->add_option("--max-sents", build_opts.max_sents, "chunk size")
      ->capture_default_str();
  build
      ->add_option("--min-sents", build_opts.min_sents,
                   "minimum size of the final chunk")
      ->capture_default_str();
  build->add_option("--min-efd", build_opts.min_efd, "minimum pair EFD")
      ->capture_default_str();
  build->add_option("--lead-k", build_opts.lead_k, "lead summary sentences")
      ->capture_default_str();
  build
      ->add_option("--orientation", build_opts.orientation,
                   "side the selected sentences land on")
      ->check(CLI::IsMember({"document", "summary"}))
      ->capture_default_str();
  build->add_option("--abbrev", build_opts.abbrev,
                    "abbreviation list file replacing the built-in guard");

  RougeOptions rouge_opts;
  CLI::App* rouge = app.add_subcommand("rouge", "ROUGE scores as CSV");
  CLI::Option* rouge_input =
      rouge->add_option("--input,-i", rouge_opts.input,
                        "JSONL with prediction and summary fields");
  CLI::Option* rouge_pred = rouge->add_option(
      "--pred", rouge_opts.pred, "predictions, one text per line");
  CLI::Option* rouge_ref = rouge->add_option(
      "--ref", rouge_opts.ref, "references, one text per line");
  rouge->add_option("--output,-o", rouge_opts.output, "CSV output path or -")
      ->capture_default_str();
  rouge_input->excludes(rouge_pred)->excludes(rouge_ref);
  rouge_pred->needs(rouge_ref);
  rouge_ref->needs(rouge_pred);

  CopiedF1Options copied_opts;
  CLI::App* copied = app.add_subcommand(
      "copied-f1", "copied n-gram F1 per granularity as CSV");
  copied->add_option("--input,-i", copied_opts.input, "JSONL input path or -")
      ->capture_default_str();
  copied->add_option("--output,-o", copied_opts.output, "CSV output path or -")
      ->capture_default_str();
  copied->add_option("--max-n", copied_opts.max_n, "largest n-gram order")
      ->check(CLI::Range(1, 8))
      ->capture_default_str();

  EntityOptions entity_opts;
  CLI::App* entity = app.add_subcommand(
      "entity-coverage", "entity precision/recall/F1 of predictions");
  entity->add_option("--input,-i", entity_opts.input, "JSONL input path or -")
      ->capture_default_str();
  entity->add_option("--output,-o", entity_opts.output, "CSV output path or -")
      ->capture_default_str();
  entity->add_option("--gazetteer", entity_opts.gazetteer,
                     "extra entity list, one per line");

  SynthOptions synth_opts;
  CLI::App* synth = app.add_subcommand(
      "synth", "emit the synthetic copy task as a JSONL corpus");
  add_synth_options(synth, synth_opts, true);

  TrainOptions train_opts;
  CLI::App* train = app.add_subcommand(
      "train", "train a copy-enhanced model; checkpoints and logs losses");
  train->add_option("--data", train_opts.data,
                    "JSONL with token-id documents/summaries; omit to train "
                    "on the synthetic task");
  train->add_option("--checkpoint", train_opts.checkpoint,
                    "checkpoint output path")
      ->required();
  train->add_option("--log", train_opts.log, "per-step loss JSONL path");
  train->add_option("--dim", train_opts.dim, "model width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--heads", train_opts.heads, "attention heads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--enc-layers", train_opts.enc_layers, "encoder layers")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--dec-layers", train_opts.dec_layers, "decoder layers")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--ffn", train_opts.ffn, "feed-forward width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--vocab", train_opts.vocab, "vocabulary size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--n", train_opts.n, "copy label order")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--lambda", train_opts.lambda, "copy loss weight")
      ->capture_default_str();
  train->add_flag("--no-indicator", train_opts.no_indicator,
                  "pointer baseline: no copy indicator or fusion");
  train->add_option("--strategy", train_opts.strategy, "training strategy")
      ->check(CLI::IsMember({"multi-task", "two-stage"}))
      ->capture_default_str();
  train->add_option("--warmup", train_opts.warmup,
                    "two-stage warmup steps (-1: total/10)")
      ->capture_default_str();
  train->add_option("--steps", train_opts.steps, "SGD steps")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  train->add_option("--batch", train_opts.batch, "batch size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--lr", train_opts.lr, "learning rate")
      ->capture_default_str();
  add_synth_options(train, train_opts.synth, false);

  DecodeOptions decode_opts;
  CLI::App* decode = app.add_subcommand(
      "decode", "beam-decode token-id documents with a checkpoint");
  decode
      ->add_option("--checkpoint", decode_opts.checkpoint, "checkpoint path")
      ->required();
  decode->add_option("--input,-i", decode_opts.input, "JSONL input path or -")
      ->capture_default_str();
  decode
      ->add_option("--output,-o", decode_opts.output, "JSONL output path or -")
      ->capture_default_str();
  decode->add_option("--beam", decode_opts.beam, "beam size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  decode->add_option("--max-len", decode_opts.max_len,
                     "decode length cap (0: checkpoint limit)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  GradCheckOptions grad_opts;
  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "finite-difference check of the analytic gradients");
  gradcheck->add_option("--dim", grad_opts.dim, "model width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gradcheck->add_option("--heads", grad_opts.heads, "attention heads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gradcheck
      ->add_option("--enc-layers", grad_opts.enc_layers, "encoder layers")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gradcheck
      ->add_option("--dec-layers", grad_opts.dec_layers, "decoder layers")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gradcheck->add_option("--ffn", grad_opts.ffn, "feed-forward width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gradcheck->add_option("--vocab", grad_opts.vocab, "vocabulary size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gradcheck->add_option("--src-len", grad_opts.src_len, "source length")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gradcheck->add_option("--tgt-len", grad_opts.tgt_len, "target length")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gradcheck->add_option("--coords", grad_opts.coords, "sampled coordinates")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gradcheck->add_option("--step", grad_opts.step, "half step h")
      ->capture_default_str();
  gradcheck->add_option("--tol", grad_opts.tol, "max relative error allowed")
      ->capture_default_str();
  gradcheck->add_option("--lambda", grad_opts.lambda, "copy loss weight")
      ->capture_default_str();
  gradcheck->add_option("--output,-o", grad_opts.output, "CSV output or -")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (label->parsed()) return run_label(g, label_opts);
    if (stats->parsed()) return run_stats(g, stats_opts);
    if (build->parsed()) return run_build(g, build_opts);
    if (rouge->parsed()) return run_rouge(g, rouge_opts);
    if (copied->parsed()) return run_copied_f1(g, copied_opts);
    if (entity->parsed()) return run_entity_coverage(g, entity_opts);
    if (synth->parsed()) return run_synth(g, synth_opts);
    if (train->parsed()) return run_train(g, train_opts);
    if (decode->parsed()) return run_decode(g, decode_opts);
    if (gradcheck->parsed()) return run_gradcheck(g, grad_opts);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
