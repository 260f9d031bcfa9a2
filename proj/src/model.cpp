#include "prom/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace prom {
namespace {

constexpr double kMaskValue = -1e9;

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

double sigmoid_scalar(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// Deterministic standard Gaussians: Box-Muller over a fixed 64-bit stream,
// so initialization does not depend on library distribution internals.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform_open();
    double u2 = uniform_open();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * kPi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  double uniform_open() {  // (0, 1], so log never sees zero
    return static_cast<double>((rng_() >> 11) + 1) * 0x1p-53;
  }

  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

struct ParamSpec {
  enum class Kind { gaussian, zeros, ones };

  std::string name;
  int rows = 0;
  int cols = 0;
  Kind kind = Kind::gaussian;
  int fan_in = 0;  // gaussian std is 1/sqrt(fan_in)
};

std::vector<ParamSpec> parameter_specs(const ModelConfig& cfg) {
  using Kind = ParamSpec::Kind;
  std::vector<ParamSpec> specs;
  auto weight = [&specs](std::string name, int rows, int cols) {
    specs.push_back({std::move(name), rows, cols, Kind::gaussian, rows});
  };
  auto table = [&specs](std::string name, int rows, int cols) {
    specs.push_back({std::move(name), rows, cols, Kind::gaussian, cols});
  };
  auto bias = [&specs](std::string name, int cols) {
    specs.push_back({std::move(name), 1, cols, Kind::zeros, 0});
  };
  auto gain = [&specs](std::string name, int cols) {
    specs.push_back({std::move(name), 1, cols, Kind::ones, 0});
  };
  const int d = cfg.model_dim;
  table("embed.tok", cfg.vocab_size, d);
  table("embed.pos_src", cfg.max_src_len, d);
  table("embed.pos_tgt", cfg.max_tgt_len + 1, d);
  auto attention = [&](const std::string& p) {
    weight(p + ".wq", d, d);
    bias(p + ".bq", d);
    weight(p + ".wk", d, d);
    bias(p + ".bk", d);
    weight(p + ".wv", d, d);
    bias(p + ".bv", d);
    weight(p + ".wo", d, d);
    bias(p + ".bo", d);
  };
  auto norm = [&](const std::string& p) {
    gain(p + ".g", d);
    bias(p + ".b", d);
  };
  auto ffn = [&](const std::string& p) {
    weight(p + ".w1", d, cfg.feedforward_dim);
    bias(p + ".b1", cfg.feedforward_dim);
    weight(p + ".w2", cfg.feedforward_dim, d);
    bias(p + ".b2", d);
  };
  for (int i = 0; i < cfg.encoder_layers; ++i) {
    std::string p = "enc.l" + std::to_string(i);
    attention(p + ".attn");
    norm(p + ".ln1");
    ffn(p + ".ffn");
    norm(p + ".ln2");
  }
  for (int i = 0; i < cfg.decoder_layers; ++i) {
    std::string p = "dec.l" + std::to_string(i);
    attention(p + ".self");
    norm(p + ".ln1");
    attention(p + ".cross");
    norm(p + ".ln2");
    ffn(p + ".ffn");
    norm(p + ".ln3");
  }
  weight("lm.w", d, cfg.vocab_size);
  bias("lm.b", cfg.vocab_size);
  weight("ind.w", d, 1);
  bias("ind.b", 1);
  weight("fuse.w", 1, 1);
  bias("fuse.b", 1);
  weight("gate.w", 3 * d, 1);
  bias("gate.b", 1);
  return specs;
}

void check_ids(std::span<const int> ids, int vocab, const char* what) {
  for (int id : ids) {
    if (id < 0 || id >= vocab) {
      throw std::invalid_argument(std::string(what) + ": token id out of range");
    }
  }
}

// Binds each parameter into the graph once per build.
class Binder {
 public:
  Binder(Graph& g, const Params& params) : g_(g), params_(&params) {}

  Graph::NodeRef operator()(const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    Graph::NodeRef ref = g_.parameter(name, params_->at(name));
    bound_.emplace(name, ref);
    return ref;
  }

 private:
  Graph& g_;
  const Params* params_;
  std::map<std::string, Graph::NodeRef> bound_;
};

Graph::NodeRef embed_sequence(Graph& g, Binder& P, std::span<const int> ids,
                              const std::string& pos_table) {
  std::vector<int> tok_ids(ids.begin(), ids.end());
  std::vector<int> pos_ids(ids.size());
  std::iota(pos_ids.begin(), pos_ids.end(), 0);
  return g.add(g.gather_rows(P("embed.tok"), std::move(tok_ids)),
               g.gather_rows(P(pos_table), std::move(pos_ids)));
}

struct AttentionOut {
  Graph::NodeRef out;
  Graph::NodeRef mean_attn;
};

AttentionOut attention_block(Graph& g, Binder& P, const std::string& prefix,
                             Graph::NodeRef query_in, Graph::NodeRef kv_in,
                             const Mat* mask, int heads, int model_dim) {
  Graph::NodeRef q =
      g.add_row_bias(g.matmul(query_in, P(prefix + ".wq")), P(prefix + ".bq"));
  Graph::NodeRef k =
      g.add_row_bias(g.matmul(kv_in, P(prefix + ".wk")), P(prefix + ".bk"));
  Graph::NodeRef v =
      g.add_row_bias(g.matmul(kv_in, P(prefix + ".wv")), P(prefix + ".bv"));
  const int dk = model_dim / heads;
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  Graph::NodeRef mask_node{};
  if (mask != nullptr) mask_node = g.constant(*mask);
  Graph::NodeRef concat{};
  Graph::NodeRef attn_sum{};
  for (int h = 0; h < heads; ++h) {
    Graph::NodeRef qh = g.slice_cols(q, h * dk, dk);
    Graph::NodeRef kh = g.slice_cols(k, h * dk, dk);
    Graph::NodeRef vh = g.slice_cols(v, h * dk, dk);
    Graph::NodeRef scores = g.scale(g.matmul(qh, kh, false, true), inv_sqrt_dk);
    if (mask != nullptr) scores = g.add(scores, mask_node);
    Graph::NodeRef a = g.softmax_rows(scores);
    attn_sum = h == 0 ? a : g.add(attn_sum, a);
    Graph::NodeRef ctx = g.matmul(a, vh);
    concat = h == 0 ? ctx : g.concat_cols(concat, ctx);
  }
  Graph::NodeRef out =
      g.add_row_bias(g.matmul(concat, P(prefix + ".wo")), P(prefix + ".bo"));
  return {out, g.scale(attn_sum, 1.0 / heads)};
}

Graph::NodeRef ffn_block(Graph& g, Binder& P, const std::string& prefix,
                         Graph::NodeRef x) {
  Graph::NodeRef hidden =
      g.relu(g.add_row_bias(g.matmul(x, P(prefix + ".w1")), P(prefix + ".b1")));
  return g.add_row_bias(g.matmul(hidden, P(prefix + ".w2")), P(prefix + ".b2"));
}

Graph::NodeRef add_norm(Graph& g, Binder& P, const std::string& prefix,
                        Graph::NodeRef x, Graph::NodeRef sublayer) {
  return g.layer_norm(g.add(x, sublayer), P(prefix + ".g"), P(prefix + ".b"));
}

Mat pad_column_mask(int rows, int cols, int valid_len) {
  Mat mask = Mat::Zero(rows, cols);
  for (int j = valid_len; j < cols; ++j) mask.col(j).setConstant(kMaskValue);
  return mask;
}

Graph::NodeRef build_encoder(Graph& g, Binder& P, const ModelConfig& cfg,
                             std::span<const int> src, int valid_len) {
  Graph::NodeRef x = embed_sequence(g, P, src, "embed.pos_src");
  const int s_len = static_cast<int>(src.size());
  Mat pad_mask;
  const Mat* maskp = nullptr;
  if (valid_len < s_len) {
    pad_mask = pad_column_mask(s_len, s_len, valid_len);
    maskp = &pad_mask;
  }
  for (int i = 0; i < cfg.encoder_layers; ++i) {
    std::string p = "enc.l" + std::to_string(i);
    AttentionOut att = attention_block(g, P, p + ".attn", x, x, maskp,
                                       cfg.head_count, cfg.model_dim);
    x = add_norm(g, P, p + ".ln1", x, att.out);
    Graph::NodeRef f = ffn_block(g, P, p + ".ffn", x);
    x = add_norm(g, P, p + ".ln2", x, f);
  }
  return x;
}

struct DecoderOut {
  Graph::NodeRef h_de;
  Graph::NodeRef cross_attn;  // last layer, mean over heads
};

DecoderOut build_decoder(Graph& g, Binder& P, const ModelConfig& cfg,
                         Graph::NodeRef h_en, int src_len, int valid_len,
                         std::span<const int> dec_input) {
  const int t_len = static_cast<int>(dec_input.size());
  Graph::NodeRef x = embed_sequence(g, P, dec_input, "embed.pos_tgt");
  Mat causal = Mat::Zero(t_len, t_len);
  for (int i = 0; i < t_len; ++i) {
    for (int j = i + 1; j < t_len; ++j) causal(i, j) = kMaskValue;
  }
  Mat cross_mask;
  const Mat* crossp = nullptr;
  if (valid_len < src_len) {
    cross_mask = pad_column_mask(t_len, src_len, valid_len);
    crossp = &cross_mask;
  }
  DecoderOut out;
  for (int i = 0; i < cfg.decoder_layers; ++i) {
    std::string p = "dec.l" + std::to_string(i);
    AttentionOut self = attention_block(g, P, p + ".self", x, x, &causal,
                                        cfg.head_count, cfg.model_dim);
    x = add_norm(g, P, p + ".ln1", x, self.out);
    AttentionOut cross = attention_block(g, P, p + ".cross", x, h_en, crossp,
                                         cfg.head_count, cfg.model_dim);
    x = add_norm(g, P, p + ".ln2", x, cross.out);
    Graph::NodeRef f = ffn_block(g, P, p + ".ffn", x);
    x = add_norm(g, P, p + ".ln3", x, f);
    out.cross_attn = cross.mean_attn;
  }
  out.h_de = x;
  return out;
}

struct HeadNodes {
  Graph::NodeRef a_c;
  Graph::NodeRef p_vocab;
  Graph::NodeRef p_copy;
  Graph::NodeRef p_gen;
  Graph::NodeRef p_mix;
};

// gate, when present, scales each source column of the cross-attention
// before renormalization (the indicator fusion); null means pointer
// baseline behavior.
HeadNodes build_head(Graph& g, Binder& P, const ModelConfig& cfg,
                     Graph::NodeRef h_en, Graph::NodeRef h_de,
                     Graph::NodeRef cross_attn, std::span<const int> src,
                     std::span<const int> dec_input,
                     const Graph::NodeRef* gate) {
  HeadNodes head;
  Graph::NodeRef logits =
      g.add_row_bias(g.matmul(h_de, P("lm.w")), P("lm.b"));
  head.p_vocab = g.softmax_rows(logits);

  head.a_c = gate != nullptr ? g.row_vec_mul(cross_attn, *gate) : cross_attn;
  Graph::NodeRef a_norm = g.normalize_rows(head.a_c);
  head.p_copy = g.scatter_cols(a_norm, std::vector<int>(src.begin(), src.end()),
                               cfg.vocab_size);

  Graph::NodeRef context = g.matmul(cross_attn, h_en);
  Graph::NodeRef y_emb = g.gather_rows(
      P("embed.tok"), std::vector<int>(dec_input.begin(), dec_input.end()));
  Graph::NodeRef gate_in = g.concat_cols(g.concat_cols(context, h_de), y_emb);
  Graph::NodeRef z_gen =
      g.add_row_bias(g.matmul(gate_in, P("gate.w")), P("gate.b"));
  head.p_gen = g.sigmoid(z_gen);

  Graph::NodeRef gen_part = g.col_vec_mul(head.p_vocab, head.p_gen);
  Graph::NodeRef copy_part = g.col_vec_mul(head.p_copy, g.one_minus(head.p_gen));
  head.p_mix = g.add(gen_part, copy_part);
  return head;
}

struct ModelNodes {
  Graph::NodeRef h_en;
  Graph::NodeRef h_de;
  Graph::NodeRef cross_attn;
  HeadNodes head;
  Graph::NodeRef z_valid;  // indicator logits on non-pad positions
  Graph::NodeRef h_valid;
  bool has_indicator = false;
};

ModelNodes build_full(Graph& g, Binder& P, const ModelConfig& cfg,
                      std::span<const int> src, int valid_len,
                      std::span<const int> dec_input) {
  ModelNodes nodes;
  nodes.h_en = build_encoder(g, P, cfg, src, valid_len);
  const int s_len = static_cast<int>(src.size());
  DecoderOut dec = build_decoder(g, P, cfg, nodes.h_en, s_len, valid_len,
                                 dec_input);
  nodes.h_de = dec.h_de;
  nodes.cross_attn = dec.cross_attn;

  Graph::NodeRef gate{};
  const Graph::NodeRef* gatep = nullptr;
  if (cfg.use_copy_indicator) {
    Graph::NodeRef z_all =
        g.add_row_bias(g.matmul(nodes.h_en, P("ind.w")), P("ind.b"));
    Graph::NodeRef h_all = g.sigmoid(z_all);
    if (valid_len < s_len) {
      std::vector<int> keep(valid_len);
      std::iota(keep.begin(), keep.end(), 0);
      nodes.z_valid = g.gather_rows(z_all, std::move(keep));
      nodes.h_valid = g.sigmoid(nodes.z_valid);
    } else {
      nodes.z_valid = z_all;
      nodes.h_valid = h_all;
    }
    nodes.has_indicator = true;
    gate = g.sigmoid(
        g.add_row_bias(g.scalar_mul(h_all, P("fuse.w")), P("fuse.b")));
    gatep = &gate;
  }
  nodes.head = build_head(g, P, cfg, nodes.h_en, nodes.h_de, nodes.cross_attn,
                          src, dec_input, gatep);
  return nodes;
}

struct LossNodes {
  Graph::NodeRef summ;
  Graph::NodeRef copy;
  Graph::NodeRef total;
};

LossNodes build_loss(Graph& g, const ModelNodes& nodes,
                     std::span<const int> gold,
                     std::span<const std::uint8_t> copy_mask, double lambda) {
  LossNodes loss;
  Graph::NodeRef picked = g.pick_per_row(
      nodes.head.p_mix, std::vector<int>(gold.begin(), gold.end()));
  loss.summ = g.scale(g.mean_all(g.log(picked)), -1.0);
  if (nodes.has_indicator) {
    Mat targets(static_cast<int>(copy_mask.size()), 1);
    for (int i = 0; i < targets.rows(); ++i) {
      targets(i, 0) = copy_mask[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    }
    loss.copy = g.bce_with_logits_mean(nodes.z_valid, std::move(targets));
  } else {
    loss.copy = g.constant(Mat::Zero(1, 1));
  }
  loss.total = g.add(loss.summ, g.scale(loss.copy, lambda));
  return loss;
}

ForwardTrace trace_row(const Graph& g, const ModelNodes& nodes, int row) {
  ForwardTrace tr;
  tr.h_de = g.value(nodes.h_de).row(row).transpose();
  tr.attn = g.value(nodes.cross_attn).row(row).transpose();
  tr.a_c = g.value(nodes.head.a_c).row(row).transpose();
  tr.p_vocab = g.value(nodes.head.p_vocab).row(row).transpose();
  tr.p_copy = g.value(nodes.head.p_copy).row(row).transpose();
  tr.p_gen = g.value(nodes.head.p_gen)(row, 0);
  tr.p_copy_weight = 1.0 - tr.p_gen;
  tr.p_mix = g.value(nodes.head.p_mix).row(row).transpose();
  return tr;
}

void validate_sample(const ModelConfig& cfg, const Sample& sample) {
  require(!sample.src.empty(), "sample: empty source");
  require(static_cast<int>(sample.src.size()) <= cfg.max_src_len,
          "sample: source longer than max_src_len");
  require(!sample.tgt.empty(), "sample: empty target");
  require(static_cast<int>(sample.tgt.size()) <= cfg.max_tgt_len,
          "sample: target longer than max_tgt_len");
  check_ids(sample.src, cfg.vocab_size, "sample source");
  check_ids(sample.tgt, cfg.vocab_size, "sample target");
  if (cfg.use_copy_indicator) {
    require(sample.copy_mask.size() == sample.src.size(),
            "sample: copy mask size must match the source");
    for (std::uint8_t c : sample.copy_mask) {
      require(c == 0 || c == 1, "sample: copy mask entries must be 0 or 1");
    }
  }
}

std::vector<int> decoder_input_for(std::span<const int> tgt) {
  std::vector<int> dec_input;
  dec_input.reserve(tgt.size() + 1);
  dec_input.push_back(kBosId);
  dec_input.insert(dec_input.end(), tgt.begin(), tgt.end());
  return dec_input;
}

}  // namespace

void ModelConfig::validate() const {
  require(vocab_size >= 4, "model config: vocab_size must be at least 4");
  require(model_dim >= 1, "model config: model_dim must be positive");
  require(head_count >= 1, "model config: head_count must be positive");
  require(model_dim % head_count == 0,
          "model config: model_dim must be divisible by head_count");
  require(encoder_layers >= 1 && decoder_layers >= 1,
          "model config: layer counts must be positive");
  require(feedforward_dim >= 1,
          "model config: feedforward_dim must be positive");
  require(max_src_len >= 1 && max_tgt_len >= 1,
          "model config: sequence limits must be positive");
  require(n >= 1, "model config: n must be positive");
  require(std::isfinite(lambda) && lambda >= 0.0,
          "model config: lambda must be finite and non-negative");
}

void TrainConfig::validate() const {
  require(total_steps >= 0, "train config: total_steps must be non-negative");
  require(batch_size >= 1, "train config: batch_size must be positive");
  require(std::isfinite(learning_rate) && learning_rate > 0.0,
          "train config: learning_rate must be positive");
  require(beam_size >= 1, "train config: beam_size must be positive");
  require(warmup_steps >= -1, "train config: warmup_steps must be >= -1");
  require(resolved_warmup() <= total_steps,
          "train config: warmup cannot exceed total_steps");
}

int TrainConfig::resolved_warmup() const {
  return warmup_steps >= 0 ? warmup_steps : total_steps / 10;
}

Mat& Params::at(const std::string& name) {
  auto it = arrays.find(name);
  if (it == arrays.end()) {
    throw std::out_of_range("unknown parameter: " + name);
  }
  return it->second;
}

const Mat& Params::at(const std::string& name) const {
  auto it = arrays.find(name);
  if (it == arrays.end()) {
    throw std::out_of_range("unknown parameter: " + name);
  }
  return it->second;
}

Params init_model(const ModelConfig& cfg) {
  cfg.validate();
  GaussianSource gauss(cfg.seed);
  Params params;
  for (const ParamSpec& spec : parameter_specs(cfg)) {
    Mat m(spec.rows, spec.cols);
    switch (spec.kind) {
      case ParamSpec::Kind::gaussian: {
        double stddev = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
        for (int r = 0; r < spec.rows; ++r) {
          for (int c = 0; c < spec.cols; ++c) m(r, c) = stddev * gauss.next();
        }
        break;
      }
      case ParamSpec::Kind::zeros:
        m.setZero();
        break;
      case ParamSpec::Kind::ones:
        m.setOnes();
        break;
    }
    params.arrays.emplace(spec.name, std::move(m));
  }
  return params;
}

EncoderStates encode(const Params& params, const ModelConfig& cfg,
                     std::span<const int> src, int valid_len) {
  cfg.validate();
  require(!src.empty(), "encode: empty source");
  require(static_cast<int>(src.size()) <= cfg.max_src_len,
          "encode: source longer than max_src_len");
  check_ids(src, cfg.vocab_size, "encode");
  if (valid_len < 0) valid_len = static_cast<int>(src.size());
  require(valid_len >= 1 && valid_len <= static_cast<int>(src.size()),
          "encode: valid_len out of range");
  Graph g;
  Binder P(g, params);
  Graph::NodeRef h = build_encoder(g, P, cfg, src, valid_len);
  EncoderStates out;
  out.h_en = g.value(h);
  out.src.assign(src.begin(), src.end());
  out.valid_len = valid_len;
  return out;
}

CopyIndicator indicator(const Params& params, const ModelConfig& cfg,
                        const EncoderStates& enc) {
  cfg.validate();
  require(enc.h_en.cols() == cfg.model_dim,
          "indicator: encoder state width mismatch");
  require(enc.valid_len >= 1 && enc.valid_len <= enc.h_en.rows(),
          "indicator: valid_len out of range");
  const Mat& w = params.at("ind.w");
  const Mat& b = params.at("ind.b");
  CopyIndicator out;
  out.z_ind =
      (enc.h_en.topRows(enc.valid_len) * w).col(0).array() + b(0, 0);
  out.h_c = out.z_ind.unaryExpr([](double z) { return sigmoid_scalar(z); });
  return out;
}

ForwardTrace decode_step(const Params& params, const ModelConfig& cfg,
                         const EncoderStates& enc, const CopyIndicator& ind,
                         std::span<const int> prefix) {
  cfg.validate();
  const int s_len = static_cast<int>(enc.src.size());
  require(s_len >= 1, "decode_step: empty encoder states");
  require(enc.h_en.rows() == s_len && enc.h_en.cols() == cfg.model_dim,
          "decode_step: encoder state shape mismatch");
  require(enc.valid_len >= 1 && enc.valid_len <= s_len,
          "decode_step: valid_len out of range");
  require(!prefix.empty(), "decode_step: empty prefix");
  require(static_cast<int>(prefix.size()) <= cfg.max_tgt_len + 1,
          "decode_step: prefix longer than max_tgt_len");
  check_ids(prefix, cfg.vocab_size, "decode_step prefix");
  if (cfg.use_copy_indicator) {
    require(ind.h_c.size() == enc.valid_len,
            "decode_step: indicator size mismatch");
  }

  Graph g;
  Binder P(g, params);
  ModelNodes nodes;
  nodes.h_en = g.constant(enc.h_en);
  DecoderOut dec =
      build_decoder(g, P, cfg, nodes.h_en, s_len, enc.valid_len, prefix);
  nodes.h_de = dec.h_de;
  nodes.cross_attn = dec.cross_attn;

  Graph::NodeRef gate{};
  const Graph::NodeRef* gatep = nullptr;
  if (cfg.use_copy_indicator) {
    const double fw = params.at("fuse.w")(0, 0);
    const double fb = params.at("fuse.b")(0, 0);
    Mat gate_values = Mat::Ones(s_len, 1);  // padding columns carry no mass
    for (int i = 0; i < enc.valid_len; ++i) {
      gate_values(i, 0) = sigmoid_scalar(fw * ind.h_c(i) + fb);
    }
    gate = g.constant(std::move(gate_values));
    gatep = &gate;
  }
  nodes.head = build_head(g, P, cfg, nodes.h_en, nodes.h_de, nodes.cross_attn,
                          enc.src, prefix, gatep);
  return trace_row(g, nodes, static_cast<int>(prefix.size()) - 1);
}

SequenceForward forward_teacher(const Params& params, const ModelConfig& cfg,
                                std::span<const int> src,
                                std::span<const int> tgt) {
  cfg.validate();
  require(!src.empty() && static_cast<int>(src.size()) <= cfg.max_src_len,
          "forward_teacher: bad source length");
  require(!tgt.empty() && static_cast<int>(tgt.size()) <= cfg.max_tgt_len,
          "forward_teacher: bad target length");
  check_ids(src, cfg.vocab_size, "forward_teacher source");
  check_ids(tgt, cfg.vocab_size, "forward_teacher target");

  Graph g;
  Binder P(g, params);
  std::vector<int> dec_input = decoder_input_for(tgt);
  ModelNodes nodes = build_full(g, P, cfg, src, static_cast<int>(src.size()),
                                dec_input);
  SequenceForward out;
  out.steps.reserve(dec_input.size());
  for (int t = 0; t < static_cast<int>(dec_input.size()); ++t) {
    out.steps.push_back(trace_row(g, nodes, t));
  }
  if (nodes.has_indicator) {
    out.ind.z_ind = g.value(nodes.z_valid).col(0);
    out.ind.h_c = g.value(nodes.h_valid).col(0);
  }
  return out;
}

LossBreakdown loss_total(std::span<const ForwardTrace> traces,
                         std::span<const int> gold, const CopyIndicator& ind,
                         std::span<const std::uint8_t> copy_mask,
                         double lambda) {
  require(!traces.empty(), "loss_total: no steps");
  require(traces.size() == gold.size(),
          "loss_total: step and gold counts differ");
  require(std::isfinite(lambda) && lambda >= 0.0,
          "loss_total: lambda must be finite and non-negative");
  LossBreakdown out;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const Eigen::VectorXd& p = traces[t].p_mix;
    require(p.allFinite(), "loss_total: non-finite probabilities");
    require(gold[t] >= 0 && gold[t] < p.size(),
            "loss_total: gold token out of range");
    double prob = p(gold[t]);
    require(prob > 0.0, "loss_total: zero probability for gold token");
    out.loss_summ -= std::log(prob);
  }
  out.loss_summ /= static_cast<double>(traces.size());
  out.token_count = static_cast<std::int64_t>(traces.size());

  require(static_cast<std::size_t>(ind.z_ind.size()) == copy_mask.size(),
          "loss_total: copy mask and indicator sizes differ");
  if (!copy_mask.empty()) {
    for (std::size_t i = 0; i < copy_mask.size(); ++i) {
      require(copy_mask[i] == 0 || copy_mask[i] == 1,
              "loss_total: copy mask entries must be 0 or 1");
      double z = ind.z_ind(static_cast<Eigen::Index>(i));
      require(std::isfinite(z), "loss_total: non-finite indicator logit");
      double c = copy_mask[i] ? 1.0 : 0.0;
      out.loss_copy +=
          std::max(z, 0.0) - z * c + std::log1p(std::exp(-std::abs(z)));
    }
    out.loss_copy /= static_cast<double>(copy_mask.size());
  }
  out.loss_total = out.loss_summ + lambda * out.loss_copy;
  return out;
}

GradResult grad(const Params& params, const ModelConfig& cfg,
                std::span<const Sample> batch, Objective objective) {
  cfg.validate();
  require(!batch.empty(), "grad: empty batch");
  GradResult result;
  bool first = true;
  for (const Sample& sample : batch) {
    validate_sample(cfg, sample);
    Graph g;
    Binder P(g, params);
    std::vector<int> dec_input = decoder_input_for(sample.tgt);
    std::vector<int> gold(sample.tgt.begin(), sample.tgt.end());
    gold.push_back(kEosId);
    ModelNodes nodes = build_full(g, P, cfg, sample.src,
                                  static_cast<int>(sample.src.size()),
                                  dec_input);
    LossNodes loss = build_loss(g, nodes, gold, sample.copy_mask, cfg.lambda);
    g.backward(objective == Objective::copy_only ? loss.copy : loss.total);
    std::map<std::string, Mat> grads = g.parameter_gradients();
    if (first) {
      result.grads = std::move(grads);
      first = false;
    } else {
      for (auto& [name, m] : grads) result.grads.at(name) += m;
    }
    result.loss.loss_summ += g.value(loss.summ)(0, 0);
    result.loss.loss_copy += g.value(loss.copy)(0, 0);
    result.loss.loss_total += g.value(loss.total)(0, 0);
    result.loss.token_count += static_cast<std::int64_t>(gold.size());
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& [name, m] : result.grads) m *= inv;
  result.loss.loss_summ *= inv;
  result.loss.loss_copy *= inv;
  result.loss.loss_total *= inv;
  return result;
}

TrainResult train(const ModelConfig& cfg, const TrainConfig& tcfg,
                  std::span<const Sample> data) {
  cfg.validate();
  tcfg.validate();
  require(!data.empty(), "train: no samples");
  for (const Sample& sample : data) validate_sample(cfg, sample);
  const int warmup =
      tcfg.strategy == TrainStrategy::two_stage ? tcfg.resolved_warmup() : 0;

  TrainResult result;
  result.params = init_model(cfg);
  result.log.reserve(static_cast<std::size_t>(tcfg.total_steps));
  std::mt19937_64 rng(tcfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();  // trigger a shuffle on first use
  std::vector<Sample> batch;
  batch.reserve(static_cast<std::size_t>(tcfg.batch_size));
  for (int step = 0; step < tcfg.total_steps; ++step) {
    batch.clear();
    for (int b = 0; b < tcfg.batch_size; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(data[order[cursor++]]);
    }
    Objective objective =
        step < warmup ? Objective::copy_only : Objective::full;
    GradResult gr = grad(result.params, cfg, batch, objective);
    if (!std::isfinite(gr.loss.loss_total) ||
        !std::isfinite(gr.loss.loss_summ) ||
        !std::isfinite(gr.loss.loss_copy)) {
      throw std::runtime_error("train: non-finite loss at step " +
                               std::to_string(step));
    }
    for (const auto& [name, gmat] : gr.grads) {
      result.params.at(name) -= tcfg.learning_rate * gmat;
    }
    result.log.push_back(gr.loss);
  }
  return result;
}

std::vector<int> beam_decode(const Params& params, const ModelConfig& cfg,
                             std::span<const int> src, int beam_size,
                             int max_len) {
  cfg.validate();
  require(beam_size >= 1, "beam_decode: beam_size must be positive");
  require(max_len >= 1 && max_len <= cfg.max_tgt_len,
          "beam_decode: max_len out of range");
  EncoderStates enc = encode(params, cfg, src);
  CopyIndicator ind = indicator(params, cfg, enc);

  struct Hyp {
    std::vector<int> seq;  // starts with the begin marker
    double logp = 0.0;
  };
  struct Done {
    std::vector<int> tokens;
    double norm = 0.0;
    double logp = 0.0;
  };
  std::vector<Hyp> active;
  active.push_back({{kBosId}, 0.0});
  std::vector<Done> finished;

  struct Cand {
    double score;
    int token;
    std::size_t hyp;
  };
  auto cand_before = [](const Cand& a, const Cand& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.token != b.token) return a.token < b.token;
    return a.hyp < b.hyp;
  };

  for (int t = 0; t < max_len && !active.empty(); ++t) {
    std::vector<Cand> cands;
    cands.reserve(active.size() * static_cast<std::size_t>(cfg.vocab_size));
    for (std::size_t i = 0; i < active.size(); ++i) {
      ForwardTrace tr = decode_step(params, cfg, enc, ind, active[i].seq);
      for (int w = 0; w < cfg.vocab_size; ++w) {
        if (w == kPadId || w == kBosId) continue;
        double p = tr.p_mix(w);
        double lp = p > 0.0 ? std::log(p)
                            : -std::numeric_limits<double>::infinity();
        cands.push_back({active[i].logp + lp, w, i});
      }
    }
    std::size_t keep =
        std::min(static_cast<std::size_t>(beam_size), cands.size());
    std::partial_sort(cands.begin(),
                      cands.begin() + static_cast<std::ptrdiff_t>(keep),
                      cands.end(), cand_before);
    std::vector<Hyp> next;
    next.reserve(keep);
    for (std::size_t c = 0; c < keep; ++c) {
      const Hyp& h = active[cands[c].hyp];
      if (cands[c].token == kEosId) {
        // emitted length counts the end marker
        double norm = cands[c].score / static_cast<double>(h.seq.size());
        finished.push_back({std::vector<int>(h.seq.begin() + 1, h.seq.end()),
                            norm, cands[c].score});
      } else {
        Hyp nh = h;
        nh.seq.push_back(cands[c].token);
        nh.logp = cands[c].score;
        next.push_back(std::move(nh));
      }
    }
    active = std::move(next);
  }
  for (const Hyp& h : active) {  // ran out of length without the end marker
    double emitted = static_cast<double>(h.seq.size() - 1);
    double norm = emitted > 0.0 ? h.logp / emitted : h.logp;
    finished.push_back(
        {std::vector<int>(h.seq.begin() + 1, h.seq.end()), norm, h.logp});
  }
  require(!finished.empty(), "beam_decode: no hypotheses");
  const Done* best = &finished.front();
  for (const Done& d : finished) {
    if (d.norm > best->norm ||
        (d.norm == best->norm && d.logp > best->logp) ||
        (d.norm == best->norm && d.logp == best->logp &&
         d.tokens < best->tokens)) {
      best = &d;
    }
  }
  return best->tokens;
}

}  // namespace prom
