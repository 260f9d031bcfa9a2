#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "prom/graph.hpp"

namespace prom {

// Reserved token ids shared by every model.
inline constexpr int kPadId = 0;
inline constexpr int kBosId = 1;
inline constexpr int kEosId = 2;

struct ModelConfig {
  int vocab_size = 200;
  int model_dim = 32;
  int head_count = 2;
  int encoder_layers = 1;
  int decoder_layers = 1;
  int feedforward_dim = 64;
  int max_src_len = 48;
  int max_tgt_len = 32;
  int n = 2;            // order of the copy labels
  double lambda = 1.0;  // weight of the copy loss
  // When false the copy indicator and its fusion gate are bypassed and the
  // copy distribution is the normalized cross-attention (pointer baseline).
  bool use_copy_indicator = true;
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

// Named dense arrays. Weight matrices are stored input x output; random
// init draws Gaussians with standard deviation 1/sqrt(fan_in) where fan_in
// is the input dimension (model_dim for embedding tables); layer-norm gains
// start at one, every bias at zero.
struct Params {
  std::map<std::string, Mat> arrays;

  Mat& at(const std::string& name);
  const Mat& at(const std::string& name) const;
};

Params init_model(const ModelConfig& cfg);

struct EncoderStates {
  Mat h_en;              // source_len x model_dim
  std::vector<int> src;  // token ids, padding included
  int valid_len = 0;     // positions >= valid_len are padding
};

struct CopyIndicator {
  Eigen::VectorXd h_c;     // copy probability per non-pad source position
  Eigen::VectorXd z_ind;   // logits behind h_c
};

// Tensors of one decoding step (the newest target position).
struct ForwardTrace {
  Eigen::VectorXd h_de;     // decoder state, model_dim
  Eigen::VectorXd attn;     // mean cross-attention over source positions
  Eigen::VectorXd a_c;      // indicator-fused copy scores (pre-normalization)
  Eigen::VectorXd p_vocab;  // vocabulary distribution
  Eigen::VectorXd p_copy;   // copy distribution over the vocabulary
  double p_gen = 0.0;       // generation-path weight
  double p_copy_weight = 0.0;  // exactly 1 - p_gen
  Eigen::VectorXd p_mix;    // mixture distribution
};

struct LossBreakdown {
  double loss_summ = 0.0;
  double loss_copy = 0.0;
  double loss_total = 0.0;
  std::int64_t token_count = 0;  // gold tokens behind loss_summ
};

enum class TrainStrategy { multi_task, two_stage };

struct TrainConfig {
  TrainStrategy strategy = TrainStrategy::multi_task;
  int warmup_steps = -1;  // two-stage only; -1 -> total_steps / 10
  int total_steps = 1000;
  int batch_size = 8;
  double learning_rate = 0.05;
  int beam_size = 4;
  std::uint64_t seed = 0;

  void validate() const;
  int resolved_warmup() const;
};

struct Sample {
  std::vector<int> src;
  std::vector<int> tgt;  // without begin/end markers
  std::vector<std::uint8_t> copy_mask;  // per src position
};

EncoderStates encode(const Params& params, const ModelConfig& cfg,
                     std::span<const int> src, int valid_len = -1);

CopyIndicator indicator(const Params& params, const ModelConfig& cfg,
                        const EncoderStates& enc);

// prefix starts with the begin marker and holds already-generated tokens.
ForwardTrace decode_step(const Params& params, const ModelConfig& cfg,
                         const EncoderStates& enc, const CopyIndicator& ind,
                         std::span<const int> prefix);

// Teacher-forced forward over a whole target; steps[t] matches
// decode_step on the prefix of length t+1.
struct SequenceForward {
  std::vector<ForwardTrace> steps;
  CopyIndicator ind;
};
SequenceForward forward_teacher(const Params& params, const ModelConfig& cfg,
                                std::span<const int> src,
                                std::span<const int> tgt);

// Mean negative log-likelihood of the gold tokens under the mixture plus
// lambda times the indicator's binary cross-entropy against the copy mask.
LossBreakdown loss_total(std::span<const ForwardTrace> traces,
                         std::span<const int> gold, const CopyIndicator& ind,
                         std::span<const std::uint8_t> copy_mask,
                         double lambda);

enum class Objective { full, copy_only };

struct GradResult {
  std::map<std::string, Mat> grads;
  LossBreakdown loss;
};

// Mean-reduced exact gradients over the batch (reverse-mode over the
// forward graph).
GradResult grad(const Params& params, const ModelConfig& cfg,
                std::span<const Sample> batch,
                Objective objective = Objective::full);

struct TrainResult {
  Params params;
  std::vector<LossBreakdown> log;  // one entry per step
};

// Plain SGD with a fixed learning rate. two_stage optimizes the copy loss
// alone for the warmup steps (loss restriction, not parameter freezing),
// then the combined loss. Throws on non-finite losses.
TrainResult train(const ModelConfig& cfg, const TrainConfig& tcfg,
                  std::span<const Sample> data);

// Length-normalized beam search over the mixture distribution; ties prefer
// the lower token id. Returns generated tokens without begin/end markers.
std::vector<int> beam_decode(const Params& params, const ModelConfig& cfg,
                             std::span<const int> src, int beam_size,
                             int max_len);

}  // namespace prom
