#include "prom/gradcheck.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "prom/copy_label.hpp"

namespace prom {
namespace {

double loss_at(const Params& params, const ModelConfig& cfg,
               const Sample& sample) {
  SequenceForward sf = forward_teacher(params, cfg, sample.src, sample.tgt);
  std::vector<int> gold(sample.tgt.begin(), sample.tgt.end());
  gold.push_back(kEosId);
  return loss_total(sf.steps, gold, sf.ind, sample.copy_mask, cfg.lambda)
      .loss_total;
}

}  // namespace

GradCheckResult gradcheck(const GradCheckConfig& cfg) {
  cfg.model.validate();
  if (cfg.src_len < 1 || cfg.src_len > cfg.model.max_src_len) {
    throw std::invalid_argument("gradcheck: src_len out of range");
  }
  if (cfg.tgt_len < 1 || cfg.tgt_len > cfg.model.max_tgt_len) {
    throw std::invalid_argument("gradcheck: tgt_len out of range");
  }
  if (cfg.coords < 1) {
    throw std::invalid_argument("gradcheck: coords must be positive");
  }
  if (!(cfg.step > 0.0)) {
    throw std::invalid_argument("gradcheck: step must be positive");
  }

  std::mt19937_64 rng(cfg.seed);
  auto pick = [&rng](int lo, int hi) {  // inclusive
    return lo + static_cast<int>(rng() %
                                 static_cast<std::uint64_t>(hi - lo + 1));
  };
  Sample sample;
  sample.src.resize(static_cast<std::size_t>(cfg.src_len));
  sample.tgt.resize(static_cast<std::size_t>(cfg.tgt_len));
  for (int& id : sample.src) id = pick(3, cfg.model.vocab_size - 1);
  for (int& id : sample.tgt) id = pick(3, cfg.model.vocab_size - 1);
  sample.copy_mask = label_copy_ids(sample.src, sample.tgt, cfg.model.n);

  Params params = init_model(cfg.model);
  GradResult analytic = grad(params, cfg.model, {&sample, 1});

  // flat index space over every coordinate of every parameter
  std::vector<std::tuple<std::string, Eigen::Index, Eigen::Index>> layout;
  std::size_t total = 0;
  for (const auto& [name, m] : params.arrays) {
    layout.emplace_back(name, m.rows(), m.cols());
    total += static_cast<std::size_t>(m.rows() * m.cols());
  }
  std::set<std::size_t> chosen;
  const std::size_t want =
      std::min(static_cast<std::size_t>(cfg.coords), total);
  while (chosen.size() < want) chosen.insert(rng() % total);

  GradCheckResult result;
  for (std::size_t flat : chosen) {
    std::size_t offset = flat;
    const std::string* name = nullptr;
    Eigen::Index r = 0;
    Eigen::Index c = 0;
    for (const auto& [pname, rows, cols] : layout) {
      std::size_t count = static_cast<std::size_t>(rows * cols);
      if (offset < count) {
        name = &pname;
        r = static_cast<Eigen::Index>(offset) / cols;
        c = static_cast<Eigen::Index>(offset) % cols;
        break;
      }
      offset -= count;
    }

    Mat& target = params.at(*name);
    const double saved = target(r, c);
    target(r, c) = saved + cfg.step;
    double plus = loss_at(params, cfg.model, sample);
    target(r, c) = saved - cfg.step;
    double minus = loss_at(params, cfg.model, sample);
    target(r, c) = saved;

    double fd = (plus - minus) / (2.0 * cfg.step);
    double g = analytic.grads.at(*name)(r, c);
    // The floor absorbs finite-difference rounding noise (~1e-10) at
    // coordinates whose true gradient is exactly zero, e.g. attention key
    // biases, which cancel under the row softmax.
    double rel = std::abs(g - fd) /
                 std::max({std::abs(g), std::abs(fd), 1e-6});
    result.max_rel_err = std::max(result.max_rel_err, rel);
    result.mean_rel_err += rel;
    result.coords_checked += 1;
  }
  if (result.coords_checked > 0) {
    result.mean_rel_err /= static_cast<double>(result.coords_checked);
  }
  return result;
}

}  // namespace prom
