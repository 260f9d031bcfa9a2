#include "prom/synthetic.hpp"

#include <random>
#include <stdexcept>
#include <utility>

#include "prom/copy_label.hpp"

namespace prom {
namespace {

constexpr int kOpenId = 3;
constexpr int kSepId = 4;
constexpr int kCloseId = 5;

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

void SyntheticConfig::validate() const {
  require(sample_count >= 1, "synthetic config: sample_count must be positive");
  require(phrase_token_count >= 2,
          "synthetic config: phrase bank needs at least two ids");
  require(filler_hi() > filler_lo(),
          "synthetic config: vocabulary leaves no filler ids");
  require(max_phrases >= 1, "synthetic config: max_phrases must be positive");
  require(min_phrase_len >= 1 && min_phrase_len <= max_phrase_len,
          "synthetic config: bad phrase length range");
  require(min_filler >= 1 && min_filler <= max_filler,
          "synthetic config: bad filler length range");
  require(n >= 1 && n <= min_phrase_len,
          "synthetic config: n must fit inside the shortest phrase");
}

std::vector<Sample> make_synthetic_task(const SyntheticConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  auto pick = [&rng](int lo, int hi) {  // inclusive range
    return lo + static_cast<int>(rng() %
                                 static_cast<std::uint64_t>(hi - lo + 1));
  };
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(cfg.sample_count));
  for (int s = 0; s < cfg.sample_count; ++s) {
    int phrase_count = pick(1, cfg.max_phrases);
    std::vector<std::vector<int>> phrases;
    phrases.reserve(static_cast<std::size_t>(phrase_count));
    for (int p = 0; p < phrase_count; ++p) {
      int len = pick(cfg.min_phrase_len, cfg.max_phrase_len);
      std::vector<int> phrase(static_cast<std::size_t>(len));
      for (int& id : phrase) id = pick(cfg.bank_lo(), cfg.vocab_size - 1);
      phrases.push_back(std::move(phrase));
    }
    Sample sample;
    auto filler_run = [&] {
      int len = pick(cfg.min_filler, cfg.max_filler);
      for (int i = 0; i < len; ++i) {
        sample.src.push_back(pick(cfg.filler_lo(), cfg.filler_hi() - 1));
      }
    };
    filler_run();
    for (const std::vector<int>& phrase : phrases) {
      sample.src.insert(sample.src.end(), phrase.begin(), phrase.end());
      filler_run();
    }
    sample.tgt.push_back(kOpenId);
    for (std::size_t p = 0; p < phrases.size(); ++p) {
      if (p > 0) sample.tgt.push_back(kSepId);
      sample.tgt.insert(sample.tgt.end(), phrases[p].begin(),
                        phrases[p].end());
    }
    sample.tgt.push_back(kCloseId);
    sample.copy_mask = label_copy_ids(sample.src, sample.tgt, cfg.n);
    samples.push_back(std::move(sample));
  }
  return samples;
}

}  // namespace prom
