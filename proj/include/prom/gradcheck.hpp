#pragma once

#include <cstdint>

#include "prom/model.hpp"

namespace prom {

struct GradCheckConfig {
  ModelConfig model;
  int src_len = 7;
  int tgt_len = 5;
  int coords = 200;   // sampled parameter coordinates
  double step = 1e-5;  // central-difference half step
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  int coords_checked = 0;
  double max_rel_err = 0.0;
  double mean_rel_err = 0.0;
};

// Compares analytic gradients against central finite differences of the
// total loss on one random sample. Relative error uses
// |g - fd| / max(|g|, |fd|, 1e-8).
GradCheckResult gradcheck(const GradCheckConfig& cfg);

}  // namespace prom
