#pragma once

#include <string>

#include "prom/model.hpp"

namespace prom {

struct Checkpoint {
  ModelConfig config;
  Params params;
};

// Binary format, little-endian throughout:
//   magic "PROMCKPT" (8 bytes)
//   uint32 version
//   uint64 config length, then that many bytes of JSON
//   uint64 array count, then per array (in name order):
//     uint32 name length, name bytes,
//     uint32 rank (always 2), uint64 rows, uint64 cols,
//     rows*cols float64 values, row-major
// Identical configs and parameters serialize to identical bytes.
void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     const Params& params);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace prom
