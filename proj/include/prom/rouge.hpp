#pragma once

#include <string>
#include <vector>

#include "prom/metrics.hpp"

namespace prom {

enum class RougeVariant { rouge1, rouge2, rougeL, rougeLsum };

struct RougeScore {
  RougeVariant variant = RougeVariant::rouge1;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

const char* rouge_variant_name(RougeVariant v);
RougeVariant parse_rouge_variant(const std::string& name);

// Case-folded word tokens, no stemming or stopword removal. rouge1/rouge2
// clip n-gram counts; rougeL uses the token-level LCS over the whole texts;
// rougeLsum splits both texts on newlines and takes the count-clipped union
// LCS over sentence pairs.
RougeScore rouge_f1(const std::string& pred, const std::string& ref,
                    RougeVariant variant);

std::vector<RougeScore> rouge_all(const std::string& pred,
                                  const std::string& ref);

}  // namespace prom
