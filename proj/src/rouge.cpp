#include "prom/rouge.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace prom {

namespace {

std::vector<std::string> word_tokens(const std::string& text) {
  return tokenize(text, true).tokens;
}

std::vector<std::vector<std::string>> newline_sentences(
    const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t pos = text.find('\n', start);
    std::string line = pos == std::string::npos
                           ? text.substr(start)
                           : text.substr(start, pos - start);
    std::vector<std::string> toks = word_tokens(line);
    if (!toks.empty()) out.push_back(std::move(toks));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

RougeScore ngram_score(const std::vector<std::string>& pred,
                       const std::vector<std::string>& ref, int n,
                       RougeVariant v) {
  auto count = [&](const std::vector<std::string>& toks) {
    std::unordered_map<std::string, int> c;
    const std::size_t un = static_cast<std::size_t>(n);
    if (toks.size() >= un) {
      for (std::size_t i = 0; i + un <= toks.size(); ++i) {
        std::string key;
        for (std::size_t k = 0; k < un; ++k) {
          if (k) key.push_back('\x1e');
          key += toks[i + k];
        }
        c[key] += 1;
      }
    }
    return c;
  };
  auto pc = count(pred);
  auto rc = count(ref);
  long long pred_total = 0;
  long long ref_total = 0;
  for (const auto& [k, c] : pc) pred_total += c;
  for (const auto& [k, c] : rc) ref_total += c;
  long long overlap = 0;
  for (const auto& [k, c] : pc) {
    auto it = rc.find(k);
    if (it != rc.end()) overlap += std::min(c, it->second);
  }
  double p = pred_total > 0 ? static_cast<double>(overlap) / pred_total : 0.0;
  double r = ref_total > 0 ? static_cast<double>(overlap) / ref_total : 0.0;
  Prf prf = make_prf(p, r);
  return {v, prf.precision, prf.recall, prf.f1};
}

std::size_t lcs_length(const std::vector<std::string>& a,
                       const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1]) {
        cur[j] = prev[j - 1] + 1;
      } else {
        cur[j] = std::max(prev[j], cur[j - 1]);
      }
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Indices of `a` participating in one LCS of a and b (standard backtrack).
std::vector<std::size_t> lcs_indices(const std::vector<std::string>& a,
                                     const std::vector<std::string>& b) {
  std::vector<std::size_t> out;
  if (a.empty() || b.empty()) return out;
  std::vector<std::vector<std::size_t>> dp(
      a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1]) {
        dp[i][j] = dp[i - 1][j - 1] + 1;
      } else {
        dp[i][j] = std::max(dp[i - 1][j], dp[i][j - 1]);
      }
    }
  }
  std::size_t i = a.size();
  std::size_t j = b.size();
  while (i > 0 && j > 0) {
    if (a[i - 1] == b[j - 1]) {
      out.push_back(i - 1);
      --i;
      --j;
    } else if (dp[i - 1][j] >= dp[i][j - 1]) {
      --i;
    } else {
      --j;
    }
  }
  std::reverse(out.begin(), out.end());
  return out;
}

RougeScore lcs_score(const std::vector<std::string>& pred,
                     const std::vector<std::string>& ref) {
  std::size_t lcs = lcs_length(pred, ref);
  double p = pred.empty() ? 0.0
                          : static_cast<double>(lcs) /
                                static_cast<double>(pred.size());
  double r = ref.empty() ? 0.0
                         : static_cast<double>(lcs) /
                               static_cast<double>(ref.size());
  Prf prf = make_prf(p, r);
  return {RougeVariant::rougeL, prf.precision, prf.recall, prf.f1};
}

RougeScore summary_lcs_score(const std::string& pred_text,
                             const std::string& ref_text) {
  auto pred_sents = newline_sentences(pred_text);
  auto ref_sents = newline_sentences(ref_text);
  std::size_t m = 0;
  std::size_t n = 0;
  std::unordered_map<std::string, int> ref_counts;
  std::unordered_map<std::string, int> pred_counts;
  for (const auto& s : ref_sents) {
    m += s.size();
    for (const auto& t : s) ref_counts[t] += 1;
  }
  for (const auto& s : pred_sents) {
    n += s.size();
    for (const auto& t : s) pred_counts[t] += 1;
  }
  std::size_t hits = 0;
  for (const auto& r : ref_sents) {
    std::set<std::size_t> lcs_union;
    for (const auto& c : pred_sents) {
      for (std::size_t idx : lcs_indices(r, c)) lcs_union.insert(idx);
    }
    for (std::size_t idx : lcs_union) {
      const std::string& tok = r[idx];
      auto rit = ref_counts.find(tok);
      auto pit = pred_counts.find(tok);
      if (rit != ref_counts.end() && rit->second > 0 &&
          pit != pred_counts.end() && pit->second > 0) {
        ++hits;
        rit->second -= 1;
        pit->second -= 1;
      }
    }
  }
  double p = n > 0 ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
  double r = m > 0 ? static_cast<double>(hits) / static_cast<double>(m) : 0.0;
  Prf prf = make_prf(p, r);
  return {RougeVariant::rougeLsum, prf.precision, prf.recall, prf.f1};
}

}  // namespace

const char* rouge_variant_name(RougeVariant v) {
  switch (v) {
    case RougeVariant::rouge1: return "rouge1";
    case RougeVariant::rouge2: return "rouge2";
    case RougeVariant::rougeL: return "rougeL";
    case RougeVariant::rougeLsum: return "rougeLsum";
  }
  return "rouge?";
}

RougeVariant parse_rouge_variant(const std::string& name) {
  if (name == "rouge1") return RougeVariant::rouge1;
  if (name == "rouge2") return RougeVariant::rouge2;
  if (name == "rougeL" || name == "rougel") return RougeVariant::rougeL;
  if (name == "rougeLsum" || name == "rougelsum") {
    return RougeVariant::rougeLsum;
  }
  throw std::invalid_argument("unknown rouge variant: " + name);
}

RougeScore rouge_f1(const std::string& pred, const std::string& ref,
                    RougeVariant variant) {
  switch (variant) {
    case RougeVariant::rouge1:
      return ngram_score(word_tokens(pred), word_tokens(ref), 1, variant);
    case RougeVariant::rouge2:
      return ngram_score(word_tokens(pred), word_tokens(ref), 2, variant);
    case RougeVariant::rougeL:
      return lcs_score(word_tokens(pred), word_tokens(ref));
    case RougeVariant::rougeLsum:
      return summary_lcs_score(pred, ref);
  }
  throw std::invalid_argument("unknown rouge variant");
}

std::vector<RougeScore> rouge_all(const std::string& pred,
                                  const std::string& ref) {
  return {rouge_f1(pred, ref, RougeVariant::rouge1),
          rouge_f1(pred, ref, RougeVariant::rouge2),
          rouge_f1(pred, ref, RougeVariant::rougeL),
          rouge_f1(pred, ref, RougeVariant::rougeLsum)};
}

}  // namespace prom
