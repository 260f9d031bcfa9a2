#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "prom/metrics.hpp"
#include "prom/text.hpp"

using prom::EfdNorm;
using prom::OverlapHistogramAccumulator;
using prom::PositionStat;
using prom::Prf;
using prom::SentenceSpan;
using prom::TokenSeq;
using prom::tokenize;

namespace {

TokenSeq make_seq(const std::vector<std::string>& tokens) {
  TokenSeq seq;
  seq.case_folded = true;
  std::size_t pos = 0;
  for (const std::string& t : tokens) {
    seq.tokens.push_back(t);
    seq.offsets.push_back({pos, pos + t.size()});
    pos += t.size() + 1;
  }
  return seq;
}

TokenSeq random_seq(std::mt19937_64& rng, std::size_t len, int alphabet) {
  std::vector<std::string> toks(len);
  for (auto& t : toks) t = std::string(1, char('a' + rng() % alphabet));
  return make_seq(toks);
}

// Greedy leftmost-longest shared fragments covering y; returns sum of len^2.
double oracle_sq_sum(const TokenSeq& x, const TokenSeq& y) {
  double sum = 0.0;
  std::size_t j = 0;
  while (j < y.size()) {
    std::size_t best = 0;
    for (std::size_t s = 0; s < x.size(); ++s) {
      std::size_t l = 0;
      while (s + l < x.size() && j + l < y.size() &&
             x.tokens[s + l] == y.tokens[j + l]) {
        ++l;
      }
      best = std::max(best, l);
    }
    if (best == 0) {
      ++j;
    } else {
      sum += static_cast<double>(best) * static_cast<double>(best);
      j += best;
    }
  }
  return sum;
}

std::set<std::vector<std::string>> window_set(const TokenSeq& seq, int n) {
  std::set<std::vector<std::string>> out;
  const std::size_t un = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + un <= seq.size(); ++i) {
    out.insert({seq.tokens.begin() + static_cast<long>(i),
                seq.tokens.begin() + static_cast<long>(i + un)});
  }
  return out;
}

}  // namespace

TEST_CASE("efd of a sequence against itself equals its length") {
  std::mt19937_64 rng(31);
  for (int round = 0; round < 100; ++round) {
    TokenSeq x = random_seq(rng, 1 + rng() % 60, 5);
    CHECK(prom::efd(x, x) == static_cast<double>(x.size()));
    CHECK(prom::efd(x, x, EfdNorm::summary) == static_cast<double>(x.size()));
  }
}

TEST_CASE("efd hand cases and normalizer sides") {
  TokenSeq x = tokenize("a b c d e f g h i j k l");
  TokenSeq y = tokenize("a b c q e f q q");
  // Fragments of length 3 and 2 over a 12-token source.
  CHECK(prom::efd(x, y) == doctest::Approx(13.0 / 12.0));
  CHECK(prom::efd(x, y, EfdNorm::summary) == doctest::Approx(13.0 / 8.0));

  TokenSeq z = tokenize("q r s");
  CHECK(prom::efd(x, z) == 0.0);
  CHECK(prom::efd(x, TokenSeq{}) == 0.0);
  CHECK_THROWS_AS(prom::efd(TokenSeq{}, y), std::invalid_argument);
  CHECK_THROWS_AS(prom::efd(x, TokenSeq{}, EfdNorm::summary),
                  std::invalid_argument);
}

TEST_CASE("efd matches the fragment oracle on random pairs") {
  std::mt19937_64 rng(37);
  for (int round = 0; round < 200; ++round) {
    TokenSeq x = random_seq(rng, 1 + rng() % 20, 4);
    TokenSeq y = random_seq(rng, 1 + rng() % 20, 4);
    double want = oracle_sq_sum(x, y) / static_cast<double>(x.size());
    CHECK(prom::efd(x, y) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("gsg scores a duplicated sentence at its own length") {
  TokenSeq doc = tokenize("red fox jumps red fox jumps blue whale sings");
  std::vector<SentenceSpan> spans = {{0, 3}, {3, 6}, {6, 9}};
  CHECK(prom::gsg_score(doc, spans, 0) == 3.0);
  CHECK(prom::gsg_score(doc, spans, 1) == 3.0);
  CHECK(prom::gsg_score(doc, spans, 2) == 0.0);
}

TEST_CASE("gsg matches a manual complement computation") {
  std::mt19937_64 rng(41);
  TokenSeq doc = random_seq(rng, 20, 3);
  std::vector<SentenceSpan> spans = {{0, 4}, {4, 9}, {9, 12}, {12, 17},
                                     {17, 20}};
  for (std::size_t i = 0; i < spans.size(); ++i) {
    TokenSeq self;
    TokenSeq rest;
    for (std::size_t s = 0; s < spans.size(); ++s) {
      for (std::size_t t = spans[s].start_token; t < spans[s].end_token; ++t) {
        ((s == i) ? self : rest).tokens.push_back(doc.tokens[t]);
      }
    }
    double want = oracle_sq_sum(self, rest) / static_cast<double>(self.size());
    CHECK(prom::gsg_score(doc, spans, i) == doctest::Approx(want));
  }
}

TEST_CASE("gsg rejects degenerate inputs") {
  TokenSeq doc = tokenize("one two three four");
  std::vector<SentenceSpan> one = {{0, 4}};
  CHECK_THROWS_AS(prom::gsg_score(doc, one, 0), std::invalid_argument);
  std::vector<SentenceSpan> two = {{0, 2}, {2, 4}};
  CHECK_THROWS_AS(prom::gsg_score(doc, two, 2), std::invalid_argument);
  std::vector<SentenceSpan> empty_self = {{0, 0}, {0, 4}};
  CHECK_THROWS_AS(prom::gsg_score(doc, empty_self, 0), std::invalid_argument);
  CHECK_THROWS_AS(prom::gsg_score(doc, empty_self, 1), std::invalid_argument);
}

TEST_CASE("copy length averages fragment lengths") {
  TokenSeq x = tokenize("a b c d e f g");
  CHECK(prom::copy_length(x, x) == 7.0);
  CHECK(prom::copy_length(x, tokenize("q r")) == 0.0);
  // Greedy fragments of lengths 3, 2, 1.
  CHECK(prom::copy_length(x, tokenize("a b c x e f x d")) == 2.0);
}

TEST_CASE("ngram novelty endpoints and oracle") {
  TokenSeq x = tokenize("the cat sat on the mat");
  CHECK(prom::ngram_novelty(x, tokenize("the cat sat"), 2) == 0.0);
  CHECK(prom::ngram_novelty(x, tokenize("dogs bark loudly"), 2) == 1.0);
  CHECK_THROWS_AS(prom::ngram_novelty(x, tokenize("the"), 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(prom::ngram_novelty(x, tokenize("the cat"), 0),
                  std::invalid_argument);

  std::mt19937_64 rng(43);
  for (int round = 0; round < 100; ++round) {
    for (int n = 1; n <= 3; ++n) {
      TokenSeq src = random_seq(rng, 1 + rng() % 15, 4);
      TokenSeq tgt = random_seq(rng, n + rng() % 15, 4);
      auto ys = window_set(tgt, n);
      auto xs = window_set(src, n);
      std::size_t novel = 0;
      for (const auto& w : ys) novel += xs.count(w) == 0 ? 1 : 0;
      double want = static_cast<double>(novel) / static_cast<double>(ys.size());
      CHECK(prom::ngram_novelty(src, tgt, n) == doctest::Approx(want));
    }
  }
}

TEST_CASE("prf construction") {
  Prf p = prom::make_prf(0.5, 0.25);
  CHECK(p.precision == 0.5);
  CHECK(p.recall == 0.25);
  CHECK(p.f1 == doctest::Approx(2.0 * 0.5 * 0.25 / 0.75));
  CHECK(prom::make_prf(0.0, 0.0).f1 == 0.0);
}

TEST_CASE("copied ngram f1 on an enumerated fixture") {
  TokenSeq src = tokenize("the cat sat on the mat");
  TokenSeq ref = tokenize("the cat sat on a mat");
  TokenSeq pred = tokenize("a cat sat on the mat");
  // Shared-with-source bigrams: ref {the cat, cat sat, sat on},
  // pred {cat sat, sat on, on the, the mat}, intersection size 2.
  Prf p = prom::copied_ngram_f1(src, ref, pred, 2);
  CHECK(p.precision == doctest::Approx(2.0 / 4.0));
  CHECK(p.recall == doctest::Approx(2.0 / 3.0));
  CHECK(p.f1 == doctest::Approx(4.0 / 7.0));
}

TEST_CASE("copied ngram f1 endpoints") {
  TokenSeq src = tokenize("alpha beta gamma delta");
  TokenSeq ref = tokenize("beta gamma epsilon");
  CHECK(prom::copied_ngram_f1(src, ref, ref, 2).f1 == 1.0);
  Prf none = prom::copied_ngram_f1(src, ref, tokenize("zeta eta theta"), 2);
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);
  // Order longer than the source leaves both sides empty.
  Prf empty = prom::copied_ngram_f1(src, ref, ref, 5);
  CHECK(empty.f1 == 0.0);
}

TEST_CASE("copied ngram f1 swaps precision and recall with its arguments") {
  std::mt19937_64 rng(47);
  for (int round = 0; round < 50; ++round) {
    TokenSeq src = random_seq(rng, 4 + rng() % 12, 3);
    TokenSeq a = random_seq(rng, 2 + rng() % 10, 3);
    TokenSeq b = random_seq(rng, 2 + rng() % 10, 3);
    Prf ab = prom::copied_ngram_f1(src, a, b, 2);
    Prf ba = prom::copied_ngram_f1(src, b, a, 2);
    CHECK(ab.precision == doctest::Approx(ba.recall));
    CHECK(ab.recall == doctest::Approx(ba.precision));
    CHECK(ab.f1 == doctest::Approx(ba.f1));
  }
}

TEST_CASE("entity prf with a custom recognizer") {
  prom::EntityRecognizer rec = [](const std::string& text) {
    prom::EntitySet out;
    for (const std::string& t : tokenize(text).tokens) out.insert(t);
    return out;
  };
  Prf p = prom::entity_prf("a b c", "b c d", rec);
  CHECK(p.precision == doctest::Approx(2.0 / 3.0));
  CHECK(p.recall == doctest::Approx(2.0 / 3.0));
  CHECK(p.f1 == doctest::Approx(2.0 / 3.0));
  CHECK(prom::entity_prf("a b", "", rec).f1 == 0.0);
}

TEST_CASE("default recognizer finds capitalized runs") {
  prom::EntitySet got = prom::recognize_entities(
      "Julian Assange met John Cusack at the Ecuadorian Embassy.");
  prom::EntitySet want = {"julian assange", "john cusack",
                          "ecuadorian embassy"};
  CHECK(got == want);
}

TEST_CASE("default recognizer drops lone sentence-initial stopwords") {
  CHECK(prom::recognize_entities("The cat met Alice.") ==
        prom::EntitySet{"alice"});
  // A multi-token run keeps its leading stopword.
  CHECK(prom::recognize_entities("The Beatles played.") ==
        prom::EntitySet{"the beatles"});
  CHECK(prom::recognize_entities("Alice left. However nobody cared.") ==
        prom::EntitySet{"alice"});
  // Mid-sentence lone capitals are kept.
  CHECK(prom::recognize_entities("we saw Paris yesterday") ==
        prom::EntitySet{"paris"});
}

TEST_CASE("gazetteer matching is fold-insensitive and optional") {
  prom::EntityRecognizerOptions opts;
  opts.gazetteer = {"ecuadorian embassy", "acme corp"};
  prom::EntitySet got =
      prom::recognize_entities("we visited the Ecuadorian embassy", opts);
  // The capitalized run contributes on top of the gazetteer hit.
  CHECK(got == prom::EntitySet{"ecuadorian", "ecuadorian embassy"});

  opts.use_capitalized_runs = false;
  got = prom::recognize_entities("Alice toured the ecuadorian embassy", opts);
  CHECK(got == prom::EntitySet{"ecuadorian embassy"});
}

TEST_CASE("gazetteer files are normalized on load") {
  const std::string path = "/tmp/prom_test_gazetteer.txt";
  {
    std::ofstream out(path, std::ios::binary);
    out << "# places\n\nAcme Corp\r\necuadorian embassy\n";
  }
  std::vector<std::string> entries = prom::load_gazetteer(path);
  REQUIRE(entries.size() == 2);
  CHECK(entries[0] == "acme corp");
  CHECK(entries[1] == "ecuadorian embassy");
  std::remove(path.c_str());
  CHECK_THROWS_AS(prom::load_gazetteer("/tmp/prom_absent_gazetteer.txt"),
                  std::runtime_error);
}

TEST_CASE("overlap histogram places matched windows by position") {
  OverlapHistogramAccumulator acc(4, 2);
  acc.add(tokenize("a b x x x x x x"), tokenize("a b"));
  prom::PositionHistogram h = acc.finalize();
  REQUIRE(h.mass.size() == 4);
  CHECK(h.mass[0] == 1.0);
  CHECK(h.mass[1] + h.mass[2] + h.mass[3] == 0.0);

  // A full-position window clamps into the final bin.
  OverlapHistogramAccumulator tail(4, 1);
  tail.add(tokenize("x y z"), tokenize("z"));
  CHECK(tail.finalize().mass[3] == 1.0);

  // No matches anywhere leaves all-zero mass.
  OverlapHistogramAccumulator none(4, 2);
  none.add(tokenize("a b c"), tokenize("p q"));
  for (double m : none.finalize().mass) CHECK(m == 0.0);
}

TEST_CASE("window start and midpoint statistics can disagree") {
  TokenSeq src = tokenize("x a b x x");
  TokenSeq tgt = tokenize("a b");
  OverlapHistogramAccumulator start(10, 2, PositionStat::window_start);
  start.add(src, tgt);
  CHECK(start.finalize().mass[2] == 1.0);
  OverlapHistogramAccumulator mid(10, 2, PositionStat::window_midpoint);
  mid.add(src, tgt);
  CHECK(mid.finalize().mass[3] == 1.0);
}

TEST_CASE("histogram mass sums to one and merge is order independent") {
  std::mt19937_64 rng(53);
  std::vector<std::pair<TokenSeq, TokenSeq>> pairs;
  for (int i = 0; i < 12; ++i) {
    TokenSeq src = random_seq(rng, 3 + rng() % 20, 3);
    TokenSeq tgt = (i % 4 == 0) ? src : random_seq(rng, 2 + rng() % 8, 3);
    pairs.emplace_back(src, tgt);
  }

  OverlapHistogramAccumulator all(8, 2);
  OverlapHistogramAccumulator front(8, 2);
  OverlapHistogramAccumulator back(8, 2);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    all.add(pairs[i].first, pairs[i].second);
    ((i < 6) ? front : back).add(pairs[i].first, pairs[i].second);
  }
  OverlapHistogramAccumulator merged_fb = front;
  merged_fb.merge(back);
  OverlapHistogramAccumulator merged_bf = back;
  merged_bf.merge(front);
  CHECK(merged_fb.counts() == all.counts());
  CHECK(merged_bf.counts() == all.counts());

  prom::PositionHistogram h = all.finalize();
  double total = 0.0;
  for (double m : h.mass) total += m;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

  prom::PositionHistogram direct = prom::overlap_position_histogram(
      std::span<const std::pair<TokenSeq, TokenSeq>>(pairs), 2, 8);
  CHECK(direct.mass == h.mass);
}

TEST_CASE("histogram parameter validation") {
  CHECK_THROWS_AS(OverlapHistogramAccumulator(1, 2), std::invalid_argument);
  CHECK_THROWS_AS(OverlapHistogramAccumulator(4, 0), std::invalid_argument);
  OverlapHistogramAccumulator a(4, 2);
  OverlapHistogramAccumulator b(8, 2);
  OverlapHistogramAccumulator c(4, 3);
  CHECK_THROWS_AS(a.merge(b), std::invalid_argument);
  CHECK_THROWS_AS(a.merge(c), std::invalid_argument);
}
