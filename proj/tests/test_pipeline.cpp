/**
 * gmdalign
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#include <algorithm>

#include <catch2/catch_amalgamated.hpp>

#include "gmdalign/pipeline.hpp"
#include "gmdalign/synth.hpp"
#include "test_util.hpp"

using namespace gmdalign;

namespace {

Document doc_on(const std::string& id, std::optional<Date> date,
                std::vector<std::int64_t> rows) {
  Document d{id, "xx", date, {}};
  for (auto r : rows) d.sentences.push_back({r, 5, 1, ""});
  return d;
}

}  // namespace

TEST_CASE("candidate_pairs date filtering") {
  const Date d1{2020, 1, 1}, d2{2020, 1, 2}, d3{2020, 1, 3};

  SECTION("all on one date gives the full product") {
    std::vector<Document> src{doc_on("a", d1, {0}), doc_on("b", d1, {0}),
                              doc_on("c", d1, {0})};
    std::vector<Document> tgt{doc_on("x", d1, {0}), doc_on("y", d1, {0}),
                              doc_on("z", d1, {0})};
    REQUIRE(candidate_pairs(src, tgt, true).size() == 9);
  }

  SECTION("only the shared date survives") {
    std::vector<Document> src{doc_on("a", d1, {0}), doc_on("b", d2, {0})};
    std::vector<Document> tgt{doc_on("x", d2, {0}), doc_on("y", d3, {0})};
    const auto cands = candidate_pairs(src, tgt, true);
    REQUIRE(cands.size() == 1);
    REQUIRE(cands[0].src == 1);
    REQUIRE(cands[0].tgt == 0);
  }

  SECTION("filter off keeps everything") {
    std::vector<Document> src{doc_on("a", d1, {0}), doc_on("b", std::nullopt, {0})};
    std::vector<Document> tgt{doc_on("x", d3, {0})};
    REQUIRE(candidate_pairs(src, tgt, false).size() == 2);
  }

  SECTION("missing date with filter on is an error") {
    std::vector<Document> src{doc_on("a", std::nullopt, {0})};
    std::vector<Document> tgt{doc_on("x", d1, {0})};
    REQUIRE_THROWS_AS(candidate_pairs(src, tgt, true), MissingDateError);
  }
}

TEST_CASE("score_all") {
  const auto src_emb = testutil::random_embedding(4, 6, 11);
  const auto tgt_emb = testutil::random_embedding(4, 6, 12);
  std::vector<Document> src{doc_on("a", std::nullopt, {0, 1}),
                            doc_on("b", std::nullopt, {2, 3})};
  std::vector<Document> tgt{doc_on("x", std::nullopt, {0, 1, 2}),
                            doc_on("y", std::nullopt, {3, 4})};

  SECTION("no candidates gives no scores") {
    REQUIRE(score_all({}, src, src_emb, tgt, tgt_emb, {}).empty());
  }

  SECTION("single candidate carries its GMD value") {
    const auto scored =
        score_all({{0, 1}}, src, src_emb, tgt, tgt_emb, ScoreConfig{});
    REQUIRE(scored.size() == 1);
    const auto wd_a = weight_sl(src[0]);
    const auto wd_b = weight_sl(tgt[1]);
    const auto direct =
        greedy_movers_distance(wd_a, src_emb, wd_b, tgt_emb, EuclideanMetric{});
    REQUIRE(scored[0].distance == direct.distance);
  }

  SECTION("scores are invariant under candidate order") {
    std::vector<CandidateRef> cands{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    const auto a = score_all(cands, src, src_emb, tgt, tgt_emb, {});
    std::reverse(cands.begin(), cands.end());
    const auto b = score_all(cands, src, src_emb, tgt, tgt_emb, {});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      REQUIRE(a[i].src == b[i].src);
      REQUIRE(a[i].tgt == b[i].tgt);
      REQUIRE(a[i].distance == b[i].distance);
    }
  }

  SECTION("job count does not change the output") {
    std::vector<CandidateRef> cands{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    ScoreConfig one, eight;
    eight.jobs = 8;
    const auto a = score_all(cands, src, src_emb, tgt, tgt_emb, one);
    const auto b = score_all(cands, src, src_emb, tgt, tgt_emb, eight);
    for (std::size_t i = 0; i < a.size(); ++i) {
      REQUIRE(a[i].src == b[i].src);
      REQUIRE(a[i].distance == b[i].distance);
    }
  }
}

TEST_CASE("match strategies") {
  const std::vector<ScoredPair> scored{
      {"a", "x", 1.0}, {"a", "y", 2.0}, {"b", "x", 1.5}};

  SECTION("one-to-one competitive linking") {
    // (a,x) accepted at 1.0; (b,x) blocked; b stays unmatched.
    const auto matched = match(scored, MatchStrategy::OneToOne);
    REQUIRE(matched == std::vector<DocPair>{{"a", "x"}});
  }

  SECTION("argmin per source") {
    const auto matched = match(scored, MatchStrategy::ArgminPerSource);
    REQUIRE(matched == std::vector<DocPair>{{"a", "x"}, {"b", "x"}});
  }

  SECTION("empty scored list") {
    REQUIRE(match({}, MatchStrategy::OneToOne).empty());
    REQUIRE(match({}, MatchStrategy::ArgminPerSource).empty());
  }

  SECTION("ties break lexicographically") {
    const std::vector<ScoredPair> tied{
        {"b", "x", 1.0}, {"a", "y", 1.0}, {"a", "x", 1.0}};
    const auto matched = match(tied, MatchStrategy::OneToOne);
    REQUIRE(matched == std::vector<DocPair>{{"a", "x"}, {"b", "y"}});
  }
}

TEST_CASE("evaluate") {
  GoldAlignment gold;
  gold.pairs = {{"a", "x"}, {"b", "y"}, {"c", "z"}, {"d", "w"}};

  SECTION("3 of 4 found") {
    const auto r =
        evaluate({{"a", "x"}, {"b", "y"}, {"c", "z"}, {"c", "q"}}, gold);
    REQUIRE(r.gold_size == 4);
    REQUIRE(r.found == 3);
    REQUIRE(r.recall == Catch::Approx(0.75).margin(1e-12));
    REQUIRE(r.missed == std::vector<DocPair>{{"d", "w"}});
  }

  SECTION("full recovery") {
    std::vector<DocPair> matched;
    for (const auto& g : gold.pairs) matched.push_back({g.first, g.second});
    const auto r = evaluate(matched, gold);
    REQUIRE(r.recall == 1.0);
    REQUIRE(r.missed.empty());
  }

  SECTION("disjoint matched set") {
    const auto r = evaluate({{"q", "q"}}, gold);
    REQUIRE(r.recall == 0.0);
    REQUIRE(r.found == 0);
  }

  SECTION("empty gold rejected") {
    REQUIRE_THROWS_AS(evaluate({{"a", "x"}}, GoldAlignment{}), EmptyGoldError);
  }

  SECTION("adding a correct pair never lowers recall") {
    std::vector<DocPair> matched{{"a", "x"}};
    const double before = evaluate(matched, gold).recall;
    matched.push_back({"b", "y"});
    REQUIRE(evaluate(matched, gold).recall >= before);
  }
}

TEST_CASE("pipeline end-to-end: identity metric equals euclidean") {
  SynthConfig cfg;
  cfg.docs = 12;
  cfg.sentences_per_doc = 4;
  cfg.dim = 6;
  cfg.noise_sigma = 0.4;
  cfg.transform = SynthTransform::Rotation;
  cfg.seed = 5;
  const auto corpus = make_synth_corpus(cfg);

  const auto cands = candidate_pairs(corpus.src_docs, corpus.tgt_docs, false);
  ScoreConfig euc;
  ScoreConfig ident;
  ident.metric = MahalanobisMetric::identity(cfg.dim);
  const auto scored_euc = score_all(cands, corpus.src_docs, corpus.src_emb,
                                    corpus.tgt_docs, corpus.tgt_emb, euc);
  const auto scored_id = score_all(cands, corpus.src_docs, corpus.src_emb,
                                   corpus.tgt_docs, corpus.tgt_emb, ident);
  const auto m_euc = match(scored_euc, MatchStrategy::OneToOne);
  const auto m_id = match(scored_id, MatchStrategy::OneToOne);
  REQUIRE(m_euc == m_id);
}

TEST_CASE("date filtering equals filtering the full product") {
  SynthConfig cfg;
  cfg.docs = 10;
  cfg.sentences_per_doc = 3;
  cfg.dim = 4;
  cfg.seed = 6;
  cfg.date_span_days = 3;
  const auto corpus = make_synth_corpus(cfg);

  const auto filtered = candidate_pairs(corpus.src_docs, corpus.tgt_docs, true);
  const auto full = candidate_pairs(corpus.src_docs, corpus.tgt_docs, false);
  const auto scored_f = score_all(filtered, corpus.src_docs, corpus.src_emb,
                                  corpus.tgt_docs, corpus.tgt_emb, {});
  auto scored_full = score_all(full, corpus.src_docs, corpus.src_emb,
                               corpus.tgt_docs, corpus.tgt_emb, {});
  // Restrict the full-product scores to same-date pairs.
  std::vector<ScoredPair> restricted;
  for (const auto& s : scored_full) {
    const auto src = std::find_if(corpus.src_docs.begin(), corpus.src_docs.end(),
                                  [&](const Document& d) { return d.doc_id == s.src; });
    const auto tgt = std::find_if(corpus.tgt_docs.begin(), corpus.tgt_docs.end(),
                                  [&](const Document& d) { return d.doc_id == s.tgt; });
    if (*src->date == *tgt->date) restricted.push_back(s);
  }
  REQUIRE(restricted.size() == scored_f.size());
  for (std::size_t i = 0; i < restricted.size(); ++i) {
    REQUIRE(restricted[i].src == scored_f[i].src);
    REQUIRE(restricted[i].tgt == scored_f[i].tgt);
    REQUIRE(restricted[i].distance == scored_f[i].distance);
  }
}
