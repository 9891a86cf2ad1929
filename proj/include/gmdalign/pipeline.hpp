/**
 * gmdalign
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "gmdalign/corpus.hpp"
#include "gmdalign/errors.hpp"
#include "gmdalign/gmd.hpp"
#include "gmdalign/metric.hpp"
#include "gmdalign/weighting.hpp"

namespace gmdalign {

struct CandidateRef {
  std::size_t src = 0;  // index into the source document list
  std::size_t tgt = 0;
};

struct ScoredPair {
  std::string src;
  std::string tgt;
  double distance = 0.0;
};

struct DocPair {
  std::string src;
  std::string tgt;
  auto operator<=>(const DocPair&) const = default;
};

enum class MatchStrategy { ArgminPerSource, OneToOne };

struct RecallReport {
  std::size_t gold_size = 0;
  std::size_t found = 0;
  double recall = 0.0;
  std::vector<DocPair> missed;
};

// Same-calendar-date filtering; with the filter off, the full product.
inline std::vector<CandidateRef> candidate_pairs(std::span<const Document> src,
                                                 std::span<const Document> tgt,
                                                 bool date_filter) {
  std::vector<CandidateRef> out;
  if (date_filter) {
    for (const auto& d : src)
      if (!d.date) throw MissingDateError("document " + d.doc_id + " has no date");
    for (const auto& d : tgt)
      if (!d.date) throw MissingDateError("document " + d.doc_id + " has no date");
  }
  for (std::size_t i = 0; i < src.size(); ++i)
    for (std::size_t j = 0; j < tgt.size(); ++j)
      if (!date_filter || *src[i].date == *tgt[j].date) out.push_back({i, j});
  return out;
}

struct ScoreConfig {
  WeightScheme scheme = WeightScheme::SentenceLength;
  MetricKind metric = EuclideanMetric{};
  int jobs = 1;
};

// One GMD score per candidate, sorted by (distance, src id, tgt id). Scores
// land in per-candidate slots, so the result is identical for any job count.
inline std::vector<ScoredPair> score_all(const std::vector<CandidateRef>& candidates,
                                         std::span<const Document> src_docs,
                                         const EmbeddingMatrix& src_emb,
                                         std::span<const Document> tgt_docs,
                                         const EmbeddingMatrix& tgt_emb,
                                         const ScoreConfig& cfg) {
  const bool needs_idf =
      cfg.scheme == WeightScheme::Idf || cfg.scheme == WeightScheme::Slidf;
  IdfTable src_idf, tgt_idf;
  if (needs_idf) {
    src_idf = build_idf_table(src_docs);
    tgt_idf = build_idf_table(tgt_docs);
  }

  struct DocView {
    Eigen::VectorXd weights;
    Eigen::MatrixXd sentences;  // dim x n, promoted to double once
  };
  auto make_views = [&](std::span<const Document> docs, const EmbeddingMatrix& emb,
                        const IdfTable& idf) {
    std::vector<DocView> views(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const WeightedDocument wd =
          apply_weighting(docs[i], cfg.scheme, needs_idf ? &idf : nullptr);
      views[i].weights =
          Eigen::Map<const Eigen::VectorXd>(wd.weights.data(), wd.weights.size());
      views[i].sentences = detail::gather_columns(docs[i], emb);
    }
    return views;
  };
  const auto src_views = make_views(src_docs, src_emb, src_idf);
  const auto tgt_views = make_views(tgt_docs, tgt_emb, tgt_idf);

  std::vector<ScoredPair> scored(candidates.size());
  const int jobs = std::max(1, cfg.jobs);
  auto score_range = [&](std::size_t begin, std::size_t step) {
    for (std::size_t k = begin; k < candidates.size(); k += step) {
      const auto& c = candidates[k];
      const auto& a = src_views[c.src];
      const auto& b = tgt_views[c.tgt];
      const GmdResult r = greedy_movers_distance(a.weights, a.sentences, b.weights,
                                                 b.sentences, cfg.metric);
      scored[k] = {src_docs[c.src].doc_id, tgt_docs[c.tgt].doc_id, r.distance};
    }
  };
  if (jobs == 1) {
    score_range(0, 1);
  } else {
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int t = 0; t < jobs; ++t)
      workers.emplace_back([&, t] {
        try {
          score_range(static_cast<std::size_t>(t), static_cast<std::size_t>(jobs));
        } catch (...) {
          const std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::sort(scored.begin(), scored.end(), [](const ScoredPair& a, const ScoredPair& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.src != b.src) return a.src < b.src;
    return a.tgt < b.tgt;
  });
  return scored;
}

// ArgminPerSource: every source keeps its cheapest target (targets may repeat).
// OneToOne: competitive linking over the globally sorted list.
inline std::vector<DocPair> match(const std::vector<ScoredPair>& scored,
                                  MatchStrategy strategy) {
  std::vector<ScoredPair> ordered = scored;
  std::sort(ordered.begin(), ordered.end(),
            [](const ScoredPair& a, const ScoredPair& b) {
              if (a.distance != b.distance) return a.distance < b.distance;
              if (a.src != b.src) return a.src < b.src;
              return a.tgt < b.tgt;
            });
  std::vector<DocPair> matched;
  if (strategy == MatchStrategy::ArgminPerSource) {
    std::set<std::string> taken;
    for (const auto& s : ordered)
      if (taken.insert(s.src).second) matched.push_back({s.src, s.tgt});
  } else {
    std::set<std::string> src_taken, tgt_taken;
    for (const auto& s : ordered) {
      if (src_taken.count(s.src) || tgt_taken.count(s.tgt)) continue;
      src_taken.insert(s.src);
      tgt_taken.insert(s.tgt);
      matched.push_back({s.src, s.tgt});
    }
  }
  std::sort(matched.begin(), matched.end());
  return matched;
}

inline RecallReport evaluate(const std::vector<DocPair>& matched,
                             const GoldAlignment& gold) {
  if (gold.pairs.empty()) throw EmptyGoldError("gold alignment set is empty");
  RecallReport report;
  report.gold_size = gold.pairs.size();
  std::set<std::pair<std::string, std::string>> matched_set;
  for (const auto& m : matched) matched_set.emplace(m.src, m.tgt);
  for (const auto& g : gold.pairs) {
    if (matched_set.count(g))
      ++report.found;
    else
      report.missed.push_back({g.first, g.second});
  }
  report.recall =
      static_cast<double>(report.found) / static_cast<double>(report.gold_size);
  return report;
}

}  // namespace gmdalign
