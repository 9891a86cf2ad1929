/**
 * gmdalign
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gmdalign/corpus.hpp"
#include "gmdalign/errors.hpp"
#include "gmdalign/rng.hpp"

namespace gmdalign {

enum class SynthTransform { Rotation, Affine };

struct SynthConfig {
  int docs = 100;                 // documents per side
  double sentences_per_doc = 10;  // Poisson mean, clamped to >= 1
  int dim = 16;
  double noise_sigma = 0.0;
  SynthTransform transform = SynthTransform::Rotation;
  std::uint64_t seed = 1;
  int train_pairs = 0;  // extra parallel rows kept out of all documents
  int date_span_days = 10;
};

struct SynthCorpus {
  EmbeddingMatrix src_emb;
  EmbeddingMatrix tgt_emb;
  std::vector<Document> src_docs;
  std::vector<Document> tgt_docs;
  GoldAlignment gold;
  ParallelPairSet pairs;
};

namespace detail {

inline Date add_days(Date d, int n) {
  for (int i = 0; i < n; ++i) {
    ++d.day;
    if (!is_valid_date(d.year, d.month, d.day)) {
      d.day = 1;
      ++d.month;
      if (d.month > 12) {
        d.month = 1;
        ++d.year;
      }
    }
  }
  return d;
}

// Near-identity random rotation: Q factor of I + (c/sqrt(dim)) G, sign-fixed.
// Kept close to identity so that translated sentences stay near their mates
// in the shared space, as multilingual encoders are trained to ensure.
inline Eigen::MatrixXd random_rotation(int dim, DetRng& rng) {
  Eigen::MatrixXd g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = rng.normal();
  const Eigen::MatrixXd m =
      Eigen::MatrixXd::Identity(dim, dim) + (0.15 / std::sqrt(double(dim))) * g;
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

// Anisotropic map: a jittered-identity block that carries shared content and
// a zeroed block standing in for language-specific dimensions.
inline Eigen::MatrixXd anisotropic_affine(int dim, DetRng& rng) {
  const int informative = std::max(2, static_cast<int>(std::lround(0.4 * dim)));
  Eigen::VectorXd scales = Eigen::VectorXd::Zero(dim);
  for (int k = 0; k < informative; ++k) scales[k] = rng.uniform(0.85, 1.15);
  return scales.asDiagonal();
}

}  // namespace detail

inline SynthCorpus make_synth_corpus(const SynthConfig& cfg) {
  if (cfg.docs < 2) throw ValidationError("synth needs at least 2 documents per side");
  if (cfg.dim < 2) throw ValidationError("synth needs dim >= 2");
  if (cfg.sentences_per_doc < 1.0)
    throw ValidationError("sentences-per-doc mean must be >= 1");
  if (cfg.noise_sigma < 0.0) throw ValidationError("noise sigma must be >= 0");
  if (cfg.train_pairs < 0) throw ValidationError("train-pairs must be >= 0");
  if (cfg.date_span_days < 1) throw ValidationError("date span must be >= 1 day");

  DetRng rng(cfg.seed);
  std::vector<int> doc_sizes(static_cast<std::size_t>(cfg.docs));
  std::size_t doc_rows = 0;
  for (auto& n : doc_sizes) {
    n = std::max(1, rng.poisson(cfg.sentences_per_doc));
    doc_rows += static_cast<std::size_t>(n);
  }
  const std::size_t total_rows = doc_rows + static_cast<std::size_t>(cfg.train_pairs);

  const Eigen::MatrixXd map = cfg.transform == SynthTransform::Rotation
                                  ? detail::random_rotation(cfg.dim, rng)
                                  : detail::anisotropic_affine(cfg.dim, rng);

  std::vector<float> src_data(total_rows * static_cast<std::size_t>(cfg.dim));
  std::vector<float> tgt_data(total_rows * static_cast<std::size_t>(cfg.dim));
  Eigen::VectorXd s(cfg.dim), t(cfg.dim);
  for (std::size_t r = 0; r < total_rows; ++r) {
    for (int k = 0; k < cfg.dim; ++k) s[k] = rng.normal();
    t = map * s;
    for (int k = 0; k < cfg.dim; ++k) t[k] += cfg.noise_sigma * rng.normal();
    for (int k = 0; k < cfg.dim; ++k) {
      src_data[r * cfg.dim + k] = static_cast<float>(s[k]);
      tgt_data[r * cfg.dim + k] = static_cast<float>(t[k]);
    }
  }

  SynthCorpus corpus;
  corpus.src_emb = EmbeddingMatrix(cfg.dim, std::move(src_data));
  corpus.tgt_emb = EmbeddingMatrix(cfg.dim, std::move(tgt_data));

  const Date base{2020, 1, 1};
  std::size_t offset = 0;
  for (int d = 0; d < cfg.docs; ++d) {
    char sid[16], tid[16];
    std::snprintf(sid, sizeof(sid), "s%05d", d);
    std::snprintf(tid, sizeof(tid), "t%05d", d);
    const Date date = detail::add_days(
        base, static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.date_span_days))));
    Document sd{sid, "l1", date, {}};
    Document td{tid, "l2", date, {}};
    for (int k = 0; k < doc_sizes[static_cast<std::size_t>(d)]; ++k) {
      const auto row = static_cast<std::int64_t>(offset++);
      const int tokens = 3 + static_cast<int>(rng.below(28));
      const int tgt_tokens = std::max(1, tokens - 2 + static_cast<int>(rng.below(5)));
      sd.sentences.push_back({row, tokens, 1, ""});
      td.sentences.push_back({row, tgt_tokens, 1, ""});
    }
    corpus.gold.pairs.emplace(sd.doc_id, td.doc_id);
    corpus.src_docs.push_back(std::move(sd));
    corpus.tgt_docs.push_back(std::move(td));
  }

  if (cfg.train_pairs > 0) {
    for (int k = 0; k < cfg.train_pairs; ++k) {
      const auto row = static_cast<std::int64_t>(doc_rows) + k;
      corpus.pairs.pairs.emplace_back(row, row);
    }
  } else {
    for (std::size_t r = 0; r < doc_rows; ++r)
      corpus.pairs.pairs.emplace_back(static_cast<std::int64_t>(r),
                                      static_cast<std::int64_t>(r));
  }
  return corpus;
}

inline void write_synth_corpus(const SynthCorpus& corpus, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto path = [&](const char* name) {
    return (std::filesystem::path(out_dir) / name).string();
  };
  write_embedding_matrix(corpus.src_emb, path("src.emb"));
  write_embedding_matrix(corpus.tgt_emb, path("tgt.emb"));
  write_manifest(corpus.src_docs, path("src_manifest.jsonl"));
  write_manifest(corpus.tgt_docs, path("tgt_manifest.jsonl"));
  write_gold(corpus.gold, path("gold.tsv"));
  write_pairs(corpus.pairs, path("pairs.tsv"));
}

}  // namespace gmdalign
