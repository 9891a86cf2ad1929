/**
 * gmdalign
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gmdalign/corpus.hpp"
#include "gmdalign/errors.hpp"
#include "gmdalign/metric.hpp"
#include "gmdalign/rng.hpp"

namespace gmdalign {

struct PairConstraint {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  bool similar = true;
};

enum class MetricPrior { Identity, Covariance };

struct NegativeSamplingConfig {
  double ratio = 1.0;  // dissimilar constraints per parallel pair
  std::uint64_t seed = 0;
};

struct ItmlConfig {
  double gamma = 1.0;       // slack trade-off
  int max_iter = 1000;      // sweeps over the constraint set
  double tol = 1e-3;        // mean absolute multiplier change per sweep
  double u_percentile = 5.0;
  double l_percentile = 95.0;
  MetricPrior prior = MetricPrior::Identity;
  std::int64_t seed = 0;
};

struct SdmlConfig {
  double sparsity_param = 0.01;  // L1 weight on off-diagonal entries
  double balance_param = 1e-3;   // constraint-loss weight
  int max_iter = 200;
  double tol = 1e-4;  // max absolute change of the covariance iterate per sweep
  MetricPrior prior = MetricPrior::Identity;
  std::int64_t seed = 0;
};

struct TrainingStats {
  int sweeps = 0;
  bool converged = false;
  double final_change = 0.0;
  double bound_u = 0.0;
  double bound_l = 0.0;
  double satisfied_before = 0.0;  // fraction of constraints met under the prior
  double satisfied_after = 0.0;   // fraction met under the learned metric
  std::vector<double> objective;  // per-sweep tracked objective (ITML)
};

struct TrainResult {
  MahalanobisMetric metric;
  TrainingStats stats;
};

// ---- constraint generation ------------------------------------------------------

// Every parallel pair becomes one Similar constraint. Dissimilar constraints
// pair source vectors round-robin with uniformly drawn non-mate targets.
inline std::vector<PairConstraint> build_constraints(
    const ParallelPairSet& pairs, const EmbeddingMatrix& src,
    const EmbeddingMatrix& tgt, const NegativeSamplingConfig& cfg) {
  if (cfg.ratio <= 0.0) throw ValidationError("negative-sampling ratio must be > 0");
  if (src.dim() != tgt.dim())
    throw DimensionMismatchError("embedding dims differ: " +
                                 std::to_string(src.dim()) + " vs " +
                                 std::to_string(tgt.dim()));
  const std::size_t n = pairs.pairs.size();
  if (n < 2)
    throw InsufficientPairsError("need at least 2 parallel pairs for negative "
                                 "sampling, got " + std::to_string(n));
  for (const auto& [si, ti] : pairs.pairs) {
    if (si < 0 || static_cast<std::uint64_t>(si) >= src.rows())
      throw RowOutOfBoundsError("source row " + std::to_string(si) + " out of bounds");
    if (ti < 0 || static_cast<std::uint64_t>(ti) >= tgt.rows())
      throw RowOutOfBoundsError("target row " + std::to_string(ti) + " out of bounds");
  }

  std::vector<PairConstraint> out;
  const std::size_t neg_count =
      static_cast<std::size_t>(std::ceil(cfg.ratio * static_cast<double>(n)));
  out.reserve(n + neg_count);
  for (const auto& [si, ti] : pairs.pairs)
    out.push_back({src.row_d(static_cast<std::size_t>(si)),
                   tgt.row_d(static_cast<std::size_t>(ti)), true});

  DetRng rng(cfg.seed);
  for (std::size_t k = 0; k < neg_count; ++k) {
    const auto& [si, mate] = pairs.pairs[k % n];
    std::int64_t drawn = mate;
    for (int attempt = 0; drawn == mate; ++attempt) {
      if (attempt >= 1000)
        throw InsufficientPairsError(
            "cannot draw a non-mate target; all target rows appear identical");
      drawn = pairs.pairs[rng.below(n)].second;
    }
    out.push_back({src.row_d(static_cast<std::size_t>(si)),
                   tgt.row_d(static_cast<std::size_t>(drawn)), false});
  }
  return out;
}

// ---- shared helpers ----------------------------------------------------------------

namespace detail {

inline double percentile(std::vector<double> values, double pct) {
  std::sort(values.begin(), values.end());
  if (values.empty()) return 0.0;
  const double rank = pct / 100.0 * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = rank - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

inline void validate_constraints(const std::vector<PairConstraint>& constraints) {
  if (constraints.empty()) throw ValidationError("no constraints");
  const Eigen::Index dim = constraints.front().x.size();
  std::size_t sim = 0, dis = 0;
  for (const auto& c : constraints) {
    if (c.x.size() != dim || c.y.size() != dim)
      throw DimensionMismatchError("constraint vectors have inconsistent dims");
    if (!c.x.allFinite() || !c.y.allFinite())
      throw ValidationError("constraint vector has non-finite component");
    (c.similar ? sim : dis) += 1;
  }
  if (sim == 0 || dis == 0)
    throw ValidationError("need at least one similar and one dissimilar "
                          "constraint (got " + std::to_string(sim) + " similar, " +
                          std::to_string(dis) + " dissimilar)");
}

// Prior metric M0: identity, or the inverse covariance of all endpoint vectors.
inline Eigen::MatrixXd prior_matrix(const std::vector<PairConstraint>& constraints,
                                    MetricPrior prior) {
  const Eigen::Index d = constraints.front().x.size();
  if (prior == MetricPrior::Identity) return Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  const double count = 2.0 * static_cast<double>(constraints.size());
  for (const auto& c : constraints) mean += c.x + c.y;
  mean /= count;
  for (const auto& c : constraints) {
    const Eigen::VectorXd dx = c.x - mean;
    const Eigen::VectorXd dy = c.y - mean;
    cov += dx * dx.transpose() + dy * dy.transpose();
  }
  cov /= std::max(1.0, count - 1.0);
  cov += 1e-6 * std::max(1.0, cov.diagonal().mean()) *
         Eigen::MatrixXd::Identity(d, d);
  return cov.llt().solve(Eigen::MatrixXd::Identity(d, d));
}

inline double logdet_pd(const Eigen::MatrixXd& m) {
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  return ldlt.vectorD().array().max(1e-300).log().sum();
}

inline double satisfied_fraction(const Eigen::MatrixXd& m,
                                 const std::vector<PairConstraint>& constraints,
                                 double u, double l) {
  std::size_t ok = 0;
  for (const auto& c : constraints) {
    const Eigen::VectorXd v = c.x - c.y;
    const double d2 = v.dot(m * v);
    if (c.similar ? d2 <= u : d2 >= l) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(constraints.size());
}

}  // namespace detail

// ---- ITML ---------------------------------------------------------------------------

// Cyclic Bregman projections with slack: one closed-form LogDet projection per
// constraint and sweep. Each projection solves its coordinate subproblem
// exactly, so the dual objective never decreases; stats.objective tracks its
// negation per sweep.
inline TrainResult train_itml(const std::vector<PairConstraint>& constraints,
                              const ItmlConfig& cfg) {
  detail::validate_constraints(constraints);
  if (cfg.gamma <= 0.0) throw ValidationError("gamma must be positive");
  if (cfg.max_iter < 0) throw ValidationError("max_iter must be non-negative");
  if (!(cfg.u_percentile < cfg.l_percentile))
    throw ValidationError("u_percentile must be below l_percentile");

  const std::size_t num_c = constraints.size();
  const Eigen::MatrixXd prior = detail::prior_matrix(constraints, cfg.prior);
  std::vector<Eigen::VectorXd> diffs(num_c);
  std::vector<double> prior_d2(num_c);
  for (std::size_t c = 0; c < num_c; ++c) {
    diffs[c] = constraints[c].x - constraints[c].y;
    prior_d2[c] = diffs[c].dot(prior * diffs[c]);
  }
  const double u = detail::percentile(prior_d2, cfg.u_percentile);
  const double l = detail::percentile(prior_d2, cfg.l_percentile);
  if (l <= 1e-15)
    throw DegenerateConstraintsError(
        "constraint vectors are all (near-)identical; distance bounds collapse");

  const bool unbounded_slack = std::isinf(cfg.gamma);
  const double gamma_proj =
      unbounded_slack ? 1.0 : cfg.gamma / (cfg.gamma + 1.0);
  Eigen::MatrixXd a = prior;
  std::vector<double> lambda(num_c, 0.0), lambda_prev(num_c, 0.0);
  std::vector<double> xi(num_c), xi0(num_c);
  for (std::size_t c = 0; c < num_c; ++c) xi0[c] = xi[c] = constraints[c].similar ? u : l;

  TrainingStats stats;
  stats.bound_u = u;
  stats.bound_l = l;
  stats.satisfied_before = detail::satisfied_fraction(prior, constraints, u, l);
  const double prior_logdet = detail::logdet_pd(prior);

  for (int sweep = 0; sweep < cfg.max_iter; ++sweep) {
    for (std::size_t c = 0; c < num_c; ++c) {
      // Zero or collapsed bound: the projection is an exact no-op.
      if (xi[c] <= 1e-15) continue;
      const Eigen::VectorXd& v = diffs[c];
      const Eigen::VectorXd av = a * v;
      const double p = v.dot(av);
      if (p <= 1e-15) continue;
      double alpha, beta;
      if (constraints[c].similar) {
        alpha = std::min(lambda[c], gamma_proj * (1.0 / p - 1.0 / xi[c]));
        beta = alpha / (1.0 - alpha * p);
        if (!unbounded_slack) xi[c] = 1.0 / (1.0 / xi[c] + alpha / cfg.gamma);
      } else {
        alpha = std::min(lambda[c], gamma_proj * (1.0 / xi[c] - 1.0 / p));
        beta = -alpha / (1.0 + alpha * p);
        if (!unbounded_slack) xi[c] = 1.0 / (1.0 / xi[c] - alpha / cfg.gamma);
      }
      lambda[c] -= alpha;
      a.noalias() += beta * av * av.transpose();
    }
    stats.sweeps = sweep + 1;

    double slack_term = 0.0;
    if (!unbounded_slack)
      for (std::size_t c = 0; c < num_c; ++c)
        slack_term += std::log(xi[c] / xi0[c]);
    stats.objective.push_back(detail::logdet_pd(a) - prior_logdet +
                              cfg.gamma * slack_term);

    double change = 0.0;
    for (std::size_t c = 0; c < num_c; ++c)
      change += std::abs(lambda[c] - lambda_prev[c]);
    change /= static_cast<double>(num_c);
    stats.final_change = change;
    if (change <= cfg.tol) {
      stats.converged = true;
      break;
    }
    lambda_prev = lambda;
  }
  if (cfg.max_iter == 0) stats.converged = true;

  stats.satisfied_after = detail::satisfied_fraction(a, constraints, u, l);
  std::int64_t sim_count = 0;
  for (const auto& c : constraints) sim_count += c.similar ? 1 : 0;
  MetricProvenance prov{"itml", sim_count, cfg.seed};
  return TrainResult{MahalanobisMetric(std::move(a), std::move(prov)), stats};
}

// ---- graphical lasso ------------------------------------------------------------------

namespace detail {

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// Block coordinate descent for
//   min_{Theta > 0}  tr(S Theta) - log det Theta + lambda * sum_{i != j} |Theta_ij|
// following Friedman, Hastie & Tibshirani (2008). Returns the precision
// matrix; the W iterate estimates its inverse.
inline Eigen::MatrixXd graphical_lasso(const Eigen::MatrixXd& s, double lambda,
                                       int max_iter, double tol,
                                       TrainingStats* stats) {
  const int p = static_cast<int>(s.rows());
  if (p == 1) {
    stats->converged = true;
    stats->sweeps = 0;
    return Eigen::MatrixXd::Constant(1, 1, 1.0 / s(0, 0));
  }

  Eigen::MatrixXd w = s;  // diagonal is never penalized: w_jj stays s_jj
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p - 1, p);
  Eigen::MatrixXd w11(p - 1, p - 1);
  Eigen::VectorXd s12(p - 1), beta(p - 1);
  const double inner_tol = std::max(tol * 1e-2, 1e-14);

  auto others = [&](int j, int k) { return k < j ? k : k + 1; };

  bool converged = false;
  double max_delta = std::numeric_limits<double>::infinity();
  int sweep = 0;
  for (; sweep < max_iter && !converged; ++sweep) {
    max_delta = 0.0;
    for (int j = 0; j < p; ++j) {
      for (int r = 0; r < p - 1; ++r) {
        s12[r] = s(others(j, r), j);
        for (int c = 0; c < p - 1; ++c) w11(r, c) = w(others(j, r), others(j, c));
      }
      beta = b.col(j);
      for (int inner = 0; inner < 1000; ++inner) {
        double inner_delta = 0.0;
        for (int k = 0; k < p - 1; ++k) {
          const double gradient = w11.row(k).dot(beta) - w11(k, k) * beta[k];
          const double updated =
              soft_threshold(s12[k] - gradient, lambda) / w11(k, k);
          inner_delta = std::max(inner_delta, std::abs(updated - beta[k]));
          beta[k] = updated;
        }
        if (inner_delta <= inner_tol) break;
      }
      const Eigen::VectorXd w12 = w11 * beta;
      for (int r = 0; r < p - 1; ++r) {
        const int row = others(j, r);
        max_delta = std::max(max_delta, std::abs(w(row, j) - w12[r]));
        w(row, j) = w12[r];
        w(j, row) = w12[r];
      }
      b.col(j) = beta;
    }
    if (max_delta <= tol) converged = true;
  }

  Eigen::MatrixXd theta(p, p);
  for (int j = 0; j < p; ++j) {
    double quad = 0.0;
    for (int r = 0; r < p - 1; ++r) quad += w(others(j, r), j) * b(r, j);
    const double theta_jj = 1.0 / std::max(w(j, j) - quad, 1e-300);
    theta(j, j) = theta_jj;
    for (int r = 0; r < p - 1; ++r) theta(others(j, r), j) = -b(r, j) * theta_jj;
  }
  theta = 0.5 * (theta + theta.transpose()).eval();

  stats->sweeps = sweep;
  stats->converged = converged;
  stats->final_change = max_delta;
  if (!converged)
    throw NonConvergenceError(
        "graphical lasso did not reach tol " + std::to_string(tol) + " within " +
            std::to_string(max_iter) + " sweeps (last change " +
            std::to_string(max_delta) + ")",
        theta);
  return theta;
}

}  // namespace detail

// ---- SDML ---------------------------------------------------------------------------

// Sparse metric learning: the constraint-weighted scatter is folded into the
// prior's inverse, and the metric is the L1-penalized precision matrix of the
// result.
inline TrainResult train_sdml(const std::vector<PairConstraint>& constraints,
                              const SdmlConfig& cfg) {
  detail::validate_constraints(constraints);
  if (cfg.sparsity_param < 0.0) throw ValidationError("sparsity_param must be >= 0");
  if (cfg.balance_param < 0.0) throw ValidationError("balance_param must be >= 0");
  if (cfg.max_iter < 1) throw ValidationError("max_iter must be positive");

  const Eigen::Index d = constraints.front().x.size();
  const Eigen::MatrixXd prior = detail::prior_matrix(constraints, cfg.prior);
  Eigen::MatrixXd prior_inv =
      cfg.prior == MetricPrior::Identity
          ? Eigen::MatrixXd::Identity(d, d)
          : prior.llt().solve(Eigen::MatrixXd::Identity(d, d)).eval();

  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
  for (const auto& c : constraints) {
    const Eigen::VectorXd v = c.x - c.y;
    scatter.noalias() += (c.similar ? 1.0 : -1.0) * v * v.transpose();
  }
  Eigen::MatrixXd sigma = prior_inv + cfg.balance_param * scatter;
  sigma = 0.5 * (sigma + sigma.transpose()).eval();

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig < 1e-10)
    sigma += (std::abs(std::min(min_eig, 0.0)) + 1e-6) *
             Eigen::MatrixXd::Identity(d, d);

  TrainingStats stats;
  std::vector<double> prior_d2(constraints.size());
  for (std::size_t c = 0; c < constraints.size(); ++c) {
    const Eigen::VectorXd v = constraints[c].x - constraints[c].y;
    prior_d2[c] = v.dot(prior * v);
  }
  const double u = detail::percentile(prior_d2, 5.0);
  const double l = detail::percentile(prior_d2, 95.0);
  stats.bound_u = u;
  stats.bound_l = l;
  stats.satisfied_before = detail::satisfied_fraction(prior, constraints, u, l);

  Eigen::MatrixXd theta = detail::graphical_lasso(
      sigma, cfg.sparsity_param, cfg.max_iter, cfg.tol, &stats);

  stats.satisfied_after = detail::satisfied_fraction(theta, constraints, u, l);
  std::int64_t sim_count = 0;
  for (const auto& c : constraints) sim_count += c.similar ? 1 : 0;
  MetricProvenance prov{"sdml", sim_count, cfg.seed};
  return TrainResult{MahalanobisMetric(std::move(theta), std::move(prov)), stats};
}

}  // namespace gmdalign
