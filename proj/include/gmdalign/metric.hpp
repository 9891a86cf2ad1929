/**
 * gmdalign
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <utility>
#include <variant>

#include <Eigen/Dense>
#include <json.hpp>

#include "gmdalign/corpus.hpp"
#include "gmdalign/errors.hpp"

namespace gmdalign {

struct MetricProvenance {
  std::string algorithm = "identity";  // "itml", "sdml", "identity", "file"
  std::int64_t trained_pairs = 0;
  std::int64_t seed = 0;
};

// A learned (or explicit) PSD matrix M defining d(x,y) = sqrt((x-y)^T M (x-y)).
// Construction symmetrizes and clamps tiny negative eigenvalues so the PSD
// invariant holds exactly from here on.
class MahalanobisMetric {
 public:
  static constexpr double kPsdTolerance = 1e-9;

  MahalanobisMetric(Eigen::MatrixXd m, MetricProvenance prov = {})
      : provenance_(std::move(prov)) {
    if (m.rows() != m.cols())
      throw DimensionMismatchError("metric matrix must be square, got " +
                                   std::to_string(m.rows()) + "x" +
                                   std::to_string(m.cols()));
    if (m.rows() < 1) throw ValidationError("metric matrix must be at least 1x1");
    m_ = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m_);
    const double min_eig = eig.eigenvalues().minCoeff();
    if (min_eig < -kPsdTolerance * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff()))
      throw ValidationError("metric matrix is not positive semidefinite "
                            "(min eigenvalue " + std::to_string(min_eig) + ")");
    if (min_eig < 0.0) {
      Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0);
      m_ = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
      m_ = 0.5 * (m_ + m_.transpose());
    }
  }

  static MahalanobisMetric identity(int dim) {
    return MahalanobisMetric(Eigen::MatrixXd::Identity(dim, dim),
                             MetricProvenance{"identity", 0, 0});
  }

  int dim() const noexcept { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const noexcept { return m_; }
  const MetricProvenance& provenance() const noexcept { return provenance_; }

 private:
  Eigen::MatrixXd m_;
  MetricProvenance provenance_;
};

struct EuclideanMetric {};
struct CosineMetric {};

using MetricKind = std::variant<EuclideanMetric, CosineMetric, MahalanobisMetric>;

inline const char* metric_name(const MetricKind& m) {
  if (std::holds_alternative<EuclideanMetric>(m)) return "euclidean";
  if (std::holds_alternative<CosineMetric>(m)) return "cosine";
  return "mahalanobis";
}

// ---- distance ----------------------------------------------------------------

namespace detail {

inline void check_dims(Eigen::Index nx, Eigen::Index ny, Eigen::Index want = -1) {
  if (nx != ny)
    throw DimensionMismatchError("vector lengths differ: " + std::to_string(nx) +
                                 " vs " + std::to_string(ny));
  if (want >= 0 && nx != want)
    throw DimensionMismatchError("vector length " + std::to_string(nx) +
                                 " does not match metric dim " + std::to_string(want));
}

}  // namespace detail

inline double euclidean_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  detail::check_dims(x.size(), y.size());
  const Eigen::VectorXd v = x - y;
  return std::sqrt(v.dot(v));
}

// 1 - cos(x, y), clamped to [0, 2] so all metrics share "smaller is closer".
inline double cosine_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  detail::check_dims(x.size(), y.size());
  const double nx = x.norm();
  const double ny = y.norm();
  if (nx < 1e-12 || ny < 1e-12)
    throw ZeroVectorError("cosine distance undefined for (near-)zero vector");
  const double sim = x.dot(y) / (nx * ny);
  return std::min(2.0, std::max(0.0, 1.0 - sim));
}

inline double mahalanobis_distance(const MahalanobisMetric& m,
                                   const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& y) {
  detail::check_dims(x.size(), y.size(), m.dim());
  const Eigen::VectorXd v = x - y;
  // Same reduction kernel as euclidean_distance, so M = I is bit-identical
  // to the Euclidean route.
  const double q = v.dot(m.matrix() * v);
  return std::sqrt(std::max(0.0, q));
}

inline double distance(const MetricKind& metric, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& y) {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, EuclideanMetric>)
          return euclidean_distance(x, y);
        else if constexpr (std::is_same_v<T, CosineMetric>)
          return cosine_distance(x, y);
        else
          return mahalanobis_distance(m, x, y);
      },
      metric);
}

// ---- factorization -------------------------------------------------------------

// L with L^T L = M, via eigendecomposition with negative eigenvalues clamped.
inline Eigen::MatrixXd factorize(const MahalanobisMetric& metric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(metric.matrix());
  const Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0);
  return ev.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

// ---- metric file ----------------------------------------------------------------
// One JSON header line {"dim","algorithm","trained_pairs","seed"} followed by
// dim*dim float64 little-endian, row-major.

inline void save_metric(const MahalanobisMetric& metric, const std::string& path) {
  nlohmann::json header;
  header["dim"] = metric.dim();
  header["algorithm"] = metric.provenance().algorithm;
  header["trained_pairs"] = metric.provenance().trained_pairs;
  header["seed"] = metric.provenance().seed;
  std::string out = header.dump();
  out += '\n';
  const auto& m = metric.matrix();
  for (int i = 0; i < metric.dim(); ++i)
    for (int j = 0; j < metric.dim(); ++j) detail::put_f64le(out, m(i, j));
  detail::write_file_bytes(path, out);
}

inline MahalanobisMetric load_metric(const std::string& path,
                                     std::ostream* warnings = nullptr) {
  const std::string bytes = detail::read_file_bytes(path);
  const std::size_t nl = bytes.find('\n');
  if (nl == std::string::npos)
    throw BadHeaderError(path + ": missing header line");
  nlohmann::json header = nlohmann::json::parse(bytes.substr(0, nl), nullptr, false);
  if (header.is_discarded() || !header.is_object() || !header.contains("dim"))
    throw BadHeaderError(path + ": header is not a JSON object with 'dim'");
  const int dim = header.at("dim").get<int>();
  if (dim < 1) throw BadHeaderError(path + ": dim must be positive");
  const std::string algorithm = header.value("algorithm", std::string("file"));
  if (algorithm != "itml" && algorithm != "sdml" && algorithm != "identity" &&
      algorithm != "file")
    throw BadHeaderError(path + ": unknown algorithm '" + algorithm + "'");
  const std::size_t body = bytes.size() - nl - 1;
  const std::size_t want = static_cast<std::size_t>(dim) * dim * 8;
  if (body != want)
    throw DimensionMismatchError(
        path + ": header dim " + std::to_string(dim) + " implies " +
        std::to_string(want) + " body bytes, file holds " + std::to_string(body));
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + nl + 1);
  Eigen::MatrixXd m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = detail::get_f64le(p + (i * dim + j) * 8);
  if (!m.allFinite())
    throw NonFiniteValueError(path + ": non-finite value in metric body");
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 && warnings)
    *warnings << "warning: " << path << ": matrix asymmetric by " << asym
              << ", symmetrizing\n";
  MetricProvenance prov;
  prov.algorithm = algorithm;
  prov.trained_pairs = header.value("trained_pairs", std::int64_t{0});
  prov.seed = header.value("seed", std::int64_t{0});
  return MahalanobisMetric(std::move(m), std::move(prov));
}

}  // namespace gmdalign
