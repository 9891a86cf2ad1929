/**
 * gmdalign
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#include <cmath>

#include <catch2/catch_amalgamated.hpp>

#include "gmdalign/gmd.hpp"
#include "gmdalign/rng.hpp"
#include "test_util.hpp"

using namespace gmdalign;

namespace {

// Embeds a desired distance matrix into 1-D points only when needed; most
// tests drive the low-level overload with explicit sentence matrices.
GmdResult run_greedy(const Eigen::VectorXd& wa, const Eigen::MatrixXd& xa,
                     const Eigen::VectorXd& wb, const Eigen::MatrixXd& xb) {
  return greedy_movers_distance(wa, xa, wb, xb, EuclideanMetric{});
}

Eigen::VectorXd simplex_weights(int n, DetRng& rng) {
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = -std::log(1.0 - rng.uniform());
  return w / w.sum();
}

void check_conservation(const GmdResult& r, const Eigen::VectorXd& wa,
                        const Eigen::VectorXd& wb) {
  Eigen::VectorXd out_a = Eigen::VectorXd::Zero(wa.size());
  Eigen::VectorXd out_b = Eigen::VectorXd::Zero(wb.size());
  double total = 0.0, cost = 0.0;
  for (const auto& m : r.trace.moves) {
    REQUIRE(m.mass > 0.0);
    out_a[m.src] += m.mass;
    out_b[m.tgt] += m.mass;
    total += m.mass;
    cost += m.mass * m.unit_dist;
  }
  for (int i = 0; i < wa.size(); ++i) REQUIRE(out_a[i] <= wa[i] + 1e-9);
  for (int j = 0; j < wb.size(); ++j) REQUIRE(out_b[j] <= wb[j] + 1e-9);
  REQUIRE(total == Catch::Approx(1.0).margin(1e-9));
  REQUIRE(cost == Catch::Approx(r.trace.total_cost).margin(1e-9));
}

}  // namespace

TEST_CASE("identical documents cost zero") {
  DetRng rng(1);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 5);
  Eigen::VectorXd w = simplex_weights(5, rng);
  const auto r = run_greedy(w, x, w, x);
  REQUIRE(r.distance == 0.0);
}

TEST_CASE("hand-traced 2x2 instance") {
  // Weights (0.6, 0.4) vs (0.5, 0.5) under distance matrix [[1,2],[3,1]].
  // Greedy: (a0,b0) 0.5, (a1,b1) 0.4, (a0,b1) 0.1 -> cost 1.1.
  Eigen::VectorXd wa(2), wb(2);
  wa << 0.6, 0.4;
  wb << 0.5, 0.5;
  Eigen::MatrixXd cost(2, 2);
  cost << 1, 2, 3, 1;

  // LP oracle: minimum of -3x + 2.6 over x in [0.1, 0.5] is 1.1 at x = 0.5.
  REQUIRE(exact_emd(wa, wb, cost) == Catch::Approx(1.1).margin(1e-9));

  // Points realizing the first three entries exactly: a0=(0,0,0), b0=(1,0,0),
  // b1=(0,2,0), a1=(0,2,1). The last entry becomes sqrt(6) instead of 3; it
  // carries no flow, so the greedy trace and cost are unchanged.
  Eigen::MatrixXd xa(3, 2), xb(3, 2);
  xa.col(0) << 0, 0, 0;
  xa.col(1) << 0, 2, 1;
  xb.col(0) << 1, 0, 0;
  xb.col(1) << 0, 2, 0;
  const auto r = run_greedy(wa, xa, wb, xb);
  REQUIRE(r.distance == Catch::Approx(1.1).margin(1e-9));
  REQUIRE(r.trace.moves.size() == 3);
  REQUIRE(r.trace.moves[0].mass == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(r.trace.moves[1].mass == Catch::Approx(0.4).margin(1e-12));
  REQUIRE(r.trace.moves[2].mass == Catch::Approx(0.1).margin(1e-12));
  check_conservation(r, wa, wb);
}

TEST_CASE("single-sentence documents move all mass at the metric distance") {
  Eigen::VectorXd w1(1), w2(1);
  w1 << 1.0;
  w2 << 1.0;
  Eigen::MatrixXd xa(3, 1), xb(3, 1);
  xa.col(0) << 1, 2, 3;
  xb.col(0) << 4, 6, 3;
  const auto r = run_greedy(w1, xa, w2, xb);
  REQUIRE(r.distance == Catch::Approx(5.0).margin(1e-12));
  REQUIRE(r.trace.moves.size() == 1);
  REQUIRE(r.trace.moves[0].mass == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("mass mismatch rejected") {
  Eigen::VectorXd wa(1), wb(1);
  wa << 1.0;
  wb << 0.9;
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2, 1);
  REQUIRE_THROWS_AS(run_greedy(wa, x, wb, x), MassMismatchError);
}

TEST_CASE("greedy is symmetric bit-for-bit") {
  DetRng rng(33);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + static_cast<int>(rng.below(7));
    const int m = 1 + static_cast<int>(rng.below(7));
    Eigen::MatrixXd xa(3, n), xb(3, m);
    for (int i = 0; i < n; ++i) xa.col(i) = testutil::random_vector(3, rng);
    for (int j = 0; j < m; ++j) xb.col(j) = testutil::random_vector(3, rng);
    const Eigen::VectorXd wa = simplex_weights(n, rng);
    const Eigen::VectorXd wb = simplex_weights(m, rng);
    const auto fwd = run_greedy(wa, xa, wb, xb);
    const auto rev = run_greedy(wb, xb, wa, xa);
    REQUIRE(fwd.distance == rev.distance);
  }
}

TEST_CASE("symmetric under heavy distance ties") {
  // Duplicate points force equal distances everywhere.
  Eigen::MatrixXd xa(2, 3), xb(2, 3);
  for (int i = 0; i < 3; ++i) {
    xa.col(i) << 0, 0;
    xb.col(i) << 1, 0;
  }
  Eigen::VectorXd wa(3), wb(3);
  wa << 0.2, 0.5, 0.3;
  wb << 0.6, 0.1, 0.3;
  const auto fwd = run_greedy(wa, xa, wb, xb);
  const auto rev = run_greedy(wb, xb, wa, xa);
  REQUIRE(fwd.distance == rev.distance);
  REQUIRE(fwd.distance == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("mahalanobis identity reproduces euclidean bitwise") {
  DetRng rng(44);
  const MetricKind ident = MahalanobisMetric::identity(4);
  const MetricKind euc = EuclideanMetric{};
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + static_cast<int>(rng.below(5));
    const int m = 1 + static_cast<int>(rng.below(5));
    Eigen::MatrixXd xa(4, n), xb(4, m);
    for (int i = 0; i < n; ++i) xa.col(i) = testutil::random_vector(4, rng);
    for (int j = 0; j < m; ++j) xb.col(j) = testutil::random_vector(4, rng);
    const Eigen::VectorXd wa = simplex_weights(n, rng);
    const Eigen::VectorXd wb = simplex_weights(m, rng);
    const auto a = greedy_movers_distance(wa, xa, wb, xb, euc);
    const auto b = greedy_movers_distance(wa, xa, wb, xb, ident);
    REQUIRE(a.distance == b.distance);
  }
}

TEST_CASE("exact EMD oracle basics") {
  SECTION("diagonal zeros with matching weights cost nothing") {
    Eigen::VectorXd w(3);
    w << 0.2, 0.5, 0.3;
    Eigen::MatrixXd cost(3, 3);
    cost << 0, 5, 9, 4, 0, 2, 7, 3, 0;
    REQUIRE(exact_emd(w, w, cost) == Catch::Approx(0.0).margin(1e-12));
  }

  SECTION("1 x n splits by target weights") {
    Eigen::VectorXd wa(1), wb(3);
    wa << 1.0;
    wb << 0.5, 0.25, 0.25;
    Eigen::MatrixXd cost(1, 3);
    cost << 2, 4, 8;
    REQUIRE(exact_emd(wa, wb, cost) ==
            Catch::Approx(0.5 * 2 + 0.25 * 4 + 0.25 * 8).margin(1e-9));
  }

  SECTION("instance larger than 64 cells rejected") {
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(9, 1.0 / 9);
    REQUIRE_THROWS_AS(exact_emd(w, w, Eigen::MatrixXd::Zero(9, 9)), TooLargeError);
  }
}

TEST_CASE("greedy upper-bounds the exact optimum") {
  DetRng rng(55);
  for (int t = 0; t < 300; ++t) {
    const int n = 1 + static_cast<int>(rng.below(8));
    const int m = 1 + static_cast<int>(rng.below(8));
    Eigen::MatrixXd xa(2, n), xb(2, m);
    for (int i = 0; i < n; ++i) xa.col(i) = testutil::random_vector(2, rng);
    for (int j = 0; j < m; ++j) xb.col(j) = testutil::random_vector(2, rng);
    const Eigen::VectorXd wa = simplex_weights(n, rng);
    const Eigen::VectorXd wb = simplex_weights(m, rng);
    const auto r = run_greedy(wa, xa, wb, xb);
    Eigen::MatrixXd cost(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) cost(i, j) = (xa.col(i) - xb.col(j)).norm();
    REQUIRE(r.distance >= exact_emd(wa, wb, cost) - 1e-9);
    check_conservation(r, wa, wb);
  }
}

TEST_CASE("greedy is exact on zero-cost perfect matchings") {
  DetRng rng(66);
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + static_cast<int>(rng.below(6));
    const Eigen::VectorXd w = simplex_weights(n, rng);
    // Target = permuted copy of the source points with matching masses.
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int i = n - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i + 1))]);
    Eigen::MatrixXd xa(3, n), xb(3, n);
    for (int i = 0; i < n; ++i) xa.col(i) = testutil::random_vector(3, rng);
    Eigen::VectorXd wb(n);
    for (int i = 0; i < n; ++i) {
      xb.col(i) = xa.col(perm[i]);
      wb[i] = w[perm[i]];
    }
    const auto r = run_greedy(w, xa, wb, xb);
    REQUIRE(r.distance == 0.0);
  }
}
