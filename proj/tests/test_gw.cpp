#include "coot/gw.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace coot;
using coot::testing::kind_of;

namespace {

Matrix random_symmetric(std::mt19937_64& rng, Eigen::Index n) {
  const Matrix A = oracle::random_matrix(rng, n, n, 0.0, 2.0);
  return (A + A.transpose()) / 2.0;
}

}  // namespace

TEST_CASE("sqeuclid_matrix examples") {
  Matrix p1(2, 1), p2(2, 2);
  p1 << 0, 1;
  p2 << 0, 0, 3, 4;
  Matrix e1(2, 2), e2(2, 2);
  e1 << 0, 1, 1, 0;
  e2 << 0, 25, 25, 0;
  CHECK(sqeuclid_matrix(p1).matrix == e1);
  CHECK(sqeuclid_matrix(p2).matrix == e2);
  CHECK(sqeuclid_matrix(p2).kind == SimilarityKind::SquaredEuclidean);
}

TEST_CASE("sqeuclid_matrix matches a double loop") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 10; ++t) {
    const Matrix P = oracle::random_matrix(rng, 4, 3, -5, 5);
    const auto C = sqeuclid_matrix(P);
    for (Eigen::Index i = 0; i < 4; ++i)
      for (Eigen::Index j = 0; j < 4; ++j) {
        CHECK(std::abs(C.matrix(i, j) - (P.row(i) - P.row(j)).squaredNorm()) <= 1e-12);
        CHECK(C.matrix(i, j) == C.matrix(j, i));
        CHECK(C.matrix(i, j) >= 0.0);
      }
    CHECK(C.matrix.diagonal().isZero(0.0));
  }
}

TEST_CASE("generic similarity validation") {
  CHECK(kind_of([] { SimilarityMatrix::generic(Matrix::Zero(2, 3)); }) == ErrorKind::InvalidDimension);
  Matrix asym = Matrix::Zero(2, 2);
  asym(0, 1) = 1.0;
  CHECK(kind_of([&] { SimilarityMatrix::generic(asym); }) == ErrorKind::Domain);
  CHECK(SimilarityMatrix::generic(Matrix::Identity(3, 3)).kind == SimilarityKind::Generic);
}

TEST_CASE("gw objective examples") {
  std::mt19937_64 rng(3);
  const auto C = sqeuclid_matrix(oracle::random_matrix(rng, 4, 2));
  CHECK(std::abs(gw_objective(C, C, Matrix::Identity(4, 4) / 4.0, kSquaredEuclidean)) <= 1e-15);

  Matrix two(2, 2), anti(2, 2);
  two << 0, 1, 1, 0;
  anti << 0, 0.5, 0.5, 0;
  const auto D = SimilarityMatrix::generic(two);
  CHECK(gw_objective(D, D, anti, kSquaredEuclidean) == 0.0);
  CHECK(gw_objective(D, D, Matrix::Identity(2, 2) / 2.0, kSquaredEuclidean) == 0.0);

  const auto A = sqeuclid_matrix(oracle::random_matrix(rng, 3, 2));
  const auto B = sqeuclid_matrix(oracle::random_matrix(rng, 3, 2));
  const Matrix pi = product_coupling(uniform_histogram(3), uniform_histogram(3)).plan;
  CHECK(std::abs(gw_objective(A, B, pi, kSquaredEuclidean) -
                 oracle::quadruple_sum(A.matrix, B.matrix, pi, pi, oracle::sq)) <= 1e-12);
  CHECK(gw_objective(A, B, pi, kSquaredEuclidean) == coot_objective(A.matrix, B.matrix, pi, pi, kSquaredEuclidean));
}

TEST_CASE("gw gradient is twice the tied contraction for symmetric inputs") {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 5; ++t) {
    const auto A = SimilarityMatrix::generic(random_symmetric(rng, 4));
    const auto B = SimilarityMatrix::generic(random_symmetric(rng, 3));
    const Matrix K = oracle::random_matrix(rng, 4, 3, 0, 1);
    const Matrix pi = sinkhorn(uniform_histogram(4), uniform_histogram(3), K, 0.5).coupling.plan;
    const Matrix g = gw_gradient(A, B, pi, kSquaredEuclidean);
    const Matrix L = oracle::feature_side(A.matrix, B.matrix, pi, oracle::sq);
    CHECK((g - 2.0 * L).cwiseAbs().maxCoeff() <= 1e-12);
    // Central finite difference of the objective along a random direction.
    const Matrix dir = oracle::random_matrix(rng, 4, 3);
    const double h = 1e-5;
    const double fd = (gw_objective(A, B, pi + h * dir, kSquaredEuclidean) -
                       gw_objective(A, B, pi - h * dir, kSquaredEuclidean)) / (2 * h);
    CHECK(std::abs(fd - (g.array() * dir.array()).sum()) <= 1e-7);
  }
}

TEST_CASE("DC trace is non-increasing and feasible") {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 10; ++t) {
    const auto A = sqeuclid_matrix(oracle::random_matrix(rng, 5, 2));
    const auto B = sqeuclid_matrix(oracle::random_matrix(rng, 4, 3));
    const auto r = solve_gw_dc(A, B, uniform_histogram(5), uniform_histogram(4), kSquaredEuclidean);
    for (std::size_t k = 1; k < r.objectiveTrace.size(); ++k)
      CHECK(r.objectiveTrace[k] <= r.objectiveTrace[k - 1] + 1e-9);
    CHECK(validate_coupling(r.coupling, 1e-9));
    CHECK(std::abs(r.cost - gw_objective(A, B, r.coupling.plan, kSquaredEuclidean)) <= 1e-12);
  }
}

TEST_CASE("entropic DC returns a feasible interior coupling") {
  std::mt19937_64 rng(15);
  const auto A = sqeuclid_matrix(oracle::random_matrix(rng, 5, 2));
  const auto B = sqeuclid_matrix(oracle::random_matrix(rng, 6, 2));
  GwOptions opts;
  opts.eps = 0.05;
  const auto r = solve_gw_dc(A, B, uniform_histogram(5), uniform_histogram(6), kSquaredEuclidean, opts);
  CHECK(validate_coupling(r.coupling, 1e-7));
  CHECK(r.coupling.plan.minCoeff() > 0.0);
}

TEST_CASE("DC with identity-biased restart finds zero on identical inputs") {
  std::mt19937_64 rng(16);
  for (std::size_t n = 2; n <= 4; ++n) {
    const auto C = sqeuclid_matrix(oracle::random_matrix(rng, n, 2));
    const auto u = uniform_histogram(n);
    const auto r = solve_gw_dc_restarts(C, C, u, u, kSquaredEuclidean, {}, {2, 0, 1});
    CHECK(gw_oracle(C, C, kSquaredEuclidean).cost == 0.0);
    CHECK(std::abs(r.cost) <= 1e-9);
  }
}

TEST_CASE("DC restarts reach the GW permutation minimum") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 10; ++t) {
    const auto A = sqeuclid_matrix(oracle::random_matrix(rng, 3, 2));
    const auto B = sqeuclid_matrix(oracle::random_matrix(rng, 3, 2));
    const auto u = uniform_histogram(3);
    const auto r = solve_gw_dc_restarts(A, B, u, u, kSquaredEuclidean, {}, {20, std::uint64_t(t), 1});
    CHECK(std::abs(r.cost - oracle::gw_enumerate(A.matrix, B.matrix)) <= 1e-9);
  }
}

TEST_CASE("gw oracle matches enumeration and refuses large inputs") {
  std::mt19937_64 rng(18);
  for (int t = 0; t < 10; ++t) {
    const auto A = SimilarityMatrix::generic(random_symmetric(rng, 4));
    const auto B = SimilarityMatrix::generic(random_symmetric(rng, 4));
    const auto r = gw_oracle(A, B, kSquaredEuclidean);
    CHECK(std::abs(r.cost - oracle::gw_enumerate(A.matrix, B.matrix)) <= 1e-12);
    const auto pi = permutation_coupling(r.sigma);
    CHECK(std::abs(gw_objective(A, B, pi.plan, kSquaredEuclidean) - r.cost) <= 1e-12);
  }
  const auto big = SimilarityMatrix::generic(Matrix::Zero(7, 7));
  CHECK(kind_of([&] { gw_oracle(big, big, kSquaredEuclidean); }) == ErrorKind::OracleBound);
}

TEST_CASE("DC and FW steps see proportional costs and pick the same plan") {
  std::mt19937_64 rng(19);
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = 3 + t % 3;
    const auto A = sqeuclid_matrix(oracle::random_matrix(rng, n, 2));
    const auto B = sqeuclid_matrix(oracle::random_matrix(rng, n, 2));
    const auto u = uniform_histogram(n);
    const auto pi = random_coupling(u, u, rng);
    const auto step = dc_fw_step(A, B, pi, kSquaredEuclidean);
    const Matrix ratio = step.fwGradient.array() / step.dcCost.array();
    CHECK((ratio.array() - 2.0).abs().maxCoeff() <= 1e-12);
    CHECK(step.dcPlan.plan == step.fwDirection.plan);
  }
}

TEST_CASE("equivalence check examples") {
  std::mt19937_64 rng(20);
  const Matrix P = oracle::random_matrix(rng, 3, 2);
  const auto same = gw_coot_equivalence_check(P, P);
  CHECK(same.cootValue == 0.0);
  CHECK(same.gwValue == 0.0);

  for (int t = 0; t < 10; ++t) {
    const auto r = gw_coot_equivalence_check(oracle::random_matrix(rng, 3, 2), oracle::random_matrix(rng, 3, 2));
    CHECK(r.equal);
    CHECK(r.tiedAttainsCoot);
    CHECK(r.cootBelowGw);
  }
  for (int t = 0; t < 10; ++t) {
    const Matrix A = random_symmetric(rng, 3), B = random_symmetric(rng, 3);
    const auto r = gw_coot_equivalence_check(SimilarityMatrix::generic(A), SimilarityMatrix::generic(B));
    CHECK(r.cootBelowGw);
    CHECK(std::abs(r.gwValue - oracle::gw_enumerate(A, B)) <= 1e-12);
    CHECK(std::abs(r.cootValue - oracle::bap_enumerate(A, B, oracle::sq)) <= 1e-12);
  }
  CHECK(kind_of([&] { gw_coot_equivalence_check(Matrix::Zero(5, 2), Matrix::Zero(5, 2)); }) ==
        ErrorKind::OracleBound);
}
