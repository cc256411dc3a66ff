#include "coot/ot.hpp"
#include "coot/tensorcost.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>

using namespace coot;
using coot::testing::kind_of;

namespace {

double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

Matrix random_plan(std::mt19937_64& rng, Eigen::Index n, Eigen::Index m) {
  const Matrix K = oracle::random_matrix(rng, n, m, 0.0, 2.0);
  return sinkhorn(uniform_histogram(n), uniform_histogram(m), K, 0.3).coupling.plan;
}

}  // namespace

TEST_CASE("naive contraction examples") {
  const Matrix Z = Matrix::Zero(3, 2);
  const Matrix pi = product_coupling(uniform_histogram(3), uniform_histogram(3)).plan;
  CHECK(contract_naive(Z, Z, pi, kSquaredEuclidean, Side::FeatureSide).matrix.isZero(0.0));

  Matrix a(1, 1), b(1, 1), one(1, 1);
  a << 2;
  b << 5;
  one << 1;
  const auto c = contract_naive(a, b, one, kSquaredEuclidean, Side::FeatureSide);
  CHECK(c.side == Side::FeatureSide);
  CHECK(c.matrix(0, 0) == 9.0);
}

TEST_CASE("naive contraction matches an independent quadruple loop") {
  std::mt19937_64 rng(31);
  const Matrix X = oracle::random_matrix(rng, 3, 4), Xp = oracle::random_matrix(rng, 2, 3);
  const Matrix piS = product_coupling(uniform_histogram(3), uniform_histogram(2)).plan;
  const Matrix piV = product_coupling(uniform_histogram(4), uniform_histogram(3)).plan;
  for (const Loss& L : {kSquaredEuclidean, kAbsolute}) {
    const auto fs = contract_naive(X, Xp, piS, L, Side::FeatureSide).matrix;
    const auto ss = contract_naive(X, Xp, piV, L, Side::SampleSide).matrix;
    CHECK(fs.rows() == 4);
    CHECK(fs.cols() == 3);
    CHECK(ss.rows() == 3);
    CHECK(ss.cols() == 2);
    CHECK(max_abs_diff(fs, oracle::feature_side(X, Xp, piS, L)) <= 1e-14);
    CHECK(max_abs_diff(ss, oracle::sample_side(X, Xp, piV, L)) <= 1e-14);
  }
}

TEST_CASE("factored contraction equals naive for decomposable losses") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Index n = 1 + t % 6, np = 1 + (t * 7) % 5, d = 1 + (t * 3) % 4, dp = 2 + t % 3;
    const Matrix piS = random_plan(rng, n, np), piV = random_plan(rng, d, dp);
    {
      const Matrix X = oracle::random_matrix(rng, n, d, -3, 3), Xp = oracle::random_matrix(rng, np, dp, -3, 3);
      for (Side s : {Side::FeatureSide, Side::SampleSide}) {
        const Matrix& pi = s == Side::FeatureSide ? piS : piV;
        CHECK(max_abs_diff(contract_factored(X, Xp, pi, kSquaredEuclidean, s).matrix,
                           contract_naive(X, Xp, pi, kSquaredEuclidean, s).matrix) <= 1e-10);
      }
    }
    {
      Matrix X = oracle::random_matrix(rng, n, d, 0, 3), Xp = oracle::random_matrix(rng, np, dp, 0.05, 3);
      if (t % 5 == 0) X(0, 0) = 0.0;
      for (Side s : {Side::FeatureSide, Side::SampleSide}) {
        const Matrix& pi = s == Side::FeatureSide ? piS : piV;
        CHECK(max_abs_diff(contract_factored(X, Xp, pi, kKullbackLeibler, s).matrix,
                           contract_naive(X, Xp, pi, kKullbackLeibler, s).matrix) <= 1e-10);
      }
    }
  }
}

TEST_CASE("squared Euclidean feature-side closed form") {
  std::mt19937_64 rng(55);
  const Matrix X = oracle::random_matrix(rng, 5, 3), Xp = oracle::random_matrix(rng, 4, 2);
  const Matrix pi = random_plan(rng, 5, 4);
  const Vector w = pi.rowwise().sum(), wp = pi.colwise().sum().transpose();
  const Matrix X2 = X.array().square().matrix(), Xp2 = Xp.array().square().matrix();
  const Matrix closed = (X2.transpose() * w) * Eigen::RowVectorXd::Ones(2) +
                        Eigen::VectorXd::Ones(3) * (wp.transpose() * Xp2) - 2.0 * X.transpose() * pi * Xp;
  CHECK(max_abs_diff(contract_factored(X, Xp, pi, kSquaredEuclidean, Side::FeatureSide).matrix, closed) <=
        1e-12);
}

TEST_CASE("factored path rejects the absolute loss; dispatch falls back to naive") {
  const Matrix X = Matrix::Ones(2, 2);
  const Matrix pi = product_coupling(uniform_histogram(2), uniform_histogram(2)).plan;
  CHECK(kind_of([&] { contract_factored(X, X, pi, kAbsolute, Side::FeatureSide); }) ==
        ErrorKind::UnsupportedLoss);
  CHECK(contract(X, X, pi, kAbsolute, Side::FeatureSide).matrix.isZero(0.0));
}

TEST_CASE("contraction shape and domain errors") {
  const Matrix X = Matrix::Ones(3, 2), Xp = Matrix::Ones(4, 5);
  const Matrix wrong = Matrix::Constant(2, 2, 0.25);
  CHECK(kind_of([&] { contract(X, Xp, wrong, kSquaredEuclidean, Side::FeatureSide); }) ==
        ErrorKind::InvalidDimension);
  CHECK(kind_of([&] { contract(X, Xp, wrong, kSquaredEuclidean, Side::SampleSide); }) ==
        ErrorKind::InvalidDimension);
  Matrix bad = Xp;
  bad(0, 0) = 0.0;
  CHECK(kind_of([&] { check_loss_domain(X, bad, kKullbackLeibler); }) == ErrorKind::Domain);
  CHECK(kind_of([&] { check_loss_domain(-X, Xp, kKullbackLeibler); }) == ErrorKind::Domain);
  CHECK_NOTHROW(check_loss_domain(-X, bad, kSquaredEuclidean));
}

TEST_CASE("contracted costs are nonnegative up to rounding") {
  std::mt19937_64 rng(71);
  for (int t = 0; t < 20; ++t) {
    const Matrix X = oracle::random_matrix(rng, 6, 5, 0, 2), Xp = oracle::random_matrix(rng, 4, 3, 0.1, 2);
    const Matrix pi = random_plan(rng, 6, 4);
    for (const Loss& L : {kSquaredEuclidean, kKullbackLeibler})
      CHECK(contract(X, Xp, pi, L, Side::FeatureSide).matrix.minCoeff() >= -1e-10);
  }
}

TEST_CASE("objective examples") {
  std::mt19937_64 rng(2);
  const Matrix X = oracle::random_matrix(rng, 4, 3);
  const Matrix eyeS = Matrix::Identity(4, 4) / 4.0, eyeV = Matrix::Identity(3, 3) / 3.0;
  CHECK(std::abs(coot_objective(X, X, eyeS, eyeV, kSquaredEuclidean)) <= 1e-15);

  Matrix A(2, 2), B(2, 2), anti(2, 2);
  A << 0, 1, 2, 3;
  B << 3, 2, 1, 0;
  anti << 0, 0.5, 0.5, 0;
  CHECK(std::abs(coot_objective(A, B, anti, anti, kSquaredEuclidean)) <= 1e-15);
}

TEST_CASE("objective equals the quadruple sum") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const Eigen::Index n = 2 + t % 4, np = 1 + t % 3, d = 1 + t % 5, dp = 3;
    const Matrix X = oracle::random_matrix(rng, n, d, 0, 1), Xp = oracle::random_matrix(rng, np, dp, 0.1, 1);
    const Matrix piS = t % 2 ? random_plan(rng, n, np)
                             : product_coupling(uniform_histogram(n), uniform_histogram(np)).plan;
    const Matrix piV = random_plan(rng, d, dp);
    CHECK(std::abs(coot_objective(X, Xp, piS, piV, kSquaredEuclidean) -
                   oracle::quadruple_sum(X, Xp, piS, piV, oracle::sq)) <= 1e-12);
    CHECK(std::abs(coot_objective(X, Xp, piS, piV, kKullbackLeibler) -
                   oracle::quadruple_sum(X, Xp, piS, piV, oracle::kl)) <= 1e-12);
    CHECK(std::abs(coot_objective(X, Xp, piS, piV, kAbsolute) -
                   oracle::quadruple_sum(X, Xp, piS, piV, oracle::absd)) <= 1e-12);
  }
}

TEST_CASE("objective is symmetric under swapping the two datasets") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 30; ++t) {
    const Eigen::Index n = 1 + t % 5, np = 2 + t % 4, d = 1 + t % 3, dp = 1 + t % 6;
    const Matrix X = oracle::random_matrix(rng, n, d), Xp = oracle::random_matrix(rng, np, dp);
    const Matrix piS = random_plan(rng, n, np), piV = random_plan(rng, d, dp);
    for (const Loss& L : {kSquaredEuclidean, kAbsolute}) {
      const double a = coot_objective(X, Xp, piS, piV, L);
      const double b = coot_objective(Xp, X, piS.transpose(), piV.transpose(), L);
      CHECK(std::abs(a - b) <= 1e-10);
      const double viaS = (contract(X, Xp, piV, L, Side::SampleSide).matrix.array() * piS.array()).sum();
      const double viaV = (contract(X, Xp, piS, L, Side::FeatureSide).matrix.array() * piV.array()).sum();
      CHECK(std::abs(viaS - viaV) <= 1e-10);
    }
  }
}

TEST_CASE("product coupling contraction is an expectation under independent marginals") {
  std::mt19937_64 rng(19);
  const Matrix X = oracle::random_matrix(rng, 3, 2), Xp = oracle::random_matrix(rng, 4, 2);
  const auto w = Histogram({0.2, 0.3, 0.5}), wp = Histogram({0.1, 0.2, 0.3, 0.4});
  const Matrix pi = product_coupling(w, wp).plan;
  const Matrix M = contract(X, Xp, pi, kSquaredEuclidean, Side::FeatureSide).matrix;
  for (Eigen::Index k = 0; k < 2; ++k)
    for (Eigen::Index l = 0; l < 2; ++l) {
      double e = 0.0;
      for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 4; ++j) e += w[i] * wp[j] * oracle::sq(X(i, k), Xp(j, l));
      CHECK(std::abs(M(k, l) - e) <= 1e-14);
    }
}

TEST_CASE("factored path timing sanity (informative)") {
  std::mt19937_64 rng(1);
  const Eigen::Index n = 512, d = 64;
  const Matrix X = oracle::random_matrix(rng, n, d), Xp = oracle::random_matrix(rng, n, d);
  const Matrix pi = product_coupling(uniform_histogram(n), uniform_histogram(n)).plan;
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  const auto fast = contract_factored(X, Xp, pi, kSquaredEuclidean, Side::FeatureSide).matrix;
  auto t1 = clock::now();
  const auto slow = contract_naive(X, Xp, pi, kSquaredEuclidean, Side::FeatureSide).matrix;
  auto t2 = clock::now();
  const double speedup = std::chrono::duration<double>(t2 - t1).count() /
                         std::max(1e-9, std::chrono::duration<double>(t1 - t0).count());
  MESSAGE("factored speedup on 512x64: " << speedup << "x");
  CHECK(max_abs_diff(fast, slow) <= 1e-9);
}
