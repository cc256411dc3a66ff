#pragma once

#include "coot/core.hpp"
#include "coot/ot.hpp"
#include "coot/tensorcost.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace coot {

/// COOT instance: two data matrices plus sample weights (w, w') and feature
/// weights (v, v'). eps1 regularizes the sample coupling, eps2 the feature
/// coupling; zero selects the exact solver for that block.
struct CootProblem {
  Matrix X;
  Matrix Xp;
  Histogram w;
  Histogram wp;
  Histogram v;
  Histogram vp;
  Loss loss = kSquaredEuclidean;
  double eps1 = 0.0;
  double eps2 = 0.0;
  std::size_t maxIter = 50;
  double tol = 1e-7;  ///< stop when the feature coupling moves less than this (Frobenius)
  SinkhornOptions sinkhorn{};

  /// Uniform weights on all four marginals.
  CootProblem(Matrix X, Matrix Xp, Loss loss = kSquaredEuclidean);
  CootProblem(Matrix X, Matrix Xp, Histogram w, Histogram wp, Histogram v, Histogram vp,
              Loss loss = kSquaredEuclidean);

  /// Throws on shape mismatch, negative eps or loss-domain violations.
  void validate() const;
};

struct CootInit {
  Coupling piS;
  Coupling piV;
};

struct CootSolution {
  Coupling piS;
  Coupling piV;
  double cost = 0.0;  ///< unregularized objective at (piS, piV)
  std::vector<double> objectiveTrace;  ///< entry 0 is the initialization
  std::size_t iterations = 0;
  bool converged = false;
  bool innerConverged = true;  ///< every Sinkhorn call met its tolerance
  std::size_t restart = 0;     ///< index of the restart that produced this solution
};

/// Hook applied to the sample-side cost L (x) pi_v before each pi_s update.
using SampleCostHook = std::function<void(Matrix&)>;

/// Block coordinate descent: pi_v <- OT(v, v', L (x) pi_s), then
/// pi_s <- OT(w, w', L (x) pi_v) using the fresh pi_v.
CootSolution solve_coot(const CootProblem& problem, const std::optional<CootInit>& init = {},
                        const SampleCostHook& hook = {});

struct RestartOptions {
  std::size_t restarts = 1;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

/// Restart 0 starts from the product couplings, restart r > 0 from a seeded
/// random interior coupling pair. Returns the minimum-cost run; ties go to
/// the lowest restart index, so the result does not depend on `jobs`.
CootSolution solve_coot_restarts(const CootProblem& problem, const RestartOptions& opts,
                                 const SampleCostHook& hook = {});

/// Random positive kernel exp(sharpness * N(0,1)) scaled onto Pi(w, w').
Coupling random_coupling(const Histogram& w, const Histogram& wp, std::mt19937_64& rng,
                         double sharpness = 3.0);

/// Per-restart generator; depends only on (seed, restart).
std::mt19937_64 restart_rng(std::uint64_t seed, std::uint64_t restart);

using Permutation = std::vector<std::size_t>;

struct BapResult {
  double cost = 0.0;
  Permutation sigmaRows;  ///< X_{ik} is matched with X'_{sigmaRows[i], sigmaCols[k]}
  Permutation sigmaCols;
};

inline constexpr std::size_t kOracleMaxSize = 6;

/// Exhaustive bilinear assignment: the exact COOT value for square,
/// uniformly weighted instances with n, d <= 6. Ties keep the
/// lexicographically first permutation pair.
BapResult bap_oracle(const Matrix& X, const Matrix& Xp, const Loss& loss);

/// True iff Xp equals X up to a row and a column permutation.
bool permutation_equal(const Matrix& X, const Matrix& Xp, double tol = 0.0);

/// Dense permutation coupling: plan(i, sigma[i]) = 1/n.
Coupling permutation_coupling(const Permutation& sigma);

struct DistanceReport {
  std::size_t triples = 0;
  double maxSymmetryGap = 0.0;
  std::size_t indiscernibleViolations = 0;
  std::size_t triangleViolations = 0;
  double maxTriangleExcess = -1.0;  ///< max of d(a,c) - d(a,b) - d(b,c)

  bool passed() const {
    return maxSymmetryGap <= 1e-12 && indiscernibleViolations == 0 && triangleViolations == 0;
  }
};

using MatrixTriple = std::array<Matrix, 3>;

/// Checks symmetry, identity of indiscernibles and the triangle inequality on
/// oracle COOT values for every ordering within each triple.
DistanceReport coot_distance_checks(const std::vector<MatrixTriple>& triples, const Loss& loss,
                                    double triangleSlack = 1e-9);

/// Seeded n x d triples with small integer entries. Every third triple sets
/// its last member to a row/column permutation of the first.
std::vector<MatrixTriple> random_distance_triples(std::uint64_t seed, std::size_t count,
                                                  std::size_t n, std::size_t d);

}  // namespace coot
