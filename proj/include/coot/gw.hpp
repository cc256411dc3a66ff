#pragma once

#include "coot/solver.hpp"

#include <optional>
#include <vector>

namespace coot {

enum class SimilarityKind { SquaredEuclidean, Generic };

/// Square symmetric intra-domain similarity (or distance) matrix.
struct SimilarityMatrix {
  Matrix matrix;
  SimilarityKind kind = SimilarityKind::Generic;

  /// Validates squareness and symmetry within 1e-12.
  static SimilarityMatrix generic(Matrix m);
  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
};

/// C_ij = |x_i - x_j|^2 via diag(XX^T) 1^T + 1 diag(XX^T)^T - 2 XX^T.
SimilarityMatrix sqeuclid_matrix(const Matrix& points);

/// <L(C, C') (x) pi, pi>; literally coot_objective with both slots tied.
double gw_objective(const SimilarityMatrix& C, const SimilarityMatrix& Cp, const Matrix& pi,
                    const Loss& loss);

struct GwResult {
  Coupling coupling;
  double cost = 0.0;
  std::vector<double> objectiveTrace;  ///< entry 0 is the initialization
  std::size_t iterations = 0;
  bool converged = false;
};

struct GwOptions {
  double eps = 0.0;
  std::size_t maxIter = 50;
  double tol = 1e-7;
  SinkhornOptions sinkhorn{};
};

/// DC iteration pi <- OT(w, w', L(C, C') (x) pi): COOT's BCD with the two
/// couplings tied. With eps > 0 this is the entropic projected-gradient
/// scheme for GW.
GwResult solve_gw_dc(const SimilarityMatrix& C, const SimilarityMatrix& Cp, const Histogram& w,
                     const Histogram& wp, const Loss& loss, const GwOptions& opts = {},
                     const std::optional<Coupling>& init = {});

/// Restart 0: product init. Restart 1 (square problems only): identity
/// biased init. Remaining restarts: seeded random interior couplings.
GwResult solve_gw_dc_restarts(const SimilarityMatrix& C, const SimilarityMatrix& Cp,
                              const Histogram& w, const Histogram& wp, const Loss& loss,
                              const GwOptions& opts, const RestartOptions& restarts);

/// Gradient of pi -> <L(C,C') (x) pi, pi>, from its two-term expansion
///   g_ab = sum_kl L(C_ak, C'_bl) pi_kl + sum_ij L(C_ia, C'_jb) pi_ij
/// evaluated by direct summation (independent of the factored kernels).
Matrix gw_gradient(const SimilarityMatrix& C, const SimilarityMatrix& Cp, const Matrix& pi,
                   const Loss& loss);

/// One DC step and one Frank-Wolfe step from the same coupling, solved with
/// the same exact OT solver.
struct DcFwStep {
  Matrix dcCost;      ///< L (x) pi
  Matrix fwGradient;  ///< gradient of the GW objective at pi
  Coupling dcPlan;
  Coupling fwDirection;
  double lineSearchStep = 0.0;  ///< exact argmin over [0,1] of the FW segment
};

DcFwStep dc_fw_step(const SimilarityMatrix& C, const SimilarityMatrix& Cp, const Coupling& pi,
                    const Loss& loss);

struct GwOracleResult {
  double cost = 0.0;
  Permutation sigma;
};

/// Minimum of the GW objective over permutation couplings (n == n' <= 6).
/// For squared-Euclidean inputs the GW problem is a concave QP, so this is
/// the exact GW value.
GwOracleResult gw_oracle(const SimilarityMatrix& C, const SimilarityMatrix& Cp, const Loss& loss);

struct GwCootReport {
  double cootValue = 0.0;   ///< exhaustive COOT(C, C')
  double gwValue = 0.0;     ///< exhaustive GW(C, C')
  double tiedValue = 0.0;   ///< COOT objective at (pi*, pi*) built from the GW optimum
  bool cootBelowGw = false;  ///< COOT <= GW + tol
  bool equal = false;        ///< |COOT - GW| <= tol
  bool tiedAttainsCoot = false;
};

inline constexpr std::size_t kEquivalenceMaxSize = 4;

GwCootReport gw_coot_equivalence_check(const SimilarityMatrix& C, const SimilarityMatrix& Cp,
                                       double tol = 1e-9);
GwCootReport gw_coot_equivalence_check(const Matrix& points, const Matrix& pointsP,
                                       double tol = 1e-9);

}  // namespace coot
