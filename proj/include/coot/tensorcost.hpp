#pragma once

#include "coot/core.hpp"

namespace coot {

/// Which index pair of L(X, X') survives the contraction.
///   FeatureSide: contract with a sample coupling (n x n'), result is d x d'.
///   SampleSide:  contract with a feature coupling (d x d'), result is n x n'.
enum class Side { FeatureSide, SampleSide };

struct ContractedCost {
  Matrix matrix;
  Side side;
};

/// Reference quadruple loop, O(n n' d d'). Works for every loss kind.
ContractedCost contract_naive(const Matrix& X, const Matrix& Xp, const Matrix& pi,
                              const Loss& loss, Side side);

/// Fast path through L(a,b) = f1(a) + f2(b) - h1(a) h2(b). The marginal terms
/// use the plan's actual row/column sums, so the result matches the naive
/// contraction even for slightly infeasible plans.
ContractedCost contract_factored(const Matrix& X, const Matrix& Xp, const Matrix& pi,
                                 const Loss& loss, Side side);

/// contract_factored when the loss decomposes, contract_naive otherwise.
ContractedCost contract(const Matrix& X, const Matrix& Xp, const Matrix& pi, const Loss& loss,
                        Side side);

/// <L(X,X') (x) pi_s, pi_v>, contracting along whichever side is cheaper.
double coot_objective(const Matrix& X, const Matrix& Xp, const Matrix& piS, const Matrix& piV,
                      const Loss& loss);

inline ContractedCost contract(const Matrix& X, const Matrix& Xp, const Coupling& pi,
                               const Loss& loss, Side side) {
  return contract(X, Xp, pi.plan, loss, side);
}
inline double coot_objective(const Matrix& X, const Matrix& Xp, const Coupling& piS,
                             const Coupling& piV, const Loss& loss) {
  return coot_objective(X, Xp, piS.plan, piV.plan, loss);
}

/// Throws Domain if X/X' hold entries outside the loss domain.
void check_loss_domain(const Matrix& X, const Matrix& Xp, const Loss& loss);

}  // namespace coot
