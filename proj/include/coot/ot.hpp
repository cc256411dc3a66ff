#pragma once

#include "coot/core.hpp"

#include <cstddef>
#include <vector>

namespace coot {

struct OtResult {
  Coupling coupling;
  double cost = 0.0;  ///< <C, plan>
  std::size_t iterations = 0;
  bool converged = false;
  /// Sinkhorn only: L1 marginal residual after each iteration at the target
  /// eps (annealing stages are not recorded).
  std::vector<double> residualTrace;
};

/// Exact discrete OT by the transportation simplex. The returned plan is a
/// vertex of the transport polytope.
OtResult exact_ot(const Histogram& w, const Histogram& wp, const Matrix& cost);

struct SinkhornOptions {
  std::size_t maxIter = 10000;
  double tol = 1e-9;
  /// Plain scaling iterations before damped Newton steps on the dual
  /// potentials are tried. Scaling alone stalls at small eps.
  std::size_t newtonAfter = 100;
};

/// Log-domain Sinkhorn for min <C, P> + eps * KL(P | w w'^T). When eps is
/// small against the cost range, the potentials are warm-started by solving a
/// halving sequence of larger strengths. At the target eps the L1 marginal
/// residual is non-increasing: a Newton step is only accepted when it lowers
/// the residual, otherwise a scaling step is taken. `iterations` counts every
/// stage against maxIter.
OtResult sinkhorn(const Histogram& w, const Histogram& wp, const Matrix& cost, double eps,
                  SinkhornOptions opts = {});

/// exact_ot when eps == 0, sinkhorn otherwise.
OtResult solve_ot(const Histogram& w, const Histogram& wp, const Matrix& cost, double eps,
                  SinkhornOptions opts = {});

}  // namespace coot
