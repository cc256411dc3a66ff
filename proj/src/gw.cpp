#include "coot/gw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace coot {

SimilarityMatrix SimilarityMatrix::generic(Matrix m) {
  check_matrix(m, "similarity");
  if (m.rows() != m.cols()) fail(ErrorKind::InvalidDimension, "similarity matrix must be square");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    fail(ErrorKind::Domain, "similarity matrix must be symmetric");
  }
  return SimilarityMatrix{std::move(m), SimilarityKind::Generic};
}

SimilarityMatrix sqeuclid_matrix(const Matrix& points) {
  check_matrix(points, "points");
  const Matrix gram = points * points.transpose();
  const Vector sq = gram.diagonal();
  const Eigen::Index n = points.rows();
  Matrix C(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    C(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dij = std::max(0.0, sq(i) + sq(j) - 2.0 * gram(i, j));
      C(i, j) = dij;
      C(j, i) = dij;
    }
  }
  return SimilarityMatrix{std::move(C), SimilarityKind::SquaredEuclidean};
}

double gw_objective(const SimilarityMatrix& C, const SimilarityMatrix& Cp, const Matrix& pi,
                    const Loss& loss) {
  return coot_objective(C.matrix, Cp.matrix, pi, pi, loss);
}

GwResult solve_gw_dc(const SimilarityMatrix& C, const SimilarityMatrix& Cp, const Histogram& w,
                     const Histogram& wp, const Loss& loss, const GwOptions& opts,
                     const std::optional<Coupling>& init) {
  if (w.size() != C.size() || wp.size() != Cp.size()) {
    fail(ErrorKind::InvalidDimension, "weights do not match the similarity matrices");
  }
  if (!(opts.eps >= 0.0)) fail(ErrorKind::Domain, "eps must be >= 0");
  Coupling pi = init ? *init : product_coupling(w, wp);
  if (pi.n_rows() != w.size() || pi.n_cols() != wp.size()) {
    fail(ErrorKind::InvalidDimension, "initial coupling does not match the weights");
  }
  GwResult res{pi, 0.0, {}, 0, false};
  res.objectiveTrace.push_back(gw_objective(C, Cp, pi.plan, loss));
  for (std::size_t k = 0; k < opts.maxIter; ++k) {
    const ContractedCost M = contract(C.matrix, Cp.matrix, pi, loss, Side::FeatureSide);
    OtResult next = solve_ot(w, wp, M.matrix, opts.eps, opts.sinkhorn);
    const double err = (pi.plan - next.coupling.plan).norm();
    pi = std::move(next.coupling);
    res.iterations = k + 1;
    res.objectiveTrace.push_back(gw_objective(C, Cp, pi.plan, loss));
    if (err <= opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.coupling = std::move(pi);
  res.cost = res.objectiveTrace.back();
  return res;
}

GwResult solve_gw_dc_restarts(const SimilarityMatrix& C, const SimilarityMatrix& Cp,
                              const Histogram& w, const Histogram& wp, const Loss& loss,
                              const GwOptions& opts, const RestartOptions& restarts) {
  const std::size_t count = std::max<std::size_t>(restarts.restarts, 1);
  const bool square = w.size() == wp.size();
  std::optional<GwResult> best;
  for (std::size_t r = 0; r < count; ++r) {
    std::optional<Coupling> init;
    if (r == 1 && square) {
      const std::size_t n = w.size();
      Matrix plan = 0.1 * product_coupling(w, wp).plan;
      plan.diagonal().array() += 0.9 / static_cast<double>(n);
      // Marginals are uniform only if w and w' are; rescale onto Pi(w, w').
      SinkhornOptions so;
      so.tol = 1e-12;
      Matrix negLog = -plan.array().log().matrix();
      init = sinkhorn(w, wp, negLog, 1.0, so).coupling;
    } else if (r > 0) {
      std::mt19937_64 rng = restart_rng(restarts.seed, r);
      init = random_coupling(w, wp, rng);
    }
    GwResult run = solve_gw_dc(C, Cp, w, wp, loss, opts, init);
    if (!best || run.cost < best->cost) best = std::move(run);
  }
  return std::move(*best);
}

Matrix gw_gradient(const SimilarityMatrix& C, const SimilarityMatrix& Cp, const Matrix& pi,
                   const Loss& loss) {
  const Eigen::Index n = C.matrix.rows(), np = Cp.matrix.rows();
  if (pi.rows() != n || pi.cols() != np) {
    fail(ErrorKind::InvalidDimension, "coupling does not match the similarity matrices");
  }
  const Matrix& A = C.matrix;
  const Matrix& B = Cp.matrix;
  Matrix g(n, np);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < np; ++b) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < np; ++j) {
          acc += loss(A(a, i), B(b, j)) * pi(i, j) + loss(A(i, a), B(j, b)) * pi(i, j);
        }
      }
      g(a, b) = acc;
    }
  }
  return g;
}

DcFwStep dc_fw_step(const SimilarityMatrix& C, const SimilarityMatrix& Cp, const Coupling& pi,
                    const Loss& loss) {
  Matrix dcCost = contract(C.matrix, Cp.matrix, pi, loss, Side::FeatureSide).matrix;
  Matrix grad = gw_gradient(C, Cp, pi.plan, loss);
  OtResult dc = exact_ot(pi.rows, pi.cols, dcCost);
  OtResult fw = exact_ot(pi.rows, pi.cols, grad);

  // The objective restricted to the segment pi + t (s - pi) is quadratic.
  auto at = [&](double t) {
    const Matrix z = pi.plan + t * (fw.coupling.plan - pi.plan);
    return gw_objective(C, Cp, z, loss);
  };
  const double q0 = at(0.0), qh = at(0.5), q1 = at(1.0);
  const double a = 2.0 * (q0 + q1 - 2.0 * qh);
  const double b = q1 - q0 - a;
  double step = q1 <= q0 ? 1.0 : 0.0;
  if (a > 0.0) {
    const double t = std::clamp(-b / (2.0 * a), 0.0, 1.0);
    if (at(t) < std::min(q0, q1)) step = t;
  }
  return DcFwStep{std::move(dcCost), std::move(grad), std::move(dc.coupling),
                  std::move(fw.coupling), step};
}

GwOracleResult gw_oracle(const SimilarityMatrix& C, const SimilarityMatrix& Cp, const Loss& loss) {
  const std::size_t n = C.size();
  if (Cp.size() != n) fail(ErrorKind::InvalidDimension, "gw oracle needs n == n'");
  if (n > kOracleMaxSize) fail(ErrorKind::OracleBound, "gw oracle is limited to n <= 6");
  Permutation sigma(n);
  std::iota(sigma.begin(), sigma.end(), 0);
  GwOracleResult best{std::numeric_limits<double>::infinity(), sigma};
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) total += loss(C.matrix(i, k), Cp.matrix(sigma[i], sigma[k]));
    }
    if (total < best.cost) best = {total, sigma};
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  best.cost /= static_cast<double>(n * n);
  return best;
}

GwCootReport gw_coot_equivalence_check(const SimilarityMatrix& C, const SimilarityMatrix& Cp,
                                       double tol) {
  if (C.size() > kEquivalenceMaxSize || Cp.size() > kEquivalenceMaxSize) {
    fail(ErrorKind::OracleBound, "equivalence check is limited to n, n' <= 4");
  }
  const Loss loss = kSquaredEuclidean;
  GwCootReport r;
  r.cootValue = bap_oracle(C.matrix, Cp.matrix, loss).cost;
  const GwOracleResult gw = gw_oracle(C, Cp, loss);
  r.gwValue = gw.cost;
  const Coupling tied = permutation_coupling(gw.sigma);
  r.tiedValue = coot_objective(C.matrix, Cp.matrix, tied, tied, loss);
  r.cootBelowGw = r.cootValue <= r.gwValue + tol;
  r.equal = std::abs(r.cootValue - r.gwValue) <= tol;
  r.tiedAttainsCoot = std::abs(r.tiedValue - r.cootValue) <= tol;
  return r;
}

GwCootReport gw_coot_equivalence_check(const Matrix& points, const Matrix& pointsP, double tol) {
  return gw_coot_equivalence_check(sqeuclid_matrix(points), sqeuclid_matrix(pointsP), tol);
}

}  // namespace coot
