#pragma once

// Brute-force reference computations used only by the tests. None of these
// call into the solver code paths they are checked against.

#include "coot/core.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace coot::oracle {

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

inline void for_each_permutation(std::size_t n, const std::function<void(const std::vector<std::size_t>&)>& fn) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  do {
    fn(p);
  } while (std::next_permutation(p.begin(), p.end()));
}

/// min over permutations sigma of (1/n) sum_i C(i, sigma(i)).
inline double assignment_min(const Matrix& C) {
  const std::size_t n = C.rows();
  double best = std::numeric_limits<double>::infinity();
  for_each_permutation(n, [&](const auto& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += C(i, p[i]);
    best = std::min(best, s);
  });
  return best / static_cast<double>(n);
}

inline double sq(double a, double b) { return (a - b) * (a - b); }
inline double absd(double a, double b) { return std::abs(a - b); }
inline double kl(double a, double b) { return (a > 0 ? a * std::log(a / b) : 0.0) - a + b; }

/// sum_{ijkl} L(X_ik, X'_jl) piS_ij piV_kl, written out.
template <class L>
double quadruple_sum(const Matrix& X, const Matrix& Xp, const Matrix& piS, const Matrix& piV, L loss) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < Xp.rows(); ++j)
      for (Eigen::Index k = 0; k < X.cols(); ++k)
        for (Eigen::Index l = 0; l < Xp.cols(); ++l) s += loss(X(i, k), Xp(j, l)) * piS(i, j) * piV(k, l);
  return s;
}

/// FeatureSide contraction with the loop nest ordered differently from the library.
template <class L>
Matrix feature_side(const Matrix& X, const Matrix& Xp, const Matrix& piS, L loss) {
  Matrix M = Matrix::Zero(X.cols(), Xp.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < Xp.rows(); ++j) {
      if (piS(i, j) == 0.0) continue;
      for (Eigen::Index k = 0; k < X.cols(); ++k)
        for (Eigen::Index l = 0; l < Xp.cols(); ++l) M(k, l) += piS(i, j) * loss(X(i, k), Xp(j, l));
    }
  return M;
}

template <class L>
Matrix sample_side(const Matrix& X, const Matrix& Xp, const Matrix& piV, L loss) {
  Matrix M = Matrix::Zero(X.rows(), Xp.rows());
  for (Eigen::Index k = 0; k < X.cols(); ++k)
    for (Eigen::Index l = 0; l < Xp.cols(); ++l) {
      if (piV(k, l) == 0.0) continue;
      for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < Xp.rows(); ++j) M(i, j) += piV(k, l) * loss(X(i, k), Xp(j, l));
    }
  return M;
}

/// Exact COOT for square uniform instances: min over (s1, s2) of
/// (1/(n d)) sum_{ik} L(X_ik, X'_{s1(i) s2(k)}), by full double enumeration.
template <class L>
double bap_enumerate(const Matrix& X, const Matrix& Xp, L loss) {
  const std::size_t n = X.rows(), d = X.cols();
  double best = std::numeric_limits<double>::infinity();
  for_each_permutation(n, [&](const auto& s1) {
    for_each_permutation(d, [&](const auto& s2) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) s += loss(X(i, k), Xp(s1[i], s2[k]));
      best = std::min(best, s);
    });
  });
  return best / static_cast<double>(n * d);
}

/// GW over permutation couplings, uniform weights.
inline double gw_enumerate(const Matrix& C, const Matrix& Cp) {
  const std::size_t n = C.rows();
  double best = std::numeric_limits<double>::infinity();
  for_each_permutation(n, [&](const auto& s) {
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) t += sq(C(i, k), Cp(s[i], s[k]));
    best = std::min(best, t);
  });
  return best / static_cast<double>(n * n);
}

/// d-ID: min over voter bijections nu and candidate bijections sigma of
/// sum_i sum_k |pos_{v_i}(c_k) - pos_{v'_nu(i)}(sigma(c_k))|.
inline double election_did(const Matrix& E, const Matrix& Ep) {
  const std::size_t n = E.rows(), m = E.cols();
  double best = std::numeric_limits<double>::infinity();
  for_each_permutation(n, [&](const auto& nu) {
    for_each_permutation(m, [&](const auto& sigma) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < m; ++k) s += std::abs(E(i, k) - Ep(nu[i], sigma[k]));
      best = std::min(best, s);
    });
  });
  return best;
}

/// Misclassification after the best relabeling, by enumerating relabelings.
inline double misclassification(const std::vector<int>& pred, const std::vector<int>& truth) {
  int k = 0;
  for (int v : pred) k = std::max(k, v + 1);
  for (int v : truth) k = std::max(k, v + 1);
  std::size_t best = 0;
  for_each_permutation(k, [&](const auto& relabel) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += relabel[pred[i]] == std::size_t(truth[i]);
    best = std::max(best, hits);
  });
  return 1.0 - double(best) / double(pred.size());
}

/// Dense least squares for the summary matrix: one residual row per
/// (i, j, k, l) weighted by sqrt(piS_ij piV_kl), one unknown per (j, l).
inline Matrix summary_least_squares_dense(const Matrix& X, const Matrix& piS, const Matrix& piV) {
  const Eigen::Index n = X.rows(), d = X.cols(), g = piS.cols(), m = piV.cols();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n * d * g * m, g * m);
  Eigen::VectorXd b(n * d * g * m);
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < d; ++k)
      for (Eigen::Index j = 0; j < g; ++j)
        for (Eigen::Index l = 0; l < m; ++l, ++row) {
          const double wt = std::sqrt(piS(i, j) * piV(k, l));
          A(row, j * m + l) = wt;
          b(row) = wt * X(i, k);
        }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  Matrix Xc(g, m);
  for (Eigen::Index j = 0; j < g; ++j)
    for (Eigen::Index l = 0; l < m; ++l) Xc(j, l) = c(j * m + l);
  return Xc;
}

/// Lloyd's k-means with farthest-point seeding; enough for well separated data.
inline std::vector<int> kmeans_rows(const Matrix& X, int k, int iters = 50) {
  const Eigen::Index n = X.rows();
  std::vector<Eigen::Index> centers{0};
  while (int(centers.size()) < k) {
    Eigen::Index far = 0;
    double farDist = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double dmin = std::numeric_limits<double>::infinity();
      for (auto c : centers) dmin = std::min(dmin, (X.row(i) - X.row(c)).squaredNorm());
      if (dmin > farDist) {
        farDist = dmin;
        far = i;
      }
    }
    centers.push_back(far);
  }
  Matrix C(k, X.cols());
  for (int c = 0; c < k; ++c) C.row(c) = X.row(centers[c]);
  std::vector<int> lab(n, 0);
  for (int it = 0; it < iters; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double dd = (X.row(i) - C.row(c)).squaredNorm();
        if (dd < best) {
          best = dd;
          lab[i] = c;
        }
      }
    }
    Matrix sum = Matrix::Zero(k, X.cols());
    std::vector<int> cnt(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sum.row(lab[i]) += X.row(i);
      ++cnt[lab[i]];
    }
    for (int c = 0; c < k; ++c)
      if (cnt[c]) C.row(c) = sum.row(c) / cnt[c];
  }
  return lab;
}

inline Matrix permute(const Matrix& X, const std::vector<std::size_t>& rows,
                      const std::vector<std::size_t>& cols) {
  // result(rows[i], cols[k]) = X(i, k)
  Matrix Y(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index k = 0; k < X.cols(); ++k) Y(rows[i], cols[k]) = X(i, k);
  return Y;
}

inline std::vector<std::size_t> random_permutation(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

}  // namespace coot::oracle
