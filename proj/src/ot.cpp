#include "coot/ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace coot {
namespace {

void check_ot_inputs(const Histogram& w, const Histogram& wp, const Matrix& cost) {
  if (static_cast<std::size_t>(cost.rows()) != w.size() ||
      static_cast<std::size_t>(cost.cols()) != wp.size()) {
    fail(ErrorKind::InvalidDimension, "cost matrix shape does not match the marginals");
  }
  if (!cost.allFinite()) fail(ErrorKind::Domain, "cost matrix has non-finite entries");
}

struct BasicCell {
  int row;
  int col;
  double flow;
};

// Transportation simplex on the bipartite row/column graph. The basis is a
// spanning tree with n + m - 1 cells; row node i is i, column node j is n + j.
class TransportationSimplex {
 public:
  TransportationSimplex(const Histogram& w, const Histogram& wp, const Matrix& cost)
      : n_(static_cast<int>(w.size())), m_(static_cast<int>(wp.size())), cost_(cost) {
    supply_.assign(w.weights().begin(), w.weights().end());
    demand_.assign(wp.weights().begin(), wp.weights().end());
    scale_ = std::max(1.0, cost.cwiseAbs().maxCoeff());
    north_west_corner();
  }

  std::size_t run() {
    std::size_t pivots = 0;
    std::size_t degenerateRun = 0;
    const std::size_t maxPivots = 50 * static_cast<std::size_t>(n_ + m_) * (n_ + m_) + 1000;
    while (pivots < maxPivots) {
      compute_potentials();
      const bool bland = degenerateRun > static_cast<std::size_t>(n_ + m_);
      int enterRow = -1;
      int enterCol = -1;
      double best = -kOptimalityTol * scale_;
      for (int i = 0; i < n_ && !(bland && enterRow >= 0); ++i) {
        for (int j = 0; j < m_; ++j) {
          const double reduced = cost_(i, j) - u_[i] - v_[j];
          if (reduced < best) {
            best = reduced;
            enterRow = i;
            enterCol = j;
            if (bland) break;
          }
        }
      }
      if (enterRow < 0) return pivots;
      const double theta = pivot(enterRow, enterCol, bland);
      degenerateRun = theta > 0.0 ? 0 : degenerateRun + 1;
      ++pivots;
    }
    fail(ErrorKind::Domain, "transportation simplex exceeded its pivot budget");
  }

  Matrix plan() const {
    Matrix p = Matrix::Zero(n_, m_);
    for (const auto& c : basis_) p(c.row, c.col) = std::max(0.0, c.flow);
    return p;
  }

 private:
  static constexpr double kOptimalityTol = 1e-13;

  void north_west_corner() {
    // Balance the totals exactly so the last cell closes both sums.
    double sumSupply = 0.0;
    for (double s : supply_) sumSupply += s;
    double sumDemand = 0.0;
    for (int j = 0; j + 1 < m_; ++j) sumDemand += demand_[j];
    std::vector<double> demand = demand_;
    demand.back() = std::max(0.0, sumSupply - sumDemand);

    int i = 0;
    int j = 0;
    double rowLeft = supply_[0];
    double colLeft = demand[0];
    while (true) {
      const double x = std::min(rowLeft, colLeft);
      basis_.push_back({i, j, x});
      rowLeft -= x;
      colLeft -= x;
      if (i == n_ - 1 && j == m_ - 1) break;
      if ((rowLeft <= colLeft && i < n_ - 1) || j == m_ - 1) {
        ++i;
        rowLeft = supply_[i];
      } else {
        ++j;
        colLeft = demand[j];
      }
    }
  }

  void build_tree() {
    adjacency_.assign(n_ + m_, {});
    for (int e = 0; e < static_cast<int>(basis_.size()); ++e) {
      adjacency_[basis_[e].row].push_back(e);
      adjacency_[n_ + basis_[e].col].push_back(e);
    }
  }

  int other_end(int e, int node) const {
    const int r = basis_[e].row;
    const int c = n_ + basis_[e].col;
    return node == r ? c : r;
  }

  void compute_potentials() {
    build_tree();
    u_.assign(n_, 0.0);
    v_.assign(m_, 0.0);
    std::vector<char> seen(n_ + m_, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      for (int e : adjacency_[node]) {
        const int next = other_end(e, node);
        if (seen[next]) continue;
        seen[next] = 1;
        const auto& c = basis_[e];
        if (next >= n_) {
          v_[c.col] = cost_(c.row, c.col) - u_[c.row];
        } else {
          u_[c.row] = cost_(c.row, c.col) - v_[c.col];
        }
        stack.push_back(next);
      }
    }
  }

  // Adds (row, col) to the basis, pushes theta around the unique cycle and
  // drops one blocking cell. Returns theta.
  double pivot(int row, int col, bool bland) {
    const int source = n_ + col;
    const int target = row;
    std::vector<int> parentEdge(n_ + m_, -1);
    std::vector<char> seen(n_ + m_, 0);
    std::vector<int> queue{source};
    seen[source] = 1;
    for (std::size_t h = 0; h < queue.size() && !seen[target]; ++h) {
      const int node = queue[h];
      for (int e : adjacency_[node]) {
        const int next = other_end(e, node);
        if (seen[next]) continue;
        seen[next] = 1;
        parentEdge[next] = e;
        queue.push_back(next);
      }
    }
    // Walking from the entering row back to the entering column, edges
    // alternate between losing and gaining flow, starting with losing.
    std::vector<int> path;
    for (int node = target; node != source;) {
      const int e = parentEdge[node];
      path.push_back(e);
      node = other_end(e, node);
    }
    double theta = std::numeric_limits<double>::infinity();
    int leaving = -1;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const int e = path[k];
      const double f = basis_[e].flow;
      const bool better = f < theta ||
                          (f == theta && bland && cell_index(e) < cell_index(leaving));
      if (better) {
        theta = f;
        leaving = e;
      }
    }
    theta = std::max(0.0, theta);
    for (std::size_t k = 0; k < path.size(); ++k) {
      basis_[path[k]].flow += (k % 2 == 0) ? -theta : theta;
    }
    basis_[leaving] = {row, col, theta};
    return theta;
  }

  int cell_index(int e) const { return e < 0 ? -1 : basis_[e].row * m_ + basis_[e].col; }

  int n_;
  int m_;
  const Matrix& cost_;
  double scale_;
  std::vector<double> supply_;
  std::vector<double> demand_;
  std::vector<BasicCell> basis_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<double> u_;
  std::vector<double> v_;
};

constexpr double kTrustRegion = 20.0;
// Annealing runs while the stage strength exceeds kAnnealRatio * eps; each
// stage stops at kStageTol or after kStageBudget iterations.
constexpr double kAnnealRatio = 2.0;
constexpr double kStageTol = 1e-4;
constexpr std::size_t kStageBudget = 2000;

double log_sum_exp(const double* x, std::size_t n, std::size_t stride) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, x[k * stride]);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::exp(x[k * stride] - mx);
  return mx + std::log(s);
}

// Solves L x = rhs for the Laplacian L of the weighted graph W, pinning the
// last coordinate to zero to remove the constant null vector. The diagonal is
// summed from the off-diagonal weights, which avoids cancellation when W is
// nearly disconnected.
Vector grounded_laplacian_solve(const Matrix& W, const Vector& rhs) {
  const Eigen::Index k = W.rows();
  Vector x = Vector::Zero(k);
  if (k == 1) return x;
  Matrix L = -W.topLeftCorner(k - 1, k - 1);
  for (Eigen::Index j = 0; j < k - 1; ++j) {
    double deg = 0.0;
    for (Eigen::Index l = 0; l < k; ++l) {
      if (l != j) deg += W(j, l);
    }
    L(j, j) = deg;
  }
  x.head(k - 1) = L.ldlt().solve(rhs.head(k - 1));
  return x;
}

}  // namespace

OtResult exact_ot(const Histogram& w, const Histogram& wp, const Matrix& cost) {
  check_ot_inputs(w, wp, cost);
  TransportationSimplex simplex(w, wp, cost);
  const std::size_t pivots = simplex.run();
  Matrix plan = simplex.plan();
  const double c = (cost.array() * plan.array()).sum();
  return OtResult{Coupling(std::move(plan), w, wp), c, pivots, true, {}};
}

OtResult sinkhorn(const Histogram& w, const Histogram& wp, const Matrix& cost, double eps,
                  SinkhornOptions opts) {
  check_ot_inputs(w, wp, cost);
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    fail(ErrorKind::Domain, "sinkhorn requires a finite eps > 0");
  }
  const std::size_t n = w.size();
  const std::size_t m = wp.size();
  // Shifting the cost by a constant leaves the optimal plan unchanged.
  const Matrix shifted = (cost.array() - cost.minCoeff()).matrix();
  Vector logW(n), logWp(m);
  for (std::size_t i = 0; i < n; ++i) logW(i) = std::log(w[i]);
  for (std::size_t j = 0; j < m; ++j) logWp(j) = std::log(wp[j]);
  std::vector<double> scratch(std::max(n, m));
  double e = eps;  // strength of the stage being solved

  // Potentials (f, g) parametrize P_ij = w_i w'_j exp((f_i + g_j - C_ij) / e).
  auto update_f = [&](const Vector& g, Vector& out) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) scratch[j] = logWp(j) + (g(j) - shifted(i, j)) / e;
      out(i) = -e * log_sum_exp(scratch.data(), m, 1);
    }
  };
  auto update_g = [&](const Vector& f, Vector& out) {
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) scratch[i] = logW(i) + (f(i) - shifted(i, j)) / e;
      out(j) = -e * log_sum_exp(scratch.data(), n, 1);
    }
  };
  auto plan_of = [&](const Vector& f, const Vector& g) {
    Matrix p(n, m);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        p(i, j) = std::exp(logW(i) + logWp(j) + (f(i) + g(j) - shifted(i, j)) / e);
      }
    }
    return p;
  };
  // With g fresh from update_g the columns are exact, and the row sums follow
  // from the next f-update: sum_j P_ij = w_i exp((f_i - fNext_i) / e).
  auto row_residual = [&](const Vector& f, const Vector& fNext) {
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) r += std::abs(w[i] * std::expm1((f(i) - fNext(i)) / e));
    return r;
  };

  // Damped Newton step on the concave dual, reduced by a Schur complement to
  // min(n, m) unknowns. Returns false if no step length lowers the residual.
  auto newton_step = [&](Vector& f, Vector& g, Vector& fNext, double& residual) {
    const Matrix P = plan_of(f, g);
    const Vector r = P.rowwise().sum().cwiseMax(1e-300);
    const Vector c = P.colwise().sum().transpose().cwiseMax(1e-300);
    const Vector a = w.as_vector() - r;
    const Vector b = wp.as_vector() - c;
    Vector df, dg;
    if (m <= n) {
      const Vector rhs = e * (b - P.transpose() * a.cwiseQuotient(r));
      dg = grounded_laplacian_solve(P.transpose() * r.cwiseInverse().asDiagonal() * P, rhs);
      df = (e * a - P * dg).cwiseQuotient(r);
    } else {
      const Vector rhs = e * (a - P * b.cwiseQuotient(c));
      df = grounded_laplacian_solve(P * c.cwiseInverse().asDiagonal() * P.transpose(), rhs);
      dg = (e * b - P.transpose() * df).cwiseQuotient(c);
    }
    if (!df.allFinite() || !dg.allFinite()) return false;
    // Near-disconnected plans give huge Newton steps; cap the first trial so
    // no potential moves by more than kTrustRegion * e.
    const double longest = std::max(df.cwiseAbs().maxCoeff(), dg.cwiseAbs().maxCoeff());
    const double first = std::min(1.0, kTrustRegion * e / std::max(longest, 1e-300));
    Vector fc(n), gc(m), fn(n);
    for (double step = first; step > 1e-6 * first; step *= 0.5) {
      fc = f + step * df;
      update_g(fc, gc);
      update_f(gc, fn);
      const double rc = row_residual(fc, fn);
      if (rc < residual) {
        f = fc;
        g = gc;
        fNext = fn;
        residual = rc;
        return true;
      }
    }
    return false;
  };

  // Runs scaling (plus Newton) iterations at strength e from the current
  // potentials. Returns {iterations, converged}.
  Vector f = Vector::Zero(n), g = Vector::Zero(m), fNext(n);
  auto run_stage = [&](std::size_t budget, double tol, std::vector<double>* trace) {
    update_f(g, f);
    update_g(f, g);
    update_f(g, fNext);
    double residual = row_residual(f, fNext);
    std::size_t iter = 1;
    // A failed Newton attempt costs a full line search; retry after a growing gap.
    std::size_t nextNewton = opts.newtonAfter + 1;
    std::size_t newtonGap = 1;
    while (true) {
      if (trace) trace->push_back(residual);
      if (residual <= tol) return std::pair{iter, true};
      if (iter >= budget) return std::pair{iter, false};
      ++iter;
      if (iter >= nextNewton) {
        if (newton_step(f, g, fNext, residual)) {
          newtonGap = 1;
          nextNewton = iter + 1;
          continue;
        }
        newtonGap = std::min<std::size_t>(2 * newtonGap, 64);
        nextNewton = iter + newtonGap;
      }
      f.swap(fNext);
      update_g(f, g);
      update_f(g, fNext);
      residual = row_residual(f, fNext);
    }
  };

  // Small eps relative to the cost range stalls plain scaling, so the
  // potentials are first tracked along a halving schedule of strengths.
  std::size_t used = 0;
  const double range = shifted.maxCoeff();
  for (double stage = range; stage > kAnnealRatio * eps; stage *= 0.5) {
    if (used + 2 > opts.maxIter) break;
    e = stage;
    used += run_stage(std::min(opts.maxIter - used - 1, kStageBudget), kStageTol, nullptr).first;
  }
  e = eps;
  OtResult result{product_coupling(w, wp), 0.0, 0, false, {}};
  const auto [iters, converged] = run_stage(std::max<std::size_t>(1, opts.maxIter - used), opts.tol,
                                            &result.residualTrace);
  result.converged = converged;
  result.iterations = used + iters;

  Matrix plan = plan_of(f, g);
  result.cost = (cost.array() * plan.array()).sum();
  result.coupling = Coupling(std::move(plan), w, wp);
  return result;
}

OtResult solve_ot(const Histogram& w, const Histogram& wp, const Matrix& cost, double eps,
                  SinkhornOptions opts) {
  if (eps == 0.0) return exact_ot(w, wp, cost);
  return sinkhorn(w, wp, cost, eps, opts);
}

}  // namespace coot
