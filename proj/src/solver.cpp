#include "coot/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

namespace coot {

CootProblem::CootProblem(Matrix x, Matrix xp, Loss l)
    : X(std::move(x)),
      Xp(std::move(xp)),
      w(uniform_histogram(std::max<Eigen::Index>(X.rows(), 1))),
      wp(uniform_histogram(std::max<Eigen::Index>(Xp.rows(), 1))),
      v(uniform_histogram(std::max<Eigen::Index>(X.cols(), 1))),
      vp(uniform_histogram(std::max<Eigen::Index>(Xp.cols(), 1))),
      loss(l) {}

CootProblem::CootProblem(Matrix x, Matrix xp, Histogram w_, Histogram wp_, Histogram v_,
                         Histogram vp_, Loss l)
    : X(std::move(x)),
      Xp(std::move(xp)),
      w(std::move(w_)),
      wp(std::move(wp_)),
      v(std::move(v_)),
      vp(std::move(vp_)),
      loss(l) {}

void CootProblem::validate() const {
  check_matrix(X, "X");
  check_matrix(Xp, "X'");
  if (w.size() != std::size_t(X.rows()) || v.size() != std::size_t(X.cols()) ||
      wp.size() != std::size_t(Xp.rows()) || vp.size() != std::size_t(Xp.cols())) {
    fail(ErrorKind::InvalidDimension, "weight vectors do not match the matrix dimensions");
  }
  if (!(eps1 >= 0.0) || !(eps2 >= 0.0) || !std::isfinite(eps1) || !std::isfinite(eps2)) {
    fail(ErrorKind::Domain, "entropic strengths must be finite and >= 0");
  }
  check_loss_domain(X, Xp, loss);
}

CootSolution solve_coot(const CootProblem& p, const std::optional<CootInit>& init,
                        const SampleCostHook& hook) {
  p.validate();
  Coupling piS = init ? init->piS : product_coupling(p.w, p.wp);
  Coupling piV = init ? init->piV : product_coupling(p.v, p.vp);
  if (piS.plan.rows() != p.X.rows() || piS.plan.cols() != p.Xp.rows() ||
      piV.plan.rows() != p.X.cols() || piV.plan.cols() != p.Xp.cols()) {
    fail(ErrorKind::InvalidDimension, "initial couplings do not match the problem");
  }

  CootSolution sol{piS, piV, 0.0, {}, 0, false, true, 0};
  sol.objectiveTrace.push_back(coot_objective(p.X, p.Xp, piS, piV, p.loss));

  for (std::size_t k = 0; k < p.maxIter; ++k) {
    const ContractedCost featureCost = contract(p.X, p.Xp, piS, p.loss, Side::FeatureSide);
    OtResult nextV = solve_ot(p.v, p.vp, featureCost.matrix, p.eps2, p.sinkhorn);

    ContractedCost sampleCost = contract(p.X, p.Xp, nextV.coupling, p.loss, Side::SampleSide);
    OtResult nextS = [&] {
      if (!hook) return solve_ot(p.w, p.wp, sampleCost.matrix, p.eps1, p.sinkhorn);
      Matrix masked = sampleCost.matrix;
      hook(masked);
      return solve_ot(p.w, p.wp, masked, p.eps1, p.sinkhorn);
    }();
    sol.innerConverged = sol.innerConverged && nextV.converged && nextS.converged;

    const double err = (piV.plan - nextV.coupling.plan).norm();
    piV = std::move(nextV.coupling);
    piS = std::move(nextS.coupling);
    sol.iterations = k + 1;
    sol.objectiveTrace.push_back((sampleCost.matrix.array() * piS.plan.array()).sum());
    if (err <= p.tol) {
      sol.converged = true;
      break;
    }
  }
  sol.piS = std::move(piS);
  sol.piV = std::move(piV);
  sol.cost = sol.objectiveTrace.back();
  return sol;
}

std::mt19937_64 restart_rng(std::uint64_t seed, std::uint64_t restart) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(restart),
                    std::uint32_t(restart >> 32)};
  return std::mt19937_64(seq);
}

Coupling random_coupling(const Histogram& w, const Histogram& wp, std::mt19937_64& rng,
                         double sharpness) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix negLogKernel(w.size(), wp.size());
  for (Eigen::Index i = 0; i < negLogKernel.rows(); ++i) {
    for (Eigen::Index j = 0; j < negLogKernel.cols(); ++j) {
      negLogKernel(i, j) = -sharpness * normal(rng);
    }
  }
  // Sinkhorn with eps = 1 scales the kernel exp(-C) onto the polytope.
  SinkhornOptions opts;
  opts.tol = 1e-12;
  return sinkhorn(w, wp, negLogKernel, 1.0, opts).coupling;
}

CootSolution solve_coot_restarts(const CootProblem& problem, const RestartOptions& opts,
                                 const SampleCostHook& hook) {
  problem.validate();
  const std::size_t count = std::max<std::size_t>(opts.restarts, 1);
  std::vector<std::optional<CootSolution>> runs(count);
  std::vector<std::exception_ptr> errors(count);

  auto run_one = [&](std::size_t r) {
    try {
      std::optional<CootInit> init;
      if (r > 0) {
        std::mt19937_64 rng = restart_rng(opts.seed, r);
        Coupling piS = random_coupling(problem.w, problem.wp, rng);
        Coupling piV = random_coupling(problem.v, problem.vp, rng);
        init = CootInit{std::move(piS), std::move(piV)};
      }
      runs[r] = solve_coot(problem, init, hook);
      runs[r]->restart = r;
    } catch (...) {
      errors[r] = std::current_exception();
    }
  };

  const std::size_t jobs = std::clamp<std::size_t>(opts.jobs, 1, count);
  if (jobs == 1) {
    for (std::size_t r = 0; r < count; ++r) run_one(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < count; r = next++) run_one(r);
      });
    }
    for (auto& th : pool) th.join();
  }

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::size_t best = 0;
  for (std::size_t r = 1; r < count; ++r) {
    if (runs[r]->cost < runs[best]->cost) best = r;
  }
  return std::move(*runs[best]);
}

namespace {

std::size_t factorial(std::size_t n) { return n <= 1 ? 1 : n * factorial(n - 1); }

std::vector<Permutation> all_permutations(std::size_t n) {
  std::vector<Permutation> out;
  out.reserve(factorial(n));
  Permutation p(n);
  std::iota(p.begin(), p.end(), 0);
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

}  // namespace

BapResult bap_oracle(const Matrix& X, const Matrix& Xp, const Loss& loss) {
  check_matrix(X, "X");
  check_matrix(Xp, "X'");
  if (X.rows() != Xp.rows() || X.cols() != Xp.cols()) {
    fail(ErrorKind::InvalidDimension, "bap oracle needs equally shaped matrices");
  }
  const std::size_t n = X.rows(), d = X.cols();
  if (n > kOracleMaxSize || d > kOracleMaxSize) {
    fail(ErrorKind::OracleBound, "bap oracle is limited to n, d <= 6");
  }
  check_loss_domain(X, Xp, loss);

  const auto rowPerms = all_permutations(n);
  const auto colPerms = all_permutations(d);
  BapResult best{std::numeric_limits<double>::infinity(), {}, {}};
  Matrix pairCost(d, d);
  for (const auto& s1 : rowPerms) {
    // pairCost(k, l) = sum_i L(X_ik, X'_{s1(i), l})
    for (std::size_t k = 0; k < d; ++k) {
      for (std::size_t l = 0; l < d; ++l) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += loss(X(i, k), Xp(s1[i], l));
        pairCost(k, l) = acc;
      }
    }
    for (const auto& s2 : colPerms) {
      double total = 0.0;
      for (std::size_t k = 0; k < d; ++k) total += pairCost(k, s2[k]);
      if (total < best.cost) best = {total, s1, s2};
    }
  }
  best.cost /= static_cast<double>(n * d);
  return best;
}

bool permutation_equal(const Matrix& X, const Matrix& Xp, double tol) {
  if (X.rows() != Xp.rows() || X.cols() != Xp.cols()) return false;
  const std::size_t n = X.rows(), d = X.cols();
  if (n > kOracleMaxSize || d > kOracleMaxSize) {
    fail(ErrorKind::OracleBound, "permutation_equal is limited to n, d <= 6");
  }
  const auto colPerms = all_permutations(d);
  for (const auto& s1 : all_permutations(n)) {
    for (const auto& s2 : colPerms) {
      bool same = true;
      for (std::size_t i = 0; i < n && same; ++i) {
        for (std::size_t k = 0; k < d && same; ++k) {
          same = std::abs(X(i, k) - Xp(s1[i], s2[k])) <= tol;
        }
      }
      if (same) return true;
    }
  }
  return false;
}

Coupling permutation_coupling(const Permutation& sigma) {
  const std::size_t n = sigma.size();
  Matrix plan = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) plan(i, sigma[i]) = 1.0 / static_cast<double>(n);
  return Coupling(std::move(plan), uniform_histogram(n), uniform_histogram(n));
}

DistanceReport coot_distance_checks(const std::vector<MatrixTriple>& triples, const Loss& loss,
                                    double triangleSlack) {
  DistanceReport report;
  report.triples = triples.size();
  for (const auto& t : triples) {
    double dist[3][3];
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) dist[a][b] = bap_oracle(t[a], t[b], loss).cost;
    }
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        report.maxSymmetryGap = std::max(report.maxSymmetryGap, std::abs(dist[a][b] - dist[b][a]));
        const bool zero = dist[a][b] <= 1e-12;
        if (zero != permutation_equal(t[a], t[b])) ++report.indiscernibleViolations;
        for (int c = 0; c < 3; ++c) {
          const double excess = dist[a][c] - dist[a][b] - dist[b][c];
          report.maxTriangleExcess = std::max(report.maxTriangleExcess, excess);
          if (excess > triangleSlack) ++report.triangleViolations;
        }
      }
    }
  }
  return report;
}

std::vector<MatrixTriple> random_distance_triples(std::uint64_t seed, std::size_t count,
                                                  std::size_t n, std::size_t d) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> value(0, 4);
  auto random_matrix = [&] {
    Matrix m(n, d);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index k = 0; k < m.cols(); ++k) m(i, k) = value(rng);
    }
    return m;
  };
  std::vector<MatrixTriple> out;
  for (std::size_t t = 0; t < count; ++t) {
    MatrixTriple triple{random_matrix(), random_matrix(), random_matrix()};
    if (t % 3 == 0) {
      Permutation rows(n), cols(d);
      std::iota(rows.begin(), rows.end(), 0);
      std::iota(cols.begin(), cols.end(), 0);
      std::shuffle(rows.begin(), rows.end(), rng);
      std::shuffle(cols.begin(), cols.end(), rng);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) triple[2](rows[i], cols[k]) = triple[0](i, k);
      }
    }
    out.push_back(std::move(triple));
  }
  return out;
}

}  // namespace coot
