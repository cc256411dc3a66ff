#include "coot/apps.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace coot {

// ---------------------------------------------------------------------------
// Co-clustering

Matrix summary_update(const Matrix& X, const Matrix& piS, const Matrix& piV) {
  const double gm = static_cast<double>(piS.cols()) * static_cast<double>(piV.cols());
  Matrix XpiV = X * piV;
  return gm * (piS.transpose() * XpiV);
}

Matrix summary_least_squares(const Matrix& X, const Matrix& piS, const Matrix& piV) {
  Matrix XpiV = X * piV;
  Matrix Xc = piS.transpose() * XpiV;
  const Vector rowMass = piS.colwise().sum().transpose();
  const Vector colMass = piV.colwise().sum().transpose();
  for (Eigen::Index j = 0; j < Xc.rows(); ++j) {
    for (Eigen::Index l = 0; l < Xc.cols(); ++l) Xc(j, l) /= rowMass(j) * colMass(l);
  }
  return Xc;
}

Labels row_argmax(const Matrix& m) {
  Labels out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < m.cols(); ++j) {
      if (m(i, j) > m(i, best)) best = j;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

CoClustering cocluster(const Matrix& X, const CoclusterOptions& opts) {
  check_matrix(X, "X");
  if (opts.g < 1 || opts.g > std::size_t(X.rows()) || opts.m < 1 ||
      opts.m > std::size_t(X.cols())) {
    fail(ErrorKind::InvalidDimension, "need 1 <= g <= n and 1 <= m <= d");
  }
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(X.minCoeff(), std::nextafter(X.maxCoeff(), INFINITY));
  Matrix Xc(opts.g, opts.m);
  for (Eigen::Index j = 0; j < Xc.rows(); ++j) {
    for (Eigen::Index l = 0; l < Xc.cols(); ++l) Xc(j, l) = unif(rng);
  }

  CoClustering out;
  std::optional<CootInit> warm;
  for (std::size_t t = 0; t < opts.outerIter; ++t) {
    CootProblem problem(X, Xc, kSquaredEuclidean);
    problem.eps1 = opts.eps1;
    problem.eps2 = opts.eps2;
    problem.maxIter = opts.bcdMaxIter;
    problem.tol = opts.bcdTol;
    CootSolution sol = solve_coot(problem, warm);
    Matrix next = summary_update(X, sol.piS.plan, sol.piV.plan);
    out.objectiveTrace.push_back(coot_objective(X, next, sol.piS, sol.piV, kSquaredEuclidean));
    const double change = (next - Xc).norm();
    Xc = std::move(next);
    warm = CootInit{sol.piS, sol.piV};
    out.solution = std::move(sol);
    out.outerIterations = t + 1;
    if (change <= opts.summaryTol) {
      out.converged = true;
      break;
    }
  }
  if (opts.outerIter == 0) {
    CootProblem problem(X, Xc, kSquaredEuclidean);
    problem.maxIter = 0;
    out.solution = solve_coot(problem);
  }
  out.Xc = std::move(Xc);
  out.rowLabels = row_argmax(out.solution.piS.plan);
  out.colLabels = row_argmax(out.solution.piV.plan);
  return out;
}

namespace {

// Dense confusion matrix between compacted cluster ids, padded square.
Matrix confusion(const Labels& pred, const Labels& truth) {
  std::map<int, int> predIds, trueIds;
  for (int p : pred) predIds.emplace(p, 0);
  for (int t : truth) trueIds.emplace(t, 0);
  int k = 0;
  for (auto& [_, id] : predIds) id = k++;
  k = 0;
  for (auto& [_, id] : trueIds) id = k++;
  const std::size_t size = std::max(predIds.size(), trueIds.size());
  Matrix c = Matrix::Zero(size, size);
  for (std::size_t i = 0; i < pred.size(); ++i) c(predIds[pred[i]], trueIds[truth[i]]) += 1.0;
  return c;
}

}  // namespace

double misclassification_rate(const Labels& pred, const Labels& truth) {
  if (pred.size() != truth.size()) {
    fail(ErrorKind::InvalidDimension, "label vectors must have the same length");
  }
  if (pred.empty()) return 0.0;
  const Matrix c = confusion(pred, truth);
  const std::size_t k = c.rows();
  double matched = 0.0;
  if (k <= 8) {
    Permutation sigma(k);
    std::iota(sigma.begin(), sigma.end(), 0);
    do {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += c(p, sigma[p]);
      matched = std::max(matched, s);
    } while (std::next_permutation(sigma.begin(), sigma.end()));
  } else {
    // Maximum-weight matching as an assignment problem on uniform marginals.
    const Histogram u = uniform_histogram(k);
    const OtResult r = exact_ot(u, u, -c);
    matched = -r.cost * static_cast<double>(k);
    matched = std::round(matched);
  }
  return 1.0 - matched / static_cast<double>(pred.size());
}

double cce(const Labels& predRows, const Labels& trueRows, const Labels& predCols,
           const Labels& trueCols) {
  const double er = misclassification_rate(predRows, trueRows);
  const double ec = misclassification_rate(predCols, trueCols);
  return er + ec - er * ec;
}

std::vector<double> equal_proportions(std::size_t k) {
  return std::vector<double>(k, 1.0 / static_cast<double>(k));
}

std::vector<double> unequal_proportions(std::size_t k) {
  switch (k) {
    case 1:
      return {1.0};
    case 2:
      return {0.4, 0.6};
    case 3:
      return {0.2, 0.3, 0.5};
    case 4:
      return {0.1, 0.2, 0.3, 0.4};
    case 5:
      return {0.1, 0.15, 0.2, 0.25, 0.3};
    default:
      break;
  }
  std::vector<double> p(k);
  const double total = static_cast<double>(k * (k + 1)) / 2.0;
  for (std::size_t i = 0; i < k; ++i) p[i] = static_cast<double>(i + 1) / total;
  return p;
}

BlockConfig block_preset(const std::string& name) {
  if (name == "D1") {
    return {600, 300, 3, 3, equal_proportions(3), equal_proportions(3), kWellSeparated, 1.0};
  }
  if (name == "D2") {
    return {600, 300, 3, 3, unequal_proportions(3), unequal_proportions(3), kWellSeparated, 1.0};
  }
  if (name == "D3") {
    return {300, 200, 2, 4, equal_proportions(2), equal_proportions(4), kIllSeparated, 1.0};
  }
  if (name == "D4") {
    return {300, 300, 5, 4, unequal_proportions(5), unequal_proportions(4), kIllSeparated, 1.0};
  }
  fail(ErrorKind::Config, "unknown preset '" + name + "' (expected D1..D4)");
}

namespace {

Labels draw_assignment(std::size_t count, const std::vector<double>& props, std::mt19937_64& rng,
                       const char* what) {
  double sum = 0.0;
  for (double p : props) {
    if (!(p > 0.0)) fail(ErrorKind::Config, std::string(what) + " proportions must be positive");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    fail(ErrorKind::Config, std::string(what) + " proportions must sum to 1");
  }
  // Largest-remainder rounding of the cluster sizes.
  std::vector<std::size_t> sizes(props.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < props.size(); ++c) {
    const double exact = props[c] * static_cast<double>(count);
    sizes[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += sizes[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < count; ++r, ++assigned) ++sizes[remainders[r].second];
  Labels labels;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    if (sizes[c] == 0) fail(ErrorKind::Config, std::string(what) + " cluster would be empty");
    labels.insert(labels.end(), sizes[c], static_cast<int>(c));
  }
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

}  // namespace

BlockData generate_blocks(const BlockConfig& cfg, std::uint64_t seed) {
  if (cfg.n == 0 || cfg.d == 0 || cfg.g == 0 || cfg.m == 0 || cfg.g > cfg.n || cfg.m > cfg.d) {
    fail(ErrorKind::Config, "block config needs 1 <= g <= n and 1 <= m <= d");
  }
  if (cfg.rowProportions.size() != cfg.g || cfg.colProportions.size() != cfg.m) {
    fail(ErrorKind::Config, "proportion vectors must have g and m entries");
  }
  if (!(cfg.separation > 0.0) || !(cfg.noise >= 0.0)) {
    fail(ErrorKind::Config, "separation must be > 0 and noise >= 0");
  }
  std::mt19937_64 rng(seed);
  BlockData out;
  out.trueRows = draw_assignment(cfg.n, cfg.rowProportions, rng, "row");
  out.trueCols = draw_assignment(cfg.d, cfg.colProportions, rng, "column");

  std::vector<double> grid(cfg.g * cfg.m);
  std::iota(grid.begin(), grid.end(), 0.0);
  std::shuffle(grid.begin(), grid.end(), rng);
  out.means.resize(cfg.g, cfg.m);
  for (std::size_t a = 0; a < cfg.g; ++a) {
    for (std::size_t b = 0; b < cfg.m; ++b) out.means(a, b) = cfg.separation * grid[a * cfg.m + b];
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  out.X.resize(cfg.n, cfg.d);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    for (std::size_t k = 0; k < cfg.d; ++k) {
      out.X(i, k) = out.means(out.trueRows[i], out.trueCols[k]) + cfg.noise * normal(rng);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Heterogeneous domain adaptation

LabelMatrix::LabelMatrix(const Labels& labels, std::size_t classes)
    : onehot_(Matrix::Zero(labels.size(), classes)), labels_(labels) {
  if (labels.empty() || classes == 0) {
    fail(ErrorKind::InvalidDimension, "label matrix needs at least one row and one class");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y == kUndefinedLabel) continue;
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      fail(ErrorKind::Domain, "label " + std::to_string(y) + " outside [0, classes)");
    }
    onehot_(i, y) = 1.0;
  }
}

Propagation propagate_labels(const Matrix& piS, const LabelMatrix& Ys) {
  if (std::size_t(piS.rows()) != Ys.rows()) {
    fail(ErrorKind::InvalidDimension, "coupling rows must match the number of source labels");
  }
  Propagation out;
  out.scores = piS.transpose() * Ys.onehot();
  out.labels = row_argmax(out.scores);
  for (Eigen::Index j = 0; j < out.scores.rows(); ++j) {
    if (!(out.scores.row(j).maxCoeff() > 0.0)) out.labels[j] = kUndefinedLabel;
  }
  return out;
}

Matrix mask_semisupervised_cost(const Matrix& cost, const LabelMatrix& Ys,
                                const LabelMatrix& YtPartial, double penalty) {
  if (std::size_t(cost.rows()) != Ys.rows() || std::size_t(cost.cols()) != YtPartial.rows()) {
    fail(ErrorKind::InvalidDimension, "cost shape must be n_source x n_target");
  }
  if (!(penalty > 0.0)) fail(ErrorKind::Domain, "mask penalty must be > 0");
  Matrix out = cost;
  for (std::size_t j = 0; j < YtPartial.rows(); ++j) {
    const int yt = YtPartial.label(j);
    if (yt == kUndefinedLabel) continue;
    for (std::size_t i = 0; i < Ys.rows(); ++i) {
      const int ys = Ys.label(i);
      if (ys != kUndefinedLabel && ys != yt) out(i, j) += penalty;
    }
  }
  return out;
}

double auto_penalty(const Matrix& cost) {
  const double top = cost.maxCoeff();
  // An all-zero cost still needs a positive mask.
  return 1e3 * (top > 0.0 ? top : 1.0);
}

SampleCostHook semisupervised_hook(LabelMatrix Ys, LabelMatrix YtPartial,
                                   std::optional<double> penalty) {
  return [Ys = std::move(Ys), Yt = std::move(YtPartial), penalty](Matrix& cost) {
    cost = mask_semisupervised_cost(cost, Ys, Yt, penalty ? *penalty : auto_penalty(cost));
  };
}

HdaResult hda_transfer(const Matrix& Xs, const Matrix& Xt, const LabelMatrix& Ys,
                       const std::optional<LabelMatrix>& YtPartial, const HdaOptions& opts) {
  if (Ys.rows() != std::size_t(Xs.rows())) {
    fail(ErrorKind::InvalidDimension, "one source label per source row is required");
  }
  if (YtPartial && (YtPartial->rows() != std::size_t(Xt.rows()) ||
                    YtPartial->classes() != Ys.classes())) {
    fail(ErrorKind::InvalidDimension, "partial target labels do not match the target data");
  }
  CootProblem problem(Xs, Xt, kSquaredEuclidean);
  problem.eps1 = opts.eps1;
  problem.eps2 = opts.eps2;
  problem.maxIter = opts.maxIter;
  SampleCostHook hook;
  if (YtPartial) hook = semisupervised_hook(Ys, *YtPartial, opts.penalty);
  HdaResult out{solve_coot_restarts(problem, opts.restarts, hook), {}};
  out.propagation = propagate_labels(out.solution.piS.plan, Ys);
  return out;
}

// ---------------------------------------------------------------------------
// Elections

Election Election::from_positions(const Matrix& positions) {
  check_matrix(positions, "election");
  const Eigen::Index m = positions.cols();
  Matrix p = positions;
  const double base = positions.minCoeff();
  if (base != 0.0 && base != 1.0) {
    fail(ErrorKind::Domain, "election positions must be 0- or 1-based ranks");
  }
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    std::vector<char> seen(m, 0);
    for (Eigen::Index k = 0; k < m; ++k) {
      const double r = p(i, k) - base;
      if (r != std::floor(r) || r < 0 || r >= double(m) || seen[Eigen::Index(r)]) {
        fail(ErrorKind::Domain, "voter " + std::to_string(i) + " does not rank every candidate once");
      }
      seen[Eigen::Index(r)] = 1;
      p(i, k) = r + 1.0;
    }
  }
  return Election(std::move(p));
}

ElectionDistance election_distance(const Election& E, const Election& Ep,
                                   const RestartOptions& restarts) {
  if (E.voters() != Ep.voters() || E.candidates() != Ep.candidates()) {
    fail(ErrorKind::InvalidDimension, "elections must have equal voter and candidate counts");
  }
  const double scale = static_cast<double>(E.voters() * E.candidates());
  CootProblem problem(E.positions(), Ep.positions(), kAbsolute);
  ElectionDistance out;
  out.solution = solve_coot_restarts(problem, restarts);
  out.distance = scale * out.solution.cost;
  if (E.voters() <= kOracleMaxSize && E.candidates() <= kOracleMaxSize) {
    out.oracleDistance = scale * bap_oracle(E.positions(), Ep.positions(), kAbsolute).cost;
    out.certified = std::abs(out.distance - *out.oracleDistance) <= 1e-9;
  }
  return out;
}

}  // namespace coot
