#pragma once

#include "coot/solver.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace coot {

inline constexpr int kUndefinedLabel = -1;
using Labels = std::vector<int>;

// ---------------------------------------------------------------------------
// Co-clustering

struct CoclusterOptions {
  std::size_t g = 2;
  std::size_t m = 2;
  double eps1 = 0.1;
  double eps2 = 0.1;
  std::size_t outerIter = 20;
  double summaryTol = 1e-8;  ///< stop once the summary matrix moves less than this
  std::size_t bcdMaxIter = 50;
  double bcdTol = 1e-7;
  std::uint64_t seed = 0;
};

struct CoClustering {
  Labels rowLabels;  ///< argmax of each row of pi_s, ties to the lowest index
  Labels colLabels;  ///< argmax of each row of pi_v
  Matrix Xc;         ///< g x m summary
  CootSolution solution;
  std::vector<double> objectiveTrace;  ///< COOT(X, Xc) after each summary update
  std::size_t outerIterations = 0;
  bool converged = false;
};

/// Alternates solve_coot(X, Xc) (warm-started from the previous couplings)
/// with the summary update Xc <- g m pi_s^T X pi_v. Uniform weights throughout.
CoClustering cocluster(const Matrix& X, const CoclusterOptions& opts);

/// g m pi_s^T X pi_v: the least-squares summary for uniform target marginals.
Matrix summary_update(const Matrix& X, const Matrix& piS, const Matrix& piV);

/// Weighted least-squares summary for arbitrary couplings:
/// Xc_jl = (pi_s^T X pi_v)_jl / (colsum(pi_s)_j colsum(pi_v)_l).
Matrix summary_least_squares(const Matrix& X, const Matrix& piS, const Matrix& piV);

/// Index of the row maximum of each row; ties go to the lowest index.
Labels row_argmax(const Matrix& m);

/// Co-clustering error: e_r + e_c - e_r e_c, each term being the
/// misclassification rate after the best one-to-one relabeling.
double cce(const Labels& predRows, const Labels& trueRows, const Labels& predCols,
           const Labels& trueCols);

/// Misclassification rate after optimal matching of cluster ids. Exhaustive
/// over relabelings for at most 8 clusters, optimal assignment beyond.
double misclassification_rate(const Labels& pred, const Labels& truth);

struct BlockConfig {
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t g = 0;
  std::size_t m = 0;
  std::vector<double> rowProportions;
  std::vector<double> colProportions;
  double separation = 4.0;  ///< spacing of block means, in noise standard deviations
  double noise = 1.0;
};

inline constexpr double kWellSeparated = 4.0;
inline constexpr double kIllSeparated = 1.0;

/// Equal proportions or the fixed unequal split for k clusters.
std::vector<double> equal_proportions(std::size_t k);
std::vector<double> unequal_proportions(std::size_t k);

/// Named simulated configurations D1-D4.
BlockConfig block_preset(const std::string& name);

struct BlockData {
  Matrix X;
  Labels trueRows;
  Labels trueCols;
  Matrix means;  ///< g x m block means
};

/// Gaussian latent block model X_ik ~ N(mu[z_i, c_k], noise^2) with the g m
/// means placed on a shuffled grid of spacing `separation`.
BlockData generate_blocks(const BlockConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Heterogeneous domain adaptation

/// One-hot labels; unlabeled rows are all zero.
class LabelMatrix {
 public:
  /// Labels in [0, classes) or kUndefinedLabel.
  LabelMatrix(const Labels& labels, std::size_t classes);

  const Matrix& onehot() const { return onehot_; }
  std::size_t rows() const { return static_cast<std::size_t>(onehot_.rows()); }
  std::size_t classes() const { return static_cast<std::size_t>(onehot_.cols()); }
  int label(std::size_t i) const { return labels_[i]; }
  const Labels& labels() const { return labels_; }

 private:
  Matrix onehot_;
  Labels labels_;
};

struct Propagation {
  Matrix scores;  ///< n_t x K
  Labels labels;  ///< kUndefinedLabel where a target receives no labeled mass
};

/// scores = pi_s^T Ys; labels are row-wise argmax.
Propagation propagate_labels(const Matrix& piS, const LabelMatrix& Ys);

/// Adds `penalty` to cost(i, j) when source i and target j are both labeled
/// with different classes.
Matrix mask_semisupervised_cost(const Matrix& cost, const LabelMatrix& Ys,
                                const LabelMatrix& YtPartial, double penalty);

/// Default penalty: 1e3 times the largest entry of the unmasked cost.
double auto_penalty(const Matrix& cost);

/// Masking hook for solve_coot. Without a fixed penalty the automatic one is
/// recomputed from each iteration's cost.
SampleCostHook semisupervised_hook(LabelMatrix Ys, LabelMatrix YtPartial,
                                   std::optional<double> penalty = {});

struct HdaOptions {
  double eps1 = 0.0;
  double eps2 = 0.0;
  std::size_t maxIter = 50;
  RestartOptions restarts{};
  std::optional<double> penalty;  ///< used only with partial target labels
};

struct HdaResult {
  CootSolution solution;
  Propagation propagation;
};

HdaResult hda_transfer(const Matrix& Xs, const Matrix& Xt, const LabelMatrix& Ys,
                       const std::optional<LabelMatrix>& YtPartial, const HdaOptions& opts);

// ---------------------------------------------------------------------------
// Elections

/// positions(i, k) = rank of candidate k in voter i's order, stored 1-based.
class Election {
 public:
  /// Accepts 1-based or 0-based rank rows; every row must be a permutation.
  static Election from_positions(const Matrix& positions);

  const Matrix& positions() const { return positions_; }
  std::size_t voters() const { return static_cast<std::size_t>(positions_.rows()); }
  std::size_t candidates() const { return static_cast<std::size_t>(positions_.cols()); }

 private:
  explicit Election(Matrix p) : positions_(std::move(p)) {}
  Matrix positions_;
};

struct ElectionDistance {
  double distance = 0.0;  ///< n m COOT(X, X') with L = |.|, from the solver
  std::optional<double> oracleDistance;  ///< exhaustive value when n, m <= 6
  bool certified = false;                ///< solver matches the oracle within 1e-9
  CootSolution solution;
};

ElectionDistance election_distance(const Election& E, const Election& Ep,
                                   const RestartOptions& restarts = {20, 0, 1});

}  // namespace coot
