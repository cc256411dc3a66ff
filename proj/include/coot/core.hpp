#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace coot {

/// Dense row-major real matrix. Every matrix handed to a solver must be
/// non-empty and finite; see check_matrix().
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class ErrorKind { InvalidDimension, Domain, UnsupportedLoss, Config, Io, OracleBound };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

/// Throws InvalidDimension for an empty matrix and Domain for NaN/Inf entries.
void check_matrix(const Matrix& m, const char* name);

/// Probability vector with strictly positive entries summing to one.
class Histogram {
 public:
  static constexpr double kSumTolerance = 1e-12;

  /// Validates positivity and the simplex constraint; renormalizes the
  /// accepted weights so the stored sum is 1 up to rounding.
  explicit Histogram(std::vector<double> weights);
  /// Single bin of mass one.
  Histogram() : w_{1.0} {}

  /// Normalizes arbitrary positive masses onto the simplex.
  static Histogram from_masses(std::span<const double> masses);

  std::size_t size() const noexcept { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  std::span<const double> weights() const noexcept { return w_; }
  Vector as_vector() const { return Eigen::Map<const Vector>(w_.data(), w_.size()); }

 private:
  std::vector<double> w_;
};

Histogram uniform_histogram(std::size_t n);

/// Transport plan together with the marginals it was built for. The plan is
/// nonnegative; marginal feasibility is a property checked by
/// validate_coupling, since inexact solvers only meet it up to a tolerance.
struct Coupling {
  Matrix plan;
  Histogram rows;
  Histogram cols;

  Coupling(Matrix plan, Histogram rows, Histogram cols);
  /// Trivial 1 x 1 plan.
  Coupling() : plan(Matrix::Ones(1, 1)) {}

  std::size_t n_rows() const { return static_cast<std::size_t>(plan.rows()); }
  std::size_t n_cols() const { return static_cast<std::size_t>(plan.cols()); }
  Coupling transposed() const { return Coupling(plan.transpose(), cols, rows); }
};

/// w w'^T, always feasible.
Coupling product_coupling(const Histogram& w, const Histogram& wp);

bool validate_coupling(const Matrix& plan, const Histogram& w, const Histogram& wp, double tol);
inline bool validate_coupling(const Coupling& c, double tol) {
  return validate_coupling(c.plan, c.rows, c.cols, tol);
}

/// Sum of |row sums - w| and |column sums - w'|.
double marginal_residual_l1(const Matrix& plan, const Histogram& w, const Histogram& wp);

enum class LossKind { SquaredEuclidean, Absolute, KullbackLeibler };

/// Elementwise divergence L(a, b). When a decomposition exists,
/// L(a, b) = f1(a) + f2(b) - h1(a) * h2(b).
struct Loss {
  LossKind kind = LossKind::SquaredEuclidean;

  bool has_decomposition() const { return kind != LossKind::Absolute; }

  double operator()(double a, double b) const;
  double f1(double a) const;
  double f2(double b) const;
  double h1(double a) const;
  double h2(double b) const;

  /// Throws Domain if the pair is outside the loss domain.
  void check_domain(double a, double b) const;
};

inline constexpr Loss kSquaredEuclidean{LossKind::SquaredEuclidean};
inline constexpr Loss kAbsolute{LossKind::Absolute};
inline constexpr Loss kKullbackLeibler{LossKind::KullbackLeibler};

double loss_eval(const Loss& loss, double a, double b);

std::string to_string(LossKind kind);
LossKind parse_loss(const std::string& name);

}  // namespace coot
