#include "coot/core.hpp"

#include <cmath>
#include <numeric>

namespace coot {

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

void check_matrix(const Matrix& m, const char* name) {
  if (m.rows() < 1 || m.cols() < 1) {
    fail(ErrorKind::InvalidDimension, std::string(name) + ": matrix must be at least 1x1");
  }
  if (!m.allFinite()) {
    fail(ErrorKind::Domain, std::string(name) + ": matrix has non-finite entries");
  }
}

Histogram::Histogram(std::vector<double> weights) : w_(std::move(weights)) {
  if (w_.empty()) fail(ErrorKind::InvalidDimension, "histogram must have at least one bin");
  double sum = 0.0;
  for (double x : w_) {
    if (!std::isfinite(x) || x <= 0.0) {
      fail(ErrorKind::Domain, "histogram entries must be finite and strictly positive");
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    fail(ErrorKind::Domain, "histogram weights must sum to 1");
  }
  for (double& x : w_) x /= sum;
}

Histogram Histogram::from_masses(std::span<const double> masses) {
  double sum = 0.0;
  for (double x : masses) {
    if (!std::isfinite(x) || x <= 0.0) {
      fail(ErrorKind::Domain, "histogram masses must be finite and strictly positive");
    }
    sum += x;
  }
  std::vector<double> w(masses.begin(), masses.end());
  for (double& x : w) x /= sum;
  // Absorb the residual rounding error so the simplex check passes.
  double s = std::accumulate(w.begin(), w.end(), 0.0);
  if (std::abs(s - 1.0) > Histogram::kSumTolerance) {
    for (double& x : w) x /= s;
  }
  return Histogram(std::move(w));
}

Histogram uniform_histogram(std::size_t n) {
  if (n == 0) fail(ErrorKind::InvalidDimension, "uniform histogram needs n >= 1");
  return Histogram(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Coupling::Coupling(Matrix p, Histogram r, Histogram c)
    : plan(std::move(p)), rows(std::move(r)), cols(std::move(c)) {
  if (static_cast<std::size_t>(plan.rows()) != rows.size() ||
      static_cast<std::size_t>(plan.cols()) != cols.size()) {
    fail(ErrorKind::InvalidDimension, "coupling plan does not match its marginals");
  }
}

Coupling product_coupling(const Histogram& w, const Histogram& wp) {
  Matrix plan = w.as_vector() * wp.as_vector().transpose();
  return Coupling(std::move(plan), w, wp);
}

double marginal_residual_l1(const Matrix& plan, const Histogram& w, const Histogram& wp) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < plan.rows(); ++i) r += std::abs(plan.row(i).sum() - w[i]);
  for (Eigen::Index j = 0; j < plan.cols(); ++j) r += std::abs(plan.col(j).sum() - wp[j]);
  return r;
}

bool validate_coupling(const Matrix& plan, const Histogram& w, const Histogram& wp, double tol) {
  if (static_cast<std::size_t>(plan.rows()) != w.size() ||
      static_cast<std::size_t>(plan.cols()) != wp.size()) {
    fail(ErrorKind::InvalidDimension, "coupling dimensions do not match histograms");
  }
  if (!plan.allFinite() || (plan.array() < 0.0).any()) return false;
  for (Eigen::Index i = 0; i < plan.rows(); ++i) {
    if (std::abs(plan.row(i).sum() - w[i]) > tol) return false;
  }
  for (Eigen::Index j = 0; j < plan.cols(); ++j) {
    if (std::abs(plan.col(j).sum() - wp[j]) > tol) return false;
  }
  return true;
}

void Loss::check_domain(double a, double b) const {
  if (kind == LossKind::KullbackLeibler && (a < 0.0 || b <= 0.0)) {
    fail(ErrorKind::Domain, "KL loss requires a >= 0 and b > 0");
  }
}

double Loss::operator()(double a, double b) const {
  switch (kind) {
    case LossKind::SquaredEuclidean:
      return (a - b) * (a - b);
    case LossKind::Absolute:
      return std::abs(a - b);
    case LossKind::KullbackLeibler:
      return (a == 0.0 ? 0.0 : a * std::log(a / b)) - a + b;
  }
  return 0.0;
}

double Loss::f1(double a) const {
  switch (kind) {
    case LossKind::SquaredEuclidean:
      return a * a;
    case LossKind::KullbackLeibler:
      return a == 0.0 ? 0.0 : a * std::log(a) - a;
    case LossKind::Absolute:
      break;
  }
  fail(ErrorKind::UnsupportedLoss, "absolute loss has no decomposition");
}

double Loss::f2(double b) const {
  switch (kind) {
    case LossKind::SquaredEuclidean:
      return b * b;
    case LossKind::KullbackLeibler:
      return b;
    case LossKind::Absolute:
      break;
  }
  fail(ErrorKind::UnsupportedLoss, "absolute loss has no decomposition");
}

double Loss::h1(double a) const {
  if (kind == LossKind::Absolute) fail(ErrorKind::UnsupportedLoss, "absolute loss has no decomposition");
  return a;
}

double Loss::h2(double b) const {
  switch (kind) {
    case LossKind::SquaredEuclidean:
      return 2.0 * b;
    case LossKind::KullbackLeibler:
      return std::log(b);
    case LossKind::Absolute:
      break;
  }
  fail(ErrorKind::UnsupportedLoss, "absolute loss has no decomposition");
}

double loss_eval(const Loss& loss, double a, double b) {
  loss.check_domain(a, b);
  return loss(a, b);
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::SquaredEuclidean:
      return "sq";
    case LossKind::Absolute:
      return "abs";
    case LossKind::KullbackLeibler:
      return "kl";
  }
  return "?";
}

LossKind parse_loss(const std::string& name) {
  if (name == "sq" || name == "sqeuclidean") return LossKind::SquaredEuclidean;
  if (name == "abs" || name == "absolute") return LossKind::Absolute;
  if (name == "kl") return LossKind::KullbackLeibler;
  fail(ErrorKind::Config, "unknown loss '" + name + "' (expected sq, abs or kl)");
}

}  // namespace coot
