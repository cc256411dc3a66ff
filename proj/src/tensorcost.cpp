#include "coot/tensorcost.hpp"

#include <string>

namespace coot {
namespace {

void check_shapes(const Matrix& X, const Matrix& Xp, const Matrix& pi, Side side) {
  check_matrix(X, "X");
  check_matrix(Xp, "X'");
  const bool ok = side == Side::FeatureSide
                      ? (pi.rows() == X.rows() && pi.cols() == Xp.rows())
                      : (pi.rows() == X.cols() && pi.cols() == Xp.cols());
  if (!ok) {
    fail(ErrorKind::InvalidDimension,
         std::string("coupling shape does not match the ") +
             (side == Side::FeatureSide ? "sample" : "feature") + " dimensions of X and X'");
  }
}

Matrix apply(const Matrix& m, double (Loss::*fn)(double) const, const Loss& loss) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = (loss.*fn)(m(i, j));
  }
  return out;
}

// A * B * C with the cheaper association.
Matrix triple_product(const Matrix& A, const Matrix& B, const Matrix& C) {
  const double left = double(A.rows()) * A.cols() * B.cols() + double(A.rows()) * B.cols() * C.cols();
  const double right = double(B.rows()) * B.cols() * C.cols() + double(A.rows()) * A.cols() * C.cols();
  if (left <= right) {
    Matrix AB = A * B;
    return AB * C;
  }
  Matrix BC = B * C;
  return A * BC;
}

}  // namespace

void check_loss_domain(const Matrix& X, const Matrix& Xp, const Loss& loss) {
  if (loss.kind != LossKind::KullbackLeibler) return;
  if ((X.array() < 0.0).any()) fail(ErrorKind::Domain, "KL loss requires X >= 0");
  if ((Xp.array() <= 0.0).any()) fail(ErrorKind::Domain, "KL loss requires X' > 0");
}

ContractedCost contract_naive(const Matrix& X, const Matrix& Xp, const Matrix& pi,
                              const Loss& loss, Side side) {
  check_shapes(X, Xp, pi, side);
  check_loss_domain(X, Xp, loss);
  const Eigen::Index n = X.rows(), d = X.cols(), np = Xp.rows(), dp = Xp.cols();
  if (side == Side::FeatureSide) {
    Matrix M = Matrix::Zero(d, dp);
    for (Eigen::Index k = 0; k < d; ++k) {
      for (Eigen::Index l = 0; l < dp; ++l) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          for (Eigen::Index j = 0; j < np; ++j) acc += loss(X(i, k), Xp(j, l)) * pi(i, j);
        }
        M(k, l) = acc;
      }
    }
    return {std::move(M), side};
  }
  Matrix M = Matrix::Zero(n, np);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < np; ++j) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) {
        for (Eigen::Index l = 0; l < dp; ++l) acc += loss(X(i, k), Xp(j, l)) * pi(k, l);
      }
      M(i, j) = acc;
    }
  }
  return {std::move(M), side};
}

ContractedCost contract_factored(const Matrix& X, const Matrix& Xp, const Matrix& pi,
                                 const Loss& loss, Side side) {
  if (!loss.has_decomposition()) {
    fail(ErrorKind::UnsupportedLoss, "loss '" + to_string(loss.kind) + "' has no factored form");
  }
  check_shapes(X, Xp, pi, side);
  check_loss_domain(X, Xp, loss);
  const Matrix F1 = apply(X, &Loss::f1, loss);
  const Matrix F2 = apply(Xp, &Loss::f2, loss);
  const Matrix H1 = apply(X, &Loss::h1, loss);
  const Matrix H2 = apply(Xp, &Loss::h2, loss);
  const Vector rowMass = pi.rowwise().sum();
  const Vector colMass = pi.colwise().sum().transpose();

  if (side == Side::FeatureSide) {
    // M_kl = sum_i f1(X_ik) r_i + sum_j f2(X'_jl) c_j - (h1(X)^T pi h2(X'))_kl
    const Vector a = F1.transpose() * rowMass;
    const Vector b = F2.transpose() * colMass;
    Matrix M = -triple_product(H1.transpose(), pi, H2);
    M.colwise() += a;
    M.rowwise() += b.transpose();
    return {std::move(M), side};
  }
  // M_ij = sum_k f1(X_ik) r_k + sum_l f2(X'_jl) c_l - (h1(X) pi h2(X')^T)_ij
  const Vector a = F1 * rowMass;
  const Vector b = F2 * colMass;
  Matrix M = -triple_product(H1, pi, H2.transpose());
  M.colwise() += a;
  M.rowwise() += b.transpose();
  return {std::move(M), side};
}

ContractedCost contract(const Matrix& X, const Matrix& Xp, const Matrix& pi, const Loss& loss,
                        Side side) {
  return loss.has_decomposition() ? contract_factored(X, Xp, pi, loss, side)
                                  : contract_naive(X, Xp, pi, loss, side);
}

double coot_objective(const Matrix& X, const Matrix& Xp, const Matrix& piS, const Matrix& piV,
                      const Loss& loss) {
  const double n = double(X.rows()), d = double(X.cols());
  const double np = double(Xp.rows()), dp = double(Xp.cols());
  const double featureSide = (n + np) * d * dp + np * np * n;
  const double sampleSide = (d + dp) * n * np + dp * dp * d;
  if (featureSide <= sampleSide) {
    const ContractedCost M = contract(X, Xp, piS, loss, Side::FeatureSide);
    if (piV.rows() != M.matrix.rows() || piV.cols() != M.matrix.cols()) {
      fail(ErrorKind::InvalidDimension, "feature coupling shape does not match d x d'");
    }
    return (M.matrix.array() * piV.array()).sum();
  }
  const ContractedCost M = contract(X, Xp, piV, loss, Side::SampleSide);
  if (piS.rows() != M.matrix.rows() || piS.cols() != M.matrix.cols()) {
    fail(ErrorKind::InvalidDimension, "sample coupling shape does not match n x n'");
  }
  return (M.matrix.array() * piS.array()).sum();
}

}  // namespace coot
