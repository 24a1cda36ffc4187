#include "tesbo/linalg.hpp"

#include <cmath>
#include <sstream>

namespace tesbo {

Matrix JitteredCholesky::solve_lower(const Eigen::Ref<const Matrix>& rhs) const {
  return lower.triangularView<Eigen::Lower>().solve(rhs);
}

double JitteredCholesky::log_determinant() const {
  return 2.0 * lower.diagonal().array().log().sum();
}

Matrix JitteredCholesky::inverse() const {
  return solve(Matrix::Identity(lower.rows(), lower.rows()).eval());
}

JitteredCholesky cholesky_with_jitter(const Eigen::Ref<const Matrix>& matrix, double scale) {
  const Eigen::Index n = matrix.rows();
  if (matrix.cols() != n) throw std::invalid_argument("cholesky requires a square matrix");
  JitteredCholesky out;
  if (n == 0) {
    out.lower.resize(0, 0);
    return out;
  }
  if (!matrix.allFinite()) throw NumericError("cholesky: matrix has non-finite entries");
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;

  const double first = 1e-10 * scale;
  const double last = 1e-4 * scale;
  double jitter = 0.0;
  while (true) {
    Matrix work = matrix;
    if (jitter > 0.0) work.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(work);
    if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0) {
      out.lower = llt.matrixL();
      out.jitter = jitter;
      return out;
    }
    if (jitter >= last * (1.0 - 1e-12)) break;
    jitter = (jitter == 0.0) ? first : std::min(jitter * 10.0, last);
  }
  std::ostringstream msg;
  msg << "cholesky failed: matrix not positive definite after jitter " << jitter;
  throw NumericError(msg.str());
}

Matrix cholesky_backward(const Eigen::Ref<const Matrix>& lower, const Eigen::Ref<const Matrix>& lower_grad) {
  // P = Φ(Lᵀ L̄) with Φ keeping the lower triangle and halving the diagonal.
  Matrix p = (lower.transpose() * lower_grad.triangularView<Eigen::Lower>()).triangularView<Eigen::Lower>();
  p.diagonal() *= 0.5;
  // L⁻ᵀ P L⁻¹
  Matrix x = lower.transpose().triangularView<Eigen::Upper>().solve(p);
  x = lower.transpose().triangularView<Eigen::Upper>().solve(x.transpose()).transpose();
  return 0.5 * (x + x.transpose());
}

}  // namespace tesbo
