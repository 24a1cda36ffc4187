#ifndef TESBO_LINALG_HPP
#define TESBO_LINALG_HPP

#include "tesbo/types.hpp"

namespace tesbo {

// Lower Cholesky factor of a symmetric PSD matrix plus the diagonal jitter
// that was needed to obtain it.
struct JitteredCholesky {
  Matrix lower;
  double jitter = 0.0;

  // (L Lᵀ)⁻¹ rhs
  template <typename Derived>
  typename Derived::PlainObject solve(const Eigen::MatrixBase<Derived>& rhs) const {
    typename Derived::PlainObject x = rhs;
    lower.triangularView<Eigen::Lower>().solveInPlace(x);
    lower.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
    return x;
  }
  // L⁻¹ rhs
  Matrix solve_lower(const Eigen::Ref<const Matrix>& rhs) const;
  double log_determinant() const;
  Matrix inverse() const;
};

// Attempts a plain Cholesky first, then adds jitter starting at 1e-10·scale
// and growing ×10 per retry up to 1e-4·scale. Throws NumericError naming the
// last jitter tried when every attempt fails.
JitteredCholesky cholesky_with_jitter(const Eigen::Ref<const Matrix>& matrix, double scale);

// Given the gradient of a scalar with respect to the lower Cholesky factor L
// of S, returns the symmetric gradient with respect to S.
Matrix cholesky_backward(const Eigen::Ref<const Matrix>& lower, const Eigen::Ref<const Matrix>& lower_grad);

inline Matrix symmetrize(const Eigen::Ref<const Matrix>& m) { return 0.5 * (m + m.transpose()); }

}  // namespace tesbo

#endif  // TESBO_LINALG_HPP
