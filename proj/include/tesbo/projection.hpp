#ifndef TESBO_PROJECTION_HPP
#define TESBO_PROJECTION_HPP

#include "tesbo/gp.hpp"

namespace tesbo {

// Affine map from f_X⋆ to the latent predictive at a batch B given (X⋆, D):
//   mean(B | f_X⋆, y_D) = coeffᵀ f_X⋆ + offset,   cov = base_cov.
// With r = K₊⁻¹ k_tx per batch point, coeff column j holds the X⋆ block of r
// and offset_j = r_Dᵀ y_D.
struct PredictiveProjection {
  Matrix coeff;     // |X⋆| × |B|
  Vector offset;    // |B|
  Matrix base_cov;  // |B| × |B|, latent, conditioned on X⋆ and D
  Matrix solved;    // K₊⁻¹ k_tB, kept for gradients

  Eigen::Index batch_size() const { return offset.size(); }
  double base_variance(Eigen::Index j = 0) const { return base_cov(j, j); }
};

PredictiveProjection predictive_projection(const AugmentedFactor& factor, const PointSet& batch);
PredictiveProjection predictive_projection(const GPPosterior& posterior, const PointSet& trusted_points,
                                           const PointSet& batch);

// Pulls gradients of a scalar with respect to (coeff, offset, base_cov) back to
// the batch coordinates. `base_cov_grad` is taken as symmetric. Returns |B| × d.
Matrix projection_backward(const AugmentedFactor& factor, const PointSet& batch,
                           const PredictiveProjection& proj, const Eigen::Ref<const Matrix>& coeff_grad,
                           const Eigen::Ref<const Vector>& offset_grad,
                           const Eigen::Ref<const Matrix>& base_cov_grad);

}  // namespace tesbo

#endif  // TESBO_PROJECTION_HPP
