#include "tesbo/projection.hpp"

namespace tesbo {

PredictiveProjection predictive_projection(const AugmentedFactor& factor, const PointSet& batch) {
  if (batch.rows() < 1) throw std::invalid_argument("predictive_projection: empty batch");
  const KernelHyperparams& hp = factor.hyperparams();
  if (batch.cols() != hp.dim()) throw std::invalid_argument("predictive_projection: dimension mismatch");
  const Eigen::Index s = factor.noiseless_count();
  const Eigen::Index nd = factor.anchor_count() - s;

  const Matrix ktb = factor.cross_kernel(batch);
  PredictiveProjection out;
  out.solved = factor.solve(ktb);
  out.coeff = out.solved.topRows(s);
  out.offset = nd > 0 ? Vector(out.solved.bottomRows(nd).transpose() * factor.observations())
                      : Vector(Vector::Zero(batch.rows()));
  out.base_cov = symmetrize(kernel_matrix(batch, batch, hp) - ktb.transpose() * out.solved);
  for (Eigen::Index i = 0; i < out.base_cov.rows(); ++i) out.base_cov(i, i) = std::max(out.base_cov(i, i), 0.0);
  return out;
}

PredictiveProjection predictive_projection(const GPPosterior& posterior, const PointSet& trusted_points,
                                           const PointSet& batch) {
  return predictive_projection(AugmentedFactor(posterior, trusted_points), batch);
}

Matrix projection_backward(const AugmentedFactor& factor, const PointSet& batch,
                           const PredictiveProjection& proj, const Eigen::Ref<const Matrix>& coeff_grad,
                           const Eigen::Ref<const Vector>& offset_grad,
                           const Eigen::Ref<const Matrix>& base_cov_grad) {
  const KernelHyperparams& hp = factor.hyperparams();
  const Eigen::Index s = factor.noiseless_count();
  const Eigen::Index nd = factor.anchor_count() - s;
  const Eigen::Index nb = batch.rows();
  const Eigen::Index d = batch.cols();

  // Gradient with respect to R = K₊⁻¹ k_tB.
  Matrix r_grad(factor.anchor_count(), nb);
  r_grad.topRows(s) = coeff_grad;
  if (nd > 0) r_grad.bottomRows(nd) = factor.observations() * offset_grad.transpose();

  // base = k_BB − k_tBᵀ R, R = K₊⁻¹ k_tB  ⇒  ∂/∂k_tB = K₊⁻¹ R̄ − 2 R S̄ for symmetric S̄.
  const Matrix sym_grad = symmetrize(base_cov_grad);
  const Matrix ktb_grad = factor.solve(r_grad) - 2.0 * proj.solved * sym_grad;

  const Matrix ktb = factor.cross_kernel(batch);
  const Matrix kbb = kernel_matrix(batch, batch, hp);
  const Vector inv_l2 = hp.lengthscales.array().square().inverse();
  Matrix out = Matrix::Zero(nb, d);
  for (Eigen::Index j = 0; j < nb; ++j) {
    const Vector xj = batch.row(j).transpose();
    const Matrix dk = kernel_gradient_wrt_query(factor.anchors(), xj, ktb.col(j), hp);
    out.row(j) += ktb_grad.col(j).transpose() * dk;
    // k(x_j, x_i) for i ≠ j; both S̄_ij and S̄_ji see it.
    for (Eigen::Index i = 0; i < nb; ++i) {
      if (i == j) continue;
      const double w = 2.0 * sym_grad(i, j) * kbb(i, j);
      out.row(j) -= w * ((batch.row(j) - batch.row(i)).array() * inv_l2.transpose().array()).matrix();
    }
  }
  return out;
}

}  // namespace tesbo
