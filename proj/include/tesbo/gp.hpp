#ifndef TESBO_GP_HPP
#define TESBO_GP_HPP

#include "tesbo/linalg.hpp"
#include "tesbo/types.hpp"

#include <string>
#include <vector>

namespace tesbo {

// σ_s² exp(-½ (x - x2)ᵀ Λ⁻² (x - x2))
double se_kernel(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& x2,
                 const KernelHyperparams& hp);

// Gram block k(a_i, b_j) for row-wise point sets.
Matrix kernel_matrix(const PointSet& a, const PointSet& b, const KernelHyperparams& hp);

// ∂k(anchor_r, x)/∂x_c for every anchor row r and coordinate c (rows × d).
// `kx` holds k(anchor_r, x).
Matrix kernel_gradient_wrt_query(const PointSet& anchors, const Eigen::Ref<const Vector>& x,
                                 const Eigen::Ref<const Vector>& kx, const KernelHyperparams& hp);

struct Prediction {
  Vector mean;
  Matrix cov;
};

// Zero-mean GP posterior given noisy observations. Immutable once built.
class GPPosterior {
 public:
  GPPosterior() = default;
  GPPosterior(Dataset data, KernelHyperparams hp);

  const Dataset& dataset() const { return data_; }
  const KernelHyperparams& hyperparams() const { return hp_; }
  const JitteredCholesky& factor() const { return chol_; }
  const Matrix& chol() const { return chol_.lower; }
  const Vector& weights() const { return weights_; }
  Eigen::Index dim() const { return hp_.dim(); }

  // Joint latent predictive over the queries.
  Prediction predict(const PointSet& queries) const;

  // Latent mean at one point; gradient filled when non-null.
  double mean(const Eigen::Ref<const Vector>& x, Vector* gradient = nullptr) const;

  // Latent mean and variance at one point with optional gradients.
  void mean_variance(const Eigen::Ref<const Vector>& x, double& mean, double& variance,
                     Vector* mean_gradient = nullptr, Vector* variance_gradient = nullptr) const;

 private:
  Dataset data_;
  KernelHyperparams hp_;
  JitteredCholesky chol_;
  Vector weights_;
};

GPPosterior fit_posterior(const Dataset& dataset, const KernelHyperparams& hp);
Prediction predict(const GPPosterior& posterior, const PointSet& queries);

// Anchors t = (X⋆ ; D) with values z = (f_X⋆ ; y_D). Only the D block carries
// observation noise.
struct AugmentedConditioning {
  PointSet anchor_inputs;
  Vector anchor_values;
  Eigen::Index noiseless_count = 0;

  // Ĩ: ones on the diagonal past the noiseless block, zeros elsewhere.
  Matrix noise_mask() const;
};

AugmentedConditioning make_augmented_conditioning(const GPPosterior& posterior,
                                                  const PointSet& noiseless_inputs,
                                                  const Eigen::Ref<const Vector>& function_values);

// Latent predictive at the queries given f_X⋆ and y_D. The covariance does not
// depend on the anchor values.
Prediction predict_given_function_values(const GPPosterior& posterior,
                                         const AugmentedConditioning& anchors,
                                         const PointSet& queries);

// Factorization of K_tt + σ_n² Ĩ for fixed anchors (X⋆ ; D), reused across
// every query of one BO iteration.
class AugmentedFactor {
 public:
  AugmentedFactor() = default;
  AugmentedFactor(const GPPosterior& posterior, const PointSet& noiseless_inputs);

  const PointSet& anchors() const { return anchors_; }
  Eigen::Index noiseless_count() const { return noiseless_count_; }
  Eigen::Index anchor_count() const { return anchors_.rows(); }
  const Vector& observations() const { return observations_; }
  const KernelHyperparams& hyperparams() const { return hp_; }
  const JitteredCholesky& factor() const { return chol_; }

  Matrix cross_kernel(const PointSet& queries) const { return kernel_matrix(anchors_, queries, hp_); }
  Matrix solve(const Eigen::Ref<const Matrix>& rhs) const { return chol_.solve(rhs); }

 private:
  PointSet anchors_;
  Eigen::Index noiseless_count_ = 0;
  Vector observations_;
  KernelHyperparams hp_;
  JitteredCholesky chol_;
};

// Log marginal likelihood and its gradient with respect to
// [log σ_s², log ℓ_1 .. log ℓ_d, log σ_n²].
struct LikelihoodValue {
  double value = 0.0;
  Vector gradient;
};
LikelihoodValue log_marginal_likelihood(const Dataset& dataset, const KernelHyperparams& hp);

struct HyperFitConfig {
  int restarts = 10;
  int max_iterations = 200;
  double lengthscale_min_factor = 1e-3;  // × domain width
  double lengthscale_max_factor = 1e3;
  double noise_min = 1e-8;
  double signal_min_factor = 1e-3;  // × observation variance
  double signal_max_factor = 1e3;
};

class HyperFitError : public NumericError {
 public:
  HyperFitError(const std::string& what, std::vector<std::string> diagnostics)
      : NumericError(what), diagnostics_(std::move(diagnostics)) {}
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

// Box bounds in log space used by fit_hyperparams.
struct HyperBounds {
  Vector lower;
  Vector upper;
};
HyperBounds hyperparameter_bounds(const Dataset& dataset, const Domain& domain,
                                  const HyperFitConfig& config);

// Multi-start projected gradient ascent on the log marginal likelihood.
KernelHyperparams fit_hyperparams(const Dataset& dataset, const Domain& domain,
                                  const HyperFitConfig& config, Rng& rng);

}  // namespace tesbo

#endif  // TESBO_GP_HPP
