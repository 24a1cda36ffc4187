#ifndef TESBO_TYPES_HPP
#define TESBO_TYPES_HPP

#include <Eigen/Dense>

#include <random>
#include <stdexcept>
#include <string>

namespace tesbo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Point sets are stored row-wise: one point per row.
using PointSet = Eigen::MatrixXd;

using Rng = std::mt19937_64;

// Raised when a linear-algebra step fails even after jitter escalation, or an
// iterative approximation produces non-finite values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Squared-exponential kernel hyperparameters.
struct KernelHyperparams {
  double signal_variance = 1.0;
  Vector lengthscales;
  double noise_variance = 0.0;

  Eigen::Index dim() const { return lengthscales.size(); }

  // Throws std::invalid_argument when an invariant is violated. A negative
  // `expected_dim` skips the dimension check.
  void validate(Eigen::Index expected_dim = -1) const;

  // [log σ_s², log ℓ_1 .. log ℓ_d, log σ_n²]
  Vector to_log() const;
  static KernelHyperparams from_log(const Vector& log_params);
};

// Axis-aligned box.
struct Domain {
  Vector lower;
  Vector upper;

  Domain() = default;
  Domain(Vector lo, Vector hi);

  Eigen::Index dim() const { return lower.size(); }
  Vector width() const { return upper - lower; }
  bool contains(const Eigen::Ref<const Vector>& x, double tol = 0.0) const;
  Vector clamp(const Eigen::Ref<const Vector>& x) const;
  Vector sample_uniform(Rng& rng) const;
  PointSet sample_uniform(Eigen::Index count, Rng& rng) const;

  static Domain unit_cube(Eigen::Index dim);
};

// Observed inputs D and noisy observations y_D.
struct Dataset {
  PointSet inputs;
  Vector observations;

  Dataset() = default;
  Dataset(PointSet x, Vector y);

  Eigen::Index size() const { return observations.size(); }
  Eigen::Index dim() const { return inputs.cols(); }
  bool empty() const { return observations.size() == 0; }

  void append(const Eigen::Ref<const Vector>& x, double y);
  void validate(const Domain* domain = nullptr) const;
};

}  // namespace tesbo

#endif  // TESBO_TYPES_HPP
