#ifndef TESBO_OBJECTIVES_HPP
#define TESBO_OBJECTIVES_HPP

#include "tesbo/posterior_sampling.hpp"
#include "tesbo/types.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

namespace tesbo {

// Raised for malformed benchmark input (unknown names, bad config keys).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ObjectiveSpec {
  std::string name = "branin";  // gp-sample | branin | hartmann3 | hartmann4
  // Empty picks the objective's own box: [0, 10]² for gp-sample, the unit
  // cube otherwise. Named functions accept only their own box.
  Domain domain;
  // gp-sample only
  double signal_variance = 2.0;
  double lengthscale = 1.0;
  int feature_count = 1024;
  std::uint64_t seed = 0;
  int optimum_pool = 100000;  // dense screening size for estimating f*
  int optimum_restarts = 50;
};

// Noiseless objective to maximize and its known (or estimated) maximum.
struct Objective {
  std::string name;
  Domain domain;
  std::function<double(const Vector&)> value;
  double optimum = 0.0;
  Vector optimizer;  // empty when several global maximizers exist
};

// Negated Branin on [0, 1]² (mapped to [-5, 10] × [0, 15]).
double negated_branin(const Eigen::Ref<const Vector>& u);
// Negated Hartmann on [0, 1]³ and its 4-d variant (first four columns of the
// 6-d coefficient tables).
double negated_hartmann3(const Eigen::Ref<const Vector>& x);
double negated_hartmann4(const Eigen::Ref<const Vector>& x);

Objective make_objective(const ObjectiveSpec& spec);

// Prior sample of a zero-mean SE GP realized with random features.
FeatureFunctionSample sample_prior_function(Eigen::Index dim, double signal_variance, double lengthscale,
                                            int feature_count, Rng& rng);

}  // namespace tesbo

#endif  // TESBO_OBJECTIVES_HPP
