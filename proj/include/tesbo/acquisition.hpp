#ifndef TESBO_ACQUISITION_HPP
#define TESBO_ACQUISITION_HPP

#include "tesbo/types.hpp"

#include <cstdint>
#include <string>

namespace tesbo {

struct AcquisitionEstimate {
  double value = 0.0;
  double stderr = 0.0;
};

// A Monte Carlo acquisition. Every random draw comes from `seed`, so a fixed
// seed gives a deterministic, differentiable function of the batch.
class StochasticAcquisition {
 public:
  virtual ~StochasticAcquisition() = default;
  virtual Eigen::Index dim() const = 0;
  virtual std::string name() const = 0;
  // `batch` holds one point per row; `gradient`, when non-null, is resized to
  // the batch shape.
  virtual AcquisitionEstimate evaluate(const PointSet& batch, std::uint64_t seed, int y_samples,
                                       Matrix* gradient) const = 0;
};

}  // namespace tesbo

#endif  // TESBO_ACQUISITION_HPP
