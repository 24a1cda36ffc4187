#include "tesbo/acquisition_opt.hpp"

#include "tesbo/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tesbo {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

std::uint64_t draw_seed(Rng& rng) { return rng(); }

// Points of `batch` mapped to and from [0, 1]^d.
PointSet to_unit(const PointSet& batch, const Domain& domain) {
  return (batch.rowwise() - domain.lower.transpose()).array().rowwise() / domain.width().transpose().array();
}

PointSet from_unit(const PointSet& unit, const Domain& domain) {
  PointSet out = unit.array().rowwise() * domain.width().transpose().array();
  return out.rowwise() + domain.lower.transpose();
}

PointSet initial_batch(const TrustedSet& trusted, const std::vector<Eigen::Index>& ranked, int rotation,
                       int batch_size, const Domain& domain, Rng& rng) {
  PointSet out(batch_size, domain.dim());
  const int n = static_cast<int>(ranked.size());
  for (int i = 0; i < batch_size; ++i) {
    if (i < n) {
      out.row(i) = trusted.points.row(ranked[static_cast<size_t>((rotation + i) % n)]);
    } else {
      out.row(i) = domain.sample_uniform(rng).transpose();
    }
  }
  return out;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

PointSet clamp_batch(const PointSet& batch, const Domain& domain) {
  PointSet out = batch;
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) = domain.clamp(out.row(i).transpose()).transpose();
  return out;
}

struct Trajectory {
  PointSet final_batch;
  int nonfinite_restarts = 0;
};

Trajectory run_adam(const StochasticAcquisition& acquisition, const PointSet& start, const Domain& domain,
                    const OptConfig& config, Rng& rng, std::vector<std::string>& events) {
  const Vector width = domain.width();
  PointSet unit = to_unit(start, domain);
  Matrix m = Matrix::Zero(unit.rows(), unit.cols());
  Matrix v = Matrix::Zero(unit.rows(), unit.cols());
  int step = 0;
  Trajectory out;
  for (int it = 0; it < config.iterations; ++it) {
    Matrix grad;
    const AcquisitionEstimate est =
        acquisition.evaluate(from_unit(unit, domain), draw_seed(rng), config.y_samples, &grad);
    if (!std::isfinite(est.value) || !all_finite(grad)) {
      if (out.nonfinite_restarts >= config.max_nonfinite_restarts) {
        events.push_back("non-finite gradient at iteration " + std::to_string(it) + "; trajectory stopped");
        break;
      }
      ++out.nonfinite_restarts;
      events.push_back("non-finite gradient at iteration " + std::to_string(it) + "; restarted from a random point");
      unit = to_unit(domain.sample_uniform(unit.rows(), rng), domain);
      m.setZero();
      v.setZero();
      step = 0;
      continue;
    }
    const Matrix g = grad.array().rowwise() * width.transpose().array();
    ++step;
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseAbs2();
    const double c1 = 1.0 - std::pow(kBeta1, step);
    const double c2 = 1.0 - std::pow(kBeta2, step);
    unit.array() += config.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + kAdamEps);
    unit = unit.cwiseMax(0.0).cwiseMin(1.0);
  }
  out.final_batch = from_unit(unit, domain);
  return out;
}

}  // namespace

void OptConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("OptConfig: learning_rate must be positive");
  if (iterations < 1) throw std::invalid_argument("OptConfig: iterations must be >= 1");
  if (y_samples < 1) throw std::invalid_argument("OptConfig: y_samples must be >= 1");
  if (restarts < 0) throw std::invalid_argument("OptConfig: restarts must be >= 0");
  if (rescore_factor < 1) throw std::invalid_argument("OptConfig: rescore_factor must be >= 1");
}

OptResult optimize_acquisition(const StochasticAcquisition& acquisition, const TrustedSet& trusted,
                               const Domain& domain, int batch_size, const OptConfig& config, Rng& rng,
                               const std::vector<PointSet>& warm_starts) {
  config.validate();
  if (batch_size < 1) throw std::invalid_argument("optimize_acquisition: batch_size must be >= 1");
  if (acquisition.dim() != domain.dim()) throw std::invalid_argument("optimize_acquisition: dimension mismatch");
  for (const PointSet& w : warm_starts) {
    if (w.rows() != batch_size || w.cols() != domain.dim())
      throw std::invalid_argument("optimize_acquisition: warm start has the wrong shape");
  }

  const Eigen::Index n = trusted.size();
  std::vector<Eigen::Index> ranked(static_cast<size_t>(n));
  std::iota(ranked.begin(), ranked.end(), Eigen::Index{0});
  std::stable_sort(ranked.begin(), ranked.end(), [&](Eigen::Index a, Eigen::Index b) {
    return trusted.probabilities(a) > trusted.probabilities(b);
  });
  const int restarts = config.restarts > 0 ? config.restarts : static_cast<int>(std::clamp<Eigen::Index>(n, 1, 5));

  std::vector<PointSet> starts;
  for (int r = 0; r < restarts; ++r) starts.push_back(initial_batch(trusted, ranked, r, batch_size, domain, rng));
  for (const PointSet& w : warm_starts) starts.push_back(clamp_batch(w, domain));

  OptResult result;
  result.diagnostics.restarts = static_cast<int>(starts.size());
  const std::uint64_t score_seed = draw_seed(rng);
  const int score_samples = config.y_samples * config.rescore_factor;
  bool have = false;
  auto consider = [&](const PointSet& batch, std::vector<double>& log) {
    const AcquisitionEstimate est = acquisition.evaluate(batch, score_seed, score_samples, nullptr);
    log.push_back(est.value);
    if (std::isfinite(est.value) && (!have || est.value > result.value)) {
      have = true;
      result.batch = batch;
      result.value = est.value;
      result.stderr = est.stderr;
    }
  };
  for (const PointSet& s : starts) consider(s, result.diagnostics.initial_scores);
  for (const PointSet& s : starts) {
    Rng traj_rng(draw_seed(rng));
    const Trajectory t = run_adam(acquisition, s, domain, config, traj_rng, result.diagnostics.events);
    result.diagnostics.nonfinite_restarts += t.nonfinite_restarts;
    consider(t.final_batch, result.diagnostics.final_scores);
  }
  if (!have) throw NumericError("optimize_acquisition: every candidate scored non-finite");
  return result;
}

double batch_entropy(const GPPosterior& posterior, const PointSet& batch) {
  if (batch.rows() < 1) throw std::invalid_argument("batch_entropy: batch must be nonempty");
  const Prediction pred = posterior.predict(batch);
  Matrix cov = pred.cov;
  cov.diagonal().array() += posterior.hyperparams().noise_variance;
  const JitteredCholesky chol = cholesky_with_jitter(cov, cov.diagonal().maxCoeff());
  const double k = static_cast<double>(batch.rows());
  return 0.5 * (k * std::log(2.0 * M_PI * M_E) + chol.log_determinant());
}

std::vector<BatchGain> gain_vs_batch_size(const StochasticAcquisition& acquisition, const TrustedSet& trusted,
                                          const Domain& domain, const std::vector<int>& sizes,
                                          const OptConfig& config, Rng& rng) {
  std::vector<BatchGain> out;
  for (int size : sizes) {
    std::vector<PointSet> warm;
    if (!out.empty() && out.back().size < size) {
      // Grow the previous optimum with trusted points, highest probability first.
      const PointSet& prev = out.back().batch;
      PointSet w(size, domain.dim());
      w.topRows(prev.rows()) = prev;
      std::vector<Eigen::Index> ranked(static_cast<size_t>(trusted.size()));
      std::iota(ranked.begin(), ranked.end(), Eigen::Index{0});
      std::stable_sort(ranked.begin(), ranked.end(), [&](Eigen::Index a, Eigen::Index b) {
        return trusted.probabilities(a) > trusted.probabilities(b);
      });
      for (Eigen::Index i = prev.rows(); i < size; ++i) {
        const size_t k = static_cast<size_t>(i - prev.rows());
        w.row(i) = k < ranked.size() ? Vector(trusted.points.row(ranked[k]).transpose())
                                     : domain.sample_uniform(rng);
      }
      warm.push_back(w);
    }
    const OptResult r = optimize_acquisition(acquisition, trusted, domain, size, config, rng, warm);
    out.push_back(BatchGain{size, r.value, r.stderr, r.batch});
  }
  return out;
}

}  // namespace tesbo
