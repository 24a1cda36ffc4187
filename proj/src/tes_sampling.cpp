#include "tesbo/tes_sampling.hpp"

#include "tesbo/linalg.hpp"
#include "tesbo/normal.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <sstream>

namespace tesbo {

namespace {

void check_joint(const Eigen::Ref<const Vector>& mean, const Eigen::Ref<const Matrix>& cov, const char* what) {
  if (mean.size() < 1) throw std::invalid_argument(std::string(what) + ": need at least one trusted point");
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw std::invalid_argument(std::string(what) + ": mean and covariance disagree in size");
  }
}

JitteredCholesky joint_factor(const Eigen::Ref<const Matrix>& cov) {
  return cholesky_with_jitter(cov, std::max(cov.diagonal().maxCoeff(), 1e-300));
}

Eigen::Index strict_argmax(const Eigen::Ref<const Vector>& f) {
  Eigen::Index arg = 0;
  for (Eigen::Index i = 1; i < f.size(); ++i) {
    if (f(i) > f(arg)) arg = i;
  }
  return arg;
}

// log Σ exp over each column of `values`.
Vector column_log_sum_exp(const Eigen::Ref<const Matrix>& values) {
  Vector out(values.cols());
  for (Eigen::Index j = 0; j < values.cols(); ++j) out(j) = log_sum_exp(values.col(j));
  return out;
}

// Component geometry for one batch: means m_c = Aᵀ f_c + b, shared covariance
// S = base + σ_n² I, and whitened means u_c = L⁻¹ m_c (one per row).
struct SpGeometry {
  PredictiveProjection proj;
  JitteredCholesky chol;
  Matrix whitened;              // C × |B|
  Matrix all_samples;           // C × |X⋆|
  Vector log_weight;            // log of within-owner normalized weight
  Vector log_joint;             // log p(x⋆) + log_weight
  std::vector<Eigen::Index> first;  // component offset per owner, size K+1
};

SpGeometry sp_geometry(const SpState& state, const PointSet& batch) {
  const Eigen::Index k_count = state.trusted_size();
  SpGeometry g;
  g.proj = predictive_projection(state.factor, batch);
  const KernelHyperparams& hp = state.posterior.hyperparams();
  Matrix s = g.proj.base_cov;
  s.diagonal().array() += hp.noise_variance;
  g.chol = cholesky_with_jitter(s, hp.signal_variance + hp.noise_variance);

  g.first.assign(static_cast<size_t>(k_count) + 1, 0);
  for (Eigen::Index k = 0; k < k_count; ++k) g.first[k + 1] = g.first[k] + state.sets[k].size();
  const Eigen::Index c_count = g.first.back();
  g.all_samples.resize(c_count, k_count);
  g.log_weight.resize(c_count);
  g.log_joint.resize(c_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const ConditionedSampleSet& set = state.sets[k];
    const Eigen::Index off = g.first[k];
    g.all_samples.middleRows(off, set.size()) = set.samples;
    const Vector lw = set.normalized_weights().array().log();
    g.log_weight.segment(off, set.size()) = lw;
    g.log_joint.segment(off, set.size()) = lw.array() + std::log(state.trusted.probabilities(k));
  }
  Matrix means = g.proj.coeff.transpose() * g.all_samples.transpose();  // |B| × C
  means.colwise() += g.proj.offset;
  g.whitened = g.chol.solve_lower(means).transpose();
  return g;
}

}  // namespace

double ConditionedSampleSet::effective_sample_size() const {
  const double s = weights.sum();
  const double s2 = weights.squaredNorm();
  return s2 > 0.0 ? s * s / s2 : 0.0;
}

ConditionedSampleSet rejection_sample(const Eigen::Ref<const Vector>& mean, const Eigen::Ref<const Matrix>& cov,
                                      Eigen::Index owner, int accepted, int max_draws, Rng& rng) {
  check_joint(mean, cov, "rejection_sample");
  if (accepted < 1) throw std::invalid_argument("rejection_sample: accepted count must be >= 1");
  if (owner < 0 || owner >= mean.size()) throw std::out_of_range("rejection_sample: owner index out of range");
  const Eigen::Index n = mean.size();
  const JitteredCholesky chol = joint_factor(cov);
  std::normal_distribution<double> normal(0.0, 1.0);

  ConditionedSampleSet out;
  out.owner = owner;
  out.samples.resize(accepted, n);
  int kept = 0;
  int draws = 0;
  Vector z(n);
  while (kept < accepted && draws < max_draws) {
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
    const Vector f = mean + chol.lower * z;
    ++draws;
    if (strict_argmax(f) == owner) out.samples.row(kept++) = f.transpose();
  }
  if (kept < accepted) {
    std::ostringstream msg;
    msg << "rejection_sample: only " << kept << " of " << accepted << " draws accepted within " << max_draws
        << " attempts; use importance sampling for this maximizer";
    throw SamplingError(msg.str());
  }
  out.weights = Vector::Ones(accepted);
  out.draws = draws;
  return out;
}

ConditionedSampleSet rejection_sample(const GPPosterior& posterior, const TrustedSet& trusted, Eigen::Index owner,
                                      int accepted, int max_draws, Rng& rng) {
  const Prediction pred = posterior.predict(trusted.points);
  return rejection_sample(pred.mean, pred.cov, owner, accepted, max_draws, rng);
}

ConditionedSampleSet importance_sample(const Eigen::Ref<const Vector>& mean, const Eigen::Ref<const Matrix>& cov,
                                       Eigen::Index owner, int count, Rng& rng) {
  check_joint(mean, cov, "importance_sample");
  if (count < 1) throw std::invalid_argument("importance_sample: count must be >= 1");
  const Eigen::Index n = mean.size();
  if (n < 2) throw std::invalid_argument("importance_sample: needs at least two trusted points");
  if (owner < 0 || owner >= n) throw std::out_of_range("importance_sample: owner index out of range");

  std::vector<Eigen::Index> rest;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i != owner) rest.push_back(i);
  }
  const Eigen::Index m = n - 1;
  Vector mean_rest(m);
  Matrix cov_rest(m, m);
  Vector cross(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    mean_rest(a) = mean(rest[a]);
    cross(a) = cov(rest[a], owner);
    for (Eigen::Index b = 0; b < m; ++b) cov_rest(a, b) = cov(rest[a], rest[b]);
  }
  const JitteredCholesky chol = joint_factor(cov_rest);
  const Vector gain = chol.solve(cross);
  const double cond_var = std::max(cov(owner, owner) - cross.dot(gain), 0.0);
  const double cond_sd = std::sqrt(cond_var);

  ConditionedSampleSet out;
  out.owner = owner;
  out.draws = count;
  out.samples.resize(count, n);
  out.weights.resize(count);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(m);
  for (int s = 0; s < count; ++s) {
    for (Eigen::Index i = 0; i < m; ++i) z(i) = normal(rng);
    const Vector f_rest = mean_rest + chol.lower * z;
    const double threshold = f_rest.maxCoeff();
    const double cond_mean = mean(owner) + gain.dot(f_rest - mean_rest);
    const double f_owner = sample_lower_truncated_normal(cond_mean, cond_sd, threshold, rng);
    for (Eigen::Index a = 0; a < m; ++a) out.samples(s, rest[a]) = f_rest(a);
    out.samples(s, owner) = f_owner;
    out.weights(s) = std::max(normal_upper_tail(cond_mean, cond_sd, threshold), DBL_MIN);
  }
  const double ess = out.effective_sample_size();
  if (ess < 0.01 * count) {
    std::ostringstream msg;
    msg << "importance_sample: effective sample size " << ess << " is below 1% of " << count << " draws";
    out.warning = msg.str();
  }
  return out;
}

ConditionedSampleSet importance_sample(const GPPosterior& posterior, const TrustedSet& trusted, Eigen::Index owner,
                                       int count, Rng& rng) {
  const Prediction pred = posterior.predict(trusted.points);
  return importance_sample(pred.mean, pred.cov, owner, count, rng);
}

GroupedSamples group_by_maximizer(const Eigen::Ref<const Vector>& mean, const Eigen::Ref<const Matrix>& cov,
                                  int total_draws, Rng& rng) {
  check_joint(mean, cov, "group_by_maximizer");
  const Eigen::Index n = mean.size();
  if (total_draws < n) throw std::invalid_argument("group_by_maximizer: total_draws must be >= |X*|");
  const JitteredCholesky chol = joint_factor(cov);
  const Matrix z = standard_normal_matrix(total_draws, n, rng);
  Matrix draws = z * chol.lower.transpose();
  draws.rowwise() += mean.transpose();

  std::vector<std::vector<Eigen::Index>> members(static_cast<size_t>(n));
  for (Eigen::Index r = 0; r < total_draws; ++r) members[strict_argmax(draws.row(r).transpose())].push_back(r);

  GroupedSamples out;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!members[i].empty()) out.retained.push_back(i);
  }
  const Eigen::Index kept = static_cast<Eigen::Index>(out.retained.size());
  out.fractions.resize(kept);
  out.fraction_stderr.resize(kept);
  for (Eigen::Index k = 0; k < kept; ++k) {
    const auto& rows = members[out.retained[k]];
    ConditionedSampleSet set;
    set.owner = k;
    set.samples.resize(static_cast<Eigen::Index>(rows.size()), kept);
    for (size_t r = 0; r < rows.size(); ++r) {
      for (Eigen::Index c = 0; c < kept; ++c) set.samples(r, c) = draws(rows[r], out.retained[c]);
    }
    set.weights = Vector::Ones(set.samples.rows());
    set.draws = total_draws;
    const double p = static_cast<double>(rows.size()) / total_draws;
    out.fractions(k) = p;
    out.fraction_stderr(k) = std::sqrt(p * (1.0 - p) / total_draws);
    out.sets.push_back(std::move(set));
  }
  return out;
}

GroupedTrustedSet group_by_maximizer(const GPPosterior& posterior, const TrustedSet& trusted, int total_draws,
                                     Rng& rng) {
  const Prediction pred = posterior.predict(trusted.points);
  GroupedTrustedSet out;
  out.groups = group_by_maximizer(pred.mean, pred.cov, total_draws, rng);
  const Eigen::Index kept = static_cast<Eigen::Index>(out.groups.retained.size());
  out.trusted.points.resize(kept, trusted.points.cols());
  for (Eigen::Index k = 0; k < kept; ++k) out.trusted.points.row(k) = trusted.points.row(out.groups.retained[k]);
  out.trusted.probabilities = out.groups.fractions;
  out.trusted.probability_stderr = out.groups.fraction_stderr;
  return out;
}

SpState build_sp_state(const GPPosterior& posterior, const TrustedSet& trusted, const SpConfig& config, Rng& rng) {
  if (trusted.size() < 1) throw std::invalid_argument("build_sp_state: empty trusted set");
  SpState state;
  state.posterior = posterior;

  if (config.method == ConditioningMethod::grouping) {
    GroupedTrustedSet grouped = group_by_maximizer(posterior, trusted, config.total_draws, rng);
    state.trusted = grouped.trusted;
    if (config.probabilities == ProbabilitySource::orthant && trusted.probabilities.size() == trusted.size()) {
      for (size_t k = 0; k < grouped.groups.retained.size(); ++k) {
        state.trusted.probabilities(k) = trusted.probabilities(grouped.groups.retained[k]);
        state.trusted.probability_stderr(k) = trusted.probability_stderr.size() == trusted.size()
                                                  ? trusted.probability_stderr(grouped.groups.retained[k])
                                                  : 0.0;
      }
    }
    if (grouped.groups.retained.size() < static_cast<size_t>(trusted.size())) {
      std::ostringstream msg;
      msg << "grouping dropped " << trusted.size() - state.trusted.size() << " trusted point(s) with no draws";
      state.notes.push_back(msg.str());
    }
    state.sets = std::move(grouped.groups.sets);
    if (state.trusted.size() > 1) {
      const Prediction pred = posterior.predict(state.trusted.points);
      for (auto& set : state.sets) {
        if (set.size() >= config.min_group_size) continue;
        const Eigen::Index owner = set.owner;
        std::ostringstream msg;
        msg << "group " << owner << " had " << set.size() << " draws; replaced by " << config.samples_per_owner
            << " importance samples";
        set = importance_sample(pred.mean, pred.cov, owner, config.samples_per_owner, rng);
        state.notes.push_back(msg.str());
        if (set.warning) state.notes.push_back(*set.warning);
      }
    }
  } else {
    state.trusted = trusted;
    if (state.trusted.probabilities.size() != trusted.size()) {
      throw std::invalid_argument("build_sp_state: trusted set has no probabilities");
    }
    const Prediction pred = posterior.predict(trusted.points);
    for (Eigen::Index k = 0; k < trusted.size(); ++k) {
      if (trusted.size() == 1 || config.method == ConditioningMethod::rejection) {
        state.sets.push_back(
            rejection_sample(pred.mean, pred.cov, k, config.samples_per_owner, config.max_rejection_draws, rng));
      } else {
        state.sets.push_back(importance_sample(pred.mean, pred.cov, k, config.samples_per_owner, rng));
        if (state.sets.back().warning) state.notes.push_back(*state.sets.back().warning);
      }
    }
  }

  const double total = state.trusted.probabilities.sum();
  if (!(total > 0.0)) throw NumericError("build_sp_state: maximizer probabilities sum to zero");
  state.trusted.probabilities /= total;
  state.factor = AugmentedFactor(posterior, state.trusted.points);
  return state;
}

MixtureLogDensity q_sp_log_density(const SpState& state, const PointSet& batch, const Eigen::Ref<const Vector>& y) {
  if (y.size() != batch.rows()) throw std::invalid_argument("q_sp_log_density: one observation per batch point");
  const SpGeometry g = sp_geometry(state, batch);
  const Vector v = g.chol.solve_lower(y.eval()).col(0);
  const double log_norm = 0.5 * g.chol.log_determinant() + batch.rows() * kLogSqrt2Pi;
  const Vector d2 = (g.whitened.rowwise() - v.transpose()).rowwise().squaredNorm();

  const Eigen::Index k_count = state.trusted_size();
  MixtureLogDensity out;
  out.per_owner.resize(k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const Eigen::Index off = g.first[k];
    const Eigen::Index len = g.first[k + 1] - off;
    const Vector terms = g.log_weight.segment(off, len) - 0.5 * d2.segment(off, len);
    out.per_owner(k) = log_sum_exp(terms) - log_norm;
  }
  const Vector lp = state.trusted.probabilities.array().log();
  out.total = log_sum_exp(lp + out.per_owner);
  return out;
}

AcquisitionEstimate alpha_sp(const SpState& state, const PointSet& batch, int y_samples, Rng& rng,
                             Matrix* gradient) {
  if (y_samples < 1) throw std::invalid_argument("alpha_sp: y_samples must be >= 1");
  if (batch.rows() < 1) throw std::invalid_argument("alpha_sp: empty batch");
  if (batch.cols() != state.posterior.dim()) throw std::invalid_argument("alpha_sp: dimension mismatch");
  const Eigen::Index k_count = state.trusted_size();
  const Eigen::Index nb = batch.rows();
  if (gradient) gradient->setZero(nb, batch.cols());
  if (k_count == 1) return {0.0, 0.0};

  const SpGeometry g = sp_geometry(state, batch);
  const Eigen::Index c_count = g.whitened.rows();
  const Vector u_norm = g.whitened.rowwise().squaredNorm();
  const int per_owner = (y_samples + static_cast<int>(k_count) - 1) / static_cast<int>(k_count);

  Matrix u_grad = Matrix::Zero(c_count, nb);
  double estimate = 0.0;
  double variance = 0.0;
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  for (Eigen::Index k = 0; k < k_count; ++k) {
    const double pk = state.trusted.probabilities(k);
    const Eigen::Index off = g.first[k];
    const Eigen::Index len = g.first[k + 1] - off;

    // Stratified choice of mixture components by weight, then y = m_c + L ξ,
    // i.e. v = u_c + ξ in whitened coordinates.
    const Vector w = state.sets[k].normalized_weights();
    std::vector<Eigen::Index> chosen(static_cast<size_t>(per_owner));
    {
      double cum = w(0);
      Eigen::Index c = 0;
      for (int i = 0; i < per_owner; ++i) {
        const double u = (i + unif(rng)) / per_owner;
        while (cum < u && c + 1 < len) cum += w(++c);
        chosen[i] = off + c;
      }
    }
    const Matrix xi = standard_normal_matrix(per_owner, nb, rng);
    Matrix v(per_owner, nb);
    for (int i = 0; i < per_owner; ++i) v.row(i) = g.whitened.row(chosen[i]) + xi.row(i);

    // log terms per (component, sample)
    Matrix d2 = -2.0 * g.whitened * v.transpose();
    d2.colwise() += u_norm;
    d2.rowwise() += v.rowwise().squaredNorm().transpose();
    const Matrix own = (-0.5 * d2.middleRows(off, len)).colwise() + g.log_weight.segment(off, len);
    const Matrix all = (-0.5 * d2).colwise() + g.log_joint;
    const Vector lse_own = column_log_sum_exp(own);
    const Vector lse_all = column_log_sum_exp(all);
    const Vector vals = lse_own - lse_all;

    const double mean_k = vals.mean();
    const double var_k = per_owner > 1 ? (vals.array() - mean_k).square().sum() / (per_owner - 1) : 0.0;
    estimate += pk * mean_k;
    variance += pk * pk * var_k / per_owner;

    if (!gradient) continue;
    // coefficient (r_own − r_all) · p_k / N_k on each (component, sample)
    Matrix coef = -(all.rowwise() - lse_all.transpose()).array().exp().matrix();
    coef.middleRows(off, len) += (own.rowwise() - lse_own.transpose()).array().exp().matrix();
    coef *= pk / per_owner;
    const Vector row_sum = coef.rowwise().sum();
    const Vector col_sum = coef.colwise().sum().transpose();
    // direct dependence through −½‖v − u_c‖²
    u_grad += coef * v;
    u_grad -= (g.whitened.array().colwise() * row_sum.array()).matrix();
    // dependence through the drawn v = u_chosen + ξ
    const Matrix v_grad = coef.transpose() * g.whitened - (v.array().colwise() * col_sum.array()).matrix();
    for (int i = 0; i < per_owner; ++i) u_grad.row(chosen[i]) += v_grad.row(i);
  }

  if (gradient) {
    // u_c = L⁻¹ m_c ⇒ m̄_c = L⁻ᵀ ū_c and L̄ = −Σ_c m̄_c u_cᵀ.
    const Matrix& l = g.chol.lower;
    const Matrix m_grad = l.transpose().triangularView<Eigen::Upper>().solve(u_grad.transpose());  // |B| × C
    const Matrix l_grad = -m_grad * g.whitened;
    const Matrix s_grad = cholesky_backward(l, l_grad);
    const Matrix coeff_grad = g.all_samples.transpose() * m_grad.transpose();
    const Vector offset_grad = m_grad.rowwise().sum();
    *gradient = projection_backward(state.factor, batch, g.proj, coeff_grad, offset_grad, s_grad);
  }
  return {estimate, std::sqrt(variance)};
}

AcquisitionEstimate TesSpAcquisition::evaluate(const PointSet& batch, std::uint64_t seed, int y_samples,
                                               Matrix* gradient) const {
  Rng rng(seed);
  return alpha_sp(state_, batch, y_samples, rng, gradient);
}

}  // namespace tesbo
