#include "tesbo/tes_ep.hpp"

#include "tesbo/linalg.hpp"
#include "tesbo/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace tesbo {

double EPSite::site_variance() const {
  return precision > 0.0 ? 1.0 / precision : std::numeric_limits<double>::infinity();
}

double EPSite::site_mean() const { return precision > 0.0 ? scaled_mean / precision : 0.0; }

Vector EPSite::constraint(Eigen::Index size, Eigen::Index owner) const {
  Vector c = Vector::Zero(size);
  c(owner) = 1.0;
  c(other) = -1.0;
  return c;
}

namespace {

// Σ = (K̃⁻¹ + C Π̃ Cᵀ)⁻¹ and μ = Σ (K̃⁻¹ m̃ + C ν̃), without inverting K̃.
void recompute_from_sites(const Vector& prior_mean, const Matrix& prior_cov, Eigen::Index owner,
                          const std::vector<EPSite>& sites, Vector& mean, Matrix& cov) {
  const Eigen::Index n = prior_mean.size();
  const Eigen::Index m = static_cast<Eigen::Index>(sites.size());
  Matrix c = Matrix::Zero(n, m);
  Vector root(m), nu(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    c(owner, j) = 1.0;
    c(sites[j].other, j) = -1.0;
    root(j) = std::sqrt(std::max(sites[j].precision, 0.0));
    nu(j) = sites[j].scaled_mean;
  }
  // W = S^½ Cᵀ, B = I + W K̃ Wᵀ
  const Matrix w = root.asDiagonal() * c.transpose();
  Matrix b = w * prior_cov * w.transpose();
  b.diagonal().array() += 1.0;
  const JitteredCholesky lb = cholesky_with_jitter(b, 1.0);
  const Matrix v = lb.solve_lower(w * prior_cov);
  cov = symmetrize(prior_cov - v.transpose() * v);
  const Vector wm = lb.solve_lower((w * prior_mean).eval()).col(0);
  mean = prior_mean - v.transpose() * wm + cov * (c * nu);
}

}  // namespace

EPApprox ep_approximate(const Eigen::Ref<const Vector>& prior_mean, const Eigen::Ref<const Matrix>& prior_cov,
                        Eigen::Index owner, const EPConfig& config) {
  const Eigen::Index n = prior_mean.size();
  if (n < 1) throw std::invalid_argument("ep_approximate: need at least one trusted point");
  if (prior_cov.rows() != n || prior_cov.cols() != n) throw std::invalid_argument("ep_approximate: shape mismatch");
  if (owner < 0 || owner >= n) throw std::out_of_range("ep_approximate: owner index out of range");
  if (config.max_iterations < 1) throw std::invalid_argument("ep_approximate: max_iterations must be >= 1");

  EPApprox ep;
  ep.owner = owner;
  ep.mean = prior_mean;
  ep.cov = prior_cov;
  if (n == 1) {
    ep.converged = true;
    return ep;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i != owner) ep.sites.push_back(EPSite{i, 0.0, 0.0});
  }
  const Vector m0 = prior_mean;
  const Matrix k0 = prior_cov;
  const double max_precision = 1.0 / config.min_site_variance;
  EPApprox stable = ep;

  for (int it = 1; it <= config.max_iterations; ++it) {
    double max_change = 0.0;
    for (EPSite& site : ep.sites) {
      const Eigen::Index o = site.other;
      // c = e_owner − e_other
      const Vector u = ep.cov.col(owner) - ep.cov.col(o);
      const double s = u(owner) - u(o);
      const double mu = ep.mean(owner) - ep.mean(o);
      const double cavity_precision = 1.0 / s - site.precision;
      if (!(cavity_precision > 0.0) || !(s > 0.0)) {
        ++ep.skipped_updates;
        std::ostringstream msg;
        msg << "sweep " << it << ": negative cavity variance at site " << o << "; update skipped";
        ep.events.push_back(msg.str());
        continue;
      }
      const double cav_var = 1.0 / cavity_precision;
      const double cav_mean = cav_var * (mu / s - site.scaled_mean);
      const double cav_sd = std::sqrt(cav_var);
      const double beta = cav_mean / cav_sd;
      const double lambda = inverse_mills_ratio(beta);
      const double hat_mean = cav_mean + cav_sd * lambda;
      const double shrink = std::max(1.0 - lambda * (lambda + beta), 1e-300);
      const double hat_var = cav_var * shrink;

      const double proposed_precision = 1.0 / hat_var - cavity_precision;
      const double proposed_scaled = hat_mean / hat_var - cav_mean / cav_var;
      double new_precision = config.damping * proposed_precision + (1.0 - config.damping) * site.precision;
      const double new_scaled = config.damping * proposed_scaled + (1.0 - config.damping) * site.scaled_mean;
      new_precision = std::clamp(new_precision, 0.0, max_precision);

      const double dp = new_precision - site.precision;
      const double dn = new_scaled - site.scaled_mean;
      if (!std::isfinite(dp) || !std::isfinite(dn)) {
        std::ostringstream msg;
        msg << "ep_approximate: non-finite site update at sweep " << it << ", site " << o;
        throw EPDivergence(msg.str(), stable);
      }
      // Rank-one update of (μ, Σ) for the change in this site.
      const double kappa = dp / (1.0 + dp * s);
      ep.mean += u * (dn - kappa * (mu + dn * s));
      ep.cov -= kappa * u * u.transpose();
      site.precision = new_precision;
      site.scaled_mean = new_scaled;
      max_change = std::max({max_change, std::abs(dp), std::abs(dn)});
    }
    recompute_from_sites(m0, k0, owner, ep.sites, ep.mean, ep.cov);
    ep.iterations = it;
    if (!ep.mean.allFinite() || !ep.cov.allFinite()) {
      std::ostringstream msg;
      msg << "ep_approximate: non-finite moments after sweep " << it;
      throw EPDivergence(msg.str(), stable);
    }
    stable = ep;
    if (max_change < config.tolerance) {
      ep.converged = true;
      break;
    }
  }
  return ep;
}

EPApprox ep_approximate(const GPPosterior& posterior, const TrustedSet& trusted, Eigen::Index owner,
                        const EPConfig& config) {
  const Prediction pred = posterior.predict(trusted.points);
  return ep_approximate(pred.mean, pred.cov, owner, config);
}

Prediction q_ep_predictive(const EPApprox& ep, const PredictiveProjection& proj, double noise_variance) {
  if (proj.coeff.rows() != ep.mean.size()) {
    throw std::invalid_argument("q_ep_predictive: projection and EP approximation disagree in |X*|");
  }
  Prediction out;
  out.mean = proj.coeff.transpose() * ep.mean + proj.offset;
  out.cov = symmetrize(proj.base_cov + proj.coeff.transpose() * ep.cov * proj.coeff);
  out.cov.diagonal().array() += noise_variance;
  return out;
}

EpState build_ep_state(const GPPosterior& posterior, const TrustedSet& trusted, const EpStateConfig& config) {
  if (trusted.size() < 1) throw std::invalid_argument("build_ep_state: empty trusted set");
  if (trusted.probabilities.size() != trusted.size()) {
    throw std::invalid_argument("build_ep_state: trusted set has no probabilities");
  }
  EpState state;
  state.posterior = posterior;
  state.quadrature_order = config.quadrature_order;

  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < trusted.size(); ++i) {
    if (trusted.probabilities(i) > 0.0) keep.push_back(i);
  }
  if (keep.empty()) throw NumericError("build_ep_state: maximizer probabilities sum to zero");
  const Eigen::Index kept = static_cast<Eigen::Index>(keep.size());
  state.trusted.points.resize(kept, trusted.points.cols());
  state.trusted.probabilities.resize(kept);
  state.trusted.probability_stderr = Vector::Zero(kept);
  for (Eigen::Index k = 0; k < kept; ++k) {
    state.trusted.points.row(k) = trusted.points.row(keep[k]);
    state.trusted.probabilities(k) = trusted.probabilities(keep[k]);
    if (trusted.probability_stderr.size() == trusted.size()) {
      state.trusted.probability_stderr(k) = trusted.probability_stderr(keep[k]);
    }
  }
  if (kept < trusted.size()) {
    std::ostringstream msg;
    msg << "dropped " << trusted.size() - kept << " trusted point(s) with zero probability";
    state.notes.push_back(msg.str());
  }
  state.trusted.probabilities /= state.trusted.probabilities.sum();

  const Prediction pred = posterior.predict(state.trusted.points);
  for (Eigen::Index k = 0; k < kept; ++k) {
    EPApprox ep;
    try {
      ep = ep_approximate(pred.mean, pred.cov, k, config.ep);
    } catch (const EPDivergence& e) {
      ep = e.last_stable();
      state.notes.push_back(std::string(e.what()) + "; using last stable state");
    }
    if (!ep.converged) {
      std::ostringstream msg;
      msg << "EP for trusted point " << k << " stopped after " << ep.iterations << " sweeps without converging";
      state.notes.push_back(msg.str());
    }
    if (ep.skipped_updates > 0) {
      std::ostringstream msg;
      msg << "EP for trusted point " << k << " skipped " << ep.skipped_updates << " site update(s)";
      state.notes.push_back(msg.str());
    }
    state.approximations.push_back(std::move(ep));
  }
  state.factor = AugmentedFactor(posterior, state.trusted.points);
  return state;
}

namespace {

// Mixture of Gaussians N(m_k, S_k) with weights p_k. For each component k the
// nodes y = m_k + L_k ξ_i with weights ω_i estimate
//   Σ_k p_k [−½ log det(2πe S_k) − Σ_i ω_i log q(y_ki)].
struct MixtureTerm {
  double value = 0.0;
  Vector per_node;  // Σ_k p_k [−H_k − log q(y_ki)] for each i
  std::vector<Vector> mean_grad;
  std::vector<Matrix> cov_grad;
};

MixtureTerm mixture_entropy_gap(const std::vector<Vector>& means, const std::vector<Matrix>& covs,
                                const Vector& probs, const Matrix& nodes, const Vector& node_weights,
                                bool want_gradient) {
  const Eigen::Index k_count = probs.size();
  const Eigen::Index dim = means[0].size();
  const Eigen::Index n_nodes = nodes.rows();
  std::vector<JitteredCholesky> chol;
  std::vector<double> half_log_det(static_cast<size_t>(k_count));
  for (Eigen::Index k = 0; k < k_count; ++k) {
    chol.push_back(cholesky_with_jitter(covs[k], std::max(covs[k].diagonal().maxCoeff(), 1e-300)));
    half_log_det[k] = 0.5 * chol[k].log_determinant();
  }
  const Vector log_p = probs.array().log();

  MixtureTerm out;
  out.per_node = Vector::Zero(n_nodes);
  double neg_entropy = 0.0;
  for (Eigen::Index k = 0; k < k_count; ++k) {
    neg_entropy -= probs(k) * (half_log_det[k] + dim * (kLogSqrt2Pi + 0.5));
  }
  out.per_node.setConstant(neg_entropy);

  std::vector<Matrix> cov_inv;
  std::vector<Matrix> lower_grad;
  if (want_gradient) {
    out.mean_grad.assign(static_cast<size_t>(k_count), Vector::Zero(dim));
    out.cov_grad.resize(static_cast<size_t>(k_count));
    lower_grad.assign(static_cast<size_t>(k_count), Matrix::Zero(dim, dim));
    for (Eigen::Index k = 0; k < k_count; ++k) {
      cov_inv.push_back(chol[k].inverse());
      out.cov_grad[k] = -0.5 * probs(k) * cov_inv[k];
    }
  }

  Vector log_terms(k_count);
  std::vector<Vector> solved(static_cast<size_t>(k_count));
  double cross = 0.0;
  for (Eigen::Index k = 0; k < k_count; ++k) {
    if (!(probs(k) > 0.0)) continue;
    for (Eigen::Index i = 0; i < n_nodes; ++i) {
      const Vector xi = nodes.row(i).transpose();
      const Vector y = means[k] + chol[k].lower * xi;
      for (Eigen::Index j = 0; j < k_count; ++j) {
        const Vector diff = y - means[j];
        const Vector z = chol[j].solve_lower(diff).col(0);
        log_terms(j) = log_p(j) - 0.5 * z.squaredNorm() - half_log_det[j] - dim * kLogSqrt2Pi;
        if (want_gradient) solved[j] = chol[j].lower.transpose().triangularView<Eigen::Upper>().solve(z);
      }
      const double log_q = log_sum_exp(log_terms);
      const double weight = probs(k) * node_weights(i);
      cross += weight * log_q;
      out.per_node(i) -= probs(k) * log_q;
      if (!want_gradient) continue;
      // d(−weight · log q)
      const double c = -weight;
      Vector y_grad = Vector::Zero(dim);
      for (Eigen::Index j = 0; j < k_count; ++j) {
        const double rho = std::exp(log_terms(j) - log_q);
        if (rho == 0.0) continue;
        out.mean_grad[j] += c * rho * solved[j];
        out.cov_grad[j] += 0.5 * c * rho * (solved[j] * solved[j].transpose() - cov_inv[j]);
        y_grad -= rho * solved[j];
      }
      out.mean_grad[k] += c * y_grad;
      lower_grad[k] += c * y_grad * xi.transpose();
    }
  }
  out.value = neg_entropy - cross;
  if (want_gradient) {
    for (Eigen::Index k = 0; k < k_count; ++k) out.cov_grad[k] += cholesky_backward(chol[k].lower, lower_grad[k]);
  }
  return out;
}

}  // namespace

AcquisitionEstimate alpha_ep(const EpState& state, const PointSet& batch, int y_samples, Rng& rng,
                             Matrix* gradient) {
  if (batch.rows() < 1) throw std::invalid_argument("alpha_ep: empty batch");
  if (batch.cols() != state.posterior.dim()) throw std::invalid_argument("alpha_ep: dimension mismatch");
  const Eigen::Index k_count = state.trusted_size();
  const Eigen::Index nb = batch.rows();
  if (gradient) gradient->setZero(nb, batch.cols());
  if (k_count == 1) return {0.0, 0.0};

  const double noise = state.posterior.hyperparams().noise_variance;
  const PredictiveProjection proj = predictive_projection(state.factor, batch);
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  for (const EPApprox& ep : state.approximations) {
    Prediction q = q_ep_predictive(ep, proj, noise);
    means.push_back(std::move(q.mean));
    covs.push_back(std::move(q.cov));
  }
  const Vector& probs = state.trusted.probabilities;

  MixtureTerm term;
  AcquisitionEstimate out;
  if (nb == 1) {
    const GaussHermiteRule& rule = gauss_hermite(state.quadrature_order);
    const Matrix nodes = std::sqrt(2.0) * rule.nodes;
    const Vector weights = rule.weights / std::sqrt(M_PI);
    term = mixture_entropy_gap(means, covs, probs, nodes, weights, gradient != nullptr);
    const GaussHermiteRule& half = gauss_hermite(std::max(1, state.quadrature_order / 2));
    const MixtureTerm coarse = mixture_entropy_gap(means, covs, probs, std::sqrt(2.0) * half.nodes,
                                                   half.weights / std::sqrt(M_PI), false);
    out.value = term.value;
    out.stderr = std::abs(term.value - coarse.value) + 1e-14 * (1.0 + std::abs(term.value));
  } else {
    if (y_samples < 1) throw std::invalid_argument("alpha_ep: y_samples must be >= 1");
    const Matrix nodes = standard_normal_matrix(y_samples, nb, rng);
    const Vector weights = Vector::Constant(y_samples, 1.0 / y_samples);
    term = mixture_entropy_gap(means, covs, probs, nodes, weights, gradient != nullptr);
    out.value = term.value;
    const double mean = term.per_node.mean();
    const double var = y_samples > 1 ? (term.per_node.array() - mean).square().sum() / (y_samples - 1) : 0.0;
    out.stderr = std::sqrt(var / y_samples);
  }

  if (gradient) {
    // m_k = Aᵀ μ_k + b,  S_k = base + Aᵀ Σ_k A + σ_n² I
    Matrix coeff_grad = Matrix::Zero(proj.coeff.rows(), nb);
    Vector offset_grad = Vector::Zero(nb);
    Matrix base_grad = Matrix::Zero(nb, nb);
    for (Eigen::Index k = 0; k < k_count; ++k) {
      const EPApprox& ep = state.approximations[k];
      const Matrix sym = symmetrize(term.cov_grad[k]);
      coeff_grad += ep.mean * term.mean_grad[k].transpose();
      coeff_grad += 2.0 * ep.cov * proj.coeff * sym;
      offset_grad += term.mean_grad[k];
      base_grad += sym;
    }
    *gradient = projection_backward(state.factor, batch, proj, coeff_grad, offset_grad, base_grad);
  }
  return out;
}

AcquisitionEstimate TesEpAcquisition::evaluate(const PointSet& batch, std::uint64_t seed, int y_samples,
                                               Matrix* gradient) const {
  Rng rng(seed);
  return alpha_ep(state_, batch, y_samples, rng, gradient);
}

}  // namespace tesbo
