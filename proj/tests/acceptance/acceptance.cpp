// Prints one PASS/FAIL line per acceptance criterion.
//   acceptance                 all criteria
//   acceptance --criterion N   criterion N only; exit status 1 on FAIL

#include "tesbo/acquisition_opt.hpp"
#include "tesbo/bench.hpp"
#include "tesbo/gp.hpp"
#include "tesbo/posterior_sampling.hpp"
#include "tesbo/tes_ep.hpp"
#include "tesbo/tes_sampling.hpp"
#include "tes_fixtures.hpp"

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace tesbo;
namespace tt = tesbo::testing;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[1024];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Brute-force moments of N(mean, cov) restricted to {f_owner is the max}.
void rejection_moments(const Vector& mean, const Matrix& cov, Eigen::Index owner, int draws, Rng& rng, Vector& m,
                       Vector& var) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  const Matrix root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  std::normal_distribution<double> g(0.0, 1.0);
  const Eigen::Index n = mean.size();
  Vector sum = Vector::Zero(n), sq = Vector::Zero(n), z(n);
  long acc = 0;
  for (int s = 0; s < draws; ++s) {
    for (Eigen::Index i = 0; i < n; ++i) z(i) = g(rng);
    const Vector f = mean + root * z;
    Eigen::Index arg;
    f.maxCoeff(&arg);
    if (arg != owner) continue;
    ++acc;
    sum += f;
    sq += f.cwiseAbs2();
  }
  m = sum / static_cast<double>(acc);
  var = sq / static_cast<double>(acc) - m.cwiseAbs2();
}

// Weighted mean and its standard error from the effective sample size.
void weighted_moments(const ConditionedSampleSet& set, Vector& mean, Vector& se) {
  const Vector w = set.normalized_weights();
  mean = set.samples.transpose() * w;
  const Matrix centered = set.samples.rowwise() - mean.transpose();
  const Vector var = centered.array().square().matrix().transpose() * w;
  se = (var / set.effective_sample_size()).cwiseSqrt();
}

Verdict criterion_1() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(101);
  Vector m, var;
  rejection_moments(Vector::Zero(2), Matrix::Identity(2, 2), 0, 1000000, rng, m, var);
  const EPApprox ep = ep_approximate(Vector::Zero(2), Matrix::Identity(2, 2), 0);
  const double mean_err = (ep.mean - m).cwiseAbs().maxCoeff();
  const double var_rel = ((ep.cov.diagonal() - var).cwiseAbs().array() / var.array()).maxCoeff();
  const double elapsed = seconds_since(start);
  const double ep_time = [&] {
    const auto t = std::chrono::steady_clock::now();
    ep_approximate(Vector::Zero(2), Matrix::Identity(2, 2), 0);
    return seconds_since(t);
  }();
  return {mean_err <= 0.02 && var_rel <= 0.10 && elapsed < 1.0,
          fmt("mu_ep=(%.4f, %.4f) oracle=(%.4f, %.4f) max|dmu|=%.4f; max rel var err=%.4f; EP %.2e s, total %.2f s",
              ep.mean(0), ep.mean(1), m(0), m(1), mean_err, var_rel, ep_time, elapsed)};
}

Verdict criterion_2() {
  const auto start = std::chrono::steady_clock::now();
  int agree = 0;
  std::string failures;
  for (int rep = 0; rep < 20; ++rep) {
    Rng rng(2000 + rep);
    const Eigen::Index n = 2 + rep % 4;
    KernelHyperparams hp;
    hp.lengthscales = Vector::Constant(2, std::uniform_real_distribution<double>(0.2, 1.0)(rng));
    const PointSet x = tt::uniform_points(n, 2, 0.0, 1.0, rng);
    const Matrix cov = tt::dense_gram(x, x, hp) + 1e-10 * Matrix::Identity(n, n);
    const Vector mean = Vector::Zero(n);
    const ConditionedSampleSet rej = rejection_sample(mean, cov, 0, 5000, 10000000, rng);
    const ConditionedSampleSet imp = importance_sample(mean, cov, 0, 5000, rng);
    Vector mr, sr, mi, si;
    weighted_moments(rej, mr, sr);
    weighted_moments(imp, mi, si);
    bool ok = true;
    for (Eigen::Index c = 0; c < n; ++c) ok &= std::abs(mi(c) - mr(c)) <= 3 * std::hypot(si(c), sr(c));
    agree += ok;
    if (!ok) failures += " " + std::to_string(rep);
  }
  const double elapsed = seconds_since(start);
  return {agree >= 18 && elapsed < 30.0,
          fmt("%d/20 instances agree within 3 combined stderr (need 18)%s%s; %.1f s", agree,
              failures.empty() ? "" : "; disagreeing:", failures.c_str(), elapsed)};
}

Verdict criterion_3() {
  double worst_sum = 0.0, worst_exch = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const tt::RandomInstance inst = tt::random_instance(3000 + rep, 2, 6, 2 + rep % 4);
    Rng rng(rep);
    double total = 0.0;
    for (Eigen::Index k = 0; k < inst.trusted.size(); ++k)
      total += trusted_prob(inst.posterior, inst.trusted.points, k, 10000, rng).value;
    worst_sum = std::max(worst_sum, std::abs(total - 1.0));
  }
  // Vertices of a regular simplex under a zero-mean prior are exchangeable.
  for (int n : {2, 3, 5}) {
    KernelHyperparams hp;
    hp.lengthscales = Vector::Constant(n, 0.7);
    hp.noise_variance = 1e-4;
    const GPPosterior prior = fit_posterior(Dataset(PointSet(0, n), Vector(0)), hp);
    const PointSet pts = Matrix::Identity(n, n);
    Rng rng(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double p = trusted_prob(prior, pts, k, 10000, rng).value;
      worst_exch = std::max(worst_exch, std::abs(p - 1.0 / n));
    }
  }
  return {worst_sum <= 0.02 && worst_exch <= 0.02,
          fmt("max |sum p - 1| = %.4f over 10 instances; max |p - 1/n| = %.4f for n in {2,3,5}", worst_sum,
              worst_exch)};
}

Verdict criterion_4() {
  int nonneg = 0;
  double worst_z = 1e300;
  double far_ratio = 0.0;
  Rng qrng(4);
  for (int rep = 0; rep < 50; ++rep) {
    const tt::RandomInstance inst = tt::random_instance(4000 + rep, 2, 6, 2 + rep % 4, 0.3, 1e-2);
    Rng rng(rep);
    const EpState ep = build_ep_state(inst.posterior, inst.trusted);
    const SpState sp = build_sp_state(inst.posterior, inst.trusted, SpConfig{}, rng);
    const PointSet q = tt::uniform_points(1 + rep % 3, 2, 0.0, 1.0, qrng);
    const AcquisitionEstimate a = alpha_ep(ep, q, 1000, rng);
    const AcquisitionEstimate b = alpha_sp(sp, q, 1000, rng);
    const bool ok = a.value >= -3 * a.stderr && b.value >= -3 * b.stderr;
    nonneg += ok;
    worst_z = std::min({worst_z, a.value / std::max(a.stderr, 1e-300), b.value / std::max(b.stderr, 1e-300)});

    if (rep < 10) {
      // Far query: 10 lengthscales from every trusted and data point.
      const double ell = inst.posterior.hyperparams().lengthscales(0);
      PointSet far(1, 2);
      far << 1.0 + 10.0 * ell, 0.5;
      double in_ep = 0.0, in_sp = 0.0;
      for (Eigen::Index k = 0; k < inst.trusted.size(); ++k) {
        in_ep = std::max(in_ep, alpha_ep(ep, inst.trusted.points.row(k), 0, rng).value);
        in_sp = std::max(in_sp, alpha_sp(sp, inst.trusted.points.row(k), 5000, rng).value);
      }
      far_ratio = std::max(far_ratio, std::abs(alpha_ep(ep, far, 0, rng).value) / in_ep);
      far_ratio = std::max(far_ratio, std::abs(alpha_sp(sp, far, 5000, rng).value) / in_sp);
    }
  }
  double ep_single = 0.0, sp_single = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    const tt::RandomInstance inst = tt::random_instance(4100 + rep, 2, 6, 1);
    Rng rng(rep);
    const EpState ep = build_ep_state(inst.posterior, inst.trusted);
    const SpState sp = build_sp_state(inst.posterior, inst.trusted, SpConfig{}, rng);
    const PointSet q = tt::uniform_points(2, 2, 0.0, 1.0, qrng);
    ep_single = std::max(ep_single, std::abs(alpha_ep(ep, q, 100, rng).value));
    sp_single = std::max(sp_single, std::abs(alpha_sp(sp, q, 100, rng).value));
  }
  return {nonneg == 50 && ep_single == 0.0 && sp_single == 0.0 && far_ratio <= 0.05,
          fmt("%d/50 states with both >= -3 stderr (min value/stderr %.2f); |X*|=1 gives ep %.1e sp %.1e; "
              "far query / in-set max <= %.4f",
              nonneg, worst_z, ep_single, sp_single, far_ratio)};
}

Verdict criterion_5() {
  double worst_lml = 0.0, worst_alpha = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    Rng rng(5000 + rep);
    KernelHyperparams hp;
    hp.signal_variance = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
    hp.lengthscales = tt::uniform_points(2, 1, 0.1, 0.8, rng);
    hp.noise_variance = std::uniform_real_distribution<double>(1e-3, 1e-1)(rng);
    const PointSet x = tt::uniform_points(15, 2, 0.0, 1.0, rng);
    const Dataset data(x, tt::dense_gp_draw(x, hp, rng));
    const LikelihoodValue lml = log_marginal_likelihood(data, hp);
    const Vector theta = hp.to_log();
    Vector fd(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Vector a = theta, b = theta;
      a(i) += 1e-5;
      b(i) -= 1e-5;
      fd(i) = (log_marginal_likelihood(data, KernelHyperparams::from_log(a)).value -
               log_marginal_likelihood(data, KernelHyperparams::from_log(b)).value) /
              2e-5;
    }
    worst_lml = std::max(worst_lml, (lml.gradient - fd).norm() / fd.norm());

    const tt::RandomInstance inst = tt::random_instance(5100 + rep, 2, 6, 2 + rep % 4, 0.3, 1e-2);
    const TesEpAcquisition acq(build_ep_state(inst.posterior, inst.trusted));
    const PointSet batch = tt::uniform_points(1 + rep % 2, 2, 0.1, 0.9, rng);
    Matrix grad;
    acq.evaluate(batch, 99, 500, &grad);
    const Matrix afd = tt::finite_difference_gradient(
        [&](const PointSet& p) { return acq.evaluate(p, 99, 500, nullptr).value; }, batch, 1e-6);
    worst_alpha = std::max(worst_alpha, (grad - afd).norm() / std::max(afd.norm(), 1e-12));
  }
  return {worst_lml <= 1e-3 && worst_alpha <= 1e-3,
          fmt("max relative error: LML gradient %.2e, alpha_ep query gradient %.2e (10 instances each)", worst_lml,
              worst_alpha)};
}

Verdict criterion_6() {
  const auto start = std::chrono::steady_clock::now();
  int monotone = 0;
  Rng qrng(6);
  for (int rep = 0; rep < 20; ++rep) {
    const tt::RandomInstance inst = tt::random_instance(6000 + rep, 2, 6, 5, 0.3, 1e-2);
    const TesEpAcquisition acq(build_ep_state(inst.posterior, inst.trusted));
    const PointSet b = tt::uniform_points(1 + rep % 4, 2, 0.0, 1.0, qrng);
    PointSet bx(b.rows() + 1, 2);
    bx << b, tt::uniform_points(1, 2, 0.0, 1.0, qrng);
    const AcquisitionEstimate small = acq.evaluate(b, 600 + rep, 2000, nullptr);
    const AcquisitionEstimate big = acq.evaluate(bx, 600 + rep, 2000, nullptr);
    monotone += big.value >= small.value - 3 * std::hypot(big.stderr, small.stderr);
  }

  // Posterior over a GP-sampled function with five trusted maximizers.
  ObjectiveSpec os;
  os.name = "gp-sample";
  os.seed = 66;
  os.optimum_pool = 20000;
  const Objective obj = make_objective(os);
  Rng rng(67);
  const PointSet x = obj.domain.sample_uniform(10, rng);
  Vector y(10);
  for (int i = 0; i < 10; ++i) y(i) = obj.value(x.row(i).transpose()) + 1e-2 * std::normal_distribution<double>()(rng);
  KernelHyperparams hp;
  hp.signal_variance = 2.0;
  hp.lengthscales = Vector::Constant(2, 1.0);
  hp.noise_variance = 1e-4;
  const GPPosterior post = fit_posterior(Dataset(x, y), hp);
  const TrustedSet trusted = build_trusted_set(post, 5, obj.domain, TrustedSetConfig{}, rng);
  const TesEpAcquisition acq(build_ep_state(post, trusted));
  const std::vector<BatchGain> gains =
      gain_vs_batch_size(acq, acq.state().trusted, obj.domain, {5, 8}, OptConfig{}, rng);
  const double rel = (gains[1].value - gains[0].value) / gains[0].value;
  const double elapsed = seconds_since(start);
  return {monotone == 20 && rel < 0.05 && elapsed < 300.0,
          fmt("monotone %d/20; |X*|=%ld: max alpha_ep |B|=5 %.4f (+-%.4f), |B|=8 %.4f (+-%.4f), gain %.2f%%; %.0f s",
              monotone, static_cast<long>(acq.state().trusted_size()), gains[0].value, gains[0].stderr,
              gains[1].value, gains[1].stderr, 100 * rel, elapsed)};
}

// Shared settings for the desk-scale BO runs; see README for the rationale.
BenchSettings desk_settings() {
  BenchSettings s;
  s.sp.total_draws = 500;
  s.sp.min_group_size = 10;
  s.sp.samples_per_owner = 100;
  return s;
}

OptConfig sp_opt() {
  OptConfig o;
  o.iterations = 100;
  o.y_samples = 100;
  return o;
}

Verdict criterion_7() {
  const auto start = std::chrono::steady_clock::now();
  BenchmarkSpec branin;
  branin.objective.name = "branin";
  branin.noise_variance = 1e-4;
  branin.iterations = 40;
  branin.repeats = 10;
  branin.init_points = 2;
  branin.seed = 7;
  branin.settings = desk_settings();
  branin.acquisition = "tes-ep";
  const std::vector<double> ep_final = final_regrets(run_benchmark(branin));
  branin.acquisition = "ei";
  const std::vector<double> ei_final = final_regrets(run_benchmark(branin));
  const double ep_med = median(ep_final), ei_med = median(ei_final);

  BenchmarkSpec gp;
  gp.objective.name = "gp-sample";
  gp.objective.seed = 70;
  gp.noise_variance = 1e-4;
  gp.iterations = 60;
  gp.repeats = 5;
  gp.init_points = 2;
  gp.seed = 71;
  gp.settings = desk_settings();
  gp.acquisition = "tes-ep";
  const double gp_ep = log_mean_regret(run_benchmark(gp)).back();
  gp.acquisition = "tes-sp";
  gp.settings.opt = sp_opt();
  const double gp_sp = log_mean_regret(run_benchmark(gp)).back();
  gp.acquisition = "ucb";
  const double gp_ucb = log_mean_regret(run_benchmark(gp)).back();
  const double elapsed = seconds_since(start);
  const bool branin_ok = ep_med <= 0.1 && ep_med <= ei_med + 0.05;
  const bool gp_ok = gp_ep <= gp_ucb && gp_sp <= gp_ucb;
  return {branin_ok && gp_ok && elapsed <= 1800.0,
          fmt("Branin median final IR: tes-ep %.3g, ei %.3g; GP sample final log-mean IR: tes-ep %.3f, tes-sp %.3f, "
              "ucb %.3f; %.0f s",
              ep_med, ei_med, gp_ep, gp_sp, gp_ucb, elapsed)};
}

Verdict criterion_8() {
  const auto start = std::chrono::steady_clock::now();
  BenchmarkSpec gp;
  gp.objective.name = "gp-sample";
  gp.objective.seed = 80;
  gp.noise_variance = 1e-4;
  gp.batch_size = 3;
  gp.trusted_set_size = 5;
  gp.iterations = 20;
  gp.repeats = 3;
  gp.init_points = 2;
  gp.seed = 81;
  gp.settings = desk_settings();
  gp.acquisition = "tes-ep";
  const double ep = mean_of(final_regrets(run_benchmark(gp)));
  gp.acquisition = "qei-cl";
  const double cl = mean_of(final_regrets(run_benchmark(gp)));
  const double elapsed = seconds_since(start);
  return {ep <= cl + 0.1 && elapsed <= 1200.0,
          fmt("mean final IR over 3 repeats: tes-ep %.4f, qei-cl %.4f; %.0f s", ep, cl, elapsed)};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict criterion_9() {
  const std::string dir = "acceptance_determinism";
  std::filesystem::create_directories(dir);
  int identical = 0, total = 0;
  std::string detail;
  for (const std::string acq : {"tes-ep", "tes-sp", "ei", "ucb", "qei-cl"}) {
    const std::string config = dir + "/" + acq + ".json";
    std::ofstream(config) << R"({"objective": {"name": "hartmann3"}, "acquisition": ")" << acq
                          << R"(", "batch_size": )" << (acq == "ei" || acq == "ucb" ? 1 : 2)
                          << R"(, "iterations": 3, "repeats": 2, "seed": 9,
      "settings": {"opt_iterations": 30, "opt_y_samples": 64, "sp_total_draws": 300, "hyper_restarts": 3}})";
    std::string outputs[2];
    bool ran = true;
    for (int k = 0; k < 2; ++k) {
      const std::string out = dir + "/" + acq + "_" + std::to_string(k) + ".csv";
      const std::string cmd = std::string(TESBO_CLI) + " run --config " + config + " --out " + out + " --seed 123" +
                              " > " + dir + "/" + acq + ".log 2>&1";
      ran &= std::system(cmd.c_str()) == 0;
      outputs[k] = slurp(out);
    }
    ++total;
    const bool same = ran && !outputs[0].empty() && outputs[0] == outputs[1];
    identical += same;
    detail += " " + acq + (same ? "=identical" : "=DIFFERENT");
  }
  return {identical == total, fmt("byte-identical CSV for %d/%d acquisitions:%s", identical, total, detail.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Verdict()>> criteria = {criterion_1, criterion_2, criterion_3,
                                                          criterion_4, criterion_5, criterion_6,
                                                          criterion_7, criterion_8, criterion_9};
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      which.push_back(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion N]...\n");
      return 2;
    }
  }
  if (which.empty())
    for (int i = 1; i <= 9; ++i) which.push_back(i);
  bool all = true;
  for (int c : which) {
    if (c < 1 || c > 9) {
      std::fprintf(stderr, "criterion must be in 1..9\n");
      return 2;
    }
    Verdict v;
    try {
      v = criteria[static_cast<size_t>(c - 1)]();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d: %s: %s\n", c, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
    all &= v.pass;
  }
  return all ? 0 : 1;
}
