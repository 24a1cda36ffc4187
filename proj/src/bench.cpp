#include "tesbo/bench.hpp"

#include "tesbo/optimize.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

namespace tesbo {

namespace {

using nlohmann::json;

template <typename T>
T get_as(const json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw UsageError("config key '" + key + "' has the wrong type");
  }
}

using Setter = std::function<void(const json&)>;

void apply_object(const json& object, const std::string& where, const std::map<std::string, Setter>& setters) {
  if (!object.is_object()) throw UsageError("config section '" + where + "' must be an object");
  for (auto it = object.begin(); it != object.end(); ++it) {
    const auto found = setters.find(it.key());
    if (found == setters.end()) throw UsageError("unknown config key '" + it.key() + "' in " + where);
    found->second(it.value());
  }
}

template <typename T>
Setter set(T& target, const std::string& key) {
  return [&target, key](const json& v) { target = get_as<T>(v, key); };
}

Domain parse_domain(const json& value) {
  std::vector<double> lower, upper;
  apply_object(value, "domain", {{"lower", set(lower, "domain.lower")}, {"upper", set(upper, "domain.upper")}});
  try {
    return Domain(Eigen::Map<const Vector>(lower.data(), static_cast<Eigen::Index>(lower.size())),
                  Eigen::Map<const Vector>(upper.data(), static_cast<Eigen::Index>(upper.size())));
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("config domain: ") + e.what());
  }
}

ConditioningMethod parse_method(const std::string& name) {
  if (name == "grouping") return ConditioningMethod::grouping;
  if (name == "rejection") return ConditioningMethod::rejection;
  if (name == "importance") return ConditioningMethod::importance;
  throw UsageError("unknown sp_method '" + name + "' (expected grouping, rejection or importance)");
}

void parse_settings(const json& value, BenchSettings& s) {
  std::string method, lie;
  apply_object(value, "settings",
               {{"hyper_restarts", set(s.hyper.restarts, "hyper_restarts")},
                {"hyper_max_iterations", set(s.hyper.max_iterations, "hyper_max_iterations")},
                {"trusted_feature_count", set(s.trusted.feature_count, "trusted_feature_count")},
                {"trusted_restarts", set(s.trusted.restarts, "trusted_restarts")},
                {"trusted_candidate_pool", set(s.trusted.candidate_pool, "trusted_candidate_pool")},
                {"trusted_mc_samples", set(s.trusted.mc_samples, "trusted_mc_samples")},
                {"sp_method", set(method, "sp_method")},
                {"sp_total_draws", set(s.sp.total_draws, "sp_total_draws")},
                {"sp_min_group_size", set(s.sp.min_group_size, "sp_min_group_size")},
                {"sp_samples_per_owner", set(s.sp.samples_per_owner, "sp_samples_per_owner")},
                {"ep_max_iterations", set(s.ep.ep.max_iterations, "ep_max_iterations")},
                {"ep_tolerance", set(s.ep.ep.tolerance, "ep_tolerance")},
                {"ep_damping", set(s.ep.ep.damping, "ep_damping")},
                {"quadrature_order", set(s.ep.quadrature_order, "quadrature_order")},
                {"opt_learning_rate", set(s.opt.learning_rate, "opt_learning_rate")},
                {"opt_iterations", set(s.opt.iterations, "opt_iterations")},
                {"opt_y_samples", set(s.opt.y_samples, "opt_y_samples")},
                {"opt_restarts", set(s.opt.restarts, "opt_restarts")},
                {"opt_rescore_factor", set(s.opt.rescore_factor, "opt_rescore_factor")},
                {"baseline_restarts", set(s.baseline.restarts, "baseline_restarts")},
                {"baseline_pool", set(s.baseline.pool, "baseline_pool")},
                {"lie", set(lie, "lie")},
                {"mean_restarts", set(s.mean_restarts, "mean_restarts")},
                {"mean_pool", set(s.mean_pool, "mean_pool")},
                {"record_wall_time", set(s.record_wall_time, "record_wall_time")}});
  if (!method.empty()) s.sp.method = parse_method(method);
  if (!lie.empty()) {
    try {
      s.lie = parse_lie_strategy(lie);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
}

void parse_objective(const json& value, ObjectiveSpec& o) {
  apply_object(value, "objective",
               {{"name", set(o.name, "objective.name")},
                {"signal_variance", set(o.signal_variance, "objective.signal_variance")},
                {"lengthscale", set(o.lengthscale, "objective.lengthscale")},
                {"feature_count", set(o.feature_count, "objective.feature_count")},
                {"seed", set(o.seed, "objective.seed")},
                {"optimum_pool", set(o.optimum_pool, "objective.optimum_pool")},
                {"optimum_restarts", set(o.optimum_restarts, "objective.optimum_restarts")}});
}

std::uint64_t stream_seed(std::uint64_t seed, int repeat, int stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(repeat), static_cast<std::uint32_t>(stream)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

GPPosterior fit_standardized(const Dataset& raw, const Domain& domain, const HyperFitConfig& config, Rng& rng) {
  const Dataset data(raw.inputs, standardize(raw.observations));
  return fit_posterior(data, fit_hyperparams(data, domain, config, rng));
}

PointSet propose(const BenchmarkSpec& spec, const GPPosterior& post, const Domain& domain, int iteration, Rng& rng,
                 std::vector<std::string>& notes, const std::string& where) {
  const BenchSettings& s = spec.settings;
  const std::string& acq = spec.acquisition;
  if (acq == "ei") {
    const double best = post.dataset().observations.maxCoeff();
    return maximize_ei(post, best, domain, s.baseline, rng).x.transpose();
  }
  if (acq == "ucb") {
    return maximize_ucb(post, ucb_beta(domain.dim(), iteration), domain, s.baseline, rng).x.transpose();
  }
  if (acq == "qei-cl") return constant_liar_batch(post, spec.batch_size, s.lie, domain, s.baseline, rng).batch;

  const TrustedSet trusted = build_trusted_set(post, spec.effective_trusted_set_size(), domain, s.trusted, rng);
  OptResult best;
  if (acq == "tes-ep") {
    const TesEpAcquisition a(build_ep_state(post, trusted, s.ep));
    for (const std::string& n : a.state().notes) notes.push_back(where + n);
    best = optimize_acquisition(a, a.state().trusted, domain, spec.batch_size, s.opt, rng);
  } else {
    SpState state;
    try {
      state = build_sp_state(post, trusted, s.sp, rng);
    } catch (const SamplingError& e) {
      notes.push_back(where + "sampling failed (" + e.what() + "); retried with importance sampling");
      SpConfig fallback = s.sp;
      fallback.method = ConditioningMethod::importance;
      state = build_sp_state(post, trusted, fallback, rng);
    }
    for (const std::string& n : state.notes) notes.push_back(where + n);
    const TesSpAcquisition a(std::move(state));
    best = optimize_acquisition(a, a.state().trusted, domain, spec.batch_size, s.opt, rng);
  }
  for (const std::string& e : best.diagnostics.events) notes.push_back(where + e);
  return best.batch;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int BenchmarkSpec::effective_trusted_set_size() const {
  if (trusted_set_size > 0) return trusted_set_size;
  return batch_size <= 3 ? 5 : batch_size;
}

void BenchmarkSpec::validate() const {
  static const std::vector<std::string> known = {"tes-sp", "tes-ep", "ei", "ucb", "qei-cl"};
  if (std::find(known.begin(), known.end(), acquisition) == known.end())
    throw UsageError("unknown acquisition '" + acquisition + "' (expected tes-sp, tes-ep, ei, ucb or qei-cl)");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if ((acquisition == "ei" || acquisition == "ucb") && batch_size != 1)
    throw UsageError(acquisition + " proposes one point per iteration; use qei-cl or tes-* for batches");
  if (iterations < 1) throw UsageError("iterations must be >= 1");
  if (repeats < 1) throw UsageError("repeats must be >= 1");
  if (init_points < 1) throw UsageError("init_points must be >= 1");
  if (!(noise_variance >= 0.0)) throw UsageError("noise_variance must be nonnegative");
  if (trusted_set_size < 0) throw UsageError("trusted_set_size must be nonnegative");
  if (effective_trusted_set_size() < batch_size) throw UsageError("trusted_set_size must be at least batch_size");
  try {
    settings.opt.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

BenchmarkSpec parse_benchmark_spec(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  BenchmarkSpec spec;
  apply_object(root, "config",
               {{"objective", [&](const json& v) { parse_objective(v, spec.objective); }},
                {"domain", [&](const json& v) { spec.objective.domain = parse_domain(v); }},
                {"noise_variance", set(spec.noise_variance, "noise_variance")},
                {"acquisition", set(spec.acquisition, "acquisition")},
                {"batch_size", set(spec.batch_size, "batch_size")},
                {"iterations", set(spec.iterations, "iterations")},
                {"repeats", set(spec.repeats, "repeats")},
                {"init_points", set(spec.init_points, "init_points")},
                {"trusted_set_size", set(spec.trusted_set_size, "trusted_set_size")},
                {"seed", set(spec.seed, "seed")},
                {"settings", [&](const json& v) { parse_settings(v, spec.settings); }}});
  spec.validate();
  return spec;
}

BenchmarkSpec load_benchmark_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_benchmark_spec(buf.str());
}

Vector standardize(const Vector& y) {
  if (y.size() == 0) return y;
  const double mean = y.mean();
  const Vector centered = y.array() - mean;
  const double sd = std::sqrt(centered.squaredNorm() / static_cast<double>(y.size()));
  return sd > 0.0 ? Vector(centered / sd) : centered;
}

RegretPoint immediate_regret(const GPPosterior& posterior, const Objective& objective, int restarts, int pool,
                             Rng& rng) {
  const SmoothObjective mean = [&](const Vector& x, Vector* g) { return posterior.mean(x, g); };
  const AscentResult best = multistart_maximize(mean, objective.domain, restarts, pool, rng);
  return RegretPoint{best.x, std::max(0.0, objective.optimum - objective.value(best.x))};
}

RunResult run_benchmark(const BenchmarkSpec& spec) {
  spec.validate();
  return run_benchmark(spec, make_objective(spec.objective));
}

RunResult run_benchmark(const BenchmarkSpec& spec, const Objective& objective) {
  spec.validate();
  const Domain& domain = objective.domain;
  RunResult result;
  result.acquisition = spec.acquisition;
  result.dim = domain.dim();
  const double noise_sd = std::sqrt(spec.noise_variance);
  using clock = std::chrono::steady_clock;

  for (int r = 0; r < spec.repeats; ++r) {
    Rng init_rng(stream_seed(spec.seed, r, 0));
    Rng noise_rng(stream_seed(spec.seed, r, 1));
    Rng algo_rng(stream_seed(spec.seed, r, 2));
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto observe = [&](const Vector& x) {
      const double v = objective.value(x);
      if (!std::isfinite(v)) throw NumericError("objective returned a non-finite value");
      return v + noise_sd * gauss(noise_rng);
    };
    int iteration = 0;
    try {
      Dataset data(PointSet(0, domain.dim()), Vector(0));
      const PointSet init = domain.sample_uniform(spec.init_points, init_rng);
      for (Eigen::Index i = 0; i < init.rows(); ++i) data.append(init.row(i).transpose(), observe(init.row(i).transpose()));
      GPPosterior post = fit_standardized(data, domain, spec.settings.hyper, algo_rng);
      for (iteration = 1; iteration <= spec.iterations; ++iteration) {
        const auto start = clock::now();
        const std::string where = "repeat " + std::to_string(r) + " iteration " + std::to_string(iteration) + ": ";
        RunRecord rec;
        rec.repeat = r;
        rec.iteration = iteration;
        rec.queried = propose(spec, post, domain, iteration, algo_rng, result.notes, where);
        rec.observations.resize(rec.queried.rows());
        for (Eigen::Index i = 0; i < rec.queried.rows(); ++i) {
          const Vector x = domain.clamp(rec.queried.row(i).transpose());
          rec.queried.row(i) = x.transpose();
          rec.observations(i) = observe(x);
        }
        for (Eigen::Index i = 0; i < rec.queried.rows(); ++i)
          data.append(rec.queried.row(i).transpose(), rec.observations(i));
        post = fit_standardized(data, domain, spec.settings.hyper, algo_rng);
        const RegretPoint ir =
            immediate_regret(post, objective, spec.settings.mean_restarts, spec.settings.mean_pool, algo_rng);
        rec.incumbent = ir.incumbent;
        rec.immediate_regret = ir.regret;
        if (spec.settings.record_wall_time)
          rec.wall_time_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
        result.records.push_back(std::move(rec));
      }
    } catch (const std::exception& e) {
      result.notes.push_back("repeat " + std::to_string(r) + " aborted at iteration " + std::to_string(iteration) +
                             ": " + e.what());
    }
  }
  return result;
}

void write_run_csv(const RunResult& result, std::ostream& out) {
  out << "# acquisition=" << result.acquisition << "\n";
  out << "repeat,iteration,point_index";
  for (Eigen::Index j = 0; j < result.dim; ++j) out << ",dim_" << j;
  out << ",observation";
  for (Eigen::Index j = 0; j < result.dim; ++j) out << ",incumbent_" << j;
  out << ",immediate_regret,wall_time_ms\n";
  for (const RunRecord& rec : result.records) {
    for (Eigen::Index i = 0; i < rec.queried.rows(); ++i) {
      out << rec.repeat << "," << rec.iteration << "," << i;
      for (Eigen::Index j = 0; j < result.dim; ++j) out << "," << format_double(rec.queried(i, j));
      out << "," << format_double(rec.observations(i));
      for (Eigen::Index j = 0; j < result.dim; ++j) out << "," << format_double(rec.incumbent(j));
      out << "," << format_double(rec.immediate_regret) << "," << format_double(rec.wall_time_ms) << "\n";
    }
  }
}

std::vector<double> log_mean_regret(const RunResult& result) {
  std::vector<double> sum, count;
  for (const RunRecord& rec : result.records) {
    const size_t t = static_cast<size_t>(rec.iteration - 1);
    if (sum.size() <= t) {
      sum.resize(t + 1, 0.0);
      count.resize(t + 1, 0.0);
    }
    sum[t] += rec.immediate_regret;
    count[t] += 1.0;
  }
  std::vector<double> out(sum.size());
  for (size_t t = 0; t < sum.size(); ++t) out[t] = std::log(sum[t] / count[t]);
  return out;
}

std::vector<double> final_regrets(const RunResult& result) {
  std::map<int, double> last;
  for (const RunRecord& rec : result.records) last[rec.repeat] = rec.immediate_regret;
  std::vector<double> out;
  for (const auto& [repeat, ir] : last) out.push_back(ir);
  return out;
}

void write_aggregate_csv(const RunResult& result, std::ostream& out) {
  out << "# acquisition=" << result.acquisition << "\n";
  out << "iteration,log_mean_ir\n";
  const std::vector<double> lm = log_mean_regret(result);
  for (size_t t = 0; t < lm.size(); ++t) out << t + 1 << "," << format_double(lm[t]) << "\n";
}

void write_final_csv(const RunResult& result, std::ostream& out) {
  out << "# acquisition=" << result.acquisition << "\n";
  out << "repeat,final_ir\n";
  std::map<int, double> last;
  for (const RunRecord& rec : result.records) last[rec.repeat] = rec.immediate_regret;
  for (const auto& [repeat, ir] : last) out << repeat << "," << format_double(ir) << "\n";
}

}  // namespace tesbo
