#include "tesbo/bench.hpp"
#include "tesbo/normal.hpp"
#include "tesbo/optimize.hpp"
#include "tesbo/plot.hpp"
#include "tesbo/posterior_sampling.hpp"
#include "tesbo/tes_ep.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

using namespace tesbo;

namespace {

std::string sibling_path(const std::string& path, const std::string& suffix) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  const std::string stem = (dot != std::string::npos && (slash == std::string::npos || dot > slash)) ? path.substr(0, dot) : path;
  return stem + suffix;
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  body(out);
}

int run_command(const std::string& config, const std::string& out_path, const std::string& plot_path,
                const std::optional<std::uint64_t>& seed) {
  BenchmarkSpec spec = load_benchmark_spec(config);
  if (seed) spec.seed = *seed;
  const RunResult result = run_benchmark(spec);
  for (const std::string& note : result.notes) std::cerr << "note: " << note << "\n";
  write_file(out_path, [&](std::ostream& o) { write_run_csv(result, o); });
  write_file(sibling_path(out_path, ".aggregate.csv"), [&](std::ostream& o) { write_aggregate_csv(result, o); });
  write_file(sibling_path(out_path, ".final.csv"), [&](std::ostream& o) { write_final_csv(result, o); });
  if (!plot_path.empty()) emit_plot({out_path}, plot_path);
  const std::vector<double> lm = log_mean_regret(result);
  if (!lm.empty()) std::printf("%s final log-mean IR %.6f over %d repeats\n", spec.acquisition.c_str(), lm.back(), spec.repeats);
  return 0;
}

// Dense uniform screening followed by projected ascent with central-difference
// gradients from the best screened points.
void oracle_maximum(const std::string& name) {
  ObjectiveSpec os;
  os.name = name;
  const Objective obj = make_objective(os);
  const SmoothObjective f = [&](const Vector& x, Vector* g) {
    const double v = obj.value(x);
    if (g) {
      g->resize(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vector a = x, b = x;
        const double h = 1e-7;
        a(i) = std::min(a(i) + h, obj.domain.upper(i));
        b(i) = std::max(b(i) - h, obj.domain.lower(i));
        (*g)(i) = (obj.value(a) - obj.value(b)) / (a(i) - b(i));
      }
    }
    return v;
  };
  Rng rng(12345);
  AscentOptions opt;
  opt.max_iterations = 500;
  opt.tolerance = 1e-12;
  const AscentResult best = multistart_maximize(f, obj.domain, 20, 1000000, rng, opt);
  std::printf("%s: computed max %.15g at [", name.c_str(), best.value);
  for (Eigen::Index i = 0; i < best.x.size(); ++i) std::printf("%s%.6f", i ? ", " : "", best.x(i));
  std::printf("]; library value %.15g\n", obj.optimum);
}

void oracle_ep_bivariate() {
  Rng rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  const int draws = 1000000;
  double s0 = 0, s1 = 0, q0 = 0, q1 = 0;
  long acc = 0;
  for (int i = 0; i < draws; ++i) {
    const double a = g(rng), b = g(rng);
    if (a <= b) continue;
    ++acc;
    s0 += a, s1 += b, q0 += a * a, q1 += b * b;
  }
  const double m0 = s0 / acc, m1 = s1 / acc;
  const EPApprox ep = ep_approximate(Vector::Zero(2), Matrix::Identity(2, 2), 0);
  std::printf("rejection (%ld accepted): mean (%.5f, %.5f) var (%.5f, %.5f)\n", acc, m0, m1, q0 / acc - m0 * m0,
              q1 / acc - m1 * m1);
  std::printf("analytic: mean (%.5f, %.5f) var (%.5f, %.5f)\n", 1 / std::sqrt(M_PI), -1 / std::sqrt(M_PI),
              1 - 1 / M_PI, 1 - 1 / M_PI);
  std::printf("ep: mean (%.5f, %.5f) var (%.5f, %.5f)\n", ep.mean(0), ep.mean(1), ep.cov(0, 0), ep.cov(1, 1));
}

void oracle_orthant_3pt() {
  Matrix cov = Matrix::Constant(3, 3, 0.5);
  cov.diagonal().setOnes();
  Rng rng(11);
  const OrthantEstimate est = orthant_probabilities(Vector::Zero(3), cov, 1000000, rng);
  std::printf("exchangeable 3-point orthant probabilities: %.5f %.5f %.5f (expected 1/3 each)\n", est.probabilities(0),
              est.probabilities(1), est.probabilities(2));
}

void oracle_truncated_moment() {
  Rng rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  double sum = 0;
  long acc = 0;
  for (int i = 0; i < 1000000; ++i) {
    const double a = g(rng), b = g(rng);
    if (a > b) sum += a, ++acc;
  }
  std::printf("E[f0 | f0 > f1]: Monte Carlo %.5f, analytic 1/sqrt(pi) = %.5f\n", sum / acc, 1 / std::sqrt(M_PI));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trusted-maximizer entropy search benchmarks"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a benchmark from a JSON config");
  std::string config, out_path = "results.csv", plot_path;
  std::optional<std::uint64_t> seed;
  run->add_option("--config", config, "Benchmark config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_path, "Per-point CSV; aggregate and final CSVs are written next to it");
  run->add_option("--plot", plot_path, "SVG chart of log-mean immediate regret");
  run->add_option("--seed", seed, "Override the config seed");

  auto* oracle = app.add_subcommand("oracle", "Print reference values computed from independent oracles");
  std::string check;
  const std::map<std::string, std::function<void()>> checks = {
      {"branin-max", [] { oracle_maximum("branin"); }},
      {"hartmann3-max", [] { oracle_maximum("hartmann3"); }},
      {"hartmann4-max", [] { oracle_maximum("hartmann4"); }},
      {"ep-bivariate", oracle_ep_bivariate},
      {"orthant-3pt", oracle_orthant_3pt},
      {"truncated-moment", oracle_truncated_moment}};
  std::vector<std::string> names;
  for (const auto& [k, v] : checks) names.push_back(k);
  oracle->add_option("check", check, "Oracle to run")->required()->check(CLI::IsMember(names));

  auto* plot = app.add_subcommand("plot", "Plot one or more run CSVs");
  std::vector<std::string> csvs;
  std::string svg_out;
  plot->add_option("csv", csvs, "Run CSV files")->required();
  plot->add_option("--out", svg_out, "Output SVG")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return run_command(config, out_path, plot_path, seed);
    if (*oracle) {
      checks.at(check)();
      return 0;
    }
    if (*plot) {
      emit_plot(csvs, svg_out);
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const CsvParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
