#ifndef TESBO_BENCH_HPP
#define TESBO_BENCH_HPP

#include "tesbo/acquisition_opt.hpp"
#include "tesbo/baselines.hpp"
#include "tesbo/gp.hpp"
#include "tesbo/objectives.hpp"
#include "tesbo/tes_ep.hpp"
#include "tesbo/tes_sampling.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tesbo {

// Tuning knobs beyond the benchmark definition. Defaults follow the module
// design; smaller values trade accuracy for run time.
struct BenchSettings {
  HyperFitConfig hyper;
  TrustedSetConfig trusted;
  SpConfig sp;
  EpStateConfig ep;
  OptConfig opt;
  BaselineOptConfig baseline;
  LieStrategy lie = LieStrategy::max;
  int mean_restarts = 10;  // x̄ search
  int mean_pool = 1000;
  bool record_wall_time = false;  // off keeps the CSV byte-reproducible
};

struct BenchmarkSpec {
  ObjectiveSpec objective;
  double noise_variance = 1e-4;
  std::string acquisition = "tes-ep";  // tes-sp | tes-ep | ei | ucb | qei-cl
  int batch_size = 1;
  int iterations = 10;
  int repeats = 1;
  int init_points = 2;
  int trusted_set_size = 0;  // 0 picks 5 for batch_size ≤ 3, else batch_size
  std::uint64_t seed = 0;
  BenchSettings settings;

  int effective_trusted_set_size() const;
  // Throws UsageError.
  void validate() const;
};

// Unknown keys anywhere are rejected with UsageError.
BenchmarkSpec parse_benchmark_spec(const std::string& json_text);
BenchmarkSpec load_benchmark_spec(const std::string& path);

struct RunRecord {
  int repeat = 0;
  int iteration = 0;  // 1-based
  PointSet queried;
  Vector observations;
  Vector incumbent;  // argmax of the posterior mean after the update
  double immediate_regret = 0.0;
  double wall_time_ms = 0.0;
};

struct RunResult {
  std::string acquisition;
  Eigen::Index dim = 0;
  std::vector<RunRecord> records;
  std::vector<std::string> notes;  // aborted repeats, EP fallbacks, optimizer events
};

struct RegretPoint {
  Vector incumbent;
  double regret = 0.0;
};

// x̄ = argmax of the posterior mean by multistart ascent; IR = f* − f(x̄),
// floored at zero when f* is itself an estimate.
RegretPoint immediate_regret(const GPPosterior& posterior, const Objective& objective, int restarts, int pool,
                             Rng& rng);

// Zero-mean, unit-variance observations; a constant series maps to zeros.
Vector standardize(const Vector& y);

RunResult run_benchmark(const BenchmarkSpec& spec);
// Same loop with a caller-supplied objective; spec.objective is ignored.
RunResult run_benchmark(const BenchmarkSpec& spec, const Objective& objective);

// Per-point rows after a "# acquisition=<name>" line.
void write_run_csv(const RunResult& result, std::ostream& out);
// iteration,log_mean_ir over repeats
void write_aggregate_csv(const RunResult& result, std::ostream& out);
// repeat,final_ir
void write_final_csv(const RunResult& result, std::ostream& out);

// ln(mean IR) per iteration, over the repeats that reached it.
std::vector<double> log_mean_regret(const RunResult& result);
std::vector<double> final_regrets(const RunResult& result);

}  // namespace tesbo

#endif  // TESBO_BENCH_HPP
