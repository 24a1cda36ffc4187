#include "tesbo/bench.hpp"
#include "tesbo/plot.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

using namespace tesbo;
namespace tt = tesbo::testing;

namespace {

std::string csv_of(const RunResult& r) {
  std::ostringstream out;
  write_run_csv(r, out);
  return out.str();
}

BenchmarkSpec quick_spec(const std::string& acquisition) {
  BenchmarkSpec s;
  s.objective.name = "branin";
  s.acquisition = acquisition;
  s.iterations = 2;
  s.repeats = 2;
  s.seed = 3;
  s.settings.hyper.restarts = 3;
  s.settings.opt.iterations = 20;
  s.settings.opt.y_samples = 32;
  s.settings.trusted.feature_count = 256;
  s.settings.trusted.mc_samples = 2000;
  s.settings.sp.total_draws = 300;
  s.settings.sp.samples_per_owner = 50;
  return s;
}

}  // namespace

TEST(Objectives, BraninKnownOptima) {
  // The three global minimizers of Branin in its native box.
  const double pts[3][2] = {{-M_PI, 12.275}, {M_PI, 2.275}, {9.42478, 2.475}};
  for (const auto& p : pts) {
    const Vector u = Eigen::Vector2d((p[0] + 5.0) / 15.0, p[1] / 15.0);
    EXPECT_NEAR(negated_branin(u), -0.397887, 1e-5);
  }
  const Objective o = make_objective(ObjectiveSpec{});
  EXPECT_NEAR(o.optimum, -0.397887, 1e-6);
}

TEST(Objectives, HartmannOptima) {
  ObjectiveSpec s;
  s.name = "hartmann3";
  const Objective h3 = make_objective(s);
  EXPECT_NEAR(h3.optimum, 3.86278, 1e-5);
  EXPECT_NEAR(h3.value(h3.optimizer), h3.optimum, 1e-6);
  s.name = "hartmann4";
  const Objective h4 = make_objective(s);
  EXPECT_NEAR(h4.value(Eigen::Vector4d(0.187395, 0.194152, 0.557918, 0.264780)), h4.optimum, 1e-6);
  // No screened point beats the stated maxima.
  Rng rng(1);
  for (int i = 0; i < 100000; ++i) {
    EXPECT_LE(h3.value(h3.domain.sample_uniform(rng)), h3.optimum);
    EXPECT_LE(h4.value(h4.domain.sample_uniform(rng)), h4.optimum);
  }
}

TEST(Objectives, GpSampleDeterministicAndOptimumDominates) {
  ObjectiveSpec s;
  s.name = "gp-sample";
  s.seed = 42;
  s.optimum_pool = 20000;
  const Objective a = make_objective(s);
  const Objective b = make_objective(s);
  EXPECT_EQ(a.domain.upper, Vector::Constant(2, 10.0));
  Rng rng(2);
  for (int i = 0; i < 10000; ++i) {
    const Vector x = a.domain.sample_uniform(rng);
    EXPECT_EQ(a.value(x), b.value(x));
    EXPECT_LE(a.value(x), a.optimum + 1e-9);
  }
  EXPECT_EQ(a.optimum, b.optimum);
  s.seed = 43;
  EXPECT_NE(make_objective(s).value(Vector::Constant(2, 5.0)), a.value(Vector::Constant(2, 5.0)));
}

TEST(Objectives, UnknownNameAndWrongDomain) {
  ObjectiveSpec s;
  s.name = "rosenbrock";
  EXPECT_THROW(make_objective(s), UsageError);
  s.name = "branin";
  s.domain = Domain(Vector::Zero(2), Vector::Constant(2, 2.0));
  EXPECT_THROW(make_objective(s), UsageError);
}

TEST(Standardize, ZeroMeanUnitVariance) {
  Vector y(4);
  y << 1.0, 3.0, -2.0, 10.0;
  const Vector z = standardize(y);
  EXPECT_NEAR(z.mean(), 0.0, 1e-15);
  EXPECT_NEAR(z.squaredNorm() / 4.0, 1.0, 1e-14);
  EXPECT_EQ(standardize(Vector::Constant(3, 2.0)), Vector::Zero(3));
}

TEST(ImmediateRegret, DenseGridPosteriorIsNearlyPerfect) {
  const Objective o = make_objective(ObjectiveSpec{});
  PointSet x(400, 2);
  Vector y(400);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) {
      x.row(20 * i + j) << i / 19.0, j / 19.0;
      y(20 * i + j) = o.value(x.row(20 * i + j).transpose());
    }
  KernelHyperparams hp;
  hp.signal_variance = 1.0;
  hp.lengthscales = Vector::Constant(2, 0.3);
  hp.noise_variance = 1e-8;
  const GPPosterior post = fit_posterior(Dataset(x, standardize(y)), hp);
  Rng rng(3);
  const RegretPoint r = immediate_regret(post, o, 10, 1000, rng);
  EXPECT_LE(r.regret, 1e-2);
  EXPECT_GE(r.regret, 0.0);
}

TEST(ImmediateRegret, EmptyDataAndDuplicates) {
  const Objective o = make_objective(ObjectiveSpec{});
  KernelHyperparams hp;
  hp.lengthscales = Vector::Constant(2, 0.3);
  hp.noise_variance = 1e-6;
  Rng rng(4);
  const RegretPoint empty = immediate_regret(fit_posterior(Dataset(PointSet(0, 2), Vector(0)), hp), o, 5, 100, rng);
  EXPECT_GE(empty.regret, 0.0);

  const PointSet x = tt::uniform_points(8, 2, 0.0, 1.0, rng);
  Vector y(8);
  for (int i = 0; i < 8; ++i) y(i) = o.value(x.row(i).transpose());
  PointSet xd(10, 2);
  Vector yd(10);
  xd << x, x.topRows(2);
  yd << y, y.head(2);
  Rng r1(5), r2(5);
  const RegretPoint a = immediate_regret(fit_posterior(Dataset(x, standardize(y)), hp), o, 10, 1000, r1);
  const Vector yds = (yd.array() - y.mean()) / std::sqrt((y.array() - y.mean()).square().mean());
  const RegretPoint b = immediate_regret(fit_posterior(Dataset(xd, yds), hp), o, 10, 1000, r2);
  EXPECT_NEAR(a.regret, b.regret, 1e-4);
}

TEST(BenchmarkSpec, ParsesConfigAndRejectsUnknownKeys) {
  const std::string ok = R"({
    "objective": {"name": "gp-sample", "signal_variance": 2.0, "lengthscale": 1.0, "seed": 9},
    "domain": {"lower": [0, 0], "upper": [10, 10]},
    "noise_variance": 1e-4, "acquisition": "tes-sp", "batch_size": 2, "iterations": 3,
    "repeats": 2, "init_points": 2, "trusted_set_size": 4, "seed": 5,
    "settings": {"opt_iterations": 50, "sp_method": "importance", "lie": "min", "record_wall_time": true}
  })";
  const BenchmarkSpec s = parse_benchmark_spec(ok);
  EXPECT_EQ(s.objective.name, "gp-sample");
  EXPECT_EQ(s.objective.seed, 9u);
  EXPECT_EQ(s.objective.domain.upper, Vector::Constant(2, 10.0));
  EXPECT_EQ(s.acquisition, "tes-sp");
  EXPECT_EQ(s.batch_size, 2);
  EXPECT_EQ(s.effective_trusted_set_size(), 4);
  EXPECT_EQ(s.settings.opt.iterations, 50);
  EXPECT_EQ(s.settings.sp.method, ConditioningMethod::importance);
  EXPECT_EQ(s.settings.lie, LieStrategy::min);
  EXPECT_TRUE(s.settings.record_wall_time);

  EXPECT_THROW(parse_benchmark_spec(R"({"acqusition": "ei"})"), UsageError);
  EXPECT_THROW(parse_benchmark_spec(R"({"objective": {"nme": "branin"}})"), UsageError);
  EXPECT_THROW(parse_benchmark_spec(R"({"settings": {"opt_iters": 3}})"), UsageError);
  EXPECT_THROW(parse_benchmark_spec(R"({"iterations": "ten"})"), UsageError);
  EXPECT_THROW(parse_benchmark_spec(R"({"acquisition": "pes"})"), UsageError);
  EXPECT_THROW(parse_benchmark_spec(R"({"acquisition": "ei", "batch_size": 2})"), UsageError);
  EXPECT_THROW(parse_benchmark_spec(R"({"batch_size": 4, "trusted_set_size": 3})"), UsageError);
  EXPECT_THROW(parse_benchmark_spec(R"({"iterations": 0})"), UsageError);
  EXPECT_THROW(parse_benchmark_spec("{not json"), UsageError);
}

TEST(RunBenchmark, ShapeDeterminismAndDomain) {
  BenchmarkSpec s = quick_spec("tes-ep");
  s.iterations = 1;
  s.repeats = 1;
  const RunResult r = run_benchmark(s);
  const std::string csv = csv_of(r);
  std::istringstream lines(csv);
  std::string line;
  std::vector<std::string> all;
  while (std::getline(lines, line)) all.push_back(line);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0], "# acquisition=tes-ep");
  EXPECT_EQ(all[1],
            "repeat,iteration,point_index,dim_0,dim_1,observation,incumbent_0,incumbent_1,immediate_regret,wall_time_ms");
  EXPECT_EQ(csv, csv_of(run_benchmark(s)));
}

TEST(RunBenchmark, AllAcquisitionsReproducibleInDomainWithConsistentAggregate) {
  for (const std::string acq : {"tes-ep", "tes-sp", "ei", "ucb", "qei-cl"}) {
    BenchmarkSpec s = quick_spec(acq);
    if (acq == "tes-ep" || acq == "tes-sp" || acq == "qei-cl") s.batch_size = 2;
    const RunResult a = run_benchmark(s);
    const RunResult b = run_benchmark(s);
    EXPECT_EQ(csv_of(a), csv_of(b)) << acq;
    ASSERT_EQ(a.records.size(), 4u) << acq;
    const Domain domain = Domain::unit_cube(2);
    for (const RunRecord& rec : a.records) {
      EXPECT_EQ(rec.queried.rows(), s.batch_size);
      for (Eigen::Index i = 0; i < rec.queried.rows(); ++i) EXPECT_TRUE(domain.contains(rec.queried.row(i).transpose()));
      EXPECT_GE(rec.immediate_regret, 0.0);
      EXPECT_EQ(rec.wall_time_ms, 0.0);
    }
    std::istringstream in(csv_of(a));
    const std::vector<RegretSeries> series = read_regret_series(in, "memory");
    ASSERT_EQ(series.size(), 1u);
    const std::vector<double> lm = log_mean_regret(a);
    ASSERT_EQ(series[0].log_mean_ir.size(), lm.size());
    for (size_t t = 0; t < lm.size(); ++t) {
      const double raw = std::log(0.5 * (a.records[t].immediate_regret + a.records[t + 2].immediate_regret));
      EXPECT_NEAR(lm[t], raw, 1e-12);
      EXPECT_NEAR(series[0].log_mean_ir[t], raw, 1e-12);
    }
  }
}

TEST(RunBenchmark, ObjectiveFailureAbortsOnlyThatRepeat) {
  BenchmarkSpec s = quick_spec("ei");
  s.iterations = 3;
  s.repeats = 2;
  auto calls = std::make_shared<int>(0);
  Objective o = make_objective(ObjectiveSpec{});
  const auto inner = o.value;
  // Two initial points, then one observation and one regret evaluation per
  // iteration: call 5 is the observation of repeat 0 iteration 2.
  o.value = [calls, inner](const Vector& x) {
    if (++*calls == 5) throw std::runtime_error("simulator crashed");
    return inner(x);
  };
  const RunResult r = run_benchmark(s, o);
  int first = 0, second = 0;
  for (const RunRecord& rec : r.records) (rec.repeat == 0 ? first : second)++;
  EXPECT_EQ(first, 1);
  EXPECT_EQ(second, 3);
  ASSERT_FALSE(r.notes.empty());
  EXPECT_NE(r.notes[0].find("simulator crashed"), std::string::npos);
  EXPECT_EQ(final_regrets(r).size(), 2u);
}

TEST(Plot, ErrorsSeriesAndDeterminism) {
  const std::string dir = ::testing::TempDir();
  const std::string empty_csv = dir + "tesbo_empty.csv", svg = dir + "tesbo_plot.svg";
  std::remove(svg.c_str());
  {
    std::ofstream(empty_csv) << "# acquisition=ei\nrepeat,iteration,point_index,dim_0,observation,incumbent_0,"
                                "immediate_regret,wall_time_ms\n";
  }
  EXPECT_THROW(emit_plot({empty_csv}, svg), CsvParseError);
  EXPECT_FALSE(std::ifstream(svg).good());

  const std::string two = dir + "tesbo_two.csv";
  {
    std::ofstream out(two);
    out << "# acquisition=tes-ep\nrepeat,iteration,point_index,dim_0,observation,incumbent_0,immediate_regret,"
           "wall_time_ms\n0,1,0,0.5,1,0.5,0.3,0\n0,2,0,0.5,1,0.5,0.1,0\n"
        << "# acquisition=ei\nrepeat,iteration,point_index,dim_0,observation,incumbent_0,immediate_regret,"
           "wall_time_ms\n0,1,0,0.5,1,0.5,0.4,0\n0,2,0,0.5,1,0.5,0.2,0\n";
  }
  emit_plot({two}, svg);
  std::stringstream first;
  first << std::ifstream(svg).rdbuf();
  EXPECT_NE(first.str().find(">tes-ep</text>"), std::string::npos);
  EXPECT_NE(first.str().find(">ei</text>"), std::string::npos);
  size_t lines = 0;
  for (size_t p = first.str().find("<polyline"); p != std::string::npos; p = first.str().find("<polyline", p + 1)) ++lines;
  EXPECT_EQ(lines, 2u);
  emit_plot({two}, svg);
  std::stringstream second;
  second << std::ifstream(svg).rdbuf();
  EXPECT_EQ(first.str(), second.str());

  std::istringstream bad("# acquisition=x\nrepeat,iteration,point_index,immediate_regret,wall_time_ms\n0,1,0,0.2,0\n0,2,0\n");
  try {
    read_regret_series(bad, "bad.csv");
    FAIL();
  } catch (const CsvParseError& e) {
    EXPECT_EQ(e.line(), 4);
    EXPECT_NE(std::string(e.what()).find("bad.csv:4"), std::string::npos);
  }
}

TEST(RunBenchmark, GpSampleTesEpRegretDecreases) {
  BenchmarkSpec s;
  s.objective.name = "gp-sample";
  s.objective.seed = 7;
  s.objective.optimum_pool = 20000;
  s.acquisition = "tes-ep";
  s.iterations = 30;
  s.repeats = 5;
  s.seed = 11;
  s.settings.opt.iterations = 100;
  s.settings.trusted.feature_count = 512;
  s.settings.hyper.restarts = 5;
  const RunResult r = run_benchmark(s);
  const std::vector<double> lm = log_mean_regret(r);
  ASSERT_EQ(lm.size(), 30u);
  EXPECT_LT(lm.back(), lm.front());
}
