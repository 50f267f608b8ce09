#include <doctest.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "rgd/bench.hpp"
#include "rgd/errors.hpp"

using namespace rgd;
using namespace rgd::bench;

namespace {

ExperimentConfig small_quadratic() {
  ExperimentConfig cfg;
  cfg.name = "small";
  cfg.task = Task::quadratic_poc;
  cfg.trials = 2;
  cfg.n = 60;
  cfg.d = 2;
  cfg.max_iters = 5;
  cfg.methods = {"erm", "rgd"};
  cfg.noises = {NoiseSpec::at_level(NoiseFamily::lognormal, 4)};
  return cfg;
}

std::string results_csv(const ExperimentResult& r) {
  std::ostringstream os;
  write_results_csv(os, r);
  return os.str();
}

std::string summary_csv(const ExperimentResult& r) {
  std::ostringstream os;
  write_summary_csv(os, r);
  return os.str();
}

}  // namespace

TEST_CASE("task names and method tables") {
  for (Task t : {Task::quadratic_poc, Task::init_sweep, Task::distribution_sweep, Task::n_sweep,
                 Task::d_sweep, Task::regression_grid, Task::classification_budget}) {
    CHECK(parse_task(to_string(t)) == t);
    for (const std::string& m : default_methods(t)) {
      CHECK(method_supported(t, m));
    }
  }
  CHECK_FALSE(parse_task("fig1").has_value());
  CHECK(method_supported(Task::quadratic_poc, "oracle"));
  CHECK_FALSE(method_supported(Task::quadratic_poc, "svrg"));
  CHECK(method_supported(Task::classification_budget, "rgd_subset"));
  CHECK(method_supported(Task::regression_grid, "minsker"));
}

TEST_CASE("config validation") {
  ExperimentConfig cfg = small_quadratic();
  CHECK_NOTHROW(cfg.validate());
  cfg.methods = {"svrg"};
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
  cfg = small_quadratic();
  cfg.task = Task::init_sweep;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
  cfg.init_deltas = {1.0, -2.0};
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
  cfg = small_quadratic();
  cfg.rho = mest::RhoKind::quadratic_test_only;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
  cfg = small_quadratic();
  cfg.method_alpha["sgd"] = 0.1;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
  cfg = small_quadratic();
  cfg.delta = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
  cfg = small_quadratic();
  cfg.trials = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
  cfg = small_quadratic();
  cfg.method_alpha["rgd"] = 0.3;
  CHECK(cfg.alpha_for("rgd") == 0.3);
  CHECK(cfg.alpha_for("erm") == cfg.alpha);
}

TEST_CASE("row layout of a quadratic run") {
  const ExperimentResult r = run_experiment(small_quadratic());
  CHECK(r.completed_trials == 2);
  CHECK(r.failures.empty());
  // 2 methods x 2 trials x 5 iterations x 3 metrics
  CHECK(r.rows.size() == 60);
  CHECK(r.summary.size() == 30);
  for (const SummaryRow& s : r.summary) {
    CHECK(s.count == 2);
    CHECK(s.iteration >= 1);
    CHECK(s.iteration <= 5);
  }
  for (const ResultRow& row : r.rows) {
    CHECK(row.condition == "lnorm@L4");
    CHECK(std::isfinite(row.value));
  }
}

TEST_CASE("runs are reproducible and independent of the thread count") {
  ExperimentConfig cfg = small_quadratic();
  cfg.trials = 6;
  const ExperimentResult a = run_experiment(cfg, 1);
  const ExperimentResult b = run_experiment(cfg, 4);
  const ExperimentResult c = run_experiment(cfg, 1);
  CHECK(results_csv(a) == results_csv(b));
  CHECK(results_csv(a) == results_csv(c));
  CHECK(summary_csv(a) == summary_csv(b));

  cfg.seed = 2;
  CHECK(results_csv(run_experiment(cfg)) != results_csv(a));
}

TEST_CASE("trial seeds follow seed + stride * trial") {
  ExperimentConfig cfg = small_quadratic();
  cfg.seed = 100;
  cfg.seed_stride = 7;
  const TrialResult t3 = run_trial(cfg, 3);
  ExperimentConfig shifted = cfg;
  shifted.seed = 121;
  const TrialResult t0 = run_trial(shifted, 0);
  REQUIRE(t3.rows.size() == t0.rows.size());
  for (std::size_t i = 0; i < t3.rows.size(); ++i) {
    CHECK(t3.rows[i].value == t0.rows[i].value);
  }

  // A zero stride repeats one trial.
  cfg.seed_stride = 0;
  cfg.trials = 3;
  const ExperimentResult same = run_experiment(cfg);
  for (const SummaryRow& s : same.summary) {
    CHECK(s.variance == 0.0);
  }
}

TEST_CASE("sweep conditions share random numbers") {
  ExperimentConfig cfg = small_quadratic();
  cfg.task = Task::distribution_sweep;
  cfg.methods = {"oracle", "rgd"};
  cfg.noises = {NoiseSpec::at_level(NoiseFamily::normal, 2), NoiseSpec::at_level(NoiseFamily::pareto, 9)};
  const TrialResult t = run_trial(cfg, 0);
  // The oracle path ignores the data, so it is identical across noise conditions.
  std::vector<double> first;
  std::vector<double> second;
  for (const ResultRow& r : t.rows) {
    if (r.method == "oracle" && r.metric == "excess_risk") {
      (r.condition == "norm@L2" ? first : second).push_back(r.value);
    }
  }
  REQUIRE(first.size() == 5);
  CHECK(first == second);

  cfg.task = Task::init_sweep;
  cfg.init_deltas = {0.5, 2.5};
  cfg.methods = {"erm"};
  const TrialResult s = run_trial(cfg, 0);
  std::set<std::string> labels;
  for (const ResultRow& r : s.rows) {
    labels.insert(r.condition);
  }
  CHECK(labels == std::set<std::string>{"delta=0.5", "delta=2.5"});
}

TEST_CASE("aggregate: hand-computed means and variances, order-free") {
  std::vector<ResultRow> rows;
  for (int t = 0; t < 4; ++t) {
    rows.push_back({"c", "m", t, 1, "x", static_cast<double>(t + 1)});
  }
  rows.push_back({"c", "m", 0, 2, "x", 5.0});
  std::vector<SummaryRow> s = aggregate(rows);
  REQUIRE(s.size() == 2);
  CHECK(find_summary(s, "c", "m", 1, "x").mean == 2.5);
  CHECK(find_summary(s, "c", "m", 1, "x").variance == doctest::Approx(5.0 / 3.0));
  CHECK(find_summary(s, "c", "m", 2, "x").variance == 0.0);
  CHECK(find_summary(s, "c", "m", 2, "x").count == 1);
  CHECK_THROWS_AS(find_summary(s, "c", "m", 3, "x"), InvalidInput);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0.0, 1e3);
  std::vector<ResultRow> many;
  for (int t = 0; t < 500; ++t) {
    many.push_back({"c", "m", t, 1, "x", z(rng) + 1e8});
  }
  const std::vector<SummaryRow> a = aggregate(many);
  std::shuffle(many.begin(), many.end(), rng);
  const std::vector<SummaryRow> b = aggregate(many);
  CHECK(a[0].mean == b[0].mean);
  CHECK(a[0].variance == b[0].variance);
}

TEST_CASE("least squares and excess RMSE") {
  Dataset d;
  d.inputs.resize(4, 2);
  d.inputs << 1, 0, 0, 1, 1, 1, 2, -1;
  const Eigen::Vector2d w(0.75, -2.0);
  d.targets = d.inputs * w;
  CHECK((least_squares(d) - w).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(excess_rmse(w, w, d) == 0.0);
  // Off by (1, 0): residuals are the first input column, RMSE sqrt(6 / 4).
  const Eigen::Vector2d off = w + Eigen::Vector2d(1.0, 0.0);
  CHECK(excess_rmse(off, w, d) == doctest::Approx(std::sqrt(1.5)));
  CHECK_THROWS_AS(excess_rmse(Eigen::Vector3d::Zero(), w, d), InvalidInput);
  Dataset thin;
  thin.inputs = Eigen::MatrixXd::Ones(1, 2);
  thin.targets = Eigen::VectorXd::Ones(1);
  CHECK_THROWS_AS(least_squares(thin), InvalidInput);
}

TEST_CASE("regression grid: one terminal row per method and condition") {
  ExperimentConfig cfg;
  cfg.name = "grid";
  cfg.task = Task::regression_grid;
  cfg.trials = 3;
  cfg.families = {NoiseFamily::normal, NoiseFamily::lognormal};
  cfg.levels = {1, 8};
  cfg.d_values = {2};
  cfg.n_per_d = 20;
  cfg.test_size = 200;
  cfg.max_iters = 30;
  cfg.grad_tol = 1e-3;
  cfg.methods = {"ols", "rgd", "minsker", "mom"};
  const ExperimentResult r = run_experiment(cfg);
  CHECK(r.completed_trials == 3);
  CHECK(r.rows.size() == 4 * 4 * 3);
  for (const ResultRow& row : r.rows) {
    CHECK(row.metric == "excess_rmse");
    if (row.method == "ols" || row.method == "minsker") {
      CHECK(row.iteration == 0);
    } else {
      CHECK(row.iteration <= 30);
    }
  }
  CHECK(find_summary(r.summary, "norm@L1 n=40 d=2", "ols", 0, "excess_rmse").count == 3);
  // Gaussian noise at the lowest level: least squares is near the truth.
  CHECK(std::abs(find_summary(r.summary, "norm@L1 n=40 d=2", "ols", 0, "excess_rmse").mean) < 0.05);
}

TEST_CASE("trial failures are reported, not fatal") {
  ExperimentConfig cfg;
  cfg.task = Task::regression_grid;
  cfg.trials = 2;
  cfg.families = {NoiseFamily::normal};
  cfg.levels = {1};
  cfg.n = 1;  // fewer rows than features: least squares throws
  cfg.d = 3;
  cfg.methods = {"ols"};
  const ExperimentResult r = run_experiment(cfg);
  CHECK(r.completed_trials == 0);
  REQUIRE(r.failures.size() == 2);
  CHECK(r.failures[0].find("trial 0") == 0);
  CHECK(r.rows.empty());
}

TEST_CASE("classification budget protocol") {
  ExperimentConfig cfg;
  cfg.name = "cls";
  cfg.task = Task::classification_budget;
  cfg.trials = 2;
  cfg.n = 40;
  cfg.test_size = 50;
  cfg.classification.classes = 3;
  cfg.classification.features = 4;
  cfg.budget_multiple = 5;
  cfg.batch_size = 8;
  cfg.coordinate_subset = 3;
  cfg.methods = {"erm", "sgd", "svrg", "rgd", "rgd_subset"};
  const ExperimentResult r = run_experiment(cfg);
  REQUIRE(r.completed_trials == 2);
  // 5 checkpoints + 1 evaluation count per method and trial.
  CHECK(r.rows.size() == 5 * 6 * 2);
  for (const ResultRow& row : r.rows) {
    CHECK(row.condition == "budget");
    if (row.metric == "grad_evals") {
      CHECK(row.value <= 200.0);
      if (row.method == "sgd" || row.method == "erm") {
        CHECK(row.value == 200.0);
      }
      if (row.method == "rgd") {
        CHECK(row.value == 200.0);  // 25 batches of 8
        CHECK(row.iteration == 25);
      }
    } else {
      CHECK(row.metric == "test_error");
      CHECK(row.value >= 0.0);
      CHECK(row.value <= 1.0);
    }
  }

  // Supplied data are used as is.
  ExperimentConfig fixed = cfg;
  Rng rng(3);
  const Eigen::MatrixXd centers = gen_class_centers(cfg.classification, rng);
  fixed.train_data = gen_classification(30, cfg.classification, centers, rng);
  fixed.test_data = gen_classification(10, cfg.classification, centers, rng);
  fixed.methods = {"sgd"};
  const ExperimentResult f = run_experiment(fixed);
  for (const ResultRow& row : f.rows) {
    if (row.metric == "grad_evals") {
      CHECK(row.value == 150.0);
    } else {
      const double scaled = row.value * 10.0;
      CHECK(scaled == doctest::Approx(std::round(scaled)));
    }
  }
  fixed.test_data.reset();
  CHECK_THROWS_AS(run_experiment(fixed), InvalidConfig);
}

TEST_CASE("concentration check") {
  ConcentrationSpec spec;
  spec.sampler = [](Rng& rng) { return std::normal_distribution<double>(3.0, 2.0)(rng); };
  spec.mean = 3.0;
  spec.variance = 4.0;
  spec.n = 400;
  spec.delta = 0.05;
  spec.trials = 400;
  const ConcentrationResult catoni = concentration_check(spec);
  CHECK_FALSE(catoni.skipped);
  CHECK(catoni.sufficiency_met);
  CHECK(catoni.trials_run == 400);
  CHECK(catoni.violation_rate <= 0.05);

  spec.bound = DeviationBound::chebyshev;
  const ConcentrationResult cheb = concentration_check(spec);
  CHECK(cheb.violation_rate <= 0.05);

  // Too small a sample for the sufficiency condition.
  spec.bound = DeviationBound::catoni;
  spec.n = 20;
  const ConcentrationResult skipped = concentration_check(spec);
  CHECK(skipped.skipped);
  CHECK_FALSE(skipped.sufficiency_met);
  CHECK(skipped.pilot_sufficiency > 0.25);
  CHECK(std::isnan(skipped.violation_rate));
  spec.enforce_sufficiency = false;
  const ConcentrationResult forced = concentration_check(spec);
  CHECK_FALSE(forced.skipped);
  CHECK(forced.trials_run == 400);

  spec.sampler = nullptr;
  CHECK_THROWS_AS(concentration_check(spec), InvalidConfig);
}

TEST_CASE("CSV output") {
  ExperimentResult r;
  r.experiment = "e";
  r.rows.push_back({"lnorm(0/1.75)", "rgd", 0, 1, "excess_risk", 0.1});
  r.rows.push_back({"a,b", "rgd", 1, 2, "x", -2.5e-300});
  r.summary = aggregate(r.rows);
  const std::string res = results_csv(r);
  CHECK(res ==
        "experiment,condition,method,trial,iteration,metric,value\n"
        "e,lnorm(0/1.75),rgd,0,1,excess_risk,0.1\n"
        "e,\"a,b\",rgd,1,2,x,-2.5e-300\n");
  const std::string sum = summary_csv(r);
  CHECK(sum.rfind("experiment,condition,method,iteration,metric,mean,variance,count\n", 0) == 0);
  CHECK(sum.find("e,\"a,b\",rgd,2,x,-2.5e-300,0,1\n") != std::string::npos);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    const std::string s = format_number(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(back == v);
  }
  CHECK(format_number(NAN) == "nan");
  CHECK(format_number(-INFINITY) == "-inf");
}
