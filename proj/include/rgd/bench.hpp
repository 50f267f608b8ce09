#pragma once

// Repeated seeded trials over the synthetic and classification protocols,
// per-iteration metric traces and their across-trial aggregation.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rgd/datagen.hpp"
#include "rgd/mest.hpp"
#include "rgd/models.hpp"

namespace rgd::bench {

enum class Task {
  quadratic_poc,
  init_sweep,
  distribution_sweep,
  n_sweep,
  d_sweep,
  regression_grid,
  classification_budget,
};

std::string_view to_string(Task task);
std::optional<Task> parse_task(std::string_view name);

/// Methods understood by run_experiment. Quadratic tasks: oracle, erm, rgd,
/// mom, reweight. regression_grid: ols, rgd, minsker, mom. classification_budget:
/// erm, sgd, svrg, rgd (mini-batch), rgd_subset (coordinate subset).
bool method_supported(Task task, std::string_view method);
std::vector<std::string> default_methods(Task task);

struct ExperimentConfig {
  std::string name = "experiment";
  Task task = Task::quadratic_poc;
  std::uint64_t seed = 1;
  /// Trial k uses seed + seed_stride * k.
  std::uint64_t seed_stride = 1;
  int trials = 250;

  Eigen::Index n = 500;
  Eigen::Index d = 2;
  Eigen::Index test_size = 1000;
  double alpha = 0.1;
  std::map<std::string, double> method_alpha;
  long max_iters = 50;
  double grad_tol = 0.0;

  // Robust estimator settings.
  double delta = 0.005;
  mest::RhoKind rho = mest::RhoKind::gudermannian;
  int scale_refresh_every = 1;

  std::vector<std::string> methods;

  // Quadratic tasks. `noises` lists the conditions of distribution_sweep;
  // the other tasks use the first entry.
  std::vector<NoiseSpec> noises;
  double init_delta = 5.0;
  std::vector<double> init_deltas;
  std::vector<Eigen::Index> n_values;
  std::vector<Eigen::Index> d_values;

  // regression_grid: conditions are families x levels x d_values x n_values,
  // with n = n_per_d * d when n_per_d > 0.
  std::vector<NoiseFamily> families;
  std::vector<int> levels;
  long n_per_d = 0;

  // classification_budget.
  ClassificationSpec classification;
  double reg = 0.001;
  long budget_multiple = 20;
  Eigen::Index batch_size = 10;
  std::size_t coordinate_subset = 100;
  double init_box = 0.05;
  std::optional<Dataset> train_data;
  std::optional<Dataset> test_data;

  void validate() const;
  double alpha_for(const std::string& method) const;
};

struct ResultRow {
  std::string condition;
  std::string method;
  int trial = 0;
  long iteration = 0;
  std::string metric;
  double value = 0.0;
};

struct TrialResult {
  int trial = 0;
  std::vector<ResultRow> rows;
  long fallback_steps = 0;
  std::vector<std::string> notes;
};

struct SummaryRow {
  std::string condition;
  std::string method;
  long iteration = 0;
  std::string metric;
  double mean = 0.0;
  double variance = 0.0;  // across trials, unbiased; 0 for a single trial
  long count = 0;
};

struct ExperimentResult {
  std::string experiment;
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;
  int completed_trials = 0;
  std::vector<std::string> failures;
  std::vector<std::string> notes;
};

TrialResult run_trial(const ExperimentConfig& cfg, int trial);
ExperimentResult run_experiment(const ExperimentConfig& cfg, int parallelism = 1);

/// Mean and variance per (condition, method, iteration, metric), ordered by key.
std::vector<SummaryRow> aggregate(const std::vector<ResultRow>& rows);

/// e(w_hat) - e(w_star), with e the root-mean-square prediction error on `test`.
double excess_rmse(const Eigen::VectorXd& w_hat, const Eigen::VectorXd& w_star,
                   const Dataset& test);

/// Least-squares fit; the empirical-risk minimizer for the squared loss.
Eigen::VectorXd least_squares(const Dataset& data);

/// Looks up one summary value; throws when absent.
const SummaryRow& find_summary(const std::vector<SummaryRow>& summary, const std::string& condition,
                               const std::string& method, long iteration, const std::string& metric);

enum class DeviationBound {
  /// 1/2 |theta - mu| <= C Var / s + s log(2 / delta) / n, M-estimate at the
  /// confidence-adjusted scale.
  catoni,
  /// |mean - mu| <= sqrt(Var / (n delta)) for the sample mean.
  chebyshev,
};

struct ConcentrationSpec {
  std::function<double(Rng&)> sampler;
  double mean = 0.0;
  double variance = 1.0;
  long n = 500;
  double delta = 0.05;
  int trials = 2000;
  double C = 2.0;
  mest::RhoFunction rho = mest::RhoFunction::gudermannian();
  DeviationBound bound = DeviationBound::catoni;
  /// Skip the check when a pilot sample fails the sample-size sufficiency
  /// condition 1/4 >= (C log(2/delta) / n) (1 + C Var / sigma^2).
  bool enforce_sufficiency = true;
  std::uint64_t seed = 1;
};

struct ConcentrationResult {
  bool skipped = false;
  bool sufficiency_met = false;
  double pilot_sufficiency = 0.0;  // right-hand side of the condition on the pilot
  int trials_run = 0;
  int violations = 0;
  double violation_rate = 0.0;
};

ConcentrationResult concentration_check(const ConcentrationSpec& spec);

void write_results_csv(std::ostream& os, const ExperimentResult& result);
void write_summary_csv(std::ostream& os, const ExperimentResult& result);
std::string format_number(double v);

}  // namespace rgd::bench
