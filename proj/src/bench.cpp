#include "rgd/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <mutex>
#include <ostream>
#include <thread>
#include <tuple>

#include <Eigen/QR>

#include "rgd/errors.hpp"
#include "rgd/optim.hpp"

namespace rgd::bench {

namespace {

constexpr std::string_view kTaskNames[] = {
    "quadratic_poc", "init_sweep",      "distribution_sweep",   "n_sweep",
    "d_sweep",       "regression_grid", "classification_budget",
};

bool is_quadratic(Task t) {
  return t == Task::quadratic_poc || t == Task::init_sweep || t == Task::distribution_sweep ||
         t == Task::n_sweep || t == Task::d_sweep;
}

std::vector<std::string_view> methods_of(Task t) {
  if (is_quadratic(t)) {
    return {"oracle", "erm", "rgd", "mom", "reweight"};
  }
  if (t == Task::regression_grid) {
    return {"ols", "rgd", "minsker", "mom"};
  }
  return {"erm", "sgd", "svrg", "rgd", "rgd_subset"};
}

std::string format_delta(double v) { return "delta=" + format_number(v); }

struct Condition {
  std::string label;
  NoiseSpec noise;
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  double init_delta = 0.0;
};

NoiseSpec first_noise(const ExperimentConfig& cfg) {
  return cfg.noises.empty() ? NoiseSpec::at_level(NoiseFamily::normal, 15) : cfg.noises.front();
}

std::vector<Condition> conditions_of(const ExperimentConfig& cfg) {
  std::vector<Condition> out;
  const Condition base{"", first_noise(cfg), cfg.n, cfg.d, cfg.init_delta};
  switch (cfg.task) {
    case Task::quadratic_poc:
    case Task::classification_budget: {
      Condition c = base;
      c.label = cfg.task == Task::quadratic_poc ? c.noise.label() : "budget";
      out.push_back(c);
      break;
    }
    case Task::init_sweep:
      for (double delta : cfg.init_deltas) {
        Condition c = base;
        c.init_delta = delta;
        c.label = format_delta(delta);
        out.push_back(c);
      }
      break;
    case Task::distribution_sweep:
      for (const NoiseSpec& noise : cfg.noises) {
        Condition c = base;
        c.noise = noise;
        c.label = noise.label();
        out.push_back(c);
      }
      break;
    case Task::n_sweep:
      for (Eigen::Index n : cfg.n_values) {
        Condition c = base;
        c.n = n;
        c.label = "n=" + std::to_string(n);
        out.push_back(c);
      }
      break;
    case Task::d_sweep:
      for (Eigen::Index d : cfg.d_values) {
        Condition c = base;
        c.d = d;
        c.label = "d=" + std::to_string(d);
        out.push_back(c);
      }
      break;
    case Task::regression_grid: {
      const std::vector<Eigen::Index> ds = cfg.d_values.empty() ? std::vector{cfg.d} : cfg.d_values;
      const std::vector<Eigen::Index> ns = cfg.n_values.empty() ? std::vector{cfg.n} : cfg.n_values;
      for (NoiseFamily fam : cfg.families) {
        for (int level : cfg.levels) {
          for (Eigen::Index d : ds) {
            // With n_per_d the sample size follows d and n_values is ignored.
            const std::vector<Eigen::Index> these_n =
                cfg.n_per_d > 0 ? std::vector<Eigen::Index>{cfg.n_per_d * d} : ns;
            for (Eigen::Index n : these_n) {
              Condition c = base;
              c.noise = NoiseSpec::at_level(fam, level);
              c.n = n;
              c.d = d;
              c.label = c.noise.label() + " n=" + std::to_string(n) + " d=" + std::to_string(d);
              out.push_back(c);
            }
          }
        }
      }
      break;
    }
  }
  return out;
}

RobustConfig robust_config(const ExperimentConfig& cfg) {
  RobustConfig rc;
  rc.rho = mest::RhoFunction(cfg.rho);
  rc.delta = cfg.delta;
  rc.scale_refresh_every = cfg.scale_refresh_every;
  return rc;
}

void push_trace(TrialResult& out, const std::string& condition, const std::string& method,
                const Trajectory& traj, const auto& metrics) {
  for (std::size_t k = 1; k < traj.states.size(); ++k) {
    const Eigen::VectorXd& w = traj.states[k].w;
    for (const auto& [name, fn] : metrics) {
      out.rows.push_back({condition, method, out.trial, static_cast<long>(k), name, fn(w)});
    }
  }
  for (const StepRecord& s : traj.steps) {
    out.fallback_steps += s.used_fallback ? 1 : 0;
  }
  if (traj.diverged()) {
    out.notes.push_back(condition + "/" + method + ": " + traj.message);
  }
}

std::uint64_t method_seed(std::uint64_t trial_seed, const std::string& method, std::size_t cond) {
  return derive_seed(trial_seed, tag_of(method), cond);
}

void quadratic_trial(const ExperimentConfig& cfg, std::uint64_t trial_seed, TrialResult& out) {
  const std::vector<Condition> conds = conditions_of(cfg);
  for (std::size_t ci = 0; ci < conds.size(); ++ci) {
    const Condition& cond = conds[ci];
    // Same stream for every condition: common random numbers across a sweep.
    Rng rng(trial_seed);
    const Eigen::VectorXd w_star = gen_w_star(cond.d, rng);
    const SyntheticRisk risk = SyntheticRisk::isotropic(w_star, cond.noise);
    const Eigen::VectorXd w0 = draw_initial(InitSpec::box(cond.init_delta), w_star, rng);
    const Dataset data = risk.sample(cond.n, rng);

    const LinearRegression model(cond.d);
    const double emp_star = model.empirical_risk(least_squares(data), data);

    const std::vector<std::pair<std::string, std::function<double(const Eigen::VectorXd&)>>>
        metrics = {
            {"excess_risk", [&](const Eigen::VectorXd& w) { return risk.excess_risk(w); }},
            {"excess_emp_risk",
             [&](const Eigen::VectorXd& w) { return model.empirical_risk(w, data) - emp_star; }},
            {"param_dist", [&](const Eigen::VectorXd& w) { return (w - w_star).norm(); }},
        };

    StoppingRule stop;
    stop.max_iters = cfg.max_iters;
    stop.grad_norm_tol = cfg.grad_tol;
    const Constraint free = Constraint::unconstrained();

    for (const std::string& method : cfg.methods) {
      OptimState start{w0, 0, cfg.alpha_for(method), 0};
      Trajectory traj;
      if (method == "oracle") {
        traj = oracle_gd_run([&](const Eigen::VectorXd& w) { return risk.gradient(w); }, start,
                             free, stop);
      } else if (method == "erm") {
        traj = erm_gd_run(model, data, start, free, stop);
      } else if (method == "rgd") {
        RgdOptions opt;
        opt.seed = method_seed(trial_seed, method, ci);
        traj = rgd_run(model, data, robust_config(cfg), start, free, stop, opt);
      } else if (method == "mom") {
        traj = median_of_means_gd_run(model, data, mom_partition_count(cond.n, cond.d), start,
                                      free, stop);
      } else if (method == "reweight") {
        traj = reweighted_gd_run(model, data, mest::RhoFunction(cfg.rho), start, free, stop);
      }
      push_trace(out, cond.label, method, traj, metrics);
    }
  }
}

/// Geometric median of least-squares fits on contiguous blocks.
Eigen::VectorXd minsker_fit(const Dataset& data, long partitions) {
  const Eigen::Index n = data.size();
  const Eigen::Index block = n / partitions;
  Eigen::MatrixXd fits(data.features(), partitions);
  for (long k = 0; k < partitions; ++k) {
    const Eigen::Index begin = k * block;
    const Eigen::Index end = (k + 1 == partitions) ? n : begin + block;
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(end - begin));
    for (Eigen::Index i = begin; i < end; ++i) {
      rows[static_cast<std::size_t>(i - begin)] = i;
    }
    fits.col(k) = least_squares(data.subset(rows));
  }
  return geometric_median(fits).point;
}

void regression_trial(const ExperimentConfig& cfg, std::uint64_t trial_seed, TrialResult& out) {
  const std::vector<Condition> conds = conditions_of(cfg);
  for (std::size_t ci = 0; ci < conds.size(); ++ci) {
    const Condition& cond = conds[ci];
    Rng rng(trial_seed);
    const Eigen::VectorXd w_star = gen_w_star(cond.d, rng);
    const SyntheticRisk risk = SyntheticRisk::isotropic(w_star, cond.noise);
    const Dataset train = risk.sample(cond.n, rng);
    const Dataset test = risk.sample(cfg.test_size, rng);
    const LinearRegression model(cond.d);
    const Eigen::VectorXd w_ols = least_squares(train);

    StoppingRule stop;
    stop.max_iters = cfg.max_iters;
    stop.grad_norm_tol = cfg.grad_tol;
    const Constraint free = Constraint::unconstrained();

    for (const std::string& method : cfg.methods) {
      Eigen::VectorXd w_hat;
      long iters = 0;
      if (method == "ols") {
        w_hat = w_ols;
      } else if (method == "minsker") {
        w_hat = minsker_fit(train, mom_partition_count(cond.n, cond.d));
      } else {
        // Descent methods start from the least-squares fit.
        OptimState start{w_ols, 0, cfg.alpha_for(method), 0};
        Trajectory traj;
        if (method == "rgd") {
          RgdOptions opt;
          opt.seed = method_seed(trial_seed, method, ci);
          traj = rgd_run(model, train, robust_config(cfg), start, free, stop, opt);
        } else {
          traj = median_of_means_gd_run(model, train, mom_partition_count(cond.n, cond.d), start,
                                        free, stop);
        }
        for (const StepRecord& s : traj.steps) {
          out.fallback_steps += s.used_fallback ? 1 : 0;
        }
        if (traj.diverged()) {
          out.notes.push_back(cond.label + "/" + method + ": " + traj.message);
        }
        w_hat = traj.final_state().w;
        iters = traj.iterations();
      }
      out.rows.push_back(
          {cond.label, method, out.trial, iters, "excess_rmse", excess_rmse(w_hat, w_star, test)});
    }
  }
}

void classification_trial(const ExperimentConfig& cfg, std::uint64_t trial_seed, TrialResult& out) {
  Rng rng(trial_seed);
  Dataset train;
  Dataset test;
  if (cfg.train_data) {
    train = *cfg.train_data;
    test = *cfg.test_data;
  } else {
    const Eigen::MatrixXd centers = gen_class_centers(cfg.classification, rng);
    train = gen_classification(cfg.n, cfg.classification, centers, rng);
    test = gen_classification(cfg.test_size, cfg.classification, centers, rng);
  }
  const LogisticRegression model(train.classes, train.features(), cfg.reg);
  Eigen::VectorXd w0(model.dim());
  std::uniform_real_distribution<double> u(-cfg.init_box, cfg.init_box);
  for (Eigen::Index j = 0; j < w0.size(); ++j) {
    w0[j] = u(rng);
  }

  const long n = static_cast<long>(train.size());
  const long budget = cfg.budget_multiple * n;
  StoppingRule stop;
  stop.max_iters = budget;
  stop.grad_norm_tol = cfg.grad_tol;
  stop.budget = budget;
  const Constraint free = Constraint::unconstrained();
  const std::string cond = "budget";

  for (const std::string& method : cfg.methods) {
    const OptimState start{w0, 0, cfg.alpha_for(method), 0};
    const std::uint64_t seed = method_seed(trial_seed, method, 0);
    Trajectory traj;
    if (method == "erm") {
      traj = erm_gd_run(model, train, start, free, stop);
    } else if (method == "sgd") {
      traj = sgd_run(model, train, start, free, stop, seed);
    } else if (method == "svrg") {
      traj = svrg_run(model, train, start, free, stop, seed);
    } else {
      RobustConfig rc = robust_config(cfg);
      RgdOptions opt;
      opt.seed = seed;
      if (method == "rgd") {
        opt.batch_size = std::min<Eigen::Index>(cfg.batch_size, train.size());
      } else {
        rc.coordinate_subset_size =
            std::min<std::size_t>(cfg.coordinate_subset, static_cast<std::size_t>(model.dim()));
      }
      traj = rgd_run(model, train, rc, start, free, stop, opt);
    }

    // Test error at every multiple of n evaluations: the last iterate within it.
    std::size_t k = 0;
    for (long mult = 1; mult <= cfg.budget_multiple; ++mult) {
      while (k + 1 < traj.states.size() && traj.states[k + 1].grad_evals <= mult * n) {
        ++k;
      }
      out.rows.push_back({cond, method, out.trial, mult, "test_error",
                          model.misclassification_rate(traj.states[k].w, test)});
    }
    out.rows.push_back({cond, method, out.trial, traj.iterations(), "grad_evals",
                        static_cast<double>(traj.final_state().grad_evals)});
    for (const StepRecord& s : traj.steps) {
      out.fallback_steps += s.used_fallback ? 1 : 0;
    }
    if (traj.diverged()) {
      out.notes.push_back(cond + "/" + method + ": " + traj.message);
    }
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) {
    return s;
  }
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') {
      q += '"';
    }
    q += c;
  }
  return q + '"';
}

}  // namespace

std::string_view to_string(Task task) { return kTaskNames[static_cast<int>(task)]; }

std::optional<Task> parse_task(std::string_view name) {
  for (int i = 0; i < static_cast<int>(std::size(kTaskNames)); ++i) {
    if (kTaskNames[i] == name) {
      return static_cast<Task>(i);
    }
  }
  return std::nullopt;
}

bool method_supported(Task task, std::string_view method) {
  const auto ms = methods_of(task);
  return std::find(ms.begin(), ms.end(), method) != ms.end();
}

std::vector<std::string> default_methods(Task task) {
  if (is_quadratic(task)) {
    return {"oracle", "erm", "rgd"};
  }
  if (task == Task::regression_grid) {
    return {"ols", "rgd", "minsker"};
  }
  return {"sgd", "svrg", "rgd"};
}

void ExperimentConfig::validate() const {
  if (trials < 1) {
    throw InvalidConfig("trials must be at least 1");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw InvalidConfig("alpha must be positive");
  }
  for (const auto& [m, a] : method_alpha) {
    if (!method_supported(task, m)) {
      throw InvalidConfig("alpha given for unknown method '" + m + "'");
    }
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw InvalidConfig("alpha for method '" + m + "' must be positive");
    }
  }
  if (max_iters < 1) {
    throw InvalidConfig("max_iters must be at least 1");
  }
  if (!(grad_tol >= 0.0)) {
    throw InvalidConfig("grad_tol must be non-negative");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidConfig("delta must lie in (0, 1)");
  }
  if (rho == mest::RhoKind::quadratic_test_only) {
    throw InvalidConfig("rho 'quadratic' is for tests only");
  }
  if (scale_refresh_every < 1) {
    throw InvalidConfig("scale_refresh_every must be at least 1");
  }
  if (methods.empty()) {
    throw InvalidConfig("no methods selected");
  }
  for (const std::string& m : methods) {
    if (!method_supported(task, m)) {
      throw InvalidConfig("method '" + m + "' is not available for task " +
                          std::string(to_string(task)));
    }
  }
  if (n < 1 || d < 1 || test_size < 1) {
    throw InvalidConfig("n, d and test_size must be positive");
  }
  if (!(init_delta > 0.0)) {
    throw InvalidConfig("init_delta must be positive");
  }
  switch (task) {
    case Task::init_sweep:
      if (init_deltas.empty()) {
        throw InvalidConfig("init_sweep needs init_deltas");
      }
      for (double v : init_deltas) {
        if (!(v > 0.0)) {
          throw InvalidConfig("init_deltas entries must be positive");
        }
      }
      break;
    case Task::distribution_sweep:
      if (noises.empty()) {
        throw InvalidConfig("distribution_sweep needs at least one noise");
      }
      break;
    case Task::n_sweep:
      if (n_values.empty()) {
        throw InvalidConfig("n_sweep needs n_values");
      }
      break;
    case Task::d_sweep:
      if (d_values.empty()) {
        throw InvalidConfig("d_sweep needs d_values");
      }
      break;
    case Task::regression_grid:
      if (families.empty() || levels.empty()) {
        throw InvalidConfig("regression_grid needs families and levels");
      }
      for (int l : levels) {
        if (l < 1 || l > kNoiseLevels) {
          throw InvalidConfig("levels must lie in 1..15");
        }
      }
      if (n_per_d < 0) {
        throw InvalidConfig("n_per_d must be non-negative");
      }
      break;
    case Task::classification_budget:
      if (budget_multiple < 1 || batch_size < 1 || coordinate_subset < 1) {
        throw InvalidConfig("budget_multiple, batch_size and coordinate_subset must be positive");
      }
      if (!(reg >= 0.0) || !(init_box > 0.0)) {
        throw InvalidConfig("reg must be non-negative and init_box positive");
      }
      if (train_data.has_value() != test_data.has_value()) {
        throw InvalidConfig("train and test data must be given together");
      }
      if (train_data) {
        train_data->validate();
        test_data->validate();
        if (!train_data->is_classification() || train_data->classes != test_data->classes ||
            train_data->features() != test_data->features()) {
          throw InvalidConfig("train and test data must be classification sets of equal shape");
        }
      }
      break;
    default:
      break;
  }
  for (Eigen::Index v : n_values) {
    if (v < 1) {
      throw InvalidConfig("n_values entries must be positive");
    }
  }
  for (Eigen::Index v : d_values) {
    if (v < 1) {
      throw InvalidConfig("d_values entries must be positive");
    }
  }
}

double ExperimentConfig::alpha_for(const std::string& method) const {
  const auto it = method_alpha.find(method);
  return it == method_alpha.end() ? alpha : it->second;
}

Eigen::VectorXd least_squares(const Dataset& data) {
  if (data.size() < data.features()) {
    throw InvalidInput("least squares needs at least as many rows as features");
  }
  return data.inputs.colPivHouseholderQr().solve(data.targets);
}

double excess_rmse(const Eigen::VectorXd& w_hat, const Eigen::VectorXd& w_star,
                   const Dataset& test) {
  if (test.size() < 1) {
    throw InvalidInput("excess_rmse needs at least one test row");
  }
  if (w_hat.size() != test.features() || w_star.size() != test.features()) {
    throw InvalidInput("excess_rmse: dimension mismatch");
  }
  const double m = static_cast<double>(test.size());
  auto rmse = [&](const Eigen::VectorXd& w) {
    return std::sqrt((test.inputs * w - test.targets).squaredNorm() / m);
  };
  return rmse(w_hat) - rmse(w_star);
}

TrialResult run_trial(const ExperimentConfig& cfg, int trial) {
  TrialResult out;
  out.trial = trial;
  const std::uint64_t seed = cfg.seed + cfg.seed_stride * static_cast<std::uint64_t>(trial);
  if (is_quadratic(cfg.task)) {
    quadratic_trial(cfg, seed, out);
  } else if (cfg.task == Task::regression_grid) {
    regression_trial(cfg, seed, out);
  } else {
    classification_trial(cfg, seed, out);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, int parallelism) {
  cfg.validate();
  const int k = cfg.trials;
  std::vector<std::optional<TrialResult>> done(static_cast<std::size_t>(k));
  std::vector<std::string> errors(static_cast<std::size_t>(k));
  std::atomic<int> next{0};

  auto worker = [&] {
    for (int t = next++; t < k; t = next++) {
      try {
        done[static_cast<std::size_t>(t)] = run_trial(cfg, t);
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(t)] = e.what();
      }
    }
  };
  const int threads = std::clamp(parallelism, 1, k);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < threads; ++i) {
      pool.emplace_back(worker);
    }
  }

  ExperimentResult res;
  res.experiment = cfg.name;
  for (int t = 0; t < k; ++t) {
    const auto& tr = done[static_cast<std::size_t>(t)];
    if (!tr) {
      res.failures.push_back("trial " + std::to_string(t) + ": " +
                             errors[static_cast<std::size_t>(t)]);
      continue;
    }
    ++res.completed_trials;
    res.rows.insert(res.rows.end(), tr->rows.begin(), tr->rows.end());
    for (const std::string& note : tr->notes) {
      res.notes.push_back("trial " + std::to_string(t) + ": " + note);
    }
  }
  res.summary = aggregate(res.rows);
  return res;
}

std::vector<SummaryRow> aggregate(const std::vector<ResultRow>& rows) {
  struct Acc {
    long count = 0;
    double mean = 0.0;
    double m2 = 0.0;
  };
  // Sorted by value within a key, so the reduction does not depend on row order.
  std::map<std::tuple<std::string, std::string, std::string, long>, std::vector<double>> groups;
  for (const ResultRow& r : rows) {
    groups[{r.condition, r.method, r.metric, r.iteration}].push_back(r.value);
  }
  std::vector<SummaryRow> out;
  out.reserve(groups.size());
  for (auto& [key, values] : groups) {
    std::sort(values.begin(), values.end());
    Acc a;
    for (double v : values) {
      ++a.count;
      const double delta = v - a.mean;
      a.mean += delta / static_cast<double>(a.count);
      a.m2 += delta * (v - a.mean);
    }
    SummaryRow s;
    std::tie(s.condition, s.method, s.metric, s.iteration) = key;
    s.mean = a.mean;
    s.variance = a.count > 1 ? a.m2 / static_cast<double>(a.count - 1) : 0.0;
    s.count = a.count;
    out.push_back(std::move(s));
  }
  return out;
}

const SummaryRow& find_summary(const std::vector<SummaryRow>& summary, const std::string& condition,
                               const std::string& method, long iteration,
                               const std::string& metric) {
  for (const SummaryRow& s : summary) {
    if (s.condition == condition && s.method == method && s.iteration == iteration &&
        s.metric == metric) {
      return s;
    }
  }
  throw InvalidInput("no summary row for " + condition + "/" + method + "/" + metric + " at " +
                     std::to_string(iteration));
}

ConcentrationResult concentration_check(const ConcentrationSpec& spec) {
  if (!spec.sampler) {
    throw InvalidConfig("concentration check needs a sampler");
  }
  if (spec.n < 1 || spec.trials < 1 || !(spec.variance > 0.0) || !(spec.C > 0.0)) {
    throw InvalidConfig("concentration check needs n, trials, variance and C positive");
  }
  if (!(spec.delta > 0.0 && spec.delta < 1.0)) {
    throw InvalidConfig("delta must lie in (0, 1)");
  }
  const double n = static_cast<double>(spec.n);
  const double log_term = std::log(2.0 / spec.delta);
  const mest::ChiFunction chi;
  const mest::FixedPointSettings fp;
  std::vector<double> x(static_cast<std::size_t>(spec.n));

  auto draw = [&](std::uint64_t seed) {
    Rng rng(seed);
    for (double& v : x) {
      v = spec.sampler(rng);
    }
  };
  auto sample_mean = [&] {
    double s = 0.0;
    for (double v : x) {
      s += v;
    }
    return s / n;
  };
  auto sigma_hat = [&] { return mest::rescale(x, sample_mean(), chi, fp).value; };
  auto sufficiency = [&](double sigma) {
    return (spec.C * log_term / n) * (1.0 + spec.C * spec.variance / (sigma * sigma));
  };

  ConcentrationResult res;
  if (spec.bound == DeviationBound::catoni) {
    draw(derive_seed(spec.seed, tag_of("pilot")));
    res.pilot_sufficiency = sufficiency(sigma_hat());
    res.sufficiency_met = res.pilot_sufficiency <= 0.25;
    if (spec.enforce_sufficiency && !res.sufficiency_met) {
      res.skipped = true;
      res.violation_rate = std::nan("");
      return res;
    }
  } else {
    res.sufficiency_met = true;
  }

  for (int t = 0; t < spec.trials; ++t) {
    draw(derive_seed(spec.seed, static_cast<std::uint64_t>(t)));
    bool violated = false;
    if (spec.bound == DeviationBound::catoni) {
      const double s = mest::confidence_scale(sigma_hat(), spec.n, spec.delta);
      const double theta = mest::locate(x, s, spec.rho, fp).value;
      const double bound = spec.C * spec.variance / s + s * log_term / n;
      violated = 0.5 * std::abs(theta - spec.mean) > bound;
    } else {
      violated = std::abs(sample_mean() - spec.mean) > std::sqrt(spec.variance / (n * spec.delta));
    }
    res.violations += violated ? 1 : 0;
    ++res.trials_run;
  }
  res.violation_rate = static_cast<double>(res.violations) / res.trials_run;
  return res;
}

std::string format_number(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_results_csv(std::ostream& os, const ExperimentResult& result) {
  os << "experiment,condition,method,trial,iteration,metric,value\n";
  const std::string exp = csv_field(result.experiment);
  for (const ResultRow& r : result.rows) {
    os << exp << ',' << csv_field(r.condition) << ',' << csv_field(r.method) << ',' << r.trial
       << ',' << r.iteration << ',' << csv_field(r.metric) << ',' << format_number(r.value)
       << '\n';
  }
}

void write_summary_csv(std::ostream& os, const ExperimentResult& result) {
  os << "experiment,condition,method,iteration,metric,mean,variance,count\n";
  const std::string exp = csv_field(result.experiment);
  for (const SummaryRow& s : result.summary) {
    os << exp << ',' << csv_field(s.condition) << ',' << csv_field(s.method) << ','
       << s.iteration << ',' << csv_field(s.metric) << ',' << format_number(s.mean) << ','
       << format_number(s.variance) << ',' << s.count << '\n';
  }
}

}  // namespace rgd::bench
