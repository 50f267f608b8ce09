#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rgd/models.hpp"
#include "rgd/robust_grad.hpp"

namespace rgd {

struct OptimState {
  Eigen::VectorXd w;
  long t = 0;
  double alpha = 0.1;
  long grad_evals = 0;
};

/// Feasible set for projected descent.
class Constraint {
 public:
  static Constraint unconstrained() { return {}; }
  static Constraint l2_ball(Eigen::VectorXd center, double radius);

  bool is_unconstrained() const { return !center_.has_value(); }
  Eigen::VectorXd project(const Eigen::VectorXd& u) const;
  bool contains(const Eigen::VectorXd& w, double slack = 1e-12) const;

 private:
  std::optional<Eigen::VectorXd> center_;
  double radius_ = 0.0;
};

struct StoppingRule {
  long max_iters = 100;
  /// Stop once the max absolute coordinate of the estimated gradient falls
  /// below this value; 0 disables the test.
  double grad_norm_tol = 0.0;
  /// Cap on per-row gradient evaluations.
  std::optional<long> budget;

  void validate() const;
};

enum class StopReason { max_iters, grad_tol, budget, diverged };

struct StepRecord {
  double grad_max_abs = 0.0;
  long evals = 0;
  bool used_fallback = false;
};

struct Trajectory {
  /// states[0] is the starting point; states[k] follows the k-th update.
  std::vector<OptimState> states;
  std::vector<StepRecord> steps;
  StopReason reason = StopReason::max_iters;
  std::string message;

  const OptimState& final_state() const { return states.back(); }
  long iterations() const { return static_cast<long>(steps.size()); }
  bool diverged() const { return reason == StopReason::diverged; }
};

using GradientOracle = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct RgdOptions {
  /// Rows drawn without replacement per step; all rows when unset.
  std::optional<Eigen::Index> batch_size;
  std::uint64_t seed = 0;
};

/// Robust gradient descent: per-step coordinate-wise M-estimates of the
/// gradient. Uses the coordinate-subset path when cfg.coordinate_subset_size
/// is set and the known-variance path when cfg.known_variance is set.
Trajectory rgd_run(const LossModel& model, const Dataset& data, const RobustConfig& cfg,
                   const OptimState& start, const Constraint& constraint, const StoppingRule& stop,
                   const RgdOptions& options = {});

Trajectory erm_gd_run(const LossModel& model, const Dataset& data, const OptimState& start,
                      const Constraint& constraint, const StoppingRule& stop);

/// One uniformly drawn row per step.
Trajectory sgd_run(const LossModel& model, const Dataset& data, const OptimState& start,
                   const Constraint& constraint, const StoppingRule& stop, std::uint64_t seed);

/// Epochs of floor(n/2) steps. The first step of an epoch takes a full
/// gradient snapshot and moves along it (charged n evaluations); the rest are
/// single-row variance-reduced steps (charged one each).
Trajectory svrg_run(const LossModel& model, const Dataset& data, const OptimState& start,
                    const Constraint& constraint, const StoppingRule& stop, std::uint64_t seed);

/// Descent with an exact gradient; each step is charged zero evaluations.
Trajectory oracle_gd_run(const GradientOracle& gradient, const OptimState& start,
                         const Constraint& constraint, const StoppingRule& stop);

/// Block means of the row gradients aggregated by their geometric median.
/// Rows are split into `partitions` contiguous blocks of floor(n / partitions)
/// rows, the remainder joining the last block.
Trajectory median_of_means_gd_run(const LossModel& model, const Dataset& data, long partitions,
                                  const OptimState& start, const Constraint& constraint,
                                  const StoppingRule& stop);

/// max(2, floor(n / (2 d))).
long mom_partition_count(long n, long d);

/// Squared-loss descent with observations re-weighted by psi(r_i) / r_i, where
/// r_i is the residual of row i.
Trajectory reweighted_gd_run(const LinearRegression& model, const Dataset& data,
                             const mest::RhoFunction& rho, const OptimState& start,
                             const Constraint& constraint, const StoppingRule& stop);

struct GeometricMedian {
  Eigen::VectorXd point;
  int iterations = 0;
  bool converged = false;
};

/// Minimizer of sum_i |m - p_i| over the columns p_i of `points` (d x k), by
/// the Vardi-Zhang modification of Weiszfeld's iteration.
GeometricMedian geometric_median(const Eigen::MatrixXd& points, double tol = 1e-12,
                                 int max_iters = 10000);

double geometric_median_objective(const Eigen::MatrixXd& points, const Eigen::VectorXd& m);

}  // namespace rgd
