#include "rgd/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "rgd/errors.hpp"

namespace rgd {

namespace {

struct Direction {
  Eigen::VectorXd value;
  bool used_fallback = false;
};

// One descent rule: how much the next gradient estimate costs, and the estimate itself.
class StepRule {
 public:
  virtual ~StepRule() = default;
  virtual long next_cost() const = 0;
  virtual Direction direction(const Eigen::VectorXd& w) = 0;
};

void check_start(const OptimState& start, Eigen::Index dim) {
  if (start.w.size() != dim) {
    throw InvalidInput("initial parameter vector has length " + std::to_string(start.w.size()) +
                       ", expected " + std::to_string(dim));
  }
  if (!start.w.allFinite()) {
    throw InvalidInput("initial parameter vector is not finite");
  }
  if (!(start.alpha > 0.0) || !std::isfinite(start.alpha)) {
    throw InvalidConfig("step size must be positive and finite");
  }
  if (start.t < 0 || start.grad_evals < 0) {
    throw InvalidInput("initial iteration and evaluation counters must be non-negative");
  }
}

Trajectory descend(StepRule& rule, const OptimState& start, const Constraint& constraint,
                   const StoppingRule& stop) {
  stop.validate();
  Trajectory traj;
  traj.states.push_back(start);
  OptimState state = start;
  for (;;) {
    if (state.t - start.t >= stop.max_iters) {
      traj.reason = StopReason::max_iters;
      break;
    }
    const long cost = rule.next_cost();
    if (stop.budget && state.grad_evals + cost > *stop.budget) {
      traj.reason = StopReason::budget;
      break;
    }
    Direction dir = rule.direction(state.w);
    const double gmax = dir.value.size() ? dir.value.cwiseAbs().maxCoeff() : 0.0;
    if (!std::isfinite(gmax)) {
      traj.reason = StopReason::diverged;
      traj.message = "non-finite gradient estimate at iteration " + std::to_string(state.t);
      break;
    }
    if (stop.grad_norm_tol > 0.0 && gmax < stop.grad_norm_tol) {
      traj.states.back().grad_evals += cost;
      traj.reason = StopReason::grad_tol;
      break;
    }
    Eigen::VectorXd next = constraint.project(state.w - state.alpha * dir.value);
    if (!next.allFinite()) {
      traj.reason = StopReason::diverged;
      traj.message = "iterate became non-finite at iteration " + std::to_string(state.t + 1);
      break;
    }
    state.w = std::move(next);
    ++state.t;
    state.grad_evals += cost;
    traj.states.push_back(state);
    traj.steps.push_back({gmax, cost, dir.used_fallback});
  }
  return traj;
}

class RobustRule final : public StepRule {
 public:
  RobustRule(const LossModel& model, const Dataset& data, const RobustConfig& cfg,
             const RgdOptions& options)
      : model_(model), data_(data), cfg_(cfg), options_(options), rng_(options.seed) {
    if (options.batch_size) {
      if (*options.batch_size < 1 || *options.batch_size > data.size()) {
        throw InvalidConfig("mini-batch size must lie in [1, n]");
      }
      all_rows_.resize(static_cast<std::size_t>(data.size()));
      std::iota(all_rows_.begin(), all_rows_.end(), Eigen::Index{0});
    }
  }

  long next_cost() const override {
    return static_cast<long>(options_.batch_size.value_or(data_.size()));
  }

  Direction direction(const Eigen::VectorXd& w) override {
    RowLosses rows = options_.batch_size ? model_.loss_and_grad_rows(w, draw_batch())
                                         : model_.loss_and_grad_rows(w, data_);
    const GradientSample& D = rows.gradients;
    GradientEstimate est;
    if (cfg_.known_variance) {
      est = robust_gradient_known_variance(D, cfg_);
    } else if (cfg_.coordinate_subset_size) {
      est = robust_gradient_subset(D, cfg_, rng_);
    } else if (cfg_.scale_refresh_every > 1) {
      if (step_ % cfg_.scale_refresh_every == 0) {
        sigma_ = column_dispersion(D, cfg_);
      }
      est = robust_gradient_with_dispersion(D, cfg_, sigma_);
    } else {
      est = robust_gradient(D, cfg_);
    }
    ++step_;
    return {std::move(est.value), est.any_fallback()};
  }

 private:
  Dataset draw_batch() {
    std::vector<Eigen::Index> rows;
    rows.reserve(static_cast<std::size_t>(*options_.batch_size));
    std::sample(all_rows_.begin(), all_rows_.end(), std::back_inserter(rows),
                static_cast<std::ptrdiff_t>(*options_.batch_size), rng_);
    return data_.subset(rows);
  }

  const LossModel& model_;
  const Dataset& data_;
  const RobustConfig& cfg_;
  RgdOptions options_;
  std::mt19937_64 rng_;
  std::vector<Eigen::Index> all_rows_;
  Eigen::VectorXd sigma_;
  long step_ = 0;
};

class MeanRule final : public StepRule {
 public:
  MeanRule(const LossModel& model, const Dataset& data) : model_(model), data_(data) {}
  long next_cost() const override { return static_cast<long>(data_.size()); }
  Direction direction(const Eigen::VectorXd& w) override { return {model_.mean_gradient(w, data_)}; }

 private:
  const LossModel& model_;
  const Dataset& data_;
};

class SgdRule final : public StepRule {
 public:
  SgdRule(const LossModel& model, const Dataset& data, std::uint64_t seed)
      : model_(model), data_(data), rng_(seed), pick_(0, data.size() - 1) {}
  long next_cost() const override { return 1; }
  Direction direction(const Eigen::VectorXd& w) override {
    return {model_.row_gradient(w, data_, pick_(rng_))};
  }

 private:
  const LossModel& model_;
  const Dataset& data_;
  std::mt19937_64 rng_;
  std::uniform_int_distribution<Eigen::Index> pick_;
};

class SvrgRule final : public StepRule {
 public:
  SvrgRule(const LossModel& model, const Dataset& data, std::uint64_t seed)
      : model_(model),
        data_(data),
        rng_(seed),
        pick_(0, data.size() - 1),
        inner_length_(std::max<long>(1, static_cast<long>(data.size()) / 2)) {}

  long next_cost() const override { return inner_left_ == 0 ? static_cast<long>(data_.size()) : 1; }

  // The first step of every epoch sits at the snapshot, where the corrected
  // gradient is the full gradient itself; it is charged n and skips the draw.
  Direction direction(const Eigen::VectorXd& w) override {
    if (inner_left_ == 0) {
      snapshot_ = w;
      snapshot_grad_ = model_.mean_gradient(w, data_);
      inner_left_ = inner_length_ - 1;
      return {snapshot_grad_};
    }
    --inner_left_;
    const Eigen::Index i = pick_(rng_);
    Eigen::VectorXd g = model_.row_gradient(w, data_, i) - model_.row_gradient(snapshot_, data_, i);
    g += snapshot_grad_;
    return {std::move(g)};
  }

 private:
  const LossModel& model_;
  const Dataset& data_;
  std::mt19937_64 rng_;
  std::uniform_int_distribution<Eigen::Index> pick_;
  long inner_length_;
  long inner_left_ = 0;
  Eigen::VectorXd snapshot_;
  Eigen::VectorXd snapshot_grad_;
};

class OracleRule final : public StepRule {
 public:
  explicit OracleRule(const GradientOracle& gradient) : gradient_(gradient) {}
  long next_cost() const override { return 0; }
  Direction direction(const Eigen::VectorXd& w) override { return {gradient_(w)}; }

 private:
  const GradientOracle& gradient_;
};

class MedianOfMeansRule final : public StepRule {
 public:
  MedianOfMeansRule(const LossModel& model, const Dataset& data, long partitions)
      : model_(model), data_(data), partitions_(partitions) {}

  long next_cost() const override { return static_cast<long>(data_.size()); }

  Direction direction(const Eigen::VectorXd& w) override {
    const Eigen::Index n = data_.size();
    const Eigen::Index block = n / partitions_;
    Eigen::MatrixXd means = Eigen::MatrixXd::Zero(model_.dim(), partitions_);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index b = std::min<Eigen::Index>(i / block, partitions_ - 1);
      model_.add_row_gradient(w, data_, i, means.col(b));
    }
    for (Eigen::Index b = 0; b < partitions_; ++b) {
      const Eigen::Index rows = b + 1 < partitions_ ? block : n - block * (partitions_ - 1);
      means.col(b) /= static_cast<double>(rows);
    }
    return {geometric_median(means).point};
  }

 private:
  const LossModel& model_;
  const Dataset& data_;
  Eigen::Index partitions_;
};

class ReweightRule final : public StepRule {
 public:
  ReweightRule(const LinearRegression& model, const Dataset& data, const mest::RhoFunction& rho)
      : model_(model), data_(data), rho_(rho) {}

  long next_cost() const override { return static_cast<long>(data_.size()); }

  Direction direction(const Eigen::VectorXd& w) override {
    const Eigen::VectorXd r = data_.inputs * w - data_.targets;
    Eigen::VectorXd weights(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      weights[i] = r[i] == 0.0 ? rho_.psi_prime(0.0) : rho_.psi(r[i]) / r[i];
    }
    const double total = weights.sum();
    if (!(total > 0.0)) {
      return {Eigen::VectorXd::Zero(model_.dim())};
    }
    return {data_.inputs.transpose() * (weights.cwiseProduct(r) / total)};
  }

 private:
  const LinearRegression& model_;
  const Dataset& data_;
  mest::RhoFunction rho_;
};

}  // namespace

Constraint Constraint::l2_ball(Eigen::VectorXd center, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw InvalidConfig("ball radius must be positive and finite");
  }
  Constraint c;
  c.center_ = std::move(center);
  c.radius_ = radius;
  return c;
}

Eigen::VectorXd Constraint::project(const Eigen::VectorXd& u) const {
  if (!center_) {
    return u;
  }
  const Eigen::VectorXd offset = u - *center_;
  const double norm = offset.norm();
  if (norm <= radius_) {
    return u;
  }
  return *center_ + (radius_ / norm) * offset;
}

bool Constraint::contains(const Eigen::VectorXd& w, double slack) const {
  return !center_ || (w - *center_).norm() <= radius_ * (1.0 + slack);
}

void StoppingRule::validate() const {
  if (max_iters < 1) {
    throw InvalidConfig("max_iters must be at least 1");
  }
  if (!(grad_norm_tol >= 0.0)) {
    throw InvalidConfig("grad_norm_tol must be non-negative");
  }
  if (budget && *budget < 0) {
    throw InvalidConfig("budget must be non-negative");
  }
}

Trajectory rgd_run(const LossModel& model, const Dataset& data, const RobustConfig& cfg,
                   const OptimState& start, const Constraint& constraint, const StoppingRule& stop,
                   const RgdOptions& options) {
  model.check(data);
  cfg.validate(model.dim());
  check_start(start, model.dim());
  RobustRule rule(model, data, cfg, options);
  return descend(rule, start, constraint, stop);
}

Trajectory erm_gd_run(const LossModel& model, const Dataset& data, const OptimState& start,
                      const Constraint& constraint, const StoppingRule& stop) {
  model.check(data);
  check_start(start, model.dim());
  MeanRule rule(model, data);
  return descend(rule, start, constraint, stop);
}

Trajectory sgd_run(const LossModel& model, const Dataset& data, const OptimState& start,
                   const Constraint& constraint, const StoppingRule& stop, std::uint64_t seed) {
  model.check(data);
  check_start(start, model.dim());
  SgdRule rule(model, data, seed);
  return descend(rule, start, constraint, stop);
}

Trajectory svrg_run(const LossModel& model, const Dataset& data, const OptimState& start,
                    const Constraint& constraint, const StoppingRule& stop, std::uint64_t seed) {
  model.check(data);
  check_start(start, model.dim());
  SvrgRule rule(model, data, seed);
  return descend(rule, start, constraint, stop);
}

Trajectory oracle_gd_run(const GradientOracle& gradient, const OptimState& start,
                         const Constraint& constraint, const StoppingRule& stop) {
  if (!gradient) {
    throw InvalidConfig("oracle gradient is empty");
  }
  check_start(start, start.w.size());
  OracleRule rule(gradient);
  return descend(rule, start, constraint, stop);
}

Trajectory median_of_means_gd_run(const LossModel& model, const Dataset& data, long partitions,
                                  const OptimState& start, const Constraint& constraint,
                                  const StoppingRule& stop) {
  model.check(data);
  check_start(start, model.dim());
  if (partitions < 2) {
    throw InvalidConfig("median-of-means needs at least 2 partitions");
  }
  if (data.size() < partitions) {
    throw InvalidConfig("median-of-means: " + std::to_string(partitions) +
                        " partitions exceed the sample size " + std::to_string(data.size()));
  }
  MedianOfMeansRule rule(model, data, partitions);
  return descend(rule, start, constraint, stop);
}

long mom_partition_count(long n, long d) {
  if (n < 1 || d < 1) {
    throw InvalidInput("mom_partition_count: n and d must be positive");
  }
  return std::max(2L, n / (2 * d));
}

Trajectory reweighted_gd_run(const LinearRegression& model, const Dataset& data,
                             const mest::RhoFunction& rho, const OptimState& start,
                             const Constraint& constraint, const StoppingRule& stop) {
  model.check(data);
  check_start(start, model.dim());
  ReweightRule rule(model, data, rho);
  return descend(rule, start, constraint, stop);
}

}  // namespace rgd
