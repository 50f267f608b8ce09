#pragma once

#include <Eigen/Core>

#include "rgd/robust_grad.hpp"

namespace rgd {

/// Inputs (n x F) and targets. Regression targets are real; classification
/// targets hold class indices in [0, classes).
struct Dataset {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd targets;
  int classes = 0;  // 0 for regression

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index features() const { return inputs.cols(); }
  bool is_classification() const { return classes > 0; }

  void validate() const;
  Dataset subset(std::span<const Eigen::Index> rows) const;
};

struct RowLosses {
  Eigen::VectorXd losses;
  GradientSample gradients;
};

/// Differentiable per-observation loss l(w; z_i).
class LossModel {
 public:
  virtual ~LossModel() = default;

  virtual Eigen::Index dim() const = 0;
  virtual void check(const Dataset& data) const = 0;

  virtual double row_loss(const Eigen::VectorXd& w, const Dataset& data, Eigen::Index i) const = 0;
  /// Adds the gradient of row i into `out`.
  virtual void add_row_gradient(const Eigen::VectorXd& w, const Dataset& data, Eigen::Index i,
                                Eigen::Ref<Eigen::VectorXd> out) const = 0;

  Eigen::VectorXd row_gradient(const Eigen::VectorXd& w, const Dataset& data, Eigen::Index i) const;
  RowLosses loss_and_grad_rows(const Eigen::VectorXd& w, const Dataset& data) const;
  Eigen::VectorXd mean_gradient(const Eigen::VectorXd& w, const Dataset& data) const;
  double empirical_risk(const Eigen::VectorXd& w, const Dataset& data) const;
};

/// l(w; (x, y)) = (<w, x> - y)^2 / 2.
class LinearRegression final : public LossModel {
 public:
  explicit LinearRegression(Eigen::Index features) : features_(features) {}

  Eigen::Index dim() const override { return features_; }
  void check(const Dataset& data) const override;
  double row_loss(const Eigen::VectorXd& w, const Dataset& data, Eigen::Index i) const override;
  void add_row_gradient(const Eigen::VectorXd& w, const Dataset& data, Eigen::Index i,
                        Eigen::Ref<Eigen::VectorXd> out) const override;

 private:
  Eigen::Index features_;
};

/// Multiclass logistic regression with class 0 as the zero-score reference.
/// Parameters are stored as (classes - 1) consecutive blocks of `features`
/// weights, block k scoring class k + 1. Every row loss carries the penalty
/// reg * |w|^2, so each gradient row includes 2 * reg * w.
class LogisticRegression final : public LossModel {
 public:
  LogisticRegression(int classes, Eigen::Index features, double reg);

  int classes() const { return classes_; }
  Eigen::Index features() const { return features_; }
  double reg() const { return reg_; }

  Eigen::Index dim() const override { return (classes_ - 1) * features_; }
  void check(const Dataset& data) const override;
  double row_loss(const Eigen::VectorXd& w, const Dataset& data, Eigen::Index i) const override;
  void add_row_gradient(const Eigen::VectorXd& w, const Dataset& data, Eigen::Index i,
                        Eigen::Ref<Eigen::VectorXd> out) const override;

  /// Class scores for one input; entry 0 is the reference class and always 0.
  Eigen::VectorXd scores(const Eigen::VectorXd& w, const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  /// Highest score, ties resolved to the lowest class index.
  int predict(const Eigen::VectorXd& w, const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  double misclassification_rate(const Eigen::VectorXd& w, const Dataset& data) const;

 private:
  int classes_;
  Eigen::Index features_;
  double reg_;
};

}  // namespace rgd
