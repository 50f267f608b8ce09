#include "rgd/models.hpp"

#include <cmath>
#include <string>

#include "rgd/errors.hpp"

namespace rgd {

void Dataset::validate() const {
  if (inputs.rows() != targets.size()) {
    throw InvalidInput("dataset has " + std::to_string(inputs.rows()) + " input rows but " +
                       std::to_string(targets.size()) + " targets");
  }
  if (!inputs.allFinite() || !targets.allFinite()) {
    throw InvalidInput("dataset contains non-finite values");
  }
  if (classes > 0) {
    for (Eigen::Index i = 0; i < targets.size(); ++i) {
      const double t = targets[i];
      if (t != std::floor(t) || t < 0 || t >= classes) {
        throw InvalidInput("label at row " + std::to_string(i) + " is not a class index in [0, " +
                           std::to_string(classes) + ")");
      }
    }
  }
}

Dataset Dataset::subset(std::span<const Eigen::Index> rows) const {
  Dataset out;
  out.classes = classes;
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
  out.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.inputs.row(static_cast<Eigen::Index>(k)) = inputs.row(rows[k]);
    out.targets[static_cast<Eigen::Index>(k)] = targets[rows[k]];
  }
  return out;
}

Eigen::VectorXd LossModel::row_gradient(const Eigen::VectorXd& w, const Dataset& data,
                                        Eigen::Index i) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
  add_row_gradient(w, data, i, g);
  return g;
}

RowLosses LossModel::loss_and_grad_rows(const Eigen::VectorXd& w, const Dataset& data) const {
  check(data);
  if (w.size() != dim()) {
    throw InvalidInput("parameter vector has length " + std::to_string(w.size()) + ", expected " +
                       std::to_string(dim()));
  }
  const Eigen::Index n = data.size();
  Eigen::VectorXd losses(n);
  Eigen::MatrixXd grads = Eigen::MatrixXd::Zero(n, dim());
  Eigen::VectorXd g(dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    losses[i] = row_loss(w, data, i);
    g.setZero();
    add_row_gradient(w, data, i, g);
    grads.row(i) = g.transpose();
  }
  return {std::move(losses), GradientSample(std::move(grads))};
}

Eigen::VectorXd LossModel::mean_gradient(const Eigen::VectorXd& w, const Dataset& data) const {
  check(data);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    add_row_gradient(w, data, i, g);
  }
  return g / static_cast<double>(data.size());
}

double LossModel::empirical_risk(const Eigen::VectorXd& w, const Dataset& data) const {
  check(data);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    acc += row_loss(w, data, i);
  }
  return acc / static_cast<double>(data.size());
}

void LinearRegression::check(const Dataset& data) const {
  if (data.features() != features_) {
    throw InvalidInput("regression model expects " + std::to_string(features_) +
                       " features, dataset has " + std::to_string(data.features()));
  }
  if (data.inputs.rows() != data.targets.size() || data.size() < 1) {
    throw InvalidInput("regression dataset needs matching, non-empty inputs and targets");
  }
}

double LinearRegression::row_loss(const Eigen::VectorXd& w, const Dataset& data,
                                  Eigen::Index i) const {
  const double r = data.inputs.row(i).dot(w) - data.targets[i];
  return 0.5 * r * r;
}

void LinearRegression::add_row_gradient(const Eigen::VectorXd& w, const Dataset& data,
                                        Eigen::Index i, Eigen::Ref<Eigen::VectorXd> out) const {
  const double r = data.inputs.row(i).dot(w) - data.targets[i];
  out += r * data.inputs.row(i).transpose();
}

LogisticRegression::LogisticRegression(int classes, Eigen::Index features, double reg)
    : classes_(classes), features_(features), reg_(reg) {
  if (classes < 2) {
    throw InvalidConfig("logistic regression needs at least two classes");
  }
  if (features < 1) {
    throw InvalidConfig("logistic regression needs at least one feature");
  }
  if (!(reg >= 0.0)) {
    throw InvalidConfig("regularization strength must be non-negative");
  }
}

void LogisticRegression::check(const Dataset& data) const {
  if (data.features() != features_) {
    throw InvalidInput("logistic model expects " + std::to_string(features_) +
                       " features, dataset has " + std::to_string(data.features()));
  }
  if (data.classes != classes_) {
    throw InvalidInput("logistic model expects " + std::to_string(classes_) +
                       " classes, dataset declares " + std::to_string(data.classes));
  }
  if (data.inputs.rows() != data.targets.size() || data.size() < 1) {
    throw InvalidInput("classification dataset needs matching, non-empty inputs and labels");
  }
  // Labels index the score vector.
  for (Eigen::Index i = 0; i < data.targets.size(); ++i) {
    const double t = data.targets[i];
    if (!(t >= 0.0 && t < classes_) || t != std::floor(t)) {
      throw InvalidInput("label at row " + std::to_string(i) + " is not a class index in [0, " +
                         std::to_string(classes_) + ")");
    }
  }
}

Eigen::VectorXd LogisticRegression::scores(const Eigen::VectorXd& w,
                                           const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  Eigen::VectorXd s(classes_);
  s[0] = 0.0;
  for (int k = 1; k < classes_; ++k) {
    s[k] = x.dot(w.segment((k - 1) * features_, features_));
  }
  return s;
}

double LogisticRegression::row_loss(const Eigen::VectorXd& w, const Dataset& data,
                                    Eigen::Index i) const {
  const Eigen::VectorXd s = scores(w, data.inputs.row(i));
  const double top = s.maxCoeff();
  const double lse = top + std::log((s.array() - top).exp().sum());
  const int y = static_cast<int>(data.targets[i]);
  return lse - s[y] + reg_ * w.squaredNorm();
}

void LogisticRegression::add_row_gradient(const Eigen::VectorXd& w, const Dataset& data,
                                          Eigen::Index i, Eigen::Ref<Eigen::VectorXd> out) const {
  const auto x = data.inputs.row(i);
  const Eigen::VectorXd s = scores(w, x);
  const double top = s.maxCoeff();
  Eigen::ArrayXd p = (s.array() - top).exp();
  p /= p.sum();
  const int y = static_cast<int>(data.targets[i]);
  for (int k = 1; k < classes_; ++k) {
    const double coef = p[k] - (y == k ? 1.0 : 0.0);
    out.segment((k - 1) * features_, features_) += coef * x.transpose();
  }
  out += 2.0 * reg_ * w;
}

int LogisticRegression::predict(const Eigen::VectorXd& w,
                                const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  const Eigen::VectorXd s = scores(w, x);
  int best = 0;
  for (int k = 1; k < classes_; ++k) {
    if (s[k] > s[best]) {
      best = k;
    }
  }
  return best;
}

double LogisticRegression::misclassification_rate(const Eigen::VectorXd& w,
                                                  const Dataset& data) const {
  check(data);
  Eigen::Index errors = 0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    if (predict(w, data.inputs.row(i)) != static_cast<int>(data.targets[i])) {
      ++errors;
    }
  }
  return static_cast<double>(errors) / static_cast<double>(data.size());
}

}  // namespace rgd
