#include "rgd/datagen.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "rgd/errors.hpp"

namespace rgd {

namespace {

Eigen::VectorXd standard_normal(Eigen::Index d, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::VectorXd v(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    v[j] = z(rng);
  }
  return v;
}

}  // namespace

SyntheticRisk::SyntheticRisk(Eigen::MatrixXd sigma, Eigen::VectorXd w_star, NoiseSpec noise)
    : sigma_(std::move(sigma)), w_star_(std::move(w_star)), noise_(noise) {
  const Eigen::Index d = w_star_.size();
  if (d < 1 || sigma_.rows() != d || sigma_.cols() != d) {
    throw InvalidInput("risk covariance must be d x d with d = dim(w*)");
  }
  if (!sigma_.isApprox(sigma_.transpose(), 1e-12)) {
    throw InvalidInput("risk covariance must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma_, Eigen::EigenvaluesOnly);
  kappa_ = eig.eigenvalues().minCoeff();
  lambda_ = eig.eigenvalues().maxCoeff();
  if (!(kappa_ > 0.0)) {
    throw InvalidInput("risk covariance must be positive definite");
  }
  chol_ = sigma_.llt().matrixL();
}

SyntheticRisk SyntheticRisk::isotropic(Eigen::VectorXd w_star, NoiseSpec noise) {
  const Eigen::Index d = w_star.size();
  return SyntheticRisk(Eigen::MatrixXd::Identity(d, d), std::move(w_star), noise);
}

double SyntheticRisk::excess_risk(const Eigen::VectorXd& w) const {
  const Eigen::VectorXd e = w - w_star_;
  return 0.5 * e.dot(sigma_ * e);
}

double SyntheticRisk::risk(const Eigen::VectorXd& w) const {
  return excess_risk(w) + 0.5 * noise_.variance();
}

Eigen::VectorXd SyntheticRisk::gradient(const Eigen::VectorXd& w) const {
  return sigma_ * (w - w_star_);
}

Dataset SyntheticRisk::sample(Eigen::Index n, Rng& rng) const {
  if (n < 1) {
    throw InvalidInput("sample size must be positive");
  }
  const Eigen::Index d = dim();
  Dataset out;
  out.inputs.resize(n, d);
  out.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd x = chol_ * standard_normal(d, rng);
    out.inputs.row(i) = x.transpose();
    out.targets[i] = x.dot(w_star_) + noise_.sample(rng);
  }
  return out;
}

double w_star_sequence(int k) {
  if (k < 1) {
    throw InvalidInput("w* sequence index starts at 1");
  }
  const double sign = (k % 2 == 1) ? 1.0 : -1.0;
  return std::numbers::pi / 4.0 + sign * (k - 1) * std::numbers::pi / 8.0;
}

Eigen::VectorXd gen_w_star(Eigen::Index d, Rng& rng) {
  if (d < 1) {
    throw InvalidInput("dimension must be positive");
  }
  std::uniform_int_distribution<int> pick(1, kWStarPool);
  Eigen::VectorXd w(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    w[j] = w_star_sequence(pick(rng));
  }
  return w;
}

Dataset gen_regression(Eigen::Index n, const Eigen::VectorXd& w_star, const NoiseSpec& noise,
                       Rng& rng) {
  return SyntheticRisk::isotropic(w_star, noise).sample(n, rng);
}

RegressionTask gen_regression(Eigen::Index n, Eigen::Index d, const NoiseSpec& noise, Rng& rng) {
  RegressionTask task;
  task.w_star = gen_w_star(d, rng);
  task.data = gen_regression(n, task.w_star, noise, rng);
  return task;
}

Eigen::MatrixXd random_spd(Eigen::Index d, double lo, double hi, Rng& rng) {
  if (d < 1 || !(lo > 0.0) || !(hi >= lo)) {
    throw InvalidInput("random_spd: need d >= 1 and 0 < lo <= hi");
  }
  Eigen::MatrixXd g(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    g.col(j) = standard_normal(d, rng);
  }
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  Eigen::VectorXd eig(d);
  std::uniform_real_distribution<double> u(lo, hi);
  for (Eigen::Index j = 0; j < d; ++j) {
    eig[j] = u(rng);
  }
  eig[0] = lo;
  eig[d - 1] = hi;
  Eigen::MatrixXd s = q * eig.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

InitSpec InitSpec::box(double delta) {
  if (!(delta > 0.0)) {
    throw InvalidConfig("initialization box half-width must be positive");
  }
  InitSpec s;
  s.kind = Kind::uniform_box_around_star;
  s.delta = delta;
  return s;
}

InitSpec InitSpec::fixed_at(Eigen::VectorXd w0) {
  InitSpec s;
  s.kind = Kind::fixed;
  s.w0 = std::move(w0);
  return s;
}

Eigen::VectorXd draw_initial(const InitSpec& init, const Eigen::VectorXd& w_star, Rng& rng) {
  if (init.kind == InitSpec::Kind::fixed) {
    if (init.w0.size() != w_star.size()) {
      throw InvalidConfig("fixed initial point has the wrong dimension");
    }
    return init.w0;
  }
  std::uniform_real_distribution<double> u(-init.delta, init.delta);
  Eigen::VectorXd w = w_star;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    w[j] += u(rng);
  }
  return w;
}

Eigen::MatrixXd gen_class_centers(const ClassificationSpec& spec, Rng& centers_rng) {
  if (spec.classes < 2 || spec.features < 1) {
    throw InvalidConfig("classification needs at least two classes and one feature");
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd centers(spec.classes, spec.features);
  for (Eigen::Index k = 0; k < centers.rows(); ++k) {
    for (Eigen::Index f = 0; f < centers.cols(); ++f) {
      centers(k, f) = u(centers_rng);
    }
  }
  return centers;
}

Dataset gen_classification(Eigen::Index n, const ClassificationSpec& spec,
                           const Eigen::MatrixXd& centers, Rng& rng) {
  if (centers.rows() != spec.classes || centers.cols() != spec.features) {
    throw InvalidConfig("class centers do not match the classification spec");
  }
  if (!(spec.label_noise >= 0.0 && spec.label_noise <= 1.0) || !(spec.spread >= 0.0)) {
    throw InvalidConfig("label noise must lie in [0, 1] and spread must be non-negative");
  }
  std::uniform_int_distribution<int> pick(0, spec.classes - 1);
  std::bernoulli_distribution flip(spec.label_noise);
  std::normal_distribution<double> z(0.0, spec.spread);
  Dataset out;
  out.classes = spec.classes;
  out.inputs.resize(n, spec.features);
  out.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = pick(rng);
    for (Eigen::Index f = 0; f < spec.features; ++f) {
      out.inputs(i, f) = centers(k, f) + z(rng);
    }
    const bool noisy = flip(rng);
    const int shown = pick(rng);
    out.targets[i] = noisy ? shown : k;
  }
  return out;
}

}  // namespace rgd
