#include <cmath>

#include "rgd/errors.hpp"
#include "rgd/optim.hpp"

namespace rgd {

namespace {

constexpr double kCoincidence = 1e-10;

struct PullTerms {
  Eigen::VectorXd weighted_sum;  // sum over distinct points of p_i / |p_i - y|
  double inverse_sum = 0.0;      // sum over distinct points of 1 / |p_i - y|
  double coincident = 0.0;       // number of points sitting on y
};

PullTerms pull_terms(const Eigen::MatrixXd& points, const Eigen::VectorXd& y) {
  PullTerms out;
  out.weighted_sum = Eigen::VectorXd::Zero(points.rows());
  const double tol = kCoincidence * (1.0 + y.norm());
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    const double dist = (points.col(i) - y).norm();
    if (dist <= tol) {
      out.coincident += 1.0;
      continue;
    }
    out.weighted_sum += points.col(i) / dist;
    out.inverse_sum += 1.0 / dist;
  }
  return out;
}

}  // namespace

double geometric_median_objective(const Eigen::MatrixXd& points, const Eigen::VectorXd& m) {
  return (points.colwise() - m).colwise().norm().sum();
}

GeometricMedian geometric_median(const Eigen::MatrixXd& points, double tol, int max_iters) {
  if (points.cols() < 1 || points.rows() < 1) {
    throw InvalidInput("geometric_median: need at least one point");
  }
  if (!points.allFinite()) {
    throw InvalidInput("geometric_median: non-finite coordinates");
  }
  GeometricMedian out;
  if (points.cols() == 1) {
    out.point = points.col(0);
    out.converged = true;
    return out;
  }

  // A data point is optimal iff the pull of the others has norm at most its multiplicity.
  for (Eigen::Index k = 0; k < points.cols(); ++k) {
    const Eigen::VectorXd y = points.col(k);
    const PullTerms pull = pull_terms(points, y);
    const double r = (pull.weighted_sum - pull.inverse_sum * y).norm();
    if (r <= pull.coincident) {
      out.point = y;
      out.converged = true;
      return out;
    }
  }

  Eigen::VectorXd y = points.rowwise().mean();
  for (int it = 0; it < max_iters; ++it) {
    const PullTerms pull = pull_terms(points, y);
    out.iterations = it + 1;
    if (pull.inverse_sum == 0.0) {
      out.converged = true;
      break;
    }
    const Eigen::VectorXd weiszfeld = pull.weighted_sum / pull.inverse_sum;
    Eigen::VectorXd next = weiszfeld;
    if (pull.coincident > 0.0) {
      const double r = (pull.weighted_sum - pull.inverse_sum * y).norm();
      if (r <= pull.coincident) {
        out.converged = true;
        break;
      }
      const double gamma = pull.coincident / r;
      next = (1.0 - gamma) * weiszfeld + gamma * y;
    }
    const double step = (next - y).norm();
    y = std::move(next);
    if (step <= tol * (1.0 + y.norm())) {
      out.converged = true;
      break;
    }
  }
  out.point = std::move(y);
  return out;
}

}  // namespace rgd
