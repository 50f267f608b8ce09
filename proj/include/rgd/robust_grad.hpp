#pragma once

// Coordinate-wise robust gradient estimation.
//
// Every column j of the n x d matrix of per-observation gradients is reduced
// to a single number: a dispersion sigma_j about the column mean, a truncation
// scale s_j = sigma_j * sqrt(n / log(2 / delta)), and finally the M-estimate of
// location at that scale.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rgd/mest.hpp"

namespace rgd {

/// n x d matrix of loss gradients, one row per observation.
class GradientSample {
 public:
  GradientSample() = default;
  explicit GradientSample(Eigen::MatrixXd rows);

  Eigen::Index rows() const { return m_.rows(); }
  Eigen::Index cols() const { return m_.cols(); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  std::span<const double> column(Eigen::Index j) const {
    return {m_.col(j).data(), static_cast<std::size_t>(m_.rows())};
  }
  Eigen::VectorXd column_means() const { return m_.colwise().mean().transpose(); }

 private:
  Eigen::MatrixXd m_;
};

struct RobustConfig {
  mest::RhoFunction rho = mest::RhoFunction::gudermannian();
  mest::ChiFunction chi;
  double delta = 0.005;
  /// Catoni constant; only the known-variance path reads it.
  double C = 2.0;
  mest::FixedPointSettings fp;
  std::optional<std::size_t> coordinate_subset_size;
  std::optional<Eigen::VectorXd> known_variance;
  /// Recompute the dispersion estimates every k-th descent step.
  int scale_refresh_every = 1;

  void validate(Eigen::Index d = -1) const;
  /// validate() plus rejection of the test-only quadratic rho.
  void validate_production(Eigen::Index d = -1) const;
};

struct ColumnDiagnostic {
  double sigma = 0.0;
  double scale = 0.0;
  bool scale_converged = true;
  bool location_converged = true;
  bool used_fallback = false;
  bool sigma_at_floor = false;
};

struct GradientEstimate {
  Eigen::VectorXd value;
  std::vector<ColumnDiagnostic> columns;
  /// Coordinates that went through the robust path (all of them unless a
  /// coordinate subset was requested).
  std::vector<Eigen::Index> robust_coordinates;

  bool any_fallback() const;
};

/// Per-column dispersion sigma_j about the column mean.
Eigen::VectorXd column_dispersion(const GradientSample& D, const RobustConfig& cfg);

GradientEstimate robust_gradient(const GradientSample& D, const RobustConfig& cfg);

/// As robust_gradient, but with dispersions supplied by the caller (used to
/// refresh the scale less often than every step).
GradientEstimate robust_gradient_with_dispersion(const GradientSample& D, const RobustConfig& cfg,
                                                 const Eigen::VectorXd& sigma);

/// Robustify `cfg.coordinate_subset_size` coordinates drawn uniformly without
/// replacement; the remaining coordinates get the column mean.
GradientEstimate robust_gradient_subset(const GradientSample& D, const RobustConfig& cfg,
                                        std::mt19937_64& rng);

/// Uses sigma_j = sqrt(C * known_variance_j) instead of estimating dispersion.
GradientEstimate robust_gradient_known_variance(const GradientSample& D, const RobustConfig& cfg);

/// Catoni-type robust estimate of the mean of a loss sample.
double robust_risk(std::span<const double> losses, const RobustConfig& cfg);

}  // namespace rgd
