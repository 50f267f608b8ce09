#include "rgd/robust_grad.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rgd/errors.hpp"

namespace rgd {

namespace {

double column_mean(std::span<const double> col) {
  return std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(col.size());
}

// Location at the confidence-adjusted scale for a column whose dispersion is known.
double locate_column(std::span<const double> col, double sigma, const RobustConfig& cfg,
                     ColumnDiagnostic& diag) {
  diag.sigma = sigma;
  diag.scale = mest::confidence_scale(sigma, static_cast<long>(col.size()), cfg.delta);
  const mest::Estimate loc = mest::locate(col, diag.scale, cfg.rho, cfg.fp);
  diag.location_converged = loc.converged;
  diag.used_fallback = diag.used_fallback || loc.used_fallback;
  return loc.value;
}

double dispersion_of(std::span<const double> col, const RobustConfig& cfg, ColumnDiagnostic& diag) {
  const mest::Estimate s = mest::rescale(col, column_mean(col), cfg.chi, cfg.fp);
  diag.scale_converged = s.converged;
  diag.used_fallback = s.used_fallback;
  diag.sigma_at_floor = s.at_floor;
  return s.value;
}

GradientEstimate make_estimate(const GradientSample& D) {
  GradientEstimate out;
  out.value = D.column_means();
  out.columns.resize(static_cast<std::size_t>(D.cols()));
  return out;
}

}  // namespace

GradientSample::GradientSample(Eigen::MatrixXd rows) : m_(std::move(rows)) {
  if (m_.rows() < 1 || m_.cols() < 1) {
    throw InvalidInput("gradient sample needs at least one row and one column");
  }
  if (!m_.allFinite()) {
    throw InvalidInput("gradient sample contains non-finite entries");
  }
}

bool GradientEstimate::any_fallback() const {
  return std::any_of(columns.begin(), columns.end(),
                     [](const ColumnDiagnostic& c) { return c.used_fallback; });
}

void RobustConfig::validate(Eigen::Index d) const {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidConfig("delta must lie in (0, 1)");
  }
  if (!(C > 0.0)) {
    throw InvalidConfig("C must be positive");
  }
  fp.validate();
  if (scale_refresh_every < 1) {
    throw InvalidConfig("scale_refresh_every must be at least 1");
  }
  if (coordinate_subset_size) {
    if (*coordinate_subset_size == 0) {
      throw InvalidConfig("coordinate_subset_size must be positive");
    }
    if (d >= 0 && *coordinate_subset_size > static_cast<std::size_t>(d)) {
      throw InvalidConfig("coordinate_subset_size exceeds the dimension");
    }
  }
  if (known_variance) {
    if (d >= 0 && known_variance->size() != d) {
      throw InvalidConfig("known_variance has " + std::to_string(known_variance->size()) +
                          " entries, expected " + std::to_string(d));
    }
    if (!(known_variance->array() > 0.0).all() || !known_variance->allFinite()) {
      throw InvalidConfig("known_variance entries must be positive and finite");
    }
  }
}

void RobustConfig::validate_production(Eigen::Index d) const {
  validate(d);
  if (!rho.bounded()) {
    throw InvalidConfig("quadratic rho is for testing only");
  }
}

Eigen::VectorXd column_dispersion(const GradientSample& D, const RobustConfig& cfg) {
  cfg.validate(D.cols());
  Eigen::VectorXd sigma(D.cols());
  for (Eigen::Index j = 0; j < D.cols(); ++j) {
    ColumnDiagnostic ignored;
    sigma[j] = dispersion_of(D.column(j), cfg, ignored);
  }
  return sigma;
}

GradientEstimate robust_gradient(const GradientSample& D, const RobustConfig& cfg) {
  cfg.validate(D.cols());
  GradientEstimate out = make_estimate(D);
  out.robust_coordinates.resize(static_cast<std::size_t>(D.cols()));
  std::iota(out.robust_coordinates.begin(), out.robust_coordinates.end(), Eigen::Index{0});
  for (Eigen::Index j = 0; j < D.cols(); ++j) {
    auto& diag = out.columns[static_cast<std::size_t>(j)];
    const auto col = D.column(j);
    out.value[j] = locate_column(col, dispersion_of(col, cfg, diag), cfg, diag);
  }
  return out;
}

GradientEstimate robust_gradient_with_dispersion(const GradientSample& D, const RobustConfig& cfg,
                                                 const Eigen::VectorXd& sigma) {
  cfg.validate(D.cols());
  if (sigma.size() != D.cols()) {
    throw InvalidInput("dispersion vector length does not match gradient dimension");
  }
  GradientEstimate out = make_estimate(D);
  out.robust_coordinates.resize(static_cast<std::size_t>(D.cols()));
  std::iota(out.robust_coordinates.begin(), out.robust_coordinates.end(), Eigen::Index{0});
  for (Eigen::Index j = 0; j < D.cols(); ++j) {
    auto& diag = out.columns[static_cast<std::size_t>(j)];
    out.value[j] = locate_column(D.column(j), sigma[j], cfg, diag);
  }
  return out;
}

GradientEstimate robust_gradient_subset(const GradientSample& D, const RobustConfig& cfg,
                                        std::mt19937_64& rng) {
  cfg.validate(D.cols());
  if (!cfg.coordinate_subset_size) {
    throw InvalidConfig("robust_gradient_subset requires coordinate_subset_size");
  }
  std::vector<Eigen::Index> all(static_cast<std::size_t>(D.cols()));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  GradientEstimate out = make_estimate(D);
  out.robust_coordinates.reserve(*cfg.coordinate_subset_size);
  std::sample(all.begin(), all.end(), std::back_inserter(out.robust_coordinates),
              static_cast<std::ptrdiff_t>(*cfg.coordinate_subset_size), rng);
  for (Eigen::Index j : out.robust_coordinates) {
    auto& diag = out.columns[static_cast<std::size_t>(j)];
    const auto col = D.column(j);
    out.value[j] = locate_column(col, dispersion_of(col, cfg, diag), cfg, diag);
  }
  return out;
}

GradientEstimate robust_gradient_known_variance(const GradientSample& D, const RobustConfig& cfg) {
  cfg.validate(D.cols());
  if (!cfg.known_variance) {
    throw InvalidConfig("robust_gradient_known_variance requires known_variance");
  }
  const Eigen::VectorXd sigma = (cfg.C * cfg.known_variance->array()).sqrt().matrix();
  return robust_gradient_with_dispersion(D, cfg, sigma);
}

double robust_risk(std::span<const double> losses, const RobustConfig& cfg) {
  cfg.validate();
  ColumnDiagnostic diag;
  const double sigma = dispersion_of(losses, cfg, diag);
  return locate_column(losses, sigma, cfg, diag);
}

}  // namespace rgd
