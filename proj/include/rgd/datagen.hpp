#pragma once

// Synthetic tasks: the noisy quadratic risk model, regression and
// classification data, noise families and their standard-deviation ladder.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "rgd/models.hpp"

namespace rgd {

using Rng = std::mt19937_64;

/// Seed for an independent stream identified by (base, a, b); splitmix64 mixing.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);
std::uint64_t tag_of(std::string_view name);

enum class NoiseFamily {
  normal,
  lognormal,
  loglogistic,
  triangular_sym,
  pareto,
  student_t,
  laplace,
  gumbel,
  weibull,
  exponential,
  logistic,
};

inline constexpr int kNoiseLevels = 15;
inline constexpr double kLadderLow = 0.3;
inline constexpr double kLadderHigh = 20.0;

std::string_view short_name(NoiseFamily family);
std::string_view long_name(NoiseFamily family);
std::optional<NoiseFamily> parse_noise_family(std::string_view name);
std::span<const NoiseFamily> all_noise_families();

/// 0.3 + (level - 1) * (20.0 - 0.3) / 14, for level in 1..15.
double ladder_sd(int level);

/// Noise distribution with two family parameters. Parameter meaning by family:
///   normal (location, sd)       lognormal (log-location, log-scale)
///   loglogistic (scale, shape)  triangular_sym (half-width, unused)
///   pareto (scale, shape)       student_t (scale, degrees of freedom)
///   laplace (scale, unused)     gumbel (scale, unused)
///   weibull (scale, shape)      exponential (scale, unused)
///   logistic (scale, unused)
/// Draws are centered by subtracting the analytic mean.
class NoiseSpec {
 public:
  NoiseSpec() = default;
  static NoiseSpec with_params(NoiseFamily family, double a, double b = 0.0);
  /// The calibrated member of `family` at ladder level 1..15.
  static NoiseSpec at_level(NoiseFamily family, int level);
  /// Zero noise.
  static NoiseSpec none() { return with_params(NoiseFamily::normal, 0.0, 0.0); }

  NoiseFamily family() const { return family_; }
  double param_a() const { return a_; }
  double param_b() const { return b_; }
  std::optional<int> level() const { return level_; }

  double mean() const;  // of the uncentered distribution
  double sd() const;    // +inf when the variance is infinite
  bool finite_variance() const;
  double variance() const;

  double sample(Rng& rng) const;  // centered draw
  std::string label() const;

 private:
  friend NoiseSpec calibrate_noise(NoiseFamily family, int level);

  NoiseFamily family_ = NoiseFamily::normal;
  double a_ = 0.0;
  double b_ = 1.0;
  std::optional<int> level_;
};

/// Family parameters whose distribution has standard deviation ladder_sd(level).
NoiseSpec calibrate_noise(NoiseFamily family, int level);

/// Log-scale sigma with sd(lognormal(log_location, sigma)) = target_sd, by bisection.
double lognormal_log_scale_for_sd(double target_sd, double log_location = 0.0);

/// Quadratic risk R(w) = (w - w*)' Sigma (w - w*) / 2 + Var(noise) / 2 of the
/// squared loss under inputs x ~ N(0, Sigma) and centered additive noise.
class SyntheticRisk {
 public:
  SyntheticRisk(Eigen::MatrixXd sigma, Eigen::VectorXd w_star, NoiseSpec noise);
  static SyntheticRisk isotropic(Eigen::VectorXd w_star, NoiseSpec noise);

  Eigen::Index dim() const { return w_star_.size(); }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  const Eigen::VectorXd& w_star() const { return w_star_; }
  const NoiseSpec& noise() const { return noise_; }
  double kappa() const { return kappa_; }    // smallest eigenvalue
  double lambda() const { return lambda_; }  // largest eigenvalue

  double risk(const Eigen::VectorXd& w) const;
  double excess_risk(const Eigen::VectorXd& w) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const;

  /// n observations y = x' w* + noise with x ~ N(0, Sigma).
  Dataset sample(Eigen::Index n, Rng& rng) const;

 private:
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd w_star_;
  NoiseSpec noise_;
  double kappa_ = 1.0;
  double lambda_ = 1.0;
};

/// w_k = pi/4 + (-1)^(k-1) (k-1) pi/8 for k = 1, 2, ...
double w_star_sequence(int k);
inline constexpr int kWStarPool = 500;
Eigen::VectorXd gen_w_star(Eigen::Index d, Rng& rng);

struct RegressionTask {
  Dataset data;
  Eigen::VectorXd w_star;
};

/// Isotropic Gaussian inputs, w* from gen_w_star.
RegressionTask gen_regression(Eigen::Index n, Eigen::Index d, const NoiseSpec& noise, Rng& rng);
Dataset gen_regression(Eigen::Index n, const Eigen::VectorXd& w_star, const NoiseSpec& noise,
                       Rng& rng);

/// Random symmetric positive-definite matrix with eigenvalues in [lo, hi].
Eigen::MatrixXd random_spd(Eigen::Index d, double lo, double hi, Rng& rng);

struct InitSpec {
  enum class Kind { uniform_box_around_star, fixed };
  Kind kind = Kind::uniform_box_around_star;
  double delta = 5.0;
  Eigen::VectorXd w0;

  static InitSpec box(double delta);
  static InitSpec fixed_at(Eigen::VectorXd w0);
};

Eigen::VectorXd draw_initial(const InitSpec& init, const Eigen::VectorXd& w_star, Rng& rng);

struct ClassificationSpec {
  int classes = 3;
  Eigen::Index features = 20;
  /// Gaussian spread of each class around its center in [0, 1]^F.
  double spread = 0.15;
  /// Fraction of labels replaced by a uniformly drawn class.
  double label_noise = 0.05;
};

/// Class centers drawn once from `centers_rng`, observations from `rng`.
Eigen::MatrixXd gen_class_centers(const ClassificationSpec& spec, Rng& centers_rng);
Dataset gen_classification(Eigen::Index n, const ClassificationSpec& spec,
                           const Eigen::MatrixXd& centers, Rng& rng);

}  // namespace rgd
