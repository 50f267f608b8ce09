#pragma once

// Scalar M-estimation of location and dispersion.
//
// Location is the root of  sum_i psi((x_i - theta) / s) = 0  for a bounded,
// increasing influence function psi = rho'. Dispersion is the root of
// sum_i chi((x_i - pivot) / sigma) = 0  for an even chi with chi(0) < 0.
// Both roots are found with the classic fixed-point updates, falling back to
// bisection on the monotone root equation when the fixed point stalls.

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace rgd::mest {

enum class RhoKind { gudermannian, log_cosh, pseudo_huber, quadratic_test_only };

/// Even loss rho with psi = rho' and psi'. All three robust kinds satisfy
/// rho(u) ~ u^2/2 near zero, grow linearly at infinity and have bounded,
/// strictly increasing psi. `quadratic_test_only` (rho = u^2/2) turns the
/// location estimate into the sample mean and is rejected by production
/// configurations.
class RhoFunction {
 public:
  constexpr RhoFunction() = default;
  constexpr explicit RhoFunction(RhoKind kind) : kind_(kind) {}

  static RhoFunction gudermannian() { return RhoFunction(RhoKind::gudermannian); }

  RhoKind kind() const { return kind_; }
  bool bounded() const { return kind_ != RhoKind::quadratic_test_only; }

  double rho(double u) const;
  double psi(double u) const;
  double psi_prime(double u) const;

  /// Supremum of |psi|; infinite for the quadratic kind.
  double psi_bound() const;

 private:
  RhoKind kind_ = RhoKind::gudermannian;
};

enum class ChiKind { geman_quadratic };

/// chi(u) = u^2 / (1 + u^2) - c, with c = E[u^2 / (1 + u^2)] under N(0, 1) so
/// that a standard normal sample has unit dispersion.
class ChiFunction {
 public:
  ChiFunction();
  explicit ChiFunction(double center);

  ChiKind kind() const { return ChiKind::geman_quadratic; }
  double center() const { return center_; }
  double operator()(double u) const;

 private:
  double center_;
};

/// E[u^2 / (1 + u^2)] for u ~ N(0, 1), by adaptive quadrature. Computed once.
double geman_center_constant();

struct FixedPointSettings {
  int max_iters = 50;
  /// Residual tolerance on |sum psi| / n and |sum chi| / n.
  double rel_tolerance = 1e-12;
  /// Dispersion floor, relative: floor = sigma_floor * (1 + |pivot|).
  double sigma_floor = 1e-12;

  void validate() const;
};

/// Outcome of an iterative scalar solve. `converged` refers to the fixed-point
/// iteration; when it stalls or runs out of iterations the bisection result is
/// returned with `used_fallback` set.
struct Estimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  bool used_fallback = false;
  bool at_floor = false;
};

Estimate locate(std::span<const double> data, double scale, const RhoFunction& rho,
                const FixedPointSettings& fp = {});

/// Dispersion about `pivot`. `start` seeds the fixed-point iteration; by
/// default the root-mean-square residual is used.
Estimate rescale(std::span<const double> data, double pivot, const ChiFunction& chi,
                 const FixedPointSettings& fp = {}, std::optional<double> start = {});

/// sigma * sqrt(n / log(2 / delta)).
double confidence_scale(double sigma_hat, long n, double delta);

inline double psi_eval(double u, const RhoFunction& rho) { return rho.psi(u); }
inline double chi_eval(double u, const ChiFunction& chi) { return chi(u); }

std::string_view to_string(RhoKind kind);
std::optional<RhoKind> parse_rho_kind(std::string_view name);

double median(std::span<const double> data);

}  // namespace rgd::mest
