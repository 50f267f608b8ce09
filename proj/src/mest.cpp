#include "rgd/mest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rgd/errors.hpp"

namespace rgd::mest {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;
// Catalan's constant, the integral of atan(exp(-x)) over [0, inf).
constexpr double kCatalan = 0.915965594177219015054603514932384110774;

double gudermannian_rho(double u) {
  const double a = std::abs(u);
  if (a <= 1.0) {
    auto gd = [](double x) { return 2.0 * std::atan(std::tanh(0.5 * x)); };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(gd, 0.0, a, 5, 1e-15);
  }
  // gd(x) = pi/2 - 2 atan(exp(-x)); the correction integral is negligible past 40.
  auto tail = [](double x) { return std::atan(std::exp(-x)); };
  double correction = kCatalan;
  if (a < 40.0) {
    correction = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(tail, 0.0, a, 10,
                                                                                 1e-15);
  }
  return kHalfPi * a - 2.0 * correction;
}

void require_finite_sample(std::span<const double> data, const char* op) {
  if (data.empty()) {
    throw InvalidInput(std::string(op) + ": empty sample");
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw InvalidInput(std::string(op) + ": non-finite entry at index " + std::to_string(i));
    }
  }
}

double mean_psi(std::span<const double> data, double theta, double scale, const RhoFunction& rho) {
  double acc = 0.0;
  for (double x : data) {
    acc += rho.psi((x - theta) / scale);
  }
  return acc / static_cast<double>(data.size());
}

double mean_chi(std::span<const double> data, double pivot, double sigma, const ChiFunction& chi) {
  double acc = 0.0;
  for (double x : data) {
    acc += chi((x - pivot) / sigma);
  }
  return acc / static_cast<double>(data.size());
}

// Sign change of a decreasing function on [lo, hi]: f(lo) >= 0 >= f(hi).
template <class F, class Mid>
double bisect_decreasing(F f, double lo, double hi, Mid midpoint) {
  double best = lo;
  double best_abs = std::abs(f(lo));
  for (int k = 0; k < 400; ++k) {
    const double mid = midpoint(lo, hi);
    if (!(mid > lo && mid < hi)) {
      break;
    }
    const double v = f(mid);
    if (std::abs(v) < best_abs) {
      best = mid;
      best_abs = std::abs(v);
    }
    if (v > 0.0) {
      lo = mid;
    } else if (v < 0.0) {
      hi = mid;
    } else {
      return mid;
    }
  }
  const double fhi = std::abs(f(hi));
  return fhi < best_abs ? hi : best;
}

}  // namespace

double RhoFunction::rho(double u) const {
  switch (kind_) {
    case RhoKind::gudermannian:
      return gudermannian_rho(u);
    case RhoKind::log_cosh: {
      const double a = std::abs(u);
      if (a < 1.0) {
        return std::log(std::cosh(a));
      }
      return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
    }
    case RhoKind::pseudo_huber:
      return 2.0 * (std::sqrt(1.0 + 0.5 * u * u) - 1.0);
    case RhoKind::quadratic_test_only:
      return 0.5 * u * u;
  }
  return 0.0;
}

double RhoFunction::psi(double u) const {
  switch (kind_) {
    case RhoKind::gudermannian:
      // Equal to 2 atan(exp(u)) - pi/2, written so that it is exactly odd.
      return 2.0 * std::atan(std::tanh(0.5 * u));
    case RhoKind::log_cosh:
      return std::tanh(u);
    case RhoKind::pseudo_huber:
      return u / std::sqrt(1.0 + 0.5 * u * u);
    case RhoKind::quadratic_test_only:
      return u;
  }
  return 0.0;
}

double RhoFunction::psi_prime(double u) const {
  switch (kind_) {
    case RhoKind::gudermannian:
      return 1.0 / std::cosh(u);
    case RhoKind::log_cosh: {
      const double c = std::cosh(u);
      return 1.0 / (c * c);
    }
    case RhoKind::pseudo_huber:
      return std::pow(1.0 + 0.5 * u * u, -1.5);
    case RhoKind::quadratic_test_only:
      return 1.0;
  }
  return 0.0;
}

double RhoFunction::psi_bound() const {
  switch (kind_) {
    case RhoKind::gudermannian:
      return kHalfPi;
    case RhoKind::log_cosh:
      return 1.0;
    case RhoKind::pseudo_huber:
      return std::numbers::sqrt2;
    case RhoKind::quadratic_test_only:
      return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

double geman_center_constant() {
  static const double value = [] {
    boost::math::quadrature::exp_sinh<double> integrator;
    auto f = [](double x) {
      const double x2 = x * x;
      return x2 / (1.0 + x2) * std::exp(-0.5 * x2);
    };
    // Twice the half-line integral, normalized by the Gaussian constant.
    return 2.0 * integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity()) /
           std::sqrt(2.0 * std::numbers::pi);
  }();
  return value;
}

ChiFunction::ChiFunction() : center_(geman_center_constant()) {}

ChiFunction::ChiFunction(double center) : center_(center) {
  if (!(center > 0.0 && center < 1.0)) {
    throw InvalidConfig("chi center constant must lie in (0, 1)");
  }
}

double ChiFunction::operator()(double u) const {
  const double u2 = u * u;
  if (!std::isfinite(u2)) {
    return 1.0 - center_;
  }
  return u2 / (1.0 + u2) - center_;
}

void FixedPointSettings::validate() const {
  if (max_iters < 1) {
    throw InvalidConfig("fixed-point max_iters must be at least 1");
  }
  if (!(rel_tolerance > 0.0)) {
    throw InvalidConfig("fixed-point rel_tolerance must be positive");
  }
  if (!(sigma_floor > 0.0)) {
    throw InvalidConfig("fixed-point sigma_floor must be positive");
  }
}

double median(std::span<const double> data) {
  if (data.empty()) {
    throw InvalidInput("median: empty sample");
  }
  std::vector<double> v(data.begin(), data.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) {
    return upper;
  }
  const double lower = *std::max_element(v.begin(), v.begin() + mid);
  return lower + 0.5 * (upper - lower);
}

Estimate locate(std::span<const double> data, double scale, const RhoFunction& rho,
                const FixedPointSettings& fp) {
  require_finite_sample(data, "locate");
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw InvalidInput("locate: scale must be positive and finite");
  }
  fp.validate();

  const auto [lo_it, hi_it] = std::minmax_element(data.begin(), data.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  Estimate est;
  if (lo == hi) {
    est.value = lo;
    est.converged = true;
    return est;
  }

  double theta = median(data);
  double residual = mean_psi(data, theta, scale, rho);
  double previous = std::abs(residual);
  int stalls = 0;
  for (int k = 0; k < fp.max_iters; ++k) {
    if (std::abs(residual) <= fp.rel_tolerance) {
      est.converged = true;
      break;
    }
    theta = std::clamp(theta + scale * residual, lo, hi);
    residual = mean_psi(data, theta, scale, rho);
    est.iterations = k + 1;
    stalls = std::abs(residual) >= previous ? stalls + 1 : 0;
    previous = std::abs(residual);
    if (stalls >= 5) {
      break;
    }
  }
  if (!est.converged && std::abs(residual) <= fp.rel_tolerance) {
    est.converged = true;
  }
  if (est.converged) {
    est.value = theta;
    return est;
  }

  est.used_fallback = true;
  est.value = bisect_decreasing([&](double t) { return mean_psi(data, t, scale, rho); }, lo, hi,
                                [](double a, double b) { return a + 0.5 * (b - a); });
  return est;
}

Estimate rescale(std::span<const double> data, double pivot, const ChiFunction& chi,
                 const FixedPointSettings& fp, std::optional<double> start) {
  require_finite_sample(data, "rescale");
  if (!std::isfinite(pivot)) {
    throw InvalidInput("rescale: pivot must be finite");
  }
  fp.validate();

  const double floor = fp.sigma_floor * (1.0 + std::abs(pivot));
  Estimate est;
  // Fewer than a fraction c of non-zero residuals leaves no root above the floor.
  if (mean_chi(data, pivot, floor, chi) <= 0.0) {
    est.value = floor;
    est.converged = true;
    est.at_floor = true;
    return est;
  }

  double max_abs = 0.0;
  double sum_sq = 0.0;
  for (double x : data) {
    const double r = x - pivot;
    max_abs = std::max(max_abs, std::abs(r));
    sum_sq += r * r;
  }
  double sigma = std::sqrt(sum_sq / static_cast<double>(data.size()));
  if (start) {
    if (!(*start > 0.0) || !std::isfinite(*start)) {
      throw InvalidInput("rescale: start value must be positive and finite");
    }
    sigma = *start;
  }
  sigma = std::max(sigma, floor);

  const double c = chi.center();
  double residual = mean_chi(data, pivot, sigma, chi);
  double previous = std::abs(residual);
  int stalls = 0;
  for (int k = 0; k < fp.max_iters; ++k) {
    if (std::abs(residual) <= fp.rel_tolerance) {
      est.converged = true;
      break;
    }
    // sigma <- sigma * (1 - mean chi / chi(0))^(1/2), with chi(0) = -c.
    sigma = std::max(floor, sigma * std::sqrt(std::max(0.0, 1.0 + residual / c)));
    residual = mean_chi(data, pivot, sigma, chi);
    est.iterations = k + 1;
    stalls = std::abs(residual) >= previous ? stalls + 1 : 0;
    previous = std::abs(residual);
    if (stalls >= 5) {
      break;
    }
  }
  if (!est.converged && std::abs(residual) <= fp.rel_tolerance) {
    est.converged = true;
  }
  if (est.converged) {
    est.value = sigma;
    return est;
  }

  est.used_fallback = true;
  const double upper = std::max(10.0 * max_abs, 2.0 * floor);
  est.value = bisect_decreasing([&](double s) { return mean_chi(data, pivot, s, chi); }, floor,
                                upper, [](double a, double b) { return std::sqrt(a) * std::sqrt(b); });
  return est;
}

double confidence_scale(double sigma_hat, long n, double delta) {
  if (n < 1) {
    throw InvalidInput("confidence_scale: n must be at least 1");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidInput("confidence_scale: delta must lie in (0, 1)");
  }
  if (!(sigma_hat > 0.0) || !std::isfinite(sigma_hat)) {
    throw InvalidInput("confidence_scale: sigma must be positive and finite");
  }
  return sigma_hat * std::sqrt(static_cast<double>(n) / std::log(2.0 / delta));
}

std::string_view to_string(RhoKind kind) {
  switch (kind) {
    case RhoKind::gudermannian:
      return "gudermannian";
    case RhoKind::log_cosh:
      return "log_cosh";
    case RhoKind::pseudo_huber:
      return "pseudo_huber";
    case RhoKind::quadratic_test_only:
      return "quadratic_test_only";
  }
  return "unknown";
}

std::optional<RhoKind> parse_rho_kind(std::string_view name) {
  for (RhoKind k : {RhoKind::gudermannian, RhoKind::log_cosh, RhoKind::pseudo_huber,
                    RhoKind::quadratic_test_only}) {
    if (to_string(k) == name) {
      return k;
    }
  }
  if (name == "quadratic") {
    return RhoKind::quadratic_test_only;
  }
  return std::nullopt;
}

}  // namespace rgd::mest
