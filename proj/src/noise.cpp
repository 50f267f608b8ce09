#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "rgd/datagen.hpp"
#include "rgd/errors.hpp"

namespace rgd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEulerGamma = 0.57721566490153286061;

// Shape parameters held fixed along the ladder; only the scale moves.
constexpr double kLadderLogScale = 0.75;
constexpr double kLadderLogLogisticShape = 6.0;
constexpr double kLadderParetoShape = 5.0;
constexpr double kLadderStudentDof = 5.0;
constexpr double kLadderWeibullShape = 0.75;

constexpr std::array kFamilies = {
    NoiseFamily::normal,    NoiseFamily::lognormal, NoiseFamily::loglogistic,
    NoiseFamily::triangular_sym, NoiseFamily::pareto, NoiseFamily::student_t,
    NoiseFamily::laplace,   NoiseFamily::gumbel,    NoiseFamily::weibull,
    NoiseFamily::exponential, NoiseFamily::logistic,
};

double open_unit(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double v = u(rng);
  while (v <= 0.0 || v >= 1.0) {
    v = u(rng);
  }
  return v;
}

double loglogistic_unit_variance(double shape) {
  const double b = std::numbers::pi / shape;
  const double s = std::sin(b);
  return 2.0 * b / std::sin(2.0 * b) - b * b / (s * s);
}

double weibull_unit_variance(double shape) {
  const double g1 = std::tgamma(1.0 + 1.0 / shape);
  return std::tgamma(1.0 + 2.0 / shape) - g1 * g1;
}

double pareto_unit_variance(double shape) {
  return shape / ((shape - 1.0) * (shape - 1.0) * (shape - 2.0));
}

// Standard deviation of the family member with unit scale; the ladder
// multiplies the scale parameter by target / unit_sd.
double unit_sd(NoiseFamily family, double shape) {
  switch (family) {
    case NoiseFamily::loglogistic:
      return std::sqrt(loglogistic_unit_variance(shape));
    case NoiseFamily::pareto:
      return std::sqrt(pareto_unit_variance(shape));
    case NoiseFamily::student_t:
      return std::sqrt(shape / (shape - 2.0));
    case NoiseFamily::weibull:
      return std::sqrt(weibull_unit_variance(shape));
    default:
      return 1.0;
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ b);
}

std::uint64_t tag_of(std::string_view name) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::string_view short_name(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::normal: return "norm";
    case NoiseFamily::lognormal: return "lnorm";
    case NoiseFamily::loglogistic: return "llog";
    case NoiseFamily::triangular_sym: return "tri_s";
    case NoiseFamily::pareto: return "pareto";
    case NoiseFamily::student_t: return "t";
    case NoiseFamily::laplace: return "lap";
    case NoiseFamily::gumbel: return "gum";
    case NoiseFamily::weibull: return "weibull";
    case NoiseFamily::exponential: return "exp";
    case NoiseFamily::logistic: return "lgst";
  }
  return "unknown";
}

std::string_view long_name(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::normal: return "normal";
    case NoiseFamily::lognormal: return "lognormal";
    case NoiseFamily::loglogistic: return "loglogistic";
    case NoiseFamily::triangular_sym: return "triangular_sym";
    case NoiseFamily::pareto: return "pareto";
    case NoiseFamily::student_t: return "student_t";
    case NoiseFamily::laplace: return "laplace";
    case NoiseFamily::gumbel: return "gumbel";
    case NoiseFamily::weibull: return "weibull";
    case NoiseFamily::exponential: return "exponential";
    case NoiseFamily::logistic: return "logistic";
  }
  return "unknown";
}

std::optional<NoiseFamily> parse_noise_family(std::string_view name) {
  for (NoiseFamily f : kFamilies) {
    if (short_name(f) == name) {
      return f;
    }
  }
  for (NoiseFamily f : kFamilies) {
    if (long_name(f) == name) {
      return f;
    }
  }
  return std::nullopt;
}

std::span<const NoiseFamily> all_noise_families() { return kFamilies; }

double ladder_sd(int level) {
  if (level < 1 || level > kNoiseLevels) {
    throw InvalidConfig("noise level must lie in 1..15, got " + std::to_string(level));
  }
  return kLadderLow + (level - 1) * (kLadderHigh - kLadderLow) / (kNoiseLevels - 1);
}

NoiseSpec NoiseSpec::with_params(NoiseFamily family, double a, double b) {
  NoiseSpec s;
  s.family_ = family;
  s.a_ = a;
  s.b_ = b;
  auto require = [&](bool ok, const char* what) {
    if (!ok) {
      throw InvalidConfig(std::string(short_name(family)) + ": " + what);
    }
  };
  require(std::isfinite(a) && std::isfinite(b), "parameters must be finite");
  switch (family) {
    case NoiseFamily::normal:
      require(b >= 0.0, "sd must be non-negative");
      break;
    case NoiseFamily::lognormal:
      require(b > 0.0, "log-scale must be positive");
      break;
    case NoiseFamily::loglogistic:
      require(a > 0.0, "scale must be positive");
      require(b > 1.0, "shape must exceed 1 for a finite mean");
      break;
    case NoiseFamily::pareto:
      require(a > 0.0, "scale must be positive");
      require(b > 1.0, "shape must exceed 1 for a finite mean");
      break;
    case NoiseFamily::student_t:
      require(a > 0.0, "scale must be positive");
      require(b > 1.0, "degrees of freedom must exceed 1 for a finite mean");
      break;
    case NoiseFamily::weibull:
      require(a > 0.0 && b > 0.0, "scale and shape must be positive");
      break;
    case NoiseFamily::triangular_sym:
    case NoiseFamily::laplace:
    case NoiseFamily::gumbel:
    case NoiseFamily::exponential:
    case NoiseFamily::logistic:
      require(a > 0.0, "scale must be positive");
      break;
  }
  return s;
}

NoiseSpec NoiseSpec::at_level(NoiseFamily family, int level) { return calibrate_noise(family, level); }

double NoiseSpec::mean() const {
  switch (family_) {
    case NoiseFamily::normal:
      return a_;
    case NoiseFamily::lognormal:
      return std::exp(a_ + 0.5 * b_ * b_);
    case NoiseFamily::loglogistic: {
      const double t = std::numbers::pi / b_;
      return a_ * t / std::sin(t);
    }
    case NoiseFamily::pareto:
      return a_ * b_ / (b_ - 1.0);
    case NoiseFamily::gumbel:
      return kEulerGamma * a_;
    case NoiseFamily::weibull:
      return a_ * std::tgamma(1.0 + 1.0 / b_);
    case NoiseFamily::exponential:
      return a_;
    case NoiseFamily::student_t:
    case NoiseFamily::triangular_sym:
    case NoiseFamily::laplace:
    case NoiseFamily::logistic:
      return 0.0;
  }
  return 0.0;
}

bool NoiseSpec::finite_variance() const {
  switch (family_) {
    case NoiseFamily::loglogistic:
    case NoiseFamily::pareto:
    case NoiseFamily::student_t:
      return b_ > 2.0;
    default:
      return true;
  }
}

double NoiseSpec::variance() const {
  if (!finite_variance()) {
    return kInf;
  }
  switch (family_) {
    case NoiseFamily::normal:
      return b_ * b_;
    case NoiseFamily::lognormal: {
      const double s2 = b_ * b_;
      return std::expm1(s2) * std::exp(2.0 * a_ + s2);
    }
    case NoiseFamily::loglogistic:
      return a_ * a_ * loglogistic_unit_variance(b_);
    case NoiseFamily::triangular_sym:
      return a_ * a_ / 6.0;
    case NoiseFamily::pareto:
      return a_ * a_ * pareto_unit_variance(b_);
    case NoiseFamily::student_t:
      return a_ * a_ * b_ / (b_ - 2.0);
    case NoiseFamily::laplace:
      return 2.0 * a_ * a_;
    case NoiseFamily::gumbel:
      return std::numbers::pi * std::numbers::pi * a_ * a_ / 6.0;
    case NoiseFamily::weibull:
      return a_ * a_ * weibull_unit_variance(b_);
    case NoiseFamily::exponential:
      return a_ * a_;
    case NoiseFamily::logistic:
      return std::numbers::pi * std::numbers::pi * a_ * a_ / 3.0;
  }
  return kInf;
}

double NoiseSpec::sd() const { return std::sqrt(variance()); }

double NoiseSpec::sample(Rng& rng) const {
  double x = 0.0;
  switch (family_) {
    case NoiseFamily::normal:
      if (b_ == 0.0) {
        return 0.0;
      }
      x = std::normal_distribution<double>(a_, b_)(rng);
      break;
    case NoiseFamily::lognormal:
      x = std::lognormal_distribution<double>(a_, b_)(rng);
      break;
    case NoiseFamily::loglogistic: {
      const double u = open_unit(rng);
      x = a_ * std::pow(u / (1.0 - u), 1.0 / b_);
      break;
    }
    case NoiseFamily::triangular_sym: {
      const double u = open_unit(rng);
      x = u < 0.5 ? a_ * (std::sqrt(2.0 * u) - 1.0) : a_ * (1.0 - std::sqrt(2.0 * (1.0 - u)));
      break;
    }
    case NoiseFamily::pareto:
      x = a_ * std::pow(open_unit(rng), -1.0 / b_);
      break;
    case NoiseFamily::student_t:
      x = a_ * std::student_t_distribution<double>(b_)(rng);
      break;
    case NoiseFamily::laplace: {
      const double v = open_unit(rng) - 0.5;
      x = -a_ * std::copysign(std::log1p(-2.0 * std::abs(v)), v);
      break;
    }
    case NoiseFamily::gumbel:
      x = std::extreme_value_distribution<double>(0.0, a_)(rng);
      break;
    case NoiseFamily::weibull:
      x = std::weibull_distribution<double>(b_, a_)(rng);
      break;
    case NoiseFamily::exponential:
      x = std::exponential_distribution<double>(1.0 / a_)(rng);
      break;
    case NoiseFamily::logistic: {
      const double u = open_unit(rng);
      x = a_ * std::log(u / (1.0 - u));
      break;
    }
  }
  return x - mean();
}

std::string NoiseSpec::label() const {
  std::ostringstream os;
  os << short_name(family_);
  if (level_) {
    os << "@L" << *level_;
  } else {
    os << '(' << a_ << '/' << b_ << ')';
  }
  return os.str();
}

double lognormal_log_scale_for_sd(double target_sd, double log_location) {
  if (!(target_sd > 0.0) || !std::isfinite(target_sd)) {
    throw InvalidConfig("lognormal: target sd must be positive");
  }
  auto sd_of = [&](double s) {
    const double s2 = s * s;
    return std::sqrt(std::expm1(s2) * std::exp(2.0 * log_location + s2));
  };
  double lo = 0.0;
  double hi = 1.0;
  while (sd_of(hi) < target_sd) {
    hi *= 2.0;
    if (hi > 64.0) {
      throw InvalidConfig("lognormal: target sd out of range");
    }
  }
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) {
      break;
    }
    (sd_of(mid) < target_sd ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

NoiseSpec calibrate_noise(NoiseFamily family, int level) {
  const double sd = ladder_sd(level);
  NoiseSpec spec;
  switch (family) {
    case NoiseFamily::normal:
      spec = NoiseSpec::with_params(family, 0.0, sd);
      break;
    case NoiseFamily::lognormal: {
      const double s2 = kLadderLogScale * kLadderLogScale;
      const double unit = std::sqrt(std::expm1(s2) * std::exp(s2));
      spec = NoiseSpec::with_params(family, std::log(sd / unit), kLadderLogScale);
      break;
    }
    case NoiseFamily::loglogistic:
      spec = NoiseSpec::with_params(family, sd / unit_sd(family, kLadderLogLogisticShape),
                                    kLadderLogLogisticShape);
      break;
    case NoiseFamily::pareto:
      spec = NoiseSpec::with_params(family, sd / unit_sd(family, kLadderParetoShape),
                                    kLadderParetoShape);
      break;
    case NoiseFamily::student_t:
      spec = NoiseSpec::with_params(family, sd / unit_sd(family, kLadderStudentDof),
                                    kLadderStudentDof);
      break;
    case NoiseFamily::weibull:
      spec = NoiseSpec::with_params(family, sd / unit_sd(family, kLadderWeibullShape),
                                    kLadderWeibullShape);
      break;
    case NoiseFamily::triangular_sym:
      spec = NoiseSpec::with_params(family, sd * std::sqrt(6.0));
      break;
    case NoiseFamily::laplace:
      spec = NoiseSpec::with_params(family, sd / std::numbers::sqrt2);
      break;
    case NoiseFamily::gumbel:
      spec = NoiseSpec::with_params(family, sd * std::sqrt(6.0) / std::numbers::pi);
      break;
    case NoiseFamily::exponential:
      spec = NoiseSpec::with_params(family, sd);
      break;
    case NoiseFamily::logistic:
      spec = NoiseSpec::with_params(family, sd * std::sqrt(3.0) / std::numbers::pi);
      break;
  }
  spec.level_ = level;
  return spec;
}

}  // namespace rgd
