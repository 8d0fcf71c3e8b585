#ifndef DNAGRF_COVARIANCE_HPP
#define DNAGRF_COVARIANCE_HPP

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dnagrf {

/// Raised when a model or sampler is asked for a combination it cannot serve
/// (e.g. a Gaussian spectral density in d > 1).
class UnsupportedConfiguration : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class CovarianceFamily { Matern, Gaussian, Cauchy };

inline std::string_view family_name(CovarianceFamily f) {
  switch (f) {
    case CovarianceFamily::Matern: return "matern";
    case CovarianceFamily::Gaussian: return "gaussian";
    case CovarianceFamily::Cauchy: return "cauchy";
  }
  return "unknown";
}

inline CovarianceFamily parse_family(std::string_view s) {
  if (s == "matern") return CovarianceFamily::Matern;
  if (s == "gaussian") return CovarianceFamily::Gaussian;
  if (s == "cauchy") return CovarianceFamily::Cauchy;
  throw std::invalid_argument("unknown covariance model '" + std::string(s) + "'");
}

/// Isotropic, unit-variance covariance rho(|x - y| / ell).
///
/// `nu` is only meaningful for the Matern family.
struct CovarianceModel {
  CovarianceFamily family = CovarianceFamily::Matern;
  double nu = 0.5;
  double ell = 1.0;

  static CovarianceModel matern(double nu, double ell) {
    return checked({CovarianceFamily::Matern, nu, ell});
  }
  static CovarianceModel gaussian(double ell) {
    return checked({CovarianceFamily::Gaussian, 0.0, ell});
  }
  static CovarianceModel cauchy(double ell) {
    return checked({CovarianceFamily::Cauchy, 0.0, ell});
  }

  static CovarianceModel checked(CovarianceModel m) {
    if (!(m.ell > 0.0)) throw std::invalid_argument("correlation length must be positive");
    if (m.family == CovarianceFamily::Matern && !(m.nu > 0.0))
      throw std::invalid_argument("Matern smoothness nu must be positive");
    return m;
  }

  /// kappa = sqrt(2 nu) / ell; only defined for Matern.
  [[nodiscard]] double kappa() const { return std::sqrt(2.0 * nu) / ell; }

  friend bool operator==(const CovarianceModel&, const CovarianceModel&) = default;
};

namespace detail {

// Matern arguments beyond this are below double range.
inline constexpr double kMaternUnderflow = 700.0;

inline double matern_rho(double nu, double s) {
  const double x = std::sqrt(2.0 * nu) * s;
  if (x == 0.0) return 1.0;
  if (x > kMaternUnderflow) return 0.0;
  const double k = std::cyl_bessel_k(nu, x);
  if (!std::isfinite(k)) return 1.0;  // x tiny enough that rho(x) == 1 to double precision
  const double log_pref = (1.0 - nu) * std::numbers::ln2 - std::lgamma(nu) + nu * std::log(x);
  const double v = std::exp(log_pref) * k;
  return v > 1.0 ? 1.0 : v;
}

}  // namespace detail

/// Isotropic covariance rho(s), s = |delta| / ell. rho(0) == 1 for all families.
inline double rho(const CovarianceModel& m, double s) {
  if (!(s >= 0.0)) throw std::domain_error("rho: argument must be non-negative");
  switch (m.family) {
    case CovarianceFamily::Matern: return detail::matern_rho(m.nu, s);
    case CovarianceFamily::Gaussian: return std::exp(-0.5 * s * s);
    case CovarianceFamily::Cauchy: return 1.0 / (1.0 + s * s);
  }
  return 0.0;
}

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// Stationary covariance phi(delta) = rho(|delta|_2 / ell).
inline double stationary(const CovarianceModel& m, std::span<const double> delta) {
  return rho(m, norm2(delta) / m.ell);
}

inline double stationary(const CovarianceModel& m, double delta) {
  return rho(m, std::abs(delta) / m.ell);
}

/// C_nu = (4 pi)^{d/2} Gamma(nu + d/2) / Gamma(nu).
inline double matern_constant(double nu, int dim) {
  const double d2 = 0.5 * dim;
  return std::pow(4.0 * std::numbers::pi, d2) * std::exp(std::lgamma(nu + d2) - std::lgamma(nu));
}

/// Fourier transform of the stationary covariance in `dim` dimensions.
struct SpectralDensity {
  CovarianceModel model;
  int dim = 1;

  SpectralDensity(CovarianceModel m, int d) : model(m), dim(d) {
    if (d < 1 || d > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
    if (m.family != CovarianceFamily::Matern && d != 1)
      throw UnsupportedConfiguration(std::string(family_name(m.family)) +
                                     " spectral density is only available for d = 1");
    if (m.family == CovarianceFamily::Matern) {
      cnu_ = matern_constant(m.nu, d);
      log_scale_ = d * std::log(m.ell) + std::log(cnu_) + m.nu * std::log(2.0 * m.nu);
    }
  }

  /// Value at radius r = |y|_2.
  [[nodiscard]] double radial(double r) const {
    const double ell = model.ell;
    switch (model.family) {
      case CovarianceFamily::Matern: {
        const double t = 2.0 * std::numbers::pi * ell * r;
        return std::exp(log_scale_ - (model.nu + 0.5 * dim) * std::log(2.0 * model.nu + t * t));
      }
      case CovarianceFamily::Gaussian:
        return std::sqrt(2.0 * std::numbers::pi) * ell *
               std::exp(-2.0 * std::numbers::pi * std::numbers::pi * ell * ell * r * r);
      case CovarianceFamily::Cauchy:
        return std::numbers::pi * ell * std::exp(-2.0 * std::numbers::pi * ell * std::abs(r));
    }
    return 0.0;
  }

  [[nodiscard]] double operator()(std::span<const double> y) const {
    if (static_cast<int>(y.size()) != dim) throw std::invalid_argument("spectral density: wrong dimension");
    return radial(norm2(y));
  }

  [[nodiscard]] double matern_cnu() const { return cnu_; }

 private:
  double cnu_ = 0.0;
  double log_scale_ = 0.0;
};

inline double spectral_density(const SpectralDensity& sd, std::span<const double> y) { return sd(y); }

/// Constant A of the decay bound phî(y) <= A (1 + |y|)^{-(d + eps)}, eps = 2 nu.
inline double matern_assumption_constant(const CovarianceModel& m, int dim) {
  return matern_constant(m.nu, dim) * std::pow(m.ell, dim) * std::pow(m.nu, -0.5 * dim) *
         std::pow(2.0, 2.0 * m.nu + 0.5 * dim);
}

/// True iff the Matern decay bound holds at every sample point.
template <class Points>
bool check_assumption_bound(const CovarianceModel& m, int dim, const Points& samples) {
  if (m.family != CovarianceFamily::Matern)
    throw UnsupportedConfiguration("assumption bound is only defined for Matern");
  const SpectralDensity sd(m, dim);
  const double a = matern_assumption_constant(m, dim);
  const double eps = 2.0 * m.nu;
  for (const auto& y : samples) {
    const double r = norm2(std::span<const double>(y.data(), y.size()));
    // compare in log space; both sides underflow for large |y|
    const double lhs = std::log(sd.radial(r));
    const double rhs = std::log(a) - (dim + eps) * std::log1p(r);
    if (lhs > rhs + 1e-12 * std::abs(rhs)) return false;
  }
  return true;
}

}  // namespace dnagrf

#endif  // DNAGRF_COVARIANCE_HPP
