// Independent reference computations for the tests. Nothing here calls the
// fast paths of the library.
#ifndef DNAGRF_TESTS_ORACLES_HPP
#define DNAGRF_TESTS_ORACLES_HPP

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;

inline std::vector<double> naive_dct1(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> y(n, 0.0);
  for (std::size_t m = 0; m < n; ++m)
    for (std::size_t k = 0; k < n; ++k) y[m] += x[k] * std::cos(pi * double(m * k) / double(n - 1));
  return y;
}

// sum_{k=1}^{L} x_k sin(pi m k / (L+1)), m = 1..L, both stored 0-based
inline std::vector<double> naive_dst1_interior(const std::vector<double>& x) {
  const std::size_t l = x.size();
  std::vector<double> y(l, 0.0);
  for (std::size_t m = 1; m <= l; ++m)
    for (std::size_t k = 1; k <= l; ++k) y[m - 1] += x[k - 1] * std::sin(pi * double(m * k) / double(l + 1));
  return y;
}

// sum_{k=1}^{L} x_k sin(pi m k / L), m = 1..L (closed-grid convention)
inline std::vector<double> naive_dst1_closed(const std::vector<double>& x) {
  const std::size_t l = x.size();
  std::vector<double> y(l, 0.0);
  for (std::size_t m = 1; m <= l; ++m)
    for (std::size_t k = 1; k <= l; ++k) y[m - 1] += x[k - 1] * std::sin(pi * double(m * k) / double(l));
  return y;
}

inline std::vector<cplx> naive_dft(const std::vector<cplx>& x, int sign = -1) {
  const std::size_t n = x.size();
  std::vector<cplx> y(n);
  for (std::size_t m = 0; m < n; ++m) {
    cplx s = 0;
    for (std::size_t k = 0; k < n; ++k) s += x[k] * std::polar(1.0, sign * 2.0 * pi * double((m * k) % n) / double(n));
    y[m] = s;
  }
  return y;
}

/// K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt by tanh-sinh quadrature on
/// a finite interval beyond which the integrand is below exp(-745).
inline double bessel_k(double nu, double x) {
  double t_max = 1.0;
  while (x * std::cosh(t_max) - nu * t_max < 800.0) t_max *= 1.25;
  boost::math::quadrature::tanh_sinh<double> q;
  // factor exp(-x) out of the integrand to keep it in range
  auto f = [&](double t) { return std::exp(-x * (std::cosh(t) - 1.0)) * std::cosh(nu * t); };
  return std::exp(-x) * q.integrate(f, 0.0, t_max, 1e-15);
}

/// Matern rho(s) from the quadrature Bessel function.
inline double matern_rho(double nu, double s) {
  if (s == 0.0) return 1.0;
  const double x = std::sqrt(2.0 * nu) * s;
  return std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(x, nu) * bessel_k(nu, x);
}

/// Fixed 61-point Gauss-Kronrod rule on each of `pieces` equal panels of [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b, int pieces) {
  double s = 0.0;
  const double w = (b - a) / pieces;
  for (int i = 0; i < pieces; ++i)
    s += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a + i * w, a + (i + 1) * w, 0);
  return s;
}

/// Radial Fourier transform of r -> rho(r / ell) in d = 1 or 2.
inline double hankel_transform(const std::function<double(double)>& rho, double ell, int dim, double y,
                               double r_max) {
  const int pieces = 200 + static_cast<int>(8.0 * y * r_max);
  if (dim == 1)
    return 2.0 * integrate([&](double r) { return rho(r / ell) * std::cos(2.0 * pi * y * r); }, 0.0, r_max, pieces);
  return 2.0 * pi *
         integrate([&](double r) { return rho(r / ell) * std::cyl_bessel_j(0.0, 2.0 * pi * y * r) * r; }, 0.0, r_max,
                   pieces);
}

/// Dense matrix of a linear map given as apply(noise, out).
template <class Apply>
Eigen::MatrixXd dense_map(std::size_t in_size, std::size_t out_size, Apply apply) {
  Eigen::MatrixXd h(out_size, in_size);
  std::vector<double> e(in_size, 0.0), y(out_size);
  for (std::size_t j = 0; j < in_size; ++j) {
    e[j] = 1.0;
    apply(e, y);
    e[j] = 0.0;
    for (std::size_t i = 0; i < out_size; ++i) h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = y[i];
  }
  return h;
}

}  // namespace oracle

#endif  // DNAGRF_TESTS_ORACLES_HPP
