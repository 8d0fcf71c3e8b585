#ifndef DNAGRF_PERIODISATION_HPP
#define DNAGRF_PERIODISATION_HPP

#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "covariance.hpp"
#include "io.hpp"
#include "ndarray.hpp"
#include "transforms.hpp"

namespace dnagrf {

struct PeriodisationParams {
  double alpha = 1.0;
  std::size_t n = 1;
  int dim = 1;

  void validate() const {
    if (!(alpha >= 1.0)) throw std::invalid_argument("alpha must be >= 1");
    if (n < 1) throw std::invalid_argument("truncation n must be >= 1");
    if (dim < 1 || dim > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
  }
};

/// Which period the spectral coefficients are sampled for.
enum class PeriodConvention : std::uint32_t {
  Dna = 0,    // period 2 alpha (mixed cosine/sine expansion)
  Naive = 1,  // period alpha (plain FFT periodisation)
};

/// lambda_mu = phihat(mu / P) for mu in {0..n}^d, P the period.
struct SpectrumTable {
  PeriodisationParams params;
  CovarianceModel model;
  PeriodConvention convention = PeriodConvention::Dna;
  NdArray<double> coeffs;

  [[nodiscard]] double period() const {
    return convention == PeriodConvention::Dna ? 2.0 * params.alpha : params.alpha;
  }

  static SpectrumTable build(const CovarianceModel& model, PeriodisationParams params,
                             PeriodConvention conv = PeriodConvention::Dna) {
    params.validate();
    SpectrumTable t{params, model, conv, NdArray<double>(std::vector<std::size_t>(params.dim, params.n + 1))};
    const SpectralDensity sd(model, params.dim);
    const double inv_p = 1.0 / t.period();
    const std::size_t side = params.n + 1;
    for (std::size_t i = 0; i < t.coeffs.size(); ++i) {
      std::size_t rem = i;
      double r2 = 0.0;
      for (int a = 0; a < params.dim; ++a) {
        const double y = static_cast<double>(rem % side) * inv_p;
        rem /= side;
        r2 += y * y;
      }
      t.coeffs[i] = sd.radial(std::sqrt(r2));
    }
    return t;
  }

  void write(std::ostream& os) const {
    io::write_magic(os, "GRFS");
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(model.family));
    io::write_le<double>(os, model.nu);
    io::write_le<double>(os, model.ell);
    io::write_le<double>(os, params.alpha);
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.n));
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.dim));
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(convention));
    io::write_doubles(os, coeffs.values());
  }

  static SpectrumTable read(std::istream& is) {
    io::expect_magic(is, "GRFS");
    SpectrumTable t;
    const auto fam = io::read_le<std::uint32_t>(is);
    if (fam > 2) throw io::FormatError("unknown model id");
    t.model.family = static_cast<CovarianceFamily>(fam);
    t.model.nu = io::read_le<double>(is);
    t.model.ell = io::read_le<double>(is);
    t.params.alpha = io::read_le<double>(is);
    t.params.n = io::read_le<std::uint32_t>(is);
    t.params.dim = static_cast<int>(io::read_le<std::uint32_t>(is));
    const auto conv = io::read_le<std::uint32_t>(is);
    if (conv > 1) throw io::FormatError("unknown period convention");
    t.convention = static_cast<PeriodConvention>(conv);
    t.params.validate();
    t.coeffs = NdArray<double>(std::vector<std::size_t>(t.params.dim, t.params.n + 1));
    io::read_doubles(is, t.coeffs.values());
    return t;
  }
};

namespace detail {

// Calls f(eta) for every integer vector with |eta|_inf <= cutoff.
template <class F>
void for_each_shell_point(int dim, int cutoff, F&& f) {
  std::vector<int> eta(dim, -cutoff);
  while (true) {
    f(std::span<const int>(eta));
    int a = 0;
    while (a < dim && ++eta[a] > cutoff) eta[a++] = -cutoff;
    if (a == dim) return;
  }
}

template <class Pred>
double lattice_sum(const CovarianceModel& model, double period, std::span<const double> delta, int cutoff,
                   Pred keep) {
  if (cutoff < 1) throw std::invalid_argument("shell cutoff must be >= 1");
  const int dim = static_cast<int>(delta.size());
  std::vector<double> shifted(dim);
  double sum = 0.0;
  for_each_shell_point(dim, cutoff, [&](std::span<const int> eta) {
    if (!keep(eta)) return;
    for (int a = 0; a < dim; ++a) shifted[a] = delta[a] + period * eta[a];
    sum += stationary(model, shifted);
  });
  return sum;
}

}  // namespace detail

/// Brute-force periodisation: sum over |eta|_inf <= cutoff of phi(delta + period * eta).
inline double periodised_cov_lattice(const CovarianceModel& model, double period, std::span<const double> delta,
                                     int shell_cutoff = 60) {
  return detail::lattice_sum(model, period, delta, shell_cutoff, [](std::span<const int>) { return true; });
}

inline double periodised_cov_lattice(const CovarianceModel& model, double period, double delta,
                                     int shell_cutoff = 60) {
  return periodised_cov_lattice(model, period, std::span<const double>(&delta, 1), shell_cutoff);
}

/// The lattice sum without the eta = 0 term, i.e. the periodisation error
/// phi_prd - phi, summed directly so that tiny errors keep full precision.
inline double periodisation_tail(const CovarianceModel& model, double period, std::span<const double> delta,
                                 int shell_cutoff = 60) {
  return detail::lattice_sum(model, period, delta, shell_cutoff, [](std::span<const int> eta) {
    for (int e : eta)
      if (e != 0) return true;
    return false;
  });
}

/// Truncated Fourier series P^{-d} sum_{|mu|_inf <= n} lambda_mu cos(2 pi mu.delta / P).
inline double periodised_cov_spectral(const SpectrumTable& table, std::span<const double> delta) {
  const int dim = table.params.dim;
  if (static_cast<int>(delta.size()) != dim) throw std::invalid_argument("periodised_cov_spectral: wrong dimension");
  const std::size_t side = table.params.n + 1;
  const double p = table.period();
  // weighted cosines per axis: w_mu = (mu ? 2 : 1) cos(2 pi mu delta / P)
  std::vector<std::vector<double>> wc(dim, std::vector<double>(side));
  for (int a = 0; a < dim; ++a) {
    const double theta = 2.0 * std::numbers::pi * delta[a] / p;
    for (std::size_t mu = 0; mu < side; ++mu)
      wc[a][mu] = (mu == 0 ? 1.0 : 2.0) * std::cos(theta * static_cast<double>(mu));
  }
  // contract the last axis first, then fold the rest
  std::vector<double> cur(table.coeffs.values());
  std::size_t len = cur.size();
  for (int a = dim - 1; a >= 0; --a) {
    const std::size_t outer = len / side;
    for (std::size_t o = 0; o < outer; ++o) {
      double s = 0.0;
      for (std::size_t mu = 0; mu < side; ++mu) s += cur[o * side + mu] * wc[a][mu];
      cur[o] = s;
    }
    len = outer;
  }
  return cur[0] / std::pow(p, dim);
}

inline double periodised_cov_spectral(const SpectrumTable& table, double delta) {
  return periodised_cov_spectral(table, std::span<const double>(&delta, 1));
}

/// Eigenvalues of the circulant embedding: DFT of the covariance sampled at
/// spacing 2 alpha / m on one period [-alpha, alpha)^d, origin at index 0.
inline NdArray<double> ce_spectrum(const CovarianceModel& model, double alpha, std::size_t m, int dim) {
  if (m < 1) throw std::invalid_argument("ce_spectrum: m must be positive");
  if (dim < 1 || dim > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
  const double h = 2.0 * alpha / static_cast<double>(m);
  // separable wrapped offsets
  std::vector<double> off(m);
  for (std::size_t k = 0; k < m; ++k)
    off[k] = h * (2 * k < m ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(m));
  NdArray<cplx> c(std::vector<std::size_t>(dim, m));
  if (dim == 1) {
    for (std::size_t k = 0; k < m; ++k) c[k] = stationary(model, off[k]);
  } else {
    std::vector<double> delta(dim);
    for (std::size_t i = 0; i < c.size(); ++i) {
      std::size_t rem = i;
      for (int a = dim - 1; a >= 0; --a) {
        delta[a] = off[rem % m];
        rem /= m;
      }
      c[i] = stationary(model, delta);
    }
  }
  TensorPlan plan;
  for (int a = 0; a < dim; ++a) plan.axes.push_back({m, AxisTransformKind::FFT});
  tensor_apply_inplace(plan, c);
  NdArray<double> ev(c.shape());
  for (std::size_t i = 0; i < c.size(); ++i) ev[i] = c[i].real();
  return ev;
}

/// True iff every eigenvalue is >= -rel_tol * max eigenvalue.
inline bool spectrum_nonnegative(const NdArray<double>& ev, double rel_tol = 0.0) {
  double hi = 0.0;
  for (double v : ev) hi = std::max(hi, v);
  const double floor = -rel_tol * hi;
  for (double v : ev)
    if (v < floor) return false;
  return true;
}

/// FFT length per axis for padding factor tau on a grid of n_grid intervals
/// with spacing 1 / n_grid: one period covers [-tau, tau).
inline std::size_t ce_length(std::size_t n_grid, std::size_t tau) { return 2 * tau * n_grid; }

/// Smallest power-of-two padding factor tau <= max_factor whose embedding is
/// nonnegative, found by bisection on the exponent; nullopt if none.
inline std::optional<std::size_t> minimal_embedding(const CovarianceModel& model, std::size_t n_grid,
                                                    std::size_t max_factor, int dim = 1, double rel_tol = 0.0) {
  if (max_factor < 1) throw std::invalid_argument("max_factor must be >= 1");
  if (n_grid < 1) throw std::invalid_argument("n_grid must be >= 1");
  int hi = 0;
  while ((std::size_t{2} << hi) <= max_factor) ++hi;
  auto ok = [&](int e) {
    const std::size_t tau = std::size_t{1} << e;
    return spectrum_nonnegative(ce_spectrum(model, static_cast<double>(tau), ce_length(n_grid, tau), dim), rel_tol);
  };
  if (!ok(hi)) return std::nullopt;
  int lo = -1;  // invariant: ok(hi), !ok(lo) (or lo = -1 meaning untested below 0)
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (ok(mid))
      hi = mid;
    else
      lo = mid;
  }
  return std::size_t{1} << hi;
}

}  // namespace dnagrf

#endif  // DNAGRF_PERIODISATION_HPP
