#ifndef DNAGRF_STATS_HPP
#define DNAGRF_STATS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "covariance.hpp"
#include "periodisation.hpp"
#include "rng.hpp"

namespace dnagrf {

/// Streaming mean / variance / selected covariances (Welford).
///
/// Variances are always tracked; covariances only for the registered pairs.
class MomentAccumulator {
 public:
  using Pair = std::pair<std::size_t, std::size_t>;

  MomentAccumulator() = default;
  MomentAccumulator(std::size_t vars, std::vector<Pair> pairs)
      : mean_(vars, 0.0), m2_(vars, 0.0), pairs_(std::move(pairs)), co_(pairs_.size(), 0.0), delta_(vars, 0.0) {
    for (const auto& [i, j] : pairs_)
      if (i >= vars || j >= vars) throw std::out_of_range("accumulator pair index out of range");
  }

  /// All i <= j pairs.
  static MomentAccumulator full(std::size_t vars) {
    std::vector<Pair> p;
    for (std::size_t i = 0; i < vars; ++i)
      for (std::size_t j = i; j < vars; ++j) p.emplace_back(i, j);
    return {vars, std::move(p)};
  }

  void add(std::span<const double> x) {
    if (x.size() != mean_.size()) throw std::invalid_argument("accumulator: sample size mismatch");
    ++count_;
    const double inv = 1.0 / static_cast<double>(count_);
    for (std::size_t i = 0; i < x.size(); ++i) {
      delta_[i] = x[i] - mean_[i];
      mean_[i] += delta_[i] * inv;
      m2_[i] += delta_[i] * (x[i] - mean_[i]);
    }
    for (std::size_t p = 0; p < pairs_.size(); ++p) {
      const auto [i, j] = pairs_[p];
      co_[p] += delta_[i] * (x[j] - mean_[j]);
    }
  }

  /// Combine with an accumulator over disjoint samples (same layout).
  void merge(const MomentAccumulator& o) {
    if (o.mean_.size() != mean_.size() || o.pairs_ != pairs_) throw std::invalid_argument("accumulator layout mismatch");
    if (o.count_ == 0) return;
    if (count_ == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(count_), nb = static_cast<double>(o.count_);
    const double n = na + nb, f = na * nb / n;
    for (std::size_t i = 0; i < mean_.size(); ++i) delta_[i] = o.mean_[i] - mean_[i];
    for (std::size_t p = 0; p < pairs_.size(); ++p) {
      const auto [i, j] = pairs_[p];
      co_[p] += o.co_[p] + delta_[i] * delta_[j] * f;
    }
    for (std::size_t i = 0; i < mean_.size(); ++i) {
      m2_[i] += o.m2_[i] + delta_[i] * delta_[i] * f;
      mean_[i] += delta_[i] * nb / n;
    }
    count_ += o.count_;
  }

  [[nodiscard]] std::uint64_t count() const { return count_; }
  [[nodiscard]] std::size_t vars() const { return mean_.size(); }
  [[nodiscard]] const std::vector<Pair>& pairs() const { return pairs_; }
  [[nodiscard]] double mean(std::size_t i) const { return mean_.at(i); }
  [[nodiscard]] double variance(std::size_t i) const { return count_ > 1 ? m2_.at(i) / double(count_ - 1) : 0.0; }
  [[nodiscard]] double covariance(std::size_t p) const { return count_ > 1 ? co_.at(p) / double(count_ - 1) : 0.0; }

 private:
  std::uint64_t count_ = 0;
  std::vector<double> mean_, m2_;
  std::vector<Pair> pairs_;
  std::vector<double> co_;
  std::vector<double> delta_;
};

/// Node pairs whose empirical covariance is compared against reference values.
struct ProbeSet {
  std::vector<MomentAccumulator::Pair> pairs;
  std::vector<double> reference;
};

/// d = 1: node 0 against every node, plus every node with itself, compared to
/// the pristine covariance.
inline ProbeSet probes_reference_row(const CovarianceModel& model, std::size_t nodes, double spacing) {
  ProbeSet p;
  for (std::size_t k = 0; k < nodes; ++k) {
    p.pairs.emplace_back(0, k);
    p.reference.push_back(stationary(model, static_cast<double>(k) * spacing));
  }
  for (std::size_t k = 1; k < nodes; ++k) {
    p.pairs.emplace_back(k, k);
    p.reference.push_back(1.0);
  }
  return p;
}

/// Flat index of node (k, ..., k) on the diagonal of a side^dim cube.
inline std::size_t diagonal_node(std::size_t k, std::size_t side, int dim) {
  std::size_t lin = 0;
  for (int a = 0; a < dim; ++a) lin = lin * side + k;
  return lin;
}

/// d >= 2: all pairs of nodes on the main diagonal of the grid, with nodes
/// selected every `step` grid points.
inline ProbeSet probes_diagonal(const CovarianceModel& model, std::size_t side, int dim, double spacing,
                                std::size_t step = 1) {
  ProbeSet p;
  std::vector<std::size_t> ks;
  for (std::size_t k = 0; k < side; k += step) ks.push_back(k);
  const double diag = std::sqrt(static_cast<double>(dim)) * spacing;
  for (std::size_t a = 0; a < ks.size(); ++a)
    for (std::size_t b = a; b < ks.size(); ++b) {
      p.pairs.emplace_back(diagonal_node(ks[a], side, dim), diagonal_node(ks[b], side, dim));
      p.reference.push_back(stationary(model, diag * static_cast<double>(ks[b] - ks[a])));
    }
  return p;
}

struct CovErrorReport {
  double max_error = 0.0;
  std::vector<double> batch_errors;
  double batch_sd = 0.0;   // spread of the per-batch max errors
  double std_error = 0.0;  // batch_sd / sqrt(batches)
  std::uint64_t realisations = 0;
  std::size_t argmax_probe = 0;
};

/// Batches (one per Monte-Carlo batch) filled by a worker pool.
///
/// Draw r of the run uses RngStream(seed, r); batch b owns draws
/// [b * per_batch, (b + 1) * per_batch). Work is handed out per batch and the
/// results land in batch order, so the outcome does not depend on `threads`.
template <class Sampler, class Consume>
void run_batches(const Sampler& proto, std::uint64_t draws, std::size_t batches, std::uint64_t seed,
                 unsigned threads, Consume consume) {
  if (batches == 0 || draws % batches != 0) throw std::invalid_argument("draw count must be divisible by batches");
  const std::uint64_t per = draws / batches;
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    try {
      Sampler s = proto;
      std::vector<double> out(s.field_size() * s.fields_per_draw());
      for (std::size_t b = next++; b < batches; b = next++) {
        for (std::uint64_t r = b * per; r < (b + 1) * per; ++r) {
          s.draw(RngStream(seed, r), out);
          consume(b, std::span<const double>(out));
        }
      }
    } catch (...) {
      std::lock_guard lock(error_mu);
      if (!error) error = std::current_exception();
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(batches)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

struct MonteCarloConfig {
  std::uint64_t realisations = 100000;
  std::size_t batches = 40;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

namespace detail {

inline double max_probe_error(const MomentAccumulator& acc, const ProbeSet& probes, std::size_t* where = nullptr) {
  double worst = 0.0;
  for (std::size_t p = 0; p < probes.pairs.size(); ++p) {
    const double e = std::abs(acc.covariance(p) - probes.reference[p]);
    if (e > worst) {
      worst = e;
      if (where) *where = p;
    }
  }
  return worst;
}

inline double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Per-batch accumulators over the probe pairs, one field per add().
template <class Sampler>
std::vector<MomentAccumulator> accumulate_batches(const Sampler& sampler, const std::vector<MomentAccumulator::Pair>& pairs,
                                                  const MonteCarloConfig& cfg) {
  const std::size_t fpd = sampler.fields_per_draw();
  if (cfg.realisations == 0) throw std::invalid_argument("realisation count must be positive");
  if (cfg.realisations % (cfg.batches * fpd) != 0)
    throw std::invalid_argument("realisations must be divisible by batches (times fields per draw)");
  const std::size_t fs = sampler.field_size();
  std::vector<MomentAccumulator> acc(cfg.batches, MomentAccumulator(fs, pairs));
  run_batches(sampler, cfg.realisations / fpd, cfg.batches, cfg.seed, cfg.threads,
              [&](std::size_t b, std::span<const double> out) {
                for (std::size_t f = 0; f < fpd; ++f) acc[b].add(out.subspan(f * fs, fs));
              });
  return acc;
}

}  // namespace detail

/// Maximal |empirical covariance - reference| over the probe set, with the
/// spread of the same statistic across batches.
template <class Sampler>
CovErrorReport empirical_max_cov_error(const Sampler& sampler, const ProbeSet& probes, const MonteCarloConfig& cfg) {
  auto acc = detail::accumulate_batches(sampler, probes.pairs, cfg);
  CovErrorReport rep;
  MomentAccumulator total = acc.front();
  for (std::size_t b = 0; b < acc.size(); ++b) {
    rep.batch_errors.push_back(detail::max_probe_error(acc[b], probes));
    if (b > 0) total.merge(acc[b]);
  }
  rep.max_error = detail::max_probe_error(total, probes, &rep.argmax_probe);
  rep.batch_sd = detail::sample_sd(rep.batch_errors);
  rep.std_error = rep.batch_sd / std::sqrt(static_cast<double>(acc.size()));
  rep.realisations = total.count();
  return rep;
}

/// Max over probe offsets of |truncated 2 alpha periodisation - phi|.
inline double analytic_max_cov_error(const CovarianceModel& model, double alpha, std::size_t n, int dim,
                                     const std::vector<std::vector<double>>& probes) {
  const auto table = SpectrumTable::build(model, {alpha, n, dim}, PeriodConvention::Dna);
  double worst = 0.0;
  for (const auto& d : probes) {
    if (static_cast<int>(d.size()) != dim) throw std::invalid_argument("probe dimension mismatch");
    for (double c : d)
      if (std::abs(c) > 1.0) throw std::invalid_argument("probes must lie in [-1, 1]^d");
    worst = std::max(worst, std::abs(periodised_cov_spectral(table, d) - stationary(model, d)));
  }
  return worst;
}

/// Exponent factor theta = Gamma(d + nu + 1/2)^{-1/(d + nu - 1/2)}.
inline double periodisation_rate_factor(double nu, int dim) {
  return std::exp(-std::lgamma(dim + nu + 0.5) / (dim + nu - 0.5));
}

/// Upper bound on the periodisation error sup |phi_prd_{2 alpha} - phi| over
/// the target domain for the Matern family.
inline double periodisation_error_bound(double nu, double ell, double alpha, int dim) {
  const double kappa = std::sqrt(2.0 * nu) / ell;
  if (!(nu >= 0.5)) throw std::domain_error("periodisation bound requires nu >= 1/2");
  const double lhs = 2.0 * alpha * kappa;
  if (!(lhs > 1.5)) throw std::domain_error("periodisation bound requires 2 alpha kappa > 3/2");
  if (!(lhs > dim + nu - 1.5)) throw std::domain_error("periodisation bound requires 2 alpha kappa > d + nu - 3/2");
  const double theta = periodisation_rate_factor(nu, dim);
  const double ak = alpha * kappa;
  const double c1 = dim * std::pow(2.0, dim + 2.0 * nu - 1.0) * std::exp(1.0 + kappa);
  const double g = std::exp(std::lgamma(dim + nu + 0.5));
  return c1 * std::exp(-2.0 * theta * ak) * (std::pow(ak, nu - 0.5) + g / std::pow(ak, 1.0 + dim));
}

/// Upper bound on |phi_prd_{2 alpha, n} - phi_prd_{2 alpha}| (spectral truncation).
inline double truncation_error_bound(double nu, double ell, double alpha, std::size_t n, int dim) {
  if (!(nu > 0 && ell > 0 && alpha > 0 && n > 0)) throw std::invalid_argument("truncation bound needs positive parameters");
  const double kappa = std::sqrt(2.0 * nu) / ell;
  const double c2 = dim * matern_constant(nu, dim) * std::pow(2.0 * kappa, dim) *
                    std::pow(std::numbers::pi, -(2.0 * nu + dim)) * (1.0 + 1.0 / (2.0 * nu));
  return c2 * std::pow(alpha * kappa, 2.0 * nu + dim) * std::pow(static_cast<double>(n), -2.0 * nu);
}

struct VarianceProfile {
  std::vector<double> variance;
  std::vector<double> std_error;  // per node, from the batch spread
  std::uint64_t realisations = 0;

  [[nodiscard]] double spread() const {
    const auto [lo, hi] = std::minmax_element(variance.begin(), variance.end());
    return *hi - *lo;
  }
  [[nodiscard]] double mean_std_error() const {
    double s = 0.0;
    for (double v : std_error) s += v;
    return std_error.empty() ? 0.0 : s / static_cast<double>(std_error.size());
  }
};

/// Per-node empirical variance over cfg.realisations fields.
template <class Sampler>
VarianceProfile marginal_variance_profile(const Sampler& sampler, const MonteCarloConfig& cfg) {
  auto acc = detail::accumulate_batches(sampler, {}, cfg);
  const std::size_t fs = sampler.field_size(), nb = acc.size();
  VarianceProfile prof;
  prof.std_error.assign(fs, 0.0);
  std::vector<double> per(nb);
  for (std::size_t i = 0; i < fs; ++i) {
    for (std::size_t b = 0; b < nb; ++b) per[b] = acc[b].variance(i);
    prof.std_error[i] = detail::sample_sd(per) / std::sqrt(static_cast<double>(nb));
  }
  MomentAccumulator total = acc.front();
  for (std::size_t b = 1; b < nb; ++b) total.merge(acc[b]);
  prof.variance.resize(fs);
  for (std::size_t i = 0; i < fs; ++i) prof.variance[i] = total.variance(i);
  prof.realisations = total.count();
  return prof;
}

}  // namespace dnagrf

#endif  // DNAGRF_STATS_HPP
