#ifndef DNAGRF_SAMPLER_HPP
#define DNAGRF_SAMPLER_HPP

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "covariance.hpp"
#include "field.hpp"
#include "ndarray.hpp"
#include "periodisation.hpp"
#include "rng.hpp"
#include "transforms.hpp"

namespace dnagrf {

/// b_j = 0: Neumann (cosine) on the faces normal to axis j; b_j = 1: Dirichlet (sine).
struct BoundaryMask {
  std::vector<std::uint8_t> bits;

  static BoundaryMask from_index(unsigned index, int dim) {
    BoundaryMask m;
    m.bits.resize(dim);
    for (int j = 0; j < dim; ++j) m.bits[j] = static_cast<std::uint8_t>((index >> j) & 1u);
    return m;
  }
  static BoundaryMask neumann(int dim) { return from_index(0, dim); }
  static BoundaryMask dirichlet(int dim) { return from_index((1u << dim) - 1, dim); }

  [[nodiscard]] int dim() const { return static_cast<int>(bits.size()); }
  [[nodiscard]] unsigned index() const {
    unsigned i = 0;
    for (int j = 0; j < dim(); ++j) i |= static_cast<unsigned>(bits[j] != 0) << j;
    return i;
  }
  [[nodiscard]] bool dirichlet_axis(int j) const { return bits.at(j) != 0; }
};

/// The circulant embedding has negative eigenvalues; a larger padding is needed.
class NegativeSpectrum : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Shared immutable 1-D closed-grid transforms plus private scratch; copying
// gives an independent workspace over the same plans.
class ClosedGridTransform {
 public:
  ClosedGridTransform() = default;
  explicit ClosedGridTransform(std::size_t points) : points_(points) {
    if (points < 2) throw TransformSizeError("closed grid needs at least 2 points");
    dct_ = std::make_shared<const Dct1>(points);
    std::size_t work = dct_->work_size();
    if (points >= 3) {
      dst_ = std::make_shared<const Dst1Interior>(points - 2);
      work = std::max(work, dst_->work_size());
    }
    in_.resize(points);
    out_.resize(points);
    work_.resize(work);
  }

  // In-place transform of a strided line; sine output vanishes at both ends.
  void run(double* base, std::size_t stride, bool sine) {
    const std::size_t n = points_;
    if (!sine) {
      for (std::size_t k = 0; k < n; ++k) in_[k] = base[k * stride];
      (*dct_)(std::span<const double>(in_), std::span<double>(out_), work_);
      for (std::size_t k = 0; k < n; ++k) base[k * stride] = out_[k];
      return;
    }
    base[0] = 0.0;
    base[(n - 1) * stride] = 0.0;
    if (!dst_) return;
    const std::size_t len = n - 2;
    for (std::size_t k = 0; k < len; ++k) in_[k] = base[(k + 1) * stride];
    (*dst_)(std::span<const double>(in_.data(), len), std::span<double>(out_.data(), len), work_);
    for (std::size_t k = 0; k < len; ++k) base[(k + 1) * stride] = out_[k];
  }

 private:
  std::size_t points_ = 0;
  std::shared_ptr<const Dct1> dct_;
  std::shared_ptr<const Dst1Interior> dst_;
  std::vector<double> in_, out_;
  std::vector<cplx> work_;
};

// Complex FFT over every axis of a cube of side m, with private scratch.
class CubeFft {
 public:
  CubeFft() = default;
  CubeFft(std::size_t m, int dim) : m_(m), dim_(dim), plan_(fft_plan(m)), line_(m), scratch_(m) {}

  void run(cplx* data, FftPlan::Direction dir) {
    const std::size_t total = ipow(m_, dim_);
    if (dim_ == 1) {
      plan_->execute(std::span<cplx>(data, m_), scratch_, dir);
      return;
    }
    for (int axis = 0; axis < dim_; ++axis) {
      const std::size_t stride = ipow(m_, dim_ - 1 - axis);
      for (std::size_t start = 0; start < total; ++start) {
        if ((start / stride) % m_ != 0) continue;
        for (std::size_t k = 0; k < m_; ++k) line_[k] = data[start + k * stride];
        plan_->execute(line_, scratch_, dir);
        for (std::size_t k = 0; k < m_; ++k) data[start + k * stride] = line_[k];
      }
    }
  }

  static std::size_t ipow(std::size_t b, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
  }

 private:
  std::size_t m_ = 0;
  int dim_ = 1;
  std::shared_ptr<const FftPlan> plan_;
  std::vector<cplx> line_, scratch_;
};

inline std::vector<std::size_t> unravel(std::size_t i, std::size_t side, int dim) {
  std::vector<std::size_t> idx(dim);
  for (int a = dim - 1; a >= 0; --a) {
    idx[a] = i % side;
    i /= side;
  }
  return idx;
}

}  // namespace detail

/// Dirichlet-Neumann averaged sampler on the closed grid x_k = k alpha / n,
/// k = 0..n per axis.
///
/// Noise layout: 2^d blocks (one per boundary mask, mask index order), each
/// holding (n+1)^d standard normals indexed row-major by the mode mu. Entries
/// for modes outside a mask's index set are ignored.
class DnaSampler {
 public:
  explicit DnaSampler(const SpectrumTable& table)
      : alpha_(table.params.alpha), n_(table.params.n), dim_(table.params.dim) {
    if (table.convention != PeriodConvention::Dna)
      throw std::invalid_argument("DNA sampler needs a table with period 2 alpha");
    if (n_ < 1) throw std::invalid_argument("DNA sampler needs n >= 1");
    const std::size_t side = n_ + 1;
    const std::size_t count = table.coeffs.size();
    const std::size_t masks = std::size_t{1} << dim_;
    const double base = std::pow(2.0 / alpha_, 0.5 * dim_);
    scale_.assign(masks, std::vector<double>(count, 0.0));
    for (std::size_t i = 0; i < count; ++i) {
      const auto mu = detail::unravel(i, side, dim_);
      int zeros = 0;
      for (auto m : mu) zeros += (m == 0);
      // orthonormal weighting of the constant cosine mode
      const double s = std::sqrt(table.coeffs[i]) * base * std::pow(2.0, -0.5 * zeros);
      for (std::size_t b = 0; b < masks; ++b) {
        bool valid = true;
        for (int j = 0; j < dim_; ++j)
          if (((b >> j) & 1u) && mu[j] == 0) valid = false;
        scale_[b][i] = valid ? s : 0.0;
      }
    }
    line_ = detail::ClosedGridTransform(side);
    buf_.resize(count);
    noise_.resize(count);
  }

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] std::size_t n() const { return n_; }
  [[nodiscard]] double alpha() const { return alpha_; }
  [[nodiscard]] double spacing() const { return alpha_ / static_cast<double>(n_); }
  [[nodiscard]] std::vector<std::size_t> shape() const { return std::vector<std::size_t>(dim_, n_ + 1); }
  [[nodiscard]] std::size_t field_size() const { return buf_.size(); }
  [[nodiscard]] std::size_t block_size() const { return buf_.size(); }
  [[nodiscard]] std::size_t noise_size() const { return buf_.size() << dim_; }
  [[nodiscard]] std::size_t fields_per_draw() const { return 1; }
  [[nodiscard]] const std::vector<double>& mode_scale(const BoundaryMask& b) const { return scale_.at(b.index()); }

  /// u^b on the grid for one noise block.
  void apply_single(const BoundaryMask& b, std::span<const double> noise, std::span<double> out) {
    if (b.dim() != dim_) throw std::invalid_argument("mask dimension mismatch");
    if (noise.size() != block_size() || out.size() != field_size()) throw std::invalid_argument("DNA size mismatch");
    const auto& s = scale_[b.index()];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = noise[i] * s[i];
    transform(b, out.data());
  }

  /// 2^{-d/2} sum_b u^b for the full noise vector.
  void apply(std::span<const double> noise, std::span<double> out) {
    if (noise.size() != noise_size() || out.size() != field_size()) throw std::invalid_argument("DNA size mismatch");
    std::fill(out.begin(), out.end(), 0.0);
    const std::size_t bs = block_size();
    for (unsigned b = 0; b < (1u << dim_); ++b) {
      apply_single(BoundaryMask::from_index(b, dim_), noise.subspan(b * bs, bs), buf_);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += buf_[i];
    }
    const double w = std::pow(2.0, -0.5 * dim_);
    for (double& v : out) v *= w;
  }

  void draw_single(const BoundaryMask& b, RngStream& rng, std::span<double> out) {
    rng.fill_normal(noise_);
    apply_single(b, noise_, out);
  }

  /// Mask b draws its noise from rng.substream(b).
  void draw(const RngStream& rng, std::span<double> out) {
    if (out.size() != field_size()) throw std::invalid_argument("DNA size mismatch");
    std::fill(out.begin(), out.end(), 0.0);
    for (unsigned b = 0; b < (1u << dim_); ++b) {
      RngStream sub = rng.substream(b);
      sub.fill_normal(noise_);
      apply_single(BoundaryMask::from_index(b, dim_), noise_, buf_);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += buf_[i];
    }
    const double w = std::pow(2.0, -0.5 * dim_);
    for (double& v : out) v *= w;
  }

  /// Same noise layout as draw(): block b is rng.substream(b).
  [[nodiscard]] std::vector<double> noise_for(const RngStream& rng) const {
    std::vector<double> noise(noise_size());
    const std::size_t bs = block_size();
    for (unsigned b = 0; b < (1u << dim_); ++b) {
      RngStream sub = rng.substream(b);
      sub.fill_normal(std::span<double>(noise).subspan(b * bs, bs));
    }
    return noise;
  }

 private:
  void transform(const BoundaryMask& b, double* data) {
    const std::size_t side = n_ + 1;
    const std::size_t total = buf_.size();
    for (int axis = 0; axis < dim_; ++axis) {
      const std::size_t stride = detail::CubeFft::ipow(side, dim_ - 1 - axis);
      const bool sine = b.dirichlet_axis(axis);
      for (std::size_t start = 0; start < total; ++start) {
        if ((start / stride) % side != 0) continue;
        line_.run(data + start, stride, sine);
      }
    }
  }

  double alpha_;
  std::size_t n_;
  int dim_;
  std::vector<std::vector<double>> scale_;
  detail::ClosedGridTransform line_;
  std::vector<double> buf_, noise_;
};

/// One boundary-condition field u^b with the sampler interface of DnaSampler.
class SingleMaskSampler {
 public:
  SingleMaskSampler(const SpectrumTable& table, BoundaryMask mask) : inner_(table), mask_(std::move(mask)) {
    if (mask_.dim() != inner_.dim()) throw std::invalid_argument("mask dimension mismatch");
  }

  [[nodiscard]] const DnaSampler& inner() const { return inner_; }
  [[nodiscard]] const BoundaryMask& mask() const { return mask_; }
  [[nodiscard]] std::vector<std::size_t> shape() const { return inner_.shape(); }
  [[nodiscard]] double spacing() const { return inner_.spacing(); }
  [[nodiscard]] std::size_t field_size() const { return inner_.field_size(); }
  [[nodiscard]] std::size_t fields_per_draw() const { return 1; }

  void draw(const RngStream& rng, std::span<double> out) {
    RngStream r = rng;
    inner_.draw_single(mask_, r, out);
  }

 private:
  DnaSampler inner_;
  BoundaryMask mask_;
};

/// Naive periodic sampler: FFT of length m = 2n per axis over one period alpha,
/// grid x_k = k alpha / m. Each draw yields two independent fields (real and
/// imaginary parts). Noise layout: m^d complex normals as (re, im) pairs.
class PeriodicSampler {
 public:
  explicit PeriodicSampler(const SpectrumTable& table)
      : alpha_(table.params.alpha), n_(table.params.n), dim_(table.params.dim), m_(2 * table.params.n) {
    if (table.convention != PeriodConvention::Naive)
      throw std::invalid_argument("periodic sampler needs a table with period alpha");
    const std::size_t total = detail::CubeFft::ipow(m_, dim_);
    sqrt_eig_.resize(total);
    const std::size_t side = n_ + 1;
    const double norm = std::pow(alpha_, -dim_);
    for (std::size_t i = 0; i < total; ++i) {
      const auto k = detail::unravel(i, m_, dim_);
      std::size_t lin = 0;
      double mult = 1.0;
      for (int a = 0; a < dim_; ++a) {
        const std::size_t r = k[a];
        const std::size_t mag = r <= n_ ? r : m_ - r;
        if (r == n_) mult *= 2.0;  // +n and -n fold onto the same residue
        lin = lin * side + mag;
      }
      sqrt_eig_[i] = std::sqrt(norm * mult * table.coeffs[lin]);
    }
    fft_ = detail::CubeFft(m_, dim_);
    z_.resize(total);
    noise_.resize(2 * total);
  }

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] std::size_t m() const { return m_; }
  [[nodiscard]] double alpha() const { return alpha_; }
  [[nodiscard]] double spacing() const { return alpha_ / static_cast<double>(m_); }
  [[nodiscard]] std::vector<std::size_t> shape() const { return std::vector<std::size_t>(dim_, m_); }
  [[nodiscard]] std::size_t field_size() const { return z_.size(); }
  [[nodiscard]] std::size_t noise_size() const { return 2 * z_.size(); }
  [[nodiscard]] std::size_t fields_per_draw() const { return 2; }

  /// out = [real part | imaginary part].
  void apply(std::span<const double> noise, std::span<double> out) {
    const std::size_t total = z_.size();
    if (noise.size() != noise_size() || out.size() != 2 * total) throw std::invalid_argument("periodic size mismatch");
    for (std::size_t i = 0; i < total; ++i) z_[i] = sqrt_eig_[i] * cplx(noise[2 * i], noise[2 * i + 1]);
    fft_.run(z_.data(), FftPlan::Direction::Inverse);
    for (std::size_t i = 0; i < total; ++i) {
      out[i] = z_[i].real();
      out[total + i] = z_[i].imag();
    }
  }

  void draw(RngStream& rng, std::span<double> out) {
    rng.fill_normal(noise_);
    apply(noise_, out);
  }
  void draw(const RngStream& rng, std::span<double> out) {
    RngStream r = rng;
    draw(r, out);
  }

 private:
  double alpha_;
  std::size_t n_;
  int dim_;
  std::size_t m_;
  std::vector<double> sqrt_eig_;
  detail::CubeFft fft_;
  std::vector<cplx> z_;
  std::vector<double> noise_;
};

/// Target grid of a circulant-embedding run: n_grid intervals of width
/// 1 / n_grid per axis, embedded in a period of length 2 tau.
struct CeGrid {
  std::size_t n_grid = 16;
  std::size_t tau = 1;
  int dim = 1;
};

/// Circulant-embedding sampler returning two independent fields per draw,
/// each restricted to the (n_grid + 1)^d target nodes.
class CeSampler {
 public:
  CeSampler(const CovarianceModel& model, CeGrid grid, double rel_tol = 0.0) : grid_(grid) {
    if (grid.n_grid < 1 || grid.tau < 1) throw std::invalid_argument("CE grid needs n_grid >= 1 and tau >= 1");
    m_ = ce_length(grid.n_grid, grid.tau);
    const auto ev = ce_spectrum(model, static_cast<double>(grid.tau), m_, grid.dim);
    if (!spectrum_nonnegative(ev, rel_tol))
      throw NegativeSpectrum("circulant embedding is not positive semidefinite at padding factor " +
                             std::to_string(grid.tau) + "; use minimal_embedding to find a larger factor");
    const double inv = 1.0 / static_cast<double>(ev.size());
    sqrt_eig_.resize(ev.size());
    for (std::size_t i = 0; i < ev.size(); ++i) sqrt_eig_[i] = std::sqrt(std::max(ev[i], 0.0) * inv);
    fft_ = detail::CubeFft(m_, grid.dim);
    z_.resize(ev.size());
    noise_.resize(2 * ev.size());
    field_ = detail::CubeFft::ipow(grid.n_grid + 1, grid.dim);
  }

  [[nodiscard]] int dim() const { return grid_.dim; }
  [[nodiscard]] std::size_t m() const { return m_; }
  [[nodiscard]] const CeGrid& grid() const { return grid_; }
  [[nodiscard]] double spacing() const { return 1.0 / static_cast<double>(grid_.n_grid); }
  [[nodiscard]] std::vector<std::size_t> shape() const { return std::vector<std::size_t>(grid_.dim, grid_.n_grid + 1); }
  [[nodiscard]] std::size_t field_size() const { return field_; }
  [[nodiscard]] std::size_t noise_size() const { return 2 * z_.size(); }
  [[nodiscard]] std::size_t fields_per_draw() const { return 2; }

  void apply(std::span<const double> noise, std::span<double> out) {
    if (noise.size() != noise_size() || out.size() != 2 * field_) throw std::invalid_argument("CE size mismatch");
    for (std::size_t i = 0; i < z_.size(); ++i) z_[i] = sqrt_eig_[i] * cplx(noise[2 * i], noise[2 * i + 1]);
    fft_.run(z_.data(), FftPlan::Direction::Forward);
    const std::size_t side = grid_.n_grid + 1;
    for (std::size_t i = 0; i < field_; ++i) {
      const auto idx = detail::unravel(i, side, grid_.dim);
      std::size_t src = 0;
      for (auto k : idx) src = src * m_ + k;
      out[i] = z_[src].real();
      out[field_ + i] = z_[src].imag();
    }
  }

  void draw(RngStream& rng, std::span<double> out) {
    rng.fill_normal(noise_);
    apply(noise_, out);
  }
  void draw(const RngStream& rng, std::span<double> out) {
    RngStream r = rng;
    draw(r, out);
  }

 private:
  CeGrid grid_;
  std::size_t m_ = 0;
  std::size_t field_ = 0;
  std::vector<double> sqrt_eig_;
  detail::CubeFft fft_;
  std::vector<cplx> z_;
  std::vector<double> noise_;
};

namespace detail {

inline FieldRealisation make_field(std::vector<std::size_t> shape, std::span<const double> v, double alpha,
                                   std::size_t n, int dim, double spacing, const RngStream& rng) {
  FieldRealisation f;
  f.values = NdArray<double>(std::move(shape));
  std::copy(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(f.values.size()), f.values.begin());
  f.alpha = alpha;
  f.n = n;
  f.dim = dim;
  f.spacing = spacing;
  f.seed = rng.seed();
  f.stream = rng.stream();
  return f;
}

}  // namespace detail

inline std::pair<FieldRealisation, FieldRealisation> sample_periodic(const SpectrumTable& table, const RngStream& rng) {
  PeriodicSampler s(table);
  std::vector<double> out(2 * s.field_size());
  s.draw(rng, out);
  std::span<const double> all(out);
  return {detail::make_field(s.shape(), all.first(s.field_size()), s.alpha(), s.m(), s.dim(), s.spacing(), rng),
          detail::make_field(s.shape(), all.subspan(s.field_size()), s.alpha(), s.m(), s.dim(), s.spacing(), rng)};
}

inline FieldRealisation sample_single_bc(const SpectrumTable& table, const BoundaryMask& b, const RngStream& rng) {
  DnaSampler s(table);
  std::vector<double> out(s.field_size());
  RngStream r = rng;
  s.draw_single(b, r, out);
  return detail::make_field(s.shape(), out, s.alpha(), s.n(), s.dim(), s.spacing(), rng);
}

inline FieldRealisation sample_dna(const SpectrumTable& table, const RngStream& rng) {
  DnaSampler s(table);
  std::vector<double> out(s.field_size());
  s.draw(rng, out);
  return detail::make_field(s.shape(), out, s.alpha(), s.n(), s.dim(), s.spacing(), rng);
}

/// Direct O(points * n^d) summation of the DNA expansion at arbitrary points,
/// using the DnaSampler noise layout.
inline std::vector<double> sample_dna_direct(const SpectrumTable& table, std::span<const double> noise,
                                             const std::vector<std::vector<double>>& points) {
  const DnaSampler s(table);
  if (noise.size() != s.noise_size()) throw std::invalid_argument("direct DNA: noise size mismatch");
  const int dim = s.dim();
  const std::size_t side = s.n() + 1, bs = s.block_size();
  const double alpha = s.alpha(), w = std::pow(2.0, -0.5 * dim);
  std::vector<double> values;
  values.reserve(points.size());
  for (const auto& x : points) {
    if (static_cast<int>(x.size()) != dim) throw std::invalid_argument("direct DNA: point dimension mismatch");
    double total = 0.0;
    for (unsigned b = 0; b < (1u << dim); ++b) {
      const auto mask = BoundaryMask::from_index(b, dim);
      const auto& scale = s.mode_scale(mask);
      for (std::size_t i = 0; i < bs; ++i) {
        if (scale[i] == 0.0) continue;
        const auto mu = detail::unravel(i, side, dim);
        double basis = 1.0;
        for (int j = 0; j < dim; ++j) {
          const double arg = std::numbers::pi * static_cast<double>(mu[j]) * x[j] / alpha;
          basis *= mask.dirichlet_axis(j) ? std::sin(arg) : std::cos(arg);
        }
        total += noise[b * bs + i] * scale[i] * basis;
      }
    }
    values.push_back(w * total);
  }
  return values;
}

inline std::vector<double> sample_dna_direct(const SpectrumTable& table, const RngStream& rng,
                                             const std::vector<std::vector<double>>& points) {
  const DnaSampler s(table);
  return sample_dna_direct(table, s.noise_for(rng), points);
}

inline std::pair<FieldRealisation, FieldRealisation> sample_ce(const CovarianceModel& model, CeGrid grid,
                                                               const RngStream& rng, double rel_tol = 0.0) {
  CeSampler s(model, grid, rel_tol);
  std::vector<double> out(2 * s.field_size());
  s.draw(rng, out);
  std::span<const double> all(out);
  const double ext = static_cast<double>(grid.tau);
  return {detail::make_field(s.shape(), all.first(s.field_size()), ext, grid.n_grid, grid.dim, s.spacing(), rng),
          detail::make_field(s.shape(), all.subspan(s.field_size()), ext, grid.n_grid, grid.dim, s.spacing(), rng)};
}

}  // namespace dnagrf

#endif  // DNAGRF_SAMPLER_HPP
