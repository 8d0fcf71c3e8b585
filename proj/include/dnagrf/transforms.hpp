#ifndef DNAGRF_TRANSFORMS_HPP
#define DNAGRF_TRANSFORMS_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "ndarray.hpp"

namespace dnagrf {

using cplx = std::complex<double>;

class TransformSizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unnormalised complex DFT of arbitrary length.
///
/// Forward: X[k] = sum_j x[j] exp(-2 pi i j k / n); Inverse uses the + sign and
/// no 1/n factor. Radices 2, 3, 4, 5 have dedicated butterflies, other prime
/// factors up to kMaxDirectRadix use a direct butterfly, anything larger goes
/// through Bluestein's chirp-z convolution. Immutable after construction.
class FftPlan {
 public:
  enum class Direction { Forward, Inverse };
  static constexpr std::size_t kMaxDirectRadix = 31;

  explicit FftPlan(std::size_t n) : n_(n) {
    if (n == 0) throw TransformSizeError("FFT length must be positive");
    std::size_t m = n;
    for (std::size_t r : {4u, 2u, 3u, 5u}) {
      while (m % r == 0) {
        radices_.push_back(r);
        m /= r;
      }
    }
    for (std::size_t p = 7; p * p <= m; p += 2) {
      while (m % p == 0) {
        radices_.push_back(p);
        m /= p;
      }
    }
    if (m > 1) radices_.push_back(m);
    for (std::size_t r : radices_) {
      if (r > kMaxDirectRadix) {
        init_bluestein();
        return;
      }
    }
    twiddle_.resize(n);
    for (std::size_t k = 0; k < n; ++k)
      twiddle_[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    // per-stage tables: w[p * (r-1) + (j-1)] = W_n^{p j step}
    std::size_t len = n;
    for (std::size_t r : radices_) {
      const std::size_t m = len / r, step = n / len;
      std::vector<cplx> t(m * (r - 1));
      for (std::size_t q = 0; q < m; ++q)
        for (std::size_t j = 1; j < r; ++j) t[q * (r - 1) + j - 1] = twiddle_[(q * j * step) % n];
      stage_tw_.push_back(std::move(t));
      len = m;
    }
  }

  [[nodiscard]] std::size_t size() const { return n_; }
  [[nodiscard]] bool uses_bluestein() const { return static_cast<bool>(blue_); }

  /// In-place transform; `scratch` must hold at least size() elements.
  void execute(std::span<cplx> data, std::span<cplx> scratch, Direction dir) const {
    if (data.size() != n_ || scratch.size() < n_) throw TransformSizeError("FFT buffer size mismatch");
    if (n_ == 1) return;
    if (blue_) {
      bluestein(data, dir);
      return;
    }
    const bool inv = dir == Direction::Inverse;
    cplx* x = data.data();
    cplx* y = scratch.data();
    std::size_t len = n_, s = 1;
    for (std::size_t i = 0; i < radices_.size(); ++i) {
      const std::size_t r = radices_[i];
      const cplx* w = stage_tw_[i].data();
      switch (r) {
        case 2: inv ? stage<2, true>(len, s, w, x, y) : stage<2, false>(len, s, w, x, y); break;
        case 3: inv ? stage<3, true>(len, s, w, x, y) : stage<3, false>(len, s, w, x, y); break;
        case 4: inv ? stage<4, true>(len, s, w, x, y) : stage<4, false>(len, s, w, x, y); break;
        case 5: inv ? stage<5, true>(len, s, w, x, y) : stage<5, false>(len, s, w, x, y); break;
        default: generic_stage(r, len, s, w, x, y, inv);
      }
      len /= r;
      s *= r;
      std::swap(x, y);
    }
    if (x != data.data()) std::copy(x, x + n_, data.data());
  }

  void execute(std::span<cplx> data, Direction dir) const {
    std::vector<cplx> scratch(n_);
    execute(data, scratch, dir);
  }

 private:
  // Plain complex product; std::complex operator* carries NaN recovery that
  // dominates the butterfly cost.
  static cplx mul(cplx a, cplx b) {
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
  }
  template <bool Inv>
  static cplx twid(cplx w) {
    return Inv ? std::conj(w) : w;
  }
  // multiply by sign * i
  template <bool Inv>
  static cplx rot(cplx d) {
    return Inv ? cplx(-d.imag(), d.real()) : cplx(d.imag(), -d.real());
  }

  template <std::size_t R, bool Inv>
  static void butterfly(const cplx* a, cplx* b) {
    if constexpr (R == 2) {
      b[0] = a[0] + a[1];
      b[1] = a[0] - a[1];
    } else if constexpr (R == 3) {
      constexpr double h = std::numbers::sqrt3 / 2.0;
      const cplx t1 = a[1] + a[2];
      const cplx t2 = a[0] - 0.5 * t1;
      const cplx t3 = h * rot<Inv>(a[1] - a[2]);
      b[0] = a[0] + t1;
      b[1] = t2 + t3;
      b[2] = t2 - t3;
    } else if constexpr (R == 4) {
      const cplx t0 = a[0] + a[2], t1 = a[0] - a[2];
      const cplx t2 = a[1] + a[3];
      const cplx t3 = rot<Inv>(a[1] - a[3]);
      b[0] = t0 + t2;
      b[1] = t1 + t3;
      b[2] = t0 - t2;
      b[3] = t1 - t3;
    } else {
      static_assert(R == 5);
      const double c1 = 0.30901699437494742410, c2 = -0.80901699437494742410;
      const double s1 = 0.95105651629515357212, s2 = 0.58778525229247312917;
      const cplx p1 = a[1] + a[4], m1 = a[1] - a[4];
      const cplx p2 = a[2] + a[3], m2 = a[2] - a[3];
      const cplx r1 = a[0] + c1 * p1 + c2 * p2;
      const cplx r2 = a[0] + c2 * p1 + c1 * p2;
      const cplx j1 = rot<Inv>(s1 * m1 + s2 * m2);
      const cplx j2 = rot<Inv>(s2 * m1 - s1 * m2);
      b[0] = a[0] + p1 + p2;
      b[1] = r1 + j1;
      b[4] = r1 - j1;
      b[2] = r2 + j2;
      b[3] = r2 - j2;
    }
  }

  // One self-sorting decimation-in-frequency stage of radix R on sub-length
  // len with interleave stride s.
  template <std::size_t R, bool Inv>
  void stage(std::size_t len, std::size_t s, const cplx* tw, const cplx* x, cplx* y) const {
    const std::size_t m = len / R;
    cplx a[R], b[R], w[R];
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t j = 1; j < R; ++j) w[j] = twid<Inv>(tw[p * (R - 1) + j - 1]);
      const cplx* in = x + s * p;
      cplx* out = y + s * R * p;
      if (p == 0) {
        for (std::size_t q = 0; q < s; ++q) {
          for (std::size_t k = 0; k < R; ++k) a[k] = in[q + s * k * m];
          butterfly<R, Inv>(a, b);
          for (std::size_t j = 0; j < R; ++j) out[q + s * j] = b[j];
        }
        continue;
      }
      for (std::size_t q = 0; q < s; ++q) {
        for (std::size_t k = 0; k < R; ++k) a[k] = in[q + s * k * m];
        butterfly<R, Inv>(a, b);
        out[q] = b[0];
        for (std::size_t j = 1; j < R; ++j) out[q + s * j] = mul(b[j], w[j]);
      }
    }
  }

  void generic_stage(std::size_t r, std::size_t len, std::size_t s, const cplx* tw, const cplx* x, cplx* y,
                     bool inv) const {
    const std::size_t m = len / r, root = n_ / r;
    cplx a[kMaxDirectRadix], b[kMaxDirectRadix];
    auto w_r = [&](std::size_t k) { return inv ? std::conj(twiddle_[k * root]) : twiddle_[k * root]; };
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t q = 0; q < s; ++q) {
        for (std::size_t k = 0; k < r; ++k) a[k] = x[q + s * (p + k * m)];
        for (std::size_t j = 0; j < r; ++j) {
          cplx acc = a[0];
          for (std::size_t k = 1; k < r; ++k) acc += mul(a[k], w_r((j * k) % r));
          b[j] = acc;
        }
        cplx* out = y + q + s * r * p;
        out[0] = b[0];
        for (std::size_t j = 1; j < r; ++j) {
          const cplx w = inv ? std::conj(tw[p * (r - 1) + j - 1]) : tw[p * (r - 1) + j - 1];
          out[s * j] = mul(b[j], w);
        }
      }
    }
  }

  struct Bluestein {
    std::size_t m = 0;
    std::vector<cplx> chirp;       // exp(-i pi k^2 / n)
    std::vector<cplx> kernel_fft;  // FFT of conj chirp, zero padded to m
    std::unique_ptr<FftPlan> plan;
  };

  void init_bluestein() {
    radices_.clear();
    auto b = std::make_shared<Bluestein>();
    b->m = 1;
    while (b->m < 2 * n_ - 1) b->m <<= 1;
    b->chirp.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      // k^2 mod 2n keeps the phase argument small
      const auto kk = static_cast<double>((k * k) % (2 * n_));
      b->chirp[k] = std::polar(1.0, -std::numbers::pi * kk / static_cast<double>(n_));
    }
    b->plan = std::make_unique<FftPlan>(b->m);
    b->kernel_fft.assign(b->m, cplx{});
    b->kernel_fft[0] = std::conj(b->chirp[0]);
    for (std::size_t k = 1; k < n_; ++k) b->kernel_fft[k] = b->kernel_fft[b->m - k] = std::conj(b->chirp[k]);
    b->plan->execute(b->kernel_fft, Direction::Forward);
    blue_ = std::move(b);
  }

  void bluestein(std::span<cplx> data, Direction dir) const {
    const Bluestein& b = *blue_;
    const bool inv = dir == Direction::Inverse;
    std::vector<cplx> buf(b.m), scratch(b.m);
    for (std::size_t k = 0; k < n_; ++k) {
      buf[k] = (inv ? std::conj(data[k]) : data[k]) * b.chirp[k];
    }
    b.plan->execute(buf, scratch, Direction::Forward);
    for (std::size_t k = 0; k < b.m; ++k) buf[k] = mul(buf[k], b.kernel_fft[k]);
    b.plan->execute(buf, scratch, Direction::Inverse);
    const double scale = 1.0 / static_cast<double>(b.m);
    for (std::size_t k = 0; k < n_; ++k) {
      const cplx v = buf[k] * b.chirp[k] * scale;
      data[k] = inv ? std::conj(v) : v;
    }
  }

  std::size_t n_;
  std::vector<std::size_t> radices_;
  std::vector<cplx> twiddle_;
  std::vector<std::vector<cplx>> stage_tw_;
  std::shared_ptr<const Bluestein> blue_;
};

/// Process-wide cache of FFT plans keyed by length. Plans are immutable, so
/// handing out shared pointers to concurrent callers is safe.
inline std::shared_ptr<const FftPlan> fft_plan(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::shared_ptr<const FftPlan>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_shared<const FftPlan>(n);
  return slot;
}

inline void fft(std::span<cplx> data, FftPlan::Direction dir = FftPlan::Direction::Forward) {
  fft_plan(data.size())->execute(data, dir);
}

/// out[m] = sum_{k=0}^{n-1} in[k] cos(pi m k / (n-1)), m = 0..n-1. Requires n >= 2.
///
/// Computed from a length 2(n-1) FFT of the even extension.
class Dct1 {
 public:
  explicit Dct1(std::size_t n) : n_(n) {
    if (n < 2) throw TransformSizeError("DCT-I needs at least 2 points");
    plan_ = fft_plan(2 * (n - 1));
  }
  [[nodiscard]] std::size_t size() const { return n_; }

  void operator()(std::span<const double> in, std::span<double> out, std::span<cplx> work) const {
    const std::size_t big = 2 * (n_ - 1);
    if (in.size() != n_ || out.size() != n_ || work.size() < 2 * big) throw TransformSizeError("DCT-I size mismatch");
    std::span<cplx> buf = work.first(big), scratch = work.subspan(big, big);
    for (std::size_t k = 0; k < n_; ++k) buf[k] = in[k];
    for (std::size_t k = 1; k + 1 < n_; ++k) buf[big - k] = in[k];
    plan_->execute(buf, scratch, FftPlan::Direction::Forward);
    const double last = in[n_ - 1];
    for (std::size_t m = 0; m < n_; ++m) {
      const double endpoint = in[0] + ((m & 1u) ? -last : last);
      out[m] = 0.5 * (buf[m].real() + endpoint);
    }
  }

  [[nodiscard]] std::size_t work_size() const { return 4 * (n_ - 1); }

 private:
  std::size_t n_;
  std::shared_ptr<const FftPlan> plan_;
};

/// Standard DST-I on L interior points:
/// out[m] = sum_{k=1}^{L} in[k] sin(pi m k / (L+1)), m = 1..L (stored 0-based).
class Dst1Interior {
 public:
  explicit Dst1Interior(std::size_t len) : len_(len) {
    if (len < 1) throw TransformSizeError("DST-I needs at least 1 point");
    plan_ = fft_plan(2 * (len + 1));
  }
  [[nodiscard]] std::size_t size() const { return len_; }
  [[nodiscard]] std::size_t work_size() const { return 4 * (len_ + 1); }

  void operator()(std::span<const double> in, std::span<double> out, std::span<cplx> work) const {
    const std::size_t big = 2 * (len_ + 1);
    if (in.size() != len_ || out.size() != len_ || work.size() < 2 * big)
      throw TransformSizeError("DST-I size mismatch");
    std::span<cplx> buf = work.first(big), scratch = work.subspan(big, big);
    buf[0] = 0.0;
    buf[len_ + 1] = 0.0;
    for (std::size_t k = 1; k <= len_; ++k) {
      buf[k] = in[k - 1];
      buf[big - k] = -in[k - 1];
    }
    plan_->execute(buf, scratch, FftPlan::Direction::Forward);
    for (std::size_t m = 1; m <= len_; ++m) out[m - 1] = -0.5 * buf[m].imag();
  }

 private:
  std::size_t len_;
  std::shared_ptr<const FftPlan> plan_;
};

inline std::vector<double> dct1(std::span<const double> in) {
  const Dct1 t(in.size());
  std::vector<double> out(in.size());
  std::vector<cplx> work(t.work_size());
  t(in, out, work);
  return out;
}

/// DST-I on an interior vector of length L (denominator L + 1).
inline std::vector<double> dst1_interior(std::span<const double> in) {
  const Dst1Interior t(in.size());
  std::vector<double> out(in.size());
  std::vector<cplx> work(t.work_size());
  t(in, out, work);
  return out;
}

/// DST-I in the closed-grid convention: input holds k = 1..L, output m = 1..L with
/// out[m] = sum_{k=1}^{L} in[k] sin(pi m k / L). The k = L column and the m = L
/// row vanish identically, so this is the interior transform on the first L-1
/// entries padded with a zero.
inline std::vector<double> dst1(std::span<const double> in) {
  if (in.empty()) throw TransformSizeError("DST-I needs a non-empty input");
  std::vector<double> out(in.size(), 0.0);
  if (in.size() == 1) return out;
  const auto inner = dst1_interior(in.first(in.size() - 1));
  std::copy(inner.begin(), inner.end(), out.begin());
  return out;
}

enum class AxisTransformKind { DCT1, DST1, FFT };

/// Per-axis transform description for tensor_apply.
///
/// DCT1 on an axis of length N is the closed-grid cosine sum with denominator
/// N-1; DST1 on an axis of length N is the matching sine sum, i.e. the interior
/// DST-I on points 1..N-2 with both endpoints of the output set to zero.
struct TensorPlan {
  struct Axis {
    std::size_t length;
    AxisTransformKind kind;
  };
  std::vector<Axis> axes;
  FftPlan::Direction fft_direction = FftPlan::Direction::Forward;

  void validate() const {
    for (const Axis& a : axes) {
      if (a.kind == AxisTransformKind::DCT1 && a.length < 2) throw TransformSizeError("DCT1 axis length must be >= 2");
      if (a.kind == AxisTransformKind::DST1 && a.length < 1) throw TransformSizeError("DST1 axis length must be >= 1");
      if (a.kind == AxisTransformKind::FFT && a.length < 1) throw TransformSizeError("FFT axis length must be >= 1");
    }
  }
};

namespace detail {

inline void check_shape(const TensorPlan& plan, const std::vector<std::size_t>& shape) {
  plan.validate();
  if (shape.size() != plan.axes.size()) throw TransformSizeError("tensor_apply: rank mismatch");
  for (std::size_t a = 0; a < shape.size(); ++a)
    if (shape[a] != plan.axes[a].length) throw TransformSizeError("tensor_apply: shape mismatch");
}

// Real closed-grid transform of one line (length n) with given stride.
struct RealLineTransform {
  AxisTransformKind kind;
  std::size_t n;
  std::unique_ptr<Dct1> dct;
  std::unique_ptr<Dst1Interior> dst;
  std::vector<double> in, out;
  std::vector<cplx> work;

  RealLineTransform(AxisTransformKind k, std::size_t len) : kind(k), n(len) {
    if (k == AxisTransformKind::DCT1) {
      dct = std::make_unique<Dct1>(n);
      in.resize(n);
      out.resize(n);
      work.resize(dct->work_size());
    } else if (k == AxisTransformKind::DST1 && n >= 3) {
      dst = std::make_unique<Dst1Interior>(n - 2);
      in.resize(n - 2);
      out.resize(n - 2);
      work.resize(dst->work_size());
    }
  }

  template <class T, class Get, class Set>
  void run(T* base, std::size_t stride, Get get, Set set) {
    if (kind == AxisTransformKind::DCT1) {
      for (std::size_t k = 0; k < n; ++k) in[k] = get(base[k * stride]);
      (*dct)(in, out, work);
      for (std::size_t k = 0; k < n; ++k) set(base[k * stride], out[k]);
    } else {
      if (!dst) {
        for (std::size_t k = 0; k < n; ++k) set(base[k * stride], 0.0);
        return;
      }
      for (std::size_t k = 1; k + 1 < n; ++k) in[k - 1] = get(base[k * stride]);
      (*dst)(in, out, work);
      set(base[0], 0.0);
      set(base[(n - 1) * stride], 0.0);
      for (std::size_t k = 1; k + 1 < n; ++k) set(base[k * stride], out[k - 1]);
    }
  }
};

}  // namespace detail

/// Applies the per-axis 1-D transforms of `plan` in place, axis by axis.
inline void tensor_apply_inplace(const TensorPlan& plan, NdArray<double>& a) {
  detail::check_shape(plan, a.shape());
  for (std::size_t axis = 0; axis < a.rank(); ++axis) {
    const auto kind = plan.axes[axis].kind;
    if (kind == AxisTransformKind::FFT) throw TransformSizeError("tensor_apply: FFT axis needs complex data");
    detail::RealLineTransform t(kind, a.extent(axis));
    const std::size_t stride = a.stride(axis);
    for_each_line(a.shape(), axis, [&](std::size_t off) {
      t.run(a.data() + off, stride, [](double v) { return v; }, [](double& d, double v) { d = v; });
    });
  }
}

inline void tensor_apply_inplace(const TensorPlan& plan, NdArray<cplx>& a) {
  detail::check_shape(plan, a.shape());
  for (std::size_t axis = 0; axis < a.rank(); ++axis) {
    const auto kind = plan.axes[axis].kind;
    const std::size_t n = a.extent(axis), stride = a.stride(axis);
    if (kind == AxisTransformKind::FFT) {
      auto p = fft_plan(n);
      std::vector<cplx> line(n), scratch(n);
      for_each_line(a.shape(), axis, [&](std::size_t off) {
        cplx* base = a.data() + off;
        for (std::size_t k = 0; k < n; ++k) line[k] = base[k * stride];
        p->execute(line, scratch, plan.fft_direction);
        for (std::size_t k = 0; k < n; ++k) base[k * stride] = line[k];
      });
    } else {
      detail::RealLineTransform t(kind, n);
      for_each_line(a.shape(), axis, [&](std::size_t off) {
        cplx* base = a.data() + off;
        t.run(base, stride, [](const cplx& v) { return v.real(); },
              [](cplx& d, double v) { d.real(v); });
        t.run(base, stride, [](const cplx& v) { return v.imag(); },
              [](cplx& d, double v) { d.imag(v); });
      });
    }
  }
}

template <class T>
NdArray<T> tensor_apply(const TensorPlan& plan, NdArray<T> a) {
  tensor_apply_inplace(plan, a);
  return a;
}

}  // namespace dnagrf

#endif  // DNAGRF_TRANSFORMS_HPP
