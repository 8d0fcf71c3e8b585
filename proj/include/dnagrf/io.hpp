#ifndef DNAGRF_IO_HPP
#define DNAGRF_IO_HPP

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>

namespace dnagrf::io {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class T>
void write_le(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T read_le(std::istream& is) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw FormatError("unexpected end of binary stream");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

inline void write_doubles(std::ostream& os, std::span<const double> v) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
  } else {
    for (double x : v) write_le(os, x);
  }
}

inline void read_doubles(std::istream& is, std::span<double> v) {
  for (double& x : v) x = read_le<double>(is);
}

inline void write_magic(std::ostream& os, const char (&tag)[5]) { os.write(tag, 4); }

inline void expect_magic(std::istream& is, const char (&tag)[5]) {
  char got[4];
  if (!is.read(got, 4) || std::memcmp(got, tag, 4) != 0)
    throw FormatError(std::string("bad magic, expected ") + tag);
}

/// Binary greyscale heatmap (P5), linearly mapping [lo, hi] to 0..255.
inline void write_pgm(std::ostream& os, std::span<const double> values, std::size_t rows, std::size_t cols, double lo,
                      double hi) {
  if (values.size() != rows * cols) throw std::invalid_argument("write_pgm: size mismatch");
  os << "P5\n" << cols << ' ' << rows << "\n255\n";
  const double span = hi > lo ? hi - lo : 1.0;
  for (double v : values) {
    const double t = std::clamp((v - lo) / span, 0.0, 1.0);
    os.put(static_cast<char>(static_cast<unsigned char>(t * 255.0 + 0.5)));
  }
}

/// Binary colour heatmap (P6) with a blue-white-red diverging map.
inline void write_ppm(std::ostream& os, std::span<const double> values, std::size_t rows, std::size_t cols, double lo,
                      double hi) {
  if (values.size() != rows * cols) throw std::invalid_argument("write_ppm: size mismatch");
  os << "P6\n" << cols << ' ' << rows << "\n255\n";
  const double span = hi > lo ? hi - lo : 1.0;
  for (double v : values) {
    const double t = std::clamp((v - lo) / span, 0.0, 1.0);
    double r, g, b;
    if (t < 0.5) {
      r = g = 2.0 * t;
      b = 1.0;
    } else {
      r = 1.0;
      g = b = 2.0 * (1.0 - t);
    }
    const unsigned char px[3] = {static_cast<unsigned char>(r * 255.0 + 0.5),
                                 static_cast<unsigned char>(g * 255.0 + 0.5),
                                 static_cast<unsigned char>(b * 255.0 + 0.5)};
    os.write(reinterpret_cast<const char*>(px), 3);
  }
}

}  // namespace dnagrf::io

#endif  // DNAGRF_IO_HPP
