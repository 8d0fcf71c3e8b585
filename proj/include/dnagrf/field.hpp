#ifndef DNAGRF_FIELD_HPP
#define DNAGRF_FIELD_HPP

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "io.hpp"
#include "ndarray.hpp"

namespace dnagrf {

/// One field realisation on a uniform grid with node k at k * spacing per axis.
struct FieldRealisation {
  NdArray<double> values;
  double alpha = 1.0;
  std::size_t n = 0;  // intervals per axis of the native grid
  int dim = 1;
  double spacing = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  [[nodiscard]] bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void write_binary(std::ostream& os) const {
    io::write_magic(os, "GRFF");
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(dim));
    for (std::size_t a = 0; a < values.rank(); ++a) io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(values.extent(a)));
    io::write_le<double>(os, alpha);
    io::write_le<double>(os, spacing);
    io::write_le<std::uint64_t>(os, seed);
    io::write_le<std::uint64_t>(os, stream);
    io::write_doubles(os, values.values());
  }

  static FieldRealisation read_binary(std::istream& is) {
    io::expect_magic(is, "GRFF");
    FieldRealisation f;
    f.dim = static_cast<int>(io::read_le<std::uint32_t>(is));
    if (f.dim < 1 || f.dim > 3) throw io::FormatError("bad field dimension");
    std::vector<std::size_t> shape(f.dim);
    for (auto& s : shape) s = io::read_le<std::uint32_t>(is);
    f.alpha = io::read_le<double>(is);
    f.spacing = io::read_le<double>(is);
    f.seed = io::read_le<std::uint64_t>(is);
    f.stream = io::read_le<std::uint64_t>(is);
    f.values = NdArray<double>(shape);
    f.n = shape[0] > 0 ? shape[0] - 1 : 0;
    io::read_doubles(is, f.values.values());
    return f;
  }

  /// x,value lines; d = 1 only.
  void write_csv(std::ostream& os) const {
    if (dim != 1) throw std::invalid_argument("CSV export is only defined for d = 1 fields");
    os << "x,value\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t k = 0; k < values.size(); ++k) os << static_cast<double>(k) * spacing << ',' << values[k] << '\n';
  }
};

}  // namespace dnagrf

#endif  // DNAGRF_FIELD_HPP
