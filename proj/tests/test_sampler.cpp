#include <dnagrf/sampler.hpp>
#include <dnagrf/stats.hpp>
#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <vector>

#include "oracles.hpp"

using namespace dnagrf;

namespace {

// Grid offsets of node i on an (n+1)^d closed grid.
std::vector<double> node_coords(std::size_t i, std::size_t side, int dim, double h) {
  std::vector<double> x(dim);
  for (int a = dim - 1; a >= 0; --a) {
    x[a] = static_cast<double>(i % side) * h;
    i /= side;
  }
  return x;
}

Eigen::MatrixXd dna_map(DnaSampler& s) {
  return oracle::dense_map(s.noise_size(), s.field_size(),
                           [&](const std::vector<double>& e, std::vector<double>& y) { s.apply(e, y); });
}

Eigen::MatrixXd single_map(DnaSampler& s, const BoundaryMask& b) {
  return oracle::dense_map(s.block_size(), s.field_size(),
                           [&](const std::vector<double>& e, std::vector<double>& y) { s.apply_single(b, e, y); });
}

}  // namespace

TEST(Sampler, DnaDenseMapIsPeriodisedCovariance) {
  struct Case {
    int d;
    std::size_t n;
  };
  for (Case c : {Case{1, 8}, Case{1, 16}, Case{2, 6}, Case{2, 8}}) {
    const auto model = CovarianceModel::matern(1.5, 0.3);
    const auto table = SpectrumTable::build(model, {1.0, c.n, c.d});
    DnaSampler s(table);
    const Eigen::MatrixXd h = dna_map(s);
    const Eigen::MatrixXd cov = h * h.transpose();
    const std::size_t side = c.n + 1;
    double worst = 0.0;
    for (std::size_t i = 0; i < s.field_size(); ++i)
      for (std::size_t j = 0; j < s.field_size(); ++j) {
        auto xi = node_coords(i, side, c.d, s.spacing()), xj = node_coords(j, side, c.d, s.spacing());
        for (int a = 0; a < c.d; ++a) xi[a] -= xj[a];
        worst = std::max(worst, std::abs(cov(i, j) - periodised_cov_spectral(table, xi)));
      }
    EXPECT_LE(worst, 1e-10) << "d=" << c.d << " n=" << c.n;
  }
}

TEST(Sampler, SingleMaskDenseMapsReproduceReflectedCovariances) {
  const auto model = CovarianceModel::matern(1.0, 0.25);
  const auto table = SpectrumTable::build(model, {1.0, 8, 1});
  DnaSampler s(table);
  const double h = s.spacing();
  for (unsigned b : {0u, 1u}) {
    const Eigen::MatrixXd m = single_map(s, BoundaryMask::from_index(b, 1));
    const Eigen::MatrixXd cov = m * m.transpose();
    const double sign = b == 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i <= 8; ++i)
      for (std::size_t j = 0; j <= 8; ++j) {
        const double x = i * h, y = j * h;
        const double ref = periodised_cov_spectral(table, x - y) + sign * periodised_cov_spectral(table, x + y);
        EXPECT_NEAR(cov(i, j), ref, 1e-10) << "b=" << b << " i=" << i << " j=" << j;
      }
  }
}

TEST(Sampler, SingleMaskDenseMaps2dProductStructure) {
  // In 2-D the mask covariance is the product-form sum over reflections:
  // sum over sign patterns s of prod_j (+-1)^{b_j [s_j = -]} phi_prd(x - S y).
  const auto model = CovarianceModel::matern(1.0, 0.3);
  const auto table = SpectrumTable::build(model, {1.0, 6, 2});
  DnaSampler s(table);
  const std::size_t side = 7;
  for (unsigned b = 0; b < 4; ++b) {
    const auto mask = BoundaryMask::from_index(b, 2);
    const Eigen::MatrixXd m = single_map(s, mask);
    const Eigen::MatrixXd cov = m * m.transpose();
    double worst = 0.0;
    for (std::size_t i = 0; i < s.field_size(); ++i)
      for (std::size_t j = 0; j < s.field_size(); ++j) {
        const auto x = node_coords(i, side, 2, s.spacing()), y = node_coords(j, side, 2, s.spacing());
        double ref = 0.0;
        for (int p = 0; p < 4; ++p) {
          std::vector<double> delta(2);
          double w = 1.0;
          for (int a = 0; a < 2; ++a) {
            const bool flip = (p >> a) & 1;
            delta[a] = flip ? x[a] + y[a] : x[a] - y[a];
            if (flip && mask.dirichlet_axis(a)) w = -w;
          }
          ref += w * periodised_cov_spectral(table, delta);
        }
        worst = std::max(worst, std::abs(cov(i, j) - ref));
      }
    EXPECT_LE(worst, 1e-10) << "mask " << b;
  }
}

TEST(Sampler, DnaIsStationaryAndHasFlatVariance) {
  const auto table = SpectrumTable::build(CovarianceModel::matern(0.5, 0.2), {1.0, 8, 2});
  DnaSampler s(table);
  const Eigen::MatrixXd h = dna_map(s);
  const Eigen::MatrixXd cov = h * h.transpose();
  const std::vector<double> zero{0.0, 0.0};
  const double var = periodised_cov_spectral(table, zero);
  for (Eigen::Index i = 0; i < cov.rows(); ++i) EXPECT_NEAR(cov(i, i), var, 1e-10);
  // block Toeplitz: entries depend on index differences only
  const std::size_t side = 9;
  for (std::size_t i = 0; i + side + 1 < s.field_size(); ++i)
    for (std::size_t j = 0; j + side + 1 < s.field_size(); ++j) {
      if (i % side == side - 1 || j % side == side - 1) continue;
      EXPECT_NEAR(cov(i, j), cov(i + side + 1, j + side + 1), 1e-10);
    }
}

TEST(Sampler, DirichletFieldVanishesOnBoundary) {
  const auto table = SpectrumTable::build(CovarianceModel::matern(1.0, 0.2), {1.0, 8, 2});
  const auto f = sample_single_bc(table, BoundaryMask::dirichlet(2), RngStream(3, 4));
  const std::size_t side = 9;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const std::size_t r = i / side, c = i % side;
    if (r == 0 || c == 0 || r == side - 1 || c == side - 1) EXPECT_EQ(f.values[i], 0.0);
  }
  EXPECT_TRUE(f.all_finite());
  // mixed mask: Dirichlet on axis 0 only, the leading (row) index
  const auto g = sample_single_bc(table, BoundaryMask::from_index(1, 2), RngStream(3, 5));
  for (std::size_t c = 0; c < side; ++c) {
    EXPECT_EQ(g.values[c], 0.0);
    EXPECT_EQ(g.values[(side - 1) * side + c], 0.0);
  }
  EXPECT_NE(g.values[4 * side], 0.0);
}

TEST(Sampler, DirectSummationMatchesFastPath) {
  for (int d : {1, 2}) {
    const std::size_t n = d == 1 ? 16 : 6;
    const auto table = SpectrumTable::build(CovarianceModel::matern(2.0, 0.3), {1.3, n, d});
    DnaSampler s(table);
    const RngStream rng(9, 1);
    const auto f = sample_dna(table, rng);
    std::vector<std::vector<double>> pts;
    for (std::size_t i = 0; i < s.field_size(); ++i) pts.push_back(node_coords(i, n + 1, d, s.spacing()));
    const auto direct = sample_dna_direct(table, rng, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(direct[i], f.values[i], 1e-10);

    std::vector<double> zero(s.noise_size(), 0.0);
    for (double v : sample_dna_direct(table, zero, pts)) EXPECT_EQ(v, 0.0);
  }
}

TEST(Sampler, SingleModeGivesScaledBasisFunction) {
  const std::size_t n = 8;
  const double alpha = 1.0;
  const auto table = SpectrumTable::build(CovarianceModel::matern(1.0, 0.3), {alpha, n, 1});
  DnaSampler s(table);
  std::vector<double> noise(s.noise_size(), 0.0);
  const std::size_t mu = 3;
  noise[(n + 1) + mu] = 1.0;  // sine block
  std::vector<double> out(s.field_size());
  s.apply(noise, out);
  const double scale = std::sqrt(table.coeffs[mu]) * std::sqrt(2.0 / alpha) / std::sqrt(2.0);
  for (std::size_t k = 0; k <= n; ++k)
    EXPECT_NEAR(out[k], scale * std::sin(oracle::pi * double(mu * k) / double(n)), 1e-13);
}

TEST(Sampler, PeriodicDenseMap) {
  const auto model = CovarianceModel::matern(1.0, 0.2);
  const auto table = SpectrumTable::build(model, {1.0, 8, 1}, PeriodConvention::Naive);
  PeriodicSampler s(table);
  const std::size_t m = s.m();
  const Eigen::MatrixXd h = oracle::dense_map(s.noise_size(), 2 * m, [&](const std::vector<double>& e, std::vector<double>& y) {
    s.apply(e, y);
  });
  const Eigen::MatrixXd re = h.topRows(m), im = h.bottomRows(m);
  const Eigen::MatrixXd crr = re * re.transpose(), cii = im * im.transpose(), cri = re * im.transpose();
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t l = 0; l < m; ++l) {
      const double ref = periodised_cov_spectral(table, (double(k) - double(l)) * s.spacing());
      EXPECT_NEAR(crr(k, l), ref, 1e-10);
      EXPECT_NEAR(cii(k, l), ref, 1e-10);
      EXPECT_NEAR(cri(k, l), 0.0, 1e-10);
    }
}

TEST(Sampler, PeriodicZeroSpectrumGivesZeroFields) {
  auto table = SpectrumTable::build(CovarianceModel::matern(1.0, 0.2), {1.0, 8, 2}, PeriodConvention::Naive);
  for (auto& v : table.coeffs) v = 0.0;
  const auto [a, b] = sample_periodic(table, RngStream(1, 1));
  for (double v : a.values) EXPECT_EQ(v, 0.0);
  for (double v : b.values) EXPECT_EQ(v, 0.0);
}

TEST(Sampler, DistinctStreamsAreUncorrelated) {
  const auto table = SpectrumTable::build(CovarianceModel::matern(1.0, 0.2), {1.0, 4, 1}, PeriodConvention::Naive);
  PeriodicSampler s(table);
  const std::size_t m = s.m();
  const int n = 100000;
  std::vector<double> a(2 * m), b(2 * m);
  std::vector<double> sab(m, 0.0);
  double saa = 0.0, sbb = 0.0;
  for (int r = 0; r < n; ++r) {
    s.draw(RngStream(7, 2 * r), a);
    s.draw(RngStream(7, 2 * r + 1), b);
    for (std::size_t j = 0; j < m; ++j) sab[j] += a[0] * b[j];
    saa += a[0] * a[0];
    sbb += b[0] * b[0];
  }
  for (std::size_t j = 0; j < m; ++j) EXPECT_LE(std::abs(sab[j] / std::sqrt(saa * sbb)), 4.0 / std::sqrt(double(n)));
}

TEST(Sampler, CeDenseMapIsExactToeplitz) {
  const auto model = CovarianceModel::matern(0.5, 0.05);
  const std::size_t n = 16;
  const auto tau = minimal_embedding(model, n, 64);
  ASSERT_TRUE(tau.has_value());
  CeSampler s(model, CeGrid{n, *tau, 1});
  const std::size_t fs = s.field_size();
  const Eigen::MatrixXd h = oracle::dense_map(s.noise_size(), 2 * fs, [&](const std::vector<double>& e, std::vector<double>& y) {
    s.apply(e, y);
  });
  const Eigen::MatrixXd re = h.topRows(fs), im = h.bottomRows(fs);
  const Eigen::MatrixXd c1 = re * re.transpose(), c2 = im * im.transpose();
  for (std::size_t k = 0; k < fs; ++k)
    for (std::size_t l = 0; l < fs; ++l) {
      const double ref = stationary(model, (double(k) - double(l)) / double(n));
      EXPECT_NEAR(c1(k, l), ref, 1e-10);
      EXPECT_NEAR(c2(k, l), ref, 1e-10);
    }
}

TEST(Sampler, CeDenseMap2d) {
  const auto model = CovarianceModel::matern(0.5, 0.1);
  const std::size_t n = 4;
  CeSampler s(model, CeGrid{n, 2, 2});
  const std::size_t fs = s.field_size();
  const Eigen::MatrixXd h = oracle::dense_map(s.noise_size(), 2 * fs, [&](const std::vector<double>& e, std::vector<double>& y) {
    s.apply(e, y);
  });
  const Eigen::MatrixXd re = h.topRows(fs);
  const Eigen::MatrixXd c = re * re.transpose();
  for (std::size_t i = 0; i < fs; ++i)
    for (std::size_t j = 0; j < fs; ++j) {
      auto xi = node_coords(i, n + 1, 2, 1.0 / n), xj = node_coords(j, n + 1, 2, 1.0 / n);
      for (int a = 0; a < 2; ++a) xi[a] -= xj[a];
      EXPECT_NEAR(c(i, j), stationary(model, xi), 1e-10);
    }
}

TEST(Sampler, CeNegativeSpectrumAndZeroNoise) {
  EXPECT_THROW(CeSampler(CovarianceModel::gaussian(0.2), CeGrid{1500, 1, 1}), NegativeSpectrum);
  CeSampler s(CovarianceModel::matern(0.5, 0.05), CeGrid{16, 1, 1});
  std::vector<double> zero(s.noise_size(), 0.0), out(2 * s.field_size(), 1.0);
  s.apply(zero, out);
  for (double v : out) EXPECT_EQ(v, 0.0);
  DnaSampler d(SpectrumTable::build(CovarianceModel::matern(1.0, 0.2), {1.0, 8, 2}));
  std::vector<double> dz(d.noise_size(), 0.0), dout(d.field_size(), 1.0);
  d.apply(dz, dout);
  for (double v : dout) EXPECT_EQ(v, 0.0);
}

TEST(Sampler, MonteCarloWithinFiveStandardErrors) {
  const auto model = CovarianceModel::matern(1.0, 0.3);
  const auto table = SpectrumTable::build(model, {1.0, 16, 1});
  DnaSampler s(table);
  const std::size_t batches = 40, per = 2500;
  std::vector<MomentAccumulator> acc(batches, MomentAccumulator::full(s.field_size()));
  std::vector<double> out(s.field_size());
  for (std::size_t b = 0; b < batches; ++b)
    for (std::size_t r = 0; r < per; ++r) {
      s.draw(RngStream(21, b * per + r), out);
      acc[b].add(out);
    }
  MomentAccumulator total = acc[0];
  for (std::size_t b = 1; b < batches; ++b) total.merge(acc[b]);
  const auto& pairs = total.pairs();
  int outside = 0;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    std::vector<double> per_batch;
    for (const auto& a : acc) per_batch.push_back(a.covariance(p));
    double mean = 0.0, var = 0.0;
    for (double v : per_batch) mean += v;
    mean /= batches;
    for (double v : per_batch) var += (v - mean) * (v - mean);
    const double se = std::sqrt(var / (batches - 1) / batches);
    const double ref = periodised_cov_spectral(table, (double(pairs[p].second) - double(pairs[p].first)) * s.spacing());
    if (std::abs(total.covariance(p) - ref) > 5.0 * se) ++outside;
  }
  EXPECT_EQ(outside, 0);
}

TEST(Sampler, Reproducibility) {
  const auto table = SpectrumTable::build(CovarianceModel::matern(1.0, 0.2), {1.0, 32, 2});
  const auto a = sample_dna(table, RngStream(5, 17));
  const auto b = sample_dna(table, RngStream(5, 17));
  const auto c = sample_dna(table, RngStream(5, 18));
  EXPECT_EQ(a.values.values(), b.values.values());
  EXPECT_NE(a.values.values(), c.values.values());
  EXPECT_EQ(a.seed, 5u);
  EXPECT_EQ(a.stream, 17u);
}

TEST(Sampler, FieldSerialisation) {
  const auto table = SpectrumTable::build(CovarianceModel::matern(1.0, 0.2), {1.0, 10, 1});
  const auto f = sample_dna(table, RngStream(2, 3));
  std::stringstream ss;
  f.write_binary(ss);
  const auto g = FieldRealisation::read_binary(ss);
  EXPECT_EQ(g.values.values(), f.values.values());
  EXPECT_EQ(g.values.shape(), f.values.shape());
  EXPECT_EQ(g.seed, 2u);
  EXPECT_EQ(g.stream, 3u);
  EXPECT_DOUBLE_EQ(g.spacing, 0.1);
  std::stringstream csv;
  f.write_csv(csv);
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "x,value");
  int rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  EXPECT_EQ(rows, 11);
  const auto f2 = sample_dna(SpectrumTable::build(CovarianceModel::matern(1.0, 0.2), {1.0, 4, 2}), RngStream(1, 1));
  EXPECT_THROW(f2.write_csv(csv), std::invalid_argument);
}

TEST(Sampler, ConventionMismatchRejected) {
  const auto naive = SpectrumTable::build(CovarianceModel::matern(1.0, 0.2), {1.0, 8, 1}, PeriodConvention::Naive);
  EXPECT_THROW(DnaSampler{naive}, std::invalid_argument);
  const auto dna = SpectrumTable::build(CovarianceModel::matern(1.0, 0.2), {1.0, 8, 1});
  EXPECT_THROW(PeriodicSampler{dna}, std::invalid_argument);
}
