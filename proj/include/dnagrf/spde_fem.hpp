#ifndef DNAGRF_SPDE_FEM_HPP
#define DNAGRF_SPDE_FEM_HPP

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "covariance.hpp"
#include "field.hpp"
#include "rng.hpp"
#include "sampler.hpp"

namespace dnagrf {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform right-triangle P1 mesh of (0, L)^2, m cells per axis. Node
/// (ix, iy) has index iy * (m + 1) + ix; each cell is split along the
/// diagonal from (ix, iy) to (ix + 1, iy + 1).
struct StructuredMesh {
  double length = 1.0;
  std::size_t cells = 1;

  StructuredMesh(double l, std::size_t m) : length(l), cells(m) {
    if (!(l > 0.0) || m < 1) throw std::invalid_argument("mesh needs L > 0 and m >= 1");
  }

  [[nodiscard]] double h() const { return length / static_cast<double>(cells); }
  [[nodiscard]] std::size_t side() const { return cells + 1; }
  [[nodiscard]] std::size_t node_count() const { return side() * side(); }
  [[nodiscard]] std::size_t node(std::size_t ix, std::size_t iy) const { return iy * side() + ix; }
  [[nodiscard]] std::array<double, 2> coord(std::size_t node) const {
    return {static_cast<double>(node % side()) * h(), static_cast<double>(node / side()) * h()};
  }
  /// True if the node lies on one of the two faces normal to axis j.
  [[nodiscard]] bool on_face(std::size_t node, int j) const {
    const std::size_t i = j == 0 ? node % side() : node / side();
    return i == 0 || i == cells;
  }
  [[nodiscard]] std::vector<std::array<std::size_t, 3>> triangles() const {
    std::vector<std::array<std::size_t, 3>> t;
    t.reserve(2 * cells * cells);
    for (std::size_t iy = 0; iy < cells; ++iy)
      for (std::size_t ix = 0; ix < cells; ++ix) {
        const std::size_t a = node(ix, iy), b = node(ix + 1, iy), c = node(ix + 1, iy + 1), d = node(ix, iy + 1);
        t.push_back({a, b, c});
        t.push_back({a, c, d});
      }
    return t;
  }
};

/// Symmetric sparse matrix in compressed row storage.
using SparseOperator = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Whittle-Matern problem (kappa^2 - Laplace) u = scale * W with beta = 1,
/// i.e. nu = 1 in two dimensions.
struct BVPConfig {
  BoundaryMask mask = BoundaryMask::neumann(2);
  double nu = 1.0;
  double ell = 0.25;

  void validate() const {
    if (nu != 1.0) throw UnsupportedConfiguration("the FE solver supports beta = 1 only, i.e. nu = 1 in d = 2");
    if (mask.dim() != 2) throw UnsupportedConfiguration("the FE solver is two-dimensional");
    if (!(ell > 0.0)) throw std::invalid_argument("correlation length must be positive");
  }
  [[nodiscard]] double kappa() const { return std::sqrt(2.0 * nu) / ell; }
  /// sqrt(C_nu) kappa^nu, giving the SPDE solution unit marginal variance.
  [[nodiscard]] double scaling() const { return std::sqrt(matern_constant(nu, 2)) * std::pow(kappa(), nu); }
};

/// Operators on the retained (non-Dirichlet) nodes.
struct AssembledSystem {
  SparseOperator a;          // kappa^2 M + K
  SparseOperator mass;       // M
  SparseOperator stiffness;  // K
  std::vector<std::ptrdiff_t> reduced;  // full node -> retained index, -1 if eliminated
  std::vector<std::size_t> retained;    // retained index -> full node
};

inline AssembledSystem assemble(const StructuredMesh& mesh, const BVPConfig& cfg) {
  cfg.validate();
  AssembledSystem sys;
  const std::size_t nn = mesh.node_count();
  sys.reduced.assign(nn, -1);
  for (std::size_t v = 0; v < nn; ++v) {
    bool eliminated = false;
    for (int j = 0; j < 2; ++j)
      if (cfg.mask.dirichlet_axis(j) && mesh.on_face(v, j)) eliminated = true;
    if (!eliminated) {
      sys.reduced[v] = static_cast<std::ptrdiff_t>(sys.retained.size());
      sys.retained.push_back(v);
    }
  }
  const auto nr = static_cast<Eigen::Index>(sys.retained.size());
  std::vector<Eigen::Triplet<double>> kt, mt;
  for (const auto& tri : mesh.triangles()) {
    std::array<std::array<double, 2>, 3> p;
    for (int i = 0; i < 3; ++i) p[i] = mesh.coord(tri[i]);
    const double x1 = p[1][0] - p[0][0], y1 = p[1][1] - p[0][1];
    const double x2 = p[2][0] - p[0][0], y2 = p[2][1] - p[0][1];
    const double det = x1 * y2 - x2 * y1;
    const double area = 0.5 * std::abs(det);
    // barycentric gradients
    const std::array<std::array<double, 2>, 3> g = {{{(y1 - y2) / det, (x2 - x1) / det},
                                                     {y2 / det, -x2 / det},
                                                     {-y1 / det, x1 / det}}};
    for (int i = 0; i < 3; ++i) {
      const auto ri = sys.reduced[tri[i]];
      if (ri < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const auto rj = sys.reduced[tri[j]];
        if (rj < 0) continue;
        kt.emplace_back(ri, rj, area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]));
        mt.emplace_back(ri, rj, area / 12.0 * (i == j ? 2.0 : 1.0));
      }
    }
  }
  sys.stiffness.resize(nr, nr);
  sys.stiffness.setFromTriplets(kt.begin(), kt.end());
  sys.mass.resize(nr, nr);
  sys.mass.setFromTriplets(mt.begin(), mt.end());
  const double k2 = cfg.kappa() * cfg.kappa();
  sys.a = k2 * sys.mass + sys.stiffness;
  return sys;
}

/// g = G xi with G G^T = M from the sparse Cholesky factor of M.
class WhiteNoiseLoad {
 public:
  explicit WhiteNoiseLoad(const SparseOperator& mass) {
    Eigen::SparseMatrix<double> m = mass;
    llt_ = std::make_shared<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>(m);
    if (llt_->info() != Eigen::Success) throw SolverError("mass matrix factorisation failed (degenerate mesh?)");
  }
  [[nodiscard]] Eigen::Index size() const { return llt_->rows(); }

  /// P L L^T P^T = M, so g = P^T L xi.
  [[nodiscard]] Eigen::VectorXd apply(const Eigen::VectorXd& xi) const {
    Eigen::VectorXd lx = llt_->matrixL() * xi;
    return llt_->permutationPinv() * lx;
  }

  [[nodiscard]] Eigen::VectorXd draw(RngStream& rng) const {
    Eigen::VectorXd xi(size());
    rng.fill_normal(std::span<double>(xi.data(), static_cast<std::size_t>(xi.size())));
    return apply(xi);
  }

 private:
  std::shared_ptr<const Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> llt_;
};

inline Eigen::VectorXd sample_white_noise_load(const SparseOperator& mass, RngStream& rng) {
  return WhiteNoiseLoad(mass).draw(rng);
}

enum class LinearSolver { Direct, ConjugateGradient };

/// Factorised single-mask problem; immutable after construction, so solves
/// may run concurrently.
class SpdeSolver {
 public:
  SpdeSolver(const StructuredMesh& mesh, const BVPConfig& cfg, LinearSolver kind = LinearSolver::Direct)
      : mesh_(mesh), cfg_(cfg), sys_(std::make_shared<AssembledSystem>(assemble(mesh, cfg))), load_(sys_->mass),
        kind_(kind) {
    Eigen::SparseMatrix<double> a = sys_->a;
    if (kind == LinearSolver::Direct) {
      llt_ = std::make_shared<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>(a);
      if (llt_->info() != Eigen::Success) throw SolverError("operator factorisation failed");
    }
  }

  [[nodiscard]] const AssembledSystem& system() const { return *sys_; }
  [[nodiscard]] const StructuredMesh& mesh() const { return mesh_; }
  [[nodiscard]] const BVPConfig& config() const { return cfg_; }
  [[nodiscard]] std::size_t noise_size() const { return sys_->retained.size(); }
  [[nodiscard]] std::size_t field_size() const { return mesh_.node_count(); }

  /// u = scale * A^{-1} g, scattered onto all nodes (eliminated nodes = 0).
  void apply(std::span<const double> xi, std::span<double> out) const {
    if (xi.size() != noise_size() || out.size() != field_size()) throw std::invalid_argument("SPDE size mismatch");
    const Eigen::VectorXd g = load_.apply(Eigen::Map<const Eigen::VectorXd>(xi.data(), static_cast<Eigen::Index>(xi.size())));
    const Eigen::VectorXd u = solve(cfg_.scaling() * g);
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t r = 0; r < sys_->retained.size(); ++r) out[sys_->retained[r]] = u[static_cast<Eigen::Index>(r)];
  }

  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    if (kind_ == LinearSolver::Direct) return llt_->solve(rhs);
    Eigen::ConjugateGradient<SparseOperator, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-10);
    cg.compute(sys_->a);
    Eigen::VectorXd u = cg.solve(rhs);
    if (cg.info() != Eigen::Success)
      throw SolverError("CG did not converge: relative residual " + std::to_string(cg.error()) + " after " +
                        std::to_string(cg.iterations()) + " iterations");
    return u;
  }

 private:
  StructuredMesh mesh_;
  BVPConfig cfg_;
  std::shared_ptr<const AssembledSystem> sys_;
  WhiteNoiseLoad load_;
  LinearSolver kind_;
  std::shared_ptr<const Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> llt_;
};

/// Nodes of the target unit square inside a larger mesh: a (target_m + 1)^2
/// block starting at node (offset, offset).
struct TargetWindow {
  std::size_t offset = 0;
  std::size_t target_m = 1;

  [[nodiscard]] std::size_t side() const { return target_m + 1; }
  [[nodiscard]] std::size_t size() const { return side() * side(); }
  void restrict(const StructuredMesh& mesh, std::span<const double> full, std::span<double> out) const {
    for (std::size_t iy = 0; iy < side(); ++iy)
      for (std::size_t ix = 0; ix < side(); ++ix) out[iy * side() + ix] = full[mesh.node(ix + offset, iy + offset)];
  }
};

/// Mesh over (0, extension)^2 with spacing 1 / target_m.
inline StructuredMesh extended_mesh(std::size_t target_m, double extension) {
  if (!(extension >= 1.0)) throw std::invalid_argument("domain extension must be >= 1");
  const double cells = extension * static_cast<double>(target_m);
  const auto m = static_cast<std::size_t>(std::llround(cells));
  if (std::abs(cells - static_cast<double>(m)) > 1e-9)
    throw std::invalid_argument("extension * target_m must be an integer number of cells");
  return {extension, m};
}

/// Sampler over the target window for one or several masks on a shared mesh.
///
/// With all four masks the result is the FE DNA field 2^{-1} sum_b u^b;
/// with the Neumann mask alone it is the classical oversampling approach.
/// Mask k draws from rng.substream(k).
class SpdeSampler {
 public:
  SpdeSampler(StructuredMesh mesh, double ell, std::vector<BoundaryMask> masks, TargetWindow window,
              LinearSolver kind = LinearSolver::Direct)
      : mesh_(mesh), window_(window) {
    if (masks.empty()) throw std::invalid_argument("SPDE sampler needs at least one mask");
    if (window.offset + window.target_m > mesh.cells) throw std::invalid_argument("target window outside mesh");
    for (auto& b : masks) solvers_.push_back(std::make_shared<const SpdeSolver>(mesh, BVPConfig{b, 1.0, ell}, kind));
    weight_ = masks.size() == 1 ? 1.0 : std::pow(2.0, -0.5 * static_cast<double>(masks.front().dim()));
    if (masks.size() != 1 && masks.size() != 4) throw std::invalid_argument("use one mask or all four");
    full_.resize(mesh.node_count());
    acc_.resize(mesh.node_count());
  }

  [[nodiscard]] std::size_t field_size() const { return window_.size(); }
  [[nodiscard]] std::size_t fields_per_draw() const { return 1; }
  [[nodiscard]] std::size_t side() const { return window_.side(); }
  [[nodiscard]] double spacing() const { return mesh_.h(); }
  [[nodiscard]] const StructuredMesh& mesh() const { return mesh_; }
  [[nodiscard]] const SpdeSolver& solver(std::size_t k) const { return *solvers_.at(k); }
  [[nodiscard]] std::size_t masks() const { return solvers_.size(); }

  /// Concatenated per-mask noise blocks.
  [[nodiscard]] std::size_t noise_size() const {
    std::size_t s = 0;
    for (const auto& sv : solvers_) s += sv->noise_size();
    return s;
  }

  void apply(std::span<const double> noise, std::span<double> out) {
    if (noise.size() != noise_size() || out.size() != field_size()) throw std::invalid_argument("SPDE size mismatch");
    std::fill(acc_.begin(), acc_.end(), 0.0);
    std::size_t off = 0;
    for (const auto& sv : solvers_) {
      sv->apply(noise.subspan(off, sv->noise_size()), full_);
      off += sv->noise_size();
      for (std::size_t i = 0; i < acc_.size(); ++i) acc_[i] += full_[i];
    }
    for (double& v : acc_) v *= weight_;
    window_.restrict(mesh_, acc_, out);
  }

  void draw(const RngStream& rng, std::span<double> out) {
    noise_.resize(noise_size());
    std::size_t off = 0;
    for (std::size_t k = 0; k < solvers_.size(); ++k) {
      RngStream sub = rng.substream(k);
      sub.fill_normal(std::span<double>(noise_).subspan(off, solvers_[k]->noise_size()));
      off += solvers_[k]->noise_size();
    }
    apply(noise_, out);
  }

 private:
  StructuredMesh mesh_;
  TargetWindow window_;
  std::vector<std::shared_ptr<const SpdeSolver>> solvers_;
  double weight_ = 1.0;
  std::vector<double> full_, acc_, noise_;
};

inline std::vector<BoundaryMask> all_masks(int dim = 2) {
  std::vector<BoundaryMask> m;
  for (unsigned b = 0; b < (1u << dim); ++b) m.push_back(BoundaryMask::from_index(b, dim));
  return m;
}

/// FE DNA sampler on (0, extension)^2 with the unit target square at the
/// origin corner.
inline SpdeSampler dna_fem_sampler(double ell, std::size_t target_m, double extension = 1.0) {
  return {extended_mesh(target_m, extension), ell, all_masks(), TargetWindow{0, target_m}};
}

/// Neumann-only sampler on (0, extension)^2 with the unit target square
/// centred, keeping it as far from the reflecting faces as possible.
inline SpdeSampler neumann_oversampled_sampler(double ell, std::size_t target_m, double extension) {
  const StructuredMesh mesh = extended_mesh(target_m, extension);
  const std::size_t margin = mesh.cells - target_m;
  if (margin % 2 != 0) throw std::invalid_argument("extension must leave an even number of margin cells");
  return {mesh, ell, {BoundaryMask::neumann(2)}, TargetWindow{margin / 2, target_m}};
}

namespace detail {

inline FieldRealisation window_field(const SpdeSampler& s, std::span<const double> v, const RngStream& rng) {
  FieldRealisation f;
  f.values = NdArray<double>({s.side(), s.side()});
  std::copy(v.begin(), v.end(), f.values.begin());
  f.alpha = s.mesh().length;
  f.n = s.side() - 1;
  f.dim = 2;
  f.spacing = s.spacing();
  f.seed = rng.seed();
  f.stream = rng.stream();
  return f;
}

}  // namespace detail

/// Nodal field of one mask on the whole mesh.
inline FieldRealisation solve_single_bc(const BVPConfig& cfg, const StructuredMesh& mesh, const RngStream& rng) {
  SpdeSampler s(mesh, cfg.ell, {cfg.mask}, TargetWindow{0, mesh.cells});
  std::vector<double> out(s.field_size());
  s.draw(rng, out);
  return detail::window_field(s, out, rng);
}

/// FE DNA field on the whole mesh.
inline FieldRealisation solve_dna(double ell, const StructuredMesh& mesh, const RngStream& rng) {
  SpdeSampler s(mesh, ell, all_masks(), TargetWindow{0, mesh.cells});
  std::vector<double> out(s.field_size());
  s.draw(rng, out);
  return detail::window_field(s, out, rng);
}

inline FieldRealisation solve_neumann_oversampled(double ell, std::size_t target_m, double extension,
                                                  const RngStream& rng) {
  auto s = neumann_oversampled_sampler(ell, target_m, extension);
  std::vector<double> out(s.field_size());
  s.draw(rng, out);
  return detail::window_field(s, out, rng);
}

/// Smallest generalised eigenvalues of K x = lambda M x by shift-invert
/// block subspace iteration with Rayleigh-Ritz, shift -1 (K + M is SPD).
inline std::vector<double> smallest_generalised_eigenvalues(const SparseOperator& k, const SparseOperator& m,
                                                            int count, int block = 0, int iterations = 200,
                                                            double tol = 1e-12) {
  if (block <= 0) block = 2 * count + 2;
  const Eigen::Index n = k.rows();
  block = static_cast<int>(std::min<Eigen::Index>(block, n));
  if (count > block) throw std::invalid_argument("eigenvalue count exceeds problem size");
  Eigen::SparseMatrix<double> shifted = k + m;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(shifted);
  if (llt.info() != Eigen::Success) throw SolverError("K + M factorisation failed");
  // deterministic start block
  Eigen::MatrixXd x(n, block);
  RngStream rng(0x5eed, 0);
  for (Eigen::Index j = 0; j < block; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = rng.normal();
  std::vector<double> prev(count, 0.0), cur(count, 0.0);
  for (int it = 0; it < iterations; ++it) {
    Eigen::MatrixXd y = llt.solve(m * x);
    const Eigen::MatrixXd kr = y.transpose() * (k * y);
    const Eigen::MatrixXd mr = y.transpose() * (m * y);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(0.5 * (kr + kr.transpose()),
                                                                  0.5 * (mr + mr.transpose()));
    if (ges.info() != Eigen::Success) throw SolverError("Rayleigh-Ritz step failed");
    x = y * ges.eigenvectors();  // M-orthonormal Ritz vectors, ascending
    for (int i = 0; i < count; ++i) cur[i] = ges.eigenvalues()[i];
    bool done = it > 0;
    for (int i = 0; i < count; ++i)
      if (std::abs(cur[i] - prev[i]) > tol * std::max(1.0, std::abs(cur[i]))) done = false;
    prev = cur;
    if (done) break;
  }
  return cur;
}

}  // namespace dnagrf

#endif  // DNAGRF_SPDE_FEM_HPP
