// grf: command-line front end for the dnagrf samplers and error studies.

#include <dnagrf/dnagrf.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

namespace fs = std::filesystem;
using namespace dnagrf;

namespace {

constexpr const char* kVersion = "0.1.0";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string method = "dna";
  std::vector<std::string> model{"matern"};
  std::vector<double> nu{0.5};
  std::vector<double> ell{0.1};
  std::vector<double> alpha{1.0};
  std::size_t n = 64;
  int d = 1;
  std::uint64_t count = 1;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string out;
  std::size_t batches = 40;
  bool bounds = false;
  std::vector<std::size_t> mesh{32};
  std::size_t max_factor = 256;
  std::uint64_t profile_count = 10000;
  std::string config;
};

// ---- output helpers -------------------------------------------------------

fs::path output_dir(const Options& o) {
  fs::path dir = o.out;
  if (dir.empty()) {
    const char* env = std::getenv("GRF_OUT_DIR");
    dir = env && *env ? fs::path(env) : fs::path(".");
  }
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& p, bool binary = false) {
  std::ofstream f(p, binary ? std::ios::binary : std::ios::out);
  if (!f) throw std::runtime_error("cannot open " + p.string() + " for writing");
  f << std::setprecision(std::numeric_limits<double>::max_digits10);
  return f;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? " " : "") << v[i];
  return s.str();
}

void write_manifest(const fs::path& dir, const std::string& command, const Options& o,
                    const std::vector<std::pair<std::string, std::string>>& extra) {
  auto f = open_out(dir / "manifest.txt");
  f << "tool: grf " << kVersion << "\n";
  f << "command: " << command << "\n";
  f << "method: " << o.method << "\n";
  f << "model: " << join(o.model) << "\n";
  f << "nu: " << join(o.nu) << "\n";
  f << "ell: " << join(o.ell) << "\n";
  f << "alpha: " << join(o.alpha) << "\n";
  f << "n: " << o.n << "\n";
  f << "d: " << o.d << "\n";
  f << "count: " << o.count << "\n";
  f << "seed: " << o.seed << "\n";
  f << "threads: " << o.threads << "\n";
  f << "batches: " << o.batches << "\n";
  f << "bounds: " << (o.bounds ? "true" : "false") << "\n";
  f << "mesh: " << join(o.mesh) << "\n";
  f << "max_factor: " << o.max_factor << "\n";
  for (const auto& [k, v] : extra) f << k << ": " << v << "\n";
}

// ---- model handling -------------------------------------------------------

struct ModelSpec {
  CovarianceModel model;
  std::string label;  // e.g. matern_nu2
};

std::string nu_label(double nu) {
  std::ostringstream s;
  s << nu;
  return s.str();
}

/// Expand --model/--nu/--ell into the cartesian sweep (nu applies to Matern only).
std::vector<ModelSpec> sweep(const Options& o) {
  std::vector<ModelSpec> out;
  for (const auto& name : o.model) {
    CovarianceFamily fam;
    try {
      fam = parse_family(name);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    for (double ell : o.ell) {
      if (!(ell > 0)) throw UsageError("--ell must be positive");
      if (fam == CovarianceFamily::Matern) {
        for (double nu : o.nu) {
          if (!(nu > 0)) throw UsageError("--nu must be positive");
          out.push_back({CovarianceModel::matern(nu, ell), "matern_nu" + nu_label(nu)});
        }
      } else {
        out.push_back({CovarianceModel{fam, 0.0, ell}, std::string(family_name(fam))});
      }
    }
  }
  return out;
}

CovarianceModel single_model(const Options& o) {
  if (o.model.size() != 1 || o.ell.size() != 1 || o.nu.size() != 1)
    throw UsageError("this command takes a single --model, --nu and --ell");
  auto s = sweep(o);
  return s.front().model;
}

double single_alpha(const Options& o) {
  if (o.alpha.size() != 1) throw UsageError("this command takes a single --alpha");
  return o.alpha.front();
}

std::size_t padding_factor(double alpha) {
  const auto tau = static_cast<std::size_t>(std::llround(alpha));
  if (alpha < 1.0 || std::abs(alpha - static_cast<double>(tau)) > 1e-12)
    throw UsageError("for --method ce, --alpha is the integer padding factor (>= 1)");
  return tau;
}

void check_common(const Options& o) {
  if (o.d < 1 || o.d > 3) throw UsageError("--d must be 1, 2 or 3");
  if (o.n < 1) throw UsageError("--n must be >= 1");
  if (o.threads < 1) throw UsageError("--threads must be >= 1");
  for (double a : o.alpha)
    if (!(a >= 1.0)) throw UsageError("--alpha must be >= 1");
}

void check_spde(const Options& o) {
  if (o.d != 2) throw UsageError("SPDE methods are two-dimensional (--d 2)");
  for (double nu : o.nu)
    if (nu != 1.0) throw UsageError("SPDE methods support beta = 1 only, which requires --nu 1 in d = 2");
  for (const auto& m : o.model)
    if (m != "matern") throw UsageError("SPDE methods produce Matern fields (--model matern)");
}

// Runs f(state, k) for k in [0, count) on `threads` workers, each owning a
// copy of `proto`; every k is independent of scheduling.
template <class State, class F>
void parallel_for(const State& proto, std::uint64_t count, unsigned threads, F f) {
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto work = [&] {
    try {
      State local = proto;
      for (std::uint64_t k = next++; k < count; k = next++) f(local, k);
    } catch (...) {
      std::lock_guard l(mu);
      if (!err) err = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

// ---- sample ----------------------------------------------------------------

struct FieldMeta {
  std::vector<std::size_t> shape;
  double alpha;
  std::size_t n;
  int dim;
  double spacing;
};

void write_field(const fs::path& dir, std::uint64_t index, const FieldMeta& meta, std::span<const double> v,
                 std::uint64_t seed, std::uint64_t stream) {
  FieldRealisation f;
  f.values = NdArray<double>(meta.shape);
  std::copy(v.begin(), v.end(), f.values.begin());
  f.alpha = meta.alpha;
  f.n = meta.n;
  f.dim = meta.dim;
  f.spacing = meta.spacing;
  f.seed = seed;
  f.stream = stream;
  std::ostringstream name;
  name << "field_" << std::setw(6) << std::setfill('0') << index;
  {
    auto os = open_out(dir / (name.str() + ".bin"), true);
    f.write_binary(os);
  }
  if (f.dim == 1) {
    auto os = open_out(dir / (name.str() + ".csv"));
    f.write_csv(os);
  }
}

// Fields k = fpd * draw + j come from draw `draw` with RngStream(seed, draw).
template <class Sampler>
void sample_with(const Sampler& proto, const FieldMeta& meta, const Options& o, const fs::path& dir) {
  const std::size_t fpd = proto.fields_per_draw();
  const std::uint64_t draws = (o.count + fpd - 1) / fpd;
  parallel_for(proto, draws, o.threads, [&](Sampler& s, std::uint64_t r) {
    std::vector<double> out(s.field_size() * fpd);
    s.draw(RngStream(o.seed, r), out);
    for (std::size_t j = 0; j < fpd && r * fpd + j < o.count; ++j)
      write_field(dir, r * fpd + j, meta, std::span<const double>(out).subspan(j * s.field_size(), s.field_size()),
                  o.seed, r);
  });
}

int cmd_sample(const Options& o) {
  check_common(o);
  if (o.count == 0) throw UsageError("--count must be positive");
  const fs::path dir = output_dir(o);
  std::vector<std::pair<std::string, std::string>> extra;
  if (o.method == "dna" || o.method == "periodic") {
    const auto model = single_model(o);
    const double alpha = single_alpha(o);
    if (o.method == "dna") {
      DnaSampler s(SpectrumTable::build(model, {alpha, o.n, o.d}, PeriodConvention::Dna));
      sample_with(s, {s.shape(), alpha, o.n, o.d, s.spacing()}, o, dir);
    } else {
      PeriodicSampler s(SpectrumTable::build(model, {alpha, o.n, o.d}, PeriodConvention::Naive));
      sample_with(s, {s.shape(), alpha, s.m(), o.d, s.spacing()}, o, dir);
    }
    extra.emplace_back("stream_rule", "field k uses stream floor(k / fields_per_draw)");
  } else if (o.method == "ce") {
    const auto model = single_model(o);
    const std::size_t tau = padding_factor(single_alpha(o));
    CeSampler s(model, CeGrid{o.n, tau, o.d});
    sample_with(s, {s.shape(), static_cast<double>(tau), o.n, o.d, s.spacing()}, o, dir);
    extra.emplace_back("ce_fft_length", std::to_string(s.m()));
    extra.emplace_back("stream_rule", "field k uses stream floor(k / 2)");
  } else if (o.method == "spde-dna" || o.method == "spde-neumann") {
    check_spde(o);
    if (o.mesh.size() != 1) throw UsageError("sample takes a single --mesh");
    const std::size_t m = o.mesh.front();
    const double ext = single_alpha(o);
    auto s = o.method == "spde-dna" ? dna_fem_sampler(o.ell.front(), m, ext)
                                    : neumann_oversampled_sampler(o.ell.front(), m, ext);
    sample_with(s, {{s.side(), s.side()}, ext, m, 2, s.spacing()}, o, dir);
    extra.emplace_back("stream_rule", "field k uses stream k, mask b uses its substream b");
  } else {
    throw UsageError("unknown --method '" + o.method + "' (periodic, ce, dna, spde-dna, spde-neumann)");
  }
  write_manifest(dir, "sample", o, extra);
  std::cout << "wrote " << o.count << " realisation(s) to " << dir.string() << "\n";
  return 0;
}

// ---- cov-error ---------------------------------------------------------------

struct CovErrorRow {
  ModelSpec spec;
  CovErrorReport rep;
  double analytic = 0.0;
  std::optional<double> per_bound, trunc_bound;
};

ProbeSet probes_for(const CovarianceModel& model, std::size_t side, int dim, double spacing) {
  return dim == 1 ? probes_reference_row(model, side, spacing) : probes_diagonal(model, side, dim, spacing);
}

std::vector<std::vector<double>> probe_offsets(std::size_t side, int dim, double spacing) {
  std::vector<std::vector<double>> off;
  for (std::size_t k = 0; k < side; ++k) off.emplace_back(dim, static_cast<double>(k) * spacing);
  return off;
}

int cmd_cov_error(const Options& o) {
  check_common(o);
  if (o.count == 0) throw UsageError("--count must be positive");
  if (o.batches == 0) throw UsageError("--batches must be positive");
  const double alpha = single_alpha(o);
  const auto specs = sweep(o);
  const fs::path dir = output_dir(o);
  std::vector<CovErrorRow> rows;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    const auto& sp = specs[c];
    MonteCarloConfig mc{o.count, o.batches, o.seed + 1000003ull * c, o.threads};
    CovErrorRow row{sp, {}, 0.0, std::nullopt, std::nullopt};
    std::size_t side;
    double h;
    if (o.method == "dna") {
      DnaSampler s(SpectrumTable::build(sp.model, {alpha, o.n, o.d}, PeriodConvention::Dna));
      side = o.n + 1;
      h = s.spacing();
      row.rep = empirical_max_cov_error(s, probes_for(sp.model, side, o.d, h), mc);
    } else if (o.method == "periodic") {
      PeriodicSampler s(SpectrumTable::build(sp.model, {alpha, o.n, o.d}, PeriodConvention::Naive));
      side = s.m();
      h = s.spacing();
      row.rep = empirical_max_cov_error(s, probes_for(sp.model, side, o.d, h), mc);
    } else if (o.method == "ce") {
      CeSampler s(sp.model, CeGrid{o.n, padding_factor(alpha), o.d});
      side = o.n + 1;
      h = s.spacing();
      row.rep = empirical_max_cov_error(s, probes_for(sp.model, side, o.d, h), mc);
    } else {
      throw UsageError("cov-error supports --method dna, periodic or ce");
    }
    if (o.method == "dna") {
      std::size_t last = std::min(side, static_cast<std::size_t>(std::floor(1.0 / h + 1e-9)) + 1);
      row.analytic = analytic_max_cov_error(sp.model, alpha, o.n, o.d, probe_offsets(last, o.d, h));
    }
    if (o.bounds && sp.model.family == CovarianceFamily::Matern) {
      try {
        row.per_bound = periodisation_error_bound(sp.model.nu, sp.model.ell, alpha, o.d);
      } catch (const std::domain_error&) {
      }
      row.trunc_bound = truncation_error_bound(sp.model.nu, sp.model.ell, alpha, o.n, o.d);
    }
    std::cerr << sp.label << " ell=" << sp.model.ell << " max_error=" << row.rep.max_error
              << " batch_sd=" << row.rep.batch_sd << "\n";
    rows.push_back(std::move(row));
  }

  auto na = [](const std::optional<double>& v, std::ostream& os) {
    if (v)
      os << *v;
    else
      os << "NA";
  };
  {
    auto f = open_out(dir / "cov_error.csv");
    f << "method,model,nu,ell,alpha,n,d,realisations,batches,max_error,batch_sd,std_error,analytic_error";
    if (o.bounds) f << ",periodisation_bound,truncation_bound";
    f << "\n";
    for (const auto& r : rows) {
      f << o.method << ',' << family_name(r.spec.model.family) << ',' << r.spec.model.nu << ',' << r.spec.model.ell
        << ',' << alpha << ',' << o.n << ',' << o.d << ',' << r.rep.realisations << ',' << o.batches << ','
        << r.rep.max_error << ',' << r.rep.batch_sd << ',' << r.rep.std_error << ',';
      if (o.method == "dna")
        f << r.analytic;
      else
        f << "NA";
      if (o.bounds) {
        f << ',';
        na(r.per_bound, f);
        f << ',';
        na(r.trunc_bound, f);
      }
      f << "\n";
    }
  }
  {
    // wide layout: one row per ell, value and batch_sd per model column
    std::vector<std::string> labels;
    std::map<double, std::map<std::string, const CovErrorRow*>> grid;
    for (const auto& r : rows) {
      if (std::find(labels.begin(), labels.end(), r.spec.label) == labels.end()) labels.push_back(r.spec.label);
      grid[r.spec.model.ell][r.spec.label] = &r;
    }
    auto f = open_out(dir / "table1.csv");
    f << "ell";
    for (const auto& l : labels) f << ',' << l << ',' << l << "_batch_sd";
    f << "\n";
    for (const auto& [ell, cols] : grid) {
      f << ell;
      for (const auto& l : labels) {
        auto it = cols.find(l);
        if (it == cols.end())
          f << ",NA,NA";
        else
          f << ',' << it->second->rep.max_error << ',' << it->second->rep.batch_sd;
      }
      f << "\n";
    }
  }
  write_manifest(dir, "cov-error", o, {{"files", "cov_error.csv table1.csv"}});
  return 0;
}

// ---- min-embed -------------------------------------------------------------

int cmd_min_embed(const Options& o) {
  check_common(o);
  if (o.max_factor < 1) throw UsageError("--max-factor must be >= 1");
  const auto specs = sweep(o);
  const fs::path dir = output_dir(o);
  auto f = open_out(dir / "min_embed.csv");
  f << "model,nu,ell,n,d,max_factor,tau\n";
  for (const auto& sp : specs) {
    const auto tau = minimal_embedding(sp.model, o.n, o.max_factor, o.d);
    f << family_name(sp.model.family) << ',' << sp.model.nu << ',' << sp.model.ell << ',' << o.n << ',' << o.d << ','
      << o.max_factor << ',';
    if (tau)
      f << *tau;
    else
      f << "NotFound";
    f << "\n";
    std::cerr << sp.label << " ell=" << sp.model.ell << " tau=" << (tau ? std::to_string(*tau) : "NotFound") << "\n";
  }
  write_manifest(dir, "min-embed", o, {{"files", "min_embed.csv"}});
  return 0;
}

// ---- spde-compare ------------------------------------------------------------

void write_heatmaps(const fs::path& dir, const Options& o, std::size_t m, double ext) {
  const double ell = o.ell.front();
  const MonteCarloConfig mc{o.profile_count, o.batches, o.seed ^ 0x9e37ull, o.threads};
  std::vector<std::pair<std::string, VarianceProfile>> profiles;
  const StructuredMesh mesh = extended_mesh(m, ext);
  for (unsigned b = 0; b < 4; ++b) {
    const auto mask = BoundaryMask::from_index(b, 2);
    SpdeSampler s(mesh, ell, {mask}, TargetWindow{0, m});
    profiles.emplace_back("mask_b" + std::to_string(mask.bits[0]) + std::to_string(mask.bits[1]),
                          marginal_variance_profile(s, mc));
  }
  profiles.emplace_back("dna", marginal_variance_profile(dna_fem_sampler(ell, m, ext), mc));
  double hi = 0.0;
  for (const auto& [name, p] : profiles) hi = std::max(hi, *std::max_element(p.variance.begin(), p.variance.end()));
  const std::size_t side = m + 1;
  for (const auto& [name, p] : profiles) {
    auto os = open_out(dir / ("variance_" + name + ".pgm"), true);
    io::write_pgm(os, p.variance, side, side, 0.0, hi);
  }
  auto f = open_out(dir / "variance_profiles.csv");
  f << "x,y";
  for (const auto& [name, p] : profiles) f << ',' << name;
  f << "\n";
  const double h = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < side * side; ++i) {
    f << static_cast<double>(i % side) * h << ',' << static_cast<double>(i / side) * h;
    for (const auto& [name, p] : profiles) f << ',' << p.variance[i];
    f << "\n";
  }
}

int cmd_spde_compare(const Options& o) {
  check_spde(o);
  if (o.count == 0) throw UsageError("--count must be positive");
  if (o.ell.size() != 1) throw UsageError("spde-compare takes a single --ell");
  const double ell = o.ell.front();
  const auto model = CovarianceModel::matern(1.0, ell);
  const fs::path dir = output_dir(o);
  auto f = open_out(dir / "spde_compare.csv");
  f << "method,nu,ell,extension,h,realisations,batches,max_error,batch_sd,std_error\n";
  std::uint64_t run = 0;
  for (double ext : o.alpha)
    for (std::size_t m : o.mesh) {
      const ProbeSet probes = probes_diagonal(model, m + 1, 2, 1.0 / static_cast<double>(m));
      for (const std::string method : {"spde-dna", "spde-neumann"}) {
        auto s = method == "spde-dna" ? dna_fem_sampler(ell, m, ext) : neumann_oversampled_sampler(ell, m, ext);
        const auto rep = empirical_max_cov_error(s, probes, {o.count, o.batches, o.seed + 1000003ull * run++, o.threads});
        f << method << ",1," << ell << ',' << ext << ',' << 1.0 / static_cast<double>(m) << ',' << rep.realisations
          << ',' << o.batches << ',' << rep.max_error << ',' << rep.batch_sd << ',' << rep.std_error << "\n";
        std::cerr << method << " ext=" << ext << " m=" << m << " max_error=" << rep.max_error << "\n";
      }
    }
  if (o.profile_count > 0) write_heatmaps(dir, o, o.mesh.front(), o.alpha.front());
  write_manifest(dir, "spde-compare", o, {{"files", "spde_compare.csv variance_*.pgm variance_profiles.csv"}});
  return 0;
}

// ---- argument wiring -------------------------------------------------------

// key=value lines; '#' starts a comment. Values fill options not given on the
// command line; unknown keys are rejected.
void apply_config(CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto p = line.find('#'); p != std::string::npos) line.erase(p);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "config") throw UsageError("config files cannot include other config files");
    CLI::Option* opt = nullptr;
    try {
      opt = sub->get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "' for " + sub->get_name());
    }
    if (opt->count() > 0) continue;  // command line wins
    std::vector<std::string> tokens;
    for (char& ch : value)
      if (ch == ',') ch = ' ';
    std::istringstream ss(value);
    for (std::string t; ss >> t;) tokens.push_back(t);
    if (tokens.empty()) throw UsageError(path + ":" + std::to_string(lineno) + ": empty value for '" + key + "'");
    opt->add_result(tokens);
    opt->run_callback();
  }
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--model", o.model, "covariance family: matern, gaussian, cauchy (list allowed)");
  sub->add_option("--nu", o.nu, "Matern smoothness (list allowed)");
  sub->add_option("--ell", o.ell, "correlation length (list allowed)");
  sub->add_option("--alpha", o.alpha, "domain scaling alpha; padding factor for ce; extension for spde");
  sub->add_option("--n", o.n, "truncation / grid intervals per axis");
  sub->add_option("--d", o.d, "dimension (1-3)");
  sub->add_option("--count", o.count, "number of realisations");
  sub->add_option("--seed", o.seed, "base random seed");
  sub->add_option("--threads", o.threads, "worker threads (results do not depend on it)");
  sub->add_option("--out", o.out, "output directory (default $GRF_OUT_DIR or .)");
  sub->add_option("--batches", o.batches, "Monte-Carlo batches");
  sub->add_flag("--bounds", o.bounds, "append analytic bound columns");
  sub->add_option("--mesh", o.mesh, "FE cells per unit length (list allowed)");
  sub->add_option("--extension", o.alpha, "alias of --alpha for SPDE domain extension");
  sub->add_option("--method", o.method, "periodic, ce, dna, spde-dna, spde-neumann");
  sub->add_option("--max-factor", o.max_factor, "largest padding factor for min-embed");
  sub->add_option("--profile-count", o.profile_count, "realisations per variance heatmap (spde-compare)");
  sub->add_option("--config", o.config, "key=value file; command-line flags take precedence");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Gaussian random field sampling and covariance-error studies");
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Options o;
  auto* sample = app.add_subcommand("sample", "write field realisations and a manifest");
  auto* cov = app.add_subcommand("cov-error", "Monte-Carlo maximal covariance error sweep");
  auto* embed = app.add_subcommand("min-embed", "minimal circulant-embedding padding search");
  auto* spde = app.add_subcommand("spde-compare", "FE DNA versus Neumann oversampling");
  for (auto* s : {sample, cov, embed, spde}) add_common(s, o);

  // command-specific defaults, applied before parsing so flags override them
  const std::vector<std::string> argv_copy(argv + 1, argv + argc);
  auto has = [&](const char* name) { return !argv_copy.empty() && argv_copy.front() == name; };
  if (has("cov-error")) {
    o.model = {"matern", "gaussian", "cauchy"};
    o.nu = {0.5, 2.0, 8.0};
    o.ell = {0.025, 0.05, 0.1, 0.2};
    o.n = 1500;
    o.count = 100000;
  } else if (has("min-embed")) {
    o.ell = {0.025, 0.05, 0.1, 0.2};
    o.n = 1500;
  } else if (has("spde-compare")) {
    o.method = "spde";
    o.d = 2;
    o.nu = {1.0};
    o.ell = {0.25};
    o.alpha = {1.0, 2.0};
    o.mesh = {16, 32};
    o.count = 50000;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!o.config.empty()) apply_config(sub, o.config);
    if (sub == sample) return cmd_sample(o);
    if (sub == cov) return cmd_cov_error(o);
    if (sub == embed) return cmd_min_embed(o);
    return cmd_spde_compare(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const UnsupportedConfiguration& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const NegativeSpectrum& e) {
    std::cerr << "numerical infeasibility: " << e.what() << " (see `grf min-embed`)\n";
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "numerical infeasibility: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "numerical infeasibility: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
