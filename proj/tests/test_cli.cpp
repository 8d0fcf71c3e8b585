#include <dnagrf/field.hpp>
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + std::string(GRF_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("grf_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream f(p);
  std::string l;
  std::getline(f, l);
  return l;
}

}  // namespace

TEST(Cli, SampleIsDeterministicAcrossThreadCounts) {
  const auto a = fresh_dir("sample_a"), b = fresh_dir("sample_b");
  const std::string common = "sample --method dna --nu 1 --ell 0.2 --n 32 --d 2 --count 6 --seed 9";
  ASSERT_EQ(run(common + " --threads 1 --out " + a.string()), 0);
  ASSERT_EQ(run(common + " --threads 3 --out " + b.string()), 0);
  for (int k = 0; k < 6; ++k) {
    const std::string name = "field_00000" + std::to_string(k) + ".bin";
    ASSERT_TRUE(fs::exists(a / name));
    EXPECT_EQ(slurp(a / name), slurp(b / name));
  }
  std::ifstream in(a / "field_000002.bin", std::ios::binary);
  const auto f = dnagrf::FieldRealisation::read_binary(in);
  EXPECT_EQ(f.values.shape(), (std::vector<std::size_t>{33, 33}));
  EXPECT_EQ(f.seed, 9u);
  EXPECT_EQ(f.stream, 2u);
  const std::string manifest = slurp(a / "manifest.txt");
  EXPECT_NE(manifest.find("command: sample"), std::string::npos);
  EXPECT_NE(manifest.find("seed: 9"), std::string::npos);
}

TEST(Cli, SampleOneDimensionalWritesCsv) {
  const auto dir = fresh_dir("sample_1d");
  for (const std::string m : {"dna", "periodic", "ce"}) {
    fs::remove_all(dir / m);
    ASSERT_EQ(run("sample --method " + m + " --nu 0.5 --ell 0.05 --n 16 --count 2 --out " + (dir / m).string()), 0) << m;
    EXPECT_EQ(first_line(dir / m / "field_000000.csv"), "x,value");
    EXPECT_TRUE(fs::exists(dir / m / "field_000001.bin"));
  }
}

TEST(Cli, SpdeSample) {
  const auto dir = fresh_dir("sample_spde");
  EXPECT_EQ(run("sample --method spde-dna --d 2 --nu 1 --ell 0.25 --mesh 8 --count 1 --out " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "field_000000.bin"));
  EXPECT_EQ(run("sample --method spde-neumann --d 2 --nu 1 --ell 0.25 --mesh 8 --alpha 2 --count 1 --out " +
                dir.string()),
            0);
}

TEST(Cli, ExitCodes) {
  const auto dir = fresh_dir("codes");
  EXPECT_EQ(run("sample --count 0 --out " + dir.string()), 1);
  EXPECT_EQ(run("sample --method bogus --out " + dir.string()), 1);
  EXPECT_EQ(run("sample --model gaussian --ell 0.1 --d 2 --out " + dir.string()), 1);
  EXPECT_EQ(run("sample --no-such-flag"), 1);
  EXPECT_EQ(run(""), 1);
  // Gaussian with no padding cannot be embedded
  EXPECT_EQ(run("sample --method ce --model gaussian --ell 0.2 --n 1500 --alpha 1 --out " + dir.string()), 2);
  EXPECT_EQ(run("spde-compare --nu 2 --count 40 --out " + dir.string()), 1);
  EXPECT_EQ(run("cov-error --model matern --nu 1 --ell 0.2 --n 16 --count 41 --batches 40 --out " + dir.string()), 1);
}

TEST(Cli, CovErrorColumnsAndBounds) {
  const auto dir = fresh_dir("coverr");
  ASSERT_EQ(run("cov-error --model matern --nu 1 --ell 0.1 0.2 --n 32 --alpha 2 --count 400 --batches 40 --bounds --out " +
                dir.string()),
            0);
  EXPECT_EQ(first_line(dir / "cov_error.csv"),
            "method,model,nu,ell,alpha,n,d,realisations,batches,max_error,batch_sd,std_error,analytic_error,"
            "periodisation_bound,truncation_bound");
  std::ifstream f(dir / "cov_error.csv");
  std::string line;
  int rows = 0;
  std::getline(f, line);
  while (std::getline(f, line)) ++rows;
  EXPECT_EQ(rows, 2);
  EXPECT_EQ(first_line(dir / "table1.csv"), "ell,matern_nu1,matern_nu1_batch_sd");
}

TEST(Cli, MinEmbed) {
  const auto dir = fresh_dir("minembed");
  ASSERT_EQ(run("min-embed --model matern gaussian --nu 8 --ell 0.2 --n 200 --max-factor 4 --out " + dir.string()), 0);
  const std::string csv = slurp(dir / "min_embed.csv");
  EXPECT_NE(csv.find("model,nu,ell,n,d,max_factor,tau"), std::string::npos);
  EXPECT_NE(csv.find("NotFound"), std::string::npos);
}

TEST(Cli, ConfigFilePrecedenceAndErrors) {
  const auto dir = fresh_dir("config");
  const fs::path cfg = dir / "run.cfg";
  {
    std::ofstream c(cfg);
    c << "# sample run\nmethod = dna\nn = 8\ncount = 3\nseed = 4\nout = " << (dir / "from_file").string() << "\n";
  }
  ASSERT_EQ(run("sample --config " + cfg.string() + " --count 1"), 0);
  EXPECT_TRUE(fs::exists(dir / "from_file" / "field_000000.csv"));
  EXPECT_FALSE(fs::exists(dir / "from_file" / "field_000001.csv"));
  const std::string manifest = slurp(dir / "from_file" / "manifest.txt");
  EXPECT_NE(manifest.find("n: 8"), std::string::npos);
  EXPECT_NE(manifest.find("seed: 4"), std::string::npos);

  {
    std::ofstream c(dir / "bad.cfg");
    c << "colour = blue\n";
  }
  EXPECT_EQ(run("sample --config " + (dir / "bad.cfg").string()), 1);
  EXPECT_EQ(run("sample --config " + (dir / "missing.cfg").string()), 1);
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  const auto dir = fresh_dir("env");
  ASSERT_EQ(run("sample --n 8 --count 1", "GRF_OUT_DIR=" + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "field_000000.bin"));
  EXPECT_TRUE(fs::exists(dir / "manifest.txt"));
}
