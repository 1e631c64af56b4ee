#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "app.hpp"
#include "oracles.hpp"

namespace sisvive::cli {
namespace {

namespace fs = std::filesystem;
namespace t = sisvive::testing;
using Json = nlohmann::json;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Result r;
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("sisvive_cli_" + std::to_string(::getpid()) + "_" +
                                         std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Synthetic study: ten instruments, the one named "rs6265" has a strong
// direct effect on the outcome; the others are valid.
void write_study(const std::string& path, std::uint64_t seed, Eigen::Index n = 2000) {
  t::Rng rng(seed);
  const Eigen::Index l = 10;
  const Eigen::MatrixXd z = t::gaussian(rng, n, l);
  const Eigen::VectorXd eps = t::gaussian_vector(rng, n);
  const Eigen::VectorXd xi = 0.8 * eps + 0.6 * t::gaussian_vector(rng, n);
  const Eigen::VectorXd age = t::gaussian_vector(rng, n);
  const Eigen::VectorXd d = z * Eigen::VectorXd::Constant(l, 0.3) + xi + 0.5 * age;
  const Eigen::VectorXd y = z.col(5) + 0.5 * d + eps - 0.2 * age;
  std::ofstream out(path);
  out.precision(17);
  out << "bmi,outcome";
  for (Eigen::Index j = 0; j < l; ++j) out << ',' << (j == 5 ? std::string("rs6265") : "snp" + std::to_string(j));
  out << ",age\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    out << d(i) << ',' << y(i);
    for (Eigen::Index j = 0; j < l; ++j) out << ',' << z(i, j);
    out << ',' << age(i) << '\n';
  }
}

std::vector<std::string> estimate_args(const std::string& csv) {
  return {"estimate",  "--data",        csv,
          "--outcome", "outcome",       "--exposure",
          "bmi",       "--instruments", "snp0,snp1,snp2,snp3,snp4,rs6265,snp6,snp7,snp8,snp9",
          "--covariates", "age"};
}

TEST(CliEstimate, ContractAndDeterminism) {
  TempDir dir;
  const auto csv = dir.file("study.csv");
  write_study(csv, 1);
  auto args = estimate_args(csv);
  args.insert(args.end(), {"--seed", "7"});
  const auto a = run_cli(args);
  ASSERT_EQ(a.code, 0) << a.err;
  const Json j = Json::parse(a.out);
  const auto names = j["instruments"].get<std::vector<std::string>>();
  for (const auto& name : j["invalid_instruments"]) {
    EXPECT_NE(std::find(names.begin(), names.end(), name.get<std::string>()), names.end());
  }
  EXPECT_TRUE(j["beta_hat"].is_number());
  EXPECT_EQ(j["lambda_source"], "cross_validation");
  EXPECT_EQ(j["cv"]["lambda_grid"].size(), 100u);
  EXPECT_TRUE(j["diagnostics"]["sargan"]["p_value"].is_number());
  EXPECT_EQ(j["manifest"]["subcommand"], "estimate");
  EXPECT_EQ(j["manifest"]["seed"], 7);
  EXPECT_TRUE(j["manifest"]["input_digest"].is_string());
  EXPECT_EQ(run_cli(args).out, a.out);
}

TEST(CliEstimate, FixedLambdaAndOutputFile) {
  TempDir dir;
  const auto csv = dir.file("study.csv");
  write_study(csv, 2, 300);
  auto args = estimate_args(csv);
  args.insert(args.end(), {"--lambda", "0", "--out", dir.file("report.json")});
  const auto r = run_cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(read_file(dir.file("report.json")));
  EXPECT_EQ(j["lambda_source"], "fixed");
  EXPECT_TRUE(j["cv"].is_null());
  // at lambda = 0 the estimate is the all-instrument TSLS estimate
  EXPECT_NEAR(j["beta_hat"].get<double>(), j["diagnostics"]["tsls_beta"].get<double>(), 1e-8);
}

TEST(CliEstimate, ExitCodes) {
  TempDir dir;
  const auto csv = dir.file("study.csv");
  write_study(csv, 3, 100);

  auto both = estimate_args(csv);
  both.insert(both.end(), {"--lambda", "1", "--cv-folds", "5"});
  const auto usage = run_cli(both);
  EXPECT_EQ(usage.code, kUsage);
  EXPECT_FALSE(usage.err.empty());
  EXPECT_EQ(usage.err.find('\n'), usage.err.size() - 1);

  EXPECT_EQ(run_cli({"estimate"}).code, kUsage);
  EXPECT_EQ(run_cli({"frobnicate"}).code, kUsage);

  const auto missing = run_cli(estimate_args(dir.file("nope.csv")));
  EXPECT_EQ(missing.code, kDataError);
  EXPECT_NE(missing.err.find("missing_file"), std::string::npos);

  auto unknown = estimate_args(csv);
  unknown[8] = "snp0,zzz";
  EXPECT_EQ(run_cli(unknown).code, kDataError);

  auto neg = estimate_args(csv);
  neg.insert(neg.end(), {"--lambda", "-1"});
  EXPECT_EQ(run_cli(neg).code, kUsage);

  auto folds = estimate_args(csv);
  folds.insert(folds.end(), {"--cv-folds", "20"});
  const auto small = run_cli(folds);
  EXPECT_EQ(small.code, kDataError) << small.err;
  EXPECT_NE(small.err.find("fewer folds"), std::string::npos);
}

// An instrument with a strong direct effect is flagged in nearly every
// regeneration of the synthetic study.
TEST(CliEstimate, FlagsPleiotropicInstrument) {
  TempDir dir;
  int flagged = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto csv = dir.file("study.csv");
    write_study(csv, 100 + seed);
    auto args = estimate_args(csv);
    args.insert(args.end(), {"--seed", std::to_string(seed)});
    const auto r = run_cli(args);
    ASSERT_EQ(r.code, 0) << r.err;
    const Json j = Json::parse(r.out);
    for (const auto& name : j["invalid_instruments"]) flagged += name == "rs6265";
  }
  EXPECT_GE(flagged, 45);
}

TEST(CliIdentify, Vectors) {
  const auto a = run_cli({"identify", "--gamma", "1,2,3,4", "--big-gamma", "1,2,6,8", "--max-invalid", "3"});
  ASSERT_EQ(a.code, 0) << a.err;
  const Json ja = Json::parse(a.out);
  EXPECT_FALSE(ja["identified"].get<bool>());
  EXPECT_EQ(ja["beta_candidates"], Json::parse("[1.0, 2.0]"));

  const auto b = run_cli({"identify", "--gamma", "1,2,3,4", "--big-gamma", "1,2,3,8", "--max-invalid", "3"});
  const Json jb = Json::parse(b.out);
  EXPECT_TRUE(jb["identified"].get<bool>());
  EXPECT_EQ(jb["beta_candidates"], Json::parse("[1.0]"));
  EXPECT_EQ(jb["sets"].size(), 3u);

  t::Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    std::string g, bg;
    for (int j = 0; j < 4; ++j) {
      g += (j ? "," : "") + std::to_string(t::uniform_real(rng, 0.5, 2.0));
      bg += (j ? "," : "") + std::to_string(t::uniform_real(rng, -3.0, 3.0));
    }
    const auto r = run_cli({"identify", "--gamma", g, "--big-gamma", bg, "--max-invalid", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(Json::parse(r.out)["identified"].get<bool>());
  }
}

TEST(CliIdentify, Errors) {
  EXPECT_EQ(run_cli({"identify", "--gamma", "1,2", "--big-gamma", "1,2"}).code, kUsage);
  EXPECT_EQ(run_cli({"identify", "--gamma", "1,0", "--big-gamma", "1,2", "--max-invalid", "1"}).code,
            kDataError);
  EXPECT_EQ(run_cli({"identify", "--gamma", "1,2", "--big-gamma", "1", "--max-invalid", "1"}).code,
            kUsage);
}

TEST(CliIdentify, FromData) {
  TempDir dir;
  const auto csv = dir.file("study.csv");
  write_study(csv, 4, 500);
  auto args = estimate_args(csv);
  args[0] = "identify";
  args.insert(args.end(), {"--max-invalid", "5", "--tol", "0.05"});
  const auto r = run_cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["reduced_form"]["source"], "estimated");
  EXPECT_TRUE(j["identified"].is_boolean());
}

TEST(CliDiagnose, Report) {
  TempDir dir;
  const auto csv = dir.file("study.csv");
  write_study(csv, 5, 400);
  auto args = estimate_args(csv);
  args[0] = "diagnose";
  args.insert(args.end(), {"--rip-order", "2"});
  const auto r = run_cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_GE(j["mip"]["mu"].get<double>(), 0.0);
  EXPECT_GT(j["strength"]["first_stage_f"].get<double>(), 10.0);
  EXPECT_EQ(j["sargan"]["df"], 9);
  EXPECT_EQ(j["rip"].size(), 2u);
  EXPECT_EQ(j["beta_source"], "tsls_naive");
}

TEST(CliSimulate, TinyGridIsDeterministic) {
  TempDir dir;
  const std::vector<std::string> base{"simulate", "--n",     "200",  "--sweep", "endogeneity",
                                      "--values", "0.2,0.6", "--reps", "5",     "--seed",
                                      "11"};
  auto first = base;
  first.insert(first.end(), {"--out", dir.file("a")});
  auto second = base;
  second.insert(second.end(), {"--out", dir.file("b")});
  ASSERT_EQ(run_cli(first).code, 0);
  ASSERT_EQ(run_cli(second).code, 0);
  const std::string csv = read_file(dir.file("a/summary.csv"));
  EXPECT_EQ(csv, read_file(dir.file("b/summary.csv")));
  EXPECT_EQ(read_file(dir.file("a/manifest.json")), read_file(dir.file("b/manifest.json")));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 12);

  const Json m = Json::parse(read_file(dir.file("a/manifest.json")));
  EXPECT_EQ(m["subcommand"], "simulate");
  EXPECT_EQ(m["seed"], 11);
  EXPECT_EQ(m["outputs"][0]["rows"], 24);
  EXPECT_FALSE(m.contains("timing"));

  const auto to_stdout = run_cli(base);
  EXPECT_EQ(to_stdout.out, csv);
}

TEST(CliSimulate, PresetsLoad) {
  const std::vector<std::pair<std::string, std::string>> presets{
      {"fig2.json", "0.5"}, {"fig3.json", "3"}, {"supp_table7.json", "3"}};
  for (const auto& [name, value] : presets) {
    const std::string path = std::string(SISVIVE_PRESET_DIR) + "/" + name;
    // shrink the run; every other setting comes from the preset
    const auto r = run_cli({"simulate", "--config", path, "--n", "150", "--reps", "1", "--values", value});
    EXPECT_EQ(r.code, 0) << name << ": " << r.err;
  }
}

TEST(CliSimulate, ConfigErrors) {
  TempDir dir;
  std::ofstream(dir.file("bad.json")) << R"({"base": {"n": 100, "bogus": 1}, "reps": 1})";
  EXPECT_EQ(run_cli({"simulate", "--config", dir.file("bad.json")}).code, kUsage);
  std::ofstream(dir.file("broken.json")) << "{";
  EXPECT_EQ(run_cli({"simulate", "--config", dir.file("broken.json")}).code, kDataError);
  EXPECT_EQ(run_cli({"simulate", "--n", "100"}).code, kUsage);
  EXPECT_EQ(run_cli({"simulate", "--s", "0", "--relative", "stronger_invalid", "--reps", "1"}).code, kUsage);
}

}  // namespace
}  // namespace sisvive::cli
