#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "driver.hpp"
#include "rmfem/io.hpp"

namespace fs = std::filesystem;
using namespace rmfem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "rmfem");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  testing::internal::CaptureStdout();
  testing::internal::CaptureStderr();
  const int rc = cli::main(static_cast<int>(argv.size()), argv.data());
  testing::internal::GetCapturedStdout();
  testing::internal::GetCapturedStderr();
  return rc;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "rmfem_test_cli" / name;
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::vector<std::string> kQuickAdapt = {"--gamma", "0.05", "--nmc", "8", "--max-iterations", "4"};

}  // namespace

TEST(Cli, ListsExperiments) {
  EXPECT_EQ(run({"list"}), cli::kExitOk);
  const auto& names = cli::experiment_names();
  for (const char* n : {"adapt1d", "adapt2d-arctan", "adapt2d-lshape", "bip1d-smooth", "bip1d-discontinuous", "bip2d", "convergence"})
    EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
}

TEST(Cli, UsageErrors) {
  const auto out = fresh_dir("usage").string();
  EXPECT_EQ(run({"run", "nonsense", "--out", out}), cli::kExitUsage);
  EXPECT_EQ(run({"run", "adapt1d", "--p", "-1", "--out", out}), cli::kExitUsage);
  EXPECT_EQ(run({"run", "adapt1d", "--gamma", "abc", "--out", out}), cli::kExitUsage);
  EXPECT_EQ(run({"run", "adapt1d", "--chains", "3", "--out", out}), cli::kExitUsage);
  EXPECT_EQ(run({"run", "bip1d-smooth", "--gamma", "0.1", "--out", out}), cli::kExitUsage);
  EXPECT_EQ(run({"run", "bip1d-smooth", "--n-obs", "5", "--out", out}), cli::kExitUsage);
  EXPECT_EQ(run({"run", "adapt1d", "--estimator", "foo", "--out", out}), cli::kExitUsage);
  EXPECT_EQ(run({"run"}), cli::kExitUsage);
  EXPECT_FALSE(fs::exists(fs::path(out) / "manifest.json"));
}

TEST(Cli, RuntimeErrorExitCode) {
  const fs::path blocker = fresh_dir("blocker");
  fs::create_directories(blocker.parent_path());
  std::ofstream(blocker) << "x";
  auto args = kQuickAdapt;
  args.insert(args.begin(), {"run", "adapt1d", "--out", (blocker / "sub").string()});
  EXPECT_EQ(run(args), cli::kExitRuntime);
}

TEST(Cli, AdaptOutputsAreReproducible) {
  const auto a = fresh_dir("adapt_a"), b = fresh_dir("adapt_b"), c = fresh_dir("adapt_c");
  auto base = kQuickAdapt;
  base.insert(base.begin(), {"run", "adapt1d", "--seed", "3"});
  auto with = [&](const fs::path& out, const std::string& threads) {
    auto args = base;
    args.insert(args.end(), {"--out", out.string(), "--threads", threads});
    return run(args);
  };
  ASSERT_EQ(with(a, "1"), cli::kExitOk);
  ASSERT_EQ(with(b, "1"), cli::kExitOk);
  ASSERT_EQ(with(c, "3"), cli::kExitOk);
  for (const char* f : {"adapt.csv", "estimators.csv", "mesh_final.json"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(c / f)) << f;
  }
  const auto t = io::read_csv(a / "adapt.csv");
  EXPECT_EQ(t.columns.front(), "iteration");
  EXPECT_FALSE(t.rows.empty());
}

TEST(Cli, ManifestListsEveryFile) {
  const auto out = fresh_dir("manifest");
  ASSERT_EQ(run({"run", "bip1d-smooth", "--n", "10", "--steps", "300", "--det-steps", "300", "--chains", "2", "--out",
                 out.string()}),
            cli::kExitOk);
  const auto m = io::read_json(out / "manifest.json");
  EXPECT_EQ(m.at("experiment"), "bip1d-smooth");
  EXPECT_EQ(m.at("csv_schema"), io::kCsvSchema);
  EXPECT_EQ(m.at("seeds").at("master"), 0);
  std::set<std::string> listed;
  for (const auto& f : m.at("files")) {
    listed.insert(f.get<std::string>());
    EXPECT_TRUE(fs::exists(out / f.get<std::string>())) << f;
  }
  for (const auto& e : fs::directory_iterator(out))
    if (e.path().filename() != "manifest.json") EXPECT_TRUE(listed.count(e.path().filename().string())) << e.path();
  for (const char* f : {"chain_0.csv", "chain_1.csv", "chain_2.csv", "posterior.csv", "summary.json"})
    EXPECT_TRUE(listed.count(f)) << f;
  const auto post = io::read_csv(out / "posterior.csv");
  EXPECT_EQ(post.columns,
            (std::vector<std::string>{"vertex", "x", "y", "det_mean", "det_std", "prob_mean", "prob_std"}));
}

TEST(Cli, ConvergenceTable) {
  const auto out = fresh_dir("conv");
  ASSERT_EQ(run({"-e", "convergence", "--levels", "4,8,16", "--nmc", "5", "--out", out.string()}), cli::kExitOk);
  const auto t = io::read_csv(out / "convergence.csv");
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.columns[0], "n");
  EXPECT_EQ(t.rows[2][0], "16");
  const auto s = io::read_json(out / "summary.json");
  EXPECT_TRUE(s.contains("fem_slope"));
  EXPECT_TRUE(s.contains("randomization_slope"));
}
