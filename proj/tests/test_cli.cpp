#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "makbasin/makbasin.hpp"

namespace fs = std::filesystem;
using namespace makbasin;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Outcome {
  int exit = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("makbasin_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Writes a config next to its output directory; `patch` is merged over the
  // shipped defaults.
  fs::path config(const io::Json& patch = io::Json::object(), const std::string& name = "cfg.json") {
    auto j = io::read_json(fs::path(MAKBASIN_SOURCE_DIR) / "configs" / "default.json");
    j.merge_patch(patch);
    j["output"] = "out";
    const auto p = dir_ / name;
    io::write_text(p, j.dump(2));
    return p;
  }

  Outcome run(const std::string& args) {
    Outcome r;
    const auto o = dir_ / "stdout.txt", e = dir_ / "stderr.txt";
    const std::string cmd = std::string("\"") + MAKBASIN_CLI + "\" " + args + " >\"" + o.string() + "\" 2>\"" +
                            e.string() + "\"";
    const int status = std::system(cmd.c_str());
    r.exit = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(o);
    r.err = slurp(e);
    return r;
  }

  fs::path out() const { return dir_ / "out"; }
  fs::path dir_;
};

int data_rows(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  int n = -1;  // header
  while (std::getline(in, line)) {
    if (!line.empty()) ++n;
  }
  return n;
}

}  // namespace

TEST_F(Cli, SimulateDefaults) {
  const auto cfg = config();
  const auto r = run("simulate --config " + cfg.string());
  ASSERT_EQ(r.exit, 0) << r.err;
  EXPECT_EQ(data_rows(out() / "snapshots.csv"), 2000);
  EXPECT_TRUE(fs::exists(io::meta_path(out() / "snapshots.csv")));
  EXPECT_TRUE(fs::exists(out() / "config.json"));
  EXPECT_NE(r.out.find("pairs: 2000"), std::string::npos);
}

TEST_F(Cli, SimulateSinglePair) {
  const auto cfg = config({{"simulation", {{"n_runs", 1}, {"points_per_run", 2}}}});
  const auto r = run("simulate --config " + cfg.string());
  ASSERT_EQ(r.exit, 0) << r.err;
  EXPECT_EQ(data_rows(out() / "snapshots.csv"), 1);
}

TEST_F(Cli, MisalignedStepIsUsageError) {
  const auto cfg = config({{"simulation", {{"dt", 0.1}, {"step", 0.015625}}}});
  const auto r = run("simulate --config " + cfg.string());
  EXPECT_EQ(r.exit, 2);
  EXPECT_NE(r.err.find(to_string(ErrorCode::kStepMisalignment)), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(out() / "snapshots.csv"));
}

TEST_F(Cli, UnknownConfigKeyIsUsageError) {
  const auto cfg = config({{"simulation", {{"n_run", 5}}}});
  const auto r = run("simulate --config " + cfg.string());
  EXPECT_EQ(r.exit, 2);
  EXPECT_NE(r.err.find("n_run"), std::string::npos) << r.err;
}

TEST_F(Cli, MissingConfigIsUsageError) {
  const auto r = run("simulate --config " + (dir_ / "nope.json").string());
  EXPECT_EQ(r.exit, 2);
  EXPECT_NE(r.err.find("\"exit\":2"), std::string::npos) << r.err;
}

TEST_F(Cli, TruncatedSnapshotsAreDataError) {
  const auto cfg = config({{"simulation", {{"n_runs", 2}, {"points_per_run", 3}}}});
  ASSERT_EQ(run("simulate --config " + cfg.string()).exit, 0);
  auto text = slurp(out() / "snapshots.csv");
  text.resize(text.size() - 12);  // cut the last row mid-field
  io::write_text(out() / "snapshots.csv", text);
  const auto r = run("fit --config " + cfg.string());
  EXPECT_EQ(r.exit, 3);
  EXPECT_NE(r.err.find(":5:"), std::string::npos) << r.err;
}

TEST_F(Cli, FitReportsDictionarySize) {
  const auto cfg = config();
  ASSERT_EQ(run("simulate --config " + cfg.string()).exit, 0);
  const auto r = run("fit --config " + cfg.string());
  ASSERT_EQ(r.exit, 0) << r.err;
  EXPECT_NE(r.out.find("N_k: 25"), std::string::npos) << r.out;
  const auto model = io::read_model(out() / "model.json");
  EXPECT_EQ(model.size(), 25);
}

TEST_F(Cli, IdentitySnapshotsGiveUnitEigenvalues) {
  SnapshotSet s;
  const auto pts = sample_simplex(300, 3);
  s.x.resize(2, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) {
    s.x.col(static_cast<Eigen::Index>(k)) = pts[k];
    s.run_id.push_back(static_cast<int>(k));
    s.pair_index.push_back(0);
  }
  s.y = s.x;
  s.dt = 0.125;
  const auto csv = dir_ / "identity.csv";
  io::write_snapshots(csv, s);
  const auto cfg = config();
  const auto r = run("fit --config " + cfg.string() + " --snapshots " + csv.string());
  ASSERT_EQ(r.exit, 0) << r.err;
  const auto model = io::read_model(out() / "model.json");
  for (Eigen::Index k = 0; k < model.size(); ++k) EXPECT_NEAR(std::abs(model.eigenvalues(k) - 1.0), 0.0, 1e-8);
}

TEST_F(Cli, BasinWithoutSaddleIsInapplicable) {
  const auto base = config({{"simulation", {{"n_runs", 20}}}});
  ASSERT_EQ(run("simulate --config " + base.string()).exit, 0);
  ASSERT_EQ(run("fit --config " + base.string()).exit, 0);
  const auto cfg = config({{"network", {{"replicator", {{"g", 3.0}}}}}}, "g3.json");
  const auto r = run("basin --config " + cfg.string());
  EXPECT_EQ(r.exit, 4);
  EXPECT_NE(r.err.find(to_string(ErrorCode::kNoSaddle)), std::string::npos) << r.err;
}

TEST_F(Cli, ReportNeedsArtifacts) {
  const auto cfg = config();
  const auto r = run("report --config " + cfg.string());
  EXPECT_EQ(r.exit, 2);
  EXPECT_NE(r.err.find("model.json"), std::string::npos) << r.err;
}

TEST_F(Cli, BifurcationRange) {
  const auto cfg = config();
  auto r = run("bifurcation --config " + cfg.string() + " --g-min 0.5 --g-max 0.1");
  EXPECT_EQ(r.exit, 2);
  r = run("bifurcation --config " + cfg.string() + " --steps 1");
  EXPECT_EQ(r.exit, 2);
  r = run("bifurcation --config " + cfg.string());
  ASSERT_EQ(r.exit, 0) << r.err;
  EXPECT_NE(r.out.find("hopf crossing"), std::string::npos);
  EXPECT_TRUE(fs::exists(out() / "bifurcation.csv"));
  EXPECT_TRUE(fs::exists(out() / "bifurcation.json"));
}

TEST_F(Cli, BadFlagIsUsageError) {
  EXPECT_EQ(run("simulate").exit, 2);
  EXPECT_EQ(run("frobnicate --config x").exit, 2);
}

// Full pipeline twice in separate directories; every artifact must match byte for byte.
TEST_F(Cli, PipelineIsDeterministicAndReported) {
  const auto cfg = config();
  for (const char* dest : {"a", "b"}) {
    const std::string tail = " --config " + cfg.string() + " --out " + (dir_ / dest).string();
    for (const char* step : {"simulate", "fit", "basin", "report"}) {
      const auto r = run(std::string(step) + tail);
      ASSERT_EQ(r.exit, 0) << step << ": " << r.err;
    }
  }
  int compared = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "a")) {
    const auto name = e.path().filename();
    ASSERT_TRUE(fs::exists(dir_ / "b" / name)) << name;
    if (name == "config.json") continue;  // echoes the output path
    EXPECT_EQ(slurp(e.path()), slurp(dir_ / "b" / name)) << name;
    ++compared;
  }
  EXPECT_GE(compared, 8);
  const auto report = slurp(dir_ / "a" / "report.txt");
  for (const char* section : {"== Parameters", "== Equilibria", "== Eigenvalues", "== Basin", "== Theorem check", "== Files"}) {
    EXPECT_NE(report.find(section), std::string::npos) << section;
  }
  for (const char* f : {"boundary.csv", "eigenfunction_grid.csv", "classified_ics.csv", "basin_report.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "a" / f)) << f;
  }
}
