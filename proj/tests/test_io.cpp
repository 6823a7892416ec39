#include <charconv>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "makbasin/makbasin.hpp"

using namespace makbasin;
namespace fs = std::filesystem;

namespace {

double parse(const std::string& s) {
  double v = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

void expect_code(ErrorCode code, const std::function<void()>& f, const std::string& fragment = {}) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
    if (!fragment.empty()) EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("makbasin_io_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

const StoichiometricNetwork& reduced() {
  static const auto net = build_replicator_network(ReplicatorParams{}, ReplicatorForm::kReduced);
  return net;
}

}  // namespace

TEST(Format, SeventeenDigitsRoundTrip) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int k = 0; k < 1000; ++k) {
    const double v = u(gen) * std::pow(10.0, (k % 40) - 20);
    EXPECT_EQ(parse(io::format_double(v)), v);
  }
  EXPECT_EQ(parse(io::format_double(0.1)), 0.1);
  EXPECT_EQ(parse(io::format_double(-0.0)), 0.0);
  EXPECT_EQ(parse(io::format_double(std::numeric_limits<double>::denorm_min())),
            std::numeric_limits<double>::denorm_min());
}

using Snapshots = TempDir;

TEST_F(Snapshots, BitExactRoundTrip) {
  const auto set = generate_snapshots(reduced(), 7, 5, 0.125, IntegratorConfig{}, 9);
  const auto path = dir_ / "s.csv";
  io::write_snapshots(path, set);
  ASSERT_TRUE(fs::exists(io::meta_path(path)));
  const auto back = io::read_snapshots(path);
  EXPECT_EQ(back.x, set.x);
  EXPECT_EQ(back.y, set.y);
  EXPECT_EQ(back.run_id, set.run_id);
  EXPECT_EQ(back.pair_index, set.pair_index);
  EXPECT_EQ(back.dt, 0.125);
  EXPECT_EQ(back.meta.seed, 9u);
  EXPECT_EQ(back.meta.n_runs, 7);
  EXPECT_EQ(back.meta.step, 0.015625);
}

TEST_F(Snapshots, HeaderLayout) {
  const auto set = generate_snapshots(reduced(), 1, 2, 0.125, IntegratorConfig{}, 1);
  const auto csv = io::snapshots_csv(set);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x1,x2,y1,y2,run_id,pair_index");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST_F(Snapshots, TruncatedFinalLineNamesTheLine) {
  const auto set = generate_snapshots(reduced(), 2, 3, 0.125, IntegratorConfig{}, 1);
  const auto path = dir_ / "s.csv";
  io::write_snapshots(path, set);
  auto text = io::read_text(path);
  text.resize(text.size() - 5);  // cut into the last row
  io::write_text(path, text);
  expect_code(ErrorCode::kParse, [&] { io::read_snapshots(path); }, ":5:");
}

TEST_F(Snapshots, MalformedRows) {
  const auto set = generate_snapshots(reduced(), 1, 3, 0.125, IntegratorConfig{}, 1);
  const auto path = dir_ / "s.csv";
  io::write_snapshots(path, set);
  const auto good = io::read_text(path);

  io::write_text(path, "x1,x2,y1,y2,run_id,pair_index\n0.1,0.2,0.3,abc,0,0\n");
  expect_code(ErrorCode::kParse, [&] { io::read_snapshots(path); }, ":2:");
  io::write_text(path, "x1,x2,y1,y2,run_id,pair_index\n0.1,0.2,0.3,0,0\n");
  expect_code(ErrorCode::kParse, [&] { io::read_snapshots(path); }, ":2:");
  io::write_text(path, "a,b,c\n");
  expect_code(ErrorCode::kParse, [&] { io::read_snapshots(path); }, ":1:");
  io::write_text(path, "x1,x2,y1,y2,run_id,pair_index\n");
  expect_code(ErrorCode::kEmptySnapshotSet, [&] { io::read_snapshots(path); });
  expect_code(ErrorCode::kIo, [&] { io::read_snapshots(dir_ / "missing.csv"); });
  io::write_text(path, good);
  EXPECT_NO_THROW(io::read_snapshots(path));
}

using Models = TempDir;

TEST_F(Models, RoundTripPreservesEverything) {
  const auto set = generate_snapshots(reduced(), 30, 11, 0.125, IntegratorConfig{}, 2);
  const auto model = fit(set, Dictionary::tensor_hermite(2, 4), FitOptions{OperatorSolver::kDataLeastSquares});
  const auto path = dir_ / "model.json";
  io::write_model(path, model);
  const auto back = io::read_model(path);
  EXPECT_EQ(back.koopman, model.koopman);
  EXPECT_EQ(back.gram, model.gram);
  EXPECT_EQ(back.eigenvalues, model.eigenvalues);
  EXPECT_EQ(back.right_eigenvectors, model.right_eigenvectors);
  EXPECT_EQ(back.left_adjoint, model.left_adjoint);
  EXPECT_EQ(back.modes, model.modes);
  EXPECT_EQ(back.weights, model.weights);
  EXPECT_EQ(back.variation, model.variation);
  EXPECT_EQ(back.dt, model.dt);
  EXPECT_EQ(back.dictionary.size(), 25);
  EXPECT_EQ(back.diagnostics.gram_rank, model.diagnostics.gram_rank);
  EXPECT_EQ(back.diagnostics.solver, OperatorSolver::kDataLeastSquares);
  State x(2);
  x << 0.4, 0.2;
  EXPECT_EQ(predict_forward(back, x, 5).state, predict_forward(model, x, 5).state);
  // Serializing again gives identical text.
  EXPECT_EQ(io::dump(io::to_json(back)), io::read_text(path));
}

TEST_F(Models, CorruptModelIsAParseError) {
  const auto path = dir_ / "model.json";
  io::write_text(path, "{\"dictionary\": {\"kind\": \"tensor-hermite\"}}");
  expect_code(ErrorCode::kParse, [&] { io::read_model(path); }, "model.json");
  io::write_text(path, "{not json");
  expect_code(ErrorCode::kParse, [&] { io::read_model(path); });
}

TEST(Network, JsonRoundTrip) {
  const auto net = build_replicator_network(ReplicatorParams{}, ReplicatorForm::kWithEnvironment);
  const auto back = io::network_from_json(io::to_json(net));
  EXPECT_EQ(back.species(), net.species());
  EXPECT_EQ(back.reactants(), net.reactants());
  EXPECT_EQ(back.products(), net.products());
  EXPECT_EQ(back.rates(), net.rates());
}

TEST(Network, FlatArraysAndReplicatorBlock) {
  const auto flat = io::parse_json(R"({"species": ["A", "B"], "reactants": [1, 0, 0, 1],
                                       "products": [0, 1, 0, 0], "rates": [2.0, 0.5]})",
                                   "inline");
  const auto net = io::network_from_json(flat);
  EXPECT_EQ(net.reaction_count(), 2);
  State x(2);
  x << 1.0, 1.0;
  EXPECT_NEAR(mak_rhs(net, x)(0), -2.0, 1e-15);
  EXPECT_NEAR(mak_rhs(net, x)(1), 2.0 - 0.5, 1e-15);

  const auto block = io::parse_json(R"({"replicator": {"k1": 10, "k2": 0.1, "g": 0.05, "form": "species"}})", "inline");
  EXPECT_EQ(io::network_from_json(block).species_count(), 3);
  expect_code(ErrorCode::kParse, [] { io::network_from_json(io::parse_json(R"({"species": ["A"]})", "inline")); });
  expect_code(ErrorCode::kParse, [] {
    io::network_from_json(io::parse_json(R"({"species": ["A"], "reactants": [1.5], "products": [0], "rates": [1]})",
                                         "inline"));
  });
}

TEST(Reports, CsvLayouts) {
  const auto sweep = bifurcation_sweep(ReplicatorParams{}, 0.001, 2.5, 20);
  const auto csv = io::sweep_csv(sweep);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "g,branch,x1,x2,x3,re_lambda1,im_lambda1,re_lambda2,im_lambda2,class");
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), sweep.rows.size() + 1);

  Polyline line;
  line.points = {{0.25, 0.5}, {0.75, 0.125}};
  const auto pcsv = io::polyline_csv(line);
  EXPECT_NE(pcsv.find("0.25,0.5"), std::string::npos);
  EXPECT_EQ(std::count(pcsv.begin(), pcsv.end(), '\n'), 3);
}

using Config = TempDir;

TEST_F(Config, DefaultsMatchTheReferenceExperiment) {
  const RunConfig c;
  EXPECT_EQ(c.replicator.k1, 10.0);
  EXPECT_EQ(c.replicator.k2, 0.1);
  EXPECT_EQ(c.replicator.g, 0.02);
  EXPECT_EQ(c.n_runs, 100);
  EXPECT_EQ(c.points_per_run, 21);
  EXPECT_EQ(c.dt, 0.125);
  EXPECT_EQ(c.step, 0.015625);
  EXPECT_EQ(c.degree, 4);
  EXPECT_EQ(c.resolution, 201);
  EXPECT_EQ(c.ics_per_side, 70);
  EXPECT_NO_THROW(c.validate());
}

TEST_F(Config, EchoRoundTrip) {
  RunConfig c;
  c.seed = 77;
  c.replicator.g = 0.05;
  c.design = InitialDesign::kLattice;
  c.output = dir_ / "o";
  const auto back = config_from_json(to_json(c));
  EXPECT_EQ(io::dump(to_json(back)), io::dump(to_json(c)));
}

TEST_F(Config, LoadResolvesRelativePaths) {
  io::write_text(dir_ / "net.json", io::dump(io::to_json(reduced())));
  io::write_text(dir_ / "cfg.json", R"({"network": {"file": "net.json"}, "output": "results"})");
  const auto c = load_config(dir_ / "cfg.json");
  ASSERT_TRUE(c.network_file.has_value());
  EXPECT_EQ(*c.network_file, dir_ / "net.json");
  EXPECT_EQ(c.output, dir_ / "results");
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.network().species_count(), 2);
}

TEST_F(Config, Rejections) {
  const auto bad = [](const char* text) { return config_from_json(io::parse_json(text, "inline")); };
  expect_code(ErrorCode::kConfig, [&] { bad(R"({"simulaton": {}})"); }, "simulaton");
  expect_code(ErrorCode::kConfig, [&] { bad(R"({"simulation": {"n_runs": "many"}})"); }, "n_runs");
  expect_code(ErrorCode::kConfig, [&] { bad(R"({"network": {"replicator": {"k1": -1}}})"); });
  expect_code(ErrorCode::kConfig, [&] { bad(R"({"edmd": {"solver": "magic"}})"); });
  expect_code(ErrorCode::kConfig, [&] { bad(R"({"network": {"file": "a", "replicator": {}}})"); });
  expect_code(ErrorCode::kConfig, [&] { load_config(dir_ / "absent.json"); });
  io::write_text(dir_ / "broken.json", "{");
  expect_code(ErrorCode::kConfig, [&] { load_config(dir_ / "broken.json"); });
}

TEST_F(Config, ValidationErrors) {
  RunConfig c;
  c.dt = 0.1;
  expect_code(ErrorCode::kStepMisalignment, [&] { c.validate(); });
  c = RunConfig{};
  c.step = 0.25;
  expect_code(ErrorCode::kStepMisalignment, [&] { c.validate(); });
  c = RunConfig{};
  c.points_per_run = 1;
  expect_code(ErrorCode::kConfig, [&] { c.validate(); });
  c = RunConfig{};
  c.resolution = 16;
  expect_code(ErrorCode::kConfig, [&] { c.validate(); });
  c = RunConfig{};
  c.g_min = 1.0;
  c.g_max = 0.5;
  expect_code(ErrorCode::kConfig, [&] { c.validate(); });
  c = RunConfig{};
  c.network_file = dir_ / "nope.json";
  expect_code(ErrorCode::kConfig, [&] { c.validate(); });
}

TEST(ShippedConfig, DefaultLoads) {
  const auto c = load_config(fs::path(MAKBASIN_SOURCE_DIR) / "configs" / "default.json");
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.n_runs, 100);
  EXPECT_EQ(c.replicator.g, 0.02);
}
