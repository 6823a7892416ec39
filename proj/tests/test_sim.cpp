#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include "makbasin/integrate.hpp"
#include "makbasin/sampling.hpp"
#include "makbasin/snapshots.hpp"

using namespace makbasin;

namespace {

const StoichiometricNetwork& reduced() {
  static const auto net = build_replicator_network(ReplicatorParams{}, ReplicatorForm::kReduced);
  return net;
}

const StoichiometricNetwork& species() {
  static const auto net = build_replicator_network(ReplicatorParams{}, ReplicatorForm::kSpecies);
  return net;
}

State s2(double a, double b) {
  State x(2);
  x << a, b;
  return x;
}

// Reduced replicator written out by hand, independent of the network code.
State reduced_field(const State& x) {
  const double k1 = 10.0, k2 = 0.1, g = 0.02;
  return s2(-k1 * x(0) * x(1) * x(1) + g - g * x(0), k1 * x(0) * x(1) * x(1) - (k2 + g) * x(1));
}

void expect_code(ErrorCode code, const std::function<void()>& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(Integrate, TrivialEquilibriumIsFixed) {
  State x0(3);
  x0 << 1.0, 0.0, 0.0;
  for (double t : {0.0, 1.0, 50.0}) {
    const State x = integrate(species(), x0, t, IntegratorConfig{});
    EXPECT_EQ(x, x0);
  }
}

TEST(Integrate, FocusStaysPut) {
  const State focus = reduce_state(analytic_equilibria(ReplicatorParams{})[2]);
  const State x = integrate(reduced(), focus, 10.0, IntegratorConfig{});
  EXPECT_LT((x - focus).norm(), 1e-6);
}

TEST(Integrate, LongHorizonReachesAnEquilibrium) {
  const State x = integrate(reduced(), s2(0.5, 0.25), 100.0, IntegratorConfig{});
  double best = 1e9;
  for (const auto& e : analytic_equilibria(ReplicatorParams{})) best = std::min(best, (x - reduce_state(e)).norm());
  EXPECT_LT(best, 1e-3);
}

TEST(Integrate, MatchesHandWrittenField) {
  const State x0 = s2(0.4, 0.3);
  const State a = integrate(reduced(), x0, 2.0, IntegratorConfig{});
  const State b = integrate_field(reduced_field, x0, 2.0, 0.015625);
  EXPECT_LT((a - b).norm(), 1e-13);
}

TEST(Integrate, FlowComposition) {
  const IntegratorConfig cfg{};
  for (const auto& x0 : sample_simplex(20, 7)) {
    const State whole = integrate(reduced(), x0, 3.0, cfg);
    const State split = integrate(reduced(), integrate(reduced(), x0, 1.25, cfg), 1.75, cfg);
    EXPECT_LT((whole - split).norm(), 1e-9);
  }
}

TEST(Integrate, FourthOrderConvergence) {
  const State x0 = s2(0.3, 0.4);
  const double h = 0.125;
  const double t = 4.0;
  const State ref = integrate_field(reduced_field, x0, t, h / 16.0);
  const double e1 = (integrate_field(reduced_field, x0, t, h) - ref).norm();
  const double e2 = (integrate_field(reduced_field, x0, t, h / 2.0) - ref).norm();
  ASSERT_GT(e2, 0.0);
  EXPECT_GT(e1 / e2, 8.0) << e1 << " " << e2;
}

TEST(Integrate, SimplexDriftIsNegligible) {
  const IntegratorConfig cfg{};
  for (const auto& r : sample_simplex(10, 3)) {
    State x = expand_reduced(r);
    x(2) = std::max(0.0, x(2));
    const double drift0 = std::abs(1.0 - x.sum());
    const double t = 50.0;
    const State y = integrate(species(), x, t, cfg);
    EXPECT_LT((std::abs(1.0 - y.sum()) - drift0) / t, 1e-6);
  }
}

TEST(Integrate, Errors) {
  expect_code(ErrorCode::kStepMisalignment, [] { integrate(reduced(), s2(0.5, 0.25), 0.1, IntegratorConfig{}); });
  expect_code(ErrorCode::kNegativeConcentration, [] { integrate(reduced(), s2(-0.1, 0.25), 1.0, IntegratorConfig{}); });
  // A huge step overshoots into the negative orthant.
  IntegratorConfig coarse;
  coarse.step = 4.0;
  expect_code(ErrorCode::kStateEscapedDomain, [&] { integrate(reduced(), s2(0.5, 0.45), 40.0, coarse); });
  expect_code(ErrorCode::kDimensionMismatch, [] {
    State x(3);
    x << 0.3, 0.3, 0.4;
    integrate(reduced(), x, 1.0, IntegratorConfig{});
  });
}

TEST(Integrate, StepCount) {
  EXPECT_EQ(step_count(0.125, 0.015625), 8);
  EXPECT_EQ(step_count(200.0, 0.015625), 12800);
  EXPECT_EQ(step_count(0.0, 0.5), 0);
  expect_code(ErrorCode::kStepMisalignment, [] { step_count(0.1, 0.015625); });
  expect_code(ErrorCode::kInvalidParameter, [] { step_count(1.0, 0.0); });
}

TEST(Sampling, MeanApproachesCentroid) {
  const auto pts = sample_simplex(10000, 11);
  State mean = State::Zero(2);
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  EXPECT_NEAR(mean(0), 1.0 / 3.0, 0.01);
  EXPECT_NEAR(mean(1), 1.0 / 3.0, 0.01);
}

TEST(Sampling, DeterministicPerSeed) {
  EXPECT_EQ(sample_simplex(1, 42)[0], sample_simplex(1, 42)[0]);
  EXPECT_NE(sample_simplex(1, 42)[0], sample_simplex(1, 43)[0]);
  // Prefix stability: sample i depends only on (seed, i).
  const auto a = sample_simplex(5, 9);
  const auto b = sample_simplex(50, 9);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Sampling, MembershipIsExact) {
  for (const auto& p : sample_simplex(5000, 5)) {
    EXPECT_TRUE(in_reduced_simplex(p)) << p.transpose();
  }
}

TEST(Sampling, QuadrantFrequencies) {
  // Region x1 + x2 <= 1/2 holds a quarter of the triangle's area.
  const auto pts = sample_simplex(20000, 13);
  int inside = 0;
  for (const auto& p : pts) inside += p(0) + p(1) <= 0.5;
  EXPECT_NEAR(inside / 20000.0, 0.25, 0.015);
}

TEST(Lattice, CoversVerticesAndIsDeterministic) {
  const auto pts = lattice_simplex(100, 1);
  ASSERT_EQ(pts.size(), 100u);
  int vertices = 0;
  for (const auto& p : pts) {
    EXPECT_TRUE(in_reduced_simplex(p, 1e-15));
    vertices += (p(0) == 0.0 && p(1) == 0.0) || p(0) == 1.0 || p(1) == 1.0;
  }
  EXPECT_EQ(vertices, 3);
  EXPECT_EQ(lattice_simplex(100, 1), pts);
}

TEST(Snapshots, DefaultCountAndMembership) {
  const auto set = generate_snapshots(reduced(), 100, 21, 0.125, IntegratorConfig{}, 1);
  EXPECT_EQ(set.size(), 2000);
  EXPECT_EQ(set.x.rows(), 2);
  EXPECT_EQ(set.y.cols(), set.x.cols());
  for (Eigen::Index p = 0; p < set.size(); ++p) {
    EXPECT_TRUE(in_reduced_simplex(set.x.col(p), 1e-6));
    EXPECT_TRUE(in_reduced_simplex(set.y.col(p), 1e-6));
  }
}

TEST(Snapshots, SinglePair) {
  const auto set = generate_snapshots(reduced(), 1, 2, 0.125, IntegratorConfig{}, 4);
  ASSERT_EQ(set.size(), 1);
  EXPECT_EQ(State(set.y.col(0)), integrate(reduced(), set.x.col(0), 0.125, IntegratorConfig{}));
}

TEST(Snapshots, PairsAreBitExactReintegrations) {
  const auto set = generate_snapshots(reduced(), 10, 6, 0.125, IntegratorConfig{}, 2);
  for (Eigen::Index p = 0; p < set.size(); ++p) {
    EXPECT_EQ(State(set.y.col(p)), integrate(reduced(), set.x.col(p), 0.125, IntegratorConfig{}));
  }
  // Consecutive pairs chain within a run.
  for (Eigen::Index p = 0; p + 1 < set.size(); ++p) {
    if (set.run_id[p] == set.run_id[p + 1]) EXPECT_EQ(State(set.y.col(p)), State(set.x.col(p + 1)));
  }
}

TEST(Snapshots, ThreeSpeciesLift) {
  const auto set = generate_snapshots(species(), 3, 4, 0.125, IntegratorConfig{}, 2);
  EXPECT_EQ(set.x.rows(), 3);
  for (Eigen::Index p = 0; p < set.size(); ++p) EXPECT_NEAR(set.x.col(p).sum(), 1.0, 1e-9);
}

TEST(Snapshots, Errors) {
  expect_code(ErrorCode::kInvalidParameter, [] { generate_snapshots(reduced(), 0, 21, 0.125, IntegratorConfig{}, 1); });
  expect_code(ErrorCode::kInvalidParameter, [] { generate_snapshots(reduced(), 1, 1, 0.125, IntegratorConfig{}, 1); });
  expect_code(ErrorCode::kStepMisalignment, [] { generate_snapshots(reduced(), 1, 3, 0.1, IntegratorConfig{}, 1); });
  IntegratorConfig big;
  big.step = 0.25;
  expect_code(ErrorCode::kStepMisalignment, [&] { generate_snapshots(reduced(), 1, 3, 0.125, big, 1); });
}
