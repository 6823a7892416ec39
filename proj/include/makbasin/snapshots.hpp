#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "makbasin/error.hpp"
#include "makbasin/integrate.hpp"
#include "makbasin/mak.hpp"
#include "makbasin/sampling.hpp"

namespace makbasin {

enum class InitialDesign {
  kUniform,  // independent uniform draws on the reduced simplex
  kLattice,  // triangular lattice covering vertices and edges, seeded subset
};

inline std::string to_string(InitialDesign d) { return d == InitialDesign::kUniform ? "uniform" : "lattice"; }

inline InitialDesign parse_initial_design(const std::string& s) {
  if (s == "uniform") return InitialDesign::kUniform;
  if (s == "lattice") return InitialDesign::kLattice;
  throw Error(ErrorCode::kConfig, "unknown initial-condition design '" + s + "'");
}

struct SnapshotMeta {
  int n_runs = 0;
  int points_per_run = 0;
  std::uint64_t seed = 0;
  double step = 0.0;
  std::string method = "rk4";
  InitialDesign design = InitialDesign::kUniform;
};

/// Paired samples (x_p, y_p = F^dt(x_p)) stored column-wise.
struct SnapshotSet {
  Eigen::MatrixXd x;  // n x P
  Eigen::MatrixXd y;  // n x P
  double dt = 0.0;
  std::vector<int> run_id;
  std::vector<int> pair_index;
  SnapshotMeta meta;

  Eigen::Index size() const { return x.cols(); }
  Eigen::Index state_dim() const { return x.rows(); }
};

/// Triangular-lattice points of the reduced simplex: subdivision s is the
/// smallest with (s+1)(s+2)/2 >= count; `count` of them are kept, chosen by a
/// seeded shuffle that always retains the three vertices.
inline std::vector<State> lattice_simplex(int count, std::uint64_t seed) {
  int s = 1;
  while ((s + 1) * (s + 2) / 2 < count) ++s;
  std::vector<State> nodes;
  for (int i = 0; i <= s; ++i) {
    for (int j = 0; j <= s - i; ++j) {
      State x(2);
      x << static_cast<double>(i) / s, static_cast<double>(j) / s;
      nodes.push_back(x);
    }
  }
  std::vector<std::size_t> order(nodes.size());
  std::iota(order.begin(), order.end(), 0);
  const auto is_vertex = [&](std::size_t k) {
    const auto& x = nodes[k];
    return (x(0) == 0.0 && x(1) == 0.0) || x(0) == 1.0 || x(1) == 1.0;
  };
  Rng rng(derive_seed(seed, 0xA11CEULL));
  for (std::size_t k = order.size(); k > 1; --k) {
    const auto pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(k));
    std::swap(order[k - 1], order[std::min(pick, k - 1)]);
  }
  std::stable_partition(order.begin(), order.end(), is_vertex);
  order.resize(static_cast<std::size_t>(count));
  std::sort(order.begin(), order.end());
  std::vector<State> out;
  for (auto k : order) out.push_back(nodes[k]);
  return out;
}

inline std::vector<State> initial_conditions(InitialDesign design, int count, std::uint64_t seed) {
  return design == InitialDesign::kUniform ? sample_simplex(count, seed) : lattice_simplex(count, seed);
}

/// Lifts reduced-simplex points to the network's state dimension (2 or 3).
inline State lift_to_network(const StoichiometricNetwork& net, const State& reduced) {
  if (net.species_count() == 2) return reduced;
  if (net.species_count() == 3) {
    State x = expand_reduced(reduced);
    x(2) = std::max(0.0, x(2));
    return x;
  }
  throw Error(ErrorCode::kDimensionMismatch, "snapshot generation supports 2- or 3-species networks");
}

/// n_runs trajectories of points_per_run states spaced dt apart; all
/// consecutive pairs, ordered by run then pair index.
inline SnapshotSet generate_snapshots(const StoichiometricNetwork& net, int n_runs, int points_per_run, double dt,
                                      const IntegratorConfig& cfg, std::uint64_t seed,
                                      InitialDesign design = InitialDesign::kUniform) {
  if (n_runs < 1) throw Error(ErrorCode::kInvalidParameter, "n_runs must be >= 1");
  if (points_per_run < 2) throw Error(ErrorCode::kInvalidParameter, "points_per_run must be >= 2");
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidParameter, "dt must be positive");
  if (cfg.step > dt) throw Error(ErrorCode::kStepMisalignment, "integrator step exceeds dt");
  step_count(dt, cfg.step);

  const auto ics = initial_conditions(design, n_runs, seed);
  const Eigen::Index n = net.species_count();
  const Eigen::Index pairs = static_cast<Eigen::Index>(n_runs) * (points_per_run - 1);
  SnapshotSet set;
  set.x.resize(n, pairs);
  set.y.resize(n, pairs);
  set.dt = dt;
  set.meta = SnapshotMeta{n_runs, points_per_run, seed, cfg.step, cfg.method, design};
  Eigen::Index col = 0;
  for (int r = 0; r < n_runs; ++r) {
    std::vector<State> traj;
    try {
      traj = integrate_trajectory(net, lift_to_network(net, ics[r]), points_per_run, dt, cfg);
    } catch (const Error& e) {
      throw Error(e.code(), "run " + std::to_string(r) + ": " + e.what());
    }
    for (int k = 0; k + 1 < points_per_run; ++k, ++col) {
      set.x.col(col) = traj[k];
      set.y.col(col) = traj[k + 1];
      set.run_id.push_back(r);
      set.pair_index.push_back(k);
    }
  }
  return set;
}

}  // namespace makbasin
