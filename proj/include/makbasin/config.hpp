#pragma once

// Run configuration: JSON loading with defaults, validation and the
// fully-resolved echo written next to every output.

#include <filesystem>
#include <optional>
#include <string>

#include "makbasin/basin.hpp"
#include "makbasin/io.hpp"

namespace makbasin {

struct RunConfig {
  // network
  std::optional<std::filesystem::path> network_file;
  ReplicatorParams replicator{};
  ReplicatorForm form = ReplicatorForm::kReduced;

  // simulation
  int n_runs = 100;
  int points_per_run = 21;
  double dt = 0.125;
  double step = 0.015625;
  std::uint64_t seed = 1;
  InitialDesign design = InitialDesign::kUniform;

  // edmd
  std::string dictionary = "tensor-hermite";
  int degree = 4;
  OperatorSolver solver = OperatorSolver::kDataLeastSquares;

  // basin
  int eta = 1;
  int starts = 400;
  int resolution = 201;
  double merge_radius = 1e-3;
  double fixed_point_tolerance = 1e-3;
  double match_tolerance = 1e-3;
  double horizon = 200.0;
  double max_horizon = 2000.0;
  int ics_per_side = 70;
  double variation_ratio = 1e-6;
  int boundary_samples = 40;
  double boundary_offset = 1e-3;

  // bifurcation
  double g_min = 0.001;
  double g_max = 2.5;
  int steps = 500;

  std::filesystem::path output = "out";

  IntegratorConfig integrator() const { return {step, horizon, "rk4"}; }

  StoichiometricNetwork network() const {
    return network_file ? io::read_network(*network_file) : build_replicator_network(replicator, form);
  }

  Dictionary make_dictionary(int state_dim) const { return io::dictionary_from_spec(dictionary, state_dim, degree); }

  BasinConfig basin() const {
    BasinConfig b;
    b.fixed_points.eta = eta;
    b.fixed_points.starts = starts;
    b.fixed_points.merge_radius = merge_radius;
    b.fixed_points.tolerance = fixed_point_tolerance;
    b.level_set.resolution = resolution;
    b.verify.integrator = integrator();
    b.verify.match_tolerance = match_tolerance;
    b.verify.max_horizon = max_horizon;
    b.boundary.samples = boundary_samples;
    b.boundary.offset = boundary_offset;
    b.boundary.horizon = horizon;
    b.ics_per_side = ics_per_side;
    b.seed = seed;
    b.variation_ratio = variation_ratio;
    return b;
  }

  /// Throws config-error when a field violates the preconditions it feeds.
  void validate() const {
    const auto fail = [](const std::string& m) { throw Error(ErrorCode::kConfig, m); };
    try {
      replicator.validate();
    } catch (const Error& e) {
      fail(e.what());
    }
    if (network_file && !std::filesystem::exists(*network_file)) fail("network file not found: " + network_file->string());
    if (n_runs < 1) fail("simulation.n_runs must be >= 1");
    if (points_per_run < 2) fail("simulation.points_per_run must be >= 2");
    if (!(dt > 0.0) || !(step > 0.0)) fail("simulation.dt and simulation.step must be positive");
    if (step > dt) throw Error(ErrorCode::kStepMisalignment, "simulation.step exceeds simulation.dt");
    step_count(dt, step);
    if (degree < 1) fail("edmd.degree must be >= 1");
    if (dictionary != "tensor-hermite" && dictionary != "monomial") fail("edmd.dictionary must be tensor-hermite or monomial");
    if (eta < 1) fail("basin.eta must be >= 1");
    if (starts < 1) fail("basin.starts must be >= 1");
    if (resolution < 32) fail("basin.resolution must be >= 32");
    if (!(merge_radius > 0.0) || !(fixed_point_tolerance > 0.0) || !(match_tolerance > 0.0)) {
      fail("basin tolerances must be positive");
    }
    if (!(horizon > 0.0) || max_horizon < horizon) fail("basin.horizon must be positive and <= basin.max_horizon");
    step_count(horizon, step);
    if (ics_per_side < 1) fail("basin.ics_per_side must be >= 1");
    if (!(variation_ratio >= 0.0)) fail("basin.variation_ratio must be nonnegative");
    if (boundary_samples < 1 || !(boundary_offset > 0.0)) fail("basin boundary sampling must be positive");
    if (!(g_min > 0.0) || !(g_max > g_min)) fail("bifurcation range needs 0 < g_min < g_max");
    if (steps < 2) fail("bifurcation.steps must be >= 2");
  }
};

namespace detail {

template <typename T>
void assign(const io::Json& block, const char* key, T& field, const std::string& section) {
  if (!block.contains(key)) return;
  try {
    field = block.at(key).get<T>();
  } catch (const io::Json::exception&) {
    throw Error(ErrorCode::kConfig, section + "." + key + " has the wrong type");
  }
}

inline void reject_unknown(const io::Json& block, std::initializer_list<const char*> keys, const std::string& section) {
  if (!block.is_object()) throw Error(ErrorCode::kConfig, section + " must be an object");
  for (const auto& [key, value] : block.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) throw Error(ErrorCode::kConfig, "unknown key '" + section + "." + key + "'");
  }
}

}  // namespace detail

/// Defaults overlaid with the given JSON; relative paths resolve against
/// `base_dir`.
inline RunConfig config_from_json(const io::Json& j, const std::filesystem::path& base_dir = {}) {
  RunConfig c;
  detail::reject_unknown(j, {"network", "simulation", "edmd", "basin", "bifurcation", "output"}, "config");
  if (j.contains("network")) {
    const auto& n = j.at("network");
    detail::reject_unknown(n, {"file", "replicator"}, "network");
    if (n.contains("file") && n.contains("replicator")) {
      throw Error(ErrorCode::kConfig, "network takes either 'file' or 'replicator', not both");
    }
    if (n.contains("file")) c.network_file = base_dir / n.at("file").get<std::string>();
    if (n.contains("replicator")) {
      const auto& r = n.at("replicator");
      detail::reject_unknown(r, {"k1", "k2", "g", "inflow", "form"}, "network.replicator");
      try {
        c.replicator = io::replicator_from_json(r);
      } catch (const Error& e) {
        throw Error(ErrorCode::kConfig, e.what());
      }
      if (r.contains("form")) c.form = io::parse_form(r.at("form").get<std::string>());
    }
  }
  if (j.contains("simulation")) {
    const auto& s = j.at("simulation");
    detail::reject_unknown(s, {"n_runs", "points_per_run", "dt", "step", "seed", "design"}, "simulation");
    detail::assign(s, "n_runs", c.n_runs, "simulation");
    detail::assign(s, "points_per_run", c.points_per_run, "simulation");
    detail::assign(s, "dt", c.dt, "simulation");
    detail::assign(s, "step", c.step, "simulation");
    detail::assign(s, "seed", c.seed, "simulation");
    if (s.contains("design")) c.design = parse_initial_design(s.at("design").get<std::string>());
  }
  if (j.contains("edmd")) {
    const auto& e = j.at("edmd");
    detail::reject_unknown(e, {"dictionary", "degree", "solver"}, "edmd");
    detail::assign(e, "dictionary", c.dictionary, "edmd");
    detail::assign(e, "degree", c.degree, "edmd");
    if (e.contains("solver")) c.solver = parse_operator_solver(e.at("solver").get<std::string>());
  }
  if (j.contains("basin")) {
    const auto& b = j.at("basin");
    detail::reject_unknown(b,
                           {"eta", "starts", "resolution", "merge_radius", "fixed_point_tolerance", "match_tolerance",
                            "horizon", "max_horizon", "ics_per_side", "variation_ratio", "boundary_samples",
                            "boundary_offset"},
                           "basin");
    detail::assign(b, "eta", c.eta, "basin");
    detail::assign(b, "starts", c.starts, "basin");
    detail::assign(b, "resolution", c.resolution, "basin");
    detail::assign(b, "merge_radius", c.merge_radius, "basin");
    detail::assign(b, "fixed_point_tolerance", c.fixed_point_tolerance, "basin");
    detail::assign(b, "match_tolerance", c.match_tolerance, "basin");
    detail::assign(b, "horizon", c.horizon, "basin");
    detail::assign(b, "max_horizon", c.max_horizon, "basin");
    detail::assign(b, "ics_per_side", c.ics_per_side, "basin");
    detail::assign(b, "variation_ratio", c.variation_ratio, "basin");
    detail::assign(b, "boundary_samples", c.boundary_samples, "basin");
    detail::assign(b, "boundary_offset", c.boundary_offset, "basin");
  }
  if (j.contains("bifurcation")) {
    const auto& f = j.at("bifurcation");
    detail::reject_unknown(f, {"g_min", "g_max", "steps"}, "bifurcation");
    detail::assign(f, "g_min", c.g_min, "bifurcation");
    detail::assign(f, "g_max", c.g_max, "bifurcation");
    detail::assign(f, "steps", c.steps, "bifurcation");
  }
  if (j.contains("output")) c.output = base_dir / j.at("output").get<std::string>();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  io::Json j;
  try {
    j = io::read_json(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  return config_from_json(j, path.parent_path());
}

/// Every field, defaults included.
inline io::Json to_json(const RunConfig& c) {
  io::Json network;
  if (c.network_file) {
    network["file"] = c.network_file->generic_string();
  } else {
    auto r = io::to_json(c.replicator);
    r["form"] = io::to_string(c.form);
    network["replicator"] = r;
  }
  return io::Json{
      {"network", network},
      {"simulation",
       {{"n_runs", c.n_runs},
        {"points_per_run", c.points_per_run},
        {"dt", c.dt},
        {"step", c.step},
        {"seed", c.seed},
        {"design", to_string(c.design)}}},
      {"edmd", {{"dictionary", c.dictionary}, {"degree", c.degree}, {"solver", to_string(c.solver)}}},
      {"basin",
       {{"eta", c.eta},
        {"starts", c.starts},
        {"resolution", c.resolution},
        {"merge_radius", c.merge_radius},
        {"fixed_point_tolerance", c.fixed_point_tolerance},
        {"match_tolerance", c.match_tolerance},
        {"horizon", c.horizon},
        {"max_horizon", c.max_horizon},
        {"ics_per_side", c.ics_per_side},
        {"variation_ratio", c.variation_ratio},
        {"boundary_samples", c.boundary_samples},
        {"boundary_offset", c.boundary_offset}}},
      {"bifurcation", {{"g_min", c.g_min}, {"g_max", c.g_max}, {"steps", c.steps}}},
      {"output", c.output.generic_string()}};
}

}  // namespace makbasin
