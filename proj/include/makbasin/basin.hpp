#pragma once

// Attraction-region characterization from a fitted Koopman model: fixed
// points of the predicted flow, linearized classification, the level set of
// the dominant eigenfunction through the saddle, and its validation against
// forward integration.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "makbasin/edmd.hpp"
#include "makbasin/error.hpp"
#include "makbasin/integrate.hpp"
#include "makbasin/mak.hpp"
#include "makbasin/marching_squares.hpp"
#include "makbasin/nelder_mead.hpp"
#include "makbasin/sampling.hpp"

namespace makbasin {

enum class EquilibriumClass { kStableNode, kStableFocus, kUnstableNode, kUnstableFocus, kSaddle, kCenterMarginal };
enum class EquilibriumRole { kStable, kSaddle, kOther };

inline std::string to_string(EquilibriumClass c) {
  switch (c) {
    case EquilibriumClass::kStableNode: return "stable-node";
    case EquilibriumClass::kStableFocus: return "stable-focus";
    case EquilibriumClass::kUnstableNode: return "unstable-node";
    case EquilibriumClass::kUnstableFocus: return "unstable-focus";
    case EquilibriumClass::kSaddle: return "saddle";
    case EquilibriumClass::kCenterMarginal: return "center-marginal";
  }
  return "unknown";
}

inline std::string to_string(EquilibriumRole r) {
  switch (r) {
    case EquilibriumRole::kStable: return "stable";
    case EquilibriumRole::kSaddle: return "saddle";
    case EquilibriumRole::kOther: return "other";
  }
  return "unknown";
}

inline constexpr double kClassEpsilon = 1e-9;

struct EquilibriumReport {
  State location;            // polished when a network was available
  State raw_location;        // minimizer of the fixed-point objective
  double objective = 0.0;    // objective at raw_location
  double polish_distance = 0.0;
  bool polished = false;
  Eigen::VectorXcd jacobian_eigenvalues;
  EquilibriumClass cls = EquilibriumClass::kCenterMarginal;
  EquilibriumRole role = EquilibriumRole::kOther;
};

// ---------------------------------------------------------------------------
// Fixed points

/// Box [lower, upper] optionally intersected with {sum x <= 1}.
struct SearchDomain {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  bool simplex = true;

  static SearchDomain reduced_simplex(Eigen::Index dim) {
    return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim), true};
  }
  static SearchDomain box(Eigen::VectorXd lo, Eigen::VectorXd hi) { return {std::move(lo), std::move(hi), false}; }

  /// Euclidean projection onto the domain.
  State project(const State& x) const {
    State p = x.cwiseMax(lower).cwiseMin(upper);
    if (!simplex || p.sum() <= 1.0) return p;
    // Projection onto {x >= 0, sum x = 1} by the sorting method.
    std::vector<double> u(x.data(), x.data() + x.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      cumulative += u[k];
      const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
      if (u[k] - t > 0.0) theta = t;
    }
    return (x.array() - theta).cwiseMax(0.0).matrix();
  }

  bool contains(const State& x, double tol = 0.0) const {
    if (((x - lower).array() < -tol).any() || ((x - upper).array() > tol).any()) return false;
    return !simplex || x.sum() <= 1.0 + tol;
  }
};

struct FixedPointOptions {
  int eta = 1;
  int starts = 400;
  std::uint64_t seed = 0;
  double merge_radius = 1e-3;
  double tolerance = 1e-3;
  std::optional<SearchDomain> domain;  // defaults to the reduced simplex
  NelderMeadOptions descent{};
};

struct FixedPointSearch {
  std::vector<EquilibriumReport> points;
  int local_minima = 0;        // descents that ended below tolerance
  int rejected_by_polish = 0;  // minima whose root refinement failed
};

/// ||Re[(M^eta .* V) Phi(x)^T] - x||.
inline double fixed_point_objective(const KoopmanModel& model, const State& x, int eta) {
  return (propagate(model, x, eta, 0.0).real() - x).norm();
}

namespace detail {

/// Jittered grid seeds: `count` cells of a regular grid over the domain box,
/// restricted to cells meeting the simplex, one uniform point per cell.
inline std::vector<State> jittered_starts(const SearchDomain& domain, int count, std::uint64_t seed) {
  const auto dim = domain.lower.size();
  Rng rng(derive_seed(seed, 0x5EED5ULL));
  std::vector<std::vector<int>> cells;
  int per_axis = 1;
  while (true) {
    cells.clear();
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    while (true) {
      State corner(dim);
      for (Eigen::Index a = 0; a < dim; ++a) {
        corner(a) = domain.lower(a) + (domain.upper(a) - domain.lower(a)) * idx[a] / per_axis;
      }
      if (!domain.simplex || corner.sum() < 1.0) cells.push_back(idx);
      Eigen::Index a = dim - 1;
      while (a >= 0 && ++idx[static_cast<std::size_t>(a)] >= per_axis) idx[static_cast<std::size_t>(a--)] = 0;
      if (a < 0) break;
    }
    if (static_cast<int>(cells.size()) >= count) break;
    ++per_axis;
  }
  // Seeded subset of exactly `count` cells, kept in grid order.
  std::vector<std::size_t> order(cells.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t k = order.size(); k > 1; --k) {
    const auto pick = std::min(static_cast<std::size_t>(rng.uniform() * static_cast<double>(k)), k - 1);
    std::swap(order[k - 1], order[pick]);
  }
  order.resize(static_cast<std::size_t>(count));
  std::sort(order.begin(), order.end());
  std::vector<State> out;
  for (auto c : order) {
    State x(dim);
    for (Eigen::Index a = 0; a < dim; ++a) {
      const double width = (domain.upper(a) - domain.lower(a)) / per_axis;
      x(a) = domain.lower(a) + width * (cells[c][static_cast<std::size_t>(a)] + rng.uniform());
    }
    out.push_back(domain.project(x));
  }
  return out;
}

/// Damped Newton on the MAK right-hand side.
inline std::optional<State> polish_root(const StoichiometricNetwork& net, State x, int max_iterations = 60) {
  State f = mak_rhs_unchecked(net, x);
  for (int it = 0; it < max_iterations && f.norm() > 1e-14; ++it) {
    const Eigen::MatrixXd jac = mak_jacobian(net, x);
    const State dx = jac.fullPivLu().solve(-f);
    if (!dx.allFinite()) return std::nullopt;
    double damping = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls, damping *= 0.5) {
      const State trial = x + damping * dx;
      const State ft = mak_rhs_unchecked(net, trial);
      if (ft.norm() < f.norm()) {
        x = trial;
        f = ft;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (!(f.norm() < 1e-6)) return std::nullopt;
  return x;
}

}  // namespace detail

/// Multi-start minimization of the fixed-point objective, merging nearby
/// minima; when `net` is given each minimum is refined to a root of the
/// true right-hand side.
inline FixedPointSearch find_fixed_points(const KoopmanModel& model, const FixedPointOptions& opts = {},
                                          const StoichiometricNetwork* net = nullptr) {
  if (opts.eta < 1) throw Error(ErrorCode::kInvalidParameter, "eta must be >= 1");
  if (opts.starts < 1) throw Error(ErrorCode::kInvalidParameter, "starts must be >= 1");
  const SearchDomain domain = opts.domain.value_or(SearchDomain::reduced_simplex(model.state_dim()));
  if (domain.lower.size() != model.state_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "search domain dimension differs from the model");
  }
  if (net && net->species_count() != model.state_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "network dimension differs from the model");
  }

  const auto objective = [&](const Eigen::VectorXd& x) {
    const State p = domain.project(x);
    return fixed_point_objective(model, p, opts.eta) + (x - p).norm();
  };

  struct Candidate {
    State x;
    double value;
  };
  std::vector<Candidate> minima;
  for (const auto& start : detail::jittered_starts(domain, opts.starts, opts.seed)) {
    const auto r = nelder_mead(objective, start, opts.descent);
    const State p = domain.project(r.x);
    const double value = fixed_point_objective(model, p, opts.eta);
    if (value < opts.tolerance) minima.push_back({p, value});
  }

  FixedPointSearch out;
  out.local_minima = static_cast<int>(minima.size());
  std::stable_sort(minima.begin(), minima.end(), [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
  std::vector<Candidate> merged;
  for (const auto& c : minima) {
    const bool dup = std::any_of(merged.begin(), merged.end(),
                                 [&](const Candidate& m) { return (m.x - c.x).norm() < opts.merge_radius; });
    if (!dup) merged.push_back(c);
  }

  for (const auto& c : merged) {
    EquilibriumReport rep;
    rep.raw_location = c.x;
    rep.location = c.x;
    rep.objective = c.value;
    if (net) {
      const auto root = detail::polish_root(*net, c.x);
      if (!root || !domain.contains(*root, 1e-9)) {
        ++out.rejected_by_polish;
        continue;
      }
      rep.location = domain.project(*root);
      rep.polished = true;
      rep.polish_distance = (rep.location - c.x).norm();
      // Distinct minima may refine to the same root; keep the closest.
      auto same = std::find_if(out.points.begin(), out.points.end(), [&](const EquilibriumReport& e) {
        return (e.location - rep.location).norm() < opts.merge_radius;
      });
      if (same != out.points.end()) {
        if (rep.polish_distance < same->polish_distance) *same = rep;
        continue;
      }
    }
    out.points.push_back(rep);
  }
  if (out.points.empty()) {
    throw Error(ErrorCode::kNoFixedPointsFound,
                "no minimum of the fixed-point objective below " + std::to_string(opts.tolerance));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Classification

/// Linearization class from Jacobian eigenvalues.
inline EquilibriumClass classify_spectrum(const Eigen::VectorXcd& lambda, double eps = kClassEpsilon) {
  bool any_pos = false;
  bool any_neg = false;
  bool complex_pair = false;
  for (const auto& l : lambda) {
    if (std::abs(l.real()) < eps) return EquilibriumClass::kCenterMarginal;
    (l.real() > 0.0 ? any_pos : any_neg) = true;
    if (std::abs(l.imag()) > 0.0) complex_pair = true;
  }
  if (any_pos && any_neg) return EquilibriumClass::kSaddle;
  if (any_neg) return complex_pair ? EquilibriumClass::kStableFocus : EquilibriumClass::kStableNode;
  return complex_pair ? EquilibriumClass::kUnstableFocus : EquilibriumClass::kUnstableNode;
}

inline EquilibriumRole role_of(EquilibriumClass c) {
  switch (c) {
    case EquilibriumClass::kStableNode:
    case EquilibriumClass::kStableFocus: return EquilibriumRole::kStable;
    case EquilibriumClass::kSaddle: return EquilibriumRole::kSaddle;
    default: return EquilibriumRole::kOther;
  }
}

/// Eigenvalues of the analytic Jacobian at x_eq, sorted by descending real
/// part then descending imaginary part.
inline Eigen::VectorXcd jacobian_spectrum(const StoichiometricNetwork& net, const State& x_eq) {
  const Eigen::MatrixXd jac = mak_jacobian(net, x_eq);
  Eigen::VectorXcd lambda = Eigen::EigenSolver<Eigen::MatrixXd>(jac, false).eigenvalues();
  std::sort(lambda.data(), lambda.data() + lambda.size(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return lambda;
}

inline EquilibriumReport classify_equilibrium(const StoichiometricNetwork& net, const State& x_eq) {
  detail::check_dimension(net, x_eq);
  const double residual = mak_rhs_unchecked(net, x_eq).norm();
  if (!(residual < 1e-6)) {
    throw Error(ErrorCode::kNotAnEquilibrium, "right-hand side norm " + std::to_string(residual) + " at the point");
  }
  EquilibriumReport rep;
  rep.location = x_eq;
  rep.raw_location = x_eq;
  rep.jacobian_eigenvalues = jacobian_spectrum(net, x_eq);
  rep.cls = classify_spectrum(rep.jacobian_eigenvalues);
  rep.role = role_of(rep.cls);
  return rep;
}

/// Fills the linearization fields of a located equilibrium.
inline void classify_in_place(const StoichiometricNetwork& net, EquilibriumReport& rep) {
  const auto c = classify_equilibrium(net, rep.location);
  rep.jacobian_eigenvalues = c.jacobian_eigenvalues;
  rep.cls = c.cls;
  rep.role = c.role;
}

// ---------------------------------------------------------------------------
// Main eigenfunction

struct MainEigenfunction {
  Eigenfunction function;
  std::vector<Eigen::Index> excluded;  // variation below threshold
  double variation_threshold = 0.0;
};

/// Drops near-constant eigenfunctions (variation < ratio * max variation) and
/// returns the remaining one with the largest |mu| in model order.
inline MainEigenfunction select_main_eigenfunction(const KoopmanModel& model, double ratio = 1e-6) {
  MainEigenfunction out;
  const double vmax = model.variation.size() ? model.variation.maxCoeff() : 0.0;
  out.variation_threshold = ratio * vmax;
  std::optional<Eigen::Index> chosen;
  for (Eigen::Index k = 0; k < model.size(); ++k) {
    if (!(model.variation(k) >= out.variation_threshold) || vmax == 0.0) {
      out.excluded.push_back(k);
    } else if (!chosen) {
      chosen = k;
    }
  }
  if (!chosen) throw Error(ErrorCode::kAllExcluded, "every eigenfunction is numerically constant");
  out.function = model_eigenfunction(model, *chosen);
  return out;
}

// ---------------------------------------------------------------------------
// Level set

struct LevelSetOptions {
  int resolution = 201;
  double lo = 0.0;
  double hi = 1.0;
  bool simplex_mask = true;
  double saddle_tolerance_cells = 2.0;
};

struct LevelSetCurve {
  Eigen::Index eigenfunction_index = 0;
  double level = 0.0;
  Polyline boundary;                 // component passing nearest the saddle
  std::vector<Polyline> auxiliary;   // every other component
  int resolution = 0;
  double cell_size = 0.0;
  double saddle_distance = 0.0;      // saddle to nearest boundary vertex
};

/// Re phi on the grid; NaN outside the simplex when masked.
inline ScalarGrid eigenfunction_grid(const Dictionary& dict, const Eigenfunction& phi, const LevelSetOptions& opts,
                                     std::vector<double>* imaginary = nullptr) {
  ScalarGrid grid;
  grid.lo = opts.lo;
  grid.hi = opts.hi;
  grid.resolution = opts.resolution;
  const auto count = static_cast<std::size_t>(opts.resolution) * opts.resolution;
  grid.values.assign(count, std::numeric_limits<double>::quiet_NaN());
  if (imaginary) imaginary->assign(count, std::numeric_limits<double>::quiet_NaN());
  State x(2);
  for (int i = 0; i < opts.resolution; ++i) {
    for (int j = 0; j < opts.resolution; ++j) {
      const Eigen::Vector2d p = grid.node(i, j);
      if (opts.simplex_mask && p.x() + p.y() > 1.0 + 1e-12) continue;
      x << p.x(), p.y();
      const Complex v = phi(dict, x);
      const auto k = static_cast<std::size_t>(i) * opts.resolution + j;
      grid.values[k] = v.real();
      if (imaginary) (*imaginary)[k] = v.imag();
    }
  }
  return grid;
}

/// Level set {Re phi = Re phi(saddle)} by marching squares; the component
/// nearest the saddle is the boundary curve.
inline LevelSetCurve extract_level_set(const KoopmanModel& model, const Eigenfunction& phi, const State& saddle,
                                       const LevelSetOptions& opts = {}) {
  if (opts.resolution < 32) throw Error(ErrorCode::kInvalidParameter, "level-set resolution must be >= 32");
  if (saddle.size() != 2 || model.dictionary.state_dim() != 2) {
    throw Error(ErrorCode::kDimensionMismatch, "level-set extraction is two-dimensional");
  }
  LevelSetCurve curve;
  curve.eigenfunction_index = phi.index;
  curve.level = phi(model.dictionary, saddle).real();
  curve.resolution = opts.resolution;

  const ScalarGrid grid = eigenfunction_grid(model.dictionary, phi, opts);
  curve.cell_size = grid.spacing();
  double vmin = std::numeric_limits<double>::infinity();
  double vmax = -std::numeric_limits<double>::infinity();
  for (double v : grid.values) {
    if (std::isnan(v)) continue;
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  if (!(curve.level >= vmin && curve.level <= vmax)) {
    throw Error(ErrorCode::kEmptyLevelSet, "level " + std::to_string(curve.level) + " outside grid range [" +
                                               std::to_string(vmin) + ", " + std::to_string(vmax) + "]");
  }
  auto lines = marching_squares(grid, curve.level);
  if (lines.empty()) throw Error(ErrorCode::kEmptyLevelSet, "no contour at the saddle level");

  const Eigen::Vector2d s(saddle(0), saddle(1));
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < lines.size(); ++k) {
    for (const auto& p : lines[k].points) {
      const double d = (p - s).norm();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
  }
  curve.saddle_distance = best_d;
  if (best_d > opts.saddle_tolerance_cells * curve.cell_size) {
    throw Error(ErrorCode::kSaddleNotOnCurve, "nearest contour vertex is " + std::to_string(best_d) +
                                                  " from the saddle (limit " +
                                                  std::to_string(opts.saddle_tolerance_cells * curve.cell_size) + ")");
  }
  curve.boundary = std::move(lines[best]);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (k != best) curve.auxiliary.push_back(std::move(lines[k]));
  }
  return curve;
}

/// Minimum distance from x_s to the boundary polyline.
inline double robustness_margin(const LevelSetCurve& curve, const State& x_s) {
  if (curve.boundary.points.empty()) throw Error(ErrorCode::kEmptyLevelSet, "boundary curve is empty");
  return point_polyline_distance(Eigen::Vector2d(x_s(0), x_s(1)), curve.boundary);
}

// ---------------------------------------------------------------------------
// Forward-integration verification

struct VerificationOptions {
  IntegratorConfig integrator{};
  double match_tolerance = 1e-3;
  /// Unresolved trajectories keep integrating in chunks of
  /// integrator.horizon up to this total.
  double max_horizon = 2000.0;
};

/// Index into `attractors` of the point the trajectory from x settles on, or
/// -1 when none is within tolerance by max_horizon.
inline int settle(const StoichiometricNetwork& net, State x, const std::vector<State>& attractors,
                  const VerificationOptions& opts) {
  double elapsed = 0.0;
  while (elapsed < opts.max_horizon) {
    x = integrate(net, x, opts.integrator.horizon, opts.integrator);
    elapsed += opts.integrator.horizon;
    for (std::size_t k = 0; k < attractors.size(); ++k) {
      if ((x - attractors[k]).norm() < opts.match_tolerance) return static_cast<int>(k);
    }
  }
  return -1;
}

struct ClassifiedIC {
  State x;
  double offset = 0.0;  // Re phi(x) - level
  int side = 1;
  bool boundary_ambiguous = false;
  int predicted = -1;   // index into the stable equilibria, -1 for none
  int verified = -1;    // -1 when unresolved
  bool agree = false;
};

struct ICClassification {
  std::vector<ClassifiedIC> entries;
  std::vector<int> stable_side;  // side of each stable equilibrium
  int agreements = 0;
  int unresolved = 0;
  double agreement_rate = 0.0;   // agreements / total; unresolved count as disagreement
  double misclassification_rate = 0.0;
};

inline int side_of(double offset) { return offset >= 0.0 || std::abs(offset) < 1e-12 ? 1 : -1; }

/// Predicts each initial condition's attractor from its side of the level set
/// and checks it by integrating the true dynamics.
inline ICClassification classify_initial_conditions(const KoopmanModel& model, const LevelSetCurve& curve,
                                                    const Eigenfunction& phi, const std::vector<State>& stable,
                                                    const std::vector<State>& ics, const StoichiometricNetwork& net,
                                                    const VerificationOptions& opts = {}) {
  if (curve.boundary.points.empty()) throw Error(ErrorCode::kEmptyLevelSet, "boundary curve is empty");
  ICClassification out;
  for (const auto& s : stable) {
    const int side = side_of(phi(model.dictionary, s).real() - curve.level);
    if (std::find(out.stable_side.begin(), out.stable_side.end(), side) != out.stable_side.end()) {
      throw Error(ErrorCode::kSideAssignmentConflict, "two stable equilibria lie on the same side of the level set");
    }
    out.stable_side.push_back(side);
  }
  for (const auto& x : ics) {
    if (!in_reduced_simplex(x, 1e-12)) throw Error(ErrorCode::kInvalidParameter, "initial condition outside the simplex");
    ClassifiedIC c;
    c.x = x;
    c.offset = phi(model.dictionary, x).real() - curve.level;
    c.boundary_ambiguous = std::abs(c.offset) < 1e-12;
    c.side = side_of(c.offset);
    for (std::size_t k = 0; k < stable.size(); ++k) {
      if (out.stable_side[k] == c.side) c.predicted = static_cast<int>(k);
    }
    c.verified = settle(net, x, stable, opts);
    if (c.verified < 0) ++out.unresolved;
    c.agree = c.verified >= 0 && c.verified == c.predicted;
    if (c.agree) ++out.agreements;
    out.entries.push_back(std::move(c));
  }
  const auto total = static_cast<double>(out.entries.size());
  out.agreement_rate = total > 0 ? out.agreements / total : 0.0;
  out.misclassification_rate = total > 0 ? 1.0 - out.agreement_rate : 0.0;
  return out;
}

/// `per_side` uniform simplex samples on each side of the level set.
inline std::vector<State> sample_split_ics(const KoopmanModel& model, const Eigenfunction& phi, double level,
                                           int per_side, std::uint64_t seed, long max_draws = 2'000'000) {
  std::vector<State> positive;
  std::vector<State> negative;
  for (long k = 0; k < max_draws && (static_cast<int>(positive.size()) < per_side ||
                                     static_cast<int>(negative.size()) < per_side);
       ++k) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    State x = uniform_simplex_point(rng);
    auto& bucket = side_of(phi(model.dictionary, x).real() - level) > 0 ? positive : negative;
    if (static_cast<int>(bucket.size()) < per_side) bucket.push_back(std::move(x));
  }
  positive.insert(positive.end(), std::make_move_iterator(negative.begin()), std::make_move_iterator(negative.end()));
  return positive;
}

// ---------------------------------------------------------------------------
// Boundary validation

struct BoundaryCheckOptions {
  int samples = 40;
  double offset = 1e-3;          // normal perturbation delta
  double approach_radius = 0.05;
  double horizon = 200.0;
  double step = 0.015625;
  double record_interval = 0.125;
};

struct BoundaryCheck {
  int sampled = 0;
  int skipped = 0;           // perturbations leaving the domain
  int split = 0;             // perturbation pairs settling on different attractors
  int approach = 0;          // on-curve points passing near the saddle
  double sharpness = 0.0;
  double manifold_evidence = 0.0;
};

namespace detail {

/// Points at equal arc-length spacing along the polyline, with unit normals.
inline std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> arc_samples(const Polyline& line, int count) {
  std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> out;
  if (line.points.size() < 2 || count < 1) return out;
  std::vector<double> cum{0.0};
  for (std::size_t k = 1; k < line.points.size(); ++k) cum.push_back(cum.back() + (line.points[k] - line.points[k - 1]).norm());
  const double total = cum.back();
  std::size_t seg = 1;
  for (int s = 0; s < count; ++s) {
    const double target = total * (s + 0.5) / count;
    while (seg + 1 < cum.size() && cum[seg] < target) ++seg;
    const Eigen::Vector2d a = line.points[seg - 1];
    const Eigen::Vector2d b = line.points[seg];
    const double len = cum[seg] - cum[seg - 1];
    const double t = len > 0.0 ? (target - cum[seg - 1]) / len : 0.0;
    const Eigen::Vector2d tangent = len > 0.0 ? Eigen::Vector2d((b - a) / len) : Eigen::Vector2d(1.0, 0.0);
    out.emplace_back(a + t * (b - a), Eigen::Vector2d(-tangent.y(), tangent.x()));
  }
  return out;
}

}  // namespace detail

/// Perturbs curve samples by +-delta along the normal and reports how often
/// the two sides settle differently (sharpness), and how often the on-curve
/// trajectory passes near the saddle (stable-manifold evidence). `flow(x, t)`
/// advances a state, `label(x)` names the attractor of a settled state (-1 for
/// none), `valid(x)` tells whether a state may be integrated.
template <typename Flow, typename Label, typename Valid>
BoundaryCheck validate_boundary_with(Flow&& flow, Label&& label, Valid&& valid, const LevelSetCurve& curve,
                                     const State& saddle, const BoundaryCheckOptions& opts = {}) {
  BoundaryCheck out;
  const Eigen::Vector2d s(saddle(0), saddle(1));
  for (const auto& [p, normal] : detail::arc_samples(curve.boundary, opts.samples)) {
    State on(2), plus(2), minus(2);
    on << p.x(), p.y();
    plus << p.x() + opts.offset * normal.x(), p.y() + opts.offset * normal.y();
    minus << p.x() - opts.offset * normal.x(), p.y() - opts.offset * normal.y();
    if (!valid(plus) || !valid(minus) || !valid(on)) {
      ++out.skipped;
      continue;
    }
    ++out.sampled;
    const int lp = label(flow(plus, opts.horizon));
    const int lm = label(flow(minus, opts.horizon));
    if (lp != lm) ++out.split;

    const double start = (p - s).norm();
    double closest = start;
    State x = on;
    for (double t = 0.0; t < opts.horizon; t += opts.record_interval) {
      x = flow(x, opts.record_interval);
      closest = std::min(closest, (Eigen::Vector2d(x(0), x(1)) - s).norm());
    }
    if (closest < opts.approach_radius && closest < 0.5 * start) ++out.approach;
  }
  if (out.sampled > 0) {
    out.sharpness = static_cast<double>(out.split) / out.sampled;
    out.manifold_evidence = static_cast<double>(out.approach) / out.sampled;
  }
  return out;
}

/// validate_boundary_with for the MAK flow, labeling by nearest stable
/// equilibrium.
inline BoundaryCheck validate_boundary(const StoichiometricNetwork& net, const LevelSetCurve& curve,
                                       const State& saddle, const std::vector<State>& stable,
                                       const VerificationOptions& verify = {}, BoundaryCheckOptions opts = {}) {
  opts.step = verify.integrator.step;
  IntegratorConfig cfg = verify.integrator;
  const auto flow = [&](const State& x, double t) { return integrate(net, x, t, cfg); };
  const auto label = [&](const State& x) {
    // Continue slow trajectories until they settle or max_horizon runs out.
    VerificationOptions rest = verify;
    rest.max_horizon = std::max(0.0, verify.max_horizon - opts.horizon);
    for (std::size_t k = 0; k < stable.size(); ++k) {
      if ((x - stable[k]).norm() < verify.match_tolerance) return static_cast<int>(k);
    }
    return rest.max_horizon > 0.0 ? settle(net, x, stable, rest) : -1;
  };
  const auto valid = [](const State& x) { return in_reduced_simplex(x); };
  return validate_boundary_with(flow, label, valid, curve, saddle, opts);
}

// ---------------------------------------------------------------------------
// Pipeline

struct BasinConfig {
  FixedPointOptions fixed_points{};
  LevelSetOptions level_set{};
  VerificationOptions verify{};
  BoundaryCheckOptions boundary{};
  int ics_per_side = 70;
  std::uint64_t seed = 1;
  double variation_ratio = 1e-6;
};

struct BasinReport {
  std::vector<EquilibriumReport> equilibria;
  int local_minima = 0;
  int rejected_by_polish = 0;
  std::size_t saddle = 0;                // index into equilibria
  std::vector<std::size_t> stable;       // indices into equilibria
  std::size_t designated = 0;            // x_s, index into equilibria
  MainEigenfunction main;
  LevelSetCurve boundary;
  ICClassification classified;
  double margin = 0.0;
  BoundaryCheck theorem_check;
};

/// x_s: the stable focus when there is one, otherwise the first stable point.
inline std::size_t designated_stable(const std::vector<EquilibriumReport>& eqs, const std::vector<std::size_t>& stable) {
  for (auto k : stable) {
    if (eqs[k].cls == EquilibriumClass::kStableFocus) return k;
  }
  return stable.front();
}

/// find_fixed_points -> classify -> main eigenfunction -> level set ->
/// initial-condition split and verification -> margin -> boundary check.
inline BasinReport run_basin_pipeline(const KoopmanModel& model, const StoichiometricNetwork& net,
                                      const BasinConfig& cfg = {}) {
  BasinReport rep;
  FixedPointOptions fp = cfg.fixed_points;
  fp.seed = cfg.seed;
  auto search = find_fixed_points(model, fp, &net);
  rep.local_minima = search.local_minima;
  rep.rejected_by_polish = search.rejected_by_polish;
  rep.equilibria = std::move(search.points);
  std::optional<std::size_t> saddle;
  for (std::size_t k = 0; k < rep.equilibria.size(); ++k) {
    classify_in_place(net, rep.equilibria[k]);
    if (rep.equilibria[k].role == EquilibriumRole::kSaddle && !saddle) saddle = k;
    if (rep.equilibria[k].role == EquilibriumRole::kStable) rep.stable.push_back(k);
  }
  if (!saddle) throw Error(ErrorCode::kNoSaddle, "no saddle among the located equilibria");
  if (rep.stable.empty()) throw Error(ErrorCode::kNoSaddle, "no asymptotically stable equilibrium was located");
  rep.saddle = *saddle;
  rep.designated = designated_stable(rep.equilibria, rep.stable);

  rep.main = select_main_eigenfunction(model, cfg.variation_ratio);
  const State& xs = rep.equilibria[rep.saddle].location;
  rep.boundary = extract_level_set(model, rep.main.function, xs, cfg.level_set);
  rep.margin = robustness_margin(rep.boundary, rep.equilibria[rep.designated].location);

  std::vector<State> stable_points;
  for (auto k : rep.stable) stable_points.push_back(rep.equilibria[k].location);
  const auto ics = sample_split_ics(model, rep.main.function, rep.boundary.level, cfg.ics_per_side, cfg.seed);
  rep.classified =
      classify_initial_conditions(model, rep.boundary, rep.main.function, stable_points, ics, net, cfg.verify);
  rep.theorem_check = validate_boundary(net, rep.boundary, xs, stable_points, cfg.verify, cfg.boundary);
  return rep;
}

}  // namespace makbasin
