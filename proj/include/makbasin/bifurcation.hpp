#pragma once

// Equilibrium branches of the replicator along the in/out-flow g, their
// linearization, existence interval and Hopf crossings.

#include <cmath>
#include <optional>
#include <vector>

#include "makbasin/basin.hpp"
#include "makbasin/error.hpp"
#include "makbasin/mak.hpp"

namespace makbasin {

struct SweepRow {
  double g = 0.0;
  int branch = 0;  // 0 trivial, 1 low-x2, 2 high-x2
  State x;         // (x1, x2, x3)
  Eigen::VectorXcd eigenvalues;
  EquilibriumClass cls = EquilibriumClass::kCenterMarginal;
};

struct HopfCrossing {
  double g = 0.0;
  int branch = 0;
  double frequency = 0.0;  // |Im lambda| at the crossing
  bool stable_below = false;
};

struct BifurcationSweep {
  std::vector<SweepRow> rows;
  std::optional<std::pair<double, double>> existence;  // bisected endpoints inside the range
  std::optional<double> existence_lo;
  std::optional<double> existence_hi;
  std::vector<HopfCrossing> hopf;
};

/// Equilibria with reduced-Jacobian spectra at one g.
inline std::vector<SweepRow> equilibrium_rows(ReplicatorParams params) {
  const auto net = build_replicator_network(params, ReplicatorForm::kReduced);
  std::vector<SweepRow> out;
  const auto eqs = analytic_equilibria(params);
  for (std::size_t b = 0; b < eqs.size(); ++b) {
    SweepRow row;
    row.g = params.g;
    row.branch = static_cast<int>(b);
    row.x = eqs[b];
    row.eigenvalues = jacobian_spectrum(net, reduce_state(eqs[b]));
    row.cls = classify_spectrum(row.eigenvalues);
    out.push_back(std::move(row));
  }
  return out;
}

namespace detail {

inline double radicand(double k1, double k2, double g) { return gamma(k1, k2, g).radicand; }

/// Bisection of a sign change of f on [lo, hi] down to width tol.
template <typename F>
double bisect(F&& f, double lo, double hi, double tol) {
  const bool lo_sign = f(lo) > 0.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) > 0.0) == lo_sign) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Trace of the reduced Jacobian on the high-x2 branch (the real part of a
/// complex pair is half of it).
inline double high_branch_trace(ReplicatorParams p) {
  const auto eqs = analytic_equilibria(p);
  if (eqs.size() < 3) return std::numeric_limits<double>::quiet_NaN();
  const auto net = build_replicator_network(p, ReplicatorForm::kReduced);
  return mak_jacobian(net, reduce_state(eqs[2])).trace();
}

}  // namespace detail

/// Evaluates `steps` evenly spaced g in [g_min, g_max] (ends included).
/// Existence endpoints and Hopf points found between grid nodes are refined
/// by bisection to `tol` in g.
inline BifurcationSweep bifurcation_sweep(ReplicatorParams base, double g_min, double g_max, int steps,
                                          double tol = 1e-9) {
  if (!(g_min > 0.0) || !(g_max > g_min)) {
    throw Error(ErrorCode::kInvalidParameter, "need 0 < g_min < g_max");
  }
  if (steps < 2) throw Error(ErrorCode::kInvalidParameter, "steps must be >= 2");
  BifurcationSweep out;
  const double k1 = base.k1;
  const double k2 = base.k2;
  std::vector<double> grid(static_cast<std::size_t>(steps));
  for (int s = 0; s < steps; ++s) grid[static_cast<std::size_t>(s)] = g_min + (g_max - g_min) * s / (steps - 1);

  for (double g : grid) {
    base.g = g;
    for (auto& row : equilibrium_rows(base)) out.rows.push_back(std::move(row));
  }

  const auto exists = [&](double g) { return detail::radicand(k1, k2, g) >= 0.0; };
  for (std::size_t s = 0; s + 1 < grid.size(); ++s) {
    const double a = grid[s];
    const double b = grid[s + 1];
    if (exists(a) == exists(b)) continue;
    const double root = detail::bisect([&](double g) { return detail::radicand(k1, k2, g); }, a, b, tol);
    (exists(b) ? out.existence_lo : out.existence_hi) = root;
  }
  if (out.existence_lo && out.existence_hi) out.existence = std::make_pair(*out.existence_lo, *out.existence_hi);

  const auto trace = [&](double g) {
    ReplicatorParams p = base;
    p.g = g;
    return detail::high_branch_trace(p);
  };
  for (std::size_t s = 0; s + 1 < grid.size(); ++s) {
    const double ta = trace(grid[s]);
    const double tb = trace(grid[s + 1]);
    if (std::isnan(ta) || std::isnan(tb) || (ta > 0.0) == (tb > 0.0)) continue;
    HopfCrossing h;
    h.branch = 2;
    h.g = detail::bisect(trace, grid[s], grid[s + 1], tol);
    ReplicatorParams p = base;
    p.g = h.g;
    const auto eqs = analytic_equilibria(p);
    const auto net = build_replicator_network(p, ReplicatorForm::kReduced);
    const Eigen::Matrix2d jac = mak_jacobian(net, reduce_state(eqs[2]));
    // Purely imaginary pair needs det > 0 at zero trace.
    const double det = jac.determinant();
    if (!(det > 0.0)) continue;
    h.frequency = std::sqrt(det);
    h.stable_below = ta < 0.0;
    out.hopf.push_back(h);
  }
  return out;
}

}  // namespace makbasin
