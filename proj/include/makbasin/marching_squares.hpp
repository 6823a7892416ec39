#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace makbasin {

/// Node values on a uniform res x res grid over [lo, hi]^2. Node (i, j) sits at
/// (lo + i h, lo + j h); NaN marks nodes outside the domain.
struct ScalarGrid {
  double lo = 0.0;
  double hi = 1.0;
  int resolution = 0;
  std::vector<double> values;  // values[i * resolution + j]

  double spacing() const { return (hi - lo) / (resolution - 1); }
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * resolution + j]; }
  Eigen::Vector2d node(int i, int j) const { return {lo + i * spacing(), lo + j * spacing()}; }
};

struct Polyline {
  std::vector<Eigen::Vector2d> points;
  bool closed = false;
};

namespace detail {

// Edge ids: 2 * node + 0 for the edge (i, j)-(i+1, j), 2 * node + 1 for (i, j)-(i, j+1).
inline std::int64_t horizontal_edge(int i, int j, int res) { return 2 * (static_cast<std::int64_t>(i) * res + j); }
inline std::int64_t vertical_edge(int i, int j, int res) { return 2 * (static_cast<std::int64_t>(i) * res + j) + 1; }

}  // namespace detail

/// Contours of `grid` at `level` with linear edge interpolation, chained into
/// polylines. Cells touching a NaN node are skipped. Nodes with value >= level
/// count as above; saddle cells are disambiguated by the mean of the corners.
inline std::vector<Polyline> marching_squares(const ScalarGrid& grid, double level) {
  const int res = grid.resolution;
  std::unordered_map<std::int64_t, Eigen::Vector2d> vertex;
  std::vector<std::pair<std::int64_t, std::int64_t>> segments;

  const auto crossing = [&](std::int64_t id, int i0, int j0, int i1, int j1) {
    if (vertex.count(id)) return;
    const double v0 = grid.at(i0, j0);
    const double v1 = grid.at(i1, j1);
    const double t = (level - v0) / (v1 - v0);
    vertex.emplace(id, grid.node(i0, j0) + t * (grid.node(i1, j1) - grid.node(i0, j0)));
  };

  for (int i = 0; i + 1 < res; ++i) {
    for (int j = 0; j + 1 < res; ++j) {
      const double c0 = grid.at(i, j);
      const double c1 = grid.at(i + 1, j);
      const double c2 = grid.at(i + 1, j + 1);
      const double c3 = grid.at(i, j + 1);
      if (std::isnan(c0) || std::isnan(c1) || std::isnan(c2) || std::isnan(c3)) continue;
      const int code = (c0 >= level) | ((c1 >= level) << 1) | ((c2 >= level) << 2) | ((c3 >= level) << 3);
      if (code == 0 || code == 15) continue;

      const std::int64_t e[4] = {detail::horizontal_edge(i, j, res), detail::vertical_edge(i + 1, j, res),
                                 detail::horizontal_edge(i, j + 1, res), detail::vertical_edge(i, j, res)};
      const auto touch = [&](int k) {
        switch (k) {
          case 0: crossing(e[0], i, j, i + 1, j); break;
          case 1: crossing(e[1], i + 1, j, i + 1, j + 1); break;
          case 2: crossing(e[2], i, j + 1, i + 1, j + 1); break;
          default: crossing(e[3], i, j, i, j + 1); break;
        }
      };
      const auto add = [&](int a, int b) {
        touch(a);
        touch(b);
        segments.emplace_back(e[a], e[b]);
      };
      const bool center_above = 0.25 * (c0 + c1 + c2 + c3) >= level;
      switch (code) {
        case 1: case 14: add(3, 0); break;
        case 2: case 13: add(0, 1); break;
        case 3: case 12: add(3, 1); break;
        case 4: case 11: add(1, 2); break;
        case 6: case 9: add(0, 2); break;
        case 7: case 8: add(3, 2); break;
        case 5:
          if (center_above) { add(0, 1); add(2, 3); } else { add(3, 0); add(1, 2); }
          break;
        case 10:
          if (center_above) { add(3, 0); add(1, 2); } else { add(0, 1); add(2, 3); }
          break;
        default: break;
      }
    }
  }

  std::unordered_map<std::int64_t, std::vector<std::size_t>> incident;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    incident[segments[s].first].push_back(s);
    incident[segments[s].second].push_back(s);
  }
  std::vector<bool> used(segments.size(), false);

  const auto walk = [&](std::size_t first, std::int64_t start) {
    Polyline line;
    line.points.push_back(vertex.at(start));
    std::int64_t at = start;
    std::size_t seg = first;
    while (true) {
      used[seg] = true;
      const std::int64_t next = segments[seg].first == at ? segments[seg].second : segments[seg].first;
      line.points.push_back(vertex.at(next));
      at = next;
      std::size_t follow = std::numeric_limits<std::size_t>::max();
      for (auto cand : incident[at]) {
        if (!used[cand]) {
          follow = cand;
          break;
        }
      }
      if (follow == std::numeric_limits<std::size_t>::max()) break;
      seg = follow;
    }
    if (line.points.size() > 2 && at == start) {
      line.closed = true;
      line.points.pop_back();
    }
    return line;
  };

  std::vector<Polyline> out;
  // Open chains start at an end point so they come out whole.
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (used[s]) continue;
    for (auto end : {segments[s].first, segments[s].second}) {
      if (incident[end].size() == 1) {
        out.push_back(walk(s, end));
        break;
      }
    }
  }
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (!used[s]) out.push_back(walk(s, segments[s].first));
  }
  return out;
}

/// Smallest distance from p to the segment [a, b].
inline double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

inline double point_polyline_distance(const Eigen::Vector2d& p, const Polyline& line) {
  if (line.points.empty()) return std::numeric_limits<double>::infinity();
  if (line.points.size() == 1) return (p - line.points.front()).norm();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < line.points.size(); ++k) {
    best = std::min(best, point_segment_distance(p, line.points[k], line.points[k + 1]));
  }
  if (line.closed) best = std::min(best, point_segment_distance(p, line.points.back(), line.points.front()));
  return best;
}

/// Symmetric Hausdorff distance between two polylines (vertex-to-segment).
inline double hausdorff_distance(const Polyline& a, const Polyline& b) {
  double d = 0.0;
  for (const auto& p : a.points) d = std::max(d, point_polyline_distance(p, b));
  for (const auto& p : b.points) d = std::max(d, point_polyline_distance(p, a));
  return d;
}

}  // namespace makbasin
