#pragma once

// Shared fixtures and brute-force oracles for the test suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "stsc/complex.hpp"
#include "stsc/delaunay.hpp"
#include "stsc/rng.hpp"

namespace stsc::testing {

/// The four-vertex example: filled triangle {1,2,3} plus the edge {2,4}.
inline SimplicialComplex fig1() {
  const std::vector<Edge> edges{{1, 2}, {1, 3}, {2, 3}, {2, 4}};
  return SimplicialComplex::from_edges(edges, true);
}

/// Erdos-Renyi graph on vertices 0..n-1.
inline std::vector<Edge> random_graph(std::size_t n, double p, std::uint64_t seed) {
  StreamRng rng(seed);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.uniform() < p) edges.push_back({VertexId(i), VertexId(j)});
  return edges;
}

/// Every vertex triple whose three edges are all present.
inline std::vector<Triangle> brute_force_triangles(const std::vector<Edge>& edges) {
  std::set<std::pair<VertexId, VertexId>> es;
  std::set<VertexId> vs;
  for (auto e : edges) {
    es.insert({std::min(e[0], e[1]), std::max(e[0], e[1])});
    vs.insert(e[0]);
    vs.insert(e[1]);
  }
  const std::vector<VertexId> v(vs.begin(), vs.end());
  std::vector<Triangle> out;
  for (std::size_t a = 0; a < v.size(); ++a)
    for (std::size_t b = a + 1; b < v.size(); ++b)
      for (std::size_t c = b + 1; c < v.size(); ++c)
        if (es.count({v[a], v[b]}) && es.count({v[a], v[c]}) && es.count({v[b], v[c]}))
          out.push_back({v[a], v[b], v[c]});
  return out;
}

inline std::vector<Point2> random_points(std::size_t n, std::uint64_t seed, double scale = 100.0) {
  StreamRng rng(seed);
  std::vector<Point2> pts;
  std::set<std::pair<double, double>> seen;
  while (pts.size() < n) {
    Point2 p{std::floor(rng.uniform() * scale), std::floor(rng.uniform() * scale)};
    if (seen.insert({p.x, p.y}).second) pts.push_back(p);
  }
  return pts;
}

/// Brute-force Delaunay: a triple is a triangle iff it is not collinear and
/// no other point lies strictly inside its circumcircle. Exact on the
/// integer coordinates produced by random_points.
inline std::vector<Triangle> brute_force_delaunay(const std::vector<Point2>& pts) {
  auto orient = [](Point2 a, Point2 b, Point2 c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  };
  // Integer coordinates below 2^10 keep the 4x4 determinant below 2^53.
  auto incircle = [](Point2 a, Point2 b, Point2 c, Point2 d) {
    const long double adx = a.x - d.x, ady = a.y - d.y, bdx = b.x - d.x, bdy = b.y - d.y;
    const long double cdx = c.x - d.x, cdy = c.y - d.y;
    const long double ad = adx * adx + ady * ady, bd = bdx * bdx + bdy * bdy, cd = cdx * cdx + cdy * cdy;
    return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
  };
  std::vector<Triangle> out;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) {
        Point2 a = pts[i], b = pts[j], c = pts[k];
        const double o = orient(a, b, c);
        if (o == 0) continue;
        if (o < 0) std::swap(b, c);
        bool empty = true;
        for (std::size_t m = 0; m < n && empty; ++m)
          if (m != i && m != j && m != k && incircle(a, b, c, pts[m]) > 0) empty = false;
        if (empty) out.push_back({VertexId(i), VertexId(j), VertexId(k)});
      }
  return out;
}

/// True if some four points are cocircular (brute force).
inline bool has_cocircular_quad(const std::vector<Point2>& pts) {
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) {
        if (orient2d(pts[i], pts[j], pts[k]) == 0) continue;
        for (std::size_t m = k + 1; m < n; ++m)
          if (incircle(pts[i], pts[j], pts[k], pts[m]) == 0) return true;
      }
  return false;
}

}  // namespace stsc::testing
