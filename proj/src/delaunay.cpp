#include "stsc/delaunay.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <boost/multiprecision/cpp_int.hpp>

#include "stsc/error.hpp"

namespace stsc {

namespace {

using Rational = boost::multiprecision::cpp_rational;

constexpr double kEps = std::numeric_limits<double>::epsilon() / 2;  // 2^-53
constexpr double kOrientBound = (3.0 + 16.0 * kEps) * kEps;
constexpr double kInCircleBound = (10.0 + 96.0 * kEps) * kEps;

template <typename T>
int sign_of(const T& v) {
  return v > 0 ? 1 : (v < 0 ? -1 : 0);
}

int orient_exact(const Point2& a, const Point2& b, const Point2& c) {
  Rational ax(a.x), ay(a.y), bx(b.x), by(b.y), cx(c.x), cy(c.y);
  return sign_of((bx - ax) * (cy - ay) - (by - ay) * (cx - ax));
}

int incircle_exact(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  Rational dx(d.x), dy(d.y);
  Rational adx = Rational(a.x) - dx, ady = Rational(a.y) - dy;
  Rational bdx = Rational(b.x) - dx, bdy = Rational(b.y) - dy;
  Rational cdx = Rational(c.x) - dx, cdy = Rational(c.y) - dy;
  Rational det = (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) +
                 (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy) +
                 (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
  return sign_of(det);
}

constexpr int kInfinite = -1;

// Triangle over point indices, counter-clockwise; a ghost triangle keeps
// the vertex at infinity in the last slot.
using Tri = std::array<int, 3>;

class Triangulator {
 public:
  explicit Triangulator(std::span<const Point2> pts) : pts_(pts) {}

  void run(const std::vector<int>& order) {
    int p0 = order[0], p1 = order[1];
    std::size_t third = 2;
    int o = 0;
    for (; third < order.size(); ++third) {
      o = orient2d(pts_[p0], pts_[p1], pts_[order[third]]);
      if (o != 0) break;
    }
    if (third == order.size())
      fail(ErrorCode::degenerate_geometry, "all points are collinear");
    int p2 = order[third];
    if (o < 0) std::swap(p0, p1);
    tris_ = {{p0, p1, p2}, {p1, p0, kInfinite}, {p2, p1, kInfinite}, {p0, p2, kInfinite}};
    for (std::size_t i = 2; i < order.size(); ++i)
      if (i != third) insert(order[i]);
  }

  std::vector<Tri> finite() const {
    std::vector<Tri> out;
    for (const auto& t : tris_)
      if (t[2] != kInfinite) out.push_back(t);
    return out;
  }

 private:
  bool in_conflict(const Tri& t, int x) const {
    const Point2& p = pts_[x];
    if (t[2] != kInfinite) return incircle(pts_[t[0]], pts_[t[1]], pts_[t[2]], p) > 0;
    const Point2& a = pts_[t[0]];
    const Point2& b = pts_[t[1]];
    int o = orient2d(a, b, p);
    if (o != 0) return o > 0;
    // Collinear with the hull edge: conflict only inside the open segment.
    return std::min(a, b) < p && p < std::max(a, b);
  }

  void insert(int x) {
    std::vector<Tri> keep, cavity;
    keep.reserve(tris_.size() + 4);
    for (const auto& t : tris_) (in_conflict(t, x) ? cavity : keep).push_back(t);
    if (cavity.empty())
      fail(ErrorCode::internal_error, "Delaunay insertion found an empty cavity");

    std::map<std::pair<int, int>, int> directed;
    for (const auto& t : cavity)
      for (int i = 0; i < 3; ++i) ++directed[{t[i], t[(i + 1) % 3]}];
    for (const auto& [edge, n] : directed) {
      auto [u, v] = edge;
      if (directed.count({v, u})) continue;
      if (u == kInfinite) keep.push_back({v, x, kInfinite});
      else if (v == kInfinite) keep.push_back({x, u, kInfinite});
      else keep.push_back({u, v, x});
    }
    tris_ = std::move(keep);
  }

  std::span<const Point2> pts_;
  std::vector<Tri> tris_;
};

// Flip every cocircular interior edge to the lexicographically smaller
// diagonal (compared by vertex id) until none is left. Each flip strictly
// decreases the sorted edge list, so the loop terminates.
void canonicalize_cocircular(std::vector<Tri>& tris, std::span<const Point2> pts,
                             std::span<const VertexId> ids) {
  auto key = [&](int a, int b) {
    return std::pair{std::min(ids[a], ids[b]), std::max(ids[a], ids[b])};
  };
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<std::pair<int, int>, std::size_t> owner;
    for (std::size_t t = 0; t < tris.size(); ++t)
      for (int i = 0; i < 3; ++i) owner[{tris[t][i], tris[t][(i + 1) % 3]}] = t;
    for (std::size_t t = 0; t < tris.size() && !changed; ++t) {
      for (int i = 0; i < 3 && !changed; ++i) {
        int a = tris[t][i], b = tris[t][(i + 1) % 3], c = tris[t][(i + 2) % 3];
        auto it = owner.find({b, a});
        if (it == owner.end()) continue;
        const Tri& other = tris[it->second];
        int d = other[0] + other[1] + other[2] - a - b;
        if (incircle(pts[a], pts[b], pts[c], pts[d]) != 0) continue;
        if (!(key(c, d) < key(a, b))) continue;
        std::size_t u = it->second;
        tris[t] = {a, d, c};
        tris[u] = {d, b, c};
        changed = true;
      }
    }
  }
}

}  // namespace

int orient2d(const Point2& a, const Point2& b, const Point2& c) {
  double left = (b.x - a.x) * (c.y - a.y);
  double right = (b.y - a.y) * (c.x - a.x);
  double det = left - right;
  double bound = kOrientBound * (std::abs(left) + std::abs(right));
  if (det > bound || -det > bound) return sign_of(det);
  return orient_exact(a, b, c);
}

int incircle(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  double adx = a.x - d.x, ady = a.y - d.y;
  double bdx = b.x - d.x, bdy = b.y - d.y;
  double cdx = c.x - d.x, cdy = c.y - d.y;
  double bc = bdx * cdy - cdx * bdy;
  double ca = cdx * ady - adx * cdy;
  double ab = adx * bdy - bdx * ady;
  double alift = adx * adx + ady * ady;
  double blift = bdx * bdx + bdy * bdy;
  double clift = cdx * cdx + cdy * cdy;
  double det = alift * bc + blift * ca + clift * ab;
  double permanent = alift * (std::abs(bdx * cdy) + std::abs(cdx * bdy)) +
                     blift * (std::abs(cdx * ady) + std::abs(adx * cdy)) +
                     clift * (std::abs(adx * bdy) + std::abs(bdx * ady));
  double bound = kInCircleBound * permanent;
  if (det > bound || -det > bound) return sign_of(det);
  return incircle_exact(a, b, c, d);
}

SimplicialComplex delaunay(std::span<const Point2> points, std::span<const VertexId> ids) {
  const std::size_t n = points.size();
  if (n < 3)
    fail(ErrorCode::degenerate_geometry,
         "Delaunay triangulation needs at least 3 points, got " + std::to_string(n));
  std::vector<VertexId> id_store;
  if (ids.empty()) {
    id_store.resize(n);
    std::iota(id_store.begin(), id_store.end(), VertexId{0});
    ids = id_store;
  }
  require(ids.size() == n, ErrorCode::invalid_input, "point and id counts differ");
  for (std::size_t i = 0; i < n; ++i) {
    require(std::isfinite(points[i].x) && std::isfinite(points[i].y),
            ErrorCode::invalid_input, "non-finite coordinate for point " + std::to_string(ids[i]));
    require(ids[i] >= 0, ErrorCode::invalid_input, "negative point id");
  }
  {
    std::vector<VertexId> sorted_ids(ids.begin(), ids.end());
    std::sort(sorted_ids.begin(), sorted_ids.end());
    require(std::adjacent_find(sorted_ids.begin(), sorted_ids.end()) == sorted_ids.end(),
            ErrorCode::invalid_input, "duplicate point id");
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return points[a] < points[b]; });
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (points[order[i]] == points[order[i + 1]])
      fail(ErrorCode::invalid_input,
           "duplicate point (" + std::to_string(points[order[i]].x) + ", " +
               std::to_string(points[order[i]].y) + ")");

  Triangulator tri(points);
  tri.run(order);
  auto tris = tri.finite();
  canonicalize_cocircular(tris, points, ids);

  std::vector<Triangle> triangles;
  std::vector<Edge> edges;
  for (const auto& t : tris) {
    Triangle s{ids[t[0]], ids[t[1]], ids[t[2]]};
    std::sort(s.begin(), s.end());
    triangles.push_back(s);
    edges.push_back({s[0], s[1]});
    edges.push_back({s[0], s[2]});
    edges.push_back({s[1], s[2]});
  }
  std::sort(triangles.begin(), triangles.end());
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  std::vector<VertexId> verts(ids.begin(), ids.end());
  std::sort(verts.begin(), verts.end());
  return SimplicialComplex::from_lists(std::move(verts), std::move(edges),
                                       std::move(triangles));
}

}  // namespace stsc
