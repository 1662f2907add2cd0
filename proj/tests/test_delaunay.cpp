#include <doctest.h>

#include "stsc/delaunay.hpp"
#include "stsc/error.hpp"
#include "support/fixtures.hpp"

using namespace stsc;

namespace {

ErrorCode code_of(const std::vector<Point2>& pts) {
  try {
    (void)delaunay(pts);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::internal_error;
}

}  // namespace

TEST_CASE("three points give one triangle") {
  const std::vector<Point2> pts{{0, 0}, {2, 0}, {0, 1}};
  const auto c = delaunay(pts);
  CHECK(c.counts() == std::array<std::size_t, 3>{3, 3, 1});
}

TEST_CASE("unit square takes the lexicographically smaller diagonal") {
  const std::vector<Point2> pts{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  const auto c = delaunay(pts);
  CHECK(c.count(2) == 2);
  CHECK(c.count(1) == 5);
  // Diagonals are {0,3} and {1,2}; {0,3} sorts first.
  CHECK(c.find_edge(0, 3).has_value());
  CHECK_FALSE(c.find_edge(1, 2).has_value());

  // Same answer whatever the insertion order.
  const std::vector<Point2> rev{{1, 1}, {0, 1}, {1, 0}, {0, 0}};
  const std::vector<VertexId> ids{3, 2, 1, 0};
  CHECK(delaunay(rev, ids).triangles() == c.triangles());
}

TEST_CASE("custom ids label the output") {
  const std::vector<Point2> pts{{0, 0}, {2, 0}, {0, 1}};
  const std::vector<VertexId> ids{10, 20, 30};
  CHECK(delaunay(pts, ids).triangles().front() == Triangle{10, 20, 30});
}

TEST_CASE("degenerate inputs are rejected") {
  CHECK(code_of({{0, 0}, {1, 1}}) == ErrorCode::degenerate_geometry);
  CHECK(code_of({{0, 0}, {1, 1}, {2, 2}, {5, 5}}) == ErrorCode::degenerate_geometry);
  CHECK(code_of({{0, 0}, {1, 0}, {0, 1}, {1, 0}}) == ErrorCode::invalid_input);
  CHECK(code_of({{0, 0}, {1, 0}, {0, std::nan("")}}) == ErrorCode::invalid_input);
}

TEST_CASE("exact predicates on near-degenerate input") {
  // Points on a line up to one ulp; the filter must fall back to exact arithmetic.
  const Point2 a{0.5, 0.5}, b{12.0, 12.0}, c{24.0, 24.0};
  CHECK(orient2d(a, b, c) == 0);
  const Point2 d{0.5, std::nextafter(0.5, 1.0)};
  CHECK(orient2d(d, b, c) == 1);
  // Cocircular: unit-square corners.
  CHECK(incircle({0, 0}, {1, 0}, {1, 1}, {0, 1}) == 0);
  CHECK(incircle({0, 0}, {1, 0}, {1, 1}, {0.5, 0.5}) == 1);
  CHECK(incircle({0, 0}, {1, 0}, {1, 1}, {2, 2}) == -1);
}

TEST_CASE("random point sets satisfy the empty-circumcircle property") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pts = testing::random_points(10 + seed * 2, seed);
    const auto c = delaunay(pts);
    CHECK(validate(c).empty());
    for (const auto& t : c.triangles()) {
      Point2 a = pts[t[0]], b = pts[t[1]], d = pts[t[2]];
      if (orient2d(a, b, d) < 0) std::swap(b, d);
      REQUIRE(orient2d(a, b, d) > 0);
      for (std::size_t m = 0; m < pts.size(); ++m) {
        if (VertexId(m) == t[0] || VertexId(m) == t[1] || VertexId(m) == t[2]) continue;
        CHECK(incircle(a, b, d, pts[m]) <= 0);
      }
    }
    if (!testing::has_cocircular_quad(pts)) CHECK(c.triangles() == testing::brute_force_delaunay(pts));
  }
}

TEST_CASE("grid input (many cocircular quads) stays valid and deterministic") {
  std::vector<Point2> pts;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) pts.push_back({double(i), double(j)});
  const auto c = delaunay(pts);
  CHECK(c.count(2) == 32);
  CHECK(validate(c).empty());
  std::vector<Point2> rev(pts.rbegin(), pts.rend());
  std::vector<VertexId> ids;
  for (int k = 24; k >= 0; --k) ids.push_back(k);
  CHECK(delaunay(rev, ids).triangles() == c.triangles());
}
