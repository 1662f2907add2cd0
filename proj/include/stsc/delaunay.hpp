#pragma once

#include <span>

#include "stsc/complex.hpp"

namespace stsc {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  auto operator<=>(const Point2&) const = default;
};

/// Exact sign of the orientation determinant: +1 when c lies to the left of
/// the directed line a->b, -1 to the right, 0 when collinear.
int orient2d(const Point2& a, const Point2& b, const Point2& c);

/// Exact sign of the in-circle determinant for a counter-clockwise triangle
/// (a, b, c): +1 when d is strictly inside its circumcircle, 0 on it.
/// Evaluated in floating point with a forward error bound and redone in exact
/// rational arithmetic when the bound cannot certify the sign.
int incircle(const Point2& a, const Point2& b, const Point2& c, const Point2& d);

/// Delaunay triangulation of a planar point set, returned as a 2-order
/// complex over the given ids (default 0..n-1, in input order).
///
/// Incremental Bowyer-Watson with a symbolic vertex at infinity. Points that
/// lie exactly on a circumcircle are not in conflict; afterwards every edge
/// whose quadrilateral is cocircular is flipped to the lexicographically
/// smaller diagonal, which makes the output independent of insertion order.
///
/// Throws DegenerateGeometry for fewer than 3 points or an all-collinear set,
/// InvalidInput for duplicate points, duplicate ids or non-finite coordinates.
SimplicialComplex delaunay(std::span<const Point2> points,
                           std::span<const VertexId> ids = {});

}  // namespace stsc
