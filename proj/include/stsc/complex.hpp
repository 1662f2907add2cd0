#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stsc {

using VertexId = std::int64_t;
using Edge = std::array<VertexId, 2>;
using Triangle = std::array<VertexId, 3>;

/// Complexes stop at triangles.
inline constexpr int kMaxOrder = 2;

/// A simplex addressed by its order and its rank in that order's sorted list.
struct SimplexId {
  int order = 0;
  std::size_t index = 0;

  auto operator<=>(const SimplexId&) const = default;
};

enum class Relation { boundary, coboundary, lower, upper };

Relation parse_relation(const std::string& name);

/// A 2-order simplicial complex. Vertices, edges and triangles are kept in
/// lexicographic order with ascending vertex ids inside each simplex; that
/// order is the canonical simplex index and fixes the reference orientation.
///
/// Objects are immutable once built.
class SimplicialComplex {
 public:
  SimplicialComplex() = default;

  /// Stores the lists verbatim, without normalising them. Use validate() to
  /// check the invariants; the other members assume a valid complex.
  static SimplicialComplex from_lists(std::vector<VertexId> vertices,
                                      std::vector<Edge> edges,
                                      std::vector<Triangle> triangles);

  /// Deduplicates the edge list (either endpoint order is accepted) and, when
  /// `lift` is set, adds every 3-clique as a triangle. Extra isolated
  /// vertices may be supplied.
  static SimplicialComplex from_edges(std::span<const Edge> edges, bool lift,
                                      std::span<const VertexId> extra_vertices = {});

  const std::vector<VertexId>& vertices() const noexcept { return vertices_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<Triangle>& triangles() const noexcept { return triangles_; }

  std::size_t count(int order) const;
  std::array<std::size_t, 3> counts() const noexcept {
    return {vertices_.size(), edges_.size(), triangles_.size()};
  }
  /// N0 + N1 + N2.
  std::size_t size() const noexcept {
    return vertices_.size() + edges_.size() + triangles_.size();
  }

  /// Global layout: vertices, then edges, then triangles.
  std::size_t global_index(SimplexId s) const;
  SimplexId from_global(std::size_t g) const;
  bool contains(SimplexId s) const noexcept;

  std::optional<std::size_t> find_vertex(VertexId v) const;
  std::optional<std::size_t> find_edge(VertexId a, VertexId b) const;
  std::optional<std::size_t> find_triangle(VertexId a, VertexId b, VertexId c) const;

  /// Vertex ids of a simplex in canonical order.
  std::vector<VertexId> vertex_set(SimplexId s) const;

  /// Sorted neighbour set of `s` under one of the four relations. Boundary of
  /// a vertex and coboundary of a triangle are empty.
  std::vector<SimplexId> neighbors(SimplexId s, Relation relation) const;

  /// Indices (into the order k-1 list) of the faces of a k-simplex.
  std::span<const std::size_t> faces(SimplexId s) const;
  /// Indices (into the order k+1 list) of the cofaces of a k-simplex.
  std::span<const std::size_t> cofaces(SimplexId s) const;

 private:
  void build_incidence();
  void check_simplex(SimplexId s) const;

  std::vector<VertexId> vertices_;
  std::vector<Edge> edges_;
  std::vector<Triangle> triangles_;

  // Face indices per edge (2) and triangle (3), flattened.
  std::vector<std::size_t> edge_faces_;
  std::vector<std::size_t> triangle_faces_;
  // Coface lists in CSR form.
  std::vector<std::size_t> vertex_coface_ptr_, vertex_cofaces_;
  std::vector<std::size_t> edge_coface_ptr_, edge_cofaces_;
};

struct Violation {
  enum class Kind { closure, duplicate, unsorted, orientation };

  Kind kind;
  std::vector<VertexId> simplex;
  std::string message;
};

/// Empty iff the closure, sortedness, dedup and orientation invariants hold.
std::vector<Violation> validate(const SimplicialComplex& complex);

std::string to_string(SimplexId s);
std::string format_simplex(std::span<const VertexId> vertices);

}  // namespace stsc
