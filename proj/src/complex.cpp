#include "stsc/complex.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>

#include "stsc/error.hpp"

namespace stsc {

namespace {

constexpr std::size_t kMissing = std::numeric_limits<std::size_t>::max();

template <typename Seq, typename Key>
std::optional<std::size_t> sorted_find(const Seq& seq, const Key& key) {
  auto it = std::lower_bound(seq.begin(), seq.end(), key);
  if (it == seq.end() || *it != key) return std::nullopt;
  return static_cast<std::size_t>(it - seq.begin());
}

template <typename Seq>
bool strictly_sorted(const Seq& seq) {
  return std::adjacent_find(seq.begin(), seq.end(),
                            [](const auto& a, const auto& b) { return !(a < b); }) ==
         seq.end();
}

}  // namespace

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_input: return "InvalidInput";
    case ErrorCode::degenerate_geometry: return "DegenerateGeometry";
    case ErrorCode::invalid_order: return "InvalidOrder";
    case ErrorCode::shape_error: return "ShapeError";
    case ErrorCode::internal_error: return "InternalError";
    case ErrorCode::empty_mask: return "EmptyMask";
    case ErrorCode::numeric_error: return "NumericError";
    case ErrorCode::io_error: return "IoError";
  }
  return "Unknown";
}

Relation parse_relation(const std::string& name) {
  if (name == "boundary") return Relation::boundary;
  if (name == "coboundary") return Relation::coboundary;
  if (name == "lower") return Relation::lower;
  if (name == "upper") return Relation::upper;
  fail(ErrorCode::invalid_input, "unknown relation '" + name + "'");
}

SimplicialComplex SimplicialComplex::from_lists(std::vector<VertexId> vertices,
                                                std::vector<Edge> edges,
                                                std::vector<Triangle> triangles) {
  SimplicialComplex c;
  c.vertices_ = std::move(vertices);
  c.edges_ = std::move(edges);
  c.triangles_ = std::move(triangles);
  c.build_incidence();
  return c;
}

SimplicialComplex SimplicialComplex::from_edges(std::span<const Edge> edges, bool lift,
                                                std::span<const VertexId> extra_vertices) {
  std::vector<Edge> canon;
  canon.reserve(edges.size());
  for (const auto& e : edges) {
    require(e[0] >= 0 && e[1] >= 0, ErrorCode::invalid_input,
            "negative vertex id in edge " + format_simplex(e));
    require(e[0] != e[1], ErrorCode::invalid_input,
            "self-loop on vertex " + std::to_string(e[0]));
    canon.push_back({std::min(e[0], e[1]), std::max(e[0], e[1])});
  }
  std::sort(canon.begin(), canon.end());
  canon.erase(std::unique(canon.begin(), canon.end()), canon.end());

  std::vector<VertexId> verts(extra_vertices.begin(), extra_vertices.end());
  for (VertexId v : verts)
    require(v >= 0, ErrorCode::invalid_input, "negative vertex id " + std::to_string(v));
  for (const auto& e : canon) {
    verts.push_back(e[0]);
    verts.push_back(e[1]);
  }
  std::sort(verts.begin(), verts.end());
  verts.erase(std::unique(verts.begin(), verts.end()), verts.end());

  std::vector<Triangle> tris;
  if (lift) {
    // Sorted higher-neighbour lists: for a < b < c, the clique {a,b,c} is
    // found once, from edge (a,b), as c in up(a) ∩ up(b).
    std::vector<std::vector<VertexId>> up(verts.size());
    for (const auto& e : canon) up[*sorted_find(verts, e[0])].push_back(e[1]);
    for (const auto& e : canon) {
      const auto& ua = up[*sorted_find(verts, e[0])];
      const auto& ub = up[*sorted_find(verts, e[1])];
      std::vector<VertexId> common;
      std::set_intersection(ua.begin(), ua.end(), ub.begin(), ub.end(),
                            std::back_inserter(common));
      for (VertexId c : common) tris.push_back({e[0], e[1], c});
    }
    std::sort(tris.begin(), tris.end());
  }
  return from_lists(std::move(verts), std::move(canon), std::move(tris));
}

void SimplicialComplex::build_incidence() {
  edge_faces_.assign(edges_.size() * 2, kMissing);
  triangle_faces_.assign(triangles_.size() * 3, kMissing);
  vertex_coface_ptr_.assign(vertices_.size() + 1, 0);
  edge_coface_ptr_.assign(edges_.size() + 1, 0);
  vertex_cofaces_.clear();
  edge_cofaces_.clear();
  // Lookups need sorted lists; an unsorted complex only supports validate().
  if (!strictly_sorted(vertices_) || !strictly_sorted(edges_) ||
      !strictly_sorted(triangles_))
    return;

  // Face i omits vertex i, matching the alternating sign convention.
  for (std::size_t e = 0; e < edges_.size(); ++e)
    for (int i = 0; i < 2; ++i)
      edge_faces_[2 * e + i] = sorted_find(vertices_, edges_[e][1 - i]).value_or(kMissing);
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    const Edge f[3] = {{tri[1], tri[2]}, {tri[0], tri[2]}, {tri[0], tri[1]}};
    for (int i = 0; i < 3; ++i)
      triangle_faces_[3 * t + i] = sorted_find(edges_, f[i]).value_or(kMissing);
  }

  auto invert = [](const std::vector<std::size_t>& faces, std::size_t arity,
                   std::size_t n_faces, std::vector<std::size_t>& ptr,
                   std::vector<std::size_t>& out) {
    for (std::size_t f : faces)
      if (f != kMissing) ++ptr[f + 1];
    for (std::size_t i = 0; i < n_faces; ++i) ptr[i + 1] += ptr[i];
    out.assign(ptr.back(), 0);
    std::vector<std::size_t> fill(ptr.begin(), ptr.end() - 1);
    // Simplices are visited in index order, so each coface list ends up sorted.
    for (std::size_t s = 0; s < faces.size() / arity; ++s)
      for (std::size_t i = 0; i < arity; ++i) {
        std::size_t f = faces[s * arity + i];
        if (f != kMissing) out[fill[f]++] = s;
      }
  };
  invert(edge_faces_, 2, vertices_.size(), vertex_coface_ptr_, vertex_cofaces_);
  invert(triangle_faces_, 3, edges_.size(), edge_coface_ptr_, edge_cofaces_);
}

std::size_t SimplicialComplex::count(int order) const {
  switch (order) {
    case 0: return vertices_.size();
    case 1: return edges_.size();
    case 2: return triangles_.size();
    default:
      fail(ErrorCode::invalid_order,
           "simplex order " + std::to_string(order) + " outside [0, 2]");
  }
}

bool SimplicialComplex::contains(SimplexId s) const noexcept {
  if (s.order < 0 || s.order > kMaxOrder) return false;
  return s.index < counts()[static_cast<std::size_t>(s.order)];
}

void SimplicialComplex::check_simplex(SimplexId s) const {
  if (s.order < 0 || s.order > kMaxOrder)
    fail(ErrorCode::invalid_order,
         "simplex order " + std::to_string(s.order) + " outside [0, 2]");
  require(s.index < count(s.order), ErrorCode::invalid_input,
          "simplex " + stsc::to_string(s) + " not in complex");
}

std::size_t SimplicialComplex::global_index(SimplexId s) const {
  check_simplex(s);
  std::size_t offset = 0;
  for (int k = 0; k < s.order; ++k) offset += count(k);
  return offset + s.index;
}

SimplexId SimplicialComplex::from_global(std::size_t g) const {
  for (int k = 0; k <= kMaxOrder; ++k) {
    if (g < count(k)) return {k, g};
    g -= count(k);
  }
  fail(ErrorCode::invalid_input, "global simplex index out of range");
}

std::optional<std::size_t> SimplicialComplex::find_vertex(VertexId v) const {
  return sorted_find(vertices_, v);
}

std::optional<std::size_t> SimplicialComplex::find_edge(VertexId a, VertexId b) const {
  return sorted_find(edges_, Edge{std::min(a, b), std::max(a, b)});
}

std::optional<std::size_t> SimplicialComplex::find_triangle(VertexId a, VertexId b,
                                                            VertexId c) const {
  Triangle t{a, b, c};
  std::sort(t.begin(), t.end());
  return sorted_find(triangles_, t);
}

std::vector<VertexId> SimplicialComplex::vertex_set(SimplexId s) const {
  check_simplex(s);
  switch (s.order) {
    case 0: return {vertices_[s.index]};
    case 1: return {edges_[s.index].begin(), edges_[s.index].end()};
    default: return {triangles_[s.index].begin(), triangles_[s.index].end()};
  }
}

std::span<const std::size_t> SimplicialComplex::faces(SimplexId s) const {
  check_simplex(s);
  if (s.order == 1) return {edge_faces_.data() + 2 * s.index, 2};
  if (s.order == 2) return {triangle_faces_.data() + 3 * s.index, 3};
  return {};
}

std::span<const std::size_t> SimplicialComplex::cofaces(SimplexId s) const {
  check_simplex(s);
  const std::vector<std::size_t>* ptr = nullptr;
  const std::vector<std::size_t>* items = nullptr;
  if (s.order == 0) {
    ptr = &vertex_coface_ptr_;
    items = &vertex_cofaces_;
  } else if (s.order == 1) {
    ptr = &edge_coface_ptr_;
    items = &edge_cofaces_;
  } else {
    return {};
  }
  return {items->data() + (*ptr)[s.index], (*ptr)[s.index + 1] - (*ptr)[s.index]};
}

std::vector<SimplexId> SimplicialComplex::neighbors(SimplexId s, Relation relation) const {
  check_simplex(s);
  std::vector<std::size_t> idx;
  int order = s.order;
  switch (relation) {
    case Relation::boundary:
      order = s.order - 1;
      for (std::size_t f : faces(s))
        if (f != kMissing) idx.push_back(f);
      break;
    case Relation::coboundary:
      order = s.order + 1;
      for (std::size_t c : cofaces(s)) idx.push_back(c);
      break;
    case Relation::lower:
      for (std::size_t f : faces(s)) {
        if (f == kMissing) continue;
        for (std::size_t peer : cofaces({s.order - 1, f}))
          if (peer != s.index) idx.push_back(peer);
      }
      break;
    case Relation::upper:
      for (std::size_t c : cofaces(s))
        for (std::size_t peer : faces({s.order + 1, c}))
          if (peer != s.index && peer != kMissing) idx.push_back(peer);
      break;
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  std::vector<SimplexId> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back({order, i});
  return out;
}

std::vector<Violation> validate(const SimplicialComplex& c) {
  std::vector<Violation> out;
  auto report = [&](Violation::Kind kind, std::vector<VertexId> simplex, std::string msg) {
    out.push_back({kind, std::move(simplex), std::move(msg)});
  };

  auto check_list = [&](const auto& list, const char* what) {
    for (std::size_t i = 0; i + 1 < list.size(); ++i) {
      if (list[i] == list[i + 1]) {
        std::vector<VertexId> s(std::begin(list[i]), std::end(list[i]));
        report(Violation::Kind::duplicate, s,
               std::string("duplicate ") + what + " " + format_simplex(s));
      } else if (list[i + 1] < list[i]) {
        std::vector<VertexId> s(std::begin(list[i + 1]), std::end(list[i + 1]));
        report(Violation::Kind::unsorted, s,
               std::string(what) + " " + format_simplex(s) + " out of lexicographic order");
      }
    }
    for (const auto& item : list)
      if (!std::is_sorted(std::begin(item), std::end(item)) ||
          std::adjacent_find(std::begin(item), std::end(item)) != std::end(item)) {
        std::vector<VertexId> s(std::begin(item), std::end(item));
        report(Violation::Kind::orientation, s,
               std::string(what) + " " + format_simplex(s) +
                   " does not list strictly ascending vertices");
      }
  };

  std::vector<std::array<VertexId, 1>> verts;
  for (VertexId v : c.vertices()) verts.push_back({v});
  check_list(verts, "vertex");
  check_list(c.edges(), "edge");
  check_list(c.triangles(), "triangle");

  std::set<VertexId> vset(c.vertices().begin(), c.vertices().end());
  std::set<Edge> eset;
  for (const auto& e : c.edges()) eset.insert({std::min(e[0], e[1]), std::max(e[0], e[1])});

  std::set<Edge> missing_edges;
  for (const auto& t : c.triangles()) {
    Triangle s = t;
    std::sort(s.begin(), s.end());
    for (const Edge& f : {Edge{s[0], s[1]}, Edge{s[0], s[2]}, Edge{s[1], s[2]}})
      if (!eset.count(f)) missing_edges.insert(f);
  }
  for (const auto& f : missing_edges)
    report(Violation::Kind::closure, {f[0], f[1]},
           "edge " + format_simplex(f) + " is a face of a triangle but is missing");

  std::set<VertexId> missing_verts;
  for (const auto& e : eset)
    for (VertexId v : e)
      if (!vset.count(v)) missing_verts.insert(v);
  for (VertexId v : missing_verts)
    report(Violation::Kind::closure, {v},
           "vertex {" + std::to_string(v) + "} is a face of an edge but is missing");
  return out;
}

std::string format_simplex(std::span<const VertexId> vertices) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < vertices.size(); ++i) os << (i ? "," : "") << vertices[i];
  os << '}';
  return os.str();
}

std::string to_string(SimplexId s) {
  return "(order " + std::to_string(s.order) + ", index " + std::to_string(s.index) + ")";
}

}  // namespace stsc
