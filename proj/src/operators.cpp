#include "stsc/operators.hpp"

#include "stsc/error.hpp"

namespace stsc {

namespace {

void check_order(int k, int lo, int hi) {
  if (k < lo || k > hi)
    fail(ErrorCode::invalid_order, "order " + std::to_string(k) + " outside [" +
                                       std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

// Off-diagonal support of a product, as a 0/1 matrix.
SparseOperator off_diagonal_pattern(const SparseOperator& m) {
  std::vector<Entry> out;
  for (const auto& e : m.entries())
    if (e.row != e.col && e.value != 0) out.push_back({e.row, e.col, 1});
  return SparseOperator(m.rows(), m.cols(), std::move(out), m.row_domain(), m.col_domain());
}

SparseOperator binarize(const SparseOperator& m) {
  auto es = m.entries();
  for (auto& e : es) e.value = 1;
  return SparseOperator(m.rows(), m.cols(), std::move(es), m.row_domain(), m.col_domain());
}

}  // namespace

AdjacencyKind parse_adjacency_kind(const std::string& name) {
  if (name == "up") return AdjacencyKind::up;
  if (name == "low") return AdjacencyKind::low;
  if (name == "either") return AdjacencyKind::either;
  fail(ErrorCode::invalid_input, "unknown adjacency kind '" + name + "'");
}

SparseOperator boundary(const SimplicialComplex& c, int k, bool signed_entries) {
  check_order(k, 1, kMaxOrder);
  std::vector<Entry> es;
  const std::size_t n = c.count(k);
  for (std::size_t s = 0; s < n; ++s) {
    auto faces = c.faces({k, s});
    // faces()[i] omits vertex i, whose sign is (-1)^i.
    for (std::size_t i = 0; i < faces.size(); ++i) {
      std::int64_t sign = (i % 2 == 0) ? 1 : -1;
      es.push_back({faces[i], s, signed_entries ? sign : 1});
    }
  }
  return SparseOperator(c.count(k - 1), n, std::move(es), domain_of_order(k - 1),
                        domain_of_order(k));
}

SparseOperator adjacency(const SimplicialComplex& c, int k, AdjacencyKind kind) {
  check_order(k, 0, kMaxOrder);
  const std::size_t n = c.count(k);
  const Domain dom = domain_of_order(k);
  SparseOperator up(n, n, {}, dom, dom), low(n, n, {}, dom, dom);
  if (kind != AdjacencyKind::low && k < kMaxOrder) {
    auto b = boundary(c, k + 1, false);
    up = off_diagonal_pattern(b * b.transposed());
  }
  if (kind != AdjacencyKind::up && k > 0) {
    auto b = boundary(c, k, false);
    low = off_diagonal_pattern(b.transposed() * b);
  }
  switch (kind) {
    case AdjacencyKind::up: return up;
    case AdjacencyKind::low: return low;
    case AdjacencyKind::either: return binarize(up + low);
  }
  return up;
}

SparseOperator hodge_laplacian(const SimplicialComplex& c, int k) {
  check_order(k, 0, kMaxOrder);
  const std::size_t n = c.count(k);
  const Domain dom = domain_of_order(k);
  SparseOperator out(n, n, {}, dom, dom);
  if (k > 0) {
    auto b = boundary(c, k, true);
    out = out + b.transposed() * b;
  }
  if (k < kMaxOrder) {
    auto b = boundary(c, k + 1, true);
    out = out + b * b.transposed();
  }
  return out;
}

SparseOperator full_adjacency(const SimplicialComplex& c, int variant) {
  require(variant == 1 || variant == 2, ErrorCode::invalid_input,
          "full adjacency variant must be 1 or 2");
  const auto counts = c.counts();
  const std::size_t off[3] = {0, counts[0], counts[0] + counts[1]};
  std::vector<Entry> es;
  auto place = [&](const SparseOperator& block, std::size_t r0, std::size_t c0) {
    for (const auto& e : block.entries()) es.push_back({e.row + r0, e.col + c0, e.value});
  };
  if (variant == 1)
    for (int k = 0; k <= kMaxOrder; ++k)
      place(adjacency(c, k, AdjacencyKind::either), off[k], off[k]);
  for (int k = 1; k <= kMaxOrder; ++k) {
    auto b = boundary(c, k, false);
    place(b, off[k - 1], off[k]);
    place(b.transposed(), off[k], off[k - 1]);
  }
  return SparseOperator(c.size(), c.size(), std::move(es));
}

}  // namespace stsc
