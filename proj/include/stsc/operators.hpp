#pragma once

#include <string>

#include "stsc/complex.hpp"
#include "stsc/sparse.hpp"

namespace stsc {

enum class AdjacencyKind { up, low, either };

AdjacencyKind parse_adjacency_kind(const std::string& name);

/// Incidence matrix B_k of shape N_{k-1} x N_k. Signed entries follow the
/// alternating face convention under ascending vertex order:
/// d{i,j} = {j} - {i} and d{a,b,c} = {b,c} - {a,c} + {a,b}.
/// Unsigned takes absolute values. Throws InvalidOrder unless k is 1 or 2.
SparseOperator boundary(const SimplicialComplex& c, int k, bool signed_entries = true);

/// Symmetric 0/1 adjacency among k-simplices with zero diagonal. `up`: share
/// a (k+1)-coface; `low`: share a (k-1)-face; `either`: their union.
SparseOperator adjacency(const SimplicialComplex& c, int k, AdjacencyKind kind);

/// L_k = B_k^T B_k + B_{k+1} B_{k+1}^T with B_0 = B_3 = 0.
SparseOperator hodge_laplacian(const SimplicialComplex& c, int k);

/// Block operator over all simplices (vertices, then edges, then triangles).
/// Variant 1 keeps A_0, A_1, A_2 on the diagonal blocks; variant 2 zeroes
/// them. Off-diagonal blocks are the unsigned incidences and transposes.
SparseOperator full_adjacency(const SimplicialComplex& c, int variant);

}  // namespace stsc
