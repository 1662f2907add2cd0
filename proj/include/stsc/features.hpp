#pragma once

#include "stsc/complex.hpp"
#include "stsc/tensor.hpp"
#include "stsc/walks.hpp"

namespace stsc {

/// Per-order input features for one complex. Node features vary in time
/// (N0 x t x F); edge (N1 x F1) and triangle (N2 x F2) features are static.
struct FeatureBundle {
  STTensor node_feats;
  STTensor edge_feats;
  STTensor tri_feats;

  /// Throws ShapeError if the leading axes disagree with the complex counts
  /// and InvalidInput on non-finite values.
  void check(const SimplicialComplex& complex) const;
};

/// Unified simplex-indexed table of shape (N0 + N1 + N2) x t x F.
///
/// Edge and triangle rows are tiled along time and zero-padded or truncated
/// to width F; the node block passes through (it must already be t x F).
/// Blocks follow the global layout: vertices, edges, triangles.
STTensor expand(const FeatureBundle& bundle, std::size_t t, std::size_t F);

/// Walk feature tensor of shape N x t x (F + 1) x (L + 1) x S, where element
/// (n, k, f, l, s) is the unified feature f of the simplex visited at
/// position l of sample s from node n, at time k. The last feature is the
/// anonymous label divided by L + 1; with `anonymous` false it is left out
/// and the feature axis has width F. Every vertex must appear exactly once
/// among the batch starts (InvalidInput otherwise).
STTensor walk_tensor(const STTensor& unified, const WalkBatch& batch, std::size_t num_nodes,
                     bool anonymous = true);

}  // namespace stsc
