#include "stsc/features.hpp"

#include <algorithm>
#include <cmath>

#include "stsc/error.hpp"

namespace stsc {

namespace {

void check_block(const STTensor& t, std::size_t rows, std::size_t rank, const char* what) {
  if (t.empty() && rows == 0) return;
  require(t.rank() == rank, ErrorCode::shape_error,
          std::string(what) + " features have shape " + shape_str(t.shape()));
  require(t.dim(0) == rows, ErrorCode::shape_error,
          std::string(what) + " features cover " + std::to_string(t.dim(0)) +
              " simplices, complex has " + std::to_string(rows));
  for (float v : t.data())
    require(std::isfinite(v), ErrorCode::invalid_input,
            std::string("non-finite value in ") + what + " features");
}

}  // namespace

void FeatureBundle::check(const SimplicialComplex& complex) const {
  const auto n = complex.counts();
  check_block(node_feats, n[0], 3, "node");
  check_block(edge_feats, n[1], 2, "edge");
  check_block(tri_feats, n[2], 2, "triangle");
}

STTensor expand(const FeatureBundle& bundle, std::size_t t, std::size_t F) {
  require(F >= 1, ErrorCode::invalid_input, "feature width must be at least 1");
  const auto& nodes = bundle.node_feats;
  require(nodes.rank() == 3 && nodes.dim(1) == t && nodes.dim(2) == F, ErrorCode::shape_error,
          "node features " + shape_str(nodes.shape()) + " do not match t=" + std::to_string(t) +
              ", F=" + std::to_string(F));
  auto rows_of = [](const STTensor& x) { return x.empty() ? std::size_t{0} : x.dim(0); };
  for (const STTensor* blk : {&bundle.edge_feats, &bundle.tri_feats})
    require(blk->empty() || blk->rank() == 2, ErrorCode::shape_error,
            "static features must be (simplices, F_k), got " + shape_str(blk->shape()));

  const std::size_t n0 = nodes.dim(0);
  const std::size_t n1 = rows_of(bundle.edge_feats), n2 = rows_of(bundle.tri_feats);
  STTensor out({n0 + n1 + n2, t, F});
  std::copy(nodes.data().begin(), nodes.data().end(), out.ptr());

  std::size_t row = n0;
  for (const STTensor* blk : {&bundle.edge_feats, &bundle.tri_feats}) {
    if (blk->empty()) continue;
    const std::size_t width = std::min(blk->dim(1), F);
    for (std::size_t i = 0; i < blk->dim(0); ++i, ++row)
      for (std::size_t k = 0; k < t; ++k) {
        float* dst = out.ptr() + (row * t + k) * F;
        const float* src = blk->ptr() + i * blk->dim(1);
        std::copy(src, src + width, dst);
      }
  }
  return out;
}

STTensor walk_tensor(const STTensor& unified, const WalkBatch& batch, std::size_t num_nodes,
                     bool anonymous) {
  require(unified.rank() == 3, ErrorCode::shape_error,
          "unified features must be (simplices, t, F), got " + shape_str(unified.shape()));
  const std::size_t n_simplices = unified.dim(0), t = unified.dim(1), F = unified.dim(2);

  // Batch row for each node.
  std::vector<std::size_t> row_of(num_nodes, batch.num_starts());
  for (std::size_t i = 0; i < batch.num_starts(); ++i) {
    const auto& s = batch.starts()[i];
    require(s.order == 0 && s.index < num_nodes, ErrorCode::invalid_input,
            "walk start " + to_string(s) + " is not a vertex of the complex");
    require(row_of[s.index] == batch.num_starts(), ErrorCode::invalid_input,
            "vertex " + std::to_string(s.index) + " starts more than one walk set");
    row_of[s.index] = i;
  }
  for (std::size_t n = 0; n < num_nodes; ++n)
    require(row_of[n] != batch.num_starts(), ErrorCode::invalid_input,
            "no walks start at vertex " + std::to_string(n));

  const std::size_t P = batch.positions(), S = batch.samples(), C = anonymous ? F + 1 : F;
  const float anon_scale = 1.0f / static_cast<float>(P);
  STTensor out({num_nodes, t, C, P, S});
  float* o = out.ptr();
  for (std::size_t n = 0; n < num_nodes; ++n) {
    const std::size_t i = row_of[n];
    for (std::size_t s = 0; s < S; ++s) {
      auto traj = batch.trajectory(i, s);
      auto anon = batch.anonymous(i, s);
      for (std::size_t l = 0; l < P; ++l) {
        if (traj[l] >= n_simplices)
          fail(ErrorCode::internal_error, "trajectory leaves the feature table");
        const float* src = unified.ptr() + traj[l] * t * F;
        const float label = static_cast<float>(anon[l]) * anon_scale;
        for (std::size_t k = 0; k < t; ++k) {
          float* dst = o + (((n * t + k) * C) * P + l) * S + s;
          for (std::size_t f = 0; f < F; ++f) dst[f * P * S] = src[k * F + f];
          if (anonymous) dst[F * P * S] = label;
        }
      }
    }
  }
  return out;
}

}  // namespace stsc
