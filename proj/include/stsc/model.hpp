#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "stsc/autodiff.hpp"
#include "stsc/complex.hpp"
#include "stsc/features.hpp"
#include "stsc/ops.hpp"
#include "stsc/params.hpp"
#include "stsc/walks.hpp"

namespace stsc {

enum class Task { forecast, impute };

const char* to_string(Task task) noexcept;
Task parse_task(std::string_view text);

struct ModelConfig {
  std::size_t W = 12;  // input window
  std::size_t H = 12;  // forecast horizon
  std::size_t D = 16;  // embed width
  std::size_t F = 1;   // signal features per node
  std::size_t walk_length = 4;
  std::size_t walk_samples = 4;
  int walk_variant = 1;
  bool walk_biased = false;
  std::size_t blocks = 3;
  std::vector<std::size_t> dw_kernels{7, 5, 3};
  std::size_t diffusion_K = 2;
  std::size_t embed_c = 8;
  std::size_t ffn_expansion = 2;
  double dropout = 0.1;
  double norm_eps = 1e-5;
  Task task = Task::forecast;
  bool use_anonymous = true;
  bool use_adaptive = true;
  bool use_graph_norm = true;

  /// Signal channels fed to the walks: F, plus F mask channels when imputing.
  std::size_t input_features() const;
  /// Channels after the walk gather (adds the anonymous channel).
  std::size_t channels() const;
  /// Time steps produced by the head: H when forecasting, W when imputing.
  std::size_t output_steps() const;
  /// Walk positions surviving the stem: floor((L + 1 - 2) / 2) + 1.
  std::size_t stem_positions() const;

  /// Throws InvalidInput on inconsistent settings.
  void validate() const;
  WalkConfig walk_config(std::uint64_t seed) const;
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// The network and its parameters for a fixed node count.
///
/// Input layout is (B, N, W, C, P, S): batch, node, time, channel, walk
/// position, walk sample. Output is (B, N, steps, F).
class Model {
 public:
  Model(ModelConfig cfg, std::size_t num_nodes, std::uint64_t seed);
  /// Rebuilds from a checkpoint; throws InvalidInput if the stored
  /// parameters do not match the configuration.
  Model(ModelConfig cfg, std::size_t num_nodes, ParamStore params);

  const ModelConfig& config() const noexcept { return cfg_; }
  std::size_t num_nodes() const noexcept { return nodes_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

  /// Records every parameter on the tape as a leaf.
  template <typename T>
  std::vector<Var<T>> bind(Tape<T>& tape, bool requires_grad) const;

  /// Records the forward pass. `dropout_key` seeds the dropout masks; with
  /// `train` false dropout is skipped.
  template <typename T>
  Var<T> forward(Tape<T>& tape, const std::vector<Var<T>>& p, const Tensor<T>& input, bool train,
                 std::uint64_t dropout_key) const;

  /// Inference in float without dropout.
  STTensor predict(const STTensor& input) const;

  /// Stem output for inspection.
  template <typename T>
  Var<T> stem(Tape<T>& tape, const std::vector<Var<T>>& p, const Tensor<T>& input) const;

 private:
  void register_params(std::uint64_t seed);
  void check_input(const Shape& shape) const;
  std::size_t idx(const std::string& name) const { return params_.index(name); }

  ModelConfig cfg_;
  std::size_t nodes_;
  ParamStore params_;
};

/// Dense node-to-node transition matrix softmax_rows(relu(U V^T)).
template <typename T>
Var<T> adaptive_adjacency(Var<T> U, Var<T> V) {
  return ops::softmax_rows(ops::relu(ops::matmul(U, ops::transpose(V))));
}

/// Z = sum_{k=0..K} A^k H W_k, with H (B, N, M, D) and weights[k] (D, D).
template <typename T>
Var<T> diffuse(Var<T> H, Var<T> A, const std::vector<Var<T>>& weights) {
  require(H.rank() == 4 && !weights.empty(), ErrorCode::shape_error,
          "diffuse expects H (batch, node, slice, embed) and at least one weight");
  const Shape shape = H.shape();
  Var<T> hop = H;
  Var<T> out = ops::linear(H, weights[0]);
  for (std::size_t k = 1; k < weights.size(); ++k) {
    hop = ops::reshape(ops::node_mix(A, ops::reshape(hop, {shape[0], shape[1], shape[2] * shape[3]})),
                       shape);
    out = ops::add(out, ops::linear(hop, weights[k]));
  }
  return out;
}

/// Model input for one window: the walk tensor gathered from the expanded
/// features. `node_feats` is (N, W, F); with a mask (1 = missing) the
/// masked entries are zeroed and the mask is appended as F more channels.
/// Static edge and triangle features are tiled over time.
STTensor window_input(const ModelConfig& cfg, const STTensor& node_feats, const STTensor* mask,
                      const STTensor& edge_feats, const STTensor& tri_feats, const WalkBatch& walks);

/// Stacks per-window inputs along a new leading batch axis.
STTensor stack(const std::vector<STTensor>& items);

}  // namespace stsc
