#include "stsc/model.hpp"

#include <cmath>
#include <numbers>

#include "stsc/rng.hpp"

namespace stsc {

const char* to_string(Task task) noexcept {
  return task == Task::forecast ? "forecast" : "impute";
}

Task parse_task(std::string_view text) {
  if (text == "forecast") return Task::forecast;
  if (text == "impute") return Task::impute;
  fail(ErrorCode::invalid_input, "unknown task '" + std::string(text) + "' (forecast|impute)");
}

std::size_t ModelConfig::input_features() const {
  return task == Task::impute ? 2 * F : F;
}

std::size_t ModelConfig::channels() const {
  return input_features() + (use_anonymous ? 1 : 0);
}

std::size_t ModelConfig::output_steps() const { return task == Task::forecast ? H : W; }

std::size_t ModelConfig::stem_positions() const { return (walk_length + 1 - 2) / 2 + 1; }

void ModelConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) { require(ok, ErrorCode::invalid_input, msg); };
  check(W >= 1 && H >= 1, "window and horizon must be positive");
  check(D >= 1 && F >= 1, "embed width and feature count must be positive");
  check(walk_length >= 1 && walk_length <= kMaxWalkParam, "walk length must lie in [1, 64]");
  check(walk_samples >= 1 && walk_samples <= kMaxWalkParam, "walk samples must lie in [1, 64]");
  check(walk_variant == 1 || walk_variant == 2, "walk variant must be 1 or 2");
  check(blocks >= 1, "need at least one block");
  check(dw_kernels.size() == blocks, "dw_kernels needs one entry per block");
  for (auto k : dw_kernels) check(k % 2 == 1, "dw kernel sizes must be odd");
  check(embed_c >= 1, "adaptive embedding width must be positive");
  check(ffn_expansion >= 1, "ffn expansion must be positive");
  check(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
  check(norm_eps > 0.0, "norm eps must be positive");
}

WalkConfig ModelConfig::walk_config(std::uint64_t seed) const {
  WalkConfig w;
  w.length = static_cast<std::uint32_t>(walk_length);
  w.samples = static_cast<std::uint32_t>(walk_samples);
  w.variant = walk_variant;
  w.biased = walk_biased;
  w.seed = seed;
  return w;
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"W", c.W},
          {"H", c.H},
          {"D", c.D},
          {"F", c.F},
          {"walk_length", c.walk_length},
          {"walk_samples", c.walk_samples},
          {"walk_variant", c.walk_variant},
          {"walk_biased", c.walk_biased},
          {"blocks", c.blocks},
          {"dw_kernels", c.dw_kernels},
          {"diffusion_K", c.diffusion_K},
          {"embed_c", c.embed_c},
          {"ffn_expansion", c.ffn_expansion},
          {"dropout", c.dropout},
          {"norm_eps", c.norm_eps},
          {"task", to_string(c.task)},
          {"use_anonymous", c.use_anonymous},
          {"use_adaptive", c.use_adaptive},
          {"use_graph_norm", c.use_graph_norm}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.W = j.value("W", c.W);
    c.H = j.value("H", c.H);
    c.D = j.value("D", c.D);
    c.F = j.value("F", c.F);
    c.walk_length = j.value("walk_length", c.walk_length);
    c.walk_samples = j.value("walk_samples", c.walk_samples);
    c.walk_variant = j.value("walk_variant", c.walk_variant);
    c.walk_biased = j.value("walk_biased", c.walk_biased);
    c.blocks = j.value("blocks", c.blocks);
    c.dw_kernels = j.value("dw_kernels", c.dw_kernels);
    c.diffusion_K = j.value("diffusion_K", c.diffusion_K);
    c.embed_c = j.value("embed_c", c.embed_c);
    c.ffn_expansion = j.value("ffn_expansion", c.ffn_expansion);
    c.dropout = j.value("dropout", c.dropout);
    c.norm_eps = j.value("norm_eps", c.norm_eps);
    c.task = parse_task(j.value("task", std::string(to_string(c.task))));
    c.use_anonymous = j.value("use_anonymous", c.use_anonymous);
    c.use_adaptive = j.value("use_adaptive", c.use_adaptive);
    c.use_graph_norm = j.value("use_graph_norm", c.use_graph_norm);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_input, std::string("bad model config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

class Init {
 public:
  explicit Init(std::uint64_t seed) : rng_(seed) {}

  STTensor uniform(Shape shape, double bound) {
    STTensor t(std::move(shape));
    for (auto& v : t.data()) v = float((2.0 * rng_.uniform() - 1.0) * bound);
    return t;
  }

  STTensor normal(Shape shape, double stddev) {
    STTensor t(std::move(shape));
    for (auto& v : t.data()) {
      const double u1 = 1.0 - rng_.uniform(), u2 = rng_.uniform();
      v = float(stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2));
    }
    return t;
  }

 private:
  StreamRng rng_;
};

std::string block_name(std::size_t i, const char* part) {
  return "block" + std::to_string(i) + "." + part;
}

}  // namespace

Model::Model(ModelConfig cfg, std::size_t num_nodes, std::uint64_t seed)
    : cfg_(std::move(cfg)), nodes_(num_nodes) {
  cfg_.validate();
  require(nodes_ >= 1, ErrorCode::invalid_input, "model needs at least one node");
  register_params(seed);
}

Model::Model(ModelConfig cfg, std::size_t num_nodes, ParamStore params)
    : cfg_(std::move(cfg)), nodes_(num_nodes) {
  cfg_.validate();
  register_params(0);
  require(params.size() == params_.size(), ErrorCode::invalid_input,
          "checkpoint holds " + std::to_string(params.size()) + " parameters, config expects " +
              std::to_string(params_.size()));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& want = params_.params()[i];
    const auto& got = params.params()[i];
    require(want.name == got.name && want.value.shape() == got.value.shape(),
            ErrorCode::invalid_input,
            "checkpoint parameter '" + got.name + "' " + shape_str(got.value.shape()) +
                " does not match '" + want.name + "' " + shape_str(want.value.shape()));
  }
  params_ = std::move(params);
}

void Model::register_params(std::uint64_t seed) {
  Init init(derive_seed(seed, 0x1417));
  const std::size_t D = cfg_.D, C = cfg_.channels(), S = cfg_.walk_samples;
  const std::size_t P2 = cfg_.stem_positions(), r = cfg_.ffn_expansion;
  const std::size_t out = cfg_.output_steps() * cfg_.F;

  params_.add("stem.kernel", init.uniform({D, 2, S}, 1.0 / std::sqrt(2.0 * double(S))));
  params_.add("stem.proj", init.uniform({D * P2, D}, 1.0 / std::sqrt(double(D * P2))));
  params_.add("stem.bias", STTensor({D}));
  if (cfg_.use_adaptive) {
    const double sd = 1.0 / std::pow(double(cfg_.embed_c), 0.25);
    params_.add("adj.U", init.normal({nodes_, cfg_.embed_c}, sd));
    params_.add("adj.V", init.normal({nodes_, cfg_.embed_c}, sd));
  }
  for (std::size_t b = 0; b < cfg_.blocks; ++b) {
    const std::size_t k = cfg_.dw_kernels[b];
    params_.add(block_name(b, "dw"), init.uniform({C * D, k}, 1.0 / std::sqrt(double(k))));
    if (cfg_.use_graph_norm)
      for (const char* n : {"norm1", "norm2"}) {
        params_.add(block_name(b, n) + ".gain", STTensor({D}, 1.0f));
        params_.add(block_name(b, n) + ".bias", STTensor({D}));
      }
    if (cfg_.use_adaptive)
      for (std::size_t h = 0; h <= cfg_.diffusion_K; ++h)
        params_.add(block_name(b, "diff") + std::to_string(h),
                    init.uniform({D, D}, 1.0 / std::sqrt(double(D))));
    // ConvFFN1 mixes the embed axis inside each channel; ConvFFN2 mixes the
    // channel axis inside each embed feature.
    params_.add(block_name(b, "ffn1.w1"), init.uniform({C, D, r * D}, 1.0 / std::sqrt(double(D))));
    params_.add(block_name(b, "ffn1.b1"), STTensor({C * r * D}));
    params_.add(block_name(b, "ffn1.w2"),
                init.uniform({C, r * D, D}, 1.0 / std::sqrt(double(r * D))));
    params_.add(block_name(b, "ffn1.b2"), STTensor({C * D}));
    params_.add(block_name(b, "ffn2.w1"), init.uniform({D, C, r * C}, 1.0 / std::sqrt(double(C))));
    params_.add(block_name(b, "ffn2.b1"), STTensor({D * r * C}));
    params_.add(block_name(b, "ffn2.w2"),
                init.uniform({D, r * C, C}, 1.0 / std::sqrt(double(r * C))));
    params_.add(block_name(b, "ffn2.b2"), STTensor({D * C}));
  }
  params_.add("head.w", STTensor({cfg_.W * C * D, out}));
  params_.add("head.b", STTensor({out}));
}

void Model::check_input(const Shape& s) const {
  const Shape want{nodes_, cfg_.W, cfg_.channels(), cfg_.walk_length + 1, cfg_.walk_samples};
  require(s.size() == 6 && Shape(s.begin() + 1, s.end()) == want, ErrorCode::shape_error,
          "model input " + shape_str(s) + " does not match (B," + shape_str(want).substr(1));
}

template <typename T>
std::vector<Var<T>> Model::bind(Tape<T>& tape, bool requires_grad) const {
  std::vector<Var<T>> out;
  out.reserve(params_.size());
  for (const auto& p : params_.params())
    out.push_back(tape.leaf(p.value.template cast<T>(), requires_grad));
  return out;
}

template <typename T>
Var<T> Model::stem(Tape<T>& tape, const std::vector<Var<T>>& p, const Tensor<T>& input) const {
  check_input(input.shape());
  const std::size_t B = input.dim(0), N = nodes_, W = cfg_.W, C = cfg_.channels();
  const std::size_t P = cfg_.walk_length + 1, S = cfg_.walk_samples, D = cfg_.D;
  const std::size_t R = B * N * W * C;
  Var<T> x = ops::constant(tape, input.reshaped({R, P, S}));
  Var<T> s = ops::conv2d(x, p[idx("stem.kernel")], {2, 1});
  s = ops::reshape(s, {R, D * cfg_.stem_positions()});
  s = ops::add_bias(ops::linear(s, p[idx("stem.proj")]), p[idx("stem.bias")]);
  return ops::reshape(s, {B, N, W, C, D});
}

template <typename T>
Var<T> Model::forward(Tape<T>& tape, const std::vector<Var<T>>& p, const Tensor<T>& input,
                      bool train, std::uint64_t dropout_key) const {
  require(p.size() == params_.size(), ErrorCode::internal_error, "parameter binding mismatch");
  const std::size_t B = input.dim(0), N = nodes_, W = cfg_.W, C = cfg_.channels(), D = cfg_.D;
  const Shape full{B, N, W, C, D}, slices{B, N, W * C, D};
  const double drop = train ? cfg_.dropout : 0.0;

  const Var<T> xs = stem(tape, p, input);
  Var<T> A;
  if (cfg_.use_adaptive) A = adaptive_adjacency(p[idx("adj.U")], p[idx("adj.V")]);

  auto norm = [&](Var<T> y, std::size_t b, const char* which) {
    if (!cfg_.use_graph_norm) return y;
    const std::string n = block_name(b, which);
    return ops::reshape(ops::layernorm_graph(ops::reshape(y, slices), p[idx(n + ".gain")],
                                             p[idx(n + ".bias")], cfg_.norm_eps),
                        full);
  };
  auto ffn = [&](Var<T> y, const std::string& n) {
    y = ops::add_bias(ops::grouped_pointwise(y, p[idx(n + ".w1")]), p[idx(n + ".b1")]);
    y = ops::gelu(y);
    return ops::add_bias(ops::grouped_pointwise(y, p[idx(n + ".w2")]), p[idx(n + ".b2")]);
  };

  Var<T> h = xs;
  for (std::size_t b = 0; b < cfg_.blocks; ++b) {
    const std::uint64_t key = derive_seed(dropout_key, b);
    Var<T> y = ops::reshape(h, {B * N, W, C * D});
    y = ops::reshape(ops::dwconv1d(y, p[idx(block_name(b, "dw"))]), full);
    y = norm(y, b, "norm1");
    if (cfg_.use_adaptive) {
      std::vector<Var<T>> w;
      for (std::size_t k = 0; k <= cfg_.diffusion_K; ++k)
        w.push_back(p[idx(block_name(b, "diff") + std::to_string(k))]);
      Var<T> z = ops::reshape(diffuse(ops::reshape(y, slices), A, w), full);
      y = ops::gate_fuse(xs, z);
    }
    y = norm(y, b, "norm2");
    y = ops::reshape(y, {B, N, W, C * D});
    y = ops::dropout(ffn(y, block_name(b, "ffn1")), drop, derive_seed(key, 1));
    y = ops::swap_last2(ops::reshape(y, full));
    y = ops::reshape(y, {B, N, W, D * C});
    y = ops::dropout(ffn(y, block_name(b, "ffn2")), drop, derive_seed(key, 2));
    y = ops::swap_last2(ops::reshape(y, {B, N, W, D, C}));
    h = ops::add(h, y);
  }
  Var<T> out = ops::reshape(h, {B * N, W * C * D});
  out = ops::add_bias(ops::linear(out, p[idx("head.w")]), p[idx("head.b")]);
  return ops::reshape(out, {B, N, cfg_.output_steps(), cfg_.F});
}

STTensor Model::predict(const STTensor& input) const {
  Tape<float> tape;
  auto p = bind(tape, false);
  return forward(tape, p, input, false, 0).value();
}

template std::vector<Var<float>> Model::bind(Tape<float>&, bool) const;
template std::vector<Var<double>> Model::bind(Tape<double>&, bool) const;
template Var<float> Model::stem(Tape<float>&, const std::vector<Var<float>>&,
                                const Tensor<float>&) const;
template Var<double> Model::stem(Tape<double>&, const std::vector<Var<double>>&,
                                 const Tensor<double>&) const;
template Var<float> Model::forward(Tape<float>&, const std::vector<Var<float>>&,
                                   const Tensor<float>&, bool, std::uint64_t) const;
template Var<double> Model::forward(Tape<double>&, const std::vector<Var<double>>&,
                                    const Tensor<double>&, bool, std::uint64_t) const;

STTensor window_input(const ModelConfig& cfg, const STTensor& node_feats, const STTensor* mask,
                      const STTensor& edge_feats, const STTensor& tri_feats, const WalkBatch& walks) {
  require(node_feats.rank() == 3 && node_feats.dim(1) == cfg.W && node_feats.dim(2) == cfg.F,
          ErrorCode::shape_error,
          "window " + shape_str(node_feats.shape()) + " does not match W=" + std::to_string(cfg.W) +
              ", F=" + std::to_string(cfg.F));
  const std::size_t N = node_feats.dim(0), W = cfg.W, F = cfg.F, Fin = cfg.input_features();
  FeatureBundle bundle{STTensor({N, W, Fin}), edge_feats, tri_feats};
  if (cfg.task == Task::impute) {
    require(mask && mask->shape() == node_feats.shape(), ErrorCode::shape_error,
            "imputation needs a mask shaped like the window");
    for (std::size_t i = 0; i < N * W; ++i)
      for (std::size_t f = 0; f < F; ++f) {
        const bool missing = (*mask)[i * F + f] != 0.0f;
        bundle.node_feats[i * Fin + f] = missing ? 0.0f : node_feats[i * F + f];
        bundle.node_feats[i * Fin + F + f] = missing ? 1.0f : 0.0f;
      }
  } else {
    bundle.node_feats = node_feats;
  }
  const STTensor unified = expand(bundle, W, Fin);
  return walk_tensor(unified, walks, N, cfg.use_anonymous);
}

STTensor stack(const std::vector<STTensor>& items) {
  require(!items.empty(), ErrorCode::invalid_input, "nothing to stack");
  Shape s = items.front().shape();
  const std::size_t n = items.front().size();
  s.insert(s.begin(), items.size());
  STTensor out(s);
  for (std::size_t i = 0; i < items.size(); ++i) {
    require(items[i].shape() == items.front().shape(), ErrorCode::shape_error,
            "stacked tensors differ in shape");
    std::copy(items[i].data().begin(), items[i].data().end(), out.ptr() + i * n);
  }
  return out;
}

}  // namespace stsc
