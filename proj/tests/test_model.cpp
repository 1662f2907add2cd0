#include <doctest.h>

#include <map>
#include <numeric>

#include "stsc/error.hpp"
#include "support/model_fixture.hpp"

using namespace stsc;
using namespace stsc::testing;

TEST_CASE("stem output shape") {
  auto cfg = tiny_config(Task::forecast, 5, 16);
  cfg.F = 2;
  const Model m(cfg, 4, 1);
  Tape<float> tp;
  const auto p = m.bind(tp, false);
  const STTensor x({1, 4, 5, 3, 4, 2});
  const auto s = m.stem(tp, p, x).value();
  CHECK(s.shape() == Shape{1, 4, 5, 3, 16});
  for (float v : s.storage()) CHECK(v == 0.0f);
}

TEST_CASE("stem with ones kernel and identity projection sums the two positions") {
  auto cfg = tiny_config(Task::forecast, 2, 4);
  cfg.walk_length = 1;
  cfg.walk_samples = 1;
  Model m(cfg, 3, 2);
  m.params().get("stem.kernel").fill(1.0f);
  auto& proj = m.params().get("stem.proj");
  REQUIRE(proj.shape() == Shape{4, 4});
  proj.fill(0.0f);
  for (std::size_t d = 0; d < 4; ++d) proj.at(d, d) = 1.0f;
  const auto x = rand_tensor({1, 3, 2, 2, 2, 1}, 3).cast<float>();
  Tape<float> tp;
  const auto s = m.stem(tp, m.bind(tp, false), x).value();
  for (std::size_t n = 0; n < 3; ++n)
    for (std::size_t w = 0; w < 2; ++w)
      for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t d = 0; d < 4; ++d)
          CHECK(s.at(0, n, w, c, d) ==
                doctest::Approx(x.at(0, n, w, c, 0, 0) + x.at(0, n, w, c, 1, 0)).epsilon(1e-6));
}

TEST_CASE("adaptive adjacency examples") {
  Tape<double> tp;
  const auto u = adaptive_adjacency(tp.leaf(Tensor<double>({5, 3}), false), tp.leaf(Tensor<double>({5, 3}), false));
  for (double v : u.value().storage()) CHECK(v == doctest::Approx(0.2));
  auto uv = tp.leaf(Tensor<double>({2, 1}, std::vector<double>{1, -1}), false);
  const auto a = adaptive_adjacency(uv, uv).value();
  const double e = std::exp(1.0);
  CHECK(a.at(0, 0) == doctest::Approx(e / (e + 1)));
  CHECK(a.at(0, 1) == doctest::Approx(1 / (e + 1)));
  CHECK(a.at(1, 0) == doctest::Approx(1 / (e + 1)));
  CHECK(a.at(1, 1) == doctest::Approx(e / (e + 1)));
}

TEST_CASE("diffuse examples") {
  Tape<double> tp;
  const std::size_t B = 2, N = 3, M = 2, D = 4;
  auto h = tp.leaf(rand_tensor({B, N, M, D}, 1), false);
  auto w0 = tp.leaf(rand_tensor({D, D}, 2), false);
  CHECK(diffuse(h, tp.leaf(rand_tensor({N, N}, 3), false), {w0}).value() == ops::linear(h, w0).value());

  Tensor<double> eye({N, N}), third({D, D});
  for (std::size_t i = 0; i < N; ++i) eye.at(i, i) = 1.0;
  for (std::size_t i = 0; i < D; ++i) third.at(i, i) = 1.0 / 3.0;
  auto wt = tp.leaf(third, false);
  const auto z = diffuse(h, tp.leaf(eye, false), {wt, wt, wt}).value();
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == doctest::Approx(h.value()[i]).epsilon(1e-12));

  // Explicit powering.
  const auto A = rand_tensor({N, N}, 4, 0, 1);
  std::vector<Tensor<double>> W{rand_tensor({D, D}, 5), rand_tensor({D, D}, 6), rand_tensor({D, D}, 7)};
  const auto got = diffuse(h, tp.leaf(A, false), {tp.leaf(W[0], false), tp.leaf(W[1], false), tp.leaf(W[2], false)})
                       .value();
  Tensor<double> hop = h.value(), want({B, N, M, D});
  for (std::size_t k = 0; k < 3; ++k) {
    if (k > 0) {
      Tensor<double> next({B, N, M, D});
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = 0; i < N; ++i)
          for (std::size_t j = 0; j < N; ++j)
            for (std::size_t m = 0; m < M; ++m)
              for (std::size_t d = 0; d < D; ++d) next.at(b, i, m, d) += A.at(i, j) * hop.at(b, j, m, d);
      hop = next;
    }
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t i = 0; i < N; ++i)
        for (std::size_t m = 0; m < M; ++m)
          for (std::size_t d = 0; d < D; ++d)
            for (std::size_t e = 0; e < D; ++e) want.at(b, i, m, e) += hop.at(b, i, m, d) * W[k].at(d, e);
  }
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-5);
}

TEST_CASE("gate_fuse examples") {
  Tape<double> tp;
  auto x = tp.leaf(rand_tensor({6}, 8), false);
  CHECK(ops::gate_fuse(x, x).value() == x.value());
  auto zero = tp.leaf(Tensor<double>({1}), false);
  CHECK(ops::gate_fuse(zero, zero).value()[0] == 0.0);
  const auto y = ops::gate_fuse(tp.leaf(Tensor<double>({1}, 2.0), false), tp.leaf(Tensor<double>({1}, -2.0), false));
  CHECK(y.value()[0] == doctest::Approx(0.0));
  CHECK_THROWS_AS(ops::gate_fuse(x, zero), Error);
}

TEST_CASE("forward shapes and the zero-initialised head") {
  for (Task task : {Task::forecast, Task::impute}) {
    auto cfg = tiny_config(task, 12, 16);
    cfg.H = 12;
    const auto inst = tiny_instance(cfg, fig1(), 2, 3);
    const Model m(cfg, 4, 4);
    const auto y = m.predict(inst.input);
    CHECK(y.shape() == Shape{2, 4, 12, 1});
    for (float v : y.storage()) CHECK(v == 0.0f);
  }
}

TEST_CASE("wrong window length is a shape error") {
  const auto cfg = tiny_config(Task::forecast, 4);
  const Model m(cfg, 4, 1);
  try {
    (void)m.predict(STTensor({1, 4, 5, 2, 4, 2}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::shape_error);
  }
}

TEST_CASE("config validation") {
  auto cfg = tiny_config(Task::forecast);
  cfg.dw_kernels = {7, 5};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.dw_kernels = {7, 4, 3};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = tiny_config(Task::forecast);
  CHECK(model_config_from_json(to_json(cfg)).dw_kernels == cfg.dw_kernels);
  CHECK(to_json(model_config_from_json(to_json(cfg))) == to_json(cfg));
}

TEST_CASE("full model gradient check on a tiny instance") {
  for (Task task : {Task::forecast, Task::impute})
    for (auto loss : {ops::LossKind::mae, ops::LossKind::mse}) {
      const auto cfg = tiny_config(task);
      Model m(cfg, 4, 11);
      randomize_head(m, 12);
      const auto inst = tiny_instance(cfg, fig1(), 2, 13);
      const auto r = model_gradcheck(m, inst, loss);
      CAPTURE(to_string(task));
      CAPTURE(m.params().params()[r.worst_input].name);
      CHECK(r.max_rel_error <= 1e-4);
    }
}

TEST_CASE("ablation switches change the parameter set and still run") {
  auto cfg = tiny_config(Task::forecast);
  const Model full(cfg, 4, 1);
  CHECK(full.params().contains("adj.U"));
  CHECK(full.params().contains("block0.norm1.gain"));
  cfg.use_adaptive = false;
  cfg.use_graph_norm = false;
  cfg.use_anonymous = false;
  Model bare(cfg, 4, 1);
  CHECK_FALSE(bare.params().contains("adj.U"));
  CHECK_FALSE(bare.params().contains("block0.diff0"));
  CHECK_FALSE(bare.params().contains("block0.norm1.gain"));
  CHECK(cfg.channels() == 1);
  randomize_head(bare, 2);
  const auto inst = tiny_instance(cfg, fig1(), 1, 3);
  const auto y = bare.predict(inst.input);
  for (float v : y.storage()) CHECK(std::isfinite(v));
  CHECK(model_gradcheck(bare, inst, ops::LossKind::mse).max_rel_error <= 1e-4);
}

TEST_CASE("forward passes are bit-identical") {
  const auto cfg = tiny_config(Task::forecast);
  Model m(cfg, 4, 21);
  randomize_head(m, 22);
  const auto inst = tiny_instance(cfg, fig1(), 3, 23);
  CHECK(m.predict(inst.input) == m.predict(inst.input));
  Tape<float> a, b;
  CHECK(m.forward(a, m.bind(a, false), inst.input, true, 9).value() ==
        m.forward(b, m.bind(b, false), inst.input, true, 9).value());
}

TEST_CASE("checkpoint parameters must match the configuration") {
  const auto cfg = tiny_config(Task::forecast);
  const Model m(cfg, 4, 1);
  CHECK(Model(cfg, 4, m.params()).params() == m.params());
  try {
    Model(cfg, 5, m.params());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_input);
  }
}

namespace {

// Relabels the vertices of `c` by `perm` and returns the relabelled complex
// plus the map from old to new global simplex index.
std::pair<SimplicialComplex, std::vector<std::size_t>> relabel(const SimplicialComplex& c,
                                                               const std::vector<VertexId>& perm) {
  std::vector<Edge> edges;
  for (auto e : c.edges()) edges.push_back({perm[e[0]], perm[e[1]]});
  std::vector<VertexId> verts;
  for (auto v : c.vertices()) verts.push_back(perm[v]);
  auto d = SimplicialComplex::from_edges(edges, true, verts);
  std::vector<std::size_t> map(c.size());
  for (std::size_t g = 0; g < c.size(); ++g) {
    auto vs = c.vertex_set(c.from_global(g));
    for (auto& v : vs) v = perm[v];
    std::sort(vs.begin(), vs.end());
    std::optional<std::size_t> idx;
    int order = int(vs.size()) - 1;
    if (order == 0) idx = d.find_vertex(vs[0]);
    if (order == 1) idx = d.find_edge(vs[0], vs[1]);
    if (order == 2) idx = d.find_triangle(vs[0], vs[1], vs[2]);
    map[g] = d.global_index({order, *idx});
  }
  return {d, map};
}

}  // namespace

TEST_CASE("forecast forward is equivariant to node relabelling") {
  auto cfg = tiny_config(Task::forecast, 4, 8);
  const std::vector<Edge> edges{{0, 1}, {0, 2}, {1, 2}, {2, 3}, {3, 4}, {2, 4}, {4, 5}};
  const auto c = SimplicialComplex::from_edges(edges, true);
  const std::size_t N = c.count(0);
  REQUIRE(N == 6);
  const std::vector<VertexId> perm{3, 5, 0, 4, 1, 2};
  const auto [d, map] = relabel(c, perm);

  Model m(cfg, N, 31);
  randomize_head(m, 32);
  const auto walks = sample_walks(c, full_adjacency(c, 1), vertex_starts(c), cfg.walk_config(33));

  // Same walks expressed on the relabelled complex, starts in its vertex order.
  std::vector<std::size_t> new_node(N);
  for (std::size_t n = 0; n < N; ++n) new_node[n] = map[n];
  WalkBatch moved(vertex_starts(d), walks.samples(), walks.length());
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t s = 0; s < walks.samples(); ++s) {
      auto src = walks.trajectory(n, s);
      auto dst = moved.trajectory(new_node[n], s);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] = std::uint32_t(map[src[j]]);
      auto a = walks.anonymous(n, s);
      std::copy(a.begin(), a.end(), moved.anonymous(new_node[n], s).begin());
    }

  const auto x = rand_tensor({N, cfg.W, 1}, 34, 0, 1).cast<float>();
  const auto ef = rand_tensor({c.count(1), 1}, 35, 0, 1).cast<float>();
  const auto tf = rand_tensor({c.count(2), 1}, 36, 0, 1).cast<float>();
  STTensor x2(x.shape()), ef2(ef.shape()), tf2(tf.shape());
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t t = 0; t < cfg.W; ++t) x2.at(new_node[n], t, 0) = x.at(n, t, 0);
  for (std::size_t e = 0; e < c.count(1); ++e) ef2[map[N + e] - N] = ef[e];
  for (std::size_t t = 0; t < c.count(2); ++t) tf2[map[N + c.count(1) + t] - N - c.count(1)] = tf[t];

  ParamStore p2 = m.params();
  for (const char* name : {"adj.U", "adj.V"}) {
    const auto& src = m.params().get(name);
    auto& dst = p2.get(name);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t k = 0; k < cfg.embed_c; ++k) dst.at(new_node[n], k) = src.at(n, k);
  }
  const Model m2(cfg, N, p2);

  const auto in1 = stack({window_input(cfg, x, nullptr, ef, tf, walks)}).cast<double>();
  const auto in2 = stack({window_input(cfg, x2, nullptr, ef2, tf2, moved)}).cast<double>();
  Tape<double> t1, t2;
  const auto y1 = m.forward(t1, m.bind(t1, false), in1, false, 0).value();
  const auto y2 = m2.forward(t2, m2.bind(t2, false), in2, false, 0).value();
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t h = 0; h < cfg.H; ++h)
      CHECK(std::abs(y1.at(0, n, h, 0) - y2.at(0, new_node[n], h, 0)) <= 1e-10);
}

TEST_CASE("imputation loss on masked positions falls during training") {
  const auto cfg = tiny_config(Task::impute, 12, 16);
  Model m(cfg, 4, 41);
  const auto inst = tiny_instance(cfg, fig1(), 4, 42);
  Adam adam(m.params(), {});
  std::vector<double> losses;
  for (int step = 0; step < 50; ++step) {
    Tape<float> tp;
    const auto p = m.bind(tp, true);
    auto loss = ops::masked_loss(m.forward(tp, p, inst.input, true, std::uint64_t(step)), inst.target,
                                 inst.mask, ops::LossKind::mae);
    losses.push_back(loss.value()[0]);
    tp.backward(loss);
    std::vector<STTensor> grads;
    for (auto v : p) grads.push_back(tp.gradient(v));
    adam.step(m.params(), grads, 1e-2);
  }
  const double head = std::accumulate(losses.begin(), losses.begin() + 5, 0.0) / 5;
  const double tail = std::accumulate(losses.end() - 5, losses.end(), 0.0) / 5;
  CHECK(tail < 0.5 * head);
  CHECK(m.params().all_finite());
}
