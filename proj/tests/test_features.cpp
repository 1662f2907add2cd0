#include <doctest.h>

#include "stsc/error.hpp"
#include "stsc/features.hpp"
#include "stsc/operators.hpp"
#include "support/fixtures.hpp"

using namespace stsc;
using stsc::testing::fig1;

namespace {

STTensor random_tensor(Shape s, std::uint64_t seed) {
  StreamRng rng(seed);
  STTensor t(std::move(s));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = float(rng.uniform() * 2 - 1);
  return t;
}

}  // namespace

TEST_CASE("expand tiles and zero-pads static features") {
  const auto c = fig1();
  FeatureBundle b{STTensor({4, 3, 2}), STTensor({4, 1}), STTensor({1, 1})};
  for (std::size_t e = 0; e < 4; ++e) b.edge_feats[e] = float(e + 1);
  b.tri_feats[0] = 9.0f;
  b.check(c);
  const auto u = expand(b, 3, 2);
  CHECK(u.shape() == Shape{9, 3, 2});
  for (std::size_t e = 0; e < 4; ++e)
    for (std::size_t t = 0; t < 3; ++t) {
      CHECK(u.at(4 + e, t, 0) == float(e + 1));
      CHECK(u.at(4 + e, t, 1) == 0.0f);
    }
  CHECK(u.at(8, 2, 0) == 9.0f);
}

TEST_CASE("expand truncates wide static features and passes nodes through") {
  const auto c = fig1();
  FeatureBundle b{random_tensor({4, 2, 1}, 1), random_tensor({4, 3}, 2), random_tensor({1, 2}, 3)};
  const auto u = expand(b, 2, 1);
  CHECK(u.shape() == Shape{9, 2, 1});
  for (std::size_t i = 0; i < 8; ++i) CHECK(u[i] == b.node_feats[i]);
  CHECK(u.at(5, 1, 0) == b.edge_feats.at(1, 0));
  CHECK(u.at(8, 0, 0) == b.tri_feats.at(0, 0));
}

TEST_CASE("expand without edges or triangles is the node block") {
  const auto c = SimplicialComplex::from_lists({0, 1}, {}, {});
  FeatureBundle b{random_tensor({2, 3, 2}, 4), STTensor({0, 1}), STTensor({0, 1})};
  CHECK(expand(b, 3, 2) == b.node_feats);
}

TEST_CASE("expand keeps simplices separate") {
  FeatureBundle b{random_tensor({4, 2, 2}, 5), random_tensor({4, 2}, 6), random_tensor({1, 2}, 7)};
  const auto base = expand(b, 2, 2);
  b.edge_feats.at(2, 1) += 1.0f;
  const auto moved = expand(b, 2, 2);
  for (std::size_t r = 0; r < 9; ++r)
    for (std::size_t i = 0; i < 4; ++i) {
      const std::size_t k = r * 4 + i;
      if (r == 6) continue;
      CHECK(base[k] == moved[k]);
    }
  CHECK_FALSE(base.at(6, 0, 1) == moved.at(6, 0, 1));
}

TEST_CASE("bundle check rejects mismatched counts and non-finite values") {
  const auto c = fig1();
  FeatureBundle wrong{STTensor({4, 1, 1}), STTensor({3, 1}), STTensor({1, 1})};
  CHECK_THROWS_AS(wrong.check(c), Error);
  FeatureBundle nan{STTensor({4, 1, 1}), STTensor({4, 1}), STTensor({1, 1})};
  nan.edge_feats[0] = std::nanf("");
  CHECK_THROWS_AS(nan.check(c), Error);
}

TEST_CASE("walk tensor shape on the figure-1 complex") {
  const auto c = fig1();
  const FeatureBundle b{random_tensor({4, 5, 2}, 8), random_tensor({4, 1}, 9), random_tensor({1, 1}, 10)};
  const auto walks = sample_walks(c, full_adjacency(c, 1), vertex_starts(c), {3, 2, 1, false, 3});
  const auto w = walk_tensor(expand(b, 5, 2), walks, 4);
  CHECK(w.shape() == Shape{4, 5, 3, 4, 2});
  CHECK(walk_tensor(expand(b, 5, 2), walks, 4, false).shape() == Shape{4, 5, 2, 4, 2});
}

TEST_CASE("walk tensor equals a naive gather") {
  const auto c = SimplicialComplex::from_edges(testing::random_graph(7, 0.5, 12), true);
  const std::size_t N = c.count(0), T = 3, F = 2;
  const FeatureBundle b{random_tensor({N, T, F}, 1), random_tensor({c.count(1), 1}, 2),
                        random_tensor({c.count(2), 3}, 3)};
  const auto u = expand(b, T, F);
  const auto walks = sample_walks(c, full_adjacency(c, 1), vertex_starts(c), {2, 3, 1, true, 4});
  const auto w = walk_tensor(u, walks, N);
  const std::size_t P = 3, S = 3;
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t f = 0; f <= F; ++f)
        for (std::size_t l = 0; l < P; ++l)
          for (std::size_t s = 0; s < S; ++s) {
            const float expect = f < F ? u.at(walks.trajectory(n, s)[l], t, f)
                                       : float(walks.anonymous(n, s)[l]) / float(P);
            CHECK(w.at(n, t, f, l, s) == expect);
          }
}

TEST_CASE("a stationary walk repeats the start feature") {
  const auto c = SimplicialComplex::from_lists({0}, {}, {});
  const FeatureBundle b{STTensor({1, 2, 1}, std::vector<float>{3.0f, 4.0f}), STTensor({0, 1}), STTensor({0, 1})};
  const auto walks = sample_walks(c, full_adjacency(c, 1), vertex_starts(c), {1, 1, 1, false, 0});
  const auto w = walk_tensor(expand(b, 2, 1), walks, 1);
  CHECK(w.shape() == Shape{1, 2, 2, 2, 1});
  CHECK(w.at(0, 0, 0, 0, 0) == 3.0f);
  CHECK(w.at(0, 0, 0, 1, 0) == 3.0f);
  CHECK(w.at(0, 1, 0, 1, 0) == 4.0f);
  CHECK(w.at(0, 1, 1, 1, 0) == 0.5f);
}

TEST_CASE("zero features leave only the anonymous channel") {
  const auto c = fig1();
  const FeatureBundle b{STTensor({4, 2, 1}), STTensor({4, 1}), STTensor({1, 1})};
  const auto walks = sample_walks(c, full_adjacency(c, 1), vertex_starts(c), {3, 2, 1, false, 3});
  const auto w = walk_tensor(expand(b, 2, 1), walks, 4);
  for (std::size_t n = 0; n < 4; ++n)
    for (std::size_t l = 0; l < 4; ++l) {
      CHECK(w.at(n, 1, 0, l, 1) == 0.0f);
      CHECK(w.at(n, 1, 1, l, 1) > 0.0f);
    }
}

TEST_CASE("walk tensor requires every vertex exactly once") {
  const auto c = fig1();
  const FeatureBundle b{STTensor({4, 2, 1}), STTensor({4, 1}), STTensor({1, 1})};
  std::vector<SimplexId> starts{{0, 0}, {0, 1}, {0, 2}};
  const auto walks = sample_walks(c, full_adjacency(c, 1), starts, {3, 2, 1, false, 3});
  CHECK_THROWS_AS(walk_tensor(expand(b, 2, 1), walks, 4), Error);
  starts.push_back({0, 2});
  const auto dup = sample_walks(c, full_adjacency(c, 1), starts, {3, 2, 1, false, 3});
  CHECK_THROWS_AS(walk_tensor(expand(b, 2, 1), dup, 4), Error);
}
