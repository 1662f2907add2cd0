#include <doctest.h>

#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "stsc/error.hpp"
#include "stsc/operators.hpp"
#include "stsc/walks.hpp"
#include "support/fixtures.hpp"

using namespace stsc;
using stsc::testing::fig1;

namespace {

// Reference labelling with a hash map, kept independent of anonymize().
std::vector<std::uint32_t> first_occurrence(const std::vector<std::uint32_t>& w) {
  std::unordered_map<std::uint32_t, std::uint32_t> label;
  std::vector<std::uint32_t> out;
  for (auto v : w) {
    auto [it, fresh] = label.emplace(v, std::uint32_t(label.size() + 1));
    out.push_back(it->second);
  }
  return out;
}

// Empirical one-step frequencies from `start` over `draws` walks.
std::map<std::size_t, double> step_frequencies(const SimplicialComplex& c, int variant, bool biased,
                                               SimplexId start, std::size_t draws) {
  const auto a = full_adjacency(c, variant);
  WalkConfig cfg{1, kMaxWalkParam, variant, biased, 12345};
  const std::vector<SimplexId> starts(draws / kMaxWalkParam, start);
  const auto batch = sample_walks(c, a, starts, cfg);
  std::map<std::size_t, double> freq;
  for (std::size_t i = 0; i < batch.num_starts(); ++i)
    for (std::size_t s = 0; s < batch.samples(); ++s) freq[batch.trajectory(i, s)[1]] += 1.0;
  for (auto& [k, v] : freq) v /= double(starts.size() * kMaxWalkParam);
  return freq;
}

}  // namespace

TEST_CASE("transition rows on the figure-1 complex") {
  const auto c = fig1();
  const std::size_t e12 = c.global_index({1, *c.find_edge(1, 2)});
  const std::size_t tri = c.global_index({2, 0});

  const auto r1 = transition_row(full_adjacency(c, 1), e12, false, c.counts());
  REQUIRE(r1.size() == 6);
  for (const auto& t : r1) CHECK(t.probability == doctest::Approx(1.0 / 6).epsilon(1e-15));

  const auto r2 = transition_row(full_adjacency(c, 2), e12, false, c.counts());
  REQUIRE(r2.size() == 3);
  for (const auto& t : r2) CHECK(t.probability == doctest::Approx(1.0 / 3).epsilon(1e-15));

  const auto rb = transition_row(full_adjacency(c, 1), e12, true, c.counts());
  REQUIRE(rb.size() == 6);
  for (const auto& t : rb)
    CHECK(t.probability == doctest::Approx(t.target == tri ? 4.0 / 9 : 1.0 / 9).epsilon(1e-15));
}

TEST_CASE("transition rows sum to one and biased rows share support") {
  const auto c = SimplicialComplex::from_edges(testing::random_graph(10, 0.5, 8), true);
  for (int variant : {1, 2}) {
    const auto a = full_adjacency(c, variant);
    for (std::size_t s = 0; s < c.size(); ++s) {
      const auto u = transition_row(a, s, false, c.counts());
      const auto b = transition_row(a, s, true, c.counts());
      REQUIRE(u.size() == b.size());
      double su = 0, sb = 0;
      for (std::size_t j = 0; j < u.size(); ++j) {
        CHECK(u[j].target == b[j].target);
        CHECK(u[j].probability >= 0.0);
        CHECK(b[j].probability >= 0.0);
        su += u[j].probability;
        sb += b[j].probability;
      }
      if (!u.empty()) {
        CHECK(std::abs(su - 1.0) <= 1e-12);
        CHECK(std::abs(sb - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("empirical step frequencies match the transition law") {
  const auto c = fig1();
  const SimplexId e12{1, *c.find_edge(1, 2)};
  const std::size_t tri = c.global_index({2, 0});
  const std::size_t draws = 200000;  // the acceptance run uses 10^6
  for (const auto& [f, p] : step_frequencies(c, 1, false, e12, draws)) CHECK(std::abs(p - 1.0 / 6) <= 0.005);
  for (const auto& [f, p] : step_frequencies(c, 2, false, e12, draws)) CHECK(std::abs(p - 1.0 / 3) <= 0.005);
  const auto fb = step_frequencies(c, 1, true, e12, draws);
  CHECK(fb.size() == 6);
  for (const auto& [f, p] : fb) CHECK(std::abs(p - (f == tri ? 4.0 / 9 : 1.0 / 9)) <= 0.005);
}

TEST_CASE("sampled steps stay on the operator's support") {
  const auto c = SimplicialComplex::from_edges(testing::random_graph(9, 0.5, 4), true);
  for (int variant : {1, 2})
    for (bool biased : {false, true}) {
      const auto a = full_adjacency(c, variant);
      const auto batch = sample_walks(c, a, vertex_starts(c), {6, 8, variant, biased, 77});
      for (std::size_t i = 0; i < batch.num_starts(); ++i)
        for (std::size_t s = 0; s < batch.samples(); ++s) {
          const auto w = batch.trajectory(i, s);
          CHECK(w[0] == c.global_index(batch.starts()[i]));
          for (std::size_t j = 1; j < w.size(); ++j)
            CHECK((a.at(w[j - 1], w[j]) == 1 || (a.row_nnz(w[j - 1]) == 0 && w[j] == w[j - 1])));
        }
    }
}

TEST_CASE("isolated vertices repeat in place") {
  const std::vector<Edge> e{{0, 1}};
  const std::vector<VertexId> extra{5};
  const auto c = SimplicialComplex::from_edges(e, true, extra);
  const std::vector<SimplexId> start{{0, *c.find_vertex(5)}};
  const auto batch = sample_walks(c, full_adjacency(c, 1), start, {4, 3, 1, false, 1});
  for (std::size_t s = 0; s < 3; ++s) {
    for (auto v : batch.trajectory(0, s)) CHECK(v == c.global_index(start[0]));
    for (auto l : batch.anonymous(0, s)) CHECK(l == 1);
  }
}

TEST_CASE("anonymize examples") {
  CHECK(anonymize(std::vector<std::uint32_t>{7, 3, 7, 9}) == std::vector<std::uint32_t>{1, 2, 1, 3});
  CHECK(anonymize(std::vector<std::uint32_t>{4, 4, 4}) == std::vector<std::uint32_t>{1, 1, 1});
}

TEST_CASE("anonymize matches the first-occurrence oracle on every short walk") {
  const auto c = fig1();
  const auto a = full_adjacency(c, 1);
  std::size_t checked = 0;
  std::vector<std::vector<std::uint32_t>> frontier;
  for (std::uint32_t s = 0; s < c.size(); ++s) frontier.push_back({s});
  for (int len = 0; len <= 5; ++len) {
    std::vector<std::vector<std::uint32_t>> next;
    for (const auto& w : frontier) {
      CHECK(anonymize(w) == first_occurrence(w));
      ++checked;
      for (auto n : a.row_cols(w.back())) {
        auto x = w;
        x.push_back(std::uint32_t(n));
        next.push_back(std::move(x));
      }
    }
    frontier = std::move(next);
  }
  CHECK(checked > 10000);
}

TEST_CASE("anonymous labels are a prefix of 1..K and relabelling invariant") {
  StreamRng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::uint32_t> w(1 + rng() % 8);
    for (auto& v : w) v = std::uint32_t(rng() % 6);
    const auto l = anonymize(w);
    std::uint32_t top = 0;
    for (auto v : l) {
      CHECK(v <= top + 1);
      top = std::max(top, v);
    }
    std::vector<std::uint32_t> perm(6);
    std::iota(perm.begin(), perm.end(), 100u);
    std::shuffle(perm.begin(), perm.end(), rng);
    auto relabelled = w;
    for (auto& v : relabelled) v = perm[v];
    CHECK(anonymize(relabelled) == l);
  }
}

TEST_CASE("sampling is deterministic and independent of worker count") {
  const auto c = SimplicialComplex::from_edges(testing::random_graph(15, 0.3, 6), true);
  const auto a = full_adjacency(c, 1);
  const WalkConfig cfg{5, 7, 1, true, 2024};
  const auto one = sample_walks(c, a, vertex_starts(c), cfg, 1);
  CHECK(one == sample_walks(c, a, vertex_starts(c), cfg, 1));
  CHECK(one == sample_walks(c, a, vertex_starts(c), cfg, 4));
  auto other = cfg;
  other.seed = 2025;
  CHECK_FALSE(one == sample_walks(c, a, vertex_starts(c), other, 1));
}

TEST_CASE("walk config bounds") {
  CHECK_THROWS_AS((WalkConfig{0, 1, 1, false, 0}.validate()), Error);
  CHECK_THROWS_AS((WalkConfig{1, 65, 1, false, 0}.validate()), Error);
  CHECK_THROWS_AS((WalkConfig{1, 1, 3, false, 0}.validate()), Error);
  CHECK_NOTHROW(WalkConfig{64, 64, 2, true, 0}.validate());
}

TEST_CASE("walk dump round-trips and has the documented size") {
  const auto c = fig1();
  const auto batch = sample_walks(c, full_adjacency(c, 1), vertex_starts(c), {3, 2, 1, false, 5});
  std::stringstream ss;
  write_walk_dump(ss, batch);
  const auto bytes = ss.str();
  CHECK(bytes.substr(0, 4) == "SWLK");
  CHECK(bytes.size() == walk_dump_size(4, 2, 3));
  CHECK(bytes.size() == 20 + 4 * 2 * 4 * (4 + 2));
  CHECK(read_walk_dump(ss) == batch);

  std::stringstream bad(bytes.substr(0, bytes.size() - 1));
  CHECK_THROWS_AS(read_walk_dump(bad), Error);
}

TEST_CASE("gather_semantics equals a naive gather") {
  const auto c = SimplicialComplex::from_edges(std::vector<Edge>{{0, 1}, {1, 2}, {0, 2}}, true);
  REQUIRE(c.size() == 7);
  StreamRng rng(3);
  STTensor unified({c.size(), 2});
  for (std::size_t i = 0; i < unified.size(); ++i) unified[i] = float(rng.uniform());
  const auto batch = sample_walks(c, full_adjacency(c, 1), vertex_starts(c), {3, 2, 1, false, 8});
  const auto g = gather_semantics(batch, unified);
  CHECK(g.shape() == Shape{3, 2, 4, 3});
  std::size_t k = 0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t j = 0; j < 4; ++j) {
        const auto idx = batch.trajectory(i, s)[j];
        CHECK(g[k++] == unified[idx * 2]);
        CHECK(g[k++] == unified[idx * 2 + 1]);
        CHECK(g[k++] == float(batch.anonymous(i, s)[j]) / 4.0f);
      }
}

TEST_CASE("gather_semantics rejects out-of-range trajectories") {
  const auto c = fig1();
  const auto batch = sample_walks(c, full_adjacency(c, 1), vertex_starts(c), {2, 1, 1, false, 0});
  STTensor small({3, 1});
  try {
    (void)gather_semantics(batch, small);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::internal_error || e.code() == ErrorCode::shape_error));
  }
}
