#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "stsc/error.hpp"
#include "stsc/params.hpp"
#include "stsc/train.hpp"
#include "support/model_fixture.hpp"

using namespace stsc;

namespace {

Dataset small_dataset(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.T_total = 160;
  cfg.seed = seed;
  const auto desk = desk_complex();
  auto ds = synth(desk.complex, cfg);
  std::tie(ds.edge_feats, ds.tri_feats) = geometric_features(desk.complex, desk.positions);
  return ds;
}

ModelConfig small_model(Task task) {
  ModelConfig m;
  m.W = 4;
  m.H = 4;
  m.D = 8;
  m.walk_length = 3;
  m.walk_samples = 2;
  m.embed_c = 3;
  m.task = task;
  return m;
}

TrainConfig small_train(std::uint64_t seed) {
  TrainConfig t;
  t.epochs = 3;
  t.batch_size = 16;
  t.seed = seed;
  t.mask.seed = seed;
  return t;
}

std::vector<double> losses(const TrainResult& r) {
  std::vector<double> out;
  for (const auto& s : r.curve) out.push_back(s.train_loss);
  return out;
}

}  // namespace

TEST_CASE("first Adam step moves each weight by lr against its gradient sign") {
  ParamStore ps;
  ps.add("w", STTensor({3}, std::vector<float>{1.0f, 2.0f, 3.0f}));
  Adam adam(ps, {});
  adam.step(ps, {STTensor({3}, std::vector<float>{0.5f, -4.0f, 0.0f})}, 0.1);
  CHECK(ps[0][0] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(ps[0][1] == doctest::Approx(2.1).epsilon(1e-6));
  CHECK(ps[0][2] == 3.0f);
  CHECK(adam.steps() == 1);
  CHECK_THROWS_AS(adam.step(ps, {}, 0.1), Error);
}

TEST_CASE("Adam minimises a quadratic") {
  ParamStore ps;
  ps.add("w", STTensor({2}, std::vector<float>{3.0f, -2.0f}));
  Adam adam(ps, {});
  for (int i = 0; i < 2000; ++i) {
    STTensor g({2});
    g[0] = 2.0f * (ps[0][0] - 1.0f);
    g[1] = 2.0f * (ps[0][1] + 0.5f);
    adam.step(ps, {g}, 0.01);
  }
  CHECK(ps[0][0] == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(ps[0][1] == doctest::Approx(-0.5).epsilon(1e-2));
}

TEST_CASE("step schedule halves the rate") {
  const StepLR s{0.01, 50, 0.5};
  CHECK(s.at(0) == 0.01);
  CHECK(s.at(49) == 0.01);
  CHECK(s.at(50) == 0.005);
  CHECK(s.at(120) == 0.0025);
}

TEST_CASE("parameter files round-trip and reject garbage") {
  Model m(small_model(Task::forecast), 12, 4);
  std::stringstream ss;
  save_params(ss, m.params());
  const auto back = load_params(ss);
  CHECK(back == m.params());
  std::stringstream bad("not a parameter file");
  CHECK_THROWS_AS(load_params(bad), Error);
}

TEST_CASE("training is deterministic with frozen walks") {
  const auto ds = small_dataset(1);
  const auto mc = small_model(Task::forecast);
  auto tc = small_train(7);
  tc.freeze_walks = true;
  TaskData data(ds, mc, tc);
  Model a(mc, 12, 7), b(mc, 12, 7);
  const auto ra = train(a, data, tc), rb = train(b, data, tc);
  CHECK(losses(ra) == losses(rb));
  CHECK(a.params() == b.params());
  CHECK(ra.curve.size() == 3);
  for (double l : losses(ra)) CHECK(std::isfinite(l));
}

TEST_CASE("imputation training runs and reports masked metrics") {
  const auto ds = small_dataset(2);
  const auto mc = small_model(Task::impute);
  const auto tc = small_train(3);
  TaskData data(ds, mc, tc);
  CHECK(data.eval_mask().shape() == ds.signal.shape());
  Model m(mc, 12, 3);
  const auto r = train(m, data, tc);
  CHECK(r.curve.size() == 3);
  const auto mt = evaluate(m, data, Split::test);
  CHECK(mt.count > 0);
  CHECK(std::isfinite(mt.mae));
  CHECK(mt.rmse >= mt.mae);
  const auto bl = evaluate_baseline(data, Split::test, Baseline::mean);
  CHECK(bl.count == mt.count);
}

TEST_CASE("persistence baseline matches a hand computation") {
  const auto ds = small_dataset(3);
  const auto mc = small_model(Task::forecast);
  const auto tc = small_train(1);
  TaskData data(ds, mc, tc);
  const auto starts = data.starts(Split::test);
  MetricAccumulator acc;
  for (auto s : starts) {
    const auto last = slice_time(ds.signal, s + mc.W - 1, 1);
    const auto target = slice_time(ds.signal, s + mc.W, mc.H);
    STTensor pred(target.shape());
    for (std::size_t n = 0; n < pred.dim(0); ++n)
      for (std::size_t t = 0; t < pred.dim(1); ++t) pred.at(n, t, 0) = last.at(n, 0, 0);
    acc.add(pred, target);
  }
  const auto want = acc.result();
  const auto got = evaluate_baseline(data, Split::test, Baseline::persistence);
  CHECK(got.mae == doctest::Approx(want.mae).epsilon(1e-5));
  CHECK(got.rmse == doctest::Approx(want.rmse).epsilon(1e-5));
  CHECK(parse_baseline("mean") == Baseline::mean);
  CHECK_THROWS_AS(parse_baseline("median"), Error);
}

TEST_CASE("a non-finite loss stops training with a diagnostic") {
  const auto ds = small_dataset(4);
  const auto mc = small_model(Task::forecast);
  const auto tc = small_train(1);
  TaskData data(ds, mc, tc);
  Model m(mc, 12, 1);
  m.params().get("head.b")[0] = std::numeric_limits<float>::quiet_NaN();
  try {
    (void)train(m, data, tc);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::numeric_error);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("config JSON round-trips") {
  auto tc = small_train(9);
  tc.lr = 0.003;
  tc.loss = ops::LossKind::mse;
  const auto back = train_config_from_json(to_json(tc));
  CHECK(back.lr == 0.003);
  CHECK(back.loss == ops::LossKind::mse);
  CHECK(back.seed == 9);
  CHECK(back.mask.point_rate == tc.mask.point_rate);
  tc.batch_size = 0;
  CHECK_THROWS_AS(tc.validate(), Error);
}
