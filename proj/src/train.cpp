#include "stsc/train.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "stsc/operators.hpp"
#include "stsc/parallel.hpp"
#include "stsc/rng.hpp"

namespace stsc {

namespace {

enum Stream : std::uint64_t { kWalks = 11, kEvalWalks, kShuffle, kTrainMask, kDropout };

const char* to_string(ops::LossKind k) { return k == ops::LossKind::mae ? "mae" : "mse"; }

ops::LossKind parse_loss(const std::string& s) {
  if (s == "mae") return ops::LossKind::mae;
  if (s == "mse") return ops::LossKind::mse;
  fail(ErrorCode::invalid_input, "unknown loss '" + s + "' (mae|mse)");
}

std::vector<std::size_t> starts_or_empty(TimeRange r, const ModelConfig& m) {
  const std::size_t need = m.task == Task::forecast ? m.W + m.H : m.W;
  return r.size() >= need ? window_starts(r, m.W, m.H, m.task) : std::vector<std::size_t>{};
}

}  // namespace

void TrainConfig::validate() const {
  require(batch_size >= 1, ErrorCode::invalid_input, "batch size must be positive");
  require(lr > 0.0 && std::isfinite(lr), ErrorCode::invalid_input, "learning rate must be positive");
  require(lr_gamma > 0.0 && lr_gamma <= 1.0, ErrorCode::invalid_input, "lr decay must lie in (0, 1]");
  require(threads >= 1, ErrorCode::invalid_input, "need at least one thread");
  mask.validate();
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},     {"batch_size", c.batch_size}, {"patience", c.patience},
          {"lr", c.lr},             {"lr_step", c.lr_step},       {"lr_gamma", c.lr_gamma},
          {"loss", to_string(c.loss)}, {"freeze_walks", c.freeze_walks}, {"seed", c.seed},
          {"threads", c.threads},   {"mask", to_json(c.mask)}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.patience = j.value("patience", c.patience);
    c.lr = j.value("lr", c.lr);
    c.lr_step = j.value("lr_step", c.lr_step);
    c.lr_gamma = j.value("lr_gamma", c.lr_gamma);
    c.loss = parse_loss(j.value("loss", std::string("mae")));
    c.freeze_walks = j.value("freeze_walks", c.freeze_walks);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    if (j.contains("mask")) c.mask = mask_spec_from_json(j["mask"]);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_input, std::string("bad training config: ") + e.what());
  }
  c.validate();
  return c;
}

TaskData::TaskData(const Dataset& ds, const ModelConfig& model, const TrainConfig& train)
    : ds_(&ds),
      model_(model),
      train_(train),
      scaler_(ds.scaler()),
      scaled_(scaler_.scale(ds.signal)),
      sampler_(full_adjacency(ds.complex, model.walk_variant), ds.complex.counts(), model.walk_biased) {
  model_.validate();
  train_.validate();
  require(ds.features() == model.F, ErrorCode::invalid_input,
          "dataset has " + std::to_string(ds.features()) + " features, model expects " +
              std::to_string(model.F));
  if (model.task == Task::impute) eval_mask_ = make_mask(ds.signal.shape(), train.mask);
  for (Split s : {Split::train, Split::val, Split::test})
    starts_[std::size_t(s)] = starts_or_empty(ds.range(s), model);
  require(!starts_[0].empty(), ErrorCode::invalid_input,
          "training split of " + std::to_string(ds.range(Split::train).size()) +
              " steps is too short for one window");
}

const std::vector<std::size_t>& TaskData::starts(Split s) const { return starts_[std::size_t(s)]; }

WalkBatch TaskData::walks(std::optional<std::size_t> epoch) const {
  const std::uint64_t seed =
      epoch ? derive_seed(train_.seed, kWalks, train_.freeze_walks ? 0 : *epoch)
            : derive_seed(train_.seed, kEvalWalks);
  const auto starts = vertex_starts(ds_->complex);
  return sample_walks(sampler_, ds_->complex, starts, model_.walk_config(seed), train_.threads);
}

TaskData::Batch TaskData::batch(std::span<const std::size_t> starts, const WalkBatch& walks,
                                std::optional<std::uint64_t> train_mask_key) const {
  const std::size_t N = ds_->num_nodes(), W = model_.W, F = model_.F;
  std::vector<STTensor> inputs, targets, masks;
  for (std::size_t s : starts) {
    STTensor x = slice_time(scaled_, s, W);
    if (model_.task == Task::forecast) {
      inputs.push_back(window_input(model_, x, nullptr, ds_->edge_feats, ds_->tri_feats, walks));
      targets.push_back(slice_time(scaled_, s + W, model_.H));
      continue;
    }
    const STTensor ev = slice_time(eval_mask_, s, W);
    STTensor hide = ev, loss_mask = ev;
    if (train_mask_key) {
      MaskSpec spec = train_.mask;
      spec.seed = derive_seed(*train_mask_key, s);
      const STTensor tm = make_mask({N, W, F}, spec);
      for (std::size_t i = 0; i < tm.size(); ++i) {
        hide[i] = (ev[i] != 0.0f || tm[i] != 0.0f) ? 1.0f : 0.0f;
        loss_mask[i] = (tm[i] != 0.0f && ev[i] == 0.0f) ? 1.0f : 0.0f;
      }
    }
    inputs.push_back(window_input(model_, x, &hide, ds_->edge_feats, ds_->tri_feats, walks));
    targets.push_back(std::move(x));
    masks.push_back(std::move(loss_mask));
  }
  Batch b{stack(inputs), stack(targets), masks.empty() ? STTensor() : stack(masks)};
  return b;
}

namespace {

// Training allocates and frees the same large activation buffers every step.
// glibc's defaults hand blocks above 128 KiB to mmap and trim freed memory,
// which turns every step into page faults.
void tune_allocator() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
  });
#endif
}

}  // namespace

TrainResult train(Model& model, const TaskData& data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  tune_allocator();
  using clock = std::chrono::steady_clock;
  const bool impute = model.config().task == Task::impute;
  const bool has_val = !data.starts(Split::val).empty();
  Adam adam(model.params(), AdamConfig{cfg.lr});
  const StepLR schedule{cfg.lr, cfg.lr_step, cfg.lr_gamma};

  TrainResult result;
  result.initial_train_mae = evaluate_scaled_mae(model, data, Split::train, cfg.batch_size);
  result.best_val_mae = std::numeric_limits<double>::infinity();
  ParamStore best = model.params();
  std::size_t since_best = 0;
  std::vector<std::size_t> order = data.starts(Split::train);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = clock::now();
    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = schedule.at(epoch);
    const WalkBatch walks = data.walks(epoch);
    StreamRng rng(derive_seed(cfg.seed, kShuffle, epoch));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[std::size_t(rng.uniform() * double(i))]);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::span<const std::size_t> chunk(order.data() + b,
                                               std::min(cfg.batch_size, order.size() - b));
      std::optional<std::uint64_t> mask_key;
      if (impute) mask_key = derive_seed(cfg.seed, kTrainMask, epoch);
      const auto bt = data.batch(chunk, walks, mask_key);
      if (impute && std::none_of(bt.mask.data().begin(), bt.mask.data().end(),
                                 [](float v) { return v != 0.0f; }))
        continue;
      Tape<float> tape;
      const auto p = model.bind(tape, true);
      const auto y = model.forward(tape, p, bt.input, true, derive_seed(cfg.seed, kDropout, result.steps));
      const auto loss = ops::masked_loss(y, bt.target, bt.mask, cfg.loss);
      const double v = loss.value()[0];
      const auto where = "epoch " + std::to_string(epoch) + ", step " + std::to_string(result.steps) +
                         " (batch " + std::to_string(batches) + ")";
      require(std::isfinite(v), ErrorCode::numeric_error, "non-finite training loss at " + where);
      tape.backward(loss);
      std::vector<STTensor> grads;
      grads.reserve(p.size());
      for (const auto& var : p) grads.push_back(tape.gradient(var));
      adam.step(model.params(), grads, stats.lr);
      require(model.params().all_finite(), ErrorCode::numeric_error,
              "non-finite parameters after update at " + where);
      loss_sum += v;
      ++batches;
      ++result.steps;
    }
    stats.train_loss = batches ? loss_sum / double(batches) : 0.0;
    stats.val_mae = has_val ? evaluate_scaled_mae(model, data, Split::val, cfg.batch_size) : stats.train_loss;
    stats.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    result.curve.push_back(stats);
    if (on_epoch) on_epoch(stats);

    if (stats.val_mae < result.best_val_mae) {
      result.best_val_mae = stats.val_mae;
      result.best_epoch = epoch;
      best = model.params();
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      result.stopped_early = true;
      break;
    }
  }
  if (!result.curve.empty()) model.params() = std::move(best);
  result.final_train_mae = evaluate_scaled_mae(model, data, Split::train, cfg.batch_size);
  return result;
}

namespace {

/// Runs `fn(batch_index, predictions)` for every batch of a split with
/// evaluation walks, in parallel over batches.
template <typename Fn>
void for_each_prediction(const Model& model, const TaskData& data, Split split,
                         std::size_t batch_size, unsigned threads, Fn&& fn) {
  const auto& starts = data.starts(split);
  require(!starts.empty(), ErrorCode::invalid_input,
          std::string(to_string(split)) + " split is too short for one window");
  const WalkBatch walks = data.walks(std::nullopt);
  const std::size_t nb = (starts.size() + batch_size - 1) / batch_size;
  std::vector<TaskData::Batch> batches(nb);
  std::vector<STTensor> preds(nb);
  parallel_for(nb, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::span<const std::size_t> chunk(starts.data() + i * batch_size,
                                               std::min(batch_size, starts.size() - i * batch_size));
      batches[i] = data.batch(chunk, walks, std::nullopt);
      preds[i] = model.predict(batches[i].input);
    }
  });
  for (std::size_t i = 0; i < nb; ++i) fn(batches[i], preds[i]);
}

}  // namespace

double evaluate_scaled_mae(const Model& model, const TaskData& data, Split split,
                           std::size_t batch_size) {
  double abs = 0.0;
  std::size_t count = 0;
  for_each_prediction(model, data, split, batch_size, data.threads(),
                      [&](const TaskData::Batch& b, const STTensor& pred) {
                        for (std::size_t i = 0; i < pred.size(); ++i) {
                          if (!b.mask.empty() && b.mask[i] == 0.0f) continue;
                          abs += std::abs(double(pred[i]) - double(b.target[i]));
                          ++count;
                        }
                      });
  require(count > 0, ErrorCode::empty_mask,
          std::string("no evaluated positions in the ") + to_string(split) + " split");
  return abs / double(count);
}

Metrics evaluate(const Model& model, const TaskData& data, Split split, std::size_t batch_size) {
  MetricAccumulator acc;
  const auto& sc = data.scaler();
  for_each_prediction(model, data, split, batch_size, data.threads(),
                      [&](const TaskData::Batch& b, const STTensor& pred) {
                        acc.add(sc.unscale(pred), sc.unscale(b.target), b.mask);
                      });
  return acc.result();
}

std::vector<STTensor> predict_windows(const Model& model, const TaskData& data, Split split,
                                      std::size_t batch_size) {
  std::vector<STTensor> out;
  const auto& sc = data.scaler();
  for_each_prediction(model, data, split, batch_size, data.threads(),
                      [&](const TaskData::Batch&, const STTensor& pred) {
                        const STTensor raw = sc.unscale(pred);
                        const std::size_t per = raw.size() / raw.dim(0);
                        Shape s(raw.shape().begin() + 1, raw.shape().end());
                        for (std::size_t i = 0; i < raw.dim(0); ++i)
                          out.emplace_back(s, std::vector<float>(raw.ptr() + i * per,
                                                                 raw.ptr() + (i + 1) * per));
                      });
  return out;
}

Baseline parse_baseline(std::string_view s) {
  if (s == "persistence") return Baseline::persistence;
  if (s == "mean") return Baseline::mean;
  fail(ErrorCode::invalid_input, "unknown baseline '" + std::string(s) + "' (persistence|mean)");
}

Metrics evaluate_baseline(const TaskData& data, Split split, Baseline kind) {
  const auto& ds = data.dataset();
  const auto& cfg = data.model_config();
  const auto& starts = data.starts(split);
  require(!starts.empty(), ErrorCode::invalid_input,
          std::string(to_string(split)) + " split is too short for one window");
  const bool impute = cfg.task == Task::impute;
  require(!(impute && kind == Baseline::persistence), ErrorCode::invalid_input,
          "the persistence baseline applies to forecasting only");
  const STTensor* mask = impute ? &data.eval_mask() : nullptr;
  const STTensor means = node_means(ds.signal, mask, ds.range(Split::train));
  MetricAccumulator acc;
  for (std::size_t s : starts) {
    const STTensor input = slice_time(ds.signal, s, cfg.W);
    if (impute) {
      acc.add(mean_imputation(means, cfg.W), input, slice_time(*mask, s, cfg.W));
    } else {
      const STTensor target = slice_time(ds.signal, s + cfg.W, cfg.H);
      acc.add(kind == Baseline::persistence ? persistence_forecast(input, cfg.H)
                                            : mean_imputation(means, cfg.H),
              target);
    }
  }
  return acc.result();
}

}  // namespace stsc
