#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "stsc/data.hpp"
#include "stsc/model.hpp"
#include "stsc/params.hpp"

namespace stsc {

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  std::size_t patience = 30;  // epochs without validation improvement; 0 disables
  double lr = 1e-2;
  std::size_t lr_step = 50;
  double lr_gamma = 0.5;
  ops::LossKind loss = ops::LossKind::mae;
  bool freeze_walks = false;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  MaskSpec mask;  // imputation: evaluation mask and the rates of training masks

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct EpochStats {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // mean over batches, scaled units
  double val_mae = 0.0;     // scaled units
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> curve;
  std::size_t best_epoch = 0;
  double best_val_mae = 0.0;
  double initial_train_mae = 0.0;  // before the first update, scaled units
  double final_train_mae = 0.0;    // with the restored best parameters
  bool stopped_early = false;
  std::size_t steps = 0;
};

/// Everything the model sees for one dataset and task: the scaled signal,
/// the evaluation mask (imputation) and the walk operator.
class TaskData {
 public:
  TaskData(const Dataset& ds, const ModelConfig& model, const TrainConfig& train);

  const Dataset& dataset() const noexcept { return *ds_; }
  const ModelConfig& model_config() const noexcept { return model_; }
  unsigned threads() const noexcept { return train_.threads; }
  const Scaler& scaler() const noexcept { return scaler_; }
  const STTensor& scaled() const noexcept { return scaled_; }
  /// (N, T, F) evaluation mask, 1 = missing; empty when forecasting.
  const STTensor& eval_mask() const noexcept { return eval_mask_; }
  const std::vector<std::size_t>& starts(Split s) const;

  /// Walks for an epoch (or the fixed evaluation set when `epoch` is empty).
  WalkBatch walks(std::optional<std::size_t> epoch) const;

  /// Inputs, targets and loss masks for the windows `starts`. Imputation
  /// inputs hide the evaluation mask plus, with `train_mask_key`, a fresh
  /// training mask; the loss then covers only training-masked cells that
  /// are observed. Without it the loss covers the evaluation mask.
  struct Batch {
    STTensor input, target, mask;
  };
  Batch batch(std::span<const std::size_t> starts, const WalkBatch& walks,
              std::optional<std::uint64_t> train_mask_key) const;

 private:
  const Dataset* ds_;
  ModelConfig model_;
  TrainConfig train_;
  Scaler scaler_;
  STTensor scaled_;
  STTensor eval_mask_;
  std::array<std::vector<std::size_t>, 3> starts_;
  WalkSampler sampler_;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Trains in place and leaves the best-validation parameters in `model`.
/// Throws NumericError naming the epoch and step if the loss goes NaN.
TrainResult train(Model& model, const TaskData& data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Scaled-unit MAE of the model over a split (no dropout, evaluation walks).
double evaluate_scaled_mae(const Model& model, const TaskData& data, Split split,
                           std::size_t batch_size = 64);

/// Metrics in original units over a split.
Metrics evaluate(const Model& model, const TaskData& data, Split split, std::size_t batch_size = 64);

/// Predictions in original units for every window of a split, in window order.
std::vector<STTensor> predict_windows(const Model& model, const TaskData& data, Split split,
                                      std::size_t batch_size = 64);

enum class Baseline { persistence, mean };
Baseline parse_baseline(std::string_view s);
/// Persistence for forecasting, train-split node means for imputation.
Metrics evaluate_baseline(const TaskData& data, Split split, Baseline kind);

}  // namespace stsc
