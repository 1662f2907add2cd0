#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "stsc/complex.hpp"
#include "stsc/delaunay.hpp"
#include "stsc/model.hpp"
#include "stsc/tensor.hpp"

namespace stsc {

/// Parameters of the synthetic generator
///   x_n(t) = offset_n + amp_n sin(2 pi t / period + phase_n) + d_n(t) + noise,
///   d(t)   = rho (I - coupling L0 / lambda) d(t - 1) + drive,
/// where L0 is the graph Laplacian and lambda its largest degree times two,
/// so the propagator is a contraction for coupling in [0, 1].
struct SynthConfig {
  std::size_t T_total = 600;
  std::size_t F = 1;
  double period = 24.0;
  double amplitude = 1.0;  // mean per-node amplitude; each node draws from [0.5, 1.5] x this
  double coupling = 0.5;
  double rho = 0.8;
  double drive = 0.05;  // std of the diffusion innovations
  double noise = 0.02;  // std of the observation noise
  bool random_phase = true;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const nlohmann::json& j);

enum class Split { train, val, test };
const char* to_string(Split s) noexcept;

struct SplitFractions {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

/// Half-open time range [begin, end).
struct TimeRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
};

/// Per-feature min-max scaling to [0, 1].
struct Scaler {
  std::vector<float> lo, hi;

  /// Fits on signal[:, range, :] of an (N, T, F) tensor.
  static Scaler fit(const STTensor& signal, TimeRange range);
  float scale(float v, std::size_t f) const;
  float unscale(float v, std::size_t f) const;
  /// Applies to the last axis of any tensor whose last axis is F.
  STTensor scale(const STTensor& x) const;
  STTensor unscale(const STTensor& x) const;
};

struct Dataset {
  SimplicialComplex complex;
  STTensor signal;      // (N, T_total, F)
  STTensor edge_feats;  // (N1, F1)
  STTensor tri_feats;   // (N2, F2)
  SplitFractions fractions;
  std::uint64_t seed = 0;
  nlohmann::json generator;  // recorded in the manifest

  std::size_t num_nodes() const { return signal.dim(0); }
  std::size_t steps() const { return signal.dim(1); }
  std::size_t features() const { return signal.dim(2); }
  /// Contiguous chronological ranges; train then val then test.
  TimeRange range(Split s) const;
  Scaler scaler() const { return Scaler::fit(signal, range(Split::train)); }
};

/// Synthetic signal on `complex`; deterministic per cfg.seed. Edge and
/// triangle features default to zeros of width 1 unless given.
Dataset synth(const SimplicialComplex& complex, const SynthConfig& cfg);

/// A 12-vertex complex that keeps the Figure-1 pattern (a filled triangle
/// with a dangling edge) and repeats it around a ring, with planar positions.
struct DeskComplex {
  SimplicialComplex complex;
  std::vector<Point2> positions;
};
DeskComplex desk_complex();

/// Edge lengths (N1 x 1) and triangle areas (N2 x 1), each divided by its
/// maximum.
std::pair<STTensor, STTensor> geometric_features(const SimplicialComplex& complex,
                                                 std::span<const Point2> positions);

/// Dataset directory: complex.json, nodes.csv (time,node,f0..),
/// edges.csv (u,v,f0..), triangles.csv (u,v,w,f0..), manifest.json.
void save_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Masking

struct MaskSpec {
  double point_rate = 0.05;
  double block_prob = 0.0015;  // per node per step
  std::size_t block_min = 12;
  std::size_t block_max = 48;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const MaskSpec& m);
MaskSpec mask_spec_from_json(const nlohmann::json& j);

struct BlockEvent {
  std::size_t node = 0;
  std::size_t start = 0;
  std::size_t length = 0;
};

/// Missing-value mask (1 = missing) for an (N, T, F) signal. Each cell is
/// missing with probability point_rate; each (node, step) starts a block
/// failure with probability block_prob, covering that node's features for a
/// length drawn uniformly from [block_min, block_max]. Every draw comes from
/// a stream keyed by the cell, so the mask does not depend on visiting order.
STTensor make_mask(const Shape& shape, const MaskSpec& spec, std::span<const BlockEvent> forced = {});

/// Returns (signal with masked cells zeroed, mask).
std::pair<STTensor, STTensor> apply_mask(const STTensor& signal, const MaskSpec& spec,
                                         std::span<const BlockEvent> forced = {});

// ---------------------------------------------------------------------------
// Windows

/// Window start offsets inside `range` with stride 1: forecast windows need
/// W + H steps, imputation windows W. Throws InvalidInput if none fit.
std::vector<std::size_t> window_starts(TimeRange range, std::size_t W, std::size_t H, Task task);

/// x[:, start : start + len, :].
STTensor slice_time(const STTensor& x, std::size_t start, std::size_t len);

struct Window {
  std::size_t start = 0;
  STTensor input;   // (N, W, F)
  STTensor target;  // (N, H, F) forecast or (N, W, F) impute
  STTensor mask;    // (N, W, F), 1 = missing; empty for forecast
};

/// Windows of `signal` over `range`. In impute mode the mask is cut from
/// `mask` (an (N, T, F) tensor) and the target is the window itself.
std::vector<Window> make_windows(const STTensor& signal, const STTensor* mask, TimeRange range,
                                 std::size_t W, std::size_t H, Task task);

// ---------------------------------------------------------------------------
// Metrics and baselines

struct Metrics {
  double mae = 0.0;
  double rmse = 0.0;
  double mre = 0.0;  // percent
  std::size_t count = 0;
};

nlohmann::json to_json(const Metrics& m);

/// Running sums so metrics can be accumulated over many windows.
class MetricAccumulator {
 public:
  /// Adds the positions where mask != 0 (all when the mask is empty).
  void add(const STTensor& pred, const STTensor& target, const STTensor& mask = {});
  /// Throws EmptyMask if nothing was added and NumericError if the
  /// selected targets sum to zero in absolute value (MRE undefined).
  Metrics result() const;

 private:
  double abs_ = 0.0, sq_ = 0.0, target_abs_ = 0.0;
  std::size_t count_ = 0;
};

Metrics metrics(const STTensor& pred, const STTensor& target, const STTensor& mask = {});

/// Repeats the last step of an (N, W, F) window H times.
STTensor persistence_forecast(const STTensor& input, std::size_t H);

/// Per-node, per-feature mean of the observed cells of signal[:, range, :];
/// falls back to the feature mean when a node has no observed cell.
STTensor node_means(const STTensor& signal, const STTensor* mask, TimeRange range);

/// Fills every cell of an (N, W, F) window with its node mean.
STTensor mean_imputation(const STTensor& means, std::size_t W);

}  // namespace stsc
