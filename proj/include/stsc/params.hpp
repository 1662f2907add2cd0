#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "stsc/tensor.hpp"

namespace stsc {

struct Parameter {
  std::string name;
  STTensor value;
};

/// Named learnable arrays in registration order.
class ParamStore {
 public:
  /// Throws InvalidInput on a duplicate name.
  std::size_t add(std::string name, STTensor init);
  /// Throws InvalidInput if absent.
  std::size_t index(std::string_view name) const;
  bool contains(std::string_view name) const;

  STTensor& operator[](std::size_t i) { return params_.at(i).value; }
  const STTensor& operator[](std::size_t i) const { return params_.at(i).value; }
  STTensor& get(std::string_view name) { return params_[index(name)].value; }
  const STTensor& get(std::string_view name) const { return params_[index(name)].value; }

  std::size_t size() const noexcept { return params_.size(); }
  const std::vector<Parameter>& params() const noexcept { return params_; }
  std::size_t scalar_count() const;
  bool all_finite() const;

  bool operator==(const ParamStore&) const = default;

 private:
  std::vector<Parameter> params_;
};

inline bool operator==(const Parameter& a, const Parameter& b) {
  return a.name == b.name && a.value == b.value;
}

/// Checkpoint: "SPRM", u32 version, u32 count, then per parameter u32 name
/// length, name bytes, u32 rank, u64 dims, float32 payload; little-endian.
void save_params(std::ostream& os, const ParamStore& params);
ParamStore load_params(std::istream& is);
void save_params(const std::filesystem::path& path, const ParamStore& params);
ParamStore load_params(const std::filesystem::path& path);

struct AdamConfig {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moments are kept in double.
class Adam {
 public:
  Adam(const ParamStore& params, AdamConfig cfg);

  /// Applies one update with learning rate `lr`; grads[i] matches params[i].
  void step(ParamStore& params, const std::vector<STTensor>& grads, double lr);
  std::size_t steps() const noexcept { return t_; }

 private:
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// Learning rate multiplied by `gamma` every `step_size` epochs.
struct StepLR {
  double base = 1e-2;
  std::size_t step_size = 50;
  double gamma = 0.5;

  double at(std::size_t epoch) const;
};

}  // namespace stsc
