#include "stsc/params.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "stsc/binio.hpp"

namespace stsc {

namespace {

constexpr char kMagic[4] = {'S', 'P', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

std::size_t ParamStore::add(std::string name, STTensor init) {
  require(!contains(name), ErrorCode::invalid_input, "duplicate parameter '" + name + "'");
  params_.push_back({std::move(name), std::move(init)});
  return params_.size() - 1;
}

std::size_t ParamStore::index(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  fail(ErrorCode::invalid_input, "unknown parameter '" + std::string(name) + "'");
}

bool ParamStore::contains(std::string_view name) const {
  return std::any_of(params_.begin(), params_.end(),
                     [&](const Parameter& p) { return p.name == name; });
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

bool ParamStore::all_finite() const {
  for (const auto& p : params_)
    for (float v : p.value.data())
      if (!std::isfinite(v)) return false;
  return true;
}

void save_params(std::ostream& os, const ParamStore& params) {
  using binio::put_le;
  os.write(kMagic, 4);
  put_le<std::uint32_t>(os, kVersion);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params.params()) {
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(p.value.rank()));
    for (auto d : p.value.shape()) put_le<std::uint64_t>(os, d);
    for (float v : p.value.data()) put_le<std::uint32_t>(os, std::bit_cast<std::uint32_t>(v));
  }
  if (!os) fail(ErrorCode::io_error, "failed to write parameter checkpoint");
}

ParamStore load_params(std::istream& is) {
  using binio::get_le;
  constexpr const char* what = "parameter checkpoint";
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    fail(ErrorCode::io_error, "not a parameter checkpoint (bad magic)");
  const auto version = get_le<std::uint32_t>(is, what);
  require(version == kVersion, ErrorCode::io_error,
          "unsupported checkpoint version " + std::to_string(version));
  const auto count = get_le<std::uint32_t>(is, what);
  ParamStore out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get_le<std::uint32_t>(is, what);
    require(len <= 4096, ErrorCode::io_error, "implausible parameter name length");
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) fail(ErrorCode::io_error, "truncated parameter checkpoint");
    const auto rank = get_le<std::uint32_t>(is, what);
    require(rank <= 8, ErrorCode::io_error, "implausible parameter rank");
    Shape shape(rank);
    for (auto& d : shape) d = get_le<std::uint64_t>(is, what);
    require(shape_size(shape) <= (std::size_t{1} << 32), ErrorCode::io_error,
            "implausible parameter size");
    STTensor t(shape);
    for (auto& v : t.data()) v = std::bit_cast<float>(get_le<std::uint32_t>(is, what));
    out.add(std::move(name), std::move(t));
  }
  return out;
}

void save_params(const std::filesystem::path& path, const ParamStore& params) {
  std::ofstream os(path, std::ios::binary);
  require(bool(os), ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  save_params(os, params);
}

ParamStore load_params(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(bool(is), ErrorCode::io_error, "cannot open " + path.string());
  return load_params(is);
}

Adam::Adam(const ParamStore& params, AdamConfig cfg) : cfg_(cfg) {
  for (const auto& p : params.params()) {
    m_.emplace_back(p.value.size(), 0.0);
    v_.emplace_back(p.value.size(), 0.0);
  }
}

void Adam::step(ParamStore& params, const std::vector<STTensor>& grads, double lr) {
  require(grads.size() == params.size() && m_.size() == params.size(), ErrorCode::internal_error,
          "gradient list does not match the parameter store");
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, double(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, double(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = params[i];
    const auto& g = grads[i];
    require(g.shape() == w.shape(), ErrorCode::internal_error, "gradient shape mismatch");
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * double(g[j]) * g[j];
      w[j] -= float(lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg_.eps));
    }
  }
}

double StepLR::at(std::size_t epoch) const {
  return base * std::pow(gamma, double(step_size ? epoch / step_size : 0));
}

}  // namespace stsc
