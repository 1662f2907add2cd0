#include "stsc/walks.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "stsc/binio.hpp"
#include "stsc/error.hpp"
#include "stsc/parallel.hpp"

namespace stsc {

namespace {

using binio::get_le;
using binio::put_le;

constexpr char kDumpMagic[4] = {'S', 'W', 'L', 'K'};
constexpr std::uint32_t kDumpVersion = 1;

double order_weight(std::size_t target, const std::array<std::size_t, 3>& counts) {
  // alpha_k = 1 / N_k for the order k that owns global index `target`.
  if (target < counts[0]) return 1.0 / static_cast<double>(counts[0]);
  if (target < counts[0] + counts[1]) return 1.0 / static_cast<double>(counts[1]);
  return 1.0 / static_cast<double>(counts[2]);
}

}  // namespace

void WalkConfig::validate() const {
  require(length >= 1 && length <= kMaxWalkParam, ErrorCode::invalid_input,
          "walk length must lie in [1, 64], got " + std::to_string(length));
  require(samples >= 1 && samples <= kMaxWalkParam, ErrorCode::invalid_input,
          "walk samples must lie in [1, 64], got " + std::to_string(samples));
  require(variant == 1 || variant == 2, ErrorCode::invalid_input,
          "walk variant must be 1 or 2");
}

std::vector<Transition> transition_row(const SparseOperator& A, std::size_t s, bool biased,
                                       std::array<std::size_t, 3> counts) {
  require(s < A.rows(), ErrorCode::invalid_input, "simplex index outside operator");
  auto cols = A.row_cols(s);
  std::vector<Transition> out;
  if (cols.empty()) return out;
  out.reserve(cols.size());
  if (!biased) {
    // D(s) is the row sum; every entry of a full adjacency is 1.
    double degree = 0.0;
    for (auto v : A.row_values(s)) degree += static_cast<double>(v);
    auto vals = A.row_values(s);
    for (std::size_t k = 0; k < cols.size(); ++k)
      out.push_back({cols[k], static_cast<double>(vals[k]) / degree});
    return out;
  }
  double total = 0.0;
  for (auto c : cols) total += order_weight(c, counts);
  for (auto c : cols) out.push_back({c, order_weight(c, counts) / total});
  return out;
}

WalkSampler::WalkSampler(const SparseOperator& A, std::array<std::size_t, 3> counts,
                         bool biased) {
  require(A.rows() == A.cols(), ErrorCode::shape_error, "walk operator must be square");
  ptr_.assign(A.rows() + 1, 0);
  for (std::size_t s = 0; s < A.rows(); ++s) {
    double acc = 0.0;
    for (const auto& t : transition_row(A, s, biased, counts)) {
      acc += t.probability;
      targets_.push_back(static_cast<std::uint32_t>(t.target));
      cumulative_.push_back(acc);
    }
    ptr_[s + 1] = targets_.size();
  }
}

std::size_t WalkSampler::step(std::size_t from, double u) const {
  const std::size_t lo = ptr_[from], hi = ptr_[from + 1];
  if (lo == hi) return from;
  const double scaled = u * cumulative_[hi - 1];
  auto it = std::upper_bound(cumulative_.begin() + static_cast<std::ptrdiff_t>(lo),
                             cumulative_.begin() + static_cast<std::ptrdiff_t>(hi), scaled);
  std::size_t k = std::min(static_cast<std::size_t>(it - cumulative_.begin()), hi - 1);
  return targets_[k];
}

void WalkSampler::walk(std::size_t start, std::span<std::uint32_t> out, StreamRng& rng) const {
  if (out.empty()) return;
  std::size_t cur = start;
  out[0] = static_cast<std::uint32_t>(cur);
  for (std::size_t j = 1; j < out.size(); ++j) {
    cur = step(cur, rng.uniform());
    out[j] = static_cast<std::uint32_t>(cur);
  }
}

WalkBatch::WalkBatch(std::vector<SimplexId> starts, std::uint32_t samples, std::uint32_t length)
    : starts_(std::move(starts)),
      samples_(samples),
      length_(length),
      trajectories_(starts_.size() * samples * (length + 1), 0),
      anonymous_(trajectories_.size(), 0) {}

std::size_t WalkBatch::offset(std::size_t start, std::size_t sample) const {
  require(start < starts_.size() && sample < samples_, ErrorCode::invalid_input,
          "walk (" + std::to_string(start) + ", " + std::to_string(sample) + ") out of range");
  return (start * samples_ + sample) * positions();
}

std::span<const std::uint32_t> WalkBatch::trajectory(std::size_t start, std::size_t sample) const {
  return {trajectories_.data() + offset(start, sample), positions()};
}
std::span<std::uint32_t> WalkBatch::trajectory(std::size_t start, std::size_t sample) {
  return {trajectories_.data() + offset(start, sample), positions()};
}
std::span<const std::uint16_t> WalkBatch::anonymous(std::size_t start, std::size_t sample) const {
  return {anonymous_.data() + offset(start, sample), positions()};
}
std::span<std::uint16_t> WalkBatch::anonymous(std::size_t start, std::size_t sample) {
  return {anonymous_.data() + offset(start, sample), positions()};
}

WalkBatch sample_walks(const SimplicialComplex& complex, const SparseOperator& A,
                       std::span<const SimplexId> starts, const WalkConfig& cfg,
                       unsigned threads) {
  return sample_walks(WalkSampler(A, complex.counts(), cfg.biased), complex, starts, cfg,
                      threads);
}

WalkBatch sample_walks(const WalkSampler& sampler, const SimplicialComplex& complex,
                       std::span<const SimplexId> starts, const WalkConfig& cfg,
                       unsigned threads) {
  cfg.validate();
  require(sampler.size() == complex.size(), ErrorCode::shape_error,
          "walk operator does not match the complex");
  std::vector<std::size_t> global;
  global.reserve(starts.size());
  for (const auto& s : starts) global.push_back(complex.global_index(s));

  WalkBatch batch({starts.begin(), starts.end()}, cfg.samples, cfg.length);
  const std::size_t jobs = starts.size() * cfg.samples;
  parallel_for(jobs, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t job = begin; job < end; ++job) {
      const std::size_t i = job / cfg.samples, s = job % cfg.samples;
      StreamRng rng(derive_seed(cfg.seed, i, s));
      auto traj = batch.trajectory(i, s);
      sampler.walk(global[i], traj, rng);
      auto labels = anonymize(traj);
      auto anon = batch.anonymous(i, s);
      std::copy(labels.begin(), labels.end(), anon.begin());
    }
  });
  return batch;
}

std::vector<SimplexId> vertex_starts(const SimplicialComplex& complex) {
  std::vector<SimplexId> out(complex.count(0));
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = {0, v};
  return out;
}

std::vector<std::uint32_t> anonymize(std::span<const std::uint32_t> walk) {
  std::vector<std::uint32_t> out(walk.size());
  // Walks are short, so a linear scan over the distinct values seen so far
  // beats hashing.
  std::vector<std::uint32_t> seen;
  for (std::size_t i = 0; i < walk.size(); ++i) {
    auto it = std::find(seen.begin(), seen.end(), walk[i]);
    if (it == seen.end()) {
      seen.push_back(walk[i]);
      out[i] = static_cast<std::uint32_t>(seen.size());
    } else {
      out[i] = static_cast<std::uint32_t>(it - seen.begin()) + 1;
    }
  }
  return out;
}

STTensor gather_semantics(const WalkBatch& batch, const STTensor& unified) {
  require(unified.rank() == 2, ErrorCode::shape_error,
          "unified features must be (simplices, F), got " + shape_str(unified.shape()));
  const std::size_t n_simplices = unified.dim(0), F = unified.dim(1);
  const std::size_t P = batch.positions();
  STTensor out({batch.num_starts(), batch.samples(), P, F + 1});
  const float scale = 1.0f / static_cast<float>(P);
  float* dst = out.ptr();
  for (std::size_t i = 0; i < batch.num_starts(); ++i)
    for (std::size_t s = 0; s < batch.samples(); ++s) {
      auto traj = batch.trajectory(i, s);
      auto anon = batch.anonymous(i, s);
      for (std::size_t j = 0; j < P; ++j) {
        if (traj[j] >= n_simplices)
          fail(ErrorCode::internal_error, "trajectory visits simplex " +
                                              std::to_string(traj[j]) + " outside the table");
        const float* src = unified.ptr() + traj[j] * F;
        dst = std::copy(src, src + F, dst);
        *dst++ = static_cast<float>(anon[j]) * scale;
      }
    }
  return out;
}

std::size_t walk_dump_size(std::size_t num_starts, std::uint32_t samples, std::uint32_t length) {
  const std::size_t cells = num_starts * samples * (static_cast<std::size_t>(length) + 1);
  return 4 + 4 * 4 + cells * 4 + cells * 2;
}

void write_walk_dump(std::ostream& os, const WalkBatch& batch) {
  os.write(kDumpMagic, 4);
  put_le<std::uint32_t>(os, kDumpVersion);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(batch.num_starts()));
  put_le<std::uint32_t>(os, batch.samples());
  put_le<std::uint32_t>(os, batch.length());
  for (auto v : batch.trajectories()) put_le<std::uint32_t>(os, v);
  for (auto v : batch.anonymous_labels()) put_le<std::uint16_t>(os, v);
  if (!os) fail(ErrorCode::io_error, "failed writing walk dump");
}

WalkBatch read_walk_dump(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || !std::equal(magic, magic + 4, kDumpMagic))
    fail(ErrorCode::io_error, "not a walk dump (bad magic)");
  const auto version = get_le<std::uint32_t>(is, "walk dump");
  require(version == kDumpVersion, ErrorCode::io_error,
          "unsupported walk dump version " + std::to_string(version));
  const auto n = get_le<std::uint32_t>(is, "walk dump");
  const auto samples = get_le<std::uint32_t>(is, "walk dump");
  const auto length = get_le<std::uint32_t>(is, "walk dump");
  std::vector<std::uint32_t> traj(static_cast<std::size_t>(n) * samples * (length + 1));
  for (auto& v : traj) v = get_le<std::uint32_t>(is, "walk dump");
  std::vector<SimplexId> starts(n);
  for (std::size_t i = 0; i < n; ++i)
    starts[i] = {0, samples ? traj[i * samples * (length + 1)] : 0};
  WalkBatch batch(std::move(starts), samples, length);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 0; s < samples; ++s) {
      auto t = batch.trajectory(i, s);
      for (auto& v : t) v = traj[k++];
    }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 0; s < samples; ++s)
      for (auto& v : batch.anonymous(i, s)) v = get_le<std::uint16_t>(is, "walk dump");
  return batch;
}

void write_walk_jsonl(std::ostream& os, const WalkBatch& batch) {
  for (std::size_t i = 0; i < batch.num_starts(); ++i)
    for (std::size_t s = 0; s < batch.samples(); ++s) {
      auto t = batch.trajectory(i, s);
      auto a = batch.anonymous(i, s);
      nlohmann::json line = {
          {"start", i},
          {"sample", s},
          {"walk", std::vector<std::uint32_t>(t.begin(), t.end())},
          {"anonymous", std::vector<std::uint16_t>(a.begin(), a.end())},
      };
      os << line.dump() << '\n';
    }
}

}  // namespace stsc
