#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "stsc/complex.hpp"
#include "stsc/rng.hpp"
#include "stsc/sparse.hpp"
#include "stsc/tensor.hpp"

namespace stsc {

inline constexpr std::uint32_t kMaxWalkParam = 64;

struct WalkConfig {
  std::uint32_t length = 4;   // steps; a trajectory holds length + 1 simplices
  std::uint32_t samples = 4;  // walks per start
  int variant = 1;            // which full adjacency the walks run on
  bool biased = false;        // order-aware transition weights
  std::uint64_t seed = 0;

  /// Throws InvalidInput unless length, samples lie in [1, 64] and the
  /// variant is 1 or 2.
  void validate() const;
};

struct Transition {
  std::size_t target = 0;
  double probability = 0.0;

  bool operator==(const Transition&) const = default;
};

/// Transition law out of global simplex `s` on full adjacency `A`.
///
/// Unbiased: 1/D(s) for each neighbour. Biased: each neighbour j is weighted
/// by 1/N_{order(j)} and the weights are normalised. An empty row (a dead
/// end) yields an empty list.
std::vector<Transition> transition_row(const SparseOperator& A, std::size_t s, bool biased,
                                       std::array<std::size_t, 3> counts);

/// Precomputed cumulative transition tables for fast sampling.
class WalkSampler {
 public:
  WalkSampler(const SparseOperator& A, std::array<std::size_t, 3> counts, bool biased);

  std::size_t size() const noexcept { return ptr_.size() - 1; }

  /// Next simplex for a uniform draw u in [0, 1). A dead end returns `from`.
  std::size_t step(std::size_t from, double u) const;

  /// Fills `out` with a trajectory starting at `start` (out.size() - 1 steps).
  void walk(std::size_t start, std::span<std::uint32_t> out, StreamRng& rng) const;

 private:
  std::vector<std::size_t> ptr_;
  std::vector<std::uint32_t> targets_;
  std::vector<double> cumulative_;
};

/// Trajectories of `samples` walks from each start, stored row-major as
/// (start, sample, position) with global simplex indices, plus their
/// anonymous labels in the same layout.
class WalkBatch {
 public:
  WalkBatch() = default;
  WalkBatch(std::vector<SimplexId> starts, std::uint32_t samples, std::uint32_t length);

  const std::vector<SimplexId>& starts() const noexcept { return starts_; }
  std::size_t num_starts() const noexcept { return starts_.size(); }
  std::uint32_t samples() const noexcept { return samples_; }
  std::uint32_t length() const noexcept { return length_; }
  std::size_t positions() const noexcept { return length_ + 1; }

  std::span<const std::uint32_t> trajectory(std::size_t start, std::size_t sample) const;
  std::span<std::uint32_t> trajectory(std::size_t start, std::size_t sample);
  std::span<const std::uint16_t> anonymous(std::size_t start, std::size_t sample) const;
  std::span<std::uint16_t> anonymous(std::size_t start, std::size_t sample);

  const std::vector<std::uint32_t>& trajectories() const noexcept { return trajectories_; }
  const std::vector<std::uint16_t>& anonymous_labels() const noexcept { return anonymous_; }

  bool operator==(const WalkBatch&) const = default;

 private:
  std::size_t offset(std::size_t start, std::size_t sample) const;

  std::vector<SimplexId> starts_;
  std::uint32_t samples_ = 0;
  std::uint32_t length_ = 0;
  std::vector<std::uint32_t> trajectories_;
  std::vector<std::uint16_t> anonymous_;
};

/// Samples cfg.samples walks of cfg.length steps from each start on `A`.
/// Walk (i, s) draws from its own stream keyed by (seed, i, s), so the
/// output is independent of `threads`. Dead ends repeat in place.
WalkBatch sample_walks(const SimplicialComplex& complex, const SparseOperator& A,
                       std::span<const SimplexId> starts, const WalkConfig& cfg,
                       unsigned threads = 1);
WalkBatch sample_walks(const WalkSampler& sampler, const SimplicialComplex& complex,
                       std::span<const SimplexId> starts, const WalkConfig& cfg,
                       unsigned threads = 1);

/// One start per vertex, in vertex order.
std::vector<SimplexId> vertex_starts(const SimplicialComplex& complex);

/// Relabels a walk by first occurrence: the i-th distinct simplex gets i.
std::vector<std::uint32_t> anonymize(std::span<const std::uint32_t> walk);

/// Feature trajectories: (num_starts, samples, positions, F + 1). Row
/// (i, s, j) is unified[trajectory(i, s)[j]] followed by the anonymous label
/// divided by `positions`. `unified` is (num_simplices, F).
STTensor gather_semantics(const WalkBatch& batch, const STTensor& unified);

/// Binary dump: "SWLK", u32 version, u32 num_starts, u32 samples,
/// u32 length, then u32 trajectories and u16 anonymous labels, row-major,
/// little-endian.
void write_walk_dump(std::ostream& os, const WalkBatch& batch);
/// Starts are recovered as vertices from the first trajectory position.
WalkBatch read_walk_dump(std::istream& is);
std::size_t walk_dump_size(std::size_t num_starts, std::uint32_t samples, std::uint32_t length);
/// One JSON object per walk.
void write_walk_jsonl(std::ostream& os, const WalkBatch& batch);

}  // namespace stsc
