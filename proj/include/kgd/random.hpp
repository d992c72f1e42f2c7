#pragma once

#include <cstdint>
#include <random>

#include "kgd/core.hpp"

namespace kgd {

/// SplitMix64 finaliser; used to derive well-separated engine seeds.
std::uint64_t mix64(std::uint64_t z);

/// Deterministic stream of uniform and standard-normal variates.
///
/// A stream is identified by (seed, label path). Substreams derived with
/// substream() depend only on the parent identity and the label, never on
/// how many draws the parent has made, so per-particle streams can be handed
/// out in any order.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : RandomStream(mix64(seed), 0) {}

  RandomStream substream(std::uint64_t label) const { return RandomStream(mix64(key_ ^ mix64(label + 0x632be59bd9b4e019ULL)), 0); }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  Vector normal_vector(std::size_t n);
  /// d x n matrix of iid N(mean, scale^2) entries, filled column by column.
  Matrix normal_matrix(std::size_t rows, std::size_t cols, double scale = 1.0);

  std::mt19937_64& engine() { return engine_; }

 private:
  RandomStream(std::uint64_t key, int) : key_(key), engine_(key) {}

  std::uint64_t key_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

inline RandomStream seeded_stream(std::uint64_t seed) { return RandomStream(seed); }

}  // namespace kgd
