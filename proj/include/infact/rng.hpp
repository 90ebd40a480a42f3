#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace infact {

/// Counter-based Philox4x32-10 generator keyed by (seed, stream).
///
/// The whole generator state is four integers, so a stream can be
/// checkpointed and restored exactly.  Substreams derived from the same
/// parent are statistically independent and stable under reordering, which
/// is what keeps parallel replicates reproducible.
class RngStream {
 public:
  using result_type = std::uint32_t;

  struct State {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::uint64_t block = 0;  // next block to generate
    std::uint64_t position = 4;  // words consumed from the current block
    friend bool operator==(const State&, const State&) = default;
  };

  explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform double on the open interval (0, 1) with 53 random bits.
  double uniform();

  /// Independent child stream; the parent is not advanced.
  RngStream substream(std::uint64_t id) const;

  State state() const;
  static RngStream from_state(const State& state);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Raw Philox4x32-10 block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> counter,
                                             std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  unsigned position_ = 4;
};

}  // namespace infact
