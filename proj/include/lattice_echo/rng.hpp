#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace lattice_echo {

// Counter-based pseudorandom primitives. All sampling in the toolkit is a
// pure function of (seed, lattice coefficients), so a realization never
// depends on enumeration order, window radius or thread schedule.

struct Key128 {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;
  friend bool operator==(const Key128&, const Key128&) = default;
};

// Philox4x64, 10 rounds (Salmon et al., "Parallel random numbers: as easy
// as 1, 2, 3"). Matches numpy.random.Philox word for word.
std::array<std::uint64_t, 4> philox4x64(const std::array<std::uint64_t, 4>& counter,
                                        const Key128& key);

// Derives the per-point 128-bit key from the global seed and the integer
// coefficients of a lattice point, by running the coefficient blocks
// through the Philox PRF in cascade. The dimension is folded into the
// initial key so (1,0) in d=2 and (1) in d=1 never collide.
Key128 point_key(std::uint64_t seed, std::span<const std::int64_t> coeffs);

// Convenience for non-point streams (diagnostic suites etc.).
Key128 derive_key(std::uint64_t seed, std::uint64_t stream);

// Expands a 128-bit key into an unbounded stream of uniform words.
class RandomStream {
 public:
  explicit RandomStream(Key128 key) : key_(key) {}

  std::uint64_t next_u64();
  // Uniform on [0,1), 53-bit resolution.
  double next_double();
  // Uniform on (0,1]; safe to pass to log().
  double next_double_pos();

 private:
  Key128 key_;
  std::array<std::uint64_t, 4> buffer_{};
  std::uint64_t block_ = 0;
  int pos_ = 4;
};

}  // namespace lattice_echo
