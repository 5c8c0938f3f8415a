#include "lattice_echo/rng.hpp"

namespace lattice_echo {

namespace {

constexpr std::uint64_t kMult0 = 0xD2E7470EE14C6C93ull;
constexpr std::uint64_t kMult1 = 0xCA5A826395121157ull;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73Bull;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) {
  unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

}  // namespace

std::array<std::uint64_t, 4> philox4x64(const std::array<std::uint64_t, 4>& counter,
                                        const Key128& key) {
  std::array<std::uint64_t, 4> x = counter;
  std::uint64_t k0 = key.hi, k1 = key.lo;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMult0, x[0], hi0, lo0);
    mulhilo(kMult1, x[2], hi1, lo1);
    x = {hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
  }
  return x;
}

Key128 point_key(std::uint64_t seed, std::span<const std::int64_t> coeffs) {
  Key128 key{seed, kWeyl0 ^ static_cast<std::uint64_t>(coeffs.size())};
  std::size_t i = 0;
  do {
    std::array<std::uint64_t, 4> block{};
    for (int j = 0; j < 4; ++j, ++i) {
      block[j] = i < coeffs.size() ? static_cast<std::uint64_t>(coeffs[i])
                                   : kWeyl1 + j;
    }
    auto out = philox4x64(block, key);
    key = {out[0], out[1]};
  } while (i < coeffs.size());
  return key;
}

Key128 derive_key(std::uint64_t seed, std::uint64_t stream) {
  auto out = philox4x64({stream, 0x6c61747469636531ull, 0, 0}, {seed, kWeyl1});
  return {out[0], out[1]};
}

std::uint64_t RandomStream::next_u64() {
  if (pos_ == 4) {
    buffer_ = philox4x64({block_++, 0, 0, 0}, key_);
    pos_ = 0;
  }
  return buffer_[pos_++];
}

double RandomStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::next_double_pos() {
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

}  // namespace lattice_echo
