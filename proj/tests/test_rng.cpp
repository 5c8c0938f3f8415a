#include <doctest.h>

#include <cmath>
#include <set>

#include "lattice_echo/rng.hpp"

using namespace lattice_echo;

// Known-answer vectors generated independently with numpy.random.Philox
// (same 4x64, 10-round configuration and constants).
TEST_CASE("philox4x64 matches the numpy reference vectors") {
  CHECK(philox4x64({0, 0, 0, 0}, {0, 0}) ==
        std::array<std::uint64_t, 4>{0x16554d9eca36314cull, 0xdb20fe9d672d0fdcull,
                                     0xd7e772cee186176bull, 0x7e68b68aec7ba23bull});
  CHECK(philox4x64({1, 0, 0, 0}, {0, 0}) ==
        std::array<std::uint64_t, 4>{0x02f4ba6408e4d89bull, 0x3dd62b0b9ca8c5b2ull,
                                     0x1c8667a55d902e79ull, 0x907d7a052fd5b4dcull});
  CHECK(philox4x64({2, 0, 0, 0}, {0, 0}) ==
        std::array<std::uint64_t, 4>{0x809bf322883987c3ull, 0x471128b9e807f7ddull,
                                     0xf250ba0dbec065b7ull, 0xfc6ed66767a457bcull});
  CHECK(philox4x64({1, 0, 0, 0}, {0xdeadbeef12345678ull, 0}) ==
        std::array<std::uint64_t, 4>{0x01e08b9944fc9ce9ull, 0x4dd35999ef97e4c4ull,
                                     0xfb4385fe6262b926ull, 0xe8ca5d2e2ace8c50ull});
  CHECK(philox4x64({0x243f6a8885a308d3ull, 0x13198a2e03707344ull,
                    0xa4093822299f31d0ull, 0x082efa98ec4e6c89ull},
                   {0x452821e638d01377ull, 0xbe5466cf34e90c6cull}) ==
        std::array<std::uint64_t, 4>{0xa528f45403e61d95ull, 0x38c72dbd566e9788ull,
                                     0xa5a1610e72fd18b5ull, 0x57bd43b5e52b7fe6ull});
}

TEST_CASE("point keys separate points, seeds and dimensions") {
  const std::int64_t a[2] = {1, 0};
  const std::int64_t b[2] = {0, 1};
  const std::int64_t c[1] = {1};
  CHECK(point_key(1, a) == point_key(1, a));
  CHECK(point_key(1, a) != point_key(1, b));
  CHECK(point_key(1, a) != point_key(2, a));
  CHECK(point_key(1, a) != point_key(1, c));

  std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
  for (std::int64_t i = -2; i <= 2; ++i) {
    for (std::int64_t j = -2; j <= 2; ++j) {
      const std::int64_t ij[2] = {i, j};
      const Key128 k = point_key(7, ij);
      seen.insert({k.hi, k.lo});
    }
  }
  CHECK(seen.size() == 25);
}

TEST_CASE("random stream yields uniform doubles in [0,1)") {
  RandomStream rng(derive_key(42, 0));
  double sum = 0, sumsq = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.next_double();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean - 0.5) < 0.005);
  CHECK(std::abs(var - 1.0 / 12.0) < 0.005);
}

TEST_CASE("random stream is a pure function of the key") {
  RandomStream a(derive_key(9, 1)), b(derive_key(9, 1));
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  RandomStream a2(derive_key(9, 1));
  RandomStream c(derive_key(9, 2));
  bool differs = false;
  for (int i = 0; i < 100; ++i) differs |= a2.next_u64() != c.next_u64();
  CHECK(differs);
}
