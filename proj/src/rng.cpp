#include "rankflow/rng.hpp"

#include <cassert>
#include <cmath>
#include <numbers>

namespace rankflow {

namespace {

constexpr std::uint32_t kMult0 = 0xD2511F53u;
constexpr std::uint32_t kMult1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;  // golden ratio
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;  // sqrt(3) - 1

inline void round_once(std::array<std::uint32_t, 4>& c,
                       const std::array<std::uint32_t, 2>& k) {
  const std::uint64_t p0 = std::uint64_t{kMult0} * c[0];
  const std::uint64_t p1 = std::uint64_t{kMult1} * c[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) {
  round_once(counter, key);
  for (int r = 1; r < 10; ++r) {
    key[0] += kWeyl0;
    key[1] += kWeyl1;
    round_once(counter, key);
  }
  return counter;
}

RandomBlock random_block(Seed seed, std::uint32_t lane, std::uint64_t index) {
  assert(seed.stream <= 0xffffffffull && "stream ids are 32-bit");
  const std::array<std::uint32_t, 4> counter = {
      lane,
      static_cast<std::uint32_t>(seed.stream),
      static_cast<std::uint32_t>(index),
      static_cast<std::uint32_t>(index >> 32),
  };
  const std::array<std::uint32_t, 2> key = {
      static_cast<std::uint32_t>(seed.value),
      static_cast<std::uint32_t>(seed.value >> 32),
  };
  const auto out = philox4x32(counter, key);
  return RandomBlock{
      (std::uint64_t{out[1]} << 32) | out[0],
      (std::uint64_t{out[3]} << 32) | out[2],
  };
}

double uniform_open(std::uint64_t bits) {
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

double uniform_half_open(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

double normal_from_block(RandomBlock block) {
  const double u1 = uniform_open(block.a);  // never 0, so log is finite
  const double u2 = uniform_half_open(block.b);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double PhiloxNoise::normal(std::uint32_t lane, std::uint64_t step) const {
  return normal_from_block(random_block(seed_, lane, step));
}

}  // namespace rankflow
