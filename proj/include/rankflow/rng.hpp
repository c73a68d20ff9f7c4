#pragma once

#include <array>
#include <cstdint>

namespace rankflow {

// Identifies one reproducible noise stream. `stream` separates Monte Carlo
// paths sharing a base seed; both halves enter the generator, so any
// (value, stream) pair is an independent stream.
struct Seed {
  std::uint64_t value = 0;
  std::uint64_t stream = 0;
};

// One 4x32 Philox block (counter-based, 10 rounds). Pure function of
// (counter, key): evaluation order never matters, which is what makes
// multi-threaded runs bit-reproducible.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// 128 random bits addressed by (seed, lane, index). `lane` distinguishes
// particles, `index` steps. Requires seed.stream < 2^32.
struct RandomBlock {
  std::uint64_t a;
  std::uint64_t b;
};
RandomBlock random_block(Seed seed, std::uint32_t lane, std::uint64_t index);

// Bits -> floating point helpers. 53-bit mantissas, so the maps are exact.
double uniform_open(std::uint64_t bits);       // (0, 1]
double uniform_half_open(std::uint64_t bits);  // [0, 1)

// Standard normal draw from one block (Box-Muller, cosine branch).
double normal_from_block(RandomBlock block);

// Source of the standard-normal increments driving a simulation. Pure in
// (lane, step) for a fixed source so schemes sharing a seed share noise.
class NoiseSource {
 public:
  virtual ~NoiseSource() = default;
  virtual double normal(std::uint32_t lane, std::uint64_t step) const = 0;
};

// Default source: one counter block per (seed, lane, step).
class PhiloxNoise final : public NoiseSource {
 public:
  explicit PhiloxNoise(Seed seed) : seed_(seed) {}
  double normal(std::uint32_t lane, std::uint64_t step) const override;
  Seed seed() const { return seed_; }

 private:
  Seed seed_;
};

// Test hook: all increments zero, leaving only the drift skeleton.
class ZeroNoise final : public NoiseSource {
 public:
  double normal(std::uint32_t, std::uint64_t) const override { return 0.0; }
};

}  // namespace rankflow
