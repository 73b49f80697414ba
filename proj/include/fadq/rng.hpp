#pragma once

#include <array>
#include <cstdint>

namespace fadq {

// Philox4x32-10 counter-based generator (constants from the reference
// design). Output is a pure function of (key, counter), so any block of any
// replication can be regenerated independently of draw order -- which is
// what makes common-random-number comparisons between the two simulator
// engines possible.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed)
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)) {}

  // Uniform in [0, 1) with 53 random bits, addressed by (counter, slot).
  // Does not disturb the sequential stream.
  double u01_at(std::uint64_t counter, std::uint32_t slot = 0) const {
    const std::array<std::uint32_t, 4> w = block(counter, slot);
    const std::uint64_t bits =
        (static_cast<std::uint64_t>(w[0]) << 32) | static_cast<std::uint64_t>(w[1]);
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

  // Sequential facade over the same keyed stream (slot reserved for it).
  double next_u01() { return u01_at(next_counter_++, kSequentialSlot); }

 private:
  static constexpr std::uint32_t kSequentialSlot = 0xFFFFFFFFu;

  static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                      std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
  }

  std::array<std::uint32_t, 4> block(std::uint64_t counter, std::uint32_t slot) const {
    std::uint32_t c0 = static_cast<std::uint32_t>(counter);
    std::uint32_t c1 = static_cast<std::uint32_t>(counter >> 32);
    std::uint32_t c2 = slot;
    std::uint32_t c3 = 0x243F6A88u;
    std::uint32_t k0 = key0_;
    std::uint32_t k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      std::uint32_t hi0, lo0, hi1, lo1;
      mulhilo(0xD2511F53u, c0, hi0, lo0);
      mulhilo(0xCD9E8D57u, c2, hi1, lo1);
      const std::uint32_t n0 = hi1 ^ c1 ^ k0;
      const std::uint32_t n1 = lo1;
      const std::uint32_t n2 = hi0 ^ c3 ^ k1;
      const std::uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    return {c0, c1, c2, c3};
  }

  std::uint32_t key0_;
  std::uint32_t key1_;
  std::uint64_t next_counter_ = 0;
};

}  // namespace fadq
