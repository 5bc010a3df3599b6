#pragma once

#include <cmath>
#include <cstdint>

namespace otsing {

// Counter-based generator built on the SplitMix64 finalizer (Steele et al.,
// "Fast splittable pseudorandom number generators", OOPSLA 2014).
//
// Output i of a stream with seed s is the pure function
//     out(s, i) = mix64(s + (i + 1) * 0x9E3779B97F4A7C15)
// so a stream can be consumed sequentially, restarted at any index, or
// partitioned across workers without changing the merged sequence. All
// arithmetic is on uint64, hence bit-identical across platforms. This
// algorithm is fixed; reproducibility of every artifact depends on it.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed, std::uint64_t start_index = 0)
        : seed_(seed), counter_(start_index) {}

    static std::uint64_t mix64(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    // Pure value of output `index`; does not touch the cursor.
    std::uint64_t at(std::uint64_t index) const {
        return mix64(seed_ + (index + 1) * 0x9E3779B97F4A7C15ull);
    }

    std::uint64_t next_u64() { return at(counter_++); }

    // Uniform double in the open interval (0, 1): top 53 bits plus a half-ulp
    // offset, so 0 and 1 are never produced (log() downstream stays finite).
    double next_unit() { return to_unit(next_u64()); }

    static double to_unit(std::uint64_t u) {
        return (static_cast<double>(u >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; consumes exactly two outputs per call
    // (no caching, so draw k is a pure function of outputs 2k and 2k+1 when
    // gaussians are the only thing drawn from the stream).
    double next_gaussian() {
        const double u1 = next_unit();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Uniform integer in [0, bound) by rejection from the top of the range;
    // unbiased and platform-independent.
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t u;
        do {
            u = next_u64();
        } while (u >= limit);
        return u % bound;
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t position() const { return counter_; }
    void jump_to(std::uint64_t index) { counter_ = index; }

    // Deterministic sub-stream seed from a parent seed and up to two tags.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag0,
                                std::uint64_t tag1 = 0) {
        std::uint64_t s = mix64(seed ^ 0xD1B54A32D192ED03ull);
        s = mix64(s + tag0);
        s = mix64(s + tag1);
        return s;
    }

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
};

} // namespace otsing
