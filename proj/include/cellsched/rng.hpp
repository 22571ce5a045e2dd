#pragma once

#include <cstdint>
#include <initializer_list>

namespace cellsched {

// SplitMix64 finalizer (Steele, Lea, Flood 2014). Full-period bijective mix.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Counter-based generator: output i is a pure function of (key, i), so streams
// can be split by deriving sub-keys and replayed from any counter position.
// Every random draw in the project flows from one master seed through this type.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t key, std::uint64_t start = 0)
        : key_(key), counter_(start) {}

    // Folds a path of ids into a fresh sub-key, e.g. {seed, episode, user}.
    static std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
        std::uint64_t k = mix64(seed);
        for (std::uint64_t id : path)
            k = mix64(k ^ mix64(id + 0x632be59bd9b4e019ull));
        return k;
    }

    static CounterRng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
        return CounterRng(derive_key(seed, path));
    }

    std::uint64_t next_u64() { return mix64(key_ ^ (0xd1342543de82ef95ull * ++counter_)); }

    // Uniform on [0,1) with 53 random bits.
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Bernoulli draw; exact for prob in [0,1].
    bool next_bool(double prob) { return next_double() < prob; }

    std::uint64_t counter() const { return counter_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

} // namespace cellsched
