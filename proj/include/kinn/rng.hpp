#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace kinn {

// Seeded generator with portable uniform draws (no std::distribution, whose
// output differs across standard libraries).
class Rng {
   public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // uniform in [0, 1)
    double unit() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + unit() * (hi - lo); }

    std::uint64_t next() { return eng_(); }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(eng_() % n); }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[index(i)]);
        }
    }

   private:
    std::mt19937_64 eng_;
};

// FNV-1a based seed mixing so per-work-item seeds are stable across
// platforms and runs.
inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto eat = [&h](unsigned char byte) {
        h ^= byte;
        h *= 0x100000001b3ull;
    };
    for (int i = 0; i < 8; ++i) eat(static_cast<unsigned char>(seed >> (8 * i)));
    for (char c : tag) eat(static_cast<unsigned char>(c));
    return h;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag, std::uint64_t n) {
    std::uint64_t h = mix_seed(seed, tag);
    for (int i = 0; i < 8; ++i) {
        h ^= static_cast<unsigned char>(n >> (8 * i));
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace kinn
