#pragma once

// Seeded random streams. Every stochastic step in the toolkit draws from an
// Rng constructed from a seed derived with derive_seed(), so results depend
// only on (inputs, master seed) and never on scheduling.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string_view>
#include <type_traits>
#include <utility>

namespace mlrs {

inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t hash_bytes(std::string_view bytes, std::uint64_t seed = 0) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ mix64(seed);
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return mix64(h);
}

namespace detail {

inline constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) noexcept {
    return mix64(h ^ (mix64(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

template <typename T>
constexpr std::uint64_t part_hash(const T& part) noexcept {
    if constexpr (std::is_convertible_v<const T&, std::string_view>) {
        return hash_bytes(std::string_view(part));
    } else if constexpr (std::is_enum_v<T>) {
        return static_cast<std::uint64_t>(static_cast<std::underlying_type_t<T>>(part));
    } else {
        return static_cast<std::uint64_t>(part);
    }
}

}  // namespace detail

/// hash64(master, parts...): independent stream seed keyed by task identity.
template <typename... Parts>
constexpr std::uint64_t derive_seed(std::uint64_t master, const Parts&... parts) noexcept {
    std::uint64_t h = mix64(master);
    ((h = detail::combine(h, detail::part_hash(parts))), ...);
    return h;
}

/// Portable random stream: mt19937_64 bits with distribution code written
/// here, since the standard distributions are implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) {
            return 0;
        }
        const std::uint64_t limit = -bound % bound;  // 2^64 mod bound
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= limit) {
                return r % bound;
            }
        }
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    template <typename T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mlrs
