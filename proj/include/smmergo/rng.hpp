#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>

namespace smmergo {

/// SplitMix64 avalanche finalizer. Bijective on 64-bit words.
[[nodiscard]] constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Sequential SplitMix64 generator, used only to expand a 64-bit seed into
/// the xoshiro state.
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return splitmix64_mix(state_);
    }

private:
    std::uint64_t state_;
};

/**
 * @brief xoshiro256++ (Blackman & Vigna), the single PRNG used by every simulator.
 *
 * Satisfies std::uniform_random_bit_generator. Seeding expands the 64-bit seed
 * through SplitMix64, as recommended by the algorithm's authors.
 */
class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    explicit constexpr Xoshiro256pp(std::uint64_t seed) noexcept {
        SplitMix64 sm(seed);
        for (auto& word : s_) word = sm.next();
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> s_{};
};

/// Maps 64 random bits to the open interval (0, 1) on a 2^-53 grid.
[[nodiscard]] constexpr double bits_to_open_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/**
 * @brief Standard normal quantile function, Wichura's AS241 (PPND16).
 *
 * Relative accuracy about 1e-16 over (0, 1). Returns +-infinity at the end
 * points and NaN outside [0, 1].
 */
[[nodiscard]] inline double inverse_normal_cdf(double p) noexcept {
    if (!(p >= 0.0 && p <= 1.0)) return std::numeric_limits<double>::quiet_NaN();
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();

    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            ((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0;
        const double den =
            ((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0;
        return q * num / den;
    }

    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            ((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                 2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
               3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
             4.63033784615654529590e+0) * r + 1.42343711074968357734e+0;
        const double den =
            ((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
               6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
             2.05319162663775882187e+0) * r + 1.0;
        value = num / den;
    } else {
        r -= 5.0;
        const double num =
            ((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
               2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
             5.46378491116411436990e+0) * r + 6.65790464350110377720e+0;
        const double den =
            ((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
               1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
             5.99832206555887937690e-1) * r + 1.0;
        value = num / den;
    }
    return q < 0.0 ? -value : value;
}

/**
 * @brief Seeded stream of uniforms and standard normals.
 *
 * Every normal consumes exactly one 64-bit draw (inverse-CDF transform), so
 * the stream position after k normals is k regardless of their values. This
 * is what makes "the first T1 returns of a longer run" well defined.
 */
class GaussianStream {
public:
    explicit constexpr GaussianStream(std::uint64_t seed) noexcept : engine_(seed) {}

    double uniform() noexcept { return bits_to_open_unit(engine_()); }
    double normal() noexcept { return inverse_normal_cdf(uniform()); }

    /// Uniform index in [0, n).
    std::uint64_t index(std::uint64_t n) noexcept {
        auto i = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

private:
    Xoshiro256pp engine_;
};

/// Test hook: a noise source whose every draw is exactly zero.
struct ZeroNoise {
    constexpr double normal() const noexcept { return 0.0; }
};

/// Replays a pre-generated sequence of normals; throws when it runs out.
class BufferedNoise {
public:
    explicit BufferedNoise(std::span<const double> draws) noexcept : draws_(draws) {}

    double normal() {
        if (pos_ >= draws_.size()) throw std::out_of_range("buffered noise exhausted");
        return draws_[pos_++];
    }

private:
    std::span<const double> draws_;
    std::size_t pos_ = 0;
};

template <class N>
concept NoiseSource = requires(N& n) {
    { n.normal() } -> std::convertible_to<double>;
};

}  // namespace smmergo
