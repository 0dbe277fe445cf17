#pragma once

#include "smmergo/rng.hpp"

#include <cstdint>
#include <string_view>

namespace smmergo {

/// Independent seed streams; each experiment stage draws from its own domain.
enum class SeedDomain : std::uint64_t {
    truth = 1,
    weighting,
    empirical,
    candidate,
    sensitivity,
    convergence,
    subsets,
    wiener,
    surface_empirical,
};

[[nodiscard]] inline std::string_view to_string(SeedDomain d) noexcept {
    switch (d) {
        case SeedDomain::truth: return "truth";
        case SeedDomain::weighting: return "weighting";
        case SeedDomain::empirical: return "empirical";
        case SeedDomain::candidate: return "candidate";
        case SeedDomain::sensitivity: return "sensitivity";
        case SeedDomain::convergence: return "convergence";
        case SeedDomain::subsets: return "subsets";
        case SeedDomain::wiener: return "wiener";
        case SeedDomain::surface_empirical: return "surface_empirical";
    }
    return "?";
}

/**
 * @brief Deterministic seed derivation for the (domain, run, replication) cube.
 *
 *   base(domain)  = mix(master ^ mix(domain * 0x9e3779b97f4a7c15))
 *   seed(d, r, n) = mix(base(d) ^ ((r << 32) | n))
 *
 * mix is the SplitMix64 finalizer, a bijection, so seeds are injective in
 * (r, n) for r, n < 2^32 within a domain.
 */
class SeedPlan {
public:
    explicit constexpr SeedPlan(std::uint64_t master) noexcept : master_(master) {}

    [[nodiscard]] constexpr std::uint64_t master() const noexcept { return master_; }

    [[nodiscard]] constexpr std::uint64_t base(SeedDomain d) const noexcept {
        return splitmix64_mix(master_ ^
                              splitmix64_mix(static_cast<std::uint64_t>(d) * 0x9e3779b97f4a7c15ULL));
    }

    [[nodiscard]] constexpr std::uint64_t seed(SeedDomain d, std::uint32_t run,
                                               std::uint32_t replication) const noexcept {
        const std::uint64_t key = (static_cast<std::uint64_t>(run) << 32) | replication;
        return splitmix64_mix(base(d) ^ key);
    }

private:
    std::uint64_t master_;
};

}  // namespace smmergo
