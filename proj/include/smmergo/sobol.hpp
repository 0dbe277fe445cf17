#pragma once

#include "smmergo/errors.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace smmergo {

/**
 * @brief Sobol low-discrepancy sequence in up to 7 dimensions.
 *
 * Dimension 1 is the van der Corput sequence in base 2; dimensions 2-7 use the
 * Joe-Kuo (new-joe-kuo-6.21201) primitive polynomials and initial direction
 * numbers. Points are generated in Gray-code order with 32-bit resolution and
 * the all-zeros point is skipped, so the first emitted point is (0.5, ..., 0.5).
 */
class SobolSequence {
public:
    static constexpr std::size_t max_dim = 7;
    static constexpr int bits = 32;

    explicit SobolSequence(std::size_t dim) : dim_(dim), x_(dim, 0u), v_(dim) {
        if (dim == 0 || dim > max_dim)
            throw ParameterDomainError("Sobol dimension must lie in [1, " + std::to_string(max_dim) +
                                       "], got " + std::to_string(dim));
        for (std::size_t j = 0; j < dim; ++j) init_directions(j);
    }

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }

    /// Index (zero-based, after skipping the origin) of the next point to be emitted.
    [[nodiscard]] std::uint64_t position() const noexcept { return count_; }

    void next(std::span<double> out) {
        if (out.size() != dim_) throw ParameterDomainError("Sobol output size != dimension");
        if (count_ + 1 >= (std::uint64_t{1} << bits))
            throw ParameterDomainError("Sobol sequence exhausted");
        // Gray-code step from point count_ to count_ + 1 flips the lowest zero bit of count_.
        const int c = lowest_zero_bit(count_);
        for (std::size_t j = 0; j < dim_; ++j) {
            x_[j] ^= v_[j][static_cast<std::size_t>(c)];
            out[j] = static_cast<double>(x_[j]) * 0x1.0p-32;
        }
        ++count_;
    }

    [[nodiscard]] std::vector<double> next() {
        std::vector<double> p(dim_);
        next(p);
        return p;
    }

    /// Random access to the point that next() emits at position `index`.
    [[nodiscard]] std::vector<double> at(std::uint64_t index) const {
        const std::uint64_t i = index + 1;
        const std::uint64_t gray = i ^ (i >> 1);
        std::vector<double> p(dim_);
        for (std::size_t j = 0; j < dim_; ++j) {
            std::uint32_t x = 0;
            for (int b = 0; b < bits; ++b)
                if ((gray >> b) & 1u) x ^= v_[j][static_cast<std::size_t>(b)];
            p[j] = static_cast<double>(x) * 0x1.0p-32;
        }
        return p;
    }

    /// The first `n` emitted points.
    [[nodiscard]] static std::vector<std::vector<double>> generate(std::size_t dim, std::size_t n) {
        SobolSequence seq(dim);
        std::vector<std::vector<double>> pts;
        pts.reserve(n);
        for (std::size_t i = 0; i < n; ++i) pts.push_back(seq.next());
        return pts;
    }

private:
    struct Poly {
        unsigned s;
        unsigned a;
        std::array<std::uint32_t, 4> m;
    };

    static constexpr std::array<Poly, max_dim - 1> polys{{
        {1, 0, {1, 0, 0, 0}},
        {2, 1, {1, 3, 0, 0}},
        {3, 1, {1, 3, 1, 0}},
        {3, 2, {1, 1, 1, 0}},
        {4, 1, {1, 1, 3, 3}},
        {4, 4, {1, 3, 5, 13}},
    }};

    static int lowest_zero_bit(std::uint64_t i) noexcept {
        int c = 0;
        while (i & 1u) {
            i >>= 1;
            ++c;
        }
        return c;
    }

    void init_directions(std::size_t j) {
        auto& v = v_[j];
        if (j == 0) {
            for (int i = 0; i < bits; ++i) v[static_cast<std::size_t>(i)] = std::uint32_t{1} << (bits - 1 - i);
            return;
        }
        const Poly& p = polys[j - 1];
        for (unsigned i = 0; i < p.s; ++i) v[i] = p.m[i] << (bits - 1 - static_cast<int>(i));
        for (unsigned i = p.s; i < static_cast<unsigned>(bits); ++i) {
            std::uint32_t w = v[i - p.s] ^ (v[i - p.s] >> p.s);
            for (unsigned k = 1; k < p.s; ++k)
                if ((p.a >> (p.s - 1 - k)) & 1u) w ^= v[i - k];
            v[i] = w;
        }
    }

    std::size_t dim_;
    std::uint64_t count_ = 0;
    std::vector<std::uint32_t> x_;
    std::vector<std::array<std::uint32_t, bits>> v_;
};

}  // namespace smmergo
