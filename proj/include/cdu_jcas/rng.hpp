// SPDX-License-Identifier: Apache-2.0
//
// Seed derivation and the few random draws the simulator needs. Every random
// quantity in a trial comes from its own stream, derived from the trial seed
// and a fixed tag, so changing one ingredient (say the UL power) never shifts
// the noise or reflection draws of another.

#ifndef CDU_JCAS_RNG_HPP
#define CDU_JCAS_RNG_HPP

#include "core.hpp"

#include <boost/random/normal_distribution.hpp>

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace cdu
{
    using Engine = std::mt19937_64;

    inline constexpr std::uint64_t splitmix64(std::uint64_t x)
    {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    // Order-sensitive hash of a list of integers.
    inline constexpr std::uint64_t hash_seed(std::initializer_list<std::uint64_t> parts)
    {
        std::uint64_t h = 0x6A09E667F3BCC909ULL;
        for (auto p : parts)
            h = splitmix64(h ^ splitmix64(p));
        return h;
    }

    enum class Stream : std::uint64_t
    {
        reflection = 1,
        ul_bits = 2,
        sensing_symbols = 3,
        preamble_noise = 4,
        data_noise = 5,
    };

    inline std::uint64_t substream_seed(std::uint64_t seed, Stream s)
    {
        return hash_seed({seed, static_cast<std::uint64_t>(s)});
    }

    inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

    // Uniform double in [0, 1) built from the top 53 bits; identical on every platform.
    inline double unit_uniform(Engine &eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

    // Circularly symmetric complex Gaussian with E|z|^2 = variance.
    class ComplexNormal
    {
    public:
        explicit ComplexNormal(double variance) : scale_(std::sqrt(variance / 2.0)) {}

        cplx operator()(Engine &eng) { return {scale_ * std_(eng), scale_ * std_(eng)}; }

        void add_to(std::span<cplx> out, Engine &eng)
        {
            for (auto &v : out)
                v += cplx{scale_ * std_(eng), scale_ * std_(eng)};
        }

    private:
        double scale_;
        boost::random::normal_distribution<double> std_{0.0, 1.0};
    };

} // namespace cdu

#endif
