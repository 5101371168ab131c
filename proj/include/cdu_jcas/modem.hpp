// SPDX-License-Identifier: Apache-2.0
//
// Square Gray-coded QAM, bit mapping, constant-modulus sensing and preamble
// symbols, and the minimum-distance (ML) demapper.

#ifndef CDU_JCAS_MODEM_HPP
#define CDU_JCAS_MODEM_HPP

#include "core.hpp"
#include "rng.hpp"
#include "scene_channel.hpp"

#include <bit>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace cdu
{
    // points[label] is the symbol carrying the bit pattern `label` (MSB first).
    // The upper half of the label selects the in-phase level, the lower half
    // the quadrature level, each through a Gray-coded PAM axis.
    struct QamConstellation
    {
        unsigned order = 0;
        unsigned bits_per_symbol = 0;
        std::vector<cplx> points;
    };

    inline QamConstellation build_constellation(unsigned order)
    {
        if (order != 4 && order != 16 && order != 64)
            throw InputDomainError("build_constellation: unsupported QAM order " + std::to_string(order) +
                                   " (expected 4, 16 or 64)");
        const unsigned bps = static_cast<unsigned>(std::countr_zero(order));
        const unsigned half = bps / 2;
        const unsigned levels = 1u << half;
        // E|d|^2 of the unnormalized grid {+-1, +-3, ...}^2 is 2 (L^2 - 1) / 3
        const double scale = 1.0 / std::sqrt(2.0 * (levels * levels - 1.0) / 3.0);

        QamConstellation c;
        c.order = order;
        c.bits_per_symbol = bps;
        c.points.resize(order);
        for (unsigned i = 0; i < levels; ++i)
        {
            for (unsigned q = 0; q < levels; ++q)
            {
                const unsigned gi = i ^ (i >> 1);
                const unsigned gq = q ^ (q >> 1);
                const double re = 2.0 * i - (levels - 1.0);
                const double im = 2.0 * q - (levels - 1.0);
                c.points[(gi << half) | gq] = scale * cplx{re, im};
            }
        }
        return c;
    }

    enum class SymbolKind
    {
        uplink_data,
        sensing,
        preamble,
        observation,
    };

    struct SymbolGrid
    {
        Grid<cplx> values;
        SymbolKind kind = SymbolKind::observation;
    };

    // Bits consumed in cell order (n outer, m inner), bits_per_symbol per cell, MSB first.
    inline SymbolGrid map_bits(std::span<const std::uint8_t> bits, const QamConstellation &c,
                               const OfdmNumerology &num)
    {
        const std::size_t cells = num.num_subcarriers * num.num_symbols;
        if (bits.size() != cells * c.bits_per_symbol)
            throw DimensionMismatchError("map_bits: expected " + std::to_string(cells * c.bits_per_symbol) +
                                         " bits, got " + std::to_string(bits.size()));
        SymbolGrid g{Grid<cplx>(num.num_subcarriers, num.num_symbols), SymbolKind::uplink_data};
        auto out = g.values.values();
        std::size_t b = 0;
        for (std::size_t cell = 0; cell < cells; ++cell)
        {
            unsigned label = 0;
            for (unsigned k = 0; k < c.bits_per_symbol; ++k)
                label = (label << 1) | (bits[b++] & 1u);
            out[cell] = c.points[label];
        }
        return g;
    }

    inline std::vector<std::uint8_t> label_bits(unsigned label, unsigned bits_per_symbol)
    {
        std::vector<std::uint8_t> bits(bits_per_symbol);
        for (unsigned k = 0; k < bits_per_symbol; ++k)
            bits[k] = static_cast<std::uint8_t>((label >> (bits_per_symbol - 1 - k)) & 1u);
        return bits;
    }

    inline std::vector<std::uint8_t> random_bits(std::size_t count, std::uint64_t seed)
    {
        Engine eng = make_engine(seed);
        std::vector<std::uint8_t> bits(count);
        std::uint64_t word = 0;
        for (std::size_t i = 0; i < count; ++i)
        {
            if (i % 64 == 0)
                word = eng();
            bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
        }
        return bits;
    }

    // Unit-modulus symbols with independent uniform phases.
    inline SymbolGrid gen_sensing_symbols(const OfdmNumerology &num, std::uint64_t seed)
    {
        Engine eng = make_engine(seed);
        SymbolGrid g{Grid<cplx>(num.num_subcarriers, num.num_symbols), SymbolKind::sensing};
        for (auto &v : g.values.values())
            v = std::polar(1.0, 2.0 * pi * unit_uniform(eng));
        return g;
    }

    inline constexpr std::size_t default_preamble_symbols = 4;

    // Known unit-modulus preamble: a root-1 Zadoff-Chu sequence over the subcarriers,
    // cyclically shifted by one subcarrier per preamble symbol.
    inline SymbolGrid gen_preamble(std::size_t num_preamble_symbols, const OfdmNumerology &num)
    {
        if (num_preamble_symbols == 0)
            throw InputDomainError("gen_preamble: at least one preamble symbol is required");
        const std::size_t nc = num.num_subcarriers;
        SymbolGrid g{Grid<cplx>(nc, num_preamble_symbols), SymbolKind::preamble};
        for (std::size_t n = 0; n < nc; ++n)
        {
            for (std::size_t m = 0; m < num_preamble_symbols; ++m)
            {
                const double k = static_cast<double>((n + m) % nc);
                const double odd = static_cast<double>(nc % 2);
                g.values(n, m) = std::polar(1.0, -pi * k * (k + odd) / static_cast<double>(nc));
            }
        }
        return g;
    }

    struct Decision
    {
        cplx point;
        unsigned label = 0;

        std::vector<std::uint8_t> bits(unsigned bits_per_symbol) const { return label_bits(label, bits_per_symbol); }
    };

    // argmin_d |observed - d|^2 over the constellation; ties go to the lowest label.
    inline Decision demap_ml(cplx observed, const QamConstellation &c)
    {
        if (!std::isfinite(observed.real()) || !std::isfinite(observed.imag()))
            throw InputDomainError("demap_ml: non-finite observation");
        unsigned best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (unsigned i = 0; i < c.points.size(); ++i)
        {
            const double dist = std::norm(observed - c.points[i]);
            if (dist < best_dist)
            {
                best_dist = dist;
                best = i;
            }
        }
        return {c.points[best], best};
    }

} // namespace cdu

#endif
