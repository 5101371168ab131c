// SPDX-License-Identifier: Apache-2.0
//
// Independent reference computations used as test oracles. Nothing here calls
// into the library under test.

#ifndef CDU_JCAS_TESTS_ORACLES_HPP
#define CDU_JCAS_TESTS_ORACLES_HPP

#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

namespace oracle
{
    using cplx = std::complex<double>;
    inline constexpr double pi = std::numbers::pi;
    inline constexpr double c = 3.0e8;

    inline double dist3(double ax, double ay, double az, double bx, double by, double bz)
    {
        return std::sqrt((ax - bx) * (ax - bx) + (ay - by) * (ay - by) + (az - bz) * (az - bz));
    }

    // Row-major N x M grid -> magnitude of [1/N inverse DFT over rows' index n] then [forward DFT over m].
    inline std::vector<double> naive_range_doppler(const std::vector<cplx> &g, std::size_t n_rows, std::size_t n_cols)
    {
        std::vector<cplx> a(n_rows * n_cols);
        for (std::size_t k = 0; k < n_rows; ++k)
            for (std::size_t m = 0; m < n_cols; ++m)
            {
                cplx s = 0.0;
                for (std::size_t n = 0; n < n_rows; ++n)
                    s += g[n * n_cols + m] * std::polar(1.0, 2.0 * pi * double(k * n % n_rows) / double(n_rows));
                a[k * n_cols + m] = s / double(n_rows);
            }
        std::vector<double> out(n_rows * n_cols);
        for (std::size_t k = 0; k < n_rows; ++k)
            for (std::size_t l = 0; l < n_cols; ++l)
            {
                cplx s = 0.0;
                for (std::size_t m = 0; m < n_cols; ++m)
                    s += a[k * n_cols + m] * std::polar(1.0, -2.0 * pi * double(l * m % n_cols) / double(n_cols));
                out[k * n_cols + l] = std::abs(s);
            }
        return out;
    }

    // Gaussian tail probability.
    inline double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

    // J(B) = E|w^H h sqrt(P) d - d|^2 + sigma^2 |w|^2 with w = h B and E|d|^2 = 1.
    inline double mmse_objective(const std::vector<cplx> &h, double p, double sigma2, cplx b)
    {
        double hh = 0.0;
        for (auto v : h)
            hh += std::norm(v);
        const cplx g = std::conj(b) * hh * std::sqrt(p); // w^H h sqrt(P)
        return std::norm(g - 1.0) + sigma2 * std::norm(b) * hh;
    }

    // Minimizes J over the complex scalar B by nested Brent searches on Re and Im.
    inline std::pair<cplx, double> minimize_mmse_objective(const std::vector<cplx> &h, double p, double sigma2)
    {
        double hh = 0.0;
        for (auto v : h)
            hh += std::norm(v);
        // |B| at the optimum is below 1/(sqrt(P) hh); search a box a few times wider.
        const double span = 4.0 / (std::sqrt(p) * hh);
        const int bits = std::numeric_limits<double>::digits;
        auto inner = [&](double re) {
            auto f = [&](double im) { return mmse_objective(h, p, sigma2, cplx{re, im}); };
            return boost::math::tools::brent_find_minima(f, -span, span, bits);
        };
        auto outer = [&](double re) { return inner(re).second; };
        const auto re = boost::math::tools::brent_find_minima(outer, -span, span, bits);
        const auto im = inner(re.first);
        return {cplx{re.first, im.first}, im.second};
    }

    inline unsigned popcount(unsigned v)
    {
        unsigned n = 0;
        for (; v; v &= v - 1)
            ++n;
        return n;
    }
} // namespace oracle

#endif
