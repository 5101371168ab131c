// SPDX-License-Identifier: Apache-2.0
//
// Range-Doppler processing of the echo response grid.
//
// Along the subcarrier axis the echo varies as exp(-j 2 pi n df tau), along the
// symbol axis as exp(+j 2 pi f m Ts). An inverse DFT over n (scaled 1/N) turns
// the delay into range bin tau * df * N; a forward DFT over m (unscaled) turns
// the Doppler shift into bin f * Ts * M. The estimator takes the integer argmax,
// so off-grid targets carry a quantization error of up to half a bin.

#ifndef CDU_JCAS_RANGE_DOPPLER_HPP
#define CDU_JCAS_RANGE_DOPPLER_HPP

#include "core.hpp"
#include "scene_channel.hpp"

#include <fftw3.h>

#include <mutex>
#include <optional>

namespace cdu
{
    struct TransformMeta
    {
        std::size_t range_bins = 0;      // inverse transform length (N_c * range_padding)
        std::size_t doppler_bins = 0;    // forward transform length (M_s * doppler_padding)
        std::size_t range_padding = 1;
        std::size_t doppler_padding = 1;
        double inverse_scale = 1.0;      // 1 / range_bins
        double forward_scale = 1.0;

        // sum |map|^2 = parseval_factor() * sum |H|^2
        double parseval_factor() const
        {
            return inverse_scale * inverse_scale * static_cast<double>(range_bins) * forward_scale * forward_scale *
                   static_cast<double>(doppler_bins);
        }
    };

    struct RangeDopplerMap
    {
        Grid<double> magnitudes; // range bin (rows) x Doppler bin (cols)
        TransformMeta meta;
    };

    struct MapOptions
    {
        std::size_t range_padding = 1;
        std::size_t doppler_padding = 1;
    };

    namespace detail
    {
        // FFTW's planner is not re-entrant; execution of distinct plans is.
        inline std::mutex &fftw_planner_mutex()
        {
            static std::mutex m;
            return m;
        }

        class FftwPlan
        {
        public:
            FftwPlan(int length, int howmany, int stride, int dist, fftw_complex *data, int sign)
            {
                std::lock_guard<std::mutex> lock(fftw_planner_mutex());
                plan_ = fftw_plan_many_dft(1, &length, howmany, data, nullptr, stride, dist, data, nullptr, stride,
                                           dist, sign, FFTW_ESTIMATE);
            }
            ~FftwPlan()
            {
                std::lock_guard<std::mutex> lock(fftw_planner_mutex());
                fftw_destroy_plan(plan_);
            }
            FftwPlan(const FftwPlan &) = delete;
            FftwPlan &operator=(const FftwPlan &) = delete;

            void execute() const { fftw_execute(plan_); }

        private:
            fftw_plan plan_ = nullptr;
        };
    } // namespace detail

    inline RangeDopplerMap compute_map(const EchoResponseGrid &echo, const MapOptions &opts = {})
    {
        if (echo.empty())
            throw InputDomainError("compute_map: empty echo grid");
        if (opts.range_padding == 0 || opts.doppler_padding == 0)
            throw InputDomainError("compute_map: padding factors must be positive");
        const std::size_t nc = echo.subcarriers();
        const std::size_t ms = echo.symbols();
        const std::size_t nr = nc * opts.range_padding;
        const std::size_t nd = ms * opts.doppler_padding;

        Grid<cplx> work(nr, nd);
        for (std::size_t n = 0; n < nc; ++n)
            for (std::size_t m = 0; m < ms; ++m)
                work(n, m) = echo(n, m);

        // std::complex<double> is layout-compatible with fftw_complex
        auto *data = reinterpret_cast<fftw_complex *>(work.values().data());
        {
            // columns: length nr, stride nd, one per Doppler column
            detail::FftwPlan cols(static_cast<int>(nr), static_cast<int>(nd), static_cast<int>(nd), 1, data,
                                  FFTW_BACKWARD);
            cols.execute();
        }
        {
            // rows: length nd, contiguous, one per range row
            detail::FftwPlan rows(static_cast<int>(nd), static_cast<int>(nr), 1, static_cast<int>(nd), data,
                                  FFTW_FORWARD);
            rows.execute();
        }

        RangeDopplerMap map;
        map.meta.range_bins = nr;
        map.meta.doppler_bins = nd;
        map.meta.range_padding = opts.range_padding;
        map.meta.doppler_padding = opts.doppler_padding;
        map.meta.inverse_scale = 1.0 / static_cast<double>(nr);
        map.meta.forward_scale = 1.0;
        map.magnitudes = Grid<double>(nr, nd);
        const double scale = map.meta.inverse_scale * map.meta.forward_scale;
        auto in = work.values();
        auto out = map.magnitudes.values();
        for (std::size_t i = 0; i < in.size(); ++i)
            out[i] = std::abs(in[i]) * scale;
        return map;
    }

    struct PeakBins
    {
        std::size_t range_bin = 0;
        std::size_t doppler_bin = 0;

        friend bool operator==(const PeakBins &, const PeakBins &) = default;
    };

    // Global argmax; ties resolve to the lexicographically smallest (range, Doppler) bin.
    // An all-zero map has no detection.
    inline std::optional<PeakBins> find_peak(const RangeDopplerMap &map)
    {
        const auto &mag = map.magnitudes;
        if (mag.empty())
            throw InputDomainError("find_peak: empty map");
        double best = 0.0;
        std::optional<PeakBins> peak;
        for (std::size_t r = 0; r < mag.subcarriers(); ++r)
        {
            for (std::size_t d = 0; d < mag.symbols(); ++d)
            {
                if (mag(r, d) > best)
                {
                    best = mag(r, d);
                    peak = PeakBins{r, d};
                }
            }
        }
        return peak;
    }

    struct DetectionResult
    {
        std::size_t range_bin = 0;
        long doppler_bin = 0; // signed, in [-M/2, M/2)
        double range_m = 0.0;
        double radial_velocity_mps = 0.0;
        double peak_magnitude = 0.0;

        friend bool operator==(const DetectionResult &, const DetectionResult &) = default;
    };

    // d = c l_R / (2 N df), v = lambda l_f / (2 M Ts), with N, M the transform lengths
    // (equal to N_c, M_s without padding). Doppler bins >= M/2 are negative frequencies.
    inline DetectionResult bins_to_estimates(const PeakBins &bins, const OfdmNumerology &num,
                                             const TransformMeta &meta = {})
    {
        const std::size_t nr = meta.range_bins ? meta.range_bins : num.num_subcarriers;
        const std::size_t nd = meta.doppler_bins ? meta.doppler_bins : num.num_symbols;
        if (bins.range_bin >= nr || bins.doppler_bin >= nd)
            throw InputDomainError("bins_to_estimates: bin outside the map");
        DetectionResult r;
        r.range_bin = bins.range_bin;
        r.doppler_bin = static_cast<long>(bins.doppler_bin);
        if (bins.doppler_bin >= nd / 2)
            r.doppler_bin -= static_cast<long>(nd);
        r.range_m = speed_of_light * static_cast<double>(bins.range_bin) /
                    (2.0 * static_cast<double>(nr) * num.subcarrier_spacing_hz);
        r.radial_velocity_mps = num.wavelength_m() * static_cast<double>(r.doppler_bin) /
                                (2.0 * static_cast<double>(nd) * num.symbol_duration_s());
        return r;
    }

    inline DetectionResult bins_to_estimates(const PeakBins &bins, const OfdmNumerology &num,
                                             const RangeDopplerMap &map)
    {
        DetectionResult r = bins_to_estimates(bins, num, map.meta);
        r.peak_magnitude = map.magnitudes(bins.range_bin, bins.doppler_bin);
        return r;
    }

} // namespace cdu

#endif
