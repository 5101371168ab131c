// SPDX-License-Identifier: Apache-2.0
//
// BS receive chain for the superimposed UL-data + DL-echo signal:
//
//   preamble -> per-subcarrier UL CSI estimate
//            -> MMSE combiner (closed form, constrained to the span of the estimate)
//            -> equalization + ML demodulation of the UL symbols
//            -> reconstruction and cancellation of the UL signal (SIC)
//            -> echo response extraction with the sensing receive beam
//
// The channel is block-fading over the frame, so one estimate per subcarrier
// serves every data symbol. The estimate (not the true channel) is used for both
// combining and reconstruction, which is what lets demodulation and estimation
// errors leak into the echo response.

#ifndef CDU_JCAS_SIC_RECEIVER_HPP
#define CDU_JCAS_SIC_RECEIVER_HPP

#include "array.hpp"
#include "core.hpp"
#include "modem.hpp"

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace cdu
{
    // Below this magnitude the combined UL gain w^H h sqrt(P) is treated as singular.
    inline constexpr double equalizer_singularity_threshold = 1e-30;

    struct CsiEstimate
    {
        VectorGrid h_hat; // N_c x 1 cells, one antenna vector per subcarrier
        std::size_t averaged_symbols = 0;
        double ul_power_w = 0.0;

        std::span<const cplx> at(std::size_t n) const { return h_hat.at(n, 0); }
        std::size_t subcarriers() const { return h_hat.subcarriers(); }
        std::size_t dim() const { return h_hat.dim(); }

        // Variance of each entry's estimation error for per-antenna noise variance sigma^2
        double per_entry_noise_var(double noise_var_w) const
        {
            return noise_var_w / (ul_power_w * static_cast<double>(averaged_symbols));
        }
    };

    struct CombinerWeights
    {
        VectorGrid w; // N_c x 1 cells

        std::span<const cplx> at(std::size_t n) const { return w.at(n, 0); }
    };

    inline CsiEstimate estimate_ul_csi(const ObservationGrid &preamble_rx, const SymbolGrid &preamble,
                                       double ul_power_w)
    {
        if (!(ul_power_w > 0.0) || !std::isfinite(ul_power_w))
            throw InputDomainError("estimate_ul_csi: UL power must be positive");
        const std::size_t nc = preamble_rx.subcarriers();
        const std::size_t mp = preamble_rx.symbols();
        const std::size_t dim = preamble_rx.dim();
        if (preamble.values.subcarriers() != nc || preamble.values.symbols() != mp)
            throw DimensionMismatchError("estimate_ul_csi: preamble grid does not match received grid");
        if (mp == 0)
            throw InputDomainError("estimate_ul_csi: empty preamble");

        CsiEstimate est{VectorGrid(nc, 1, dim), mp, ul_power_w};
        const double sqrt_p = std::sqrt(ul_power_w);
        for (std::size_t n = 0; n < nc; ++n)
        {
            auto h = est.h_hat.at(n, 0);
            for (std::size_t m = 0; m < mp; ++m)
            {
                const cplx d = preamble.values(n, m);
                if (std::abs(std::abs(d) - 1.0) > 1e-9)
                    throw InputDomainError("estimate_ul_csi: preamble symbols must have unit modulus");
                const cplx inv = 1.0 / (sqrt_p * d);
                const auto y = preamble_rx.at(n, m);
                for (std::size_t k = 0; k < dim; ++k)
                    h[k] += y[k] * inv;
            }
            for (auto &v : h)
                v /= static_cast<double>(mp);
        }
        return est;
    }

    // Minimizer of E|w^H h sqrt(P) d - d|^2 + sigma^2 w^H w over w = h B:
    //   B = sqrt(P) / (P h^H h + sigma^2),  w = sqrt(P) h / (P |h|^2 + sigma^2)
    inline std::vector<cplx> mmse_weights(std::span<const cplx> h, double ul_power_w, double noise_var_w)
    {
        if (!(ul_power_w > 0.0) || !std::isfinite(ul_power_w))
            throw InputDomainError("mmse_weights: UL power must be positive");
        if (!(noise_var_w >= 0.0) || !std::isfinite(noise_var_w))
            throw InputDomainError("mmse_weights: noise variance must be non-negative");
        const double hh = squared_norm(h);
        if (!(hh > 0.0))
            throw SingularChannelError("mmse_weights: zero channel estimate");
        const double b = std::sqrt(ul_power_w) / (ul_power_w * hh + noise_var_w);
        std::vector<cplx> w(h.begin(), h.end());
        for (auto &v : w)
            v *= b;
        return w;
    }

    inline CombinerWeights mmse_combiner(const CsiEstimate &csi, double ul_power_w, double noise_var_w)
    {
        CombinerWeights out{VectorGrid(csi.subcarriers(), 1, csi.dim())};
        for (std::size_t n = 0; n < csi.subcarriers(); ++n)
        {
            const auto w = mmse_weights(csi.at(n), ul_power_w, noise_var_w);
            std::copy(w.begin(), w.end(), out.w.at(n, 0).begin());
        }
        return out;
    }

    struct Equalized
    {
        SymbolGrid symbols;   // hard decisions d_hat
        SymbolGrid soft;      // d_bar = (w^H y) / (w^H h_hat sqrt(P))
        Grid<std::uint32_t> labels;
    };

    inline Equalized equalize_and_demod(const ObservationGrid &rx, const CombinerWeights &w, const CsiEstimate &csi,
                                        double ul_power_w, const QamConstellation &constellation)
    {
        const std::size_t nc = rx.subcarriers();
        const std::size_t ms = rx.symbols();
        if (csi.subcarriers() != nc || w.w.subcarriers() != nc || csi.dim() != rx.dim() || w.w.dim() != rx.dim())
            throw DimensionMismatchError("equalize_and_demod: inconsistent grid dimensions");

        Equalized out{{Grid<cplx>(nc, ms), SymbolKind::uplink_data},
                      {Grid<cplx>(nc, ms), SymbolKind::observation},
                      Grid<std::uint32_t>(nc, ms)};
        const double sqrt_p = std::sqrt(ul_power_w);
        for (std::size_t n = 0; n < nc; ++n)
        {
            const auto wn = w.at(n);
            const cplx gain = dot_hermitian(wn, csi.at(n)) * sqrt_p;
            if (!(std::abs(gain) >= equalizer_singularity_threshold))
                throw SingularChannelError("equalize_and_demod: combined UL gain vanishes on subcarrier " +
                                           std::to_string(n));
            const cplx inv_gain = 1.0 / gain;
            for (std::size_t m = 0; m < ms; ++m)
            {
                const cplx soft = dot_hermitian(wn, rx.at(n, m)) * inv_gain;
                const Decision d = demap_ml(soft, constellation);
                out.soft.values(n, m) = soft;
                out.symbols.values(n, m) = d.point;
                out.labels(n, m) = d.label;
            }
        }
        return out;
    }

    // y_hat = y - h_hat sqrt(P) d_hat, cell by cell.
    inline ObservationGrid cancel_communication(const ObservationGrid &rx, const CsiEstimate &csi,
                                                const SymbolGrid &symbols, double ul_power_w)
    {
        const std::size_t nc = rx.subcarriers();
        const std::size_t ms = rx.symbols();
        const std::size_t dim = rx.dim();
        if (csi.subcarriers() != nc || csi.dim() != dim || symbols.values.subcarriers() != nc ||
            symbols.values.symbols() != ms)
            throw DimensionMismatchError("cancel_communication: inconsistent grid dimensions");

        ObservationGrid out = rx;
        const double sqrt_p = std::sqrt(ul_power_w);
        for (std::size_t n = 0; n < nc; ++n)
        {
            const auto h = csi.at(n);
            for (std::size_t m = 0; m < ms; ++m)
            {
                const cplx s = sqrt_p * symbols.values(n, m);
                auto cell = out.at(n, m);
                for (std::size_t k = 0; k < dim; ++k)
                    cell[k] -= h[k] * s;
            }
        }
        return out;
    }

    // H_hat(n, m) = w_RX^H y_hat(n, m) / d_S(n, m)
    inline EchoResponseGrid extract_echo(const ObservationGrid &cleaned, const Beamformer &rx_beam,
                                         const SymbolGrid &sensing_symbols)
    {
        const std::size_t nc = cleaned.subcarriers();
        const std::size_t ms = cleaned.symbols();
        if (rx_beam.weights.size() != cleaned.dim() || sensing_symbols.values.subcarriers() != nc ||
            sensing_symbols.values.symbols() != ms)
            throw DimensionMismatchError("extract_echo: inconsistent grid dimensions");

        EchoResponseGrid out(nc, ms);
        for (std::size_t n = 0; n < nc; ++n)
        {
            for (std::size_t m = 0; m < ms; ++m)
            {
                const cplx d = sensing_symbols.values(n, m);
                if (std::abs(std::abs(d) - 1.0) > 1e-9)
                    throw InputDomainError("extract_echo: sensing symbols must have unit modulus");
                out(n, m) = dot_hermitian(rx_beam.weights, cleaned.at(n, m)) / d;
            }
        }
        return out;
    }

} // namespace cdu

#endif
