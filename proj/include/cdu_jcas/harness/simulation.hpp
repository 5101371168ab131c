// SPDX-License-Identifier: Apache-2.0
//
// One Monte-Carlo trial of the concurrent DL-sensing / UL-communication frame.
//
// Frame layout: M_p preamble symbols (UL only, slow-time indices -M_p..-1), then
// M_s data symbols during which the BS radiates its sensing beam while the user
// sends QAM data. The channel is fixed over the frame apart from the Doppler
// rotation of each path.
//
// All randomness of a trial derives from its seed through independent substreams,
// so the receiver cases evaluated from one seed see the same channel, symbols and
// noise, and differ only in how the BS processes them.

#ifndef CDU_JCAS_HARNESS_SIMULATION_HPP
#define CDU_JCAS_HARNESS_SIMULATION_HPP

#include "../array.hpp"
#include "../core.hpp"
#include "../modem.hpp"
#include "../range_doppler.hpp"
#include "../rng.hpp"
#include "../scene_channel.hpp"
#include "../sic_receiver.hpp"
#include "config.hpp"

#include <bit>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace cdu
{
    // Deterministic channel artifacts of one trial.
    struct TrialSetup
    {
        ArrayGeometry bs_geometry;
        ArrayGeometry user_geometry;
        std::vector<PropagationPath> paths;
        Beamformer dl_tx;
        Beamformer dl_rx;
        Beamformer ul_tx;
        ChannelGrid comm_preamble; // N_c x M_p
        ChannelGrid comm_data;     // N_c x M_s
        ChannelGrid sensing;       // N_c x M_s, already includes w_TX
        double true_range_m = 0.0;
    };

    inline TrialSetup prepare_trial(const SimConfig &cfg, std::uint64_t seed)
    {
        cfg.validate();
        TrialSetup s;
        s.bs_geometry = cfg.bs_geometry();
        s.user_geometry = cfg.user_geometry();
        s.paths = derive_paths(cfg.scene, cfg.numerology, substream_seed(seed, Stream::reflection),
                               cfg.reflection_model);

        const Angle2D beam_dir =
            cfg.sensing_direction.value_or(direction_angle(cfg.scene.bs_position, cfg.scene.scatterers.front().position,
                                                           cfg.scene.bs_frame));
        s.dl_tx = ls_transmit_beamformer(s.bs_geometry, beam_dir, cfg.c0(), cfg.beam_formula,
                                         cfg.dl_beam_normalization);
        s.dl_rx = sensing_receive_beamformer(s.dl_tx);

        const auto los = paths_of_kind(s.paths, PathKind::comm_los);
        s.ul_tx = ls_transmit_beamformer(s.user_geometry, los.front().angle_tx);

        const auto mp = static_cast<std::int64_t>(cfg.preamble_symbols);
        s.comm_preamble = comm_channel_grid(s.paths, s.ul_tx, s.bs_geometry, s.user_geometry, cfg.numerology,
                                            cfg.preamble_symbols, -mp);
        s.comm_data = comm_channel_grid(s.paths, s.ul_tx, s.bs_geometry, s.user_geometry, cfg.numerology);
        s.sensing = sensing_channel_grid(paths_of_kind(s.paths, PathKind::sensing_echo), s.dl_tx, s.bs_geometry,
                                         cfg.numerology);
        s.true_range_m = distance(cfg.scene.bs_position, cfg.scene.scatterers.front().position);
        return s;
    }

    namespace detail
    {
        inline void add_noise(ObservationGrid &g, double variance, std::uint64_t seed)
        {
            if (variance <= 0.0)
                return;
            Engine eng = make_engine(seed);
            ComplexNormal(variance).add_to(g.values(), eng);
        }

        // out(n, m) += channel(n, m) * scale * symbols(n, m)
        inline void add_scaled(ObservationGrid &out, const ChannelGrid &channel, double scale, const Grid<cplx> &symbols)
        {
            const std::size_t dim = out.dim();
            for (std::size_t n = 0; n < out.subcarriers(); ++n)
            {
                for (std::size_t m = 0; m < out.symbols(); ++m)
                {
                    const cplx s = scale * symbols(n, m);
                    const auto h = channel.at(n, m);
                    auto cell = out.at(n, m);
                    for (std::size_t k = 0; k < dim; ++k)
                        cell[k] += h[k] * s;
                }
            }
        }

        inline Grid<std::uint32_t> labels_from_bits(std::span<const std::uint8_t> bits, unsigned bits_per_symbol,
                                                    std::size_t subcarriers, std::size_t symbols)
        {
            Grid<std::uint32_t> labels(subcarriers, symbols);
            std::size_t b = 0;
            for (auto &l : labels.values())
            {
                std::uint32_t v = 0;
                for (unsigned k = 0; k < bits_per_symbol; ++k)
                    v = (v << 1) | (bits[b++] & 1u);
                l = v;
            }
            return labels;
        }
    } // namespace detail

    // y_p(n, m) = H_C(n, m) w_U sqrt(P_U) d_p(n, m) + z
    inline ObservationGrid synthesize_preamble_rx(const SimConfig &cfg, const TrialSetup &setup,
                                                  const SymbolGrid &preamble, std::uint64_t seed)
    {
        ObservationGrid y(cfg.numerology.num_subcarriers, cfg.preamble_symbols, setup.bs_geometry.size());
        if (preamble.values.subcarriers() != y.subcarriers() || preamble.values.symbols() != y.symbols())
            throw DimensionMismatchError("synthesize_preamble_rx: preamble grid shape");
        detail::add_scaled(y, setup.comm_preamble, std::sqrt(cfg.ul_power_w()), preamble.values);
        detail::add_noise(y, cfg.noise_var_w, substream_seed(seed, Stream::preamble_noise));
        return y;
    }

    inline ObservationGrid synthesize_preamble_rx(const SimConfig &cfg, std::uint64_t seed)
    {
        const TrialSetup setup = prepare_trial(cfg, seed);
        return synthesize_preamble_rx(cfg, setup, gen_preamble(cfg.preamble_symbols, cfg.numerology), seed);
    }

    // The data-phase observation split into the part without the UL signal
    // (echo + noise) and the UL signal itself; the received grid is their sum.
    struct DataRx
    {
        ObservationGrid echo_plus_noise;
        ObservationGrid uplink;

        ObservationGrid total() const
        {
            ObservationGrid y = echo_plus_noise;
            y += uplink;
            return y;
        }
    };

    inline DataRx synthesize_data_components(const SimConfig &cfg, const TrialSetup &setup, const SymbolGrid &ul_symbols,
                                             const SymbolGrid &sensing_symbols, std::uint64_t seed)
    {
        const auto &num = cfg.numerology;
        const std::size_t dim = setup.bs_geometry.size();
        DataRx rx{ObservationGrid(num.num_subcarriers, num.num_symbols, dim),
                  ObservationGrid(num.num_subcarriers, num.num_symbols, dim)};
        for (const auto *g : {&ul_symbols, &sensing_symbols})
            if (g->values.subcarriers() != num.num_subcarriers || g->values.symbols() != num.num_symbols)
                throw DimensionMismatchError("synthesize_data_rx: symbol grid shape");
        detail::add_scaled(rx.echo_plus_noise, setup.sensing, std::sqrt(cfg.dl_power_w()), sensing_symbols.values);
        detail::add_noise(rx.echo_plus_noise, cfg.noise_var_w, substream_seed(seed, Stream::data_noise));
        detail::add_scaled(rx.uplink, setup.comm_data, std::sqrt(cfg.ul_power_w()), ul_symbols.values);
        return rx;
    }

    // y(n, m) = H_S w_TX sqrt(P_D) d_S + H_C w_U sqrt(P_U) d_U + z
    inline ObservationGrid synthesize_data_rx(const SimConfig &cfg, const TrialSetup &setup,
                                              const SymbolGrid &ul_symbols, const SymbolGrid &sensing_symbols,
                                              std::uint64_t seed)
    {
        return synthesize_data_components(cfg, setup, ul_symbols, sensing_symbols, seed).total();
    }

    struct TrialResult
    {
        ReceiverCase receiver_case = ReceiverCase::sic;
        std::uint64_t seed = 0;
        std::optional<DetectionResult> detection; // empty on a missed detection
        double true_range_m = 0.0;
        double range_estimate_m = std::numeric_limits<double>::quiet_NaN();
        double range_sq_error_m2 = std::numeric_limits<double>::quiet_NaN();
        std::optional<std::uint64_t> bit_errors; // present only when UL data was demodulated
        std::uint64_t bits_total = 0;

        bool missed() const { return !detection.has_value(); }
    };

    // Genie switches for isolating receiver impairments in tests.
    struct ReceiverAids
    {
        bool perfect_csi = false;       // use the true UL channel instead of the preamble estimate
        bool perfect_decisions = false; // cancel with the transmitted UL symbols
    };

    namespace detail
    {
        inline void detect(TrialResult &r, const EchoResponseGrid &echo, const SimConfig &cfg)
        {
            const RangeDopplerMap map = compute_map(echo, cfg.map_options);
            const auto peak = find_peak(map);
            if (!peak)
                return;
            r.detection = bins_to_estimates(*peak, cfg.numerology, map);
            r.range_estimate_m = r.detection->range_m;
            const double e = r.range_estimate_m - r.true_range_m;
            r.range_sq_error_m2 = e * e;
        }
    } // namespace detail

    // Evaluates several receiver cases on one shared realization.
    inline std::vector<TrialResult> run_trial_cases(const SimConfig &cfg, std::uint64_t seed,
                                                    std::span<const ReceiverCase> cases, const ReceiverAids &aids = {})
    {
        const TrialSetup setup = prepare_trial(cfg, seed);
        const auto &num = cfg.numerology;
        const QamConstellation constellation = build_constellation(cfg.qam_order);
        const std::size_t cells = num.num_subcarriers * num.num_symbols;
        const auto bits = random_bits(cells * constellation.bits_per_symbol, substream_seed(seed, Stream::ul_bits));
        const SymbolGrid ul_symbols = map_bits(bits, constellation, num);
        const SymbolGrid sensing_symbols = gen_sensing_symbols(num, substream_seed(seed, Stream::sensing_symbols));
        const DataRx rx = synthesize_data_components(cfg, setup, ul_symbols, sensing_symbols, seed);
        const double p_ul = cfg.ul_power_w();

        std::optional<ObservationGrid> total;
        auto get_total = [&]() -> const ObservationGrid & {
            if (!total)
                total = rx.total();
            return *total;
        };

        std::vector<TrialResult> out;
        for (const ReceiverCase c : cases)
        {
            TrialResult r;
            r.receiver_case = c;
            r.seed = seed;
            r.true_range_m = setup.true_range_m;
            switch (c)
            {
            case ReceiverCase::dl_only:
                detail::detect(r, extract_echo(get_total(), setup.dl_rx, sensing_symbols), cfg);
                break;
            case ReceiverCase::no_uplink:
                detail::detect(r, extract_echo(rx.echo_plus_noise, setup.dl_rx, sensing_symbols), cfg);
                break;
            case ReceiverCase::sic:
            {
                if (!(p_ul > 0.0))
                {
                    // silent UL: nothing to demodulate or cancel
                    detail::detect(r, extract_echo(get_total(), setup.dl_rx, sensing_symbols), cfg);
                    break;
                }
                CsiEstimate csi;
                if (aids.perfect_csi)
                {
                    csi = CsiEstimate{VectorGrid(num.num_subcarriers, 1, setup.bs_geometry.size()),
                                      cfg.preamble_symbols, p_ul};
                    for (std::size_t n = 0; n < num.num_subcarriers; ++n)
                    {
                        const auto h = setup.comm_data.at(n, 0);
                        std::copy(h.begin(), h.end(), csi.h_hat.at(n, 0).begin());
                    }
                }
                else
                {
                    const SymbolGrid preamble = gen_preamble(cfg.preamble_symbols, num);
                    csi = estimate_ul_csi(synthesize_preamble_rx(cfg, setup, preamble, seed), preamble, p_ul);
                }
                const CombinerWeights w = mmse_combiner(csi, p_ul, cfg.noise_var_w);
                const Equalized eq = equalize_and_demod(get_total(), w, csi, p_ul, constellation);

                const auto truth = detail::labels_from_bits(bits, constellation.bits_per_symbol, num.num_subcarriers,
                                                            num.num_symbols);
                std::uint64_t errors = 0;
                for (std::size_t i = 0; i < cells; ++i)
                    errors += static_cast<std::uint64_t>(std::popcount(truth.values()[i] ^ eq.labels.values()[i]));
                r.bit_errors = errors;
                r.bits_total = bits.size();

                const SymbolGrid &decided = aids.perfect_decisions ? ul_symbols : eq.symbols;
                const ObservationGrid cleaned = cancel_communication(get_total(), csi, decided, p_ul);
                detail::detect(r, extract_echo(cleaned, setup.dl_rx, sensing_symbols), cfg);
                break;
            }
            }
            out.push_back(std::move(r));
        }
        return out;
    }

    inline TrialResult run_trial(const SimConfig &cfg, std::uint64_t seed, const ReceiverAids &aids = {})
    {
        const ReceiverCase c = cfg.receiver_case;
        return run_trial_cases(cfg, seed, std::span<const ReceiverCase>(&c, 1), aids).front();
    }

} // namespace cdu

#endif
