// SPDX-License-Identifier: Apache-2.0
//
// Scene geometry -> propagation paths -> per-subcarrier, per-symbol channel
// grids for the DL echo sensing subchannel and the UL communication channel.
//
// Both UPAs default to a boresight along global +x with the array p-axis
// along +y and the q-axis along +z; a yaw angle rotates an array about z.
// A direction u seen from an array then has elevation acos(u . boresight)
// and azimuth atan2(u . q_axis, u . p_axis), which makes cos(az) sin(el)
// and sin(az) sin(el) the direction cosines along the p and q axes.

#ifndef CDU_JCAS_SCENE_CHANNEL_HPP
#define CDU_JCAS_SCENE_CHANNEL_HPP

#include "array.hpp"
#include "core.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <string>
#include <vector>

namespace cdu
{
    struct OfdmNumerology
    {
        double subcarrier_spacing_hz = 240e3;
        std::size_t num_subcarriers = 128;
        std::size_t num_symbols = 64;
        double carrier_hz = 63e9;

        // No cyclic-prefix extension: T_s = 1 / delta_f.
        double symbol_duration_s() const { return 1.0 / subcarrier_spacing_hz; }
        double wavelength_m() const { return speed_of_light / carrier_hz; }
        double bandwidth_hz() const { return subcarrier_spacing_hz * static_cast<double>(num_subcarriers); }
        double range_resolution_m() const { return speed_of_light / (2.0 * bandwidth_hz()); }

        void validate() const
        {
            if (!(subcarrier_spacing_hz > 0.0) || !std::isfinite(subcarrier_spacing_hz))
                throw InputDomainError("OfdmNumerology: subcarrier spacing must be positive");
            if (!(carrier_hz > 0.0) || !std::isfinite(carrier_hz))
                throw InputDomainError("OfdmNumerology: carrier frequency must be positive");
            if (!is_power_of_two(num_subcarriers) || !is_power_of_two(num_symbols))
                throw InputDomainError("OfdmNumerology: N_c and M_s must be powers of two");
        }
    };

    // Orientation of a UPA in the horizontal plane.
    struct ArrayFrame
    {
        double yaw_rad = 0.0;

        Vec3 boresight() const { return {std::cos(yaw_rad), std::sin(yaw_rad), 0.0}; }
        Vec3 p_axis() const { return {-std::sin(yaw_rad), std::cos(yaw_rad), 0.0}; }
        Vec3 q_axis() const { return {0.0, 0.0, 1.0}; }
    };

    // Direction of `to` as seen by an array at `from`.
    inline Angle2D direction_angle(const Vec3 &from, const Vec3 &to, const ArrayFrame &frame = {})
    {
        const Vec3 d = to - from;
        const double r = d.norm();
        if (!(r > 0.0))
            throw DegenerateGeometryError("direction_angle: coincident positions");
        const Vec3 u = (1.0 / r) * d;
        const double el = std::acos(std::clamp(u.dot(frame.boresight()), -1.0, 1.0));
        const double az = std::atan2(u.dot(frame.q_axis()), u.dot(frame.p_axis()));
        return Angle2D::make(az, el);
    }

    struct Scatterer
    {
        Vec3 position;
        double radial_velocity_mps = 0.0; // positive = approaching the BS
        double sensing_variance = 1.0;    // sigma^2 of the echo reflection factor
        double comm_variance = 1.0;       // sigma^2 of the NLoS reflection factor
    };

    struct Scene
    {
        Vec3 bs_position{50.0, 4.75, 7.0};
        Vec3 user_position{140.0, 0.0, 2.0};
        double user_radial_velocity_mps = 0.0;
        std::vector<Scatterer> scatterers{Scatterer{{129.0, 10.0, 5.0}}};
        ArrayFrame bs_frame;
        ArrayFrame user_frame;
        // NLoS UL paths through the scatterers; off by default (LoS-dominated mmWave link)
        bool comm_nlos = false;

        void validate() const
        {
            if (!bs_position.finite() || !user_position.finite())
                throw InputDomainError("Scene: non-finite BS or user position");
            if (scatterers.empty())
                throw InputDomainError("Scene: at least one sensing scatterer is required");
            for (const auto &s : scatterers)
            {
                if (!s.position.finite() || !std::isfinite(s.radial_velocity_mps))
                    throw InputDomainError("Scene: non-finite scatterer parameters");
                if (!(s.sensing_variance >= 0.0) || !(s.comm_variance >= 0.0))
                    throw InputDomainError("Scene: reflection variances must be non-negative");
            }
        }
    };

    // gaussian: beta ~ CN(0, sigma^2), redrawn per trial (fluctuating target)
    // steady:   |beta| = sigma with a uniformly random phase per trial (non-fluctuating target)
    enum class ReflectionModel
    {
        gaussian,
        steady,
    };

    inline cplx draw_reflection_factor(Engine &eng, double variance, ReflectionModel model)
    {
        if (model == ReflectionModel::steady)
            return std::polar(std::sqrt(variance), 2.0 * pi * unit_uniform(eng));
        return ComplexNormal(variance)(eng);
    }

    enum class PathKind
    {
        sensing_echo,
        comm_los,
        comm_nlos,
    };

    struct PropagationPath
    {
        Angle2D angle_tx; // AoD at the transmitting array
        Angle2D angle_rx; // AoA at the BS receive array
        double delay_s = 0.0;
        double doppler_hz = 0.0;
        cplx amplitude{0.0, 0.0};
        PathKind kind = PathKind::sensing_echo;
        double range_m = 0.0; // one-way BS-target range for echoes, total path length otherwise
    };

    // Sensing echoes first (one per scatterer, in scene order), then the UL LoS path,
    // then optional NLoS UL paths. Reflection factors are drawn from `rng_seed` in that order.
    inline std::vector<PropagationPath> derive_paths(const Scene &scene, const OfdmNumerology &num,
                                                     std::uint64_t rng_seed,
                                                     ReflectionModel model = ReflectionModel::gaussian)
    {
        scene.validate();
        num.validate();
        const double lambda = num.wavelength_m();
        const double four_pi = 4.0 * pi;
        Engine eng = make_engine(rng_seed);

        std::vector<PropagationPath> paths;
        for (const auto &s : scene.scatterers)
        {
            const double d = distance(scene.bs_position, s.position);
            if (!(d > 0.0))
                throw DegenerateGeometryError("derive_paths: scatterer coincides with the BS");
            PropagationPath p;
            p.kind = PathKind::sensing_echo;
            p.angle_tx = direction_angle(scene.bs_position, s.position, scene.bs_frame);
            p.angle_rx = p.angle_tx;
            p.delay_s = 2.0 * d / speed_of_light;
            p.doppler_hz = 2.0 * s.radial_velocity_mps / lambda;
            const double loss = std::sqrt(lambda * lambda / (four_pi * four_pi * four_pi * d * d * d * d));
            p.amplitude = loss * draw_reflection_factor(eng, s.sensing_variance, model);
            p.range_m = d;
            paths.push_back(p);
        }

        const double d0 = distance(scene.bs_position, scene.user_position);
        if (!(d0 > 0.0))
            throw DegenerateGeometryError("derive_paths: user coincides with the BS");
        {
            PropagationPath p;
            p.kind = PathKind::comm_los;
            p.angle_tx = direction_angle(scene.user_position, scene.bs_position, scene.user_frame);
            p.angle_rx = direction_angle(scene.bs_position, scene.user_position, scene.bs_frame);
            p.delay_s = d0 / speed_of_light;
            p.doppler_hz = scene.user_radial_velocity_mps / lambda;
            p.amplitude = lambda / (four_pi * d0);
            p.range_m = d0;
            paths.push_back(p);
        }

        if (scene.comm_nlos)
        {
            for (const auto &s : scene.scatterers)
            {
                const double d1 = distance(scene.user_position, s.position);
                const double d2 = distance(s.position, scene.bs_position);
                if (!(d1 > 0.0) || !(d2 > 0.0))
                    throw DegenerateGeometryError("derive_paths: scatterer coincides with the user or BS");
                PropagationPath p;
                p.kind = PathKind::comm_nlos;
                p.angle_tx = direction_angle(scene.user_position, s.position, scene.user_frame);
                p.angle_rx = direction_angle(scene.bs_position, s.position, scene.bs_frame);
                // aggregate two-hop delay; Doppler of both moving ends added
                p.delay_s = (d1 + d2) / speed_of_light;
                p.doppler_hz = (scene.user_radial_velocity_mps + s.radial_velocity_mps) / lambda;
                const double loss = std::sqrt(lambda * lambda / (four_pi * four_pi * four_pi * d1 * d1 * d2 * d2));
                p.amplitude = loss * draw_reflection_factor(eng, s.comm_variance, model);
                p.range_m = d1 + d2;
                paths.push_back(p);
            }
        }
        return paths;
    }

    namespace detail
    {
        struct PathTerm
        {
            cplx coefficient;            // b * a^T(p_tx) w
            std::vector<cplx> rx;        // a(p_rx)
            std::vector<cplx> delay;     // exp(-j 2 pi n df tau), per subcarrier
            std::vector<cplx> doppler;   // exp(+j 2 pi f m T_s), per symbol
        };

        inline PathTerm make_term(const PropagationPath &p, const ArrayGeometry &rx_geom, const ArrayGeometry &tx_geom,
                                  const Beamformer &tx, const OfdmNumerology &num, std::int64_t symbol_offset,
                                  std::size_t symbols)
        {
            if (tx.weights.size() != tx_geom.size())
                throw DimensionMismatchError("channel grid: transmit beamformer length " +
                                             std::to_string(tx.weights.size()) + " does not match array size " +
                                             std::to_string(tx_geom.size()));
            PathTerm t;
            t.coefficient = p.amplitude * dot_transpose(steering_vector(tx_geom, p.angle_tx), tx.weights);
            t.rx = steering_vector(rx_geom, p.angle_rx);
            t.delay.resize(num.num_subcarriers);
            for (std::size_t n = 0; n < num.num_subcarriers; ++n)
                t.delay[n] = std::polar(1.0, -2.0 * pi * static_cast<double>(n) * num.subcarrier_spacing_hz * p.delay_s);
            t.doppler.resize(symbols);
            const double ts = num.symbol_duration_s();
            for (std::size_t m = 0; m < symbols; ++m)
            {
                const double mm = static_cast<double>(static_cast<std::int64_t>(m) + symbol_offset);
                t.doppler[m] = std::polar(1.0, 2.0 * pi * p.doppler_hz * mm * ts);
            }
            return t;
        }

        inline ChannelGrid accumulate(const std::vector<PathTerm> &terms, std::size_t subcarriers, std::size_t symbols,
                                      std::size_t dim)
        {
            ChannelGrid grid(subcarriers, symbols, dim);
            for (const auto &t : terms)
            {
                for (std::size_t n = 0; n < subcarriers; ++n)
                {
                    const cplx cn = t.coefficient * t.delay[n];
                    for (std::size_t m = 0; m < symbols; ++m)
                    {
                        const cplx s = cn * t.doppler[m];
                        auto cell = grid.at(n, m);
                        for (std::size_t k = 0; k < dim; ++k)
                            cell[k] += s * t.rx[k];
                    }
                }
            }
            return grid;
        }
    } // namespace detail

    // Echo channel H_S,n,m w_TX: sum over echo paths of b e^{j2pi f m Ts} e^{-j2pi n df tau} a(p_rx) a^T(p_tx) w_TX.
    // `symbols` defaults to the numerology's M_s; `symbol_offset` shifts the slow-time index m.
    inline ChannelGrid sensing_channel_grid(const std::vector<PropagationPath> &paths, const Beamformer &tx,
                                            const ArrayGeometry &geom, const OfdmNumerology &num,
                                            std::size_t symbols = 0, std::int64_t symbol_offset = 0)
    {
        num.validate();
        if (symbols == 0)
            symbols = num.num_symbols;
        std::vector<detail::PathTerm> terms;
        for (const auto &p : paths)
        {
            if (p.kind != PathKind::sensing_echo)
                throw InputDomainError("sensing_channel_grid: non-echo path supplied");
            terms.push_back(detail::make_term(p, geom, geom, tx, num, symbol_offset, symbols));
        }
        return detail::accumulate(terms, num.num_subcarriers, symbols, geom.size());
    }

    // UL channel H_C,n,m w_TX^U. Requires the LoS path; echo paths in `paths` are ignored.
    inline ChannelGrid comm_channel_grid(const std::vector<PropagationPath> &paths, const Beamformer &user_tx,
                                         const ArrayGeometry &geom_bs, const ArrayGeometry &geom_user,
                                         const OfdmNumerology &num, std::size_t symbols = 0,
                                         std::int64_t symbol_offset = 0)
    {
        num.validate();
        if (symbols == 0)
            symbols = num.num_symbols;
        std::vector<detail::PathTerm> terms;
        bool has_los = false;
        for (const auto &p : paths)
        {
            if (p.kind == PathKind::sensing_echo)
                continue;
            has_los = has_los || p.kind == PathKind::comm_los;
            terms.push_back(detail::make_term(p, geom_bs, geom_user, user_tx, num, symbol_offset, symbols));
        }
        if (!has_los)
            throw InputDomainError("comm_channel_grid: no LoS path");
        return detail::accumulate(terms, num.num_subcarriers, symbols, geom_bs.size());
    }

    inline std::vector<PropagationPath> paths_of_kind(const std::vector<PropagationPath> &paths, PathKind kind)
    {
        std::vector<PropagationPath> out;
        std::copy_if(paths.begin(), paths.end(), std::back_inserter(out),
                     [kind](const PropagationPath &p) { return p.kind == kind; });
        return out;
    }

} // namespace cdu

#endif
