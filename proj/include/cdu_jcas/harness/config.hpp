// SPDX-License-Identifier: Apache-2.0
//
// Simulation configuration and its flat key/value text format.
//
//   # comment
//   key = value
//
// Scalars are plain numbers; positions are "x, y, z"; array sizes are "PxQ";
// powers are in dBm and accept "-inf" for a switched-off transmitter.
// Each `scatterer = x, y, z [, v_mps [, sigma2_sensing [, sigma2_comm]]]` line
// adds one scatterer; the first such line replaces the default target.
// Unknown keys and malformed values are rejected.

#ifndef CDU_JCAS_HARNESS_CONFIG_HPP
#define CDU_JCAS_HARNESS_CONFIG_HPP

#include "../array.hpp"
#include "../core.hpp"
#include "../modem.hpp"
#include "../range_doppler.hpp"
#include "../scene_channel.hpp"

#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace cdu
{
    class ConfigError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // 1: echo extracted from the raw superimposed signal (no UL handling)
    // 2: SIC receiver (demodulate, reconstruct, cancel, then extract)
    // 3: same sensing chain with the UL transmitter silent during the data phase
    enum class ReceiverCase : int
    {
        dl_only = 1,
        sic = 2,
        no_uplink = 3,
    };

    inline double dbm_to_watts(double p_dbm)
    {
        if (p_dbm == -std::numeric_limits<double>::infinity())
            return 0.0;
        if (!std::isfinite(p_dbm))
            throw InputDomainError("dbm_to_watts: power must be finite or -inf");
        return std::pow(10.0, (p_dbm - 30.0) / 10.0);
    }

    // k F T B
    inline double thermal_noise_w(double noise_factor, double temperature_k, double bandwidth_hz)
    {
        return boltzmann * noise_factor * temperature_k * bandwidth_hz;
    }

    struct SimConfig
    {
        OfdmNumerology numerology;
        Scene scene;
        std::size_t bs_rows = 8;
        std::size_t bs_cols = 8;
        std::size_t user_rows = 1;
        std::size_t user_cols = 1;
        double element_spacing_wavelengths = 0.5;

        double noise_var_w = 1.2294e-12;
        // bookkeeping for noise_var_w = k F T B
        double noise_factor = 10.0;
        double noise_temperature_k = 290.0;

        double ul_power_dbm = 20.0;
        double dl_power_dbm = 27.0;
        unsigned qam_order = 4;
        ReceiverCase receiver_case = ReceiverCase::sic;
        std::size_t trials = 200;
        std::uint64_t master_seed = 1;
        std::size_t preamble_symbols = default_preamble_symbols;

        ReflectionModel reflection_model = ReflectionModel::steady;
        BeamFormula beam_formula = BeamFormula::matched;
        BeamNormalization dl_beam_normalization = BeamNormalization::unit_power;
        double c0_phase_rad = 0.0;
        // sensing beam direction; empty = toward the first scatterer
        std::optional<Angle2D> sensing_direction;
        MapOptions map_options;

        ArrayGeometry bs_geometry() const
        {
            const double lambda = numerology.wavelength_m();
            return {bs_rows, bs_cols, element_spacing_wavelengths * lambda, lambda};
        }
        ArrayGeometry user_geometry() const
        {
            const double lambda = numerology.wavelength_m();
            return {user_rows, user_cols, element_spacing_wavelengths * lambda, lambda};
        }
        cplx c0() const { return std::polar(1.0, c0_phase_rad); }
        double ul_power_w() const { return dbm_to_watts(ul_power_dbm); }
        double dl_power_w() const { return dbm_to_watts(dl_power_dbm); }

        void validate() const
        {
            try
            {
                numerology.validate();
                scene.validate();
                bs_geometry().validate();
                user_geometry().validate();
            }
            catch (const std::exception &e)
            {
                throw ConfigError(e.what());
            }
            auto power_ok = [](double dbm) { return std::isfinite(dbm) || dbm == -std::numeric_limits<double>::infinity(); };
            if (!power_ok(ul_power_dbm) || !power_ok(dl_power_dbm))
                throw ConfigError("powers must be finite (or -inf for off)");
            if (!(noise_var_w >= 0.0) || !std::isfinite(noise_var_w))
                throw ConfigError("noise_var_w must be a non-negative number");
            if (qam_order != 4 && qam_order != 16 && qam_order != 64)
                throw ConfigError("qam_order must be 4, 16 or 64");
            if (trials < 1)
                throw ConfigError("trials must be >= 1");
            if (preamble_symbols < 1)
                throw ConfigError("preamble_symbols must be >= 1");
            if (map_options.range_padding < 1 || map_options.doppler_padding < 1)
                throw ConfigError("padding factors must be >= 1");
            if (!std::isfinite(c0_phase_rad))
                throw ConfigError("c0_phase_rad must be finite");
        }
    };

    namespace detail
    {
        inline std::string trim(const std::string &s)
        {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos)
                return {};
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        }

        inline double parse_double(const std::string &key, const std::string &v)
        {
            std::size_t used = 0;
            double out = 0.0;
            try
            {
                out = std::stod(v, &used);
            }
            catch (const std::exception &)
            {
                throw ConfigError("'" + key + "': not a number: '" + v + "'");
            }
            if (trim(v.substr(used)).size() != 0)
                throw ConfigError("'" + key + "': trailing characters in '" + v + "'");
            return out;
        }

        inline std::uint64_t parse_uint(const std::string &key, const std::string &v)
        {
            if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
                throw ConfigError("'" + key + "': expected a non-negative integer, got '" + v + "'");
            try
            {
                return std::stoull(v);
            }
            catch (const std::exception &)
            {
                throw ConfigError("'" + key + "': integer out of range: '" + v + "'");
            }
        }

        inline std::vector<double> parse_list(const std::string &key, const std::string &v)
        {
            std::vector<double> out;
            std::stringstream ss(v);
            std::string item;
            while (std::getline(ss, item, ','))
                out.push_back(parse_double(key, trim(item)));
            return out;
        }

        inline Vec3 parse_vec3(const std::string &key, const std::string &v)
        {
            const auto xs = parse_list(key, v);
            if (xs.size() != 3)
                throw ConfigError("'" + key + "': expected x, y, z");
            return {xs[0], xs[1], xs[2]};
        }

        inline std::pair<std::size_t, std::size_t> parse_array_size(const std::string &key, const std::string &v)
        {
            const auto x = v.find('x');
            if (x == std::string::npos)
                throw ConfigError("'" + key + "': expected PxQ, got '" + v + "'");
            return {parse_uint(key, trim(v.substr(0, x))), parse_uint(key, trim(v.substr(x + 1)))};
        }

        inline bool parse_bool(const std::string &key, const std::string &v)
        {
            if (v == "true" || v == "1")
                return true;
            if (v == "false" || v == "0")
                return false;
            throw ConfigError("'" + key + "': expected true/false, got '" + v + "'");
        }
    } // namespace detail

    inline void apply_config_entry(SimConfig &cfg, const std::string &key, const std::string &value,
                                   bool &scatterers_replaced)
    {
        using namespace detail;
        auto &num = cfg.numerology;
        auto &sc = cfg.scene;

        if (key == "carrier_hz")
            num.carrier_hz = parse_double(key, value);
        else if (key == "subcarrier_spacing_hz")
            num.subcarrier_spacing_hz = parse_double(key, value);
        else if (key == "num_subcarriers")
            num.num_subcarriers = parse_uint(key, value);
        else if (key == "num_symbols")
            num.num_symbols = parse_uint(key, value);
        else if (key == "bs_position")
            sc.bs_position = parse_vec3(key, value);
        else if (key == "user_position")
            sc.user_position = parse_vec3(key, value);
        else if (key == "user_radial_velocity_mps")
            sc.user_radial_velocity_mps = parse_double(key, value);
        else if (key == "scatterer")
        {
            const auto xs = parse_list(key, value);
            if (xs.size() < 3 || xs.size() > 6)
                throw ConfigError("'scatterer': expected x, y, z [, v [, sigma2_s [, sigma2_c]]]");
            if (!scatterers_replaced)
            {
                sc.scatterers.clear();
                scatterers_replaced = true;
            }
            Scatterer s;
            s.position = {xs[0], xs[1], xs[2]};
            if (xs.size() > 3)
                s.radial_velocity_mps = xs[3];
            if (xs.size() > 4)
                s.sensing_variance = xs[4];
            if (xs.size() > 5)
                s.comm_variance = xs[5];
            sc.scatterers.push_back(s);
        }
        else if (key == "bs_yaw_deg")
            sc.bs_frame.yaw_rad = parse_double(key, value) * pi / 180.0;
        else if (key == "user_yaw_deg")
            sc.user_frame.yaw_rad = parse_double(key, value) * pi / 180.0;
        else if (key == "comm_nlos")
            sc.comm_nlos = parse_bool(key, value);
        else if (key == "bs_array")
            std::tie(cfg.bs_rows, cfg.bs_cols) = parse_array_size(key, value);
        else if (key == "user_array")
            std::tie(cfg.user_rows, cfg.user_cols) = parse_array_size(key, value);
        else if (key == "element_spacing_wavelengths")
            cfg.element_spacing_wavelengths = parse_double(key, value);
        else if (key == "noise_var_w")
            cfg.noise_var_w = parse_double(key, value);
        else if (key == "noise_factor")
            cfg.noise_factor = parse_double(key, value);
        else if (key == "noise_temperature_k")
            cfg.noise_temperature_k = parse_double(key, value);
        else if (key == "ul_power_dbm")
            cfg.ul_power_dbm = parse_double(key, value);
        else if (key == "dl_power_dbm")
            cfg.dl_power_dbm = parse_double(key, value);
        else if (key == "qam_order")
            cfg.qam_order = static_cast<unsigned>(parse_uint(key, value));
        else if (key == "case")
        {
            const auto c = parse_uint(key, value);
            if (c < 1 || c > 3)
                throw ConfigError("'case': expected 1, 2 or 3");
            cfg.receiver_case = static_cast<ReceiverCase>(c);
        }
        else if (key == "trials")
            cfg.trials = parse_uint(key, value);
        else if (key == "master_seed")
            cfg.master_seed = parse_uint(key, value);
        else if (key == "preamble_symbols")
            cfg.preamble_symbols = parse_uint(key, value);
        else if (key == "reflection_model")
        {
            if (value == "steady")
                cfg.reflection_model = ReflectionModel::steady;
            else if (value == "gaussian")
                cfg.reflection_model = ReflectionModel::gaussian;
            else
                throw ConfigError("'reflection_model': expected steady or gaussian");
        }
        else if (key == "beam_formula")
        {
            if (value == "matched")
                cfg.beam_formula = BeamFormula::matched;
            else if (value == "pseudo_inverse")
                cfg.beam_formula = BeamFormula::pseudo_inverse;
            else
                throw ConfigError("'beam_formula': expected matched or pseudo_inverse");
        }
        else if (key == "dl_beam_normalization")
        {
            if (value == "unit_power")
                cfg.dl_beam_normalization = BeamNormalization::unit_power;
            else if (value == "unit_gain")
                cfg.dl_beam_normalization = BeamNormalization::unit_gain;
            else
                throw ConfigError("'dl_beam_normalization': expected unit_power or unit_gain");
        }
        else if (key == "c0_phase_rad")
            cfg.c0_phase_rad = parse_double(key, value);
        else if (key == "sensing_direction_deg")
        {
            const auto xs = parse_list(key, value);
            if (xs.size() != 2)
                throw ConfigError("'sensing_direction_deg': expected azimuth, elevation");
            try
            {
                cfg.sensing_direction = Angle2D::make(xs[0] * pi / 180.0, xs[1] * pi / 180.0);
            }
            catch (const std::exception &e)
            {
                throw ConfigError(std::string("'sensing_direction_deg': ") + e.what());
            }
        }
        else if (key == "range_padding")
            cfg.map_options.range_padding = parse_uint(key, value);
        else if (key == "doppler_padding")
            cfg.map_options.doppler_padding = parse_uint(key, value);
        else
            throw ConfigError("unknown configuration key '" + key + "'");
    }

    // Applies the entries of `in` on top of `base` and validates the result.
    inline SimConfig parse_config(std::istream &in, SimConfig base = {})
    {
        std::string line;
        std::size_t line_no = 0;
        bool scatterers_replaced = false;
        while (std::getline(in, line))
        {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos)
                line.erase(hash);
            line = detail::trim(line);
            if (line.empty())
                continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
            const std::string key = detail::trim(line.substr(0, eq));
            const std::string value = detail::trim(line.substr(eq + 1));
            try
            {
                apply_config_entry(base, key, value, scatterers_replaced);
            }
            catch (const ConfigError &e)
            {
                throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        base.validate();
        return base;
    }

    inline SimConfig load_config(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open configuration file '" + path + "'");
        return parse_config(in);
    }

} // namespace cdu

#endif
