// SPDX-License-Identifier: Apache-2.0
//
// Power sweeps: Monte-Carlo range MSE and UL BER per (power point, receiver case).
//
// Trial t at point i uses seed hash(master, i, t) regardless of the number of
// worker threads, so results are reproducible and every case at a point sees
// identical realizations.

#ifndef CDU_JCAS_HARNESS_SWEEP_HPP
#define CDU_JCAS_HARNESS_SWEEP_HPP

#include "config.hpp"
#include "simulation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace cdu
{
    enum class SweepAxis
    {
        dl_power,
        ul_power,
    };

    inline const char *to_string(SweepAxis a) { return a == SweepAxis::dl_power ? "dl_power" : "ul_power"; }

    inline std::uint64_t trial_seed(std::uint64_t master, std::size_t point_index, std::size_t trial_index)
    {
        return hash_seed({master, static_cast<std::uint64_t>(point_index), static_cast<std::uint64_t>(trial_index)});
    }

    struct SweepPoint
    {
        double axis_dbm = 0.0;
        ReceiverCase receiver_case = ReceiverCase::sic;
        std::size_t trials = 0;
        std::size_t detected = 0;
        double mse_m2 = std::numeric_limits<double>::quiet_NaN(); // over detected trials
        std::optional<double> ber;                                // absent unless UL data was demodulated
        std::uint64_t bit_errors = 0;
        std::uint64_t bits = 0;
        double missed_rate = 0.0;
        std::vector<double> sq_errors; // per trial, NaN for misses, in trial order
    };

    struct SweepResult
    {
        SweepAxis axis = SweepAxis::dl_power;
        std::vector<SweepPoint> points; // point-major, then the requested case order
    };

    inline SimConfig config_at(SimConfig cfg, SweepAxis axis, double value_dbm)
    {
        (axis == SweepAxis::dl_power ? cfg.dl_power_dbm : cfg.ul_power_dbm) = value_dbm;
        return cfg;
    }

    // All cases at one power point. `workers` = 0 picks the hardware concurrency.
    inline std::vector<SweepPoint> run_point(const SimConfig &base, SweepAxis axis, double value_dbm,
                                             std::size_t point_index, std::size_t trials,
                                             std::span<const ReceiverCase> cases, unsigned workers = 1)
    {
        if (trials == 0)
            throw InputDomainError("run_point: trials must be >= 1");
        if (cases.empty())
            throw InputDomainError("run_point: no receiver cases requested");
        const SimConfig cfg = config_at(base, axis, value_dbm);
        cfg.validate();

        std::vector<std::vector<TrialResult>> results(trials);
        if (workers == 0)
            workers = std::max(1u, std::thread::hardware_concurrency());
        workers = static_cast<unsigned>(std::min<std::size_t>(workers, trials));

        if (workers <= 1)
        {
            for (std::size_t t = 0; t < trials; ++t)
                results[t] = run_trial_cases(cfg, trial_seed(cfg.master_seed, point_index, t), cases);
        }
        else
        {
            std::atomic<std::size_t> next{0};
            std::exception_ptr failure;
            std::mutex failure_mutex;
            std::vector<std::thread> pool;
            for (unsigned w = 0; w < workers; ++w)
            {
                pool.emplace_back([&] {
                    for (std::size_t t = next++; t < trials; t = next++)
                    {
                        try
                        {
                            results[t] = run_trial_cases(cfg, trial_seed(cfg.master_seed, point_index, t), cases);
                        }
                        catch (...)
                        {
                            std::lock_guard<std::mutex> lock(failure_mutex);
                            if (!failure)
                                failure = std::current_exception();
                        }
                    }
                });
            }
            for (auto &th : pool)
                th.join();
            if (failure)
                std::rethrow_exception(failure);
        }

        std::vector<SweepPoint> out;
        for (std::size_t ci = 0; ci < cases.size(); ++ci)
        {
            SweepPoint p;
            p.axis_dbm = value_dbm;
            p.receiver_case = cases[ci];
            p.trials = trials;
            double sum = 0.0;
            bool any_bits = false;
            for (std::size_t t = 0; t < trials; ++t)
            {
                const TrialResult &r = results[t][ci];
                p.sq_errors.push_back(r.range_sq_error_m2);
                if (!r.missed())
                {
                    ++p.detected;
                    sum += r.range_sq_error_m2;
                }
                if (r.bit_errors)
                {
                    any_bits = true;
                    p.bit_errors += *r.bit_errors;
                    p.bits += r.bits_total;
                }
            }
            if (p.detected > 0)
                p.mse_m2 = sum / static_cast<double>(p.detected);
            p.missed_rate = static_cast<double>(trials - p.detected) / static_cast<double>(trials);
            if (any_bits && p.bits > 0)
                p.ber = static_cast<double>(p.bit_errors) / static_cast<double>(p.bits);
            out.push_back(std::move(p));
        }
        return out;
    }

    inline SweepResult run_sweep(const SimConfig &cfg, SweepAxis axis, std::span<const double> points_dbm,
                                 std::size_t trials, std::span<const ReceiverCase> cases, unsigned workers = 1)
    {
        SweepResult res;
        res.axis = axis;
        for (std::size_t i = 0; i < points_dbm.size(); ++i)
        {
            auto pts = run_point(cfg, axis, points_dbm[i], i, trials, cases, workers);
            for (auto &p : pts)
                res.points.push_back(std::move(p));
        }
        return res;
    }

    // "a:b:step" (inclusive of b within rounding) or "a,b,c".
    inline std::vector<double> parse_points(const std::string &spec)
    {
        auto num = [&](const std::string &s) { return detail::parse_double("points", detail::trim(s)); };
        std::vector<double> out;
        const auto c1 = spec.find(':');
        if (c1 != std::string::npos)
        {
            const auto c2 = spec.find(':', c1 + 1);
            if (c2 == std::string::npos || spec.find(':', c2 + 1) != std::string::npos)
                throw ConfigError("points: expected start:stop:step");
            const double a = num(spec.substr(0, c1));
            const double b = num(spec.substr(c1 + 1, c2 - c1 - 1));
            const double step = num(spec.substr(c2 + 1));
            if (!(step > 0.0) || !(b >= a) || !std::isfinite(a) || !std::isfinite(b))
                throw ConfigError("points: need finite start <= stop and a positive step");
            const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
            if (count > 100000)
                throw ConfigError("points: too many points");
            for (std::size_t i = 0; i < count; ++i)
                out.push_back(a + static_cast<double>(i) * step);
        }
        else
        {
            out = detail::parse_list("points", spec);
            for (double v : out)
                if (!std::isfinite(v) && v != -std::numeric_limits<double>::infinity())
                    throw ConfigError("points: non-finite value");
        }
        if (out.empty())
            throw ConfigError("points: empty list");
        return out;
    }

    inline void write_csv(std::ostream &os, const SweepResult &res)
    {
        os << "axis_dbm,case,mse_m2,ber,missed_rate,trials,bits\n";
        for (const auto &p : res.points)
        {
            const std::string mse = std::isnan(p.mse_m2) ? std::string("NA") : fmt::format("{:.9g}", p.mse_m2);
            const std::string ber = p.ber ? fmt::format("{:.9g}", *p.ber) : std::string("NA");
            os << fmt::format("{:g},{},{},{},{:.9g},{},{}\n", p.axis_dbm, static_cast<int>(p.receiver_case), mse, ber,
                              p.missed_rate, p.trials, p.bits);
        }
    }

} // namespace cdu

#endif
