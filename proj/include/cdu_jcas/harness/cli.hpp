// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: load a configuration, run one power sweep, write CSV.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 invalid configuration.

#ifndef CDU_JCAS_HARNESS_CLI_HPP
#define CDU_JCAS_HARNESS_CLI_HPP

#include "config.hpp"
#include "sweep.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace cdu
{
    inline constexpr int exit_ok = 0;
    inline constexpr int exit_runtime_error = 1;
    inline constexpr int exit_usage = 2;
    inline constexpr int exit_bad_config = 3;

    inline int cli_main(const std::vector<std::string> &args, std::ostream &out = std::cout,
                        std::ostream &err = std::cerr)
    {
        CLI::App app{"Concurrent DL sensing / UL communication link-level simulator"};
        app.name(args.empty() ? "cdu_sim" : args.front());

        std::string config_path = "default";
        std::optional<int> receiver_case;
        std::string axis_name = "dl_power";
        std::string points_spec;
        std::optional<std::size_t> trials;
        std::optional<std::uint64_t> seed;
        std::string out_path;
        std::optional<unsigned> qam;
        unsigned workers = 1;

        app.add_option("--config", config_path, "configuration file, or 'default'");
        app.add_option("--case", receiver_case, "receiver case: 1 no SIC, 2 SIC, 3 UL silent")
            ->check(CLI::IsMember({1, 2, 3}));
        app.add_option("--sweep", axis_name, "swept power axis")->check(CLI::IsMember({"dl_power", "ul_power"}));
        app.add_option("--points", points_spec, "sweep points in dBm: start:stop:step or a comma list");
        app.add_option("--trials", trials, "Monte-Carlo trials per point")->check(CLI::PositiveNumber);
        app.add_option("--seed", seed, "master seed");
        app.add_option("--out", out_path, "CSV output path (stdout if omitted)");
        app.add_option("--qam", qam, "QAM order")->check(CLI::IsMember({4u, 16u, 64u}));
        app.add_option("--workers", workers, "worker threads (0 = all cores)");

        std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
        std::reverse(rest.begin(), rest.end()); // CLI11 consumes the vector from the back
        try
        {
            app.parse(rest);
        }
        catch (const CLI::CallForHelp &)
        {
            out << app.help();
            return exit_ok;
        }
        catch (const CLI::ParseError &e)
        {
            err << "error: " << e.what() << "\n" << app.help();
            return exit_usage;
        }

        const SweepAxis axis = axis_name == "ul_power" ? SweepAxis::ul_power : SweepAxis::dl_power;
        std::vector<double> points;
        try
        {
            if (points_spec.empty())
                points_spec = axis == SweepAxis::dl_power ? "-10:27:1" : "13,20";
            points = parse_points(points_spec);
        }
        catch (const ConfigError &e)
        {
            err << "error: --points: " << e.what() << "\n";
            return exit_usage;
        }

        SimConfig cfg;
        try
        {
            if (config_path != "default")
                cfg = load_config(config_path);
            if (receiver_case)
                cfg.receiver_case = static_cast<ReceiverCase>(*receiver_case);
            if (trials)
                cfg.trials = *trials;
            if (seed)
                cfg.master_seed = *seed;
            if (qam)
                cfg.qam_order = *qam;
            cfg.validate();
        }
        catch (const std::exception &e)
        {
            err << "error: invalid configuration: " << e.what() << "\n";
            return exit_bad_config;
        }

        try
        {
            const ReceiverCase c = cfg.receiver_case;
            const SweepResult res = run_sweep(cfg, axis, points, cfg.trials, std::span<const ReceiverCase>(&c, 1),
                                              workers);
            if (out_path.empty())
            {
                write_csv(out, res);
            }
            else
            {
                std::ofstream f(out_path, std::ios::binary);
                if (!f)
                {
                    err << "error: cannot open '" << out_path << "' for writing\n";
                    return exit_runtime_error;
                }
                write_csv(f, res);
                if (!f)
                {
                    err << "error: write to '" << out_path << "' failed\n";
                    return exit_runtime_error;
                }
            }
        }
        catch (const std::exception &e)
        {
            err << "error: " << e.what() << "\n";
            return exit_runtime_error;
        }
        return exit_ok;
    }

} // namespace cdu

#endif
