// SPDX-License-Identifier: Apache-2.0
//
// rasim: link-level simulator for reconfigurable-antenna arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "rasim/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace rasim
{
    namespace fs = std::filesystem;

    namespace
    {
        void print_errors(std::ostream &err, const std::vector<ConfigError> &errors)
        {
            for (const auto &e : errors)
                err << "error: " << e.field << ": " << e.message << '\n';
        }

        std::string fmt(double v)
        {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.6g", v);
            return buf;
        }

        std::string sibling(const std::string &csv_path, const std::string &suffix)
        {
            fs::path p(csv_path);
            fs::path stem = p.parent_path() / p.stem();
            return stem.string() + suffix;
        }

        // Writes text to path atomically enough for our purposes; false on failure
        bool write_text(const std::string &path, const std::string &text)
        {
            std::ofstream os(path, std::ios::binary);
            if (!os)
                return false;
            os << text;
            os.flush();
            return bool(os);
        }

        bool load_codebook(const RunConfig &cfg, ModeCodebook &cb, std::ostream &err, int &code)
        {
            if (cfg.codebook_file.empty())
            {
                cb = ModeCodebook::make_default(cfg.codebook);
                return true;
            }
            std::ifstream is(cfg.codebook_file);
            if (!is)
            {
                err << "error: cannot read codebook file " << cfg.codebook_file << '\n';
                code = exit_io;
                return false;
            }
            try
            {
                cb = codebook_from_json(json::parse(is));
                cb.validate();
            }
            catch (const std::exception &e)
            {
                err << "error: codebook.file: " << e.what() << '\n';
                code = exit_config;
                return false;
            }
            return true;
        }
    }

    std::string metadata_path(const std::string &csv_path) { return sibling(csv_path, ".meta.json"); }
    std::string aggregate_path(const std::string &csv_path) { return sibling(csv_path, ".agg.csv"); }

    bool load_run_config(const std::string &path, RunConfig &cfg, std::vector<ConfigError> &errors, bool &io_error)
    {
        io_error = false;
        std::ifstream is(path);
        if (!is)
        {
            io_error = true;
            errors.push_back({"<file>", "cannot open " + path});
            return false;
        }
        json j;
        try
        {
            j = json::parse(is);
        }
        catch (const json::parse_error &e)
        {
            // nlohmann reports "at line L, column C" in the message
            errors.push_back({"<parse>", e.what()});
            return false;
        }
        const std::size_t before = errors.size();
        config_from_json(j, cfg, errors);
        return errors.size() == before;
    }

    int cmd_validate(const std::string &config_path, std::ostream &out, std::ostream &err)
    {
        RunConfig cfg;
        std::vector<ConfigError> errors;
        bool io_error = false;
        if (!load_run_config(config_path, cfg, errors, io_error))
        {
            print_errors(err, errors);
            return io_error ? exit_io : exit_config;
        }
        errors = validate_run_config(cfg);
        if (!cfg.codebook_file.empty())
        {
            ModeCodebook cb;
            int code = exit_ok;
            if (!load_codebook(cfg, cb, err, code))
                return code;
        }
        if (!errors.empty())
        {
            print_errors(err, errors);
            out << config_path << ": " << errors.size() << " diagnostic(s)\n";
            return exit_config;
        }
        out << config_path << ": valid, 0 diagnostics\n";
        return exit_ok;
    }

    int cmd_run(RunConfig cfg, const std::vector<std::string> &argv, const std::optional<std::string> &dump_path,
                std::ostream &out, std::ostream &err)
    {
        auto errors = validate_run_config(cfg);
        if (!errors.empty())
        {
            print_errors(err, errors);
            return exit_config;
        }
        finalize_run_config(cfg);
        try
        {
            cfg.sweep.validate();
        }
        catch (const std::exception &e)
        {
            err << "error: run: " << e.what() << '\n';
            return exit_config;
        }

        ModeCodebook cb;
        int code = exit_ok;
        if (!load_codebook(cfg, cb, err, code))
            return code;

        // Fail on unwritable output before spending time on the solve
        const fs::path out_path(cfg.output);
        std::error_code ec;
        if (out_path.has_parent_path())
            fs::create_directories(out_path.parent_path(), ec);
        {
            std::ofstream probe(cfg.output, std::ios::app);
            if (!probe)
            {
                err << "error: run.output: cannot write " << cfg.output << '\n';
                return exit_io;
            }
        }

        const auto t0 = std::chrono::steady_clock::now();
        SweepResult result;
        std::vector<JointResult> details;
        try
        {
            switch (cfg.sweep.kind)
            {
            case SweepKind::single:
                result = run_single(cfg.scenario, cb, cfg.sweep, &details);
                break;
            case SweepKind::angle:
                result = sweep_angle(cfg.scenario, cb, cfg.sweep);
                break;
            case SweepKind::antennas:
                result = sweep_antennas(cfg.scenario, cb, cfg.sweep);
                break;
            }
        }
        catch (const SearchSpaceTooLarge &e)
        {
            err << "error: solver: " << e.what() << '\n';
            return exit_solver;
        }
        catch (const std::invalid_argument &e)
        {
            err << "error: config: " << e.what() << '\n';
            return exit_config;
        }
        catch (const std::exception &e)
        {
            err << "error: solver failure: " << e.what() << '\n';
            return exit_solver;
        }
        const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        std::ostringstream csv, agg;
        write_sweep_csv(csv, result);
        write_aggregate_csv(agg, result);
        json meta = {{"version", RASIM_VERSION},
                     {"command", argv},
                     {"config", config_to_json(cfg)},
                     {"rows", result.rows.size()},
                     {"csv", cfg.output},
                     {"aggregates", aggregate_path(cfg.output)}};
        if (result.aligned_angle)
            meta["aligned_angle_deg"] = *result.aligned_angle;
        if (result.separated_angle)
            meta["separated_angle_deg"] = *result.separated_angle;
        if (!result.reduction.empty())
        {
            json red = json::array();
            for (const auto &r : result.reduction)
                red.push_back({{"factor", r.factor},
                               {"ra_elements", r.ra_elements},
                               {"conventional_elements", r.conventional_elements},
                               {"ra_median", r.ra_median},
                               {"conventional_median", r.conventional_median},
                               {"matches", r.matches}});
            meta["reduction"] = red;
        }
        if (!details.empty())
        {
            json d = json::array();
            for (const auto &jr : details)
                d.push_back(joint_result_to_json(jr));
            meta["solves"] = d;
        }

        if (!write_text(cfg.output, csv.str()) || !write_text(aggregate_path(cfg.output), agg.str()) ||
            !write_text(metadata_path(cfg.output), meta.dump(2) + "\n"))
        {
            err << "error: cannot write results next to " << cfg.output << '\n';
            return exit_io;
        }

        if (dump_path)
        {
            const Scenario sc = build_scenario(cfg.scenario, cfg.scenario.seed);
            const ModeAssignment modes = details.empty()
                                             ? ModeAssignment::uniform(sc.geometry.num_elements, cb.omni_index(), 0)
                                             : details.front().report.best_modes;
            const Objective obj = make_objective(cfg.sweep.objective, sc, cfg.sweep.solver);
            std::ostringstream os;
            write_channel_dump(os, synthesize_channels(sc, cb, modes, obj.noise));
            if (!write_text(*dump_path, os.str()))
            {
                err << "error: cannot write channel dump " << *dump_path << '\n';
                return exit_io;
            }
        }

        std::size_t evals = 0;
        for (const auto &r : result.rows)
            evals += r.evals;
        out << "sweep: " << to_string(result.kind) << ", objective: " << to_string(cfg.sweep.objective)
            << ", rows: " << result.rows.size() << ", evaluations: " << evals << ", runtime: " << fmt(runtime)
            << " s\n";
        if (result.kind == SweepKind::single)
        {
            const auto archs = sweep_architectures(cfg.sweep);
            for (std::size_t i = 0; i < details.size(); ++i)
            {
                const JointResult &jr = details[i];
                out << (i < archs.size() ? archs[i] : "arch") << ": best value " << fmt(jr.report.best_value)
                    << ", evaluations " << jr.report.evaluations << ", runtime " << fmt(jr.report.wall_time)
                    << " s, pre-factorization " << fmt(jr.pre_factor_value) << ", post-factorization "
                    << fmt(jr.post_factor_value) << ", power " << fmt(jr.power_w) << " W\n";
            }
        }
        else
        {
            for (const auto &a : result.aggregates)
                out << "  " << fmt(a.sweep) << ' ' << a.arch << ": median " << fmt(a.median) << " [" << fmt(a.q1)
                    << ", " << fmt(a.q3) << "] over " << a.count << '\n';
            for (const auto &r : result.reduction)
                out << "reduction x" << r.factor << ": N_RA=" << r.ra_elements << " vs conventional N="
                    << r.conventional_elements << (r.matches ? " matches" : " does not match") << '\n';
        }
        out << "wrote " << cfg.output << ", " << aggregate_path(cfg.output) << ", " << metadata_path(cfg.output)
            << '\n';
        return exit_ok;
    }

    int cmd_codebook_dump(const CodebookOptions &options, const std::string &path, std::ostream &out,
                          std::ostream &err)
    {
        ModeCodebook cb;
        try
        {
            cb = ModeCodebook::make_default(options);
            cb.validate();
        }
        catch (const std::exception &e)
        {
            err << "error: codebook: " << e.what() << '\n';
            return exit_config;
        }
        const std::string text = codebook_to_json(cb).dump(2) + "\n";
        if (path.empty() || path == "-")
        {
            out << text;
            return exit_ok;
        }
        if (!write_text(path, text))
        {
            err << "error: cannot write " << path << '\n';
            return exit_io;
        }
        std::size_t internal = 0;
        for (const auto &p : cb.patterns)
            internal += p.internal() ? 1 : 0;
        out << "wrote " << path << ": " << cb.patterns.size() - internal << " patterns + " << internal
            << " internal, " << cb.polarizations.size() << " polarization states\n";
        return exit_ok;
    }

    int cmd_codebook_check(const std::string &path, double tol, std::ostream &out, std::ostream &err)
    {
        std::ifstream is(path);
        if (!is)
        {
            err << "error: cannot open " << path << '\n';
            return exit_io;
        }
        ModeCodebook cb;
        try
        {
            cb = codebook_from_json(json::parse(is));
        }
        catch (const std::exception &e)
        {
            err << "error: " << path << ": " << e.what() << '\n';
            return exit_config;
        }
        std::size_t failures = 0;
        for (const auto &c : check_codebook(cb, tol))
        {
            if (c.ok)
                continue;
            ++failures;
            char buf[120];
            std::snprintf(buf, sizeof(buf), "pattern %zu: radiated power %.17g, off by %.3g", c.index, c.power,
                          c.power - 1.0);
            err << "fail: " << buf << '\n';
        }
        for (std::size_t i = 0; i < cb.polarizations.size(); ++i)
        {
            try
            {
                cb.polarizations[i].validate();
            }
            catch (const std::exception &e)
            {
                ++failures;
                err << "fail: polarization " << i << ": " << e.what() << '\n';
            }
        }
        out << path << ": " << cb.patterns.size() << " patterns, " << cb.polarizations.size()
            << " polarization states, " << failures << " failure(s)\n";
        return failures == 0 ? exit_ok : exit_config;
    }

    namespace
    {
        // Parser definition shared by run_cli and the help/flag introspection helpers
        struct CliSpec
        {
            CLI::App app{"rasim: link-level simulator for reconfigurable-antenna arrays", "rasim"};
            CLI::App *validate = nullptr;
            CLI::App *run = nullptr;
            CLI::App *cb_dump = nullptr;
            CLI::App *cb_check = nullptr;

            std::string validate_path;
            std::string config_path;
            std::optional<std::string> sweep, objective, family, arch, connectivity, scope, output, codebook_file,
                dump;
            std::optional<std::uint64_t> seed;
            std::optional<std::size_t> nrf, seeds, parallel, grid_points, elements, max_cycles;
            std::optional<std::vector<double>> grid;
            std::string dump_out = "-";
            std::string check_path;
            double tol = 1e-6;

            CliSpec()
            {
                app.set_version_flag("--version", std::string(RASIM_VERSION));
                app.require_subcommand(1);

                validate = app.add_subcommand("validate", "Check a config file and list diagnostics");
                validate->add_option("config", validate_path, "Config file (JSON)")->required();

                run = app.add_subcommand("run", "Run a single solve or a sweep and write CSV plus metadata");
                run->add_option("-c,--config", config_path, "Config file (JSON); flags override its fields");
                run->add_option("--sweep", sweep, "single | angle | antennas");
                run->add_option("--objective", objective, "comm_sum_rate | radar_scnr");
                run->add_option("--family", family, "Searched mode family: pattern | polarization | both");
                run->add_option("--arch", arch, "fully_digital | tri_hybrid");
                run->add_option("--nrf", nrf, "RF chains of the tri-hybrid array");
                run->add_option("--connectivity", connectivity, "fully | sub | dynamic");
                run->add_option("--scope", scope, "per_element | array_uniform");
                run->add_option("--max-cycles", max_cycles, "Coordinate ascent cycle limit");
                run->add_option("--elements", elements, "Number of array elements N");
                run->add_option("--seed", seed, "Master seed");
                run->add_option("--seeds", seeds, "Seeds per grid point");
                run->add_option("--grid", grid, "Sweep grid (degrees or element counts)")->delimiter(',');
                run->add_option("--grid-points", grid_points, "Points of the default angle grid");
                run->add_option("--parallel", parallel, "Worker threads (0 = all cores, 1 = sequential)");
                run->add_option("-o,--output", output, "Result CSV path");
                run->add_option("--codebook", codebook_file, "Codebook file replacing the generated default");
                run->add_option("--dump", dump, "Write the channel matrices of the configured seed to this file");

                auto *codebook = app.add_subcommand("codebook", "Dump or check a mode codebook");
                codebook->require_subcommand(1);
                cb_dump = codebook->add_subcommand("dump", "Write the default codebook");
                cb_dump->add_option("-o,--output", dump_out, "Destination file, - for stdout");
                cb_check = codebook->add_subcommand("check", "Verify pattern normalization of a codebook file");
                cb_check->add_option("file", check_path, "Codebook file")->required();
                cb_check->add_option("--tol", tol, "Allowed deviation of the radiated power from 1");
            }
        };

        // All mode expands one level of subcommands; nested ones are appended in full
        std::string full_help(CliSpec &spec)
        {
            return spec.app.help("", CLI::AppFormatMode::All) + "\n" + spec.cb_dump->help() + "\n" +
                   spec.cb_check->help();
        }

        void collect_flags(const CLI::App &app, const std::string &prefix, std::vector<std::string> &out)
        {
            for (const CLI::Option *opt : app.get_options())
            {
                for (const auto &n : opt->get_lnames())
                    out.push_back(prefix + "--" + n);
                for (const auto &n : opt->get_snames())
                    out.push_back(prefix + "-" + n);
                if (opt->get_lnames().empty() && opt->get_snames().empty())
                    out.push_back(prefix + "<" + opt->get_name() + ">");
            }
            for (const CLI::App *sub : app.get_subcommands({}))
                collect_flags(*sub, prefix + sub->get_name() + " ", out);
        }
    }

    std::string cli_help_text()
    {
        CliSpec spec;
        return full_help(spec);
    }

    std::vector<std::string> cli_flag_names()
    {
        CliSpec spec;
        std::vector<std::string> out;
        collect_flags(spec.app, "", out);
        return out;
    }

    int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
    {
        CliSpec spec;
        CLI::App &app = spec.app;
        try
        {
            app.parse(argc, argv);
        }
        catch (const CLI::CallForHelp &e)
        {
            // Top-level help expands every subcommand so all flags are listed
            if (app.get_subcommands().empty())
                out << full_help(spec);
            else
                out << app.help();
            return exit_ok;
        }
        catch (const CLI::CallForAllHelp &e)
        {
            out << full_help(spec);
            return exit_ok;
        }
        catch (const CLI::CallForVersion &e)
        {
            out << RASIM_VERSION << '\n';
            return exit_ok;
        }
        catch (const CLI::ParseError &e)
        {
            err << "error: " << e.what() << '\n';
            return exit_config;
        }

        if (*spec.validate)
            return cmd_validate(spec.validate_path, out, err);
        if (*spec.cb_dump)
            return cmd_codebook_dump({}, spec.dump_out, out, err);
        if (*spec.cb_check)
            return cmd_codebook_check(spec.check_path, spec.tol, out, err);

        RunConfig cfg;
        std::vector<ConfigError> errors;
        if (!spec.config_path.empty())
        {
            bool io_error = false;
            if (!load_run_config(spec.config_path, cfg, errors, io_error))
            {
                print_errors(err, errors);
                return io_error ? exit_io : exit_config;
            }
        }
        auto apply = [&](const char *field, auto &&fn) {
            try
            {
                fn();
            }
            catch (const std::exception &e)
            {
                errors.push_back({field, e.what()});
            }
        };
        if (spec.sweep)
            apply("--sweep", [&] { cfg.sweep.kind = sweep_kind_from_string(*spec.sweep); });
        if (spec.objective)
            apply("--objective", [&] { cfg.sweep.objective = objective_kind_from_string(*spec.objective); });
        if (spec.family)
            apply("--family", [&] { cfg.sweep.family = mode_family_from_string(*spec.family); });
        if (spec.arch)
            apply("--arch", [&] { cfg.sweep.joint.arch = architecture_from_string(*spec.arch); });
        if (spec.connectivity)
            apply("--connectivity",
                  [&] { cfg.sweep.joint.connectivity = connectivity_kind_from_string(*spec.connectivity); });
        if (spec.scope)
            apply("--scope", [&] { cfg.sweep.joint.scope = mode_scope_from_string(*spec.scope); });
        if (spec.nrf)
            cfg.sweep.joint.num_rf = *spec.nrf;
        if (spec.max_cycles)
            cfg.sweep.joint.max_cycles = *spec.max_cycles;
        if (spec.elements)
            cfg.scenario.num_elements = *spec.elements;
        if (spec.seed)
            cfg.scenario.seed = *spec.seed;
        if (spec.seeds)
            cfg.sweep.seeds_per_point = *spec.seeds;
        if (spec.grid)
        {
            cfg.sweep.grid = *spec.grid;
            cfg.grid_given = true;
        }
        if (spec.grid_points)
            cfg.grid_points = *spec.grid_points;
        if (spec.parallel)
            cfg.parallelism = *spec.parallel;
        if (spec.output)
            cfg.output = *spec.output;
        if (spec.codebook_file)
            cfg.codebook_file = *spec.codebook_file;
        if (!errors.empty())
        {
            print_errors(err, errors);
            return exit_config;
        }
        return cmd_run(cfg, std::vector<std::string>(argv, argv + argc), spec.dump, out, err);
    }
}
