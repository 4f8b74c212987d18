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

// Acceptance run: prints one PASS/FAIL line per criterion, details indented below it.
#include "rasim/cli.hpp"
#include "rasim/scenario.hpp"
#include "rasim/serialization.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <functional>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

using namespace rasim;

namespace
{
    struct Outcome
    {
        bool pass = true;
        std::vector<std::string> details;

        void require(bool ok, const std::string &what)
        {
            pass = pass && ok;
            details.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
        }
        void note(const std::string &what) { details.push_back("info " + what); }
    };

    std::string fmt(double v, int prec = 4)
    {
        std::ostringstream os;
        os << std::setprecision(prec) << v;
        return os.str();
    }

    double db(double x) { return 10.0 * std::log10(x); }

    double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

    std::size_t workers()
    {
        return std::max(1u, std::thread::hardware_concurrency());
    }

    // value[(sweep, seed)][arch]
    using Table = std::map<std::pair<double, std::size_t>, std::map<std::string, double>>;

    Table tabulate(const SweepResult &r)
    {
        Table t;
        for (const auto &row : r.rows)
            t[{row.sweep, row.seed}][row.arch] = row.value;
        return t;
    }

    std::map<double, double> medians_by_sweep(const SweepResult &r, const std::string &arch)
    {
        std::map<double, double> out;
        for (const auto &a : r.aggregates)
            if (a.arch == arch)
                out[a.sweep] = a.median;
        return out;
    }

    // Pattern-RA angle robustness
    Outcome criterion1(const ScenarioConfig &cfg, const ModeCodebook &cb)
    {
        Outcome o;
        SweepSpec spec;
        spec.kind = SweepKind::angle;
        spec.family = ModeFamily::pattern;
        spec.grid = default_angle_grid(cfg, 25);
        spec.seeds_per_point = 50;
        spec.parallelism = workers();
        const SweepResult res = sweep_angle(cfg, cb, spec);
        o.note(std::to_string(res.rows.size()) + " rows over " + std::to_string(spec.grid.size()) + " angles x " +
               std::to_string(spec.seeds_per_point) + " seeds");

        const double tol = 1e-6;
        std::size_t ra_below_oa = 0, da_above_ra = 0;
        for (const auto &[key, v] : tabulate(res))
        {
            ra_below_oa += v.at("pattern_ra") < v.at("oa");
            da_above_ra += v.at("da") > v.at("pattern_ra") * (1.0 + tol);
        }
        o.require(ra_below_oa == 0, "(a) pattern-RA < OA in " + std::to_string(ra_below_oa) + " rows");
        o.require(da_above_ra == 0, "(b) DA > pattern-RA beyond relative tolerance " + fmt(tol) + " in " +
                                        std::to_string(da_above_ra) + " rows");

        const auto ra = medians_by_sweep(res, "pattern_ra");
        const auto da = medians_by_sweep(res, "da");
        const auto oa = medians_by_sweep(res, "oa");
        std::vector<double> outer = spec.grid;
        std::stable_sort(outer.begin(), outer.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
        outer.resize(4);
        bool outer_ok = true;
        for (double g : outer)
        {
            const bool below = da.at(g) < oa.at(g);
            outer_ok = outer_ok && below;
            o.note("angle " + fmt(g) + ": median DA " + fmt(db(da.at(g))) + " dB, OA " + fmt(db(oa.at(g))) + " dB");
        }
        o.require(outer_ok, "(b) DA median below OA median at the 4 outermost angles");

        auto spread_db = [](const std::map<double, double> &m) {
            double lo = 1e300, hi = -1e300;
            for (const auto &[g, v] : m)
            {
                lo = std::min(lo, db(v));
                hi = std::max(hi, db(v));
            }
            return hi - lo;
        };
        const double sra = spread_db(ra), sda = spread_db(da), soa = spread_db(oa);
        o.require(sra < 0.5 * sda, "(c) median spread pattern-RA " + fmt(sra) + " dB < 0.5 x DA " + fmt(sda) + " dB");
        o.note("median spread OA " + fmt(soa) + " dB");

        // Shape checks from the sweep description, informational
        double best_g = 0.0, best_v = -1.0;
        for (const auto &[g, v] : da)
            if (v > best_v)
            {
                best_v = v;
                best_g = g;
            }
        o.note("DA median peaks at " + fmt(best_g) + " deg (boresight " + fmt(cb.patterns[cb.da_index()].boresight()) +
               " rad)");
        return o;
    }

    // Polarization-RA aligned-target resilience
    Outcome criterion2(const ScenarioConfig &cfg, const ModeCodebook &cb)
    {
        Outcome o;
        SweepSpec spec;
        spec.kind = SweepKind::angle;
        spec.family = ModeFamily::polarization;
        spec.grid = default_angle_grid(cfg, 25);
        spec.seeds_per_point = 50;
        spec.parallelism = workers();
        const SweepResult res = sweep_angle(cfg, cb, spec);
        if (!res.aligned_angle || !res.separated_angle)
        {
            o.require(false, "sweep reported no aligned or separated angle");
            return o;
        }
        const double aligned = *res.aligned_angle, separated = *res.separated_angle;
        o.note("aligned angle " + fmt(aligned, 8) + " deg, most separated " + fmt(separated) + " deg, " +
               std::to_string(res.rows.size()) + " rows");

        std::size_t wins = 0, seeds = 0;
        std::vector<double> gap_aligned, gap_separated;
        for (const auto &[key, v] : tabulate(res))
        {
            const double gap = db(v.at("polarization_ra")) - db(v.at("fixed_polarization"));
            if (key.first == aligned)
            {
                ++seeds;
                wins += v.at("polarization_ra") > v.at("fixed_polarization");
                gap_aligned.push_back(gap);
            }
            if (key.first == separated)
                gap_separated.push_back(gap);
        }
        const double frac = seeds == 0 ? 0.0 : double(wins) / double(seeds);
        o.require(seeds == 50 && frac >= 0.9, "polarization-RA wins at the aligned angle in " + std::to_string(wins) +
                                                  " of " + std::to_string(seeds) + " seeds");
        const double ga = median(gap_aligned), gs = median(gap_separated);
        o.require(ga > gs, "median gap aligned " + fmt(ga) + " dB > separated " + fmt(gs) + " dB");
        return o;
    }

    // Antenna-count reduction
    Outcome criterion3(const ScenarioConfig &cfg, const ModeCodebook &cb)
    {
        Outcome o;
        SweepSpec spec;
        spec.kind = SweepKind::antennas;
        spec.grid = {2.0, 4.0, 8.0, 16.0, 32.0};
        spec.seeds_per_point = 50;
        spec.parallelism = workers();
        const SweepResult res = sweep_antennas(cfg, cb, spec);
        for (const auto &a : res.aggregates)
            o.note("N " + fmt(a.sweep) + " " + a.arch + ": median " + fmt(db(a.median)) + " dB");
        std::optional<std::size_t> smallest4, best_ratio_ra, best_ratio_conv;
        double best_ratio = 1.0;
        for (const auto &e : res.reduction)
        {
            o.note("N_RA " + std::to_string(e.ra_elements) + " vs conventional " +
                   std::to_string(e.conventional_elements) + ": " + (e.matches ? "matches" : "does not match"));
            if (e.factor == 4 && e.matches && (!smallest4 || e.ra_elements < *smallest4))
                smallest4 = e.ra_elements;
            const double ratio = double(e.ra_elements) / double(e.conventional_elements);
            if (e.matches && ratio < best_ratio)
            {
                best_ratio = ratio;
                best_ratio_ra = e.ra_elements;
                best_ratio_conv = e.conventional_elements;
            }
        }
        if (smallest4)
            o.note("smallest N_RA matching the conventional array at 4 N_RA: " + std::to_string(*smallest4));
        else
            o.note("no N_RA matches the conventional array at 4 N_RA");
        o.require(best_ratio <= 0.5, "ratio <= 1/2 on the grid (best " +
                                         (best_ratio_ra ? std::to_string(*best_ratio_ra) + "/" +
                                                              std::to_string(*best_ratio_conv)
                                                        : std::string("none")) +
                                         ")");
        o.note(std::string("soft target ratio <= 1/4: ") + (best_ratio <= 0.25 ? "met" : "not met"));
        return o;
    }

    // Coordinate ascent versus exhaustive search on small instances
    Outcome criterion4()
    {
        Outcome o;
        CodebookOptions opt;
        opt.boresights_deg = {-30.0, 30.0};
        const ModeCodebook cb = ModeCodebook::make_default(opt);
        const auto cands = candidate_modes(cb, ModeFamily::pattern, cb.omni_index(), 0);
        o.require(cands.size() == 3, "codebook offers " + std::to_string(cands.size()) + " patterns");

        double worst = 1e300;
        std::size_t instances = 0, below = 0, argmax_mismatch = 0;
        for (std::size_t i = 0; i < 100; ++i)
        {
            ScenarioConfig cfg;
            cfg.num_elements = 2 + i % 2;
            const std::size_t N = cfg.num_elements;
            const Scenario sc = build_scenario(cfg, derive_seed(4, i));
            for (auto kind : {ObjectiveKind::comm_sum_rate, ObjectiveKind::radar_scnr})
            {
                const Objective obj = make_objective(kind, sc);
                const SolveReport ex = exhaustive_mode_search(obj, sc, cb, cands, ModeScope::per_element);
                ModeAssignment init = ModeAssignment::uniform(N, cb.omni_index(), 0);
                init.scope = ModeScope::per_element;
                const SolveReport ca = coordinate_ascent_modes(obj, sc, cb, cands, init, 50);
                const double ratio = ca.best_value / ex.best_value;
                worst = std::min(worst, ratio);
                below += ratio < 0.95;
                ++instances;

                // Second enumeration: last element fastest, candidates in reverse order
                double best = -1.0;
                std::vector<std::size_t> arg;
                std::vector<std::size_t> digit(N, 0);
                const std::size_t M = cands.size();
                std::size_t total = 1;
                for (std::size_t n = 0; n < N; ++n)
                    total *= M;
                for (std::size_t c = 0; c < total; ++c)
                {
                    ModeAssignment a = init;
                    for (std::size_t n = 0; n < N; ++n)
                        a.pattern_idx[n] = cands[M - 1 - digit[n]].pattern;
                    const double v = evaluate(obj, sc, cb, a);
                    if (v > best)
                    {
                        best = v;
                        arg = a.pattern_idx;
                    }
                    for (std::size_t n = N; n-- > 0;)
                    {
                        if (++digit[n] < M)
                            break;
                        digit[n] = 0;
                    }
                }
                argmax_mismatch += arg != ex.best_modes.pattern_idx;
            }
        }
        o.require(below == 0, "coordinate ascent >= 95% of exhaustive on " + std::to_string(instances - below) + " of " +
                                  std::to_string(instances) + " instances (worst ratio " + fmt(worst, 6) + ")");
        o.require(argmax_mismatch == 0,
                  "second enumeration order gives a different argmax on " + std::to_string(argmax_mismatch) + " instances");
        return o;
    }

    arma::cx_mat randn_c(Rng &rng, arma::uword r, arma::uword c)
    {
        arma::cx_mat M(r, c);
        for (auto &z : M)
            z = complex_gaussian(rng, 1.0);
        return M;
    }

    // Solver correctness suite
    Outcome criterion5()
    {
        Outcome o;
        Rng rng(5);

        double worst_rate = 0.0;
        for (int t = 0; t < 100; ++t)
        {
            const arma::cx_mat h = randn_c(rng, 1, 8);
            const double P = 1.0, noise = 0.01 + 0.05 * double(t % 10);
            const auto r = wmmse_precoder(h, P, noise, 300, 1e-12);
            const double cap = std::log2(1.0 + P * std::pow(arma::norm(h), 2) / noise);
            worst_rate = std::max(worst_rate, std::abs(r.trace.back() - cap) / cap);
        }
        o.require(worst_rate <= 1e-6, "WMMSE single-user worst relative gap to capacity " + fmt(worst_rate) +
                                          " over 100 channels");

        std::size_t mvdr_losses = 0;
        for (int t = 0; t < 100; ++t)
        {
            const arma::uword N = 4 + t % 5;
            const arma::cx_mat Ht = randn_c(rng, N, N);
            const std::vector<arma::cx_mat> Hc{randn_c(rng, N, N), randn_c(rng, N, N)};
            const std::vector<double> sc{2.0, 0.5};
            const arma::cx_vec f = arma::normalise(arma::cx_vec(randn_c(rng, N, 1)));
            const arma::cx_vec w = mvdr_receive_filter(Ht, Hc, sc, f, 0.1);
            const double best = scnr(Ht, Hc, 1.0, sc, f, w, 0.1);
            for (int k = 0; k < 1000; ++k)
                mvdr_losses += scnr(Ht, Hc, 1.0, sc, f, arma::cx_vec(randn_c(rng, N, 1)), 0.1) > best;
        }
        o.require(mvdr_losses == 0, "MVDR beaten by a random filter in " + std::to_string(mvdr_losses) +
                                        " of 100000 trials");

        // Traces on random matrices and on synthesized channels at the physical scale
        std::size_t bad_traces = 0, traces = 0;
        const ModeCodebook cb = ModeCodebook::make_default();
        for (int t = 0; t < 100; ++t)
        {
            ChannelSet ch;
            if (t < 50)
            {
                const arma::uword N = 4 + t % 5;
                ch.target = randn_c(rng, N, 2) * randn_c(rng, 2, N);
                ch.clutter = {randn_c(rng, N, 2) * randn_c(rng, 2, N), randn_c(rng, N, 2) * randn_c(rng, 2, N)};
                ch.clutter_reflectivity = {10.0, 10.0};
                ch.noise = 1e-3;
            }
            else
            {
                const Scenario s = build_scenario(ScenarioConfig{}, derive_seed(5, std::uint64_t(t)));
                ch = synthesize_channels(s, cb, ModeAssignment::uniform(8, std::size_t(t % 8), std::size_t(t % 4)),
                                         s.noise_radar, ChannelParts::sensing_only);
            }
            const auto r = scnr_transmit_beamformer(ch.target, ch.clutter, ch.target_reflectivity,
                                                    ch.clutter_reflectivity, ch.noise, 1.0, 300, 1e-12);
            ++traces;
            for (std::size_t i = 1; i < r.trace.size(); ++i)
                if (r.trace[i] < r.trace[i - 1] - 1e-9 * std::abs(r.trace[i - 1]))
                {
                    ++bad_traces;
                    break;
                }
        }
        o.require(bad_traces == 0, "SCNR traces non-monotone beyond 1e-9 relative: " + std::to_string(bad_traces) +
                                       " of " + std::to_string(traces));

        double worst_res = 0.0;
        for (int t = 0; t < 100; ++t)
        {
            const arma::uword N = 2 + t % 7;
            const arma::cx_mat F = randn_c(rng, N, 1 + t % 2);
            const auto h = hybrid_factorize(F, connectivity_mask(ConnectivityKind::fully, N, N), 1.0);
            worst_res = std::max(worst_res, h.residual / arma::norm(F, "fro"));
        }
        o.require(worst_res < 1e-9, "hybrid factorization with N_RF = N: worst relative residual " + fmt(worst_res));
        return o;
    }

    std::string slurp(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    // Conservation and determinism
    Outcome criterion6(const std::string &cli, const ModeCodebook &cb)
    {
        Outcome o;
        const auto checks = check_codebook(cb, 1e-6);
        std::size_t ok = 0;
        double worst = 0.0;
        for (const auto &c : checks)
        {
            ok += c.ok;
            worst = std::max(worst, std::abs(c.power - 1.0));
        }
        o.require(checks.size() == 9 && ok == checks.size(),
                  std::to_string(ok) + " of " + std::to_string(checks.size()) +
                      " patterns normalized within 1e-6 (worst " + fmt(worst) + ")");

        if (cli.empty())
        {
            o.require(false, "no --cli path given, determinism not checked");
        }
        else
        {
            const std::string dir = "acceptance_runs";
            std::filesystem::create_directories(dir);
            const std::vector<std::string> runs = {
                "run --sweep single --seed 3",
                "run --sweep angle --grid -40,0,25 --seeds 4 --parallel 0 --seed 11",
                "run --sweep antennas --grid 2,4 --seeds 3 --parallel 0 --arch tri_hybrid --seed 29",
            };
            for (std::size_t i = 0; i < runs.size(); ++i)
            {
                std::string csv[2];
                bool ran = true;
                for (int k = 0; k < 2; ++k)
                {
                    csv[k] = dir + "/run" + std::to_string(i) + "_" + std::to_string(k) + ".csv";
                    const std::string cmd = cli + " " + runs[i] + " -o " + csv[k] + " > /dev/null";
                    ran = ran && std::system(cmd.c_str()) == 0;
                }
                const std::string a = slurp(csv[0]), b = slurp(csv[1]);
                o.require(ran && !a.empty() && a == b, "byte-identical CSV from two executions of '" + runs[i] + "'");
            }
        }

        const PowerModel pm;
        const double fd = power_consumption(pm, Architecture::fully_digital, 8, 8);
        const auto mask = connectivity_mask(ConnectivityKind::fully, 8, 2);
        const double th = power_consumption(pm, Architecture::tri_hybrid, 8, 2, &mask);
        o.require(std::abs(fd - 2.54) < 1e-12, "fully-digital power " + fmt(fd, 10) + " W");
        o.require(std::abs(th - 1.52) < 1e-12, "tri-hybrid power " + fmt(th, 10) + " W");
        return o;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"rasim acceptance run"};
    std::string cli;
    std::vector<int> only;
    app.add_option("--cli", cli, "Path of the rasim executable");
    app.add_option("--only", only, "Run only these criteria");
    CLI11_PARSE(app, argc, argv);

    const ScenarioConfig cfg;
    const ModeCodebook cb = ModeCodebook::make_default();
    std::cout << "acceptance: " << workers() << " worker thread(s)\n" << std::flush;

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"pattern-RA angle robustness", [&] { return criterion1(cfg, cb); }},
        {"polarization-RA aligned-target resilience", [&] { return criterion2(cfg, cb); }},
        {"antenna-count reduction", [&] { return criterion3(cfg, cb); }},
        {"coordinate ascent versus exhaustive search", [] { return criterion4(); }},
        {"solver correctness", [] { return criterion5(); }},
        {"conservation and determinism", [&] { return criterion6(cli, cb); }},
    };

    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i)
    {
        const int id = int(i + 1);
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end())
            continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try
        {
            o = criteria[i].second();
        }
        catch (const std::exception &e)
        {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        all = all && o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << criteria[i].first << " ("
                  << fmt(secs, 3) << " s)\n";
        for (const auto &d : o.details)
            std::cout << "    " << d << '\n';
        std::cout << std::flush;
    }
    return all ? EXIT_SUCCESS : EXIT_FAILURE;
}
