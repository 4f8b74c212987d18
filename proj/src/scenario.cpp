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

#include "rasim/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace rasim
{
    std::vector<Diagnostic> validate_config(const ScenarioConfig &c)
    {
        std::vector<Diagnostic> d;
        auto bad = [&](std::string field, std::string msg) { d.push_back({std::move(field), std::move(msg)}); };

        if (c.num_elements < 1)
            bad("scenario.num_elements", "must be >= 1");
        if (c.num_users > 0 && c.num_paths < 1)
            bad("scenario.num_paths", "must be >= 1 when users are present");
        if (!(c.spacing > 0.0))
            bad("scenario.spacing_wavelengths", "must be > 0");
        if (!(c.angle_min <= c.angle_max))
            bad("scenario.angle_range_deg", "range ordering violated: min must not exceed max");
        if (c.angle_min < -pi / 2.0 - 1e-12 || c.angle_max > pi / 2.0 + 1e-12)
            bad("scenario.angle_range_deg", "angles must lie within [-90, 90] degrees");
        if (!(c.radius_min > 0.0))
            bad("scenario.radius_range_m", "inner radius must be > 0");
        if (!(c.radius_min <= c.radius_max))
            bad("scenario.radius_range_m", "range ordering violated: inner radius must not exceed outer radius");
        if (!(c.path_loss.d0 > 0.0))
            bad("scenario.path_loss.d0_m", "must be > 0");
        if (!(c.path_loss.exponent > 0.0))
            bad("scenario.path_loss.exponent", "must be > 0");
        if (!std::isfinite(c.path_loss.c0_db))
            bad("scenario.path_loss.c0_db", "must be finite");
        if (!(c.power > 0.0))
            bad("scenario.power_w", "must be > 0");
        if (!(c.noise_comm > 0.0))
            bad("scenario.noise_comm_w", "must be > 0");
        if (!(c.noise_radar > 0.0))
            bad("scenario.noise_radar_w", "must be > 0");
        if (!std::isfinite(c.target_reflectivity_db))
            bad("scenario.target_reflectivity_db", "must be finite");
        if (!std::isfinite(c.clutter_reflectivity_db))
            bad("scenario.clutter_reflectivity_db", "must be finite");
        if (!(c.cross_polar_variance >= 0.0))
            bad("scenario.cross_polar_variance", "must be >= 0");
        if (!(c.angular_spread_deg > 0.0))
            bad("scenario.angular_spread_deg", "must be > 0");
        if (!(c.max_path_offset_deg >= 0.0))
            bad("scenario.max_path_offset_deg", "must be >= 0");
        if (!(c.path_decay_db >= 0.0))
            bad("scenario.path_decay_db", "must be >= 0");
        return d;
    }

    std::vector<Position> sample_positions(const ScenarioConfig &config, Rng &rng, std::size_t count)
    {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double r1 = config.radius_min * config.radius_min;
        const double r2 = config.radius_max * config.radius_max;
        std::vector<Position> out(count);
        for (auto &p : out)
        {
            const double u = unit(rng);
            const double v = unit(rng);
            p.angle = config.angle_min + u * (config.angle_max - config.angle_min);
            p.range = std::sqrt(r1 + v * (r2 - r1));
        }
        return out;
    }

    CommUser draw_comm_user(const ScenarioConfig &config, Rng &rng, const Position &pos)
    {
        CommUser u;
        u.range = pos.range;
        u.angle = pos.angle;
        u.rx_polar = PolarizationState::horizontal();

        const std::size_t L = config.num_paths;
        std::vector<double> powers(L);
        double total = 0.0;
        for (std::size_t l = 0; l < L; ++l)
        {
            powers[l] = std::pow(10.0, -config.path_decay_db * double(l) / 10.0);
            total += powers[l];
        }

        std::exponential_distribution<double> lap_mag(1.0 / deg2rad(config.angular_spread_deg));
        std::bernoulli_distribution lap_sign(0.5);
        const double max_off = deg2rad(config.max_path_offset_deg);
        const DepolarizationProfile profile{1.0, config.cross_polar_variance};

        for (std::size_t l = 0; l < L; ++l)
        {
            double offset = 0.0;
            if (l > 0)
            {
                // Truncated Laplacian by rejection
                do
                {
                    offset = lap_mag(rng) * (lap_sign(rng) ? 1.0 : -1.0);
                } while (std::abs(offset) > max_off);
            }
            MultipathComponent m;
            m.angle = std::clamp(pos.angle + offset, -pi / 2.0, pi / 2.0);
            m.gain = complex_gaussian(rng, powers[l] / total);
            m.depol = sample_depolarization(rng, profile);
            u.paths.push_back(m);
        }
        return u;
    }

    Scenario build_scenario(const ScenarioConfig &config)
    {
        return build_scenario(config, config.seed);
    }

    Scenario build_scenario(const ScenarioConfig &config, std::uint64_t seed)
    {
        const auto diags = validate_config(config);
        if (!diags.empty())
            throw std::invalid_argument("build_scenario: " + diags.front().field + ": " + diags.front().message);

        Scenario sc;
        sc.geometry = {config.num_elements, config.spacing};
        sc.path_loss = config.path_loss;
        sc.power = config.power;
        sc.noise_comm = config.noise_comm;
        sc.noise_radar = config.noise_radar;
        sc.seed = seed;

        Rng rng(seed);
        const auto pos = sample_positions(config, rng, config.num_users + 1 + config.num_clutter);
        for (std::size_t k = 0; k < config.num_users; ++k)
            sc.users.push_back(draw_comm_user(config, rng, pos[k]));

        const DepolarizationProfile profile{1.0, config.cross_polar_variance};
        sc.target.role = EntityRole::target;
        sc.target.range = pos[config.num_users].range;
        sc.target.angle = pos[config.num_users].angle;
        sc.target.reflectivity = std::pow(10.0, config.target_reflectivity_db / 10.0);
        sc.target.scattering = sample_depolarization(rng, profile);
        for (std::size_t c = 0; c < config.num_clutter; ++c)
        {
            SensingEntity e;
            e.role = EntityRole::clutter;
            e.range = pos[config.num_users + 1 + c].range;
            e.angle = pos[config.num_users + 1 + c].angle;
            e.reflectivity = std::pow(10.0, config.clutter_reflectivity_db / 10.0);
            e.scattering = sample_depolarization(rng, profile);
            sc.clutter.push_back(e);
        }
        return sc;
    }

    void place_user(CommUser &user, double range, double angle)
    {
        const double shift = angle - user.angle;
        for (auto &p : user.paths)
            p.angle = std::clamp(p.angle + shift, -pi / 2.0, pi / 2.0);
        user.range = range;
        user.angle = angle;
    }

    std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b)
    {
        // splitmix64 finalizer over the combined key
        auto mix = [](std::uint64_t z) {
            z += 0x9e3779b97f4a7c15ULL;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            return z ^ (z >> 31);
        };
        return mix(mix(mix(master) ^ a) ^ (b + 0x632be59bd9b4e019ULL));
    }

    std::string to_string(SweepKind kind)
    {
        switch (kind)
        {
        case SweepKind::single:
            return "single";
        case SweepKind::angle:
            return "angle";
        default:
            return "antennas";
        }
    }

    SweepKind sweep_kind_from_string(const std::string &s)
    {
        if (s == "single")
            return SweepKind::single;
        if (s == "angle")
            return SweepKind::angle;
        if (s == "antennas")
            return SweepKind::antennas;
        throw std::invalid_argument("unknown sweep kind '" + s + "'");
    }

    void SweepSpec::validate() const
    {
        if (seeds_per_point < 1)
            throw std::invalid_argument("SweepSpec: seeds_per_point must be >= 1");
        if (parallelism < 1)
            throw std::invalid_argument("SweepSpec: parallelism must be >= 1");
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (!(grid[i] > grid[i - 1]))
                throw std::invalid_argument("SweepSpec: grid must be strictly increasing");
        if (kind != SweepKind::single && grid.empty())
            throw std::invalid_argument("SweepSpec: grid is empty");
        if (kind == SweepKind::antennas)
            for (double g : grid)
                if (g < 1.0 || g != std::floor(g))
                    throw std::invalid_argument("SweepSpec: antenna grid entries must be positive integers");
        solver.validate();
    }

    std::vector<double> default_angle_grid(const ScenarioConfig &config, std::size_t points)
    {
        std::vector<double> g;
        const double lo = rad2deg(config.angle_min), hi = rad2deg(config.angle_max);
        if (points == 1)
            return {0.5 * (lo + hi)};
        for (std::size_t i = 0; i < points; ++i)
        {
            // Round to 1e-9 deg so that e.g. -60 + 24 * 5 prints as 60
            const double v = lo + (hi - lo) * double(i) / double(points - 1);
            g.push_back(std::round(v * 1e9) / 1e9);
        }
        return g;
    }

    std::vector<std::string> sweep_architectures(const SweepSpec &spec)
    {
        if (spec.kind == SweepKind::antennas)
            return {"ra", "conventional"};
        if (spec.family == ModeFamily::polarization)
            return {"polarization_ra", "fixed_polarization"};
        if (spec.family == ModeFamily::both)
            return {"ra", "conventional"};
        return {"pattern_ra", "da", "oa"};
    }

    double quantile(std::vector<double> v, double q)
    {
        if (v.empty())
            throw std::invalid_argument("quantile: no values");
        std::sort(v.begin(), v.end());
        const double pos = q * double(v.size() - 1);
        const std::size_t i = std::size_t(std::floor(pos));
        const std::size_t j = std::min(i + 1, v.size() - 1);
        const double t = pos - double(i);
        return v[i] + t * (v[j] - v[i]);
    }

    std::vector<Aggregate> aggregate_rows(const std::vector<SweepRow> &rows)
    {
        // Keep first-appearance order of (sweep, arch)
        std::vector<Aggregate> out;
        std::vector<std::vector<double>> values;
        for (const auto &r : rows)
        {
            std::size_t i = 0;
            for (; i < out.size(); ++i)
                if (out[i].sweep == r.sweep && out[i].arch == r.arch)
                    break;
            if (i == out.size())
            {
                out.push_back({r.sweep, r.arch, 0.0, 0.0, 0.0, 0});
                values.emplace_back();
            }
            values[i].push_back(r.value);
        }
        for (std::size_t i = 0; i < out.size(); ++i)
        {
            out[i].count = values[i].size();
            out[i].median = quantile(values[i], 0.5);
            out[i].q1 = quantile(values[i], 0.25);
            out[i].q3 = quantile(values[i], 0.75);
        }
        return out;
    }

    std::vector<ReductionEntry> antenna_reduction(const std::vector<Aggregate> &aggregates, double tolerance)
    {
        auto find = [&](double n, const std::string &arch) -> const Aggregate * {
            for (const auto &a : aggregates)
                if (a.sweep == n && a.arch == arch)
                    return &a;
            return nullptr;
        };
        std::vector<ReductionEntry> out;
        for (std::size_t factor : {2u, 4u, 8u, 16u})
        {
            for (const auto &a : aggregates)
            {
                if (a.arch != "ra")
                    continue;
                const Aggregate *conv = find(a.sweep * double(factor), "conventional");
                if (conv == nullptr)
                    continue;
                ReductionEntry e;
                e.factor = factor;
                e.ra_elements = std::size_t(a.sweep);
                e.conventional_elements = std::size_t(conv->sweep);
                e.ra_median = a.median;
                e.conventional_median = conv->median;
                e.matches = a.median >= (1.0 - tolerance) * conv->median;
                out.push_back(e);
            }
        }
        return out;
    }

    namespace
    {
        SweepRow make_row(double sweep, std::size_t seed, const std::string &arch, ObjectiveKind obj,
                          const JointResult &r)
        {
            return {sweep,
                    seed,
                    arch,
                    to_string(obj),
                    r.post_factor_value,
                    r.report.evaluations,
                    r.pre_factor_value,
                    r.power_w};
        }

        // Runs task(i) for i in [0, count) on `workers` threads; the first failure is rethrown
        template <typename Task> void run_tasks(std::size_t count, std::size_t workers, Task task)
        {
            workers = std::max<std::size_t>(1, std::min(workers, count));
            std::atomic<std::size_t> next{0};
            std::exception_ptr failure;
            std::size_t failed_at = count;
            std::mutex mu;
            auto body = [&]() {
                for (;;)
                {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= count)
                        return;
                    {
                        std::lock_guard<std::mutex> lock(mu);
                        if (failure)
                            return;
                    }
                    try
                    {
                        task(i);
                    }
                    catch (...)
                    {
                        std::lock_guard<std::mutex> lock(mu);
                        if (!failure || i < failed_at)
                        {
                            failure = std::current_exception();
                            failed_at = i;
                        }
                    }
                }
            };
            if (workers == 1)
            {
                body();
            }
            else
            {
                std::vector<std::jthread> pool;
                for (std::size_t w = 0; w < workers; ++w)
                    pool.emplace_back(body);
            }
            if (failure)
                std::rethrow_exception(failure);
        }

        std::string describe_point(const SweepSpec &spec, double sweep, std::size_t seed)
        {
            std::ostringstream os;
            os << to_string(spec.kind) << " sweep point " << sweep << ", seed " << seed;
            return os.str();
        }

        // Runs every architecture of the spec on one scenario
        std::vector<SweepRow> solve_architectures(const Scenario &sc, const ModeCodebook &codebook,
                                                  const SweepSpec &spec, double sweep, std::size_t seed,
                                                  std::vector<JointResult> *details)
        {
            const Objective obj = make_objective(spec.objective, sc, spec.solver);
            const std::size_t N = sc.geometry.num_elements;
            const std::size_t omni = codebook.omni_index();
            const std::size_t h_pol = 0;
            std::vector<SweepRow> rows;
            auto emit = [&](const std::string &arch, const JointResult &r) {
                rows.push_back(make_row(sweep, seed, arch, spec.objective, r));
                if (details != nullptr)
                    details->push_back(r);
            };

            const ModeFamily family = spec.kind == SweepKind::antennas ? ModeFamily::both : spec.family;
            if (spec.kind == SweepKind::antennas || family == ModeFamily::both)
            {
                emit("ra", joint_optimize(obj, sc, codebook, candidate_modes(codebook, ModeFamily::both, omni, h_pol),
                                          spec.joint));
                emit("conventional",
                     fixed_mode_solve(obj, sc, codebook, ModeAssignment::uniform(N, omni, h_pol), spec.joint));
            }
            else if (family == ModeFamily::polarization)
            {
                emit("polarization_ra",
                     joint_optimize(obj, sc, codebook, candidate_modes(codebook, ModeFamily::polarization, omni, h_pol),
                                    spec.joint));
                emit("fixed_polarization",
                     fixed_mode_solve(obj, sc, codebook, ModeAssignment::uniform(N, omni, h_pol), spec.joint));
            }
            else
            {
                emit("pattern_ra",
                     joint_optimize(obj, sc, codebook, candidate_modes(codebook, ModeFamily::pattern, omni, h_pol),
                                    spec.joint));
                emit("da", fixed_mode_solve(obj, sc, codebook, ModeAssignment::uniform(N, codebook.da_index(), h_pol),
                                            spec.joint));
                emit("oa", fixed_mode_solve(obj, sc, codebook, ModeAssignment::uniform(N, omni, h_pol), spec.joint));
            }
            return rows;
        }

        // Places the probed entity (target for radar, user 0 for comm)
        void place_probe(Scenario &sc, ObjectiveKind obj, double range, double angle)
        {
            if (obj == ObjectiveKind::radar_scnr)
            {
                sc.target.range = range;
                sc.target.angle = angle;
            }
            else
            {
                if (sc.users.empty())
                    throw std::invalid_argument("angle sweep: comm objective needs at least one user");
                place_user(sc.users[0], range, angle);
            }
        }

        // Angles of the entities the probe competes with
        std::vector<double> nuisance_angles(const Scenario &sc, ObjectiveKind obj)
        {
            std::vector<double> out;
            if (obj == ObjectiveKind::radar_scnr)
                for (const auto &c : sc.clutter)
                    out.push_back(c.angle);
            else
                for (std::size_t k = 1; k < sc.users.size(); ++k)
                    out.push_back(sc.users[k].angle);
            return out;
        }

        SweepResult collect(SweepKind kind, std::vector<std::vector<SweepRow>> &&per_task)
        {
            SweepResult res;
            res.kind = kind;
            for (auto &t : per_task)
                for (auto &r : t)
                    res.rows.push_back(std::move(r));
            res.aggregates = aggregate_rows(res.rows);
            return res;
        }
    }

    SweepResult sweep_angle(const ScenarioConfig &config, const ModeCodebook &codebook, const SweepSpec &spec_in)
    {
        SweepSpec spec = spec_in;
        spec.kind = SweepKind::angle;
        spec.validate();
        codebook.validate();
        const auto diags = validate_config(config);
        if (!diags.empty())
            throw std::invalid_argument(diags.front().field + ": " + diags.front().message);

        const bool polar = spec.family == ModeFamily::polarization;
        std::vector<double> grid = spec.grid;
        Scenario master;
        std::optional<double> aligned;
        if (polar)
        {
            master = build_scenario(config, config.seed);
            const auto nuis = nuisance_angles(master, spec.objective);
            if (!nuis.empty())
            {
                aligned = rad2deg(nuis.front());
                bool present = false;
                for (double g : grid)
                    present = present || std::abs(g - *aligned) < 1e-9;
                if (!present)
                {
                    grid.push_back(*aligned);
                    std::sort(grid.begin(), grid.end());
                }
            }
        }

        const std::size_t S = spec.seeds_per_point;
        std::vector<std::vector<SweepRow>> per_task(grid.size() * S);
        run_tasks(per_task.size(), spec.parallelism, [&](std::size_t i) {
            const std::size_t g = i / S, s = i % S;
            try
            {
                Scenario sc = build_scenario(config, derive_seed(config.seed, s));
                if (polar)
                {
                    // Nuisance positions stay where the master draw put them
                    for (std::size_t c = 0; c < sc.clutter.size(); ++c)
                    {
                        sc.clutter[c].range = master.clutter[c].range;
                        sc.clutter[c].angle = master.clutter[c].angle;
                    }
                    for (std::size_t k = 0; k < sc.users.size(); ++k)
                        place_user(sc.users[k], master.users[k].range, master.users[k].angle);
                    sc.target.range = master.target.range;
                    sc.target.angle = master.target.angle;
                }
                place_probe(sc, spec.objective, spec.probe_radius, deg2rad(grid[g]));
                per_task[i] = solve_architectures(sc, codebook, spec, grid[g], s, nullptr);
            }
            catch (const std::exception &e)
            {
                throw SolverError(describe_point(spec, grid[g], s) + ": " + e.what());
            }
        });

        SweepResult res = collect(SweepKind::angle, std::move(per_task));
        if (polar)
        {
            res.aligned_angle = aligned;
            const auto nuis = nuisance_angles(master, spec.objective);
            if (!nuis.empty())
            {
                double best = -1.0;
                for (double g : grid)
                {
                    double sep = 1e300;
                    for (double a : nuis)
                        sep = std::min(sep, std::abs(deg2rad(g) - a));
                    if (sep > best)
                    {
                        best = sep;
                        res.separated_angle = g;
                    }
                }
            }
        }
        return res;
    }

    SweepResult sweep_antennas(const ScenarioConfig &config, const ModeCodebook &codebook, const SweepSpec &spec_in)
    {
        SweepSpec spec = spec_in;
        spec.kind = SweepKind::antennas;
        spec.validate();
        codebook.validate();

        const std::size_t S = spec.seeds_per_point;
        std::vector<std::vector<SweepRow>> per_task(spec.grid.size() * S);
        run_tasks(per_task.size(), spec.parallelism, [&](std::size_t i) {
            const std::size_t g = i / S, s = i % S;
            try
            {
                ScenarioConfig cfg = config;
                cfg.num_elements = std::size_t(spec.grid[g]);
                const Scenario sc = build_scenario(cfg, derive_seed(config.seed, s));
                per_task[i] = solve_architectures(sc, codebook, spec, spec.grid[g], s, nullptr);
            }
            catch (const std::exception &e)
            {
                throw SolverError(describe_point(spec, spec.grid[g], s) + ": " + e.what());
            }
        });
        SweepResult res = collect(SweepKind::antennas, std::move(per_task));
        res.reduction = antenna_reduction(res.aggregates);
        return res;
    }

    SweepResult run_single(const ScenarioConfig &config, const ModeCodebook &codebook, const SweepSpec &spec_in,
                           std::vector<JointResult> *details)
    {
        SweepSpec spec = spec_in;
        spec.kind = SweepKind::single;
        spec.validate();
        codebook.validate();
        const Scenario sc = build_scenario(config, config.seed);
        std::vector<std::vector<SweepRow>> rows(1);
        try
        {
            rows[0] = solve_architectures(sc, codebook, spec, double(config.num_elements), config.seed, details);
        }
        catch (const std::exception &e)
        {
            throw SolverError("single run, seed " + std::to_string(config.seed) + ": " + e.what());
        }
        return collect(SweepKind::single, std::move(rows));
    }

    namespace
    {
        std::string fmt(double v)
        {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            return buf;
        }
    }

    void write_sweep_csv(std::ostream &os, const SweepResult &result)
    {
        os << "sweep,seed,arch,objective,value,evals,pre_factor_value,power_w\n";
        for (const auto &r : result.rows)
            os << fmt(r.sweep) << ',' << r.seed << ',' << r.arch << ',' << r.objective << ',' << fmt(r.value) << ','
               << r.evals << ',' << fmt(r.pre_factor_value) << ',' << fmt(r.power_w) << '\n';
    }

    std::vector<SweepRow> read_sweep_csv(std::istream &is)
    {
        std::string line;
        if (!std::getline(is, line) || line != "sweep,seed,arch,objective,value,evals,pre_factor_value,power_w")
            throw std::runtime_error("sweep csv: missing or unexpected header");
        std::vector<SweepRow> rows;
        std::size_t lineno = 1;
        while (std::getline(is, line))
        {
            ++lineno;
            if (line.empty())
                continue;
            std::vector<std::string> f;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ','))
                f.push_back(cell);
            if (f.size() != 8)
                throw std::runtime_error("sweep csv: line " + std::to_string(lineno) + " has " +
                                         std::to_string(f.size()) + " fields");
            SweepRow r;
            r.sweep = std::stod(f[0]);
            r.seed = std::stoull(f[1]);
            r.arch = f[2];
            r.objective = f[3];
            r.value = std::stod(f[4]);
            r.evals = std::stoull(f[5]);
            r.pre_factor_value = std::stod(f[6]);
            r.power_w = std::stod(f[7]);
            rows.push_back(std::move(r));
        }
        return rows;
    }

    void write_aggregate_csv(std::ostream &os, const SweepResult &result)
    {
        os << "sweep,arch,count,median,q1,q3\n";
        for (const auto &a : result.aggregates)
            os << fmt(a.sweep) << ',' << a.arch << ',' << a.count << ',' << fmt(a.median) << ',' << fmt(a.q1) << ','
               << fmt(a.q3) << '\n';
    }
}
