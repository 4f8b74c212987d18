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

#include "rasim/serialization.hpp"

#include <cmath>
#include <set>
#include <stdexcept>
#include <thread>

namespace rasim
{
    namespace
    {
        json complex_pair(cx z) { return json::array({z.real(), z.imag()}); }

        cx complex_from(const json &j)
        {
            if (!j.is_array() || j.size() != 2)
                throw std::invalid_argument("expected [re, im] pair");
            return {j.at(0).get<double>(), j.at(1).get<double>()};
        }

        json mat22_to_json(const arma::cx_mat22 &m)
        {
            return json::array({json::array({complex_pair(m(0, 0)), complex_pair(m(0, 1))}),
                                json::array({complex_pair(m(1, 0)), complex_pair(m(1, 1))})});
        }

        arma::cx_mat22 mat22_from_json(const json &j)
        {
            arma::cx_mat22 m;
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c)
                    m(r, c) = complex_from(j.at(r).at(c));
            return m;
        }

        json polar_to_json(const PolarizationState &p)
        {
            return {{"name", p.name}, {"h", complex_pair(p.jones(0))}, {"v", complex_pair(p.jones(1))}};
        }

        PolarizationState polar_from_json(const json &j)
        {
            PolarizationState p;
            p.name = j.value("name", std::string());
            p.jones = arma::cx_vec2{complex_from(j.at("h")), complex_from(j.at("v"))};
            return p;
        }

        json entity_to_json(const SensingEntity &e)
        {
            return {{"role", e.role == EntityRole::target ? "target" : "clutter"},
                    {"range_m", e.range},
                    {"angle_deg", rad2deg(e.angle)},
                    {"reflectivity_db", 10.0 * std::log10(e.reflectivity)},
                    {"scattering", mat22_to_json(e.scattering)}};
        }

        SensingEntity entity_from_json(const json &j)
        {
            SensingEntity e;
            e.role = j.at("role").get<std::string>() == "target" ? EntityRole::target : EntityRole::clutter;
            e.range = j.at("range_m").get<double>();
            e.angle = deg2rad(j.at("angle_deg").get<double>());
            e.reflectivity = std::pow(10.0, j.at("reflectivity_db").get<double>() / 10.0);
            e.scattering = mat22_from_json(j.at("scattering"));
            return e;
        }
    }

    json codebook_to_json(const ModeCodebook &codebook)
    {
        json pats = json::array();
        for (const auto &p : codebook.patterns)
            pats.push_back({{"kind", to_string(p.kind())},
                            {"boresight_deg", rad2deg(p.boresight())},
                            {"exponent", p.exponent()},
                            {"width_scale", p.width_scale()},
                            {"internal", p.internal()},
                            {"samples", p.samples()}});
        json pols = json::array();
        for (const auto &p : codebook.polarizations)
            pols.push_back(polar_to_json(p));
        return {{"patterns", pats}, {"polarizations", pols}};
    }

    ModeCodebook codebook_from_json(const json &j)
    {
        ModeCodebook cb;
        for (const auto &p : j.at("patterns"))
            cb.patterns.push_back(RadiationPattern::from_samples(
                pattern_kind_from_string(p.at("kind").get<std::string>()),
                deg2rad(p.at("boresight_deg").get<double>()), p.at("exponent").get<double>(),
                p.value("width_scale", 1.0), p.at("samples").get<std::vector<double>>(), p.value("internal", false)));
        for (const auto &p : j.at("polarizations"))
            cb.polarizations.push_back(polar_from_json(p));
        return cb;
    }

    std::vector<PatternCheck> check_codebook(const ModeCodebook &codebook, double tol)
    {
        std::vector<PatternCheck> out;
        for (std::size_t i = 0; i < codebook.patterns.size(); ++i)
        {
            const double p = codebook.patterns[i].radiated_power();
            out.push_back({i, p, std::abs(p - 1.0) <= tol});
        }
        return out;
    }

    json scenario_to_json(const Scenario &sc)
    {
        json users = json::array();
        for (const auto &u : sc.users)
        {
            json paths = json::array();
            for (const auto &p : u.paths)
                paths.push_back(
                    {{"gain", complex_pair(p.gain)}, {"angle_deg", rad2deg(p.angle)}, {"depol", mat22_to_json(p.depol)}});
            users.push_back({{"range_m", u.range},
                             {"angle_deg", rad2deg(u.angle)},
                             {"rx_polar", polar_to_json(u.rx_polar)},
                             {"paths", paths}});
        }
        json clutter = json::array();
        for (const auto &c : sc.clutter)
            clutter.push_back(entity_to_json(c));
        return {{"seed", sc.seed},
                {"num_elements", sc.geometry.num_elements},
                {"spacing_wavelengths", sc.geometry.spacing},
                {"path_loss", {{"c0_db", sc.path_loss.c0_db}, {"d0_m", sc.path_loss.d0}, {"exponent", sc.path_loss.exponent}}},
                {"power_w", sc.power},
                {"noise_comm_w", sc.noise_comm},
                {"noise_radar_w", sc.noise_radar},
                {"users", users},
                {"target", entity_to_json(sc.target)},
                {"clutter", clutter}};
    }

    Scenario scenario_from_json(const json &j)
    {
        Scenario sc;
        sc.seed = j.at("seed").get<std::uint64_t>();
        sc.geometry.num_elements = j.at("num_elements").get<std::size_t>();
        sc.geometry.spacing = j.at("spacing_wavelengths").get<double>();
        const auto &pl = j.at("path_loss");
        sc.path_loss = {pl.at("c0_db").get<double>(), pl.at("d0_m").get<double>(), pl.at("exponent").get<double>()};
        sc.power = j.at("power_w").get<double>();
        sc.noise_comm = j.at("noise_comm_w").get<double>();
        sc.noise_radar = j.at("noise_radar_w").get<double>();
        for (const auto &u : j.at("users"))
        {
            CommUser cu;
            cu.range = u.at("range_m").get<double>();
            cu.angle = deg2rad(u.at("angle_deg").get<double>());
            cu.rx_polar = polar_from_json(u.at("rx_polar"));
            for (const auto &p : u.at("paths"))
                cu.paths.push_back({complex_from(p.at("gain")), deg2rad(p.at("angle_deg").get<double>()),
                                    mat22_from_json(p.at("depol"))});
            sc.users.push_back(std::move(cu));
        }
        sc.target = entity_from_json(j.at("target"));
        for (const auto &c : j.at("clutter"))
            sc.clutter.push_back(entity_from_json(c));
        return sc;
    }

    json mode_assignment_to_json(const ModeAssignment &m)
    {
        return {{"pattern_idx", m.pattern_idx}, {"polar_idx", m.polar_idx}, {"scope", to_string(m.scope)}};
    }

    ModeAssignment mode_assignment_from_json(const json &j)
    {
        ModeAssignment m;
        m.pattern_idx = j.at("pattern_idx").get<std::vector<std::size_t>>();
        m.polar_idx = j.at("polar_idx").get<std::vector<std::size_t>>();
        m.scope = mode_scope_from_string(j.at("scope").get<std::string>());
        return m;
    }

    json report_to_json(const SolveReport &r)
    {
        json trace = json::array();
        for (const auto &[cycle, value] : r.trace)
            trace.push_back({{"cycle", cycle}, {"value", value}});
        return {{"modes", mode_assignment_to_json(r.best_modes)},
                {"value", r.best_value},
                {"evaluations", r.evaluations},
                {"trace", trace},
                {"wall_time_s", r.wall_time}};
    }

    json joint_result_to_json(const JointResult &r)
    {
        json j = report_to_json(r.report);
        j["pre_factor_value"] = r.pre_factor_value;
        j["post_factor_value"] = r.post_factor_value;
        j["factor_residual"] = r.factor_residual;
        j["power_w"] = r.power_w;
        j["connectivity"] = to_string(r.stack.mask.kind);
        j["num_rf"] = r.stack.mask.num_rf();
        return j;
    }

    namespace
    {
        // Reads obj[key] into out when present; type problems become diagnostics
        template <typename T>
        void read(const json &obj, const char *key, const std::string &prefix, T &out, std::vector<ConfigError> &errors)
        {
            if (!obj.contains(key))
                return;
            try
            {
                out = obj.at(key).get<T>();
            }
            catch (const json::exception &e)
            {
                errors.push_back({prefix + key, std::string("wrong type: ") + e.what()});
            }
        }

        void read_range_deg(const json &obj, const char *key, const std::string &prefix, double &lo, double &hi,
                            bool radians, std::vector<ConfigError> &errors)
        {
            if (!obj.contains(key))
                return;
            const json &v = obj.at(key);
            if (!v.is_array() || v.size() != 2 || !v.at(0).is_number() || !v.at(1).is_number())
            {
                errors.push_back({prefix + key, "expected a [min, max] pair of numbers"});
                return;
            }
            lo = v.at(0).get<double>();
            hi = v.at(1).get<double>();
            if (radians)
            {
                lo = deg2rad(lo);
                hi = deg2rad(hi);
            }
        }

        void check_keys(const json &obj, const std::string &prefix, const std::set<std::string> &allowed,
                        std::vector<ConfigError> &errors)
        {
            if (!obj.is_object())
            {
                errors.push_back({prefix.empty() ? "<root>" : prefix.substr(0, prefix.size() - 1), "expected an object"});
                return;
            }
            for (const auto &[k, v] : obj.items())
                if (!allowed.count(k))
                    errors.push_back({prefix + k, "unknown key"});
        }

        template <typename E, typename F>
        void read_enum(const json &obj, const char *key, const std::string &prefix, E &out, F parse,
                       std::vector<ConfigError> &errors)
        {
            std::string s;
            bool present = obj.contains(key);
            read(obj, key, prefix, s, errors);
            if (!present || s.empty())
                return;
            try
            {
                out = parse(s);
            }
            catch (const std::exception &e)
            {
                errors.push_back({prefix + key, e.what()});
            }
        }
    }

    void config_from_json(const json &j, RunConfig &cfg, std::vector<ConfigError> &errors)
    {
        check_keys(j, "", {"scenario", "codebook", "solver", "architecture", "power_model", "run"}, errors);
        if (!j.is_object())
            return;

        if (j.contains("scenario"))
        {
            const json &s = j.at("scenario");
            const std::string p = "scenario.";
            check_keys(s, p,
                       {"num_elements", "num_users", "num_clutter", "num_paths", "spacing_wavelengths",
                        "angle_range_deg", "radius_range_m", "path_loss", "power_w", "noise_comm_w", "noise_radar_w",
                        "target_reflectivity_db", "clutter_reflectivity_db", "cross_polar_variance",
                        "angular_spread_deg", "max_path_offset_deg", "path_decay_db", "seed"},
                       errors);
            if (s.is_object())
            {
                ScenarioConfig &c = cfg.scenario;
                read(s, "num_elements", p, c.num_elements, errors);
                read(s, "num_users", p, c.num_users, errors);
                read(s, "num_clutter", p, c.num_clutter, errors);
                read(s, "num_paths", p, c.num_paths, errors);
                read(s, "spacing_wavelengths", p, c.spacing, errors);
                read_range_deg(s, "angle_range_deg", p, c.angle_min, c.angle_max, true, errors);
                read_range_deg(s, "radius_range_m", p, c.radius_min, c.radius_max, false, errors);
                if (s.contains("path_loss"))
                {
                    const json &pl = s.at("path_loss");
                    const std::string pp = p + "path_loss.";
                    check_keys(pl, pp, {"c0_db", "d0_m", "exponent"}, errors);
                    if (pl.is_object())
                    {
                        read(pl, "c0_db", pp, c.path_loss.c0_db, errors);
                        read(pl, "d0_m", pp, c.path_loss.d0, errors);
                        read(pl, "exponent", pp, c.path_loss.exponent, errors);
                    }
                }
                read(s, "power_w", p, c.power, errors);
                read(s, "noise_comm_w", p, c.noise_comm, errors);
                read(s, "noise_radar_w", p, c.noise_radar, errors);
                read(s, "target_reflectivity_db", p, c.target_reflectivity_db, errors);
                read(s, "clutter_reflectivity_db", p, c.clutter_reflectivity_db, errors);
                read(s, "cross_polar_variance", p, c.cross_polar_variance, errors);
                read(s, "angular_spread_deg", p, c.angular_spread_deg, errors);
                read(s, "max_path_offset_deg", p, c.max_path_offset_deg, errors);
                read(s, "path_decay_db", p, c.path_decay_db, errors);
                read(s, "seed", p, c.seed, errors);
            }
        }

        if (j.contains("codebook"))
        {
            const json &c = j.at("codebook");
            const std::string p = "codebook.";
            check_keys(c, p, {"boresights_deg", "exponent", "beamwidth_deg", "floor", "da_boresight_deg", "file"},
                       errors);
            if (c.is_object())
            {
                read(c, "boresights_deg", p, cfg.codebook.boresights_deg, errors);
                read(c, "exponent", p, cfg.codebook.exponent, errors);
                read(c, "beamwidth_deg", p, cfg.codebook.beamwidth_deg, errors);
                read(c, "floor", p, cfg.codebook.floor, errors);
                read(c, "da_boresight_deg", p, cfg.codebook.da_boresight_deg, errors);
                read(c, "file", p, cfg.codebook_file, errors);
            }
        }

        if (j.contains("solver"))
        {
            const json &s = j.at("solver");
            const std::string p = "solver.";
            check_keys(s, p,
                       {"wmmse_max_iters", "wmmse_tol", "scnr_max_iters", "scnr_tol", "hybrid_max_iters", "hybrid_tol",
                        "reassign_period"},
                       errors);
            if (s.is_object())
            {
                SolverOptions &o = cfg.sweep.solver;
                read(s, "wmmse_max_iters", p, o.wmmse_max_iters, errors);
                read(s, "wmmse_tol", p, o.wmmse_tol, errors);
                read(s, "scnr_max_iters", p, o.scnr_max_iters, errors);
                read(s, "scnr_tol", p, o.scnr_tol, errors);
                read(s, "hybrid_max_iters", p, o.hybrid.max_iters, errors);
                read(s, "hybrid_tol", p, o.hybrid.tol, errors);
                read(s, "reassign_period", p, o.hybrid.reassign_period, errors);
            }
        }

        if (j.contains("architecture"))
        {
            const json &a = j.at("architecture");
            const std::string p = "architecture.";
            check_keys(a, p, {"arch", "num_rf", "connectivity", "scope", "max_cycles", "exhaustive_limit"}, errors);
            if (a.is_object())
            {
                JointOptions &o = cfg.sweep.joint;
                read_enum(a, "arch", p, o.arch, architecture_from_string, errors);
                read(a, "num_rf", p, o.num_rf, errors);
                read_enum(a, "connectivity", p, o.connectivity, connectivity_kind_from_string, errors);
                read_enum(a, "scope", p, o.scope, mode_scope_from_string, errors);
                read(a, "max_cycles", p, o.max_cycles, errors);
                read(a, "exhaustive_limit", p, o.exhaustive_limit, errors);
            }
        }

        if (j.contains("power_model"))
        {
            const json &m = j.at("power_model");
            const std::string p = "power_model.";
            check_keys(m, p, {"rf_chain_w", "phase_shifter_w", "ra_switch_w", "static_w"}, errors);
            if (m.is_object())
            {
                read(m, "rf_chain_w", p, cfg.power_model.rf_chain, errors);
                read(m, "phase_shifter_w", p, cfg.power_model.phase_shifter, errors);
                read(m, "ra_switch_w", p, cfg.power_model.ra_switch, errors);
                read(m, "static_w", p, cfg.power_model.static_power, errors);
            }
        }

        if (j.contains("run"))
        {
            const json &r = j.at("run");
            const std::string p = "run.";
            check_keys(r, p,
                       {"sweep", "objective", "family", "grid", "grid_points", "seeds_per_point", "probe_radius_m",
                        "parallel", "output"},
                       errors);
            if (r.is_object())
            {
                SweepSpec &s = cfg.sweep;
                read_enum(r, "sweep", p, s.kind, sweep_kind_from_string, errors);
                read_enum(r, "objective", p, s.objective, objective_kind_from_string, errors);
                read_enum(r, "family", p, s.family, mode_family_from_string, errors);
                if (r.contains("grid") && !r.at("grid").is_null())
                {
                    read(r, "grid", p, s.grid, errors);
                    cfg.grid_given = true;
                }
                read(r, "grid_points", p, cfg.grid_points, errors);
                read(r, "seeds_per_point", p, s.seeds_per_point, errors);
                read(r, "probe_radius_m", p, s.probe_radius, errors);
                read(r, "parallel", p, cfg.parallelism, errors);
                read(r, "output", p, cfg.output, errors);
            }
        }
    }

    namespace
    {
        // Degrees as typed by a user; radians -> degrees -> radians then reproduces the input
        double round_deg(double rad) { return std::round(rad2deg(rad) * 1e9) / 1e9; }
    }

    json config_to_json(const RunConfig &cfg)
    {
        const ScenarioConfig &c = cfg.scenario;
        const SweepSpec &s = cfg.sweep;
        json grid = cfg.grid_given || !s.grid.empty() ? json(s.grid) : json(nullptr);
        return {
            {"scenario",
             {{"num_elements", c.num_elements},
              {"num_users", c.num_users},
              {"num_clutter", c.num_clutter},
              {"num_paths", c.num_paths},
              {"spacing_wavelengths", c.spacing},
              {"angle_range_deg", {round_deg(c.angle_min), round_deg(c.angle_max)}},
              {"radius_range_m", {c.radius_min, c.radius_max}},
              {"path_loss", {{"c0_db", c.path_loss.c0_db}, {"d0_m", c.path_loss.d0}, {"exponent", c.path_loss.exponent}}},
              {"power_w", c.power},
              {"noise_comm_w", c.noise_comm},
              {"noise_radar_w", c.noise_radar},
              {"target_reflectivity_db", c.target_reflectivity_db},
              {"clutter_reflectivity_db", c.clutter_reflectivity_db},
              {"cross_polar_variance", c.cross_polar_variance},
              {"angular_spread_deg", c.angular_spread_deg},
              {"max_path_offset_deg", c.max_path_offset_deg},
              {"path_decay_db", c.path_decay_db},
              {"seed", c.seed}}},
            {"codebook",
             {{"boresights_deg", cfg.codebook.boresights_deg},
              {"exponent", cfg.codebook.exponent},
              {"beamwidth_deg", cfg.codebook.beamwidth_deg},
              {"floor", cfg.codebook.floor},
              {"da_boresight_deg", cfg.codebook.da_boresight_deg},
              {"file", cfg.codebook_file}}},
            {"solver",
             {{"wmmse_max_iters", s.solver.wmmse_max_iters},
              {"wmmse_tol", s.solver.wmmse_tol},
              {"scnr_max_iters", s.solver.scnr_max_iters},
              {"scnr_tol", s.solver.scnr_tol},
              {"hybrid_max_iters", s.solver.hybrid.max_iters},
              {"hybrid_tol", s.solver.hybrid.tol},
              {"reassign_period", s.solver.hybrid.reassign_period}}},
            {"architecture",
             {{"arch", to_string(s.joint.arch)},
              {"num_rf", s.joint.num_rf},
              {"connectivity", to_string(s.joint.connectivity)},
              {"scope", to_string(s.joint.scope)},
              {"max_cycles", s.joint.max_cycles},
              {"exhaustive_limit", s.joint.exhaustive_limit}}},
            {"power_model",
             {{"rf_chain_w", cfg.power_model.rf_chain},
              {"phase_shifter_w", cfg.power_model.phase_shifter},
              {"ra_switch_w", cfg.power_model.ra_switch},
              {"static_w", cfg.power_model.static_power}}},
            {"run",
             {{"sweep", to_string(s.kind)},
              {"objective", to_string(s.objective)},
              {"family", to_string(s.family)},
              {"grid", grid},
              {"grid_points", cfg.grid_points},
              {"seeds_per_point", s.seeds_per_point},
              {"probe_radius_m", s.probe_radius},
              {"parallel", cfg.parallelism},
              {"output", cfg.output}}}};
    }

    std::vector<ConfigError> validate_run_config(const RunConfig &cfg)
    {
        std::vector<ConfigError> out;
        for (const auto &d : validate_config(cfg.scenario))
            out.push_back({d.field, d.message});

        const CodebookOptions &cb = cfg.codebook;
        if (cfg.codebook_file.empty())
        {
            if (cb.boresights_deg.empty())
                out.push_back({"codebook.boresights_deg", "needs at least one directional pattern"});
            if (!(cb.exponent > 0.0))
                out.push_back({"codebook.exponent", "must be > 0"});
            if (!(cb.beamwidth_deg > 0.0) || !(cb.beamwidth_deg < 180.0))
                out.push_back({"codebook.beamwidth_deg", "must lie in (0, 180)"});
            if (!(cb.floor >= 0.0) || !(cb.floor < 1.0))
                out.push_back({"codebook.floor", "must lie in [0, 1)"});
        }

        const SweepSpec &s = cfg.sweep;
        if (!(s.solver.wmmse_tol > 0.0))
            out.push_back({"solver.wmmse_tol", "must be > 0"});
        if (!(s.solver.scnr_tol > 0.0))
            out.push_back({"solver.scnr_tol", "must be > 0"});
        if (!(s.solver.hybrid.tol > 0.0))
            out.push_back({"solver.hybrid_tol", "must be > 0"});
        if (s.solver.wmmse_max_iters == 0)
            out.push_back({"solver.wmmse_max_iters", "must be >= 1"});
        if (s.solver.scnr_max_iters == 0)
            out.push_back({"solver.scnr_max_iters", "must be >= 1"});
        if (s.solver.hybrid.max_iters == 0)
            out.push_back({"solver.hybrid_max_iters", "must be >= 1"});

        std::vector<std::size_t> sizes{cfg.scenario.num_elements};
        if (s.kind == SweepKind::antennas)
        {
            sizes.clear();
            for (double g : s.grid)
                sizes.push_back(std::size_t(std::max(g, 0.0)));
        }
        const std::size_t nrf = s.joint.num_rf;
        if (nrf < 1)
            out.push_back({"architecture.num_rf", "must be >= 1"});
        for (std::size_t N : sizes)
        {
            if (s.joint.arch == Architecture::tri_hybrid && nrf > N)
                out.push_back({"architecture.num_rf", "must not exceed the number of elements (" + std::to_string(N) + ")"});
            if (s.joint.connectivity == ConnectivityKind::sub && nrf >= 1 && N % nrf != 0)
                out.push_back({"architecture.num_rf", "sub-connected requires num_elements divisible by num_rf (" +
                                                          std::to_string(N) + " mod " + std::to_string(nrf) + " = " +
                                                          std::to_string(N % nrf) + ")"});
        }

        const PowerModel &pm = cfg.power_model;
        if (pm.rf_chain < 0.0)
            out.push_back({"power_model.rf_chain_w", "must be >= 0"});
        if (pm.phase_shifter < 0.0)
            out.push_back({"power_model.phase_shifter_w", "must be >= 0"});
        if (pm.ra_switch < 0.0)
            out.push_back({"power_model.ra_switch_w", "must be >= 0"});
        if (pm.static_power < 0.0)
            out.push_back({"power_model.static_w", "must be >= 0"});

        if (s.seeds_per_point < 1)
            out.push_back({"run.seeds_per_point", "must be >= 1"});
        if (!(s.probe_radius > 0.0))
            out.push_back({"run.probe_radius_m", "must be > 0"});
        for (std::size_t i = 1; i < s.grid.size(); ++i)
            if (!(s.grid[i] > s.grid[i - 1]))
            {
                out.push_back({"run.grid", "must be strictly increasing"});
                break;
            }
        if (s.kind == SweepKind::antennas)
        {
            if (s.grid.empty())
                out.push_back({"run.grid", "antenna sweeps need an explicit grid of element counts"});
            for (double g : s.grid)
                if (g < 1.0 || g != std::floor(g))
                {
                    out.push_back({"run.grid", "antenna counts must be positive integers"});
                    break;
                }
        }
        if (s.kind == SweepKind::angle)
            for (double g : s.grid)
                if (std::abs(g) > 90.0)
                {
                    out.push_back({"run.grid", "angles must lie within [-90, 90] degrees"});
                    break;
                }
        if (s.kind == SweepKind::angle && !cfg.grid_given && cfg.grid_points < 1)
            out.push_back({"run.grid_points", "must be >= 1"});
        if (s.objective == ObjectiveKind::comm_sum_rate && cfg.scenario.num_users < 1)
            out.push_back({"scenario.num_users", "comm_sum_rate needs at least one user"});
        if (cfg.output.empty())
            out.push_back({"run.output", "must not be empty"});
        return out;
    }

    void finalize_run_config(RunConfig &cfg)
    {
        SweepSpec &s = cfg.sweep;
        if (!cfg.grid_given || s.grid.empty())
        {
            if (s.kind == SweepKind::angle)
                s.grid = default_angle_grid(cfg.scenario, cfg.grid_points);
            else if (s.kind == SweepKind::antennas && s.grid.empty())
                s.grid = {2, 4, 8, 16, 32};
        }
        s.joint.power_model = cfg.power_model;
        const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
        s.parallelism = cfg.parallelism == 0 ? hw : cfg.parallelism;
    }
}
