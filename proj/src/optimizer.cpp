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

#include "rasim/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rasim
{
    std::string to_string(ObjectiveKind kind)
    {
        return kind == ObjectiveKind::comm_sum_rate ? "comm_sum_rate" : "radar_scnr";
    }

    ObjectiveKind objective_kind_from_string(const std::string &s)
    {
        if (s == "comm_sum_rate")
            return ObjectiveKind::comm_sum_rate;
        if (s == "radar_scnr")
            return ObjectiveKind::radar_scnr;
        throw std::invalid_argument("unknown objective '" + s + "'");
    }

    void SolverOptions::validate() const
    {
        if (!(wmmse_tol > 0.0) || !(scnr_tol > 0.0) || !(hybrid.tol > 0.0))
            throw std::invalid_argument("SolverOptions: tolerances must be > 0");
        if (wmmse_max_iters == 0 || scnr_max_iters == 0 || hybrid.max_iters == 0)
            throw std::invalid_argument("SolverOptions: iteration limits must be >= 1");
    }

    void Objective::validate() const
    {
        solver.validate();
        if (!(power > 0.0))
            throw std::invalid_argument("Objective: power must be > 0");
        if (!(noise > 0.0))
            throw std::invalid_argument("Objective: noise must be > 0");
    }

    Objective make_objective(ObjectiveKind kind, const Scenario &scenario, const SolverOptions &solver)
    {
        Objective o;
        o.kind = kind;
        o.power = scenario.power;
        o.noise = kind == ObjectiveKind::comm_sum_rate ? scenario.noise_comm : scenario.noise_radar;
        o.solver = solver;
        return o;
    }

    std::string to_string(ModeFamily family)
    {
        switch (family)
        {
        case ModeFamily::pattern:
            return "pattern";
        case ModeFamily::polarization:
            return "polarization";
        default:
            return "both";
        }
    }

    ModeFamily mode_family_from_string(const std::string &s)
    {
        if (s == "pattern")
            return ModeFamily::pattern;
        if (s == "polarization")
            return ModeFamily::polarization;
        if (s == "both")
            return ModeFamily::both;
        throw std::invalid_argument("unknown mode family '" + s + "'");
    }

    std::vector<ElementMode> candidate_modes(const ModeCodebook &codebook, ModeFamily family, std::size_t fixed_pattern,
                                             std::size_t fixed_polar)
    {
        if (fixed_pattern >= codebook.patterns.size() || fixed_polar >= codebook.polarizations.size())
            throw std::invalid_argument("candidate_modes: fixed index out of range");
        std::vector<std::size_t> pats{fixed_pattern}, pols{fixed_polar};
        if (family != ModeFamily::polarization)
            pats = codebook.searchable_patterns();
        if (family != ModeFamily::pattern)
        {
            pols.clear();
            for (std::size_t i = 0; i < codebook.polarizations.size(); ++i)
                pols.push_back(i);
        }
        std::vector<ElementMode> out;
        for (std::size_t p : pats)
            for (std::size_t q : pols)
                out.push_back({p, q});
        return out;
    }

    namespace
    {
        ChannelParts parts_for(ObjectiveKind kind)
        {
            return kind == ObjectiveKind::comm_sum_rate ? ChannelParts::comm_only : ChannelParts::sensing_only;
        }

        ModeAssignment uniform_assignment(std::size_t N, const ElementMode &m)
        {
            return ModeAssignment::uniform(N, m.pattern, m.polar);
        }

        double elapsed(std::chrono::steady_clock::time_point t0)
        {
            return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
    }

    Evaluation evaluate_detailed(const Objective &objective, const Scenario &scenario, const ModeCodebook &codebook,
                                 const ModeAssignment &modes)
    {
        const ChannelSet ch = synthesize_channels(scenario, codebook, modes, objective.noise, parts_for(objective.kind));
        Evaluation ev;
        if (objective.kind == ObjectiveKind::comm_sum_rate)
        {
            const auto r = wmmse_precoder(ch.comm, objective.power, objective.noise, objective.solver.wmmse_max_iters,
                                          objective.solver.wmmse_tol);
            ev.value = r.trace.back();
            ev.precoder = r.precoder;
        }
        else
        {
            const auto r = scnr_transmit_beamformer(ch.target, ch.clutter, ch.target_reflectivity,
                                                    ch.clutter_reflectivity, objective.noise, objective.power,
                                                    objective.solver.scnr_max_iters, objective.solver.scnr_tol);
            ev.value = r.trace.back();
            ev.precoder = arma::cx_mat(r.transmit);
            ev.receive = r.receive;
        }
        return ev;
    }

    double evaluate(const Objective &objective, const Scenario &scenario, const ModeCodebook &codebook,
                    const ModeAssignment &modes)
    {
        return evaluate_detailed(objective, scenario, codebook, modes).value;
    }

    double evaluate_precoder(const Objective &objective, const ChannelSet &channels, const arma::cx_mat &precoder)
    {
        if (objective.kind == ObjectiveKind::comm_sum_rate)
            return sum_rate(channels.comm, precoder, objective.noise);
        const arma::cx_vec f = precoder.col(0);
        const arma::cx_vec w = mvdr_receive_filter(channels.target, channels.clutter, channels.clutter_reflectivity, f,
                                                   objective.noise);
        return scnr(channels.target, channels.clutter, channels.target_reflectivity, channels.clutter_reflectivity, f,
                    w, objective.noise);
    }

    std::size_t search_space_size(std::size_t num_candidates, std::size_t num_elements, ModeScope scope)
    {
        if (scope == ModeScope::array_uniform || num_candidates <= 1)
            return num_candidates;
        std::size_t size = 1;
        for (std::size_t n = 0; n < num_elements; ++n)
        {
            if (size > std::numeric_limits<std::size_t>::max() / num_candidates)
                return std::numeric_limits<std::size_t>::max();
            size *= num_candidates;
        }
        return size;
    }

    SearchSpaceTooLarge::SearchSpaceTooLarge(std::size_t size)
        : std::invalid_argument("exhaustive_mode_search: search space of " + std::to_string(size) +
                                " assignments exceeds the guard of " + std::to_string(exhaustive_guard)),
          size_(size)
    {
    }

    SolveReport exhaustive_mode_search(const Objective &objective, const Scenario &scenario,
                                       const ModeCodebook &codebook, const std::vector<ElementMode> &candidates,
                                       ModeScope scope)
    {
        objective.validate();
        if (candidates.empty())
            throw std::invalid_argument("exhaustive_mode_search: no candidate modes");
        const auto t0 = std::chrono::steady_clock::now();
        const std::size_t N = scenario.geometry.num_elements;
        const std::size_t M = candidates.size();
        const std::size_t size = search_space_size(M, N, scope);
        if (size > exhaustive_guard)
            throw SearchSpaceTooLarge(size);

        SolveReport rep;
        bool have = false;
        if (scope == ModeScope::array_uniform)
        {
            for (std::size_t c = 0; c < M; ++c)
            {
                const ModeAssignment a = uniform_assignment(N, candidates[c]);
                const double v = evaluate(objective, scenario, codebook, a);
                ++rep.evaluations;
                if (!have || v > rep.best_value)
                {
                    rep.best_value = v;
                    rep.best_modes = a;
                    have = true;
                }
            }
        }
        else
        {
            std::vector<std::size_t> digit(N, 0);
            ModeAssignment a{std::vector<std::size_t>(N), std::vector<std::size_t>(N), ModeScope::per_element};
            for (std::size_t count = 0; count < size; ++count)
            {
                for (std::size_t n = 0; n < N; ++n)
                {
                    a.pattern_idx[n] = candidates[digit[n]].pattern;
                    a.polar_idx[n] = candidates[digit[n]].polar;
                }
                const double v = evaluate(objective, scenario, codebook, a);
                ++rep.evaluations;
                if (!have || v > rep.best_value)
                {
                    rep.best_value = v;
                    rep.best_modes = a;
                    have = true;
                }
                for (std::size_t n = 0; n < N; ++n)
                {
                    if (++digit[n] < M)
                        break;
                    digit[n] = 0;
                }
            }
        }
        rep.trace.emplace_back(0, rep.best_value);
        rep.wall_time = elapsed(t0);
        return rep;
    }

    SolveReport coordinate_ascent_modes(const Objective &objective, const Scenario &scenario,
                                        const ModeCodebook &codebook, const std::vector<ElementMode> &candidates,
                                        const ModeAssignment &init, std::size_t max_cycles)
    {
        objective.validate();
        if (candidates.empty())
            throw std::invalid_argument("coordinate_ascent_modes: no candidate modes");
        const std::size_t N = scenario.geometry.num_elements;
        init.validate(codebook, N);
        const auto t0 = std::chrono::steady_clock::now();

        SolveReport rep;
        ModeAssignment cur = init;
        double cur_value = evaluate(objective, scenario, codebook, cur);
        rep.evaluations = 1;
        rep.trace.emplace_back(0, cur_value);

        // array_uniform has a single coordinate: the shared mode
        const std::size_t coords = init.scope == ModeScope::array_uniform ? 1 : N;
        for (std::size_t cycle = 1; cycle <= max_cycles; ++cycle)
        {
            std::size_t moves = 0;
            for (std::size_t e = 0; e < coords; ++e)
            {
                double best = cur_value;
                std::size_t best_c = candidates.size();
                for (std::size_t c = 0; c < candidates.size(); ++c)
                {
                    const ElementMode &m = candidates[c];
                    if (cur.pattern_idx[e] == m.pattern && cur.polar_idx[e] == m.polar)
                        continue;
                    ModeAssignment trial = cur;
                    if (init.scope == ModeScope::array_uniform)
                    {
                        trial = uniform_assignment(N, m);
                    }
                    else
                    {
                        trial.pattern_idx[e] = m.pattern;
                        trial.polar_idx[e] = m.polar;
                    }
                    const double v = evaluate(objective, scenario, codebook, trial);
                    ++rep.evaluations;
                    if (v > best)
                    {
                        best = v;
                        best_c = c;
                    }
                }
                if (best_c < candidates.size())
                {
                    const ElementMode &m = candidates[best_c];
                    if (init.scope == ModeScope::array_uniform)
                    {
                        cur = uniform_assignment(N, m);
                    }
                    else
                    {
                        cur.pattern_idx[e] = m.pattern;
                        cur.polar_idx[e] = m.polar;
                    }
                    cur_value = best;
                    ++moves;
                }
            }
            rep.trace.emplace_back(cycle, cur_value);
            if (moves == 0)
                break;
        }
        rep.best_modes = cur;
        rep.best_value = cur_value;
        rep.wall_time = elapsed(t0);
        return rep;
    }

    namespace
    {
        JointResult finish(const Objective &objective, const Scenario &scenario, const ModeCodebook &codebook,
                           SolveReport report, const JointOptions &options)
        {
            JointResult out;
            const std::size_t N = scenario.geometry.num_elements;
            const Evaluation ev = evaluate_detailed(objective, scenario, codebook, report.best_modes);
            out.pre_factor_value = ev.value;
            out.stack.modes = report.best_modes;
            out.stack.power_budget = objective.power;

            if (options.arch == Architecture::fully_digital)
            {
                out.stack.mask = ConnectivityMask{ConnectivityKind::dynamic, arma::eye<arma::umat>(N, N)};
                out.stack.analog = arma::eye<arma::cx_mat>(N, N);
                out.stack.baseband = ev.precoder;
                out.post_factor_value = ev.value;
                out.power_w = power_consumption(options.power_model, options.arch, N, N, nullptr);
            }
            else
            {
                const ConnectivityMask mask = connectivity_mask(options.connectivity, N, options.num_rf);
                const HybridResult h = hybrid_factorize(ev.precoder, mask, objective.power, objective.solver.hybrid);
                out.stack.mask = h.mask;
                out.stack.analog = h.analog;
                out.stack.baseband = h.baseband;
                out.factor_residual = h.residual;
                const ChannelSet ch = synthesize_channels(scenario, codebook, report.best_modes, objective.noise,
                                                          parts_for(objective.kind));
                out.post_factor_value = evaluate_precoder(objective, ch, out.stack.effective());
                out.power_w = power_consumption(options.power_model, options.arch, N, options.num_rf, &h.mask);
            }
            out.report = std::move(report);
            return out;
        }
    }

    JointResult joint_optimize(const Objective &objective, const Scenario &scenario, const ModeCodebook &codebook,
                               const std::vector<ElementMode> &candidates, const JointOptions &options)
    {
        objective.validate();
        const auto t0 = std::chrono::steady_clock::now();
        const std::size_t N = scenario.geometry.num_elements;
        const std::size_t M = candidates.size();

        SolveReport rep;
        if (search_space_size(M, N, options.scope) <= std::min(options.exhaustive_limit, exhaustive_guard))
        {
            rep = exhaustive_mode_search(objective, scenario, codebook, candidates, options.scope);
        }
        else
        {
            const SolveReport uni =
                exhaustive_mode_search(objective, scenario, codebook, candidates, ModeScope::array_uniform);
            ModeAssignment start = uni.best_modes;
            start.scope = ModeScope::per_element;
            rep = coordinate_ascent_modes(objective, scenario, codebook, candidates, start, options.max_cycles);
            // The start value was already counted by the uniform stage
            rep.evaluations += uni.evaluations - 1;
        }
        rep.wall_time = elapsed(t0);
        return finish(objective, scenario, codebook, std::move(rep), options);
    }

    JointResult fixed_mode_solve(const Objective &objective, const Scenario &scenario, const ModeCodebook &codebook,
                                 const ModeAssignment &modes, const JointOptions &options)
    {
        objective.validate();
        modes.validate(codebook, scenario.geometry.num_elements);
        const auto t0 = std::chrono::steady_clock::now();
        SolveReport rep;
        rep.best_modes = modes;
        rep.best_value = evaluate(objective, scenario, codebook, modes);
        rep.evaluations = 1;
        rep.trace.emplace_back(0, rep.best_value);
        rep.wall_time = elapsed(t0);
        return finish(objective, scenario, codebook, std::move(rep), options);
    }
}
