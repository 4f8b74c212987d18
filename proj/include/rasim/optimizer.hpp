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

#ifndef RASIM_OPTIMIZER_HPP
#define RASIM_OPTIMIZER_HPP

#include "rasim/beamforming.hpp"
#include "rasim/channel.hpp"
#include "rasim/em_domain.hpp"

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace rasim
{
    enum class ObjectiveKind
    {
        comm_sum_rate,
        radar_scnr
    };

    std::string to_string(ObjectiveKind kind);
    ObjectiveKind objective_kind_from_string(const std::string &s);

    struct SolverOptions
    {
        std::size_t wmmse_max_iters = 300;
        double wmmse_tol = 1e-9;
        std::size_t scnr_max_iters = 300;
        double scnr_tol = 1e-10;
        HybridOptions hybrid;

        void validate() const;
    };

    struct Objective
    {
        ObjectiveKind kind = ObjectiveKind::radar_scnr;
        double power = 1.0;
        double noise = 1e-27;
        SolverOptions solver;

        void validate() const;
    };

    // Picks the noise floor of the scenario that matches the objective
    Objective make_objective(ObjectiveKind kind, const Scenario &scenario, const SolverOptions &solver = {});

    // Which codebook families the search may change per element
    enum class ModeFamily
    {
        pattern,
        polarization,
        both
    };

    std::string to_string(ModeFamily family);
    ModeFamily mode_family_from_string(const std::string &s);

    // One candidate EM mode for a single element
    struct ElementMode
    {
        std::size_t pattern = 0;
        std::size_t polar = 0;
    };

    // Candidates offered to every element, in tie-breaking order (lowest index wins).
    // The family not being searched stays at the fixed index.
    std::vector<ElementMode> candidate_modes(const ModeCodebook &codebook, ModeFamily family,
                                             std::size_t fixed_pattern, std::size_t fixed_polar);

    struct Evaluation
    {
        double value = 0.0;
        arma::cx_mat precoder; // N x K for comm, N x 1 for radar
        arma::cx_vec receive;  // radar only
    };

    Evaluation evaluate_detailed(const Objective &objective, const Scenario &scenario, const ModeCodebook &codebook,
                                 const ModeAssignment &modes);
    double evaluate(const Objective &objective, const Scenario &scenario, const ModeCodebook &codebook,
                    const ModeAssignment &modes);

    // Objective achieved by a fixed precoder (used after hybrid factorization)
    double evaluate_precoder(const Objective &objective, const ChannelSet &channels, const arma::cx_mat &precoder);

    struct SolveReport
    {
        ModeAssignment best_modes;
        double best_value = 0.0;
        std::size_t evaluations = 0;
        std::vector<std::pair<std::size_t, double>> trace; // (cycle, incumbent value)
        double wall_time = 0.0;
    };

    inline constexpr std::size_t exhaustive_guard = 100000;

    // Space size for a scope, saturating at SIZE_MAX
    std::size_t search_space_size(std::size_t num_candidates, std::size_t num_elements, ModeScope scope);

    // Thrown when a search space exceeds the exhaustive guard
    class SearchSpaceTooLarge : public std::invalid_argument
    {
    public:
        SearchSpaceTooLarge(std::size_t size);
        std::size_t size() const { return size_; }

    private:
        std::size_t size_;
    };

    // Enumerates every assignment (odometer order, element 0 fastest) and keeps the first maximum
    SolveReport exhaustive_mode_search(const Objective &objective, const Scenario &scenario,
                                       const ModeCodebook &codebook, const std::vector<ElementMode> &candidates,
                                       ModeScope scope);

    // Element-wise greedy ascent; an element only moves on strict improvement
    SolveReport coordinate_ascent_modes(const Objective &objective, const Scenario &scenario,
                                        const ModeCodebook &codebook, const std::vector<ElementMode> &candidates,
                                        const ModeAssignment &init, std::size_t max_cycles);

    struct JointOptions
    {
        ModeScope scope = ModeScope::per_element;
        Architecture arch = Architecture::fully_digital;
        std::size_t num_rf = 2;
        ConnectivityKind connectivity = ConnectivityKind::fully;
        std::size_t max_cycles = 20;
        std::size_t exhaustive_limit = 4096; // larger spaces go to coordinate ascent
        PowerModel power_model;
    };

    struct JointResult
    {
        SolveReport report;
        BeamformingStack stack;
        double pre_factor_value = 0.0;  // fully-digital value for the selected modes
        double post_factor_value = 0.0; // value through the analog/baseband stack
        double factor_residual = 0.0;
        double power_w = 0.0;
    };

    // Mode search (exhaustive up to options.exhaustive_limit, otherwise coordinate ascent started from the
    // best array-uniform assignment) around the continuous solvers, then hybrid factorization
    // for tri-hybrid arrays.
    JointResult joint_optimize(const Objective &objective, const Scenario &scenario, const ModeCodebook &codebook,
                               const std::vector<ElementMode> &candidates, const JointOptions &options);

    // Evaluates a fixed assignment through the same pipeline (baselines)
    JointResult fixed_mode_solve(const Objective &objective, const Scenario &scenario, const ModeCodebook &codebook,
                                 const ModeAssignment &modes, const JointOptions &options);
}

#endif
