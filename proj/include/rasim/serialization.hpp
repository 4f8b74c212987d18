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

#ifndef RASIM_SERIALIZATION_HPP
#define RASIM_SERIALIZATION_HPP

#include "rasim/em_domain.hpp"
#include "rasim/optimizer.hpp"
#include "rasim/scenario.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace rasim
{
    using json = nlohmann::json;

    // Codebook file: patterns[].{kind, boresight_deg, exponent, width_scale, internal, samples},
    // polarizations[].{name, h: [re, im], v: [re, im]}
    json codebook_to_json(const ModeCodebook &codebook);
    ModeCodebook codebook_from_json(const json &j); // no normalization check, see check_codebook

    struct PatternCheck
    {
        std::size_t index = 0;
        double power = 0.0;
        bool ok = false;
    };

    std::vector<PatternCheck> check_codebook(const ModeCodebook &codebook, double tol = 1e-6);

    json scenario_to_json(const Scenario &scenario);
    Scenario scenario_from_json(const json &j);

    json report_to_json(const SolveReport &report);
    json joint_result_to_json(const JointResult &result);

    json mode_assignment_to_json(const ModeAssignment &modes);
    ModeAssignment mode_assignment_from_json(const json &j);

    // Effective run configuration. Unknown keys are rejected so that typos surface as diagnostics.
    struct RunConfig
    {
        ScenarioConfig scenario;
        CodebookOptions codebook;
        std::string codebook_file; // overrides the generated codebook when set
        SweepSpec sweep;
        std::size_t grid_points = 25; // used when the angle grid is not given explicitly
        bool grid_given = false;
        PowerModel power_model;
        std::string output = "results/run.csv";
        std::size_t parallelism = 0; // 0 = hardware concurrency
    };

    struct ConfigError
    {
        std::string field;
        std::string message;
    };

    // Parses a config document into cfg (fields not present keep their current values).
    // Problems are appended to errors instead of throwing.
    void config_from_json(const json &j, RunConfig &cfg, std::vector<ConfigError> &errors);
    json config_to_json(const RunConfig &cfg);

    // Every invariant of the referenced types, as field-level diagnostics
    std::vector<ConfigError> validate_run_config(const RunConfig &cfg);

    // Resolves the grid (defaults per sweep kind) and parallelism into cfg.sweep
    void finalize_run_config(RunConfig &cfg);
}

#endif
