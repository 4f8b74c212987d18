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

#ifndef RASIM_SCENARIO_HPP
#define RASIM_SCENARIO_HPP

#include "rasim/channel.hpp"
#include "rasim/optimizer.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rasim
{
    struct ScenarioConfig
    {
        std::size_t num_elements = 8;
        std::size_t num_users = 2;
        std::size_t num_clutter = 2;
        std::size_t num_paths = 5;
        double spacing = 0.5;
        double angle_min = -pi / 3.0;
        double angle_max = pi / 3.0;
        double radius_min = 30.0;
        double radius_max = 60.0;
        PathLossParams path_loss;
        double power = 1.0;
        double noise_comm = 1e-14;
        double noise_radar = 1e-27;
        double target_reflectivity_db = 0.0;
        double clutter_reflectivity_db = 10.0;
        double cross_polar_variance = 0.3;
        double angular_spread_deg = 10.0; // Laplacian scale of the non-LoS path offsets
        double max_path_offset_deg = 30.0;
        double path_decay_db = 3.0;
        std::uint64_t seed = 1;
    };

    // A field-level complaint about a configuration
    struct Diagnostic
    {
        std::string field;
        std::string message;
    };

    std::vector<Diagnostic> validate_config(const ScenarioConfig &config);

    struct Position
    {
        double range = 0.0;
        double angle = 0.0;
    };

    // Angle uniform on [angle_min, angle_max]; range uniform over the annulus area (density ~ r)
    std::vector<Position> sample_positions(const ScenarioConfig &config, Rng &rng, std::size_t count);

    // Per-user multipath following the geometric substitute channel model: LoS path plus
    // Laplacian angular offsets, exponentially decaying powers, depolarized by random matrices
    CommUser draw_comm_user(const ScenarioConfig &config, Rng &rng, const Position &pos);

    // Deterministic in config.seed (or the explicit seed)
    Scenario build_scenario(const ScenarioConfig &config);
    Scenario build_scenario(const ScenarioConfig &config, std::uint64_t seed);

    // Moves a user, shifting all of its path angles by the same offset
    void place_user(CommUser &user, double range, double angle);

    // Independent per-task stream from a master seed
    std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

    enum class SweepKind
    {
        single,
        angle,
        antennas
    };

    std::string to_string(SweepKind kind);
    SweepKind sweep_kind_from_string(const std::string &s);

    struct SweepSpec
    {
        SweepKind kind = SweepKind::angle;
        std::vector<double> grid; // degrees for angle sweeps, element counts for antenna sweeps
        std::size_t seeds_per_point = 50;
        ObjectiveKind objective = ObjectiveKind::radar_scnr;
        ModeFamily family = ModeFamily::pattern;
        JointOptions joint;
        SolverOptions solver;
        double probe_radius = 45.0;
        std::size_t parallelism = 1;

        void validate() const;
    };

    // Evenly spaced angle grid (degrees) over the configured sector
    std::vector<double> default_angle_grid(const ScenarioConfig &config, std::size_t points = 25);

    struct SweepRow
    {
        double sweep = 0.0; // degrees for angle sweeps, N for antenna sweeps
        std::size_t seed = 0;
        std::string arch;
        std::string objective;
        double value = 0.0;
        std::size_t evals = 0;
        double pre_factor_value = 0.0;
        double power_w = 0.0;
    };

    struct Aggregate
    {
        double sweep = 0.0;
        std::string arch;
        double median = 0.0;
        double q1 = 0.0;
        double q3 = 0.0;
        std::size_t count = 0;
    };

    // One entry per RA size N whose reduction partner factor * N is on the grid
    struct ReductionEntry
    {
        std::size_t factor = 0;
        std::size_t ra_elements = 0;
        std::size_t conventional_elements = 0;
        double ra_median = 0.0;
        double conventional_median = 0.0;
        bool matches = false; // ra_median >= (1 - 0.05) * conventional_median
    };

    struct SweepResult
    {
        SweepKind kind = SweepKind::angle;
        std::vector<SweepRow> rows; // ordered by (grid index, seed, architecture)
        std::vector<Aggregate> aggregates;
        std::vector<ReductionEntry> reduction;
        std::optional<double> aligned_angle;   // forced grid point of the polarization sweep
        std::optional<double> separated_angle; // grid point farthest from every clutter source
    };

    // Architecture labels used in the CSV
    std::vector<std::string> sweep_architectures(const SweepSpec &spec);

    // Median and quartiles (linear interpolation between order statistics)
    double quantile(std::vector<double> values, double q);
    std::vector<Aggregate> aggregate_rows(const std::vector<SweepRow> &rows);
    std::vector<ReductionEntry> antenna_reduction(const std::vector<Aggregate> &aggregates, double tolerance = 0.05);

    // Angle sweep. Pattern family: target (radar) or user 0 (comm) pinned at each grid angle
    // with the nuisance geometry drawn per seed; archs pattern_ra / da / oa. Polarization family:
    // nuisance positions drawn once from the master seed, the aligned angle of clutter 0 forced
    // onto the grid; archs polarization_ra / fixed_polarization.
    SweepResult sweep_angle(const ScenarioConfig &config, const ModeCodebook &codebook, const SweepSpec &spec);

    // Antenna-count sweep; archs ra (pattern and polarization searched jointly) / conventional
    SweepResult sweep_antennas(const ScenarioConfig &config, const ModeCodebook &codebook, const SweepSpec &spec);

    // One solve per architecture on the configured seed
    SweepResult run_single(const ScenarioConfig &config, const ModeCodebook &codebook, const SweepSpec &spec,
                           std::vector<JointResult> *details = nullptr);

    // CSV header: sweep,seed,arch,objective,value,evals,pre_factor_value,power_w
    void write_sweep_csv(std::ostream &os, const SweepResult &result);
    std::vector<SweepRow> read_sweep_csv(std::istream &is);

    // Aggregate sidecar: sweep,arch,count,median,q1,q3
    void write_aggregate_csv(std::ostream &os, const SweepResult &result);
}

#endif
