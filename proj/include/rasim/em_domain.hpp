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

#ifndef RASIM_EM_DOMAIN_HPP
#define RASIM_EM_DOMAIN_HPP

#include <armadillo>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace rasim
{
    using cx = std::complex<double>;

    inline constexpr double pi = 3.14159265358979323846;

    inline constexpr double deg2rad(double deg) { return deg * pi / 180.0; }
    inline constexpr double rad2deg(double rad) { return rad * 180.0 / pi; }

    // Uniform linear array along the x-axis, element spacing in wavelengths
    struct ArrayGeometry
    {
        std::size_t num_elements = 8;
        double spacing = 0.5;

        void validate() const; // Throws std::invalid_argument
    };

    enum class PatternKind
    {
        omni,
        directional
    };

    std::string to_string(PatternKind kind);
    PatternKind pattern_kind_from_string(const std::string &s);

    // Azimuth grid shared by all tabulated patterns: half-degree steps over [-pi, pi], both ends included
    inline constexpr std::size_t pattern_grid_size = 721;
    double pattern_grid_angle(std::size_t i);

    // Amplitude radiation pattern tabulated on the azimuth grid.
    //
    // Directional patterns follow g(t) = c * cos^q(s * (t - boresight)) inside the window
    // |t - boresight| <= pi / (2s) and a constant floor outside it. The constant c is picked so
    // that the trapezoidal estimate of (1/2pi) * integral |g|^2 equals one, i.e. every pattern
    // radiates the same total power as the omni pattern.
    class RadiationPattern
    {
    public:
        static RadiationPattern omni();
        static RadiationPattern directional(double boresight, double exponent, double width_scale,
                                            double floor = 1e-4);

        // Width scale s giving the requested -3 dB (power) beamwidth for exponent q
        static double width_scale_for_beamwidth(double beamwidth, double exponent);

        // Rebuilds a pattern from stored samples (used by codebook deserialization)
        static RadiationPattern from_samples(PatternKind kind, double boresight, double exponent,
                                             double width_scale, std::vector<double> samples,
                                             bool internal = false);

        PatternKind kind() const { return kind_; }
        double boresight() const { return boresight_; }
        double exponent() const { return exponent_; }
        double width_scale() const { return width_scale_; }
        double norm_const() const { return norm_const_; }
        const std::vector<double> &samples() const { return samples_; }

        // Internal patterns are kept for baselines and are never offered to the mode search
        bool internal() const { return internal_; }
        RadiationPattern as_internal() const;

        // (1/2pi) * integral of |g|^2 over the grid, trapezoidal rule
        double radiated_power() const { return power_; }
        bool normalized(double tol = 1e-6) const;

        // Linear interpolation between grid samples, angle wrapped into [-pi, pi)
        double interpolate(double theta) const;

    private:
        PatternKind kind_ = PatternKind::omni;
        double boresight_ = 0.0;
        double exponent_ = 0.0;
        double width_scale_ = 1.0;
        double norm_const_ = 1.0;
        double power_ = 1.0;
        bool internal_ = false;
        std::vector<double> samples_;
    };

    // Jones vector in the horizontal/vertical basis
    struct PolarizationState
    {
        std::string name;
        arma::cx_vec2 jones;

        static PolarizationState horizontal();
        static PolarizationState vertical();
        static PolarizationState slant45();
        static PolarizationState rhcp();
        static PolarizationState from_jones(std::string name, cx h, cx v); // Throws unless unit norm

        void validate() const;
    };

    struct CodebookOptions
    {
        std::vector<double> boresights_deg = {-50.0, -30.0, -10.0, 0.0, 10.0, 30.0, 50.0};
        double exponent = 4.0;
        double beamwidth_deg = 40.0;
        double floor = 1e-4;
        double da_boresight_deg = 0.0;
    };

    // Discrete EM modes. Index order is stable and is the identifier used everywhere else.
    struct ModeCodebook
    {
        std::vector<RadiationPattern> patterns;
        std::vector<PolarizationState> polarizations;

        static ModeCodebook make_default(const CodebookOptions &opt = {});

        // Patterns that the optimizer may select (internal ones excluded)
        std::vector<std::size_t> searchable_patterns() const;
        std::size_t omni_index() const;
        std::size_t da_index() const; // Throws if the codebook carries no internal DA pattern

        void validate() const;
    };

    enum class ModeScope
    {
        per_element,
        array_uniform
    };

    std::string to_string(ModeScope scope);
    ModeScope mode_scope_from_string(const std::string &s);

    struct ModeAssignment
    {
        std::vector<std::size_t> pattern_idx;
        std::vector<std::size_t> polar_idx;
        ModeScope scope = ModeScope::per_element;

        static ModeAssignment uniform(std::size_t n, std::size_t pattern, std::size_t polar);

        std::size_t size() const { return pattern_idx.size(); }
        void validate(const ModeCodebook &codebook, std::size_t num_elements) const;
        bool operator==(const ModeAssignment &) const = default;
    };

    // Array response exp(i 2pi d n sin(theta)), n = 0..N-1
    arma::cx_vec steering_vector(const ArrayGeometry &geom, double theta);

    // Throws std::invalid_argument for patterns that are not power-normalized
    double pattern_gain(const RadiationPattern &p, double theta);

    // rx^H * S * tx
    cx polarization_coupling(const PolarizationState &rx, const arma::cx_mat22 &S,
                             const PolarizationState &tx);

    cx element_response(const ArrayGeometry &geom, const ModeCodebook &codebook,
                        const ModeAssignment &assignment, std::size_t n, double theta);
}

#endif
