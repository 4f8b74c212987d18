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

#include "rasim/em_domain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rasim
{
    namespace
    {
        constexpr double grid_step = 2.0 * pi / double(pattern_grid_size - 1);

        double trapezoid_power(const std::vector<double> &g)
        {
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < g.size(); ++i)
                acc += 0.5 * (g[i] * g[i] + g[i + 1] * g[i + 1]) * grid_step;
            return acc / (2.0 * pi);
        }

        // Wraps into [-pi, pi)
        double wrap_angle(double t)
        {
            double w = std::fmod(t + pi, 2.0 * pi);
            if (w < 0.0)
                w += 2.0 * pi;
            return w - pi;
        }
    }

    void ArrayGeometry::validate() const
    {
        if (num_elements < 1)
            throw std::invalid_argument("ArrayGeometry: num_elements must be >= 1");
        if (!(spacing > 0.0) || !std::isfinite(spacing))
            throw std::invalid_argument("ArrayGeometry: spacing must be > 0");
    }

    std::string to_string(PatternKind kind)
    {
        return kind == PatternKind::omni ? "omni" : "directional";
    }

    PatternKind pattern_kind_from_string(const std::string &s)
    {
        if (s == "omni")
            return PatternKind::omni;
        if (s == "directional")
            return PatternKind::directional;
        throw std::invalid_argument("unknown pattern kind '" + s + "'");
    }

    double pattern_grid_angle(std::size_t i)
    {
        return -pi + double(i) * grid_step;
    }

    RadiationPattern RadiationPattern::omni()
    {
        RadiationPattern p;
        p.kind_ = PatternKind::omni;
        p.samples_.assign(pattern_grid_size, 1.0);
        p.power_ = trapezoid_power(p.samples_);
        return p;
    }

    double RadiationPattern::width_scale_for_beamwidth(double beamwidth, double exponent)
    {
        if (!(beamwidth > 0.0) || !(exponent > 0.0))
            throw std::invalid_argument("width_scale_for_beamwidth: beamwidth and exponent must be > 0");
        // |g|^2 = cos^(2q)(s * bw / 2) = 1/2
        return std::acos(std::pow(0.5, 1.0 / (2.0 * exponent))) / (0.5 * beamwidth);
    }

    RadiationPattern RadiationPattern::directional(double boresight, double exponent, double width_scale,
                                                   double floor)
    {
        if (exponent < 0.0 || !(width_scale > 0.0) || floor < 0.0)
            throw std::invalid_argument("RadiationPattern::directional: invalid shape parameters");

        const double half_window = pi / (2.0 * width_scale);
        std::vector<double> shape(pattern_grid_size, 0.0);
        std::vector<bool> inside(pattern_grid_size, false);
        for (std::size_t i = 0; i < pattern_grid_size; ++i)
        {
            const double d = wrap_angle(pattern_grid_angle(i) - boresight);
            if (std::abs(d) <= half_window)
            {
                inside[i] = true;
                shape[i] = std::pow(std::cos(width_scale * d), exponent);
            }
        }

        // Solve c^2 * P_in + floor^2 * P_out = 1 on the trapezoid grid
        std::vector<double> in_part(pattern_grid_size), out_part(pattern_grid_size);
        for (std::size_t i = 0; i < pattern_grid_size; ++i)
        {
            in_part[i] = inside[i] ? shape[i] : 0.0;
            out_part[i] = inside[i] ? 0.0 : 1.0;
        }
        double p_in = 0.0, p_out = 0.0;
        for (std::size_t i = 0; i + 1 < pattern_grid_size; ++i)
        {
            p_in += 0.5 * (in_part[i] * in_part[i] + in_part[i + 1] * in_part[i + 1]) * grid_step;
            p_out += 0.5 * (out_part[i] + out_part[i + 1]) * grid_step;
        }
        p_in /= 2.0 * pi;
        p_out /= 2.0 * pi;
        const double rest = 1.0 - floor * floor * p_out;
        if (!(p_in > 0.0) || !(rest > 0.0))
            throw std::invalid_argument("RadiationPattern::directional: pattern cannot be normalized");
        const double c = std::sqrt(rest / p_in);

        RadiationPattern p;
        p.kind_ = PatternKind::directional;
        p.boresight_ = boresight;
        p.exponent_ = exponent;
        p.width_scale_ = width_scale;
        p.norm_const_ = c;
        p.samples_.resize(pattern_grid_size);
        for (std::size_t i = 0; i < pattern_grid_size; ++i)
            p.samples_[i] = inside[i] ? c * shape[i] : floor;
        p.power_ = trapezoid_power(p.samples_);
        return p;
    }

    RadiationPattern RadiationPattern::from_samples(PatternKind kind, double boresight, double exponent,
                                                    double width_scale, std::vector<double> samples,
                                                    bool internal)
    {
        if (samples.size() != pattern_grid_size)
            throw std::invalid_argument("RadiationPattern: expected " + std::to_string(pattern_grid_size) +
                                        " samples, got " + std::to_string(samples.size()));
        for (double g : samples)
            if (!(g >= 0.0) || !std::isfinite(g))
                throw std::invalid_argument("RadiationPattern: samples must be finite and >= 0");

        RadiationPattern p;
        p.kind_ = kind;
        p.boresight_ = boresight;
        p.exponent_ = exponent;
        p.width_scale_ = width_scale;
        p.internal_ = internal;
        p.norm_const_ = kind == PatternKind::omni ? 1.0 : *std::max_element(samples.begin(), samples.end());
        p.samples_ = std::move(samples);
        p.power_ = trapezoid_power(p.samples_);
        return p;
    }

    RadiationPattern RadiationPattern::as_internal() const
    {
        RadiationPattern p = *this;
        p.internal_ = true;
        return p;
    }

    bool RadiationPattern::normalized(double tol) const
    {
        return std::abs(power_ - 1.0) <= tol;
    }

    double RadiationPattern::interpolate(double theta) const
    {
        if (kind_ == PatternKind::omni)
            return 1.0;
        const double u = (wrap_angle(theta) + pi) / grid_step;
        std::size_t i = std::size_t(std::floor(u));
        if (i >= pattern_grid_size - 1)
            i = pattern_grid_size - 2;
        const double t = u - double(i);
        const double a = samples_[i], b = samples_[i + 1];
        return a + t * (b - a);
    }

    PolarizationState PolarizationState::horizontal()
    {
        return {"H", arma::cx_vec2{cx(1.0, 0.0), cx(0.0, 0.0)}};
    }

    PolarizationState PolarizationState::vertical()
    {
        return {"V", arma::cx_vec2{cx(0.0, 0.0), cx(1.0, 0.0)}};
    }

    PolarizationState PolarizationState::slant45()
    {
        const double h = 1.0 / std::sqrt(2.0);
        return {"S45", arma::cx_vec2{cx(h, 0.0), cx(h, 0.0)}};
    }

    PolarizationState PolarizationState::rhcp()
    {
        const double h = 1.0 / std::sqrt(2.0);
        return {"RHCP", arma::cx_vec2{cx(h, 0.0), cx(0.0, -h)}};
    }

    PolarizationState PolarizationState::from_jones(std::string name, cx h, cx v)
    {
        PolarizationState p{std::move(name), arma::cx_vec2{h, v}};
        p.validate();
        return p;
    }

    void PolarizationState::validate() const
    {
        const double n = std::sqrt(std::norm(jones(0)) + std::norm(jones(1)));
        if (std::abs(n - 1.0) > 1e-12)
            throw std::invalid_argument("PolarizationState '" + name + "': Jones vector norm " +
                                        std::to_string(n) + " is not 1");
    }

    ModeCodebook ModeCodebook::make_default(const CodebookOptions &opt)
    {
        ModeCodebook cb;
        const double s = RadiationPattern::width_scale_for_beamwidth(deg2rad(opt.beamwidth_deg), opt.exponent);
        cb.patterns.push_back(RadiationPattern::omni());
        for (double b : opt.boresights_deg)
            cb.patterns.push_back(RadiationPattern::directional(deg2rad(b), opt.exponent, s, opt.floor));
        cb.patterns.push_back(
            RadiationPattern::directional(deg2rad(opt.da_boresight_deg), opt.exponent, s, opt.floor).as_internal());
        cb.polarizations = {PolarizationState::horizontal(), PolarizationState::vertical(),
                            PolarizationState::slant45(), PolarizationState::rhcp()};
        return cb;
    }

    std::vector<std::size_t> ModeCodebook::searchable_patterns() const
    {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < patterns.size(); ++i)
            if (!patterns[i].internal())
                out.push_back(i);
        return out;
    }

    std::size_t ModeCodebook::omni_index() const
    {
        for (std::size_t i = 0; i < patterns.size(); ++i)
            if (patterns[i].kind() == PatternKind::omni && !patterns[i].internal())
                return i;
        throw std::invalid_argument("ModeCodebook: no omni pattern");
    }

    std::size_t ModeCodebook::da_index() const
    {
        for (std::size_t i = 0; i < patterns.size(); ++i)
            if (patterns[i].internal() && patterns[i].kind() == PatternKind::directional)
                return i;
        throw std::invalid_argument("ModeCodebook: no internal directional (DA) pattern");
    }

    void ModeCodebook::validate() const
    {
        if (patterns.empty() || polarizations.empty())
            throw std::invalid_argument("ModeCodebook: needs at least one pattern and one polarization");
        for (std::size_t i = 0; i < patterns.size(); ++i)
            if (!patterns[i].normalized())
                throw std::invalid_argument("ModeCodebook: pattern " + std::to_string(i) +
                                            " is not normalized (power " +
                                            std::to_string(patterns[i].radiated_power()) + ")");
        for (const auto &p : polarizations)
            p.validate();
    }

    std::string to_string(ModeScope scope)
    {
        return scope == ModeScope::per_element ? "per_element" : "array_uniform";
    }

    ModeScope mode_scope_from_string(const std::string &s)
    {
        if (s == "per_element")
            return ModeScope::per_element;
        if (s == "array_uniform")
            return ModeScope::array_uniform;
        throw std::invalid_argument("unknown mode scope '" + s + "'");
    }

    ModeAssignment ModeAssignment::uniform(std::size_t n, std::size_t pattern, std::size_t polar)
    {
        return {std::vector<std::size_t>(n, pattern), std::vector<std::size_t>(n, polar), ModeScope::array_uniform};
    }

    void ModeAssignment::validate(const ModeCodebook &codebook, std::size_t num_elements) const
    {
        if (pattern_idx.size() != num_elements || polar_idx.size() != num_elements)
            throw std::invalid_argument("ModeAssignment: expected " + std::to_string(num_elements) +
                                        " entries per index list");
        for (std::size_t n = 0; n < num_elements; ++n)
        {
            if (pattern_idx[n] >= codebook.patterns.size())
                throw std::invalid_argument("ModeAssignment: pattern index out of range at element " +
                                            std::to_string(n));
            if (polar_idx[n] >= codebook.polarizations.size())
                throw std::invalid_argument("ModeAssignment: polarization index out of range at element " +
                                            std::to_string(n));
        }
        if (scope == ModeScope::array_uniform && num_elements > 0)
        {
            for (std::size_t n = 1; n < num_elements; ++n)
                if (pattern_idx[n] != pattern_idx[0] || polar_idx[n] != polar_idx[0])
                    throw std::invalid_argument("ModeAssignment: array_uniform scope requires equal entries");
        }
    }

    arma::cx_vec steering_vector(const ArrayGeometry &geom, double theta)
    {
        arma::cx_vec a(geom.num_elements);
        const double k = 2.0 * pi * geom.spacing * std::sin(theta);
        for (std::size_t n = 0; n < geom.num_elements; ++n)
            a(n) = std::polar(1.0, k * double(n));
        return a;
    }

    double pattern_gain(const RadiationPattern &p, double theta)
    {
        if (!p.normalized())
            throw std::invalid_argument("pattern_gain: pattern is not normalized");
        return p.interpolate(theta);
    }

    cx polarization_coupling(const PolarizationState &rx, const arma::cx_mat22 &S, const PolarizationState &tx)
    {
        return arma::cdot(rx.jones, S * tx.jones);
    }

    cx element_response(const ArrayGeometry &geom, const ModeCodebook &codebook, const ModeAssignment &assignment,
                        std::size_t n, double theta)
    {
        if (n >= geom.num_elements || n >= assignment.size())
            throw std::out_of_range("element_response: element index " + std::to_string(n) + " out of range");
        const std::size_t pi_n = assignment.pattern_idx[n];
        if (pi_n >= codebook.patterns.size())
            throw std::out_of_range("element_response: pattern index out of range");
        const double k = 2.0 * pi * geom.spacing * std::sin(theta);
        return pattern_gain(codebook.patterns[pi_n], theta) * std::polar(1.0, k * double(n));
    }
}
