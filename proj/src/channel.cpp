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

#include "rasim/channel.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rasim
{
    void PathLossParams::validate() const
    {
        if (!(d0 > 0.0))
            throw std::invalid_argument("PathLossParams: D0 must be > 0");
        if (!(exponent > 0.0))
            throw std::invalid_argument("PathLossParams: exponent must be > 0");
        if (!std::isfinite(c0_db))
            throw std::invalid_argument("PathLossParams: C0 must be finite");
    }

    double path_loss(const PathLossParams &params, double r)
    {
        if (!(r > 0.0))
            throw std::invalid_argument("path_loss: distance must be > 0");
        return std::pow(10.0, -params.c0_db / 10.0) * std::pow(r / params.d0, -params.exponent);
    }

    cx complex_gaussian(Rng &rng, double var)
    {
        if (var <= 0.0)
            return {0.0, 0.0};
        std::normal_distribution<double> nd(0.0, std::sqrt(0.5 * var));
        const double re = nd(rng);
        const double im = nd(rng);
        return {re, im};
    }

    arma::cx_mat22 sample_depolarization(Rng &rng, const DepolarizationProfile &profile)
    {
        if (profile.co_polar < 0.0 || profile.cross_polar < 0.0)
            throw std::invalid_argument("sample_depolarization: variances must be >= 0");
        arma::cx_mat22 S;
        S(0, 0) = complex_gaussian(rng, profile.co_polar);
        S(0, 1) = complex_gaussian(rng, profile.cross_polar);
        S(1, 0) = complex_gaussian(rng, profile.cross_polar);
        S(1, 1) = complex_gaussian(rng, profile.co_polar);
        return S;
    }

    void SensingEntity::validate() const
    {
        if (!(reflectivity > 0.0))
            throw std::invalid_argument("SensingEntity: reflectivity must be > 0");
        if (!(range > 0.0))
            throw std::invalid_argument("SensingEntity: range must be > 0");
    }

    void ChannelSet::validate() const
    {
        // Partial sets (comm-only or sensing-only) leave the other part empty
        const arma::uword n = target.n_elem > 0 ? target.n_rows : comm.n_cols;
        if ((target.n_elem > 0 && target.n_cols != n) || (comm.n_elem > 0 && comm.n_cols != n))
            throw std::invalid_argument("ChannelSet: inconsistent dimensions");
        if (clutter.size() != clutter_reflectivity.size())
            throw std::invalid_argument("ChannelSet: clutter reflectivity count mismatch");
        for (const auto &c : clutter)
            if (c.n_rows != n || c.n_cols != n)
                throw std::invalid_argument("ChannelSet: clutter matrix dimension mismatch");
        if (!comm.is_finite() || !target.is_finite())
            throw std::invalid_argument("ChannelSet: non-finite entries");
        if (!(noise > 0.0))
            throw std::invalid_argument("ChannelSet: noise must be > 0");
    }

    arma::cx_mat comm_channel(const ArrayGeometry &geom, const ModeCodebook &codebook, const ModeAssignment &assign_tx,
                              const std::vector<CommUser> &users, const PathLossParams &params)
    {
        geom.validate();
        if (users.empty())
            throw std::invalid_argument("comm_channel: no users");
        assign_tx.validate(codebook, geom.num_elements);

        const std::size_t N = geom.num_elements;
        arma::cx_mat H(users.size(), N, arma::fill::zeros);
        for (std::size_t k = 0; k < users.size(); ++k)
        {
            const CommUser &u = users[k];
            const double alpha = path_loss(params, u.range);
            for (const auto &path : u.paths)
            {
                // rx^H * Psi is shared by all elements on this path
                const arma::cx_rowvec rx_psi = u.rx_polar.jones.t() * path.depol;
                const double k_phase = 2.0 * pi * geom.spacing * std::sin(path.angle);
                for (std::size_t n = 0; n < N; ++n)
                {
                    const auto &tx = codebook.polarizations[assign_tx.polar_idx[n]].jones;
                    const cx c = rx_psi(0) * tx(0) + rx_psi(1) * tx(1);
                    const double g = codebook.patterns[assign_tx.pattern_idx[n]].interpolate(path.angle);
                    H(k, n) += path.gain * c * g * std::polar(1.0, k_phase * double(n));
                }
            }
            H.row(k) *= alpha;
        }
        return H;
    }

    arma::cx_mat sensing_channel(const ArrayGeometry &geom, const ModeCodebook &codebook,
                                 const ModeAssignment &assign_tx, const ModeAssignment &assign_rx,
                                 const SensingEntity &entity, const PathLossParams &params)
    {
        geom.validate();
        entity.validate();
        assign_tx.validate(codebook, geom.num_elements);
        assign_rx.validate(codebook, geom.num_elements);

        const std::size_t N = geom.num_elements;
        const double alpha = path_loss(params, entity.range);
        const arma::cx_vec a = steering_vector(geom, entity.angle);

        // Per-element effective responses: rx side carries the conjugated Jones vector
        arma::cx_mat rx_side(N, 2), tx_side(2, N);
        for (std::size_t m = 0; m < N; ++m)
        {
            const double g = codebook.patterns[assign_rx.pattern_idx[m]].interpolate(entity.angle);
            const auto &p = codebook.polarizations[assign_rx.polar_idx[m]].jones;
            rx_side(m, 0) = std::conj(p(0)) * g * a(m);
            rx_side(m, 1) = std::conj(p(1)) * g * a(m);
        }
        for (std::size_t n = 0; n < N; ++n)
        {
            const double g = codebook.patterns[assign_tx.pattern_idx[n]].interpolate(entity.angle);
            const auto &p = codebook.polarizations[assign_tx.polar_idx[n]].jones;
            tx_side(0, n) = p(0) * g * a(n);
            tx_side(1, n) = p(1) * g * a(n);
        }
        return (alpha * alpha) * (rx_side * entity.scattering * tx_side);
    }

    ChannelSet synthesize_channels(const Scenario &scenario, const ModeCodebook &codebook, const ModeAssignment &modes,
                                   double noise, ChannelParts parts)
    {
        ChannelSet cs;
        if (parts != ChannelParts::sensing_only && !scenario.users.empty())
            cs.comm = comm_channel(scenario.geometry, codebook, modes, scenario.users, scenario.path_loss);
        if (parts != ChannelParts::comm_only)
        {
            cs.target =
                sensing_channel(scenario.geometry, codebook, modes, modes, scenario.target, scenario.path_loss);
            cs.target_reflectivity = scenario.target.reflectivity;
            for (const auto &c : scenario.clutter)
            {
                cs.clutter.push_back(
                    sensing_channel(scenario.geometry, codebook, modes, modes, c, scenario.path_loss));
                cs.clutter_reflectivity.push_back(c.reflectivity);
            }
        }
        cs.noise = noise;
        return cs;
    }

    void write_matrix_dump(std::ostream &os, const std::string &name, const arma::cx_mat &m)
    {
        os << "# " << name << ' ' << m.n_rows << ' ' << m.n_cols << '\n';
        char buf[64];
        for (arma::uword r = 0; r < m.n_rows; ++r)
        {
            for (arma::uword c = 0; c < m.n_cols; ++c)
            {
                std::snprintf(buf, sizeof(buf), "%.17g %.17g", m(r, c).real(), m(r, c).imag());
                if (c > 0)
                    os << ' ';
                os << buf;
            }
            os << '\n';
        }
    }

    void write_channel_dump(std::ostream &os, const ChannelSet &channels)
    {
        if (channels.comm.n_elem > 0)
            write_matrix_dump(os, "comm", channels.comm);
        write_matrix_dump(os, "target", channels.target);
        for (std::size_t c = 0; c < channels.clutter.size(); ++c)
            write_matrix_dump(os, "clutter" + std::to_string(c), channels.clutter[c]);
    }

    std::vector<NamedMatrix> read_matrix_dump(std::istream &is)
    {
        std::vector<NamedMatrix> out;
        std::string line;
        while (std::getline(is, line))
        {
            if (line.empty())
                continue;
            if (line[0] != '#')
                throw std::runtime_error("matrix dump: expected header line, got '" + line + "'");
            std::istringstream hs(line.substr(1));
            NamedMatrix nm;
            arma::uword rows = 0, cols = 0;
            if (!(hs >> nm.name >> rows >> cols))
                throw std::runtime_error("matrix dump: malformed header '" + line + "'");
            nm.value.set_size(rows, cols);
            for (arma::uword r = 0; r < rows; ++r)
            {
                if (!std::getline(is, line))
                    throw std::runtime_error("matrix dump: truncated matrix '" + nm.name + "'");
                std::istringstream rs(line);
                for (arma::uword c = 0; c < cols; ++c)
                {
                    double re = 0.0, im = 0.0;
                    if (!(rs >> re >> im))
                        throw std::runtime_error("matrix dump: short row in '" + nm.name + "'");
                    nm.value(r, c) = cx(re, im);
                }
            }
            out.push_back(std::move(nm));
        }
        return out;
    }
}
