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

#ifndef RASIM_CHANNEL_HPP
#define RASIM_CHANNEL_HPP

#include "rasim/em_domain.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace rasim
{
    using Rng = std::mt19937_64;

    // alpha = 10^(-C0/10) * (r/D0)^(-kappa), applied as an amplitude on comm rows and squared
    // on the monostatic sensing round trip
    struct PathLossParams
    {
        double c0_db = 30.0;
        double d0 = 1.0;
        double exponent = 2.2;

        void validate() const;
    };

    double path_loss(const PathLossParams &params, double r);

    // Variances of a 2x2 depolarization matrix: co-polar on the diagonal, cross-polar off it
    struct DepolarizationProfile
    {
        double co_polar = 1.0;
        double cross_polar = 0.3;
    };

    // Circularly-symmetric complex Gaussian draw with variance var
    cx complex_gaussian(Rng &rng, double var);

    arma::cx_mat22 sample_depolarization(Rng &rng, const DepolarizationProfile &profile);

    struct MultipathComponent
    {
        cx gain;
        double angle = 0.0;
        arma::cx_mat22 depol;
    };

    struct CommUser
    {
        double range = 45.0;
        double angle = 0.0;
        std::vector<MultipathComponent> paths;
        PolarizationState rx_polar = PolarizationState::horizontal();
    };

    enum class EntityRole
    {
        target,
        clutter
    };

    struct SensingEntity
    {
        EntityRole role = EntityRole::target;
        double range = 45.0;
        double angle = 0.0;
        double reflectivity = 1.0; // sigma^2, linear power
        arma::cx_mat22 scattering = arma::eye<arma::cx_mat>(2, 2);

        void validate() const;
    };

    // Everything channel synthesis needs; produced by build_scenario()
    struct Scenario
    {
        ArrayGeometry geometry;
        PathLossParams path_loss;
        std::vector<CommUser> users;
        SensingEntity target;
        std::vector<SensingEntity> clutter;
        double power = 1.0;
        double noise_comm = 1e-14;
        double noise_radar = 1e-27;
        std::uint64_t seed = 0;
    };

    struct ChannelSet
    {
        arma::cx_mat comm;                // K x N
        arma::cx_mat target;              // N x N round trip
        std::vector<arma::cx_mat> clutter; // N x N each
        double target_reflectivity = 1.0;
        std::vector<double> clutter_reflectivity;
        double noise = 1.0;

        void validate() const;
    };

    // Row k, column n: alpha_k * sum_l beta_kl * (rx_k^H Psi_kl p_n) * g_n(theta_kl) * a_n(theta_kl)
    arma::cx_mat comm_channel(const ArrayGeometry &geom, const ModeCodebook &codebook, const ModeAssignment &assign_tx,
                              const std::vector<CommUser> &users, const PathLossParams &params);

    // Monostatic LoS round trip:
    // H[m,n] = alpha^2 * (p_m^H S p_n) * g_m(theta) g_n(theta) * exp(i 2pi d (m+n) sin theta)
    arma::cx_mat sensing_channel(const ArrayGeometry &geom, const ModeCodebook &codebook,
                                 const ModeAssignment &assign_tx, const ModeAssignment &assign_rx,
                                 const SensingEntity &entity, const PathLossParams &params);

    enum class ChannelParts
    {
        all,
        comm_only,
        sensing_only
    };

    // Same mode assignment on transmit and receive (one array does both)
    ChannelSet synthesize_channels(const Scenario &scenario, const ModeCodebook &codebook,
                                   const ModeAssignment &modes, double noise,
                                   ChannelParts parts = ChannelParts::all);

    // Matrix dump: "# <name> <rows> <cols>" then one line per row of "re im" pairs, 17 significant digits
    void write_matrix_dump(std::ostream &os, const std::string &name, const arma::cx_mat &m);
    void write_channel_dump(std::ostream &os, const ChannelSet &channels);

    struct NamedMatrix
    {
        std::string name;
        arma::cx_mat value;
    };
    std::vector<NamedMatrix> read_matrix_dump(std::istream &is);
}

#endif
