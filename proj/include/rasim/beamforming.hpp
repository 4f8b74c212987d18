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

#ifndef RASIM_BEAMFORMING_HPP
#define RASIM_BEAMFORMING_HPP

#include "rasim/em_domain.hpp"

#include <armadillo>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rasim
{
    // Raised when an iterative solver cannot produce a valid iterate
    class SolverError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Sum over users of log2(1 + SINR_k); F holds one precoding column per user
    double sum_rate(const arma::cx_mat &H, const arma::cx_mat &F, double noise);

    struct WmmseResult
    {
        arma::cx_mat precoder;     // N x K, ||F||_F^2 = P
        std::vector<double> trace; // sum-rate after initialization and after each iteration
        std::size_t iterations = 0;
    };

    // Weighted MMSE sum-rate maximization under a total power constraint. Starts from the
    // maximum-ratio precoder unless init is given.
    WmmseResult wmmse_precoder(const arma::cx_mat &H, double power, double noise, std::size_t max_iters, double tol,
                               const arma::cx_mat *init = nullptr);

    // sigma_t^2 |w^H H_t f|^2 / (sum_c sigma_c^2 |w^H H_c f|^2 + noise ||w||^2)
    double scnr(const arma::cx_mat &H_t, const std::vector<arma::cx_mat> &H_c, double sigma_t,
                const std::vector<double> &sigma_c, const arma::cx_vec &f, const arma::cx_vec &w, double noise);

    // w = Q^{-1} H_t f with Q = sum_c sigma_c^2 (H_c f)(H_c f)^H + noise I
    arma::cx_vec mvdr_receive_filter(const arma::cx_mat &H_t, const std::vector<arma::cx_mat> &H_c,
                                     const std::vector<double> &sigma_c, const arma::cx_vec &f, double noise);

    // Principal eigenvector of the Hermitian pencil (A, B), B positive definite. The first
    // non-negligible component is rotated to be real and positive.
    arma::cx_vec principal_generalized_eigenvector(const arma::cx_mat &A, const arma::cx_mat &B);

    struct ScnrResult
    {
        arma::cx_vec transmit; // ||f||^2 = P
        arma::cx_vec receive;  // MVDR filter for the final f
        std::vector<double> trace;
        std::size_t iterations = 0;
    };

    // Alternates MVDR receive filtering with the generalized-eigenvector transmit update, then
    // refines by BFGS ascent on the receive-optimal objective. The trace never decreases.
    // Without init, runs from several deterministic starts and returns the best run.
    ScnrResult scnr_transmit_beamformer(const arma::cx_mat &H_t, const std::vector<arma::cx_mat> &H_c, double sigma_t,
                                        const std::vector<double> &sigma_c, double noise, double power,
                                        std::size_t max_iters, double tol, const arma::cx_vec *init = nullptr);

    enum class ConnectivityKind
    {
        fully,
        sub,
        dynamic
    };

    std::string to_string(ConnectivityKind kind);
    ConnectivityKind connectivity_kind_from_string(const std::string &s);

    struct ConnectivityMask
    {
        ConnectivityKind kind = ConnectivityKind::fully;
        arma::umat mask; // N x N_RF, 1 where a phase shifter links element and chain

        std::size_t num_elements() const { return mask.n_rows; }
        std::size_t num_rf() const { return mask.n_cols; }
        std::size_t num_phase_shifters() const { return arma::accu(mask); }
        void validate() const;
    };

    // Dynamic masks start from the sub-connected layout (round-robin when N is not a multiple of N_RF)
    ConnectivityMask connectivity_mask(ConnectivityKind kind, std::size_t N, std::size_t N_RF);

    struct HybridResult
    {
        arma::cx_mat analog;   // N x N_RF, unit modulus on the mask, zero elsewhere
        arma::cx_mat baseband; // N_RF x K
        ConnectivityMask mask; // final layout (changes only for dynamic)
        double residual = 0.0; // ||F_target - F_RF F_BB||_F before power rescaling
        std::vector<double> residual_trace;
        std::size_t iterations = 0;
    };

    struct HybridOptions
    {
        std::size_t max_iters = 200;
        double tol = 1e-10;
        std::size_t reassign_period = 8;
    };

    // Alternating least-squares baseband / unit-modulus analog factorization of F_target
    // restricted to the mask. The returned stack is scaled so ||F_RF F_BB||_F^2 = power.
    HybridResult hybrid_factorize(const arma::cx_mat &F_target, const ConnectivityMask &mask, double power,
                                  const HybridOptions &opt = {}, const arma::cx_mat *init_analog = nullptr);

    struct BeamformingStack
    {
        ModeAssignment modes;
        arma::cx_mat analog;   // N x N_RF; identity for a fully-digital array
        arma::cx_mat baseband; // N_RF x K
        ConnectivityMask mask;
        double power_budget = 1.0;

        arma::cx_mat effective() const { return analog * baseband; }
        void validate() const;
    };

    struct PowerModel
    {
        double rf_chain = 0.25;
        double phase_shifter = 0.03;
        double ra_switch = 0.005;
        double static_power = 0.5;

        void validate() const;
    };

    enum class Architecture
    {
        fully_digital,
        tri_hybrid
    };

    std::string to_string(Architecture arch);
    Architecture architecture_from_string(const std::string &s);

    double power_consumption(const PowerModel &model, Architecture arch, std::size_t N, std::size_t N_RF,
                             const ConnectivityMask *mask = nullptr);
}

#endif
