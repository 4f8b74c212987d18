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

#include "rasim/beamforming.hpp"

#include <algorithm>
#include <cmath>

namespace rasim
{
    namespace
    {
        void require_finite(const arma::cx_mat &M, const char *what)
        {
            if (!M.is_finite())
                throw std::invalid_argument(std::string(what) + ": non-finite entries");
        }

        // Rotates v so its first component with magnitude above the threshold is real positive
        void fix_phase(arma::cx_vec &v)
        {
            const double thr = 1e-12 * std::max(arma::norm(v, "inf"), 1e-300);
            for (arma::uword i = 0; i < v.n_elem; ++i)
            {
                if (std::abs(v(i)) > thr)
                {
                    v *= std::conj(v(i)) / std::abs(v(i));
                    v(i) = cx(v(i).real(), 0.0);
                    return;
                }
            }
        }

        // Transmit-side SCNR with the MVDR receiver folded in:
        // h(f) = sigma_t u^H Q^{-1} u, u = H_t f, Q = noise I + sum_c sigma_c y_c y_c^H, y_c = H_c f.
        // Evaluated at the power-normalized f; also returns the gradient with respect to
        // (Re f, Im f) of the scale-invariant map f -> h(sqrt(P) f / ||f||).
        struct ScnrProbe
        {
            double value = 0.0;
            arma::vec grad;
        };

        ScnrProbe probe_scnr(const arma::cx_mat &H_t, const std::vector<arma::cx_mat> &H_c, double sigma_t,
                             const std::vector<double> &sigma_c, double noise, double power, const arma::cx_vec &f)
        {
            const double fn = arma::norm(f);
            const double s = std::sqrt(power) / fn;
            const arma::cx_vec fh = s * f;
            const arma::cx_vec u = H_t * fh;
            arma::cx_mat Q(fh.n_elem, fh.n_elem, arma::fill::eye);
            Q *= noise;
            std::vector<arma::cx_vec> y(H_c.size());
            for (std::size_t c = 0; c < H_c.size(); ++c)
            {
                y[c] = H_c[c] * fh;
                Q += sigma_c[c] * (y[c] * y[c].t());
            }
            arma::cx_vec x;
            if (!arma::solve(x, Q, u, arma::solve_opts::likely_sympd))
                throw SolverError("scnr_transmit_beamformer: interference covariance is singular");
            ScnrProbe out;
            out.value = sigma_t * std::real(arma::cdot(u, x));
            // dh = 2 Re(c^H dfh)
            arma::cx_vec c = H_t.t() * x;
            for (std::size_t k = 0; k < H_c.size(); ++k)
                c -= (sigma_c[k] * arma::cdot(x, y[k])) * (H_c[k].t() * x);
            c *= sigma_t;
            const arma::cx_vec g = 2.0 * s * (c - (std::real(arma::cdot(c, f)) / (fn * fn)) * f);
            out.grad = arma::join_cols(arma::real(g), arma::imag(g));
            return out;
        }

        cx unit_phase(cx z, cx fallback)
        {
            const double a = std::abs(z);
            return a > 0.0 ? z / a : fallback;
        }
    }

    double sum_rate(const arma::cx_mat &H, const arma::cx_mat &F, double noise)
    {
        if (!(noise > 0.0))
            throw std::invalid_argument("sum_rate: noise power must be > 0");
        if (H.n_cols != F.n_rows || H.n_rows != F.n_cols)
            throw std::invalid_argument("sum_rate: expected H (K x N) and F (N x K)");
        const arma::cx_mat G = H * F;
        double rate = 0.0;
        for (arma::uword k = 0; k < G.n_rows; ++k)
        {
            const double total = arma::accu(arma::square(arma::abs(G.row(k))));
            const double desired = std::norm(G(k, k));
            rate += std::log2(1.0 + desired / (total - desired + noise));
        }
        return rate;
    }

    WmmseResult wmmse_precoder(const arma::cx_mat &H, double power, double noise, std::size_t max_iters, double tol,
                               const arma::cx_mat *init)
    {
        if (!(power > 0.0))
            throw std::invalid_argument("wmmse_precoder: power must be > 0");
        if (!(noise > 0.0))
            throw std::invalid_argument("wmmse_precoder: noise power must be > 0");
        require_finite(H, "wmmse_precoder");

        const arma::uword K = H.n_rows, N = H.n_cols;
        arma::cx_mat F;
        if (init != nullptr)
        {
            if (init->n_rows != N || init->n_cols != K)
                throw std::invalid_argument("wmmse_precoder: init has wrong dimensions");
            F = *init;
        }
        else
        {
            F = H.t();
        }
        double fn = arma::norm(F, "fro");
        if (!(fn > 0.0))
        {
            F.ones(N, K);
            fn = arma::norm(F, "fro");
        }
        F *= std::sqrt(power) / fn;

        WmmseResult res;
        double rate = sum_rate(H, F, noise);
        res.trace.push_back(rate);

        for (std::size_t it = 0; it < max_iters; ++it)
        {
            // Receivers and MSE weights for the current precoder
            const arma::cx_mat G = H * F;
            arma::cx_vec u(K);
            arma::vec w(K);
            for (arma::uword k = 0; k < K; ++k)
            {
                const double total = arma::accu(arma::square(arma::abs(G.row(k)))) + noise;
                u(k) = G(k, k) / total;
                const double mse = 1.0 - std::norm(G(k, k)) / total;
                w(k) = 1.0 / std::max(mse, 1e-300);
            }

            // F(mu) = (A + mu I)^{-1} R, mu >= 0 picked so ||F||^2 <= P
            arma::cx_mat A(N, N, arma::fill::zeros);
            arma::cx_mat R(N, K);
            for (arma::uword k = 0; k < K; ++k)
            {
                const arma::cx_rowvec h = H.row(k);
                A += (w(k) * std::norm(u(k))) * (h.t() * h);
                R.col(k) = h.t() * (u(k) * w(k));
            }
            A = 0.5 * (A + A.t());
            arma::vec lambda;
            arma::cx_mat U;
            if (!arma::eig_sym(lambda, U, A))
                throw SolverError("wmmse_precoder: eigendecomposition failed");
            const arma::cx_mat UR = U.t() * R;
            arma::vec proj(N);
            for (arma::uword i = 0; i < N; ++i)
                proj(i) = arma::accu(arma::square(arma::abs(UR.row(i))));

            const double lam_max = std::max(lambda.max(), 0.0);
            const double eps = 1e-12 * std::max(lam_max, 1e-300);
            auto power_at = [&](double mu) {
                double p = 0.0;
                for (arma::uword i = 0; i < N; ++i)
                {
                    const double d = std::max(lambda(i), 0.0) + mu;
                    if (d > eps)
                        p += proj(i) / (d * d);
                }
                return p;
            };

            double mu = 0.0;
            if (power_at(0.0) > power)
            {
                double lo = 0.0, hi = std::sqrt(arma::accu(proj) / power) + eps;
                for (int b = 0; b < 200 && hi - lo > 1e-15 * hi; ++b)
                {
                    const double mid = 0.5 * (lo + hi);
                    if (power_at(mid) > power)
                        lo = mid;
                    else
                        hi = mid;
                }
                mu = hi;
            }

            arma::cx_mat F_new(N, K, arma::fill::zeros);
            for (arma::uword i = 0; i < N; ++i)
            {
                const double d = std::max(lambda(i), 0.0) + mu;
                if (d > eps)
                    F_new += U.col(i) * (UR.row(i) / d);
            }
            if (!F_new.is_finite())
                throw SolverError("wmmse_precoder: non-finite precoder update");

            const double nrm = arma::norm(F_new, "fro");
            if (nrm > 0.0)
            {
                // Raising the power uniformly never lowers any SINR
                F = F_new * (std::sqrt(power) / nrm);
            }

            const double new_rate = sum_rate(H, F, noise);
            res.trace.push_back(new_rate);
            res.iterations = it + 1;
            const double delta = new_rate - rate;
            rate = new_rate;
            if (std::abs(delta) < tol)
                break;
        }
        res.precoder = F;
        return res;
    }

    double scnr(const arma::cx_mat &H_t, const std::vector<arma::cx_mat> &H_c, double sigma_t,
                const std::vector<double> &sigma_c, const arma::cx_vec &f, const arma::cx_vec &w, double noise)
    {
        if (H_c.size() != sigma_c.size())
            throw std::invalid_argument("scnr: clutter/reflectivity count mismatch");
        const double wn = arma::norm(w);
        if (!(wn > 0.0))
            throw std::invalid_argument("scnr: receive filter must be nonzero");
        const double num = sigma_t * std::norm(arma::cdot(w, H_t * f));
        double den = noise * wn * wn;
        for (std::size_t c = 0; c < H_c.size(); ++c)
            den += sigma_c[c] * std::norm(arma::cdot(w, H_c[c] * f));
        return num / den;
    }

    arma::cx_vec mvdr_receive_filter(const arma::cx_mat &H_t, const std::vector<arma::cx_mat> &H_c,
                                     const std::vector<double> &sigma_c, const arma::cx_vec &f, double noise)
    {
        if (!(noise > 0.0))
            throw std::invalid_argument("mvdr_receive_filter: noise power must be > 0");
        if (H_c.size() != sigma_c.size())
            throw std::invalid_argument("mvdr_receive_filter: clutter/reflectivity count mismatch");
        const arma::uword N = H_t.n_rows;
        const arma::cx_vec u = H_t * f;
        arma::cx_mat Q(N, N, arma::fill::eye);
        Q *= noise;
        for (std::size_t c = 0; c < H_c.size(); ++c)
        {
            const arma::cx_vec v = H_c[c] * f;
            Q += sigma_c[c] * (v * v.t());
        }
        arma::cx_vec w;
        if (!arma::solve(w, Q, u, arma::solve_opts::likely_sympd))
            throw SolverError("mvdr_receive_filter: interference covariance is singular");
        return w;
    }

    arma::cx_vec principal_generalized_eigenvector(const arma::cx_mat &A, const arma::cx_mat &B)
    {
        if (A.n_rows != A.n_cols || B.n_rows != B.n_cols || A.n_rows != B.n_rows)
            throw std::invalid_argument("principal_generalized_eigenvector: dimension mismatch");
        arma::cx_mat L;
        if (!arma::chol(L, arma::cx_mat(0.5 * (B + B.t())), "lower"))
            throw SolverError("principal_generalized_eigenvector: B is not positive definite");
        const arma::cx_mat Linv = arma::inv(arma::trimatl(L));
        arma::cx_mat C = Linv * A * Linv.t();
        C = 0.5 * (C + C.t());
        arma::vec lambda;
        arma::cx_mat V;
        if (!arma::eig_sym(lambda, V, C))
            throw SolverError("principal_generalized_eigenvector: eigensolver did not converge");
        arma::cx_vec x = Linv.t() * V.col(V.n_cols - 1);
        x /= arma::norm(x);
        fix_phase(x);
        return x;
    }

    namespace
    {
        // One ascent run from a given transmit vector
        ScnrResult scnr_single_start(const arma::cx_mat &H_t, const std::vector<arma::cx_mat> &H_c, double sigma_t,
                                     const std::vector<double> &sigma_c, double noise, double power,
                                     std::size_t max_iters, double tol, arma::cx_vec f)
        {
            const arma::uword N = H_t.n_cols;
            double fn = arma::norm(f);
            if (!(fn > 0.0))
            {
                f.ones(N);
                fn = arma::norm(f);
            }
            f *= std::sqrt(power) / fn;
            fix_phase(f);

            ScnrResult res;
            arma::cx_vec w = mvdr_receive_filter(H_t, H_c, sigma_c, f, noise);
            double value = scnr(H_t, H_c, sigma_t, sigma_c, f, w, noise);
            res.trace.push_back(value);

            // One exact transmit update for a fixed receive filter. With w fixed the objective is the
            // Rayleigh quotient of (A, B), A = sigma_t v v^H rank one, so the principal generalized
            // eigenvector is B^{-1} v.
            auto transmit_step = [&](const arma::cx_vec &w_fix) -> std::optional<arma::cx_vec> {
                const arma::cx_vec v = H_t.t() * w_fix;
                if (!(arma::norm(v) > 0.0))
                    return std::nullopt;
                arma::cx_mat B(N, N, arma::fill::eye);
                B *= noise * std::pow(arma::norm(w_fix), 2) / power;
                for (std::size_t c = 0; c < H_c.size(); ++c)
                {
                    const arma::cx_vec z = H_c[c].t() * w_fix;
                    B += sigma_c[c] * (z * z.t());
                }
                arma::cx_vec f_new;
                if (!arma::solve(f_new, B, v, arma::solve_opts::likely_sympd) || !f_new.is_finite())
                    throw SolverError("scnr_transmit_beamformer: transmit eigen step failed");
                const double nrm = arma::norm(f_new);
                if (!(nrm > 0.0))
                    throw SolverError("scnr_transmit_beamformer: degenerate transmit eigenvector");
                f_new *= std::sqrt(power) / nrm;
                fix_phase(f_new);
                return f_new;
            };

            // Safeguarded extrapolation along the last step; kept only when it beats the plain update
            double beta = 1.0;
            bool converged = false;
            const std::size_t warmup = std::min<std::size_t>(max_iters, 10);
            for (std::size_t it = 0; it < warmup; ++it)
            {
                auto step = transmit_step(w);
                if (!step)
                    break;
                arma::cx_vec f_new = std::move(*step);
                arma::cx_vec w_new = mvdr_receive_filter(H_t, H_c, sigma_c, f_new, noise);
                double new_value = scnr(H_t, H_c, sigma_t, sigma_c, f_new, w_new, noise);
                if (new_value >= value)
                {
                    arma::cx_vec f_ext = f_new + beta * (f_new - f);
                    const double ne = arma::norm(f_ext);
                    bool taken = false;
                    if (ne > 0.0 && f_ext.is_finite())
                    {
                        f_ext *= std::sqrt(power) / ne;
                        fix_phase(f_ext);
                        arma::cx_vec w_ext = mvdr_receive_filter(H_t, H_c, sigma_c, f_ext, noise);
                        const double ext_value = scnr(H_t, H_c, sigma_t, sigma_c, f_ext, w_ext, noise);
                        if (ext_value > new_value)
                        {
                            f_new = std::move(f_ext);
                            w_new = std::move(w_ext);
                            new_value = ext_value;
                            taken = true;
                        }
                    }
                    beta = taken ? std::min(2.0 * beta, 64.0) : 1.0;
                }
                res.iterations = it + 1;
                if (new_value < value)
                {
                    // Only rounding can get here; keep the incumbent so the trace stays monotone
                    res.trace.push_back(value);
                    break;
                }
                f = std::move(f_new);
                w = std::move(w_new);
                const double delta = new_value - value;
                value = new_value;
                res.trace.push_back(value);
                if (delta < tol * value)
                {
                    converged = true;
                    break;
                }
            }

            // The alternating updates zigzag when transmit and receive nulls are coupled; finish with
            // BFGS ascent on the receive-optimal objective. Armijo steps keep the trace monotone.
            if (!converged && res.iterations == warmup)
            {
                const arma::uword D = 2 * N;
                arma::vec x = arma::join_cols(arma::real(f), arma::imag(f));
                ScnrProbe cur = probe_scnr(H_t, H_c, sigma_t, sigma_c, noise, power, f);
                arma::mat Hinv(D, D, arma::fill::eye);
                bool scaled = false;
                for (std::size_t it = warmup; it < max_iters; ++it)
                {
                    arma::vec d = Hinv * cur.grad;
                    double slope = arma::dot(cur.grad, d);
                    if (!(slope > 0.0))
                    {
                        Hinv.eye();
                        scaled = false;
                        d = cur.grad;
                        slope = arma::dot(d, d);
                    }
                    if (!(slope > 0.0))
                        break;
                    double t = 1.0;
                    if (!scaled)
                        t = 0.1 * arma::norm(x) / std::max(arma::norm(d), 1e-300);
                    bool accepted = false;
                    arma::vec x_new;
                    ScnrProbe nxt;
                    for (int ls = 0; ls < 50; ++ls, t *= 0.5)
                    {
                        x_new = x + t * d;
                        const arma::cx_vec fc = arma::cx_vec(x_new.head(N), x_new.tail(N));
                        if (!(arma::norm(fc) > 0.0) || !fc.is_finite())
                            continue;
                        nxt = probe_scnr(H_t, H_c, sigma_t, sigma_c, noise, power, fc);
                        if (nxt.value >= cur.value + 1e-4 * t * slope)
                        {
                            accepted = true;
                            break;
                        }
                    }
                    if (!accepted)
                        break;
                    // Keep iterates on the power sphere; the objective is scale invariant
                    x_new *= std::sqrt(power) / arma::norm(x_new);
                    const arma::vec sv = x_new - x;
                    const arma::vec yv = cur.grad - nxt.grad; // gradient of -h
                    const double sy = arma::dot(sv, yv);
                    if (sy > 1e-300)
                    {
                        if (!scaled)
                        {
                            Hinv *= sy / arma::dot(yv, yv);
                            scaled = true;
                        }
                        const double rho = 1.0 / sy;
                        const arma::mat I = arma::eye(D, D);
                        Hinv = (I - rho * sv * yv.t()) * Hinv * (I - rho * yv * sv.t()) + rho * sv * sv.t();
                    }
                    const double delta = nxt.value - cur.value;
                    x = std::move(x_new);
                    cur = std::move(nxt);
                    res.iterations = it + 1;
                    res.trace.push_back(std::max(cur.value, res.trace.back()));
                    if (delta < tol * cur.value)
                        break;
                }
                arma::cx_vec f_fin = arma::cx_vec(x.head(N), x.tail(N));
                f_fin *= std::sqrt(power) / arma::norm(f_fin);
                fix_phase(f_fin);
                arma::cx_vec w_fin = mvdr_receive_filter(H_t, H_c, sigma_c, f_fin, noise);
                const double v_fin = scnr(H_t, H_c, sigma_t, sigma_c, f_fin, w_fin, noise);
                if (v_fin >= value)
                {
                    f = std::move(f_fin);
                    w = std::move(w_fin);
                    value = v_fin;
                }
            }
            res.transmit = f;
            res.receive = w;
            return res;
        }

        // Deterministic starting points. Strong clutter makes the objective sharply multimodal around
        // transmit nulls, so besides the clutter-free directions (right singular vectors of H_t) the
        // generalized eigenvectors of (H_t^H H_t, sum sigma_c H_c^H H_c + eps I) are tried at a few
        // regularization levels. Near-parallel candidates are dropped.
        std::vector<arma::cx_vec> scnr_starts(const arma::cx_mat &H_t, const std::vector<arma::cx_mat> &H_c,
                                              const std::vector<double> &sigma_c, double noise, double power)
        {
            const arma::uword N = H_t.n_cols;
            std::vector<arma::cx_vec> starts;
            auto add = [&](arma::cx_vec v) {
                const double n = arma::norm(v);
                if (!(n > 0.0) || !v.is_finite())
                    return;
                v /= n;
                for (const auto &s : starts)
                    if (std::abs(arma::cdot(s, v)) > 0.999)
                        return;
                starts.push_back(std::move(v));
            };

            arma::cx_mat U, V;
            arma::vec s;
            if (arma::svd(U, s, V, H_t) && s.n_elem > 0 && s(0) > 0.0)
                for (arma::uword k = 0; k < std::min<arma::uword>(s.n_elem, 3); ++k)
                    if (s(k) > 1e-6 * s(0))
                        add(V.col(k));
            if (starts.empty())
                add(arma::cx_vec(N, arma::fill::ones));

            if (!H_c.empty())
            {
                const arma::cx_mat A = H_t.t() * H_t;
                arma::cx_mat C(N, N, arma::fill::zeros);
                for (std::size_t c = 0; c < H_c.size(); ++c)
                    C += sigma_c[c] * (H_c[c].t() * H_c[c]);
                for (double m : {1.0, 1e2, 1e4})
                {
                    try
                    {
                        add(principal_generalized_eigenvector(
                            A, C + (m * noise / power) * arma::eye<arma::cx_mat>(N, N)));
                    }
                    catch (const SolverError &)
                    {
                        // Ill-conditioned pencil: skip this start
                    }
                }
            }
            return starts;
        }
    }

    ScnrResult scnr_transmit_beamformer(const arma::cx_mat &H_t, const std::vector<arma::cx_mat> &H_c, double sigma_t,
                                        const std::vector<double> &sigma_c, double noise, double power,
                                        std::size_t max_iters, double tol, const arma::cx_vec *init)
    {
        if (!(power > 0.0))
            throw std::invalid_argument("scnr_transmit_beamformer: power must be > 0");
        if (!(noise > 0.0))
            throw std::invalid_argument("scnr_transmit_beamformer: noise power must be > 0");
        require_finite(H_t, "scnr_transmit_beamformer");
        for (const auto &c : H_c)
            require_finite(c, "scnr_transmit_beamformer");

        if (init != nullptr)
            return scnr_single_start(H_t, H_c, sigma_t, sigma_c, noise, power, max_iters, tol, *init);

        // Best run wins; ties keep the earlier start
        ScnrResult best;
        bool have = false;
        for (const auto &f0 : scnr_starts(H_t, H_c, sigma_c, noise, power))
        {
            ScnrResult r = scnr_single_start(H_t, H_c, sigma_t, sigma_c, noise, power, max_iters, tol, f0);
            if (!have || r.trace.back() > best.trace.back())
            {
                best = std::move(r);
                have = true;
            }
        }
        return best;
    }

    std::string to_string(ConnectivityKind kind)
    {
        switch (kind)
        {
        case ConnectivityKind::fully:
            return "fully";
        case ConnectivityKind::sub:
            return "sub";
        default:
            return "dynamic";
        }
    }

    ConnectivityKind connectivity_kind_from_string(const std::string &s)
    {
        if (s == "fully")
            return ConnectivityKind::fully;
        if (s == "sub")
            return ConnectivityKind::sub;
        if (s == "dynamic")
            return ConnectivityKind::dynamic;
        throw std::invalid_argument("unknown connectivity kind '" + s + "'");
    }

    void ConnectivityMask::validate() const
    {
        const arma::uword N = mask.n_rows, R = mask.n_cols;
        if (N == 0 || R == 0 || R > N)
            throw std::invalid_argument("ConnectivityMask: need 1 <= N_RF <= N");
        if (arma::any(arma::vectorise(mask) > 1u))
            throw std::invalid_argument("ConnectivityMask: mask must be binary");
        switch (kind)
        {
        case ConnectivityKind::fully:
            if (arma::accu(mask) != N * R)
                throw std::invalid_argument("ConnectivityMask: fully-connected mask must be all ones");
            break;
        case ConnectivityKind::sub:
        {
            if (N % R != 0)
                throw std::invalid_argument("ConnectivityMask: sub-connected requires N divisible by N_RF");
            const arma::uword per = N / R;
            for (arma::uword n = 0; n < N; ++n)
                for (arma::uword r = 0; r < R; ++r)
                    if (mask(n, r) != (n / per == r ? 1u : 0u))
                        throw std::invalid_argument("ConnectivityMask: sub-connected mask is not block diagonal");
            break;
        }
        case ConnectivityKind::dynamic:
            for (arma::uword n = 0; n < N; ++n)
                if (arma::accu(mask.row(n)) != 1u)
                    throw std::invalid_argument("ConnectivityMask: dynamic mask needs exactly one link per element");
            break;
        }
    }

    ConnectivityMask connectivity_mask(ConnectivityKind kind, std::size_t N, std::size_t N_RF)
    {
        if (N_RF < 1 || N_RF > N)
            throw std::invalid_argument("connectivity_mask: need 1 <= N_RF <= N (N=" + std::to_string(N) +
                                        ", N_RF=" + std::to_string(N_RF) + ")");
        ConnectivityMask m{kind, arma::umat(N, N_RF, arma::fill::zeros)};
        switch (kind)
        {
        case ConnectivityKind::fully:
            m.mask.ones();
            break;
        case ConnectivityKind::sub:
            if (N % N_RF != 0)
                throw std::invalid_argument("connectivity_mask: sub-connected requires N mod N_RF = 0 (N=" +
                                            std::to_string(N) + ", N_RF=" + std::to_string(N_RF) + ")");
            for (std::size_t n = 0; n < N; ++n)
                m.mask(n, n / (N / N_RF)) = 1;
            break;
        case ConnectivityKind::dynamic:
            for (std::size_t n = 0; n < N; ++n)
                m.mask(n, n * N_RF / N) = 1;
            break;
        }
        return m;
    }

    HybridResult hybrid_factorize(const arma::cx_mat &F_target, const ConnectivityMask &mask, double power,
                                  const HybridOptions &opt, const arma::cx_mat *init_analog)
    {
        mask.validate();
        require_finite(F_target, "hybrid_factorize");
        if (!(power > 0.0))
            throw std::invalid_argument("hybrid_factorize: power must be > 0");
        const arma::uword N = F_target.n_rows, K = F_target.n_cols, R = mask.num_rf();
        if (mask.num_elements() != N)
            throw std::invalid_argument("hybrid_factorize: mask rows must equal the number of elements");

        HybridResult res;
        res.mask = mask;
        arma::cx_mat &FR = res.analog;
        FR.zeros(N, R);
        for (arma::uword n = 0; n < N; ++n)
            for (arma::uword r = 0; r < R; ++r)
                if (mask.mask(n, r))
                {
                    const cx dft = std::polar(1.0, -2.0 * pi * double(n * r) / double(N));
                    FR(n, r) = init_analog != nullptr ? unit_phase((*init_analog)(n, r), dft) : dft;
                }

        const double target_norm = arma::norm(F_target, "fro");
        if (!(target_norm > 0.0))
        {
            res.baseband.zeros(R, K);
            res.residual = 0.0;
            res.residual_trace.push_back(0.0);
            return res;
        }

        arma::cx_mat &FB = res.baseband;
        auto ls_baseband = [&]() { FB = arma::pinv(FR) * F_target; };
        auto residual = [&]() { return arma::norm(F_target - FR * FB, "fro"); };

        // Exact coordinate update of each unit-modulus entry with the rest of its row fixed
        auto update_analog = [&]() {
            for (arma::uword n = 0; n < N; ++n)
            {
                arma::cx_rowvec e = F_target.row(n) - FR.row(n) * FB;
                for (arma::uword r = 0; r < R; ++r)
                {
                    if (!res.mask.mask(n, r))
                        continue;
                    e += FR(n, r) * FB.row(r);
                    const cx x = unit_phase(arma::cdot(FB.row(r), e), FR(n, r));
                    FR(n, r) = x;
                    e -= x * FB.row(r);
                }
            }
        };

        // Moves each element to the chain that minimizes its row residual for fixed F_BB
        auto reassign = [&]() {
            bool changed = false;
            for (arma::uword n = 0; n < N; ++n)
            {
                const arma::cx_rowvec t = F_target.row(n);
                const double current = std::pow(arma::norm(t - FR.row(n) * FB), 2);
                const double tt = std::pow(arma::norm(t), 2);
                double best = current;
                arma::uword best_r = R;
                cx best_x;
                for (arma::uword r = 0; r < R; ++r)
                {
                    const cx ip = arma::cdot(FB.row(r), t);
                    const double cand = tt + std::pow(arma::norm(FB.row(r)), 2) - 2.0 * std::abs(ip);
                    if (cand < best - 1e-14 * std::max(tt, 1e-300))
                    {
                        best = cand;
                        best_r = r;
                        best_x = unit_phase(ip, cx(1.0, 0.0));
                    }
                }
                if (best_r < R)
                {
                    res.mask.mask.row(n).zeros();
                    res.mask.mask(n, best_r) = 1;
                    FR.row(n).zeros();
                    FR(n, best_r) = best_x;
                    changed = true;
                }
            }
            return changed;
        };

        ls_baseband();
        double prev = residual();
        res.residual_trace.push_back(prev);
        for (std::size_t it = 0; it < opt.max_iters; ++it)
        {
            update_analog();
            ls_baseband();
            double cur = residual();
            res.iterations = it + 1;
            bool converged = prev - cur <= opt.tol * target_norm;
            const bool periodic = opt.reassign_period > 0 && (it + 1) % opt.reassign_period == 0;
            if (mask.kind == ConnectivityKind::dynamic && (periodic || converged))
            {
                if (reassign())
                {
                    ls_baseband();
                    cur = residual();
                    converged = false;
                }
            }
            res.residual_trace.push_back(cur);
            prev = cur;
            if (converged)
                break;
        }
        res.residual = prev;

        const double eff = arma::norm(FR * FB, "fro");
        if (eff > 0.0)
            FB *= std::sqrt(power) / eff;
        return res;
    }

    void BeamformingStack::validate() const
    {
        mask.validate();
        if (analog.n_rows != mask.num_elements() || analog.n_cols != mask.num_rf() || baseband.n_rows != analog.n_cols)
            throw std::invalid_argument("BeamformingStack: dimension mismatch");
        for (arma::uword n = 0; n < analog.n_rows; ++n)
            for (arma::uword r = 0; r < analog.n_cols; ++r)
            {
                const double a = std::abs(analog(n, r));
                if (mask.mask(n, r) ? std::abs(a - 1.0) > 1e-9 : a != 0.0)
                    throw std::invalid_argument("BeamformingStack: analog layer violates the connectivity mask");
            }
        if (std::pow(arma::norm(effective(), "fro"), 2) > power_budget + 1e-9)
            throw std::invalid_argument("BeamformingStack: power budget exceeded");
    }

    void PowerModel::validate() const
    {
        if (rf_chain < 0.0 || phase_shifter < 0.0 || ra_switch < 0.0 || static_power < 0.0)
            throw std::invalid_argument("PowerModel: all component powers must be >= 0");
    }

    std::string to_string(Architecture arch)
    {
        return arch == Architecture::fully_digital ? "fully_digital" : "tri_hybrid";
    }

    Architecture architecture_from_string(const std::string &s)
    {
        if (s == "fully_digital")
            return Architecture::fully_digital;
        if (s == "tri_hybrid")
            return Architecture::tri_hybrid;
        throw std::invalid_argument("unknown architecture '" + s + "'");
    }

    double power_consumption(const PowerModel &model, Architecture arch, std::size_t N, std::size_t N_RF,
                             const ConnectivityMask *mask)
    {
        const double switches = double(N) * model.ra_switch;
        if (arch == Architecture::fully_digital)
            return model.static_power + double(N) * model.rf_chain + switches;
        const double shifters = mask != nullptr ? double(mask->num_phase_shifters()) : double(N * N_RF);
        return model.static_power + double(N_RF) * model.rf_chain + shifters * model.phase_shifter + switches;
    }
}
