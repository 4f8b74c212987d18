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

#include "rasim/scenario.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

using namespace rasim;

namespace
{
    // Sample quantile by the (n - 1) q linear rule, computed independently of the library
    double ref_quantile(std::vector<double> v, double q)
    {
        std::sort(v.begin(), v.end());
        const double h = (double(v.size()) - 1.0) * q;
        const double lo = v[std::size_t(h)];
        const double hi = v[std::min(v.size() - 1, std::size_t(h) + 1)];
        return lo + (h - std::floor(h)) * (hi - lo);
    }

    SweepSpec small_angle_spec()
    {
        SweepSpec s;
        s.kind = SweepKind::angle;
        s.grid = {-40.0, 0.0, 35.0};
        s.seeds_per_point = 2;
        return s;
    }

    ScenarioConfig small_config()
    {
        ScenarioConfig c;
        c.num_elements = 4;
        c.seed = 17;
        return c;
    }
}

TEST_CASE("position sampling")
{
    ScenarioConfig cfg;
    Rng rng(42);
    const auto pos = sample_positions(cfg, rng, 200000);
    double r2 = 0.0, rmin = 1e9, rmax = 0.0, amin = 1e9, amax = -1e9;
    for (const auto &p : pos)
    {
        rmin = std::min(rmin, p.range);
        rmax = std::max(rmax, p.range);
        amin = std::min(amin, p.angle);
        amax = std::max(amax, p.angle);
        r2 += p.range * p.range;
    }
    CHECK(rmin >= 30.0);
    CHECK(rmax <= 60.0);
    CHECK(amin >= -pi / 3.0);
    CHECK(amax <= pi / 3.0);
    // Density proportional to r on [30, 60]: E[r^2] = (30^2 + 60^2) / 2
    CHECK(std::abs(r2 / double(pos.size()) - 2250.0) / 2250.0 < 0.01);

    cfg.radius_min = cfg.radius_max = 40.0;
    cfg.angle_min = cfg.angle_max = 0.25;
    for (const auto &p : sample_positions(cfg, rng, 100))
    {
        CHECK(p.range == 40.0);
        CHECK(p.angle == 0.25);
    }
}

TEST_CASE("scenario construction")
{
    ScenarioConfig cfg;
    cfg.num_clutter = 0;
    const Scenario a = build_scenario(cfg, 3);
    CHECK(a.clutter.empty());
    CHECK(a.users.size() == 2);
    CHECK(a.users[0].paths.size() == 5);

    const auto cb = ModeCodebook::make_default();
    const auto ch = synthesize_channels(build_scenario(ScenarioConfig{}, 3), cb, ModeAssignment::uniform(8, 0, 0), 1.0);
    CHECK(ch.comm.n_rows == 2);
    CHECK(ch.comm.n_cols == 8);

    // Same seed, same draw; different seed, different draw
    const Scenario b = build_scenario(cfg, 3), c = build_scenario(cfg, 4);
    CHECK(a.users[1].paths[2].gain == b.users[1].paths[2].gain);
    CHECK(a.target.angle == b.target.angle);
    CHECK(a.users[0].angle != c.users[0].angle);
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2, 0) != derive_seed(1, 2, 1));
}

TEST_CASE("config diagnostics")
{
    ScenarioConfig cfg;
    CHECK(validate_config(cfg).empty());
    cfg.radius_min = 60.0;
    cfg.radius_max = 30.0;
    const auto d = validate_config(cfg);
    REQUIRE(d.size() == 1);
    CHECK(d[0].field == "scenario.radius_range_m");
    CHECK_THROWS(build_scenario(cfg, 1));
}

TEST_CASE("moving a user shifts every path angle")
{
    CommUser u = build_scenario(ScenarioConfig{}, 2).users[0];
    const double before = u.paths[3].angle - u.angle;
    place_user(u, 33.0, 0.2);
    CHECK(u.range == 33.0);
    CHECK(u.angle == 0.2);
    CHECK(u.paths[3].angle - u.angle == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("default angle grid")
{
    const auto g = default_angle_grid(ScenarioConfig{});
    REQUIRE(g.size() == 25);
    CHECK(g.front() == -60.0);
    CHECK(g.back() == 60.0);
    CHECK(g[12] == 0.0);
    CHECK(g[1] == -55.0);
}

TEST_CASE("small angle sweep")
{
    const auto cb = ModeCodebook::make_default();
    const auto res = sweep_angle(small_config(), cb, small_angle_spec());
    REQUIRE(res.rows.size() == 3 * 2 * 3);
    std::map<std::pair<double, std::size_t>, std::map<std::string, double>> by_point;
    for (const auto &r : res.rows)
        by_point[{r.sweep, r.seed}][r.arch] = r.value;
    CHECK(by_point.size() == 6);
    for (const auto &[k, v] : by_point)
    {
        CHECK(v.at("pattern_ra") >= v.at("oa"));
        CHECK(v.at("pattern_ra") >= v.at("da") * (1.0 - 1e-12));
    }

    SUBCASE("aggregates match an independent computation")
    {
        REQUIRE(res.aggregates.size() == 9);
        for (const auto &a : res.aggregates)
        {
            std::vector<double> vals;
            for (const auto &r : res.rows)
                if (r.sweep == a.sweep && r.arch == a.arch)
                    vals.push_back(r.value);
            CHECK(a.count == vals.size());
            CHECK(a.median == doctest::Approx(ref_quantile(vals, 0.5)).epsilon(1e-14));
            CHECK(a.q1 == doctest::Approx(ref_quantile(vals, 0.25)).epsilon(1e-14));
            CHECK(a.q3 == doctest::Approx(ref_quantile(vals, 0.75)).epsilon(1e-14));
        }
    }

    SUBCASE("parallel execution is identical to sequential")
    {
        auto spec = small_angle_spec();
        spec.parallelism = 4;
        const auto par = sweep_angle(small_config(), cb, spec);
        REQUIRE(par.rows.size() == res.rows.size());
        for (std::size_t i = 0; i < res.rows.size(); ++i)
        {
            CHECK(par.rows[i].sweep == res.rows[i].sweep);
            CHECK(par.rows[i].seed == res.rows[i].seed);
            CHECK(par.rows[i].arch == res.rows[i].arch);
            CHECK(par.rows[i].value == res.rows[i].value);
        }
    }

    SUBCASE("CSV round trip")
    {
        std::stringstream ss;
        write_sweep_csv(ss, res);
        const auto back = read_sweep_csv(ss);
        REQUIRE(back.size() == res.rows.size());
        for (std::size_t i = 0; i < back.size(); ++i)
        {
            CHECK(back[i].sweep == res.rows[i].sweep);
            CHECK(back[i].arch == res.rows[i].arch);
            CHECK(back[i].value == res.rows[i].value);
            CHECK(back[i].evals == res.rows[i].evals);
            CHECK(back[i].power_w == res.rows[i].power_w);
        }
        std::stringstream bad("a,b\n");
        CHECK_THROWS(read_sweep_csv(bad));
    }
}

TEST_CASE("polarization sweep forces the aligned angle onto the grid")
{
    const auto cb = ModeCodebook::make_default();
    auto spec = small_angle_spec();
    spec.family = ModeFamily::polarization;
    spec.seeds_per_point = 1;
    const auto cfg = small_config();
    const auto res = sweep_angle(cfg, cb, spec);
    REQUIRE(res.aligned_angle.has_value());
    // Clutter 0 of the master draw
    const Scenario master = build_scenario(cfg, cfg.seed);
    CHECK(*res.aligned_angle == doctest::Approx(rad2deg(master.clutter[0].angle)).epsilon(1e-12));
    CHECK(res.rows.size() == 4 * 2);
    REQUIRE(res.separated_angle.has_value());
}

TEST_CASE("antenna reduction on synthetic aggregates")
{
    std::vector<Aggregate> ag = {
        {2.0, "ra", 10.0, 0, 0, 1},          {2.0, "conventional", 1.0, 0, 0, 1},
        {4.0, "ra", 20.0, 0, 0, 1},          {4.0, "conventional", 10.4, 0, 0, 1},
        {8.0, "ra", 40.0, 0, 0, 1},          {8.0, "conventional", 10.6, 0, 0, 1},
        {16.0, "conventional", 30.0, 0, 0, 1},
    };
    const auto red = antenna_reduction(ag);
    auto find = [&](std::size_t f, std::size_t n) {
        for (const auto &e : red)
            if (e.factor == f && e.ra_elements == n)
                return e;
        FAIL("missing entry");
        return ReductionEntry{};
    };
    CHECK(red.size() == 6);
    // 10 >= 0.95 * 10.4 = 9.88, 10 < 0.95 * 10.6 = 10.07
    CHECK(find(2, 2).matches);
    CHECK_FALSE(find(4, 2).matches);
    CHECK(find(2, 4).conventional_elements == 8);
    CHECK(find(2, 4).matches);
    CHECK_FALSE(find(8, 2).matches);
    CHECK(find(2, 8).matches);
}

TEST_CASE("antenna sweep")
{
    const auto cb = ModeCodebook::make_default();
    SweepSpec spec;
    spec.kind = SweepKind::antennas;
    spec.grid = {2.0, 4.0};
    spec.seeds_per_point = 2;
    const auto res = sweep_antennas(small_config(), cb, spec);
    CHECK(res.rows.size() == 2 * 2 * 2);
    REQUIRE(res.reduction.size() == 1);
    CHECK(res.reduction[0].factor == 2);
    for (std::size_t i = 0; i + 1 < res.rows.size(); i += 2)
    {
        CHECK(res.rows[i].arch == "ra");
        CHECK(res.rows[i + 1].arch == "conventional");
        CHECK(res.rows[i].value >= res.rows[i + 1].value);
    }
    auto bad = spec;
    bad.grid = {2.5};
    CHECK_THROWS(sweep_antennas(small_config(), cb, bad));
}

TEST_CASE("quantile")
{
    CHECK(quantile({4.0, 1.0, 3.0, 2.0}, 0.5) == 2.5);
    CHECK(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.25) == 2.0);
    CHECK(quantile({7.0}, 0.75) == 7.0);
    CHECK_THROWS(quantile({}, 0.5));
}
