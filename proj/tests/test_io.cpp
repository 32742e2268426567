#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "relaxcycle/io.hpp"

using namespace relaxcycle;

TEST_CASE("trajectory CSV round trip")
{
    Params p(0.8, 0.5, 1e-2);
    IntegratorConfig cfg;
    const auto mt = integrate_multichart({0.1, 0.2, 0.3}, 0.0, 5.0, p, cfg);
    const std::string csv = trajectory_csv(mt, 200);
    const auto rows = parse_trajectory_csv(csv);
    REQUIRE(!rows.empty());
    // writing with 17 significant digits makes the parse exact
    const auto samples = mt.timed_samples(200);
    REQUIRE(rows.size() == samples.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].t == samples[i].first);
        for (int k = 0; k < 3; ++k) CHECK(rows[i].u[k] == samples[i].second.u[k]);
    }

    // determinism: a second export is byte-identical
    CHECK(trajectory_csv(mt, 200) == csv);
}

TEST_CASE("trajectory JSON round trip is bit exact")
{
    Params p(0.8, 0.5, 1e-2);
    IntegratorConfig cfg;
    const auto mt = integrate_multichart({0.1, 0.2, 0.3}, 0.0, 3.0, p, cfg);
    const json j = trajectory_json(mt);
    const std::string text = j.dump();
    const auto back = trajectory_from_json(json::parse(text));
    REQUIRE(back.segments.size() == mt.segments.size());
    for (std::size_t s = 0; s < mt.segments.size(); ++s) {
        const auto& a = mt.segments[s].traj.knots;
        const auto& b = back.segments[s].traj.knots;
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(std::memcmp(&a[i].t0, &b[i].t0, sizeof(double)) == 0);
            CHECK(std::memcmp(a[i].y0.data(), b[i].y0.data(), sizeof a[i].y0) == 0);
            CHECK(std::memcmp(a[i].y1.data(), b[i].y1.data(), sizeof a[i].y1) == 0);
            CHECK(std::memcmp(a[i].cont3.data(), b[i].cont3.data(), sizeof a[i].cont3) == 0);
        }
    }
    CHECK(back.final_time == mt.final_time);
}

TEST_CASE("time traces show the seismic staircase")
{
    // long plateaus at z < 0 punctuated by short spikes
    Params p(0.8, 0.5, 1e-2);
    IntegratorConfig cfg;
    const auto mt = integrate_multichart({0.1, 0.1, 0.1}, 0.0, 80.0, p, cfg);
    const auto samples = mt.timed_samples(4000);
    int below = 0, spikes = 0;
    bool in_spike = false;
    for (const auto& [t, cp] : samples) {
        const double z = z_of(cp);
        if (z < 0.0) ++below;
        const bool high = z > 2.0;
        if (high && !in_spike) ++spikes;
        in_spike = high;
    }
    CHECK(below > int(samples.size()) / 2); // plateaus dominate
    CHECK(spikes >= 2);                     // repeated events
}

TEST_CASE("singular cycle export")
{
    const SingularCycle g = build_gamma0(Params(0.8, 0.5, 0.0));
    const json j = gamma0_json(g, 50);
    CHECK(j.at("segments").size() == 5);
    for (const auto& s : j.at("segments")) CHECK(s.at("sphere_points").size() >= 50);
}

TEST_CASE("atlas manifest lists charts and overlaps")
{
    const json m = atlas_manifest_json();
    CHECK(m.at("charts").size() == 13);
    CHECK(m.at("coordinate_changes").size() == 9);
    bool found_k1121 = false;
    for (const auto& c : m.at("charts")) {
        if (c.at("id") == "K1121") {
            found_k1121 = true;
            CHECK(c.at("arity") == 5);
            CHECK(c.at("desingularization_divisor") == "r1*rho2*vrho1");
        }
    }
    CHECK(found_k1121);
    bool leaf_cc = false;
    for (const auto& c : m.at("coordinate_changes"))
        if (c.at("leaf_restricted").get<bool>()) leaf_cc = true;
    CHECK(leaf_cc);
}

TEST_CASE("SVG plot writer")
{
    SvgSeries s;
    for (int i = 0; i <= 100; ++i) {
        s.xs.push_back(i * 0.1);
        s.ys.push_back(std::sin(i * 0.1));
    }
    const std::string svg = svg_plot({s}, "wave", "t", "value");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("wave") != std::string::npos);
    // deterministic output
    CHECK(svg == svg_plot({s}, "wave", "t", "value"));
}

TEST_CASE("limit cycle export carries the headline numbers")
{
    Params p(0.8, 0.5, 1e-2);
    const LimitCycle lc = find_limit_cycle(make_return_map_setup(p));
    const json j = limit_cycle_json(lc);
    CHECK(j.at("converged").get<bool>());
    CHECK(j.at("min_z").get<double>() == lc.min_z);
    CHECK(j.at("period").get<double>() == lc.period);
    CHECK(!j.at("orbit").empty());
    const std::string csv = limit_cycle_csv(lc);
    CHECK(parse_trajectory_csv(csv).size() == lc.orbit.size());
}
