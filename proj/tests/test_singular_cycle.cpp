#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "relaxcycle/singular_cycle.hpp"

using namespace relaxcycle;

TEST_CASE("anchor points")
{
    Params p(0.8, 0.5, 0.0);
    const AnchorPoints a = anchor_points(p);
    CHECK(a.q1_phi3[0] == -1.0);
    CHECK(a.q2_phi3[0] == doctest::Approx(-1.8).epsilon(1e-15));
    CHECK(a.q4_phi3[0] == doctest::Approx(-1.8).epsilon(1e-15));
    CHECK(a.q4_phi3[1] == doctest::Approx(3.2).epsilon(1e-15));
    CHECK(a.q5_phi1[0] == doctest::Approx(-0.5625).epsilon(1e-15));
    CHECK(a.q5_phi1[1] == doctest::Approx(0.0625).epsilon(1e-15));
    CHECK(a.q6_phi1[0] == doctest::Approx(-0.5).epsilon(1e-15));

    // at alpha = 1 the point Q5 collapses onto Q6's z1 level
    const AnchorPoints a1 = anchor_points(Params(1.0, 0.5, 0.0));
    CHECK(a1.q5_phi1[1] == 0.0);

    CHECK_THROWS_AS(anchor_points(Params(0.4, 0.5, 0.0)), RegimeError);
}

TEST_CASE("singular cycle structure across the alpha regimes")
{
    SUBCASE("alpha < 1: gamma9 runs down to the equator corner")
    {
        const SingularCycle g = build_gamma0(Params(0.8, 0.5, 0.0));
        REQUIRE(g.segments.size() == 5);
        CHECK(g.segments[3].name == "gamma9");
        CHECK(g.segments[3].a == doctest::Approx(0.0625).epsilon(1e-14));
        CHECK(g.segments[3].b == 0.0);
        CHECK(g.closure_error() < 1e-8);
    }

    SUBCASE("alpha = 1: gamma9 is absent")
    {
        const SingularCycle g = build_gamma0(Params(1.0, 0.5, 0.0));
        REQUIRE(g.segments.size() == 4);
        for (const auto& s : g.segments) CHECK(s.name != "gamma9");
        CHECK(g.closure_error() < 1e-8);
    }

    SUBCASE("alpha > 1: the gamma9 interval flips sign")
    {
        const SingularCycle g = build_gamma0(Params(1.2, 0.5, 0.0));
        REQUIRE(g.segments.size() == 5);
        const auto& g9 = g.segments[3];
        CHECK(g9.name == "gamma9");
        CHECK(g9.a == doctest::Approx(0.5 * (1.0 - 1.2) / 2.4).epsilon(1e-13));
        CHECK(g9.a < 0.0);
        CHECK(g9.b == 0.0);
        CHECK(g.closure_error() < 1e-8);
    }

    SUBCASE("gamma7 endpoint equals Q5")
    {
        const Params p(0.8, 0.5, 0.0);
        const SingularCycle g = build_gamma0(p);
        const auto& g7 = g.segments[2];
        const Vec<3> end = g7.coords(g7.b);
        const AnchorPoints a = anchor_points(p);
        CHECK(std::abs(end[0] - a.q5_phi1[0]) < 1e-12);
        CHECK(std::abs(end[1] - a.q5_phi1[1]) < 1e-12);
    }
}

TEST_CASE("invariant-manifold classification")
{
    SUBCASE("alpha > xi: W^cu(Q6) enters the Q1 funnel")
    {
        Params p(0.8, 0.5, 0.0);
        const ReducedCurve c = wcu_q6_extended(p, 1000.0, 120.0, 400);
        bool entered = false;
        for (const auto& s : c.samples) {
            if (s[2] > 25.0 && s[1] > 0.0 && s[1] / s[2] < 0.05) {
                entered = true;
                break;
            }
        }
        CHECK(entered);
    }

    SUBCASE("alpha < xi: W^cu(Q6) falls into the origin")
    {
        Params p(0.3, 0.5, 0.0);
        const Vec<2> seed{1000.0, wcu_seed_z(1000.0, p)};
        const auto f = [&](const Vec<2>& r) { return vf_reduced(r, p); };
        const auto jac = [&](const Vec<2>& r) { return jacobian_reduced(r, p); };
        const auto traj =
            integrate<2>(f, jac, seed, 0.0, 1400.0, IntegratorConfig::tight());
        const Vec<2> e = traj.back_state();
        CHECK(std::hypot(e[0], e[1]) < 1e-4);
    }

    SUBCASE("alpha = xi: the connection is conservative and unbroken")
    {
        Params p(0.5, 0.5, 0.0);
        // H = 1 along the connecting orbit
        const Vec<2> q10 = wcu_crossing_y(p, 10.0);
        CHECK(std::abs(hamiltonian(q10, p) - 1.0) < 1e-8);
        CHECK(std::abs(separation_function(p, 10.0)) < 1e-6);
    }

    SUBCASE("the separation changes sign transversally at alpha = xi")
    {
        const double sm = separation_function(Params(0.45, 0.5, 0.0), 2.0);
        const double sp = separation_function(Params(0.55, 0.5, 0.0), 2.0);
        CHECK(sm < 0.0);
        CHECK(sp > 0.0);
        const double dsep_dalpha = (sp - sm) / 0.1;
        CHECK(std::abs(dsep_dalpha) > 1e-3);
    }
}

TEST_CASE("W^cs(Q3) backward asymptotics for alpha < xi")
{
    // backward in time W^cs leaves along z = -xi y
    Params p(0.3, 0.5, 0.0);
    const ReducedCurve c = wcs_q3(p, 1e3, 400);
    REQUIRE(c.stop_reason == "y_escape");
    const auto& e = c.samples.back();
    CHECK(e[1] > 1000.0);
    CHECK(std::abs(e[2] / e[1] + p.xi) < 0.05);
}

TEST_CASE("W^cu seed insensitivity")
{
    Params p(0.8, 0.5, 0.0);
    const Vec<2> a = wcu_crossing_y(p, 10.0, 1e3);
    const Vec<2> b = wcu_crossing_y(p, 10.0, 2e3);
    CHECK(std::abs(a[1] - b[1]) < 1e-6);
}

TEST_CASE("the line L and the heuristic flow")
{
    Params p(0.8, 0.5, 1e-3);

    SUBCASE("L is invariant: x' vanishes on it")
    {
        for (double z : {1.0, 5.0, 40.0}) {
            const State s{L_x(z, p), 7.0, z};
            CHECK(heuristic_L_vf(s, p)[0] == 0.0);
            CHECK(heuristic_L_vf(s, p)[1] == 1.0);
            CHECK(heuristic_L_vf(s, p)[2] == 0.0);
        }
    }

    SUBCASE("L appears at x3 = -1-alpha in the phi3 chart")
    {
        for (double z : {1e2, 1e5}) {
            const State s{L_x(z, p), 3.0 * z, z};
            const ChartPoint c = affine_to_phi3(s);
            CHECK(c.u[0] == doctest::Approx(-1.8).epsilon(1e-12));
        }
    }

    SUBCASE("validity flag solves e^{-2z} = eps")
    {
        CHECK(heuristic_valid(3.45, 1e-3));
        CHECK_FALSE(heuristic_valid(3.46, 1e-3));
        CHECK(std::abs(0.5 * std::log(1e3) - 3.4539) < 1e-4);
    }
}

TEST_CASE("Hausdorff distance basics")
{
    Params p(0.8, 0.5, 0.0);
    const SingularCycle g = build_gamma0(p);
    const auto A = g.sphere_samples(100);
    CHECK(hausdorff_sets(A, A) == 0.0);

    auto B = A;
    B.resize(B.size() / 2);
    CHECK(hausdorff_sets(A, B) == doctest::Approx(hausdorff_sets(B, A)).epsilon(1e-15));
}
