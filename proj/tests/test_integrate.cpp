#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "relaxcycle/core_model.hpp"
#include "relaxcycle/rosenbrock.hpp"

using namespace relaxcycle;

TEST_CASE("scheme order on a smooth problem")
{
    // y' = -y + sin(2y) + 1 from y(0)=0.3, reference at very tight tolerance;
    // fixed-step runs must converge with at least fourth order.
    const auto f = [](const Vec<1>& y) {
        return Vec<1>{-y[0] + std::sin(2.0 * y[0]) + 1.0};
    };
    const auto jac = [](const Vec<1>& y) {
        Mat<1> j{};
        j[0][0] = -1.0 + 2.0 * std::cos(2.0 * y[0]);
        return j;
    };

    IntegratorConfig tight = IntegratorConfig::tight();
    tight.abs_tol = tight.rel_tol = 1e-14;
    const double t1 = 2.0;
    const double ref = integrate<1>(f, jac, {0.3}, 0.0, t1, tight).back_state()[0];

    auto fixed_step_err = [&](double h) {
        RosenbrockStepper<1> st(f, jac);
        double t = 0.0;
        Vec<1> y{0.3};
        while (t < t1 - 1e-12) {
            const double hh = std::min(h, t1 - t);
            y = st.step(t, y, hh).y1;
            t += hh;
        }
        return std::abs(y[0] - ref);
    };

    const double e1 = fixed_step_err(0.1);
    const double e2 = fixed_step_err(0.05);
    const double e3 = fixed_step_err(0.025);
    const double order12 = std::log2(e1 / e2);
    const double order23 = std::log2(e2 / e3);
    CHECK(order12 > 3.5);
    CHECK(order23 > 3.5);
}

TEST_CASE("L-stability on the stiff linear test")
{
    // y' = lambda y with lambda = -1e6: the exact solution at t=1 is zero to
    // double precision; an A/L-stable scheme reaches it in few steps.
    const double lambda = -1e6;
    const auto f = [=](const Vec<1>& y) { return Vec<1>{lambda * y[0]}; };
    const auto jac = [=](const Vec<1>&) {
        Mat<1> j{};
        j[0][0] = lambda;
        return j;
    };
    IntegratorConfig cfg;
    cfg.abs_tol = cfg.rel_tol = 1e-8;
    cfg.h_init = 1e-7;
    cfg.keep_audit = true;
    const auto traj = integrate<1>(f, jac, {1.0}, 0.0, 1.0, cfg);
    CHECK(std::abs(traj.back_state()[0]) < 1e-6);
    long accepted = 0;
    for (const auto& s : traj.audit) accepted += s.accepted ? 1 : 0;
    CHECK(accepted < 500);

    // the stability function decays to zero for h*lambda -> -inf; a strongly
    // A-stable but not L-stable scheme would plateau at |R(inf)| > 0
    RosenbrockStepper<1> st(f, jac);
    CHECK(std::abs(st.step(0.0, {1.0}, 1.0).y1[0]) < 1e-4);    // h*lambda = -1e6
    CHECK(std::abs(st.step(0.0, {1.0}, 1e4).y1[0]) < 1e-9);    // h*lambda = -1e10
    CHECK(std::abs(st.step(0.0, {1.0}, 1e8).y1[0]) < 1e-13);   // h*lambda = -1e14
}

TEST_CASE("tightening tolerances tightens the answer on the reduced system")
{
    Params p(0.5, 0.5);
    const auto f = [&](const Vec<2>& y) { return vf_reduced(y, p); };
    const auto jac = [&](const Vec<2>& y) { return jacobian_reduced(y, p); };
    IntegratorConfig ref_cfg;
    ref_cfg.abs_tol = ref_cfg.rel_tol = 1e-13;
    const Vec<2> ref = integrate<2>(f, jac, {1.0, 1.0}, 0.0, 20.0, ref_cfg).back_state();

    std::vector<double> errs;
    for (double tol : {1e-6, 1e-8, 1e-10}) {
        IntegratorConfig cfg;
        cfg.abs_tol = cfg.rel_tol = tol;
        errs.push_back(norm_inf(integrate<2>(f, jac, {1.0, 1.0}, 0.0, 20.0, cfg).back_state() - ref));
    }
    CHECK(errs[1] < errs[0]);
    CHECK(errs[2] < errs[1]);
    CHECK(errs[0] / errs[2] > 100.0); // four decades of tolerance
}

TEST_CASE("no accepted step exceeds its error tolerance (audit)")
{
    Params p(0.5, 0.5); // bounded periodic orbits
    const auto f = [&](const Vec<2>& y) { return vf_reduced(y, p); };
    const auto jac = [&](const Vec<2>& y) { return jacobian_reduced(y, p); };
    IntegratorConfig cfg;
    cfg.keep_audit = true;
    const auto traj = integrate<2>(f, jac, {1.0, 1.0}, 0.0, 20.0, cfg);
    REQUIRE(!traj.audit.empty());
    for (const auto& s : traj.audit)
        if (s.accepted) CHECK(s.err <= 1.0);
}

TEST_CASE("Hamiltonian drift over T=100 in the conservative regime")
{
    Params p(0.5, 0.5);
    const auto f = [&](const Vec<2>& y) { return vf_reduced(y, p); };
    const auto jac = [&](const Vec<2>& y) { return jacobian_reduced(y, p); };
    const double h0 = hamiltonian({1.0, 1.0}, p);
    const auto traj = integrate<2>(f, jac, {1.0, 1.0}, 0.0, 100.0, IntegratorConfig::tight());
    const double h1 = hamiltonian(traj.back_state(), p);
    CHECK(std::abs(h1 - h0) / std::abs(h0) < 1e-8);
}

TEST_CASE("dense output is accurate between knots")
{
    const auto f = [](const Vec<2>& y) { return Vec<2>{-y[1], y[0]}; };
    const auto jac = [](const Vec<2>&) {
        Mat<2> j = mat_zero<2>();
        j[0][1] = -1.0;
        j[1][0] = 1.0;
        return j;
    };
    IntegratorConfig cfg;
    cfg.abs_tol = cfg.rel_tol = 1e-10;
    const auto traj = integrate<2>(f, jac, {1.0, 0.0}, 0.0, 6.0, cfg);
    for (double t = 0.05; t < 6.0; t += 0.173) {
        const Vec<2> y = traj.eval(t);
        CHECK(y[0] == doctest::Approx(std::cos(t)).epsilon(1e-7));
        CHECK(y[1] == doctest::Approx(std::sin(t)).epsilon(1e-7));
    }
    // continuity at knots
    for (std::size_t i = 1; i < traj.knots.size(); ++i) {
        const auto& a = traj.knots[i - 1];
        const auto& b = traj.knots[i];
        const Vec<2> left = a.eval(a.t0 + a.h);
        const Vec<2> right = b.eval(b.t0);
        CHECK(norm_inf(left - right) < 1e-13);
    }
}

TEST_CASE("event location on the circular test system")
{
    // (y, z)' = (-z, y) from (1, 0): y crosses zero first at t = pi/2
    // moving downward.
    const auto f = [](const Vec<2>& y) { return Vec<2>{-y[1], y[0]}; };
    const auto jac = [](const Vec<2>&) {
        Mat<2> j = mat_zero<2>();
        j[0][1] = -1.0;
        j[1][0] = 1.0;
        return j;
    };
    const auto g = [](const Vec<2>& y) { return y[0]; };

    auto hit = integrate_to_event<2>(f, jac, {1.0, 0.0}, 0.0, 10.0, g,
                                     CrossingDirection::Negative, IntegratorConfig::tight());
    CHECK(std::abs(hit.t - M_PI / 2) < 1e-8);
    CHECK(std::abs(hit.y[0]) < 1e-10);

    SUBCASE("direction filter ignores the opposite crossing")
    {
        auto up = integrate_to_event<2>(f, jac, {1.0, 0.0}, 0.0, 10.0, g,
                                        CrossingDirection::Positive, IntegratorConfig::tight());
        CHECK(std::abs(up.t - 3.0 * M_PI / 2) < 1e-8);
    }

    SUBCASE("event idempotence: restart from the crossing returns after a loop")
    {
        auto again = integrate_to_event<2>(f, jac, hit.y, hit.t, hit.t + 10.0, g,
                                           CrossingDirection::Positive, IntegratorConfig::tight());
        CHECK(again.t - hit.t == doctest::Approx(M_PI).epsilon(1e-7));
    }

    SUBCASE("no crossing reports the typed error")
    {
        const auto far = [](const Vec<2>& y) { return y[0] - 50.0; };
        CHECK_THROWS_AS(integrate_to_event<2>(f, jac, {1.0, 0.0}, 0.0, 5.0, far,
                                              CrossingDirection::Any),
                        IntegrationError);
    }
}

TEST_CASE("slow flow settles onto a periodic orbit (returns stabilize)")
{
    Params p(0.8, 0.5, 0.01);
    const auto f = [&](const Vec<3>& s) { return vf_slow(s, p); };
    const auto jac = [&](const Vec<3>& s) { return jacobian_slow(s, p); };
    const auto g = [](const Vec<3>& s) { return s[2]; }; // section z = 0

    IntegratorConfig cfg;
    cfg.abs_tol = cfg.rel_tol = 1e-10;

    Vec<3> s{0.1, 0.1, 0.1};
    double t = 0.0;
    Vec<3> prev{};
    Vec<3> last{};
    // skip transients, then compare two consecutive returns
    for (int k = 0; k < 6; ++k) {
        auto hit = integrate_to_event<3>(f, jac, s, t, t + 400.0, g,
                                         CrossingDirection::Positive, cfg);
        prev = last;
        last = hit.y;
        s = hit.y;
        t = hit.t;
    }
    CHECK(norm_inf(last - prev) < 1e-3);
}

TEST_CASE("stiffness failure is reported as step underflow")
{
    // finite-time blowup: y' = y^2 from 1 diverges at t=1
    const auto f = [](const Vec<1>& y) { return Vec<1>{y[0] * y[0]}; };
    const auto jac = [](const Vec<1>& y) {
        Mat<1> j{};
        j[0][0] = 2.0 * y[0];
        return j;
    };
    CHECK_THROWS_AS(integrate<1>(f, jac, {1.0}, 0.0, 2.0), IntegrationError);
}
