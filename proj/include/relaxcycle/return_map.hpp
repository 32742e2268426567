#ifndef RELAXCYCLE_RETURN_MAP_HPP
#define RELAXCYCLE_RETURN_MAP_HPP

#include <cmath>
#include <optional>
#include <vector>

#include "relaxcycle/multichart.hpp"
#include "relaxcycle/singular_cycle.hpp"

// Sections transverse to the cycle and the return map between them:
//
//   Sigma0 = { y = 1/delta, (x, z) near q0 }   crossed downward in y
//   Sigma1 = { z = 1/delta, (x, y) near q1 }   crossed upward in z
//
// pi0 maps Sigma0 to Sigma1 along the slow passage near C, pi1 closes the
// loop through the global excursion. The fixed point of pi1 o pi0 is the
// limit cycle; plain iteration suffices because the composition is
// strongly contracting.

namespace relaxcycle {

struct ReturnMapSetup {
    Params p;
    double delta = 0.25;
    double half_width0 = 0.5;
    double half_width1 = 8.0;
    Vec<2> q0_yz{}; // W^cu(Q6) crossing of y = 1/delta (incoming)
    Vec<2> q1_yz{}; // W^cu(Q6) crossing of z = 1/delta (outgoing)
    Section sigma0;
    Section sigma1;

    double x0() const { return -p.xi * q0_yz[0] - q0_yz[1]; }
    double z0() const { return q0_yz[1]; }
    double x1() const { return -p.xi * q1_yz[0] - q1_yz[1]; }
    double y1() const { return q1_yz[0]; }
};

// The section parameter delta defaults to 0.25 (sections at y = 4, z = 4):
// the eps = 1e-2 cycle only climbs to z about 4.2, so a section at z = 5
// would never be crossed there. The Sigma1 window is wide because the
// eps-image of Sigma0 converges to q1 only at a 1/log(1/eps) rate; the
// measured drift at eps = 1e-2, alpha = 0.8 is already 4.4 in y.
inline ReturnMapSetup make_return_map_setup(const Params& p, double delta = 0.25,
                                            double half_width0 = 0.5,
                                            double half_width1 = 8.0)
{
    if (!(p.alpha > p.xi))
        throw RegimeError("make_return_map_setup: requires alpha > xi");
    ReturnMapSetup s;
    s.p = p;
    s.delta = delta;
    s.half_width0 = half_width0;
    s.half_width1 = half_width1;
    s.q0_yz = wcu_crossing_y(p, 1.0 / delta);
    s.q1_yz = wcu_crossing_z(p, 1.0 / delta);

    s.sigma0.chart = ChartId::AFFINE;
    s.sigma0.coord = 1;
    s.sigma0.level = 1.0 / delta;
    s.sigma0.dir = CrossingDirection::Negative;
    s.sigma0.lo = {s.x0() - half_width0, -1e300, s.z0() - half_width0};
    s.sigma0.hi = {s.x0() + half_width0, 1e300, s.z0() + half_width0};

    s.sigma1.chart = ChartId::AFFINE;
    s.sigma1.coord = 2;
    s.sigma1.level = 1.0 / delta;
    s.sigma1.dir = CrossingDirection::Positive;
    s.sigma1.lo = {s.x1() - half_width1, s.y1() - half_width1, -1e300};
    s.sigma1.hi = {s.x1() + half_width1, s.y1() + half_width1, 1e300};
    return s;
}

struct SectionHit {
    ChartPoint point;
    double elapsed;
    MultiTrajectory trajectory;
};

// Sigma0 -> Sigma1 along the forward flow. The horizon generously bounds
// one leg of the loop (periods stay well under 100 across the sweep
// ranges), so a cycle that never reaches the section fails quickly.
inline SectionHit pi0(const ReturnMapSetup& s, double x, double z,
                      const IntegratorConfig& cfg = IntegratorConfig::tight(),
                      const ChartSwitchPolicy& policy = {}, double t_max = 500.0)
{
    const State start{x, 1.0 / s.delta, z};
    auto hit = integrate_multichart_to_section({ChartId::AFFINE, start}, 0.0, t_max, s.p,
                                               s.sigma1, cfg, policy);
    return {hit.point, hit.t_phys, std::move(hit.trajectory)};
}

// eps = 0 limit of pi0: project onto C along the fast fiber, then follow
// the reduced flow to z = 1/delta. Depends only on x.
inline State pi0_reduced(const ReturnMapSetup& s, double x,
                         const IntegratorConfig& cfg = IntegratorConfig::tight())
{
    const double y0 = 1.0 / s.delta;
    const Vec<2> r0{y0, m_tilde(x, y0, s.p)};
    const auto f = [&](const Vec<2>& r) { return vf_reduced(r, s.p); };
    const auto jac = [&](const Vec<2>& r) { return jacobian_reduced(r, s.p); };
    auto hit = integrate_to_event<2>(f, jac, r0, 0.0, 1e4,
                                     [&](const Vec<2>& r) { return r[1] - 1.0 / s.delta; },
                                     CrossingDirection::Positive, cfg);
    return {m_graph(hit.y[0], hit.y[1], s.p), hit.y[0], hit.y[1]};
}

// Sigma1 -> Sigma0 through the global excursion.
inline SectionHit pi1(const ReturnMapSetup& s, double x, double y,
                      const IntegratorConfig& cfg = IntegratorConfig::tight(),
                      const ChartSwitchPolicy& policy = {}, double t_max = 500.0)
{
    const State start{x, y, 1.0 / s.delta};
    auto hit = integrate_multichart_to_section({ChartId::AFFINE, start}, 0.0, t_max, s.p,
                                               s.sigma0, cfg, policy);
    return {hit.point, hit.t_phys, std::move(hit.trajectory)};
}

struct FullReturn {
    double x, z;     // image on Sigma0
    double period;   // physical slow time of the loop
    double min_z;    // over the whole loop
    SectionHit leg0; // Sigma0 -> Sigma1
    SectionHit leg1; // Sigma1 -> Sigma0
};

inline FullReturn full_return(const ReturnMapSetup& s, double x, double z,
                              const IntegratorConfig& cfg = IntegratorConfig::tight(),
                              const ChartSwitchPolicy& policy = {})
{
    FullReturn r{0, 0, 0, 0, pi0(s, x, z, cfg, policy), {}};
    const State at1 = chart_to_affine(r.leg0.point);
    r.leg1 = pi1(s, at1[0], at1[1], cfg, policy);
    const State at0 = chart_to_affine(r.leg1.point);
    r.x = at0[0];
    r.z = at0[2];
    r.period = r.leg0.elapsed + r.leg1.elapsed;
    r.min_z = std::min(r.leg0.trajectory.min_z(), r.leg1.trajectory.min_z());
    return r;
}

struct LimitCycle {
    Params p;
    double delta = 0.25;
    bool converged = false;
    int iterations = 0;
    double fixed_x = 0.0, fixed_z = 0.0; // fixed point on Sigma0
    double period = 0.0;
    double min_z = 0.0;
    double contraction = 0.0; // spectral norm of the return-map derivative
    double residual = 0.0;    // final iteration displacement
    std::vector<std::pair<double, ChartPoint>> orbit; // timed samples of one loop
    std::vector<SphereState> orbit_sphere;

    bool stable() const { return converged && contraction < 1.0; }
};

struct FindCycleOptions {
    int max_iters = 30;
    double fp_tol = 1e-8;
    double d_step = 1e-4; // forward-difference step fraction of half_width
    std::size_t orbit_samples = 2000;
    bool estimate_contraction = true;
    std::optional<std::pair<double, double>> start; // (x, z) on Sigma0; default q0
};

// Symmetric Hausdorff distance on S^3 between a computed cycle and the
// singular cycle, densifying the singular-cycle sampling until stable.
inline double hausdorff_to_cycle(const LimitCycle& lc, const SingularCycle& gamma0)
{
    const auto cyc = [&](std::size_t) { return lc.orbit_sphere; };
    const auto g0 = [&](std::size_t n) { return gamma0.sphere_samples(n / 5); };
    return hausdorff_densified(g0, cyc, 600);
}

inline LimitCycle find_limit_cycle(const ReturnMapSetup& s,
                                   const IntegratorConfig& cfg = IntegratorConfig::tight(),
                                   const FindCycleOptions& opt = {},
                                   const ChartSwitchPolicy& policy = {})
{
    LimitCycle lc;
    lc.p = s.p;
    lc.delta = s.delta;

    double x = opt.start ? opt.start->first : s.x0();
    double z = opt.start ? opt.start->second : s.z0();
    for (int it = 0; it < opt.max_iters; ++it) {
        const FullReturn r = full_return(s, x, z, cfg, policy);
        const double moved = std::max(std::abs(r.x - x), std::abs(r.z - z));
        x = r.x;
        z = r.z;
        lc.iterations = it + 1;
        lc.residual = moved;
        if (moved < opt.fp_tol) {
            lc.converged = true;
            break;
        }
    }
    lc.fixed_x = x;
    lc.fixed_z = z;
    if (!lc.converged) return lc;

    // one recording loop from the fixed point
    const FullReturn loop = full_return(s, x, z, cfg, policy);
    lc.period = loop.period;
    lc.min_z = loop.min_z;
    auto t0_samples = loop.leg0.trajectory.timed_samples(opt.orbit_samples / 2);
    auto t1_samples = loop.leg1.trajectory.timed_samples(opt.orbit_samples / 2);
    lc.orbit = std::move(t0_samples);
    for (auto& q : t1_samples)
        lc.orbit.emplace_back(q.first + loop.leg0.elapsed, q.second);
    auto s0 = loop.leg0.trajectory.sphere_samples(opt.orbit_samples / 2);
    auto s1 = loop.leg1.trajectory.sphere_samples(opt.orbit_samples / 2);
    lc.orbit_sphere = std::move(s0);
    lc.orbit_sphere.insert(lc.orbit_sphere.end(), s1.begin(), s1.end());

    if (opt.estimate_contraction) {
        const double h = opt.d_step * s.half_width0;
        const FullReturn rx = full_return(s, x + h, z, cfg, policy);
        const FullReturn rz = full_return(s, x, z + h, cfg, policy);
        const double a = (rx.x - loop.x) / h, b = (rz.x - loop.x) / h;
        const double c = (rx.z - loop.z) / h, d = (rz.z - loop.z) / h;
        lc.contraction = spectral_norm_2x2(a, b, c, d);
    }
    return lc;
}

} // namespace relaxcycle

#endif
