#ifndef RELAXCYCLE_SINGULAR_CYCLE_HPP
#define RELAXCYCLE_SINGULAR_CYCLE_HPP

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "relaxcycle/compactify.hpp"
#include "relaxcycle/core_model.hpp"
#include "relaxcycle/rosenbrock.hpp"

// The singular cycle Gamma_0 for alpha > xi: four closed-form segments on
// the equator of the Poincare sphere joined with the invariant curve
// W^cu(Q6) of the reduced flow on C, plus the machinery around it
// (asymptotic seeds, the separation of W^cu(Q6) and W^cs(Q3), the line L,
// Hausdorff distances on the sphere).

namespace relaxcycle {

// ---------------------------------------------------------------- anchors

struct AnchorPoints {
    Vec<3> q1_phi3; // (x3, y3, w3)
    Vec<3> q2_phi3;
    Vec<3> q4_phi3;
    Vec<3> q5_phi1; // (x1, z1, w1)
    Vec<3> q6_phi1;
};

inline AnchorPoints anchor_points(const Params& p)
{
    if (!(p.alpha > p.xi))
        throw RegimeError("anchor_points: singular cycle requires alpha > xi");
    AnchorPoints a;
    a.q1_phi3 = {-1.0, 0.0, 0.0};
    a.q2_phi3 = {-1.0 - p.alpha, 0.0, 0.0};
    a.q4_phi3 = {-1.0 - p.alpha, 2.0 * p.alpha / p.xi, 0.0};
    a.q5_phi1 = {-p.xi * (1.0 + p.alpha) / (2.0 * p.alpha),
                 p.xi * (1.0 - p.alpha) / (2.0 * p.alpha), 0.0};
    a.q6_phi1 = {-p.xi, 0.0, 0.0};
    return a;
}

// ------------------------------------------------- invariant curves on C

struct ReducedCurve {
    Trajectory<2> traj;            // (y, z) over the curve parameter
    bool backward = false;         // true: parameter runs backward in time
    std::vector<Vec<3>> samples;   // (x, y, z), x recovered through m
    std::string stop_reason;
};

namespace detail {

// Resample a reduced trajectory roughly uniformly in arc length of its
// image on the Poincare sphere. Uniform-in-time sampling would starve the
// fast escape arcs, which carry most of the geometry.
inline void resample_reduced(ReducedCurve& c, const Params& p, int n)
{
    c.samples.clear();
    if (c.traj.knots.empty()) return;

    auto sphere_of = [&p](const Vec<2>& r) {
        const double x = m_graph(r[0], r[1], p);
        const double nn = std::sqrt(x * x + r[0] * r[0] + r[1] * r[1] + 1.0);
        return Vec<4>{x / nn, r[0] / nn, r[1] / nn, 1.0 / nn};
    };

    // fine walk: a few points per knot
    std::vector<Vec<2>> fine;
    fine.reserve(4 * c.traj.knots.size() + 1);
    fine.push_back(c.traj.knots.front().y0);
    for (const auto& k : c.traj.knots)
        for (int i = 1; i <= 4; ++i) fine.push_back(k.eval_theta(i / 4.0));

    double total = 0.0;
    Vec<4> prev = sphere_of(fine.front());
    std::vector<double> arc(fine.size(), 0.0);
    for (std::size_t i = 1; i < fine.size(); ++i) {
        const Vec<4> q = sphere_of(fine[i]);
        total += norm(q - prev);
        arc[i] = total;
        prev = q;
    }

    const double step = total / n;
    double next = 0.0;
    for (std::size_t i = 0; i < fine.size(); ++i) {
        if (arc[i] >= next || i + 1 == fine.size()) {
            c.samples.push_back({m_graph(fine[i][0], fine[i][1], p), fine[i][0], fine[i][1]});
            next = arc[i] + step;
        }
    }
}

} // namespace detail

inline double wcu_seed_z(double y, const Params& p)
{
    return -std::log(y) * (1.0 + p.alpha / (p.xi * y));
}

inline double wcs_seed_z(double y, const Params& p)
{
    return (p.xi / p.alpha) * y + (1.0 + p.alpha) * p.xi / (p.alpha * p.alpha);
}

// W^cu(Q6): the orbit entering from y -> infinity along z ~ -log y,
// integrated forward until z reaches z_stop (or the time horizon, for
// parameters where it never does).
inline ReducedCurve wcu_q6(const Params& p, double y_max = 1e3, int n_samples = 400,
                           double z_stop = 4.8, const IntegratorConfig& cfg = {})
{
    const Vec<2> seed{y_max, wcu_seed_z(y_max, p)};
    const auto f = [&p](const Vec<2>& r) { return vf_reduced(r, p); };
    const auto jac = [&p](const Vec<2>& r) { return jacobian_reduced(r, p); };
    ReducedCurve c;
    try {
        auto hit = integrate_to_event<2>(f, jac, seed, 0.0, 6.0 * y_max,
                                         [z_stop](const Vec<2>& r) { return r[1] - z_stop; },
                                         CrossingDirection::Positive, cfg);
        c.traj = std::move(hit.trajectory);
        c.stop_reason = "z_stop";
    } catch (const IntegrationError& e) {
        if (e.kind() != IntegrationError::Kind::NoCrossing) throw;
        c.traj = integrate<2>(f, jac, seed, 0.0, 6.0 * y_max, cfg);
        c.stop_reason = "t_max";
    }
    detail::resample_reduced(c, p, n_samples);
    return c;
}

// Forward continuation of a reduced orbit in the e^{-z}-slowed time,
// which reaches very large z without finite-time blowup. Used by the
// classification checks and the sphere tail of Gamma_0.
inline ReducedCurve extend_reduced_slowed(const Params& p, const Vec<2>& from, double z_far,
                                          int n_samples = 400, double s_max = 1e4,
                                          const IntegratorConfig& cfg = {})
{
    const auto f = [&p](const Vec<2>& r) { return vf_reduced_slowed(r, p); };
    const auto jac = fd_jacobian<2>(f);
    ReducedCurve c;
    try {
        auto hit = integrate_to_event<2>(f, jac, from, 0.0, s_max,
                                         [z_far](const Vec<2>& r) { return r[1] - z_far; },
                                         CrossingDirection::Positive, cfg);
        c.traj = std::move(hit.trajectory);
        c.stop_reason = "z_stop";
    } catch (const IntegrationError& e) {
        if (e.kind() != IntegrationError::Kind::NoCrossing) throw;
        c.traj = integrate<2>(f, jac, from, 0.0, s_max, cfg);
        c.stop_reason = "t_max";
    }
    detail::resample_reduced(c, p, n_samples);
    return c;
}

// W^cu(Q6) continued from the asymptotic seed through the finite region
// and far up the z-axis, in the slowed time throughout.
inline ReducedCurve wcu_q6_extended(const Params& p, double y_max, double z_far,
                                    int n_samples = 400, const IntegratorConfig& cfg = {})
{
    return extend_reduced_slowed(p, {y_max, wcu_seed_z(y_max, p)}, z_far, n_samples,
                                 60.0 * y_max, cfg);
}

// W^cs(Q3): the orbit leaving to y -> infinity along z ~ (xi/alpha) y,
// integrated backward from the asymptotic seed. The seed sits at
// z ~ (xi/alpha) y_max where e^z overflows, so the backward leg runs in
// the e^{-z}-slowed time (same orbit).
inline ReducedCurve wcs_q3(const Params& p, double y_max = 1e3, int n_samples = 400,
                           double t_max = 4e3, const IntegratorConfig& cfg = {})
{
    const Vec<2> seed{y_max, wcs_seed_z(y_max, p)};
    const auto f = [&p](const Vec<2>& r) {
        const ReducedState d = vf_reduced_slowed(r, p);
        return Vec<2>{-d[0], -d[1]};
    };
    const auto jac = fd_jacobian<2>(f);
    ReducedCurve c;
    c.backward = true;
    try {
        auto hit = integrate_to_event<2>(f, jac, seed, 0.0, t_max,
                                         [y_max](const Vec<2>& r) { return r[0] - 1.05 * y_max; },
                                         CrossingDirection::Positive, cfg);
        c.traj = std::move(hit.trajectory);
        c.stop_reason = "y_escape";
    } catch (const IntegrationError& e) {
        if (e.kind() != IntegrationError::Kind::NoCrossing) throw;
        c.traj = integrate<2>(f, jac, seed, 0.0, t_max, cfg);
        c.stop_reason = "t_max";
    }
    detail::resample_reduced(c, p, n_samples);
    return c;
}

// First crossing of W^cu(Q6) with {y = y_level}, incoming branch
// (y decreasing). This is the anchor q0 of the return map.
inline Vec<2> wcu_crossing_y(const Params& p, double y_level, double y_max = 1e3,
                             const IntegratorConfig& cfg = {})
{
    const Vec<2> seed{y_max, wcu_seed_z(y_max, p)};
    const auto f = [&p](const Vec<2>& r) { return vf_reduced(r, p); };
    const auto jac = [&p](const Vec<2>& r) { return jacobian_reduced(r, p); };
    auto hit = integrate_to_event<2>(f, jac, seed, 0.0, 6.0 * y_max,
                                     [y_level](const Vec<2>& r) { return r[0] - y_level; },
                                     CrossingDirection::Negative, cfg);
    return hit.y;
}

// First crossing of W^cu(Q6) with {z = z_level} on the outgoing climb;
// the anchor q1.
inline Vec<2> wcu_crossing_z(const Params& p, double z_level, double y_max = 1e3,
                             const IntegratorConfig& cfg = {})
{
    const Vec<2> seed{y_max, wcu_seed_z(y_max, p)};
    const auto f = [&p](const Vec<2>& r) { return vf_reduced(r, p); };
    const auto jac = [&p](const Vec<2>& r) { return jacobian_reduced(r, p); };
    auto hit = integrate_to_event<2>(f, jac, seed, 0.0, 6.0 * y_max,
                                     [z_level](const Vec<2>& r) { return r[1] - z_level; },
                                     CrossingDirection::Positive, cfg);
    return hit.y;
}

// Signed z-gap between W^cu(Q6) and W^cs(Q3) on the section y = y_probe,
// measured on the outgoing branch (z > 0). Zero exactly when the two
// manifolds form one connecting orbit.
inline double separation_function(const Params& p, double y_probe, double y_max = 1e3,
                                  const IntegratorConfig& cfg = IntegratorConfig::tight())
{
    const auto f = [&p](const Vec<2>& r) { return vf_reduced(r, p); };
    const auto jac = [&p](const Vec<2>& r) { return jacobian_reduced(r, p); };
    // backward leg in slowed time: the W^cs seed lives at z ~ (xi/alpha) y_max
    const auto fb = [&p](const Vec<2>& r) {
        const ReducedState d = vf_reduced_slowed(r, p);
        return Vec<2>{-d[0], -d[1]};
    };
    const auto jacb = fd_jacobian<2>(fb);
    const auto on_probe = [y_probe](const Vec<2>& r) { return r[0] - y_probe; };

    // forward W^cu: first outgoing crossing (y increasing)
    const Vec<2> cu_seed{y_max, wcu_seed_z(y_max, p)};
    double z_cu;
    {
        auto down = integrate_to_event<2>(f, jac, cu_seed, 0.0, 6.0 * y_max, on_probe,
                                          CrossingDirection::Negative, cfg);
        auto up = integrate_to_event<2>(f, jac, down.y, down.t, down.t + 6.0 * y_max,
                                        on_probe, CrossingDirection::Positive, cfg);
        z_cu = up.y[1];
    }
    // backward W^cs: first crossing with y decreasing in backward time
    const Vec<2> cs_seed{y_max, wcs_seed_z(y_max, p)};
    double z_cs;
    {
        auto hit = integrate_to_event<2>(fb, jacb, cs_seed, 0.0, 4e3, on_probe,
                                         CrossingDirection::Negative, cfg);
        z_cs = hit.y[1];
    }
    return z_cu - z_cs;
}

// ------------------------------------------------------------- the set L

// L is the line x = -(1+alpha) z, invariant for the heuristic flow below.
inline double L_x(double z, const Params& p) { return -(1.0 + p.alpha) * z; }

inline State heuristic_L_vf(const State& s, const Params& p)
{
    return {-(s[0] + (1.0 + p.alpha) * s[2]), 1.0, 0.0};
}

// e^{-2z} > eps: where the division by e^z keeps the z-equation formally
// subordinate.
inline bool heuristic_valid(double z, double eps)
{
    return z < 0.5 * std::log(1.0 / eps);
}

// ------------------------------------------------------------- Gamma_0

struct Segment {
    std::string name;
    ChartId chart;                       // chart of the closed form, AFFINE for numeric
    bool closed_form = true;
    double a = 0.0, b = 1.0;             // parameter interval
    std::function<Vec<3>(double)> coords; // chart coords at parameter value
    SphereState start{}, end{};          // endpoint anchors on S^3
    bool forward = true;                 // orientation in cycle order

    std::vector<SphereState> sphere_samples(std::size_t n) const
    {
        std::vector<SphereState> out;
        out.reserve(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            const double t = a + (b - a) * double(i) / double(n);
            out.push_back(chart_to_sphere({chart, coords(t)}));
        }
        return out;
    }
};

struct SingularCycle {
    Params p;
    AnchorPoints anchors;
    std::vector<Segment> segments; // cycle order: gamma3 gamma4 gamma7 gamma9 Wcu

    std::vector<SphereState> sphere_samples(std::size_t n_per_segment) const
    {
        std::vector<SphereState> out;
        for (const auto& s : segments) {
            auto part = s.sphere_samples(n_per_segment);
            out.insert(out.end(), part.begin(), part.end());
        }
        return out;
    }

    // worst chordal gap between consecutive segment endpoints
    double closure_error() const
    {
        double worst = 0.0;
        for (std::size_t i = 0; i < segments.size(); ++i) {
            const SphereState a = segments[i].end;
            const SphereState b = segments[(i + 1) % segments.size()].start;
            const double d = std::sqrt((a.xb - b.xb) * (a.xb - b.xb) +
                                       (a.yb - b.yb) * (a.yb - b.yb) +
                                       (a.zb - b.zb) * (a.zb - b.zb) +
                                       (a.wb - b.wb) * (a.wb - b.wb));
            worst = std::max(worst, d);
        }
        return worst;
    }
};

// Closed cycle of Definition characterizing the eps -> 0 limit; requires
// alpha > xi. The W^cu(Q6) piece is numeric with analytic tails toward
// its equator endpoints.
inline SingularCycle build_gamma0(const Params& p, double y_max = 1e3,
                                  double y_tail = 1e6, double z_tail = 1e4)
{
    SingularCycle g;
    g.p = p;
    g.anchors = anchor_points(p);
    const double al = p.alpha, xi = p.xi;

    const SphereState Q1 = chart_to_sphere({ChartId::PHI3, g.anchors.q1_phi3});
    const SphereState Q2 = chart_to_sphere({ChartId::PHI3, g.anchors.q2_phi3});
    const SphereState Q4 = chart_to_sphere({ChartId::PHI3, g.anchors.q4_phi3});
    const SphereState Q5 = chart_to_sphere({ChartId::PHI1, g.anchors.q5_phi1});
    const SphereState Q6 = chart_to_sphere({ChartId::PHI1, g.anchors.q6_phi1});

    {
        Segment s;
        s.name = "gamma3";
        s.chart = ChartId::PHI3;
        s.a = -1.0;
        s.b = -1.0 - al;
        s.coords = [](double x3) { return Vec<3>{x3, 0.0, 0.0}; };
        s.start = Q1;
        s.end = Q2;
        g.segments.push_back(std::move(s));
    }
    {
        Segment s;
        s.name = "gamma4";
        s.chart = ChartId::PHI3;
        s.a = 0.0;
        s.b = 2.0 * al / xi;
        s.coords = [al](double y3) { return Vec<3>{-1.0 - al, y3, 0.0}; };
        s.start = Q2;
        s.end = Q4;
        g.segments.push_back(std::move(s));
    }
    {
        Segment s;
        s.name = "gamma7";
        s.chart = ChartId::PHI1;
        s.a = xi / (2.0 * al);
        s.b = xi * (1.0 - al) / (2.0 * al);
        s.coords = [al, xi](double z1) {
            return Vec<3>{-xi * (1.0 + al) / (2.0 * al), z1, 0.0};
        };
        s.start = Q4;
        s.end = Q5;
        g.segments.push_back(std::move(s));
    }
    if (p.alpha != 1.0) {
        // gamma9 runs along C_infty from Q5 to Q6; empty exactly at
        // alpha = 1 where Q5 and Q6 coincide.
        Segment s;
        s.name = "gamma9";
        s.chart = ChartId::PHI1;
        s.a = xi * (1.0 - al) / (2.0 * al);
        s.b = 0.0;
        s.coords = [xi](double z1) { return Vec<3>{-xi - z1, z1, 0.0}; };
        s.start = Q5;
        s.end = Q6;
        g.segments.push_back(std::move(s));
    }
    {
        // W^cu(Q6): numeric middle part plus asymptotic tails reaching the
        // equator anchors
        Segment s;
        s.name = "Wcu_Q6";
        s.chart = ChartId::AFFINE;
        s.closed_form = false;
        auto mid = wcu_q6(p, y_max, 400, 4.8);
        const Vec<2> mid_end = mid.traj.back_state();
        auto far_part = extend_reduced_slowed(p, mid_end, z_tail, 200);
        // stitch: tail toward Q6 (log-spaced y in [y_max, y_tail]),
        // numeric curve, slowed extension toward Q1
        auto samples = std::make_shared<std::vector<Vec<3>>>();
        const int n_tail = 120;
        for (int i = n_tail; i >= 1; --i) {
            const double y = y_max * std::pow(y_tail / y_max, double(i) / n_tail);
            samples->push_back({m_graph(y, wcu_seed_z(y, p), p), y, wcu_seed_z(y, p)});
        }
        for (const auto& q : mid.samples) samples->push_back(q);
        bool past = false;
        for (const auto& q : far_part.samples) {
            if (!past && q[2] <= mid.samples.back()[2]) continue;
            past = true;
            samples->push_back(q);
        }
        s.a = 0.0;
        s.b = 1.0;
        s.coords = [samples](double t) {
            const double pos = t * double(samples->size() - 1);
            const std::size_t i = std::min(samples->size() - 2, std::size_t(pos));
            const double fr = pos - double(i);
            const Vec<3>&A = (*samples)[i], &B = (*samples)[i + 1];
            return Vec<3>{A[0] + fr * (B[0] - A[0]), A[1] + fr * (B[1] - A[1]),
                          A[2] + fr * (B[2] - A[2])};
        };
        s.start = Q6;
        s.end = Q1;
        g.segments.push_back(std::move(s));
    }
    return g;
}

// ------------------------------------------------------------ Hausdorff

inline double chordal(const SphereState& a, const SphereState& b)
{
    return std::sqrt((a.xb - b.xb) * (a.xb - b.xb) + (a.yb - b.yb) * (a.yb - b.yb) +
                     (a.zb - b.zb) * (a.zb - b.zb) + (a.wb - b.wb) * (a.wb - b.wb));
}

inline double hausdorff_sets(const std::vector<SphereState>& A,
                             const std::vector<SphereState>& B)
{
    auto directed = [](const std::vector<SphereState>& P, const std::vector<SphereState>& Q) {
        double sup = 0.0;
        for (const auto& a : P) {
            double inf = std::numeric_limits<double>::infinity();
            for (const auto& b : Q) inf = std::min(inf, chordal(a, b));
            sup = std::max(sup, inf);
        }
        return sup;
    };
    return std::max(directed(A, B), directed(B, A));
}

// Symmetric Hausdorff distance between two sampled curves on S^3; the
// sampling is doubled until the value moves by less than 1%.
inline double hausdorff_densified(
    const std::function<std::vector<SphereState>(std::size_t)>& sample_a,
    const std::function<std::vector<SphereState>(std::size_t)>& sample_b,
    std::size_t n0 = 500)
{
    double prev = -1.0;
    for (std::size_t n = n0; n <= 16 * n0; n *= 2) {
        const double d = hausdorff_sets(sample_a(n), sample_b(n));
        if (prev >= 0.0 && std::abs(d - prev) <= 0.01 * prev) return d;
        prev = d;
    }
    return prev;
}

} // namespace relaxcycle

#endif
