#ifndef RELAXCYCLE_COMPACTIFY_HPP
#define RELAXCYCLE_COMPACTIFY_HPP

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "relaxcycle/core_model.hpp"
#include "relaxcycle/errors.hpp"
#include "relaxcycle/linalg.hpp"
#include "relaxcycle/params.hpp"

// Central projection of (x, y, z) onto the upper hemisphere of S^3 and the
// two directional charts used to follow orbits out to large y or large z:
//
//   phi1 (valid for y > 0):  x1 = x/y,  z1 = z/y,  w1 = 1/y
//   phi3 (valid for z > 0):  x3 = x/z,  y3 = y/z,  w3 = 1/z
//
// The chart vector fields below equal the pushforward of the slow field
// multiplied by the positive factor eps * e^{-z}; the factor is exposed so
// that integrations can recover physical slow time.

namespace relaxcycle {

struct SphereState {
    double xb, yb, zb, wb;

    double norm_err() const
    {
        return std::abs(xb * xb + yb * yb + zb * zb + wb * wb - 1.0);
    }
};

enum class ChartId { AFFINE, PHI1, PHI3 };

inline const char* chart_name(ChartId id)
{
    switch (id) {
        case ChartId::AFFINE: return "affine";
        case ChartId::PHI1: return "phi1";
        case ChartId::PHI3: return "phi3";
    }
    return "?";
}

struct ChartPoint {
    ChartId chart = ChartId::AFFINE;
    Vec<3> u{}; // affine: (x,y,z); phi1: (x1,z1,w1); phi3: (x3,y3,w3)
};

inline SphereState to_sphere(const State& s)
{
    const double n = std::sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2] + 1.0);
    return {s[0] / n, s[1] / n, s[2] / n, 1.0 / n};
}

inline State from_sphere(const SphereState& q)
{
    if (!(q.wb > 0.0)) throw DomainError("from_sphere: point on the equator (w = 0)");
    return {q.xb / q.wb, q.yb / q.wb, q.zb / q.wb};
}

inline ChartPoint affine_to_phi1(const State& s)
{
    if (!(s[1] > 0.0)) throw DomainError("affine_to_phi1: requires y > 0");
    return {ChartId::PHI1, {s[0] / s[1], s[2] / s[1], 1.0 / s[1]}};
}

inline ChartPoint affine_to_phi3(const State& s)
{
    if (!(s[2] > 0.0)) throw DomainError("affine_to_phi3: requires z > 0");
    return {ChartId::PHI3, {s[0] / s[2], s[1] / s[2], 1.0 / s[2]}};
}

inline State phi1_to_affine(const Vec<3>& u)
{
    if (!(u[2] > 0.0)) throw DomainError("phi1_to_affine: requires w1 > 0");
    return {u[0] / u[2], 1.0 / u[2], u[1] / u[2]};
}

inline State phi3_to_affine(const Vec<3>& u)
{
    if (!(u[2] > 0.0)) throw DomainError("phi3_to_affine: requires w3 > 0");
    return {u[0] / u[2], u[1] / u[2], 1.0 / u[2]};
}

// chart overlap y3 > 0 (equivalently z1 > 0)
inline Vec<3> phi3_to_phi1(const Vec<3>& u3)
{
    if (!(u3[1] > 0.0)) throw DomainError("phi3_to_phi1: requires y3 > 0");
    return {u3[0] / u3[1], 1.0 / u3[1], u3[2] / u3[1]};
}

inline Vec<3> phi1_to_phi3(const Vec<3>& u1)
{
    if (!(u1[1] > 0.0)) throw DomainError("phi1_to_phi3: requires z1 > 0");
    return {u1[0] / u1[1], 1.0 / u1[1], u1[2] / u1[1]};
}

inline State chart_to_affine(const ChartPoint& cp)
{
    switch (cp.chart) {
        case ChartId::AFFINE: return cp.u;
        case ChartId::PHI1: return phi1_to_affine(cp.u);
        case ChartId::PHI3: return phi3_to_affine(cp.u);
    }
    throw DomainError("chart_to_affine: bad chart");
}

inline ChartPoint affine_to_chart(ChartId id, const State& s)
{
    switch (id) {
        case ChartId::AFFINE: return {ChartId::AFFINE, s};
        case ChartId::PHI1: return affine_to_phi1(s);
        case ChartId::PHI3: return affine_to_phi3(s);
    }
    throw DomainError("affine_to_chart: bad chart");
}

inline ChartPoint convert_chart(const ChartPoint& cp, ChartId target)
{
    if (cp.chart == target) return cp;
    if (cp.chart == ChartId::PHI1 && target == ChartId::PHI3)
        return {ChartId::PHI3, phi1_to_phi3(cp.u)};
    if (cp.chart == ChartId::PHI3 && target == ChartId::PHI1)
        return {ChartId::PHI1, phi3_to_phi1(cp.u)};
    return affine_to_chart(target, chart_to_affine(cp));
}

inline SphereState chart_to_sphere(const ChartPoint& cp)
{
    switch (cp.chart) {
        case ChartId::AFFINE: return to_sphere(cp.u);
        case ChartId::PHI1: {
            // direction (x1, 1, z1, w1), y-component positive
            const double n = std::sqrt(cp.u[0] * cp.u[0] + 1.0 + cp.u[1] * cp.u[1] +
                                       cp.u[2] * cp.u[2]);
            return {cp.u[0] / n, 1.0 / n, cp.u[1] / n, cp.u[2] / n};
        }
        case ChartId::PHI3: {
            const double n = std::sqrt(cp.u[0] * cp.u[0] + cp.u[1] * cp.u[1] + 1.0 +
                                       cp.u[2] * cp.u[2]);
            return {cp.u[0] / n, cp.u[1] / n, 1.0 / n, cp.u[2] / n};
        }
    }
    throw DomainError("chart_to_sphere: bad chart");
}

// F(s) = 1 - e^{-s}; expm1 keeps it accurate near s = 0 where it multiplies
// small w.
inline double F(double s) { return -std::expm1(-s); }

// phi3 chart field, equal to eps*e^{-1/w3} times the pushforward of the
// slow field. Total for w3 > 0; the flat factor is 0 at w3 <= 0.
inline Vec<3> vf_phi3(const Vec<3>& u, const Params& p)
{
    const double x3 = u[0], y3 = u[1], w3 = u[2];
    const double flat = (w3 > 0.0) ? std::exp(-2.0 / w3) : 0.0;
    const double v = y3 + (x3 + 1.0) / p.xi;
    Vec<3> d{};
    d[0] = -p.eps * (x3 + 1.0 + p.alpha) + x3 * flat * v;
    d[1] = p.eps * w3 * ((w3 > 0.0) ? F(1.0 / w3) : 1.0) + y3 * flat * v;
    d[2] = w3 * flat * v;
    return d;
}

// phi1 chart field, same rescaling eps*e^{-z}. Exponentials are guarded:
// deep z1/w1 < 0 raises the range error that signals a chart switch.
inline Vec<3> vf_phi1(const Vec<3>& u, const Params& p)
{
    const double x1 = u[0], z1 = u[1], w1 = u[2];
    if (!(w1 > 0.0)) throw DomainError("vf_phi1: requires w1 > 0");
    const double zq = z1 / w1; // this is z
    const double e2 =
        detail::checked_exp(-2.0 * zq, "vf_phi1: e^{-2z} out of range", {x1, z1, w1});
    const double fz = F(zq);
    Vec<3> d{};
    d[0] = -p.eps * (w1 * x1 * fz + (x1 + (1.0 + p.alpha) * z1));
    d[1] = -p.eps * w1 * z1 * fz - e2 * (1.0 + (x1 + z1) / p.xi);
    d[2] = -p.eps * w1 * w1 * fz;
    return d;
}

// wraps the three fields with a common signature; also reports the
// time-rescaling factor dt/ds (physical slow time per unit chart time)
inline Vec<3> chart_field(ChartId id, const Vec<3>& u, const Params& p)
{
    switch (id) {
        case ChartId::AFFINE: return vf_slow(u, p);
        case ChartId::PHI1: return vf_phi1(u, p);
        case ChartId::PHI3: return vf_phi3(u, p);
    }
    throw DomainError("chart_field: bad chart");
}

inline double chart_time_rescale(ChartId id, const Vec<3>& u, const Params& p)
{
    switch (id) {
        case ChartId::AFFINE: return 1.0;
        case ChartId::PHI1: {
            if (!(u[2] > 0.0)) throw DomainError("chart_time_rescale: w1 <= 0");
            const double z = u[1] / u[2];
            return p.eps * detail::checked_exp(-z, "chart_time_rescale: e^-z", u);
        }
        case ChartId::PHI3: {
            if (!(u[2] > 0.0)) return 0.0;
            return p.eps * std::exp(-1.0 / u[2]);
        }
    }
    throw DomainError("chart_time_rescale: bad chart");
}

// z in affine coordinates, readable from any chart (used for amplitude
// tracking).
inline double z_of(const ChartPoint& cp)
{
    switch (cp.chart) {
        case ChartId::AFFINE: return cp.u[2];
        case ChartId::PHI1: return cp.u[1] / cp.u[2];
        case ChartId::PHI3: return 1.0 / cp.u[2];
    }
    throw DomainError("z_of: bad chart");
}

// Equilibria of the flow on the equator circle C_infty of the compactified
// critical manifold. The xb components are not printed anywhere as sphere
// data; they follow from membership in C_infty (xb = -xi*yb - zb).
struct EquatorPoint {
    std::string name;
    SphereState q;
    bool derived_x = false; // xb not printed anywhere; it follows from C_infty
};

inline SphereState equator_from_direction(double dx, double dy, double dz)
{
    const double n = std::sqrt(dx * dx + dy * dy + dz * dz);
    return {dx / n, dy / n, dz / n, 0.0};
}

inline std::vector<EquatorPoint> equator_equilibria(const Params& p)
{
    std::vector<EquatorPoint> out;
    // Q1: direction of the z axis inside C_infty (yb = 0)
    out.push_back({"Q1", equator_from_direction(-1.0, 0.0, 1.0), false});
    // Q3: zb/yb = xi/alpha with yb > 0
    out.push_back(
        {"Q3", equator_from_direction(-p.xi - p.xi / p.alpha, 1.0, p.xi / p.alpha), true});
    // Q6: yb = 1, zb = 0
    out.push_back({"Q6", equator_from_direction(-p.xi, 1.0, 0.0), false});
    // Q7: zb/yb = -xi with yb > 0
    out.push_back({"Q7", equator_from_direction(0.0, 1.0, -p.xi), true});
    return out;
}

// phi1 / phi3 coordinates of equator points (w component zero).
inline Vec<3> equator_in_phi1(const SphereState& q)
{
    if (!(q.yb > 0.0)) throw DomainError("equator_in_phi1: requires yb > 0");
    return {q.xb / q.yb, q.zb / q.yb, q.wb / q.yb};
}

inline Vec<3> equator_in_phi3(const SphereState& q)
{
    if (!(q.zb > 0.0)) throw DomainError("equator_in_phi3: requires zb > 0");
    return {q.xb / q.zb, q.yb / q.zb, q.wb / q.zb};
}

// Desingularized equator fields at eps = 0: the phi3 field divided by
// e^{-2/w3} and the phi1 field divided by e^{-2 z1/w1}. Both extend to
// w = 0 and vanish identically on C_infty.
inline Vec<3> equator_field_phi3(const Vec<3>& u, const Params& p)
{
    const double v = u[1] + (u[0] + 1.0) / p.xi;
    return {u[0] * v, u[1] * v, u[2] * v};
}

inline Vec<3> equator_field_phi1(const Vec<3>& u, const Params& p)
{
    return {0.0, -(1.0 + (u[0] + u[1]) / p.xi), 0.0};
}

// Which chart an orbit should integrate in, from the affine magnitudes,
// with a 10% hysteresis band so trajectories do not thrash at the
// boundary.
struct ChartSwitchPolicy {
    double r_switch = 25.0;
    double hysteresis = 0.9;
    double dominance_margin = 1.1;

    ChartId select(const ChartPoint& cp) const
    {
        double ax, ay, az, y, z;
        bool affine_ok = true;
        if (cp.chart == ChartId::AFFINE) {
            ax = std::abs(cp.u[0]);
            ay = std::abs(cp.u[1]);
            az = std::abs(cp.u[2]);
            y = cp.u[1];
            z = cp.u[2];
        } else {
            const double w = cp.u[2];
            if (w <= 1e-12) {
                affine_ok = false;
                ax = ay = az = std::numeric_limits<double>::infinity();
                y = z = 0.0;
            } else {
                const State s = chart_to_affine(cp);
                ax = std::abs(s[0]);
                ay = std::abs(s[1]);
                az = std::abs(s[2]);
                y = s[1];
                z = s[2];
            }
        }
        const double mx = std::max({ax, ay, az});
        const double enter_affine =
            (cp.chart == ChartId::AFFINE) ? r_switch : hysteresis * r_switch;
        if (affine_ok && mx < enter_affine) return ChartId::AFFINE;

        // outside the affine box: pick the dominant positive direction
        if (!affine_ok) return cp.chart; // deep in a chart, stay there
        if (z > 0.0 && (y <= 0.0 || z >= y)) {
            if (cp.chart == ChartId::PHI1 && y > 0.0 && z < dominance_margin * y)
                return ChartId::PHI1;
            return ChartId::PHI3;
        }
        if (y > 0.0) {
            if (cp.chart == ChartId::PHI3 && z > 0.0 && y < dominance_margin * z)
                return ChartId::PHI3;
            return ChartId::PHI1;
        }
        // neither direction is covered by a chart; stay put
        return cp.chart;
    }
};

} // namespace relaxcycle

#endif
