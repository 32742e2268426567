#ifndef RELAXCYCLE_CORE_MODEL_HPP
#define RELAXCYCLE_CORE_MODEL_HPP

#include <cmath>

#include "relaxcycle/errors.hpp"
#include "relaxcycle/linalg.hpp"
#include "relaxcycle/params.hpp"

// Spring-block model with Ruina rate-and-state friction, written in
// (x, y, z) = (friction state, spring deformation, log velocity).
//
//   x' = -e^z (x + (1+alpha) z)
//   y' = e^z - 1
//   eps z' = -e^{-z} (y + (x+z)/xi)
//
// The critical manifold C is the plane y + (x+z)/xi = 0.

namespace relaxcycle {

using State = Vec<3>;        // (x, y, z)
using ReducedState = Vec<2>; // (y, z) on C

// Sections of C: x = m(y,z) and z = m_tilde(x,y).
inline double m_graph(double y, double z, const Params& p) { return -p.xi * y - z; }
inline double m_tilde(double x, double y, const Params& p) { return -p.xi * y - x; }

// Right-hand side in the slow time t. Requires eps > 0.
inline State vf_slow(const State& s, const Params& p)
{
    const double ez = detail::checked_exp(s[2], "vf_slow: e^z out of range", s);
    const double emz = detail::checked_exp(-s[2], "vf_slow: e^-z out of range", s);
    State d{};
    d[0] = -ez * (s[0] + (1.0 + p.alpha) * s[2]);
    d[1] = ez - 1.0;
    d[2] = -(emz / p.eps) * (s[1] + (s[0] + s[2]) / p.xi);
    if (!std::isfinite(d[0]) || !std::isfinite(d[1]) || !std::isfinite(d[2]))
        throw RangeError("vf_slow: non-finite derivative", s, s[2]);
    return d;
}

// Right-hand side in the fast time tau = t/eps. Well defined at eps = 0
// (layer problem).
inline State vf_fast(const State& s, const Params& p)
{
    const double ez = detail::checked_exp(s[2], "vf_fast: e^z out of range", s);
    const double emz = detail::checked_exp(-s[2], "vf_fast: e^-z out of range", s);
    State d{};
    d[0] = -p.eps * ez * (s[0] + (1.0 + p.alpha) * s[2]);
    d[1] = p.eps * (ez - 1.0);
    d[2] = -emz * (s[1] + (s[0] + s[2]) / p.xi);
    return d;
}

// Single nonzero eigenvalue of the layer problem at a point of C.
inline double layer_eigenvalue(double z, const Params& p)
{
    const double emz = detail::checked_exp(-z, "layer_eigenvalue: e^-z out of range", {0, 0, z});
    return -emz / p.xi;
}

// Reduced flow on C in the (y, z) coordinates:
//   y' = e^z - 1
//   z' = xi + e^z (alpha z - xi y - xi)
inline ReducedState vf_reduced(const ReducedState& r, const Params& p)
{
    const double ez =
        detail::checked_exp(r[1], "vf_reduced: e^z out of range", {0, r[0], r[1]});
    ReducedState d{};
    d[0] = ez - 1.0;
    d[1] = p.xi + ez * (p.alpha * r[1] - p.xi * r[0] - p.xi);
    return d;
}

// Reduced flow slowed down by e^{-z}. Same orbits as vf_reduced with a
// positive time rescaling; usable far out where e^z overflows.
inline ReducedState vf_reduced_slowed(const ReducedState& r, const Params& p)
{
    const double emz =
        detail::checked_exp(-r[1], "vf_reduced_slowed: e^-z out of range", {0, r[0], r[1]});
    ReducedState d{};
    d[0] = 1.0 - emz;
    d[1] = p.xi * emz + (p.alpha * r[1] - p.xi * r[0] - p.xi);
    return d;
}

// Hamiltonian of the reduced flow at alpha = xi,
//   H = -xi e^{-xi y} (y - z + 1 - e^{-z}) + 1 - e^{-xi y},
// a Lyapunov function for alpha != xi.
inline double hamiltonian(const ReducedState& r, const Params& p)
{
    const double y = r[0], z = r[1];
    const double exy = detail::checked_exp(-p.xi * y, "hamiltonian: e^-xi*y out of range",
                                           {0, y, z});
    const double emz = detail::checked_exp(-z, "hamiltonian: e^-z out of range", {0, y, z});
    return -p.xi * exy * (y - z + 1.0 - emz) + 1.0 - exy;
}

inline Vec<2> grad_hamiltonian(const ReducedState& r, const Params& p)
{
    const double y = r[0], z = r[1];
    const double exy = detail::checked_exp(-p.xi * y, "grad_hamiltonian: e^-xi*y out of range",
                                           {0, y, z});
    const double emz = detail::checked_exp(-z, "grad_hamiltonian: e^-z out of range", {0, y, z});
    Vec<2> g{};
    g[0] = p.xi * p.xi * exy * (y - z + 1.0 - emz);
    g[1] = p.xi * exy * (1.0 - emz);
    return g;
}

// Time derivative of H along the reduced flow. The chain rule gives
//   dH/dt = xi e^{-xi y} (e^z - 1) z (alpha - xi),
// zero in the Hamiltonian regime and of one sign off it, since
// (e^z - 1) z > 0 for z != 0.
inline double dH_dt(const ReducedState& r, const Params& p)
{
    const double y = r[0], z = r[1];
    const double exy = detail::checked_exp(-p.xi * y, "dH_dt: e^-xi*y out of range", {0, y, z});
    const double ez = detail::checked_exp(z, "dH_dt: e^z out of range", {0, y, z});
    return p.xi * exy * (ez - 1.0) * z * (p.alpha - p.xi);
}

// Poisson structure of the reduced flow: vf_reduced = J grad H at alpha = xi.
inline Mat<2> poisson_matrix(const ReducedState& r, const Params& p)
{
    const double e = detail::checked_exp(p.xi * r[0] + r[1],
                                         "poisson_matrix: e^{xi*y+z} out of range",
                                         {0, r[0], r[1]});
    Mat<2> j = mat_zero<2>();
    j[0][1] = e / p.xi;
    j[1][0] = -e / p.xi;
    return j;
}

inline Mat<3> jacobian_slow(const State& s, const Params& p)
{
    const double ez = detail::checked_exp(s[2], "jacobian_slow: e^z out of range", s);
    const double emz = detail::checked_exp(-s[2], "jacobian_slow: e^-z out of range", s);
    Mat<3> j = mat_zero<3>();
    j[0][0] = -ez;
    j[0][2] = -ez * (s[0] + (1.0 + p.alpha) * s[2]) - ez * (1.0 + p.alpha);
    j[1][2] = ez;
    const double u = s[1] + (s[0] + s[2]) / p.xi;
    j[2][0] = -(emz / p.eps) / p.xi;
    j[2][1] = -emz / p.eps;
    j[2][2] = (emz / p.eps) * u - (emz / p.eps) / p.xi;
    return j;
}

inline Mat<2> jacobian_reduced(const ReducedState& r, const Params& p)
{
    const double ez =
        detail::checked_exp(r[1], "jacobian_reduced: e^z out of range", {0, r[0], r[1]});
    Mat<2> j = mat_zero<2>();
    j[0][1] = ez;
    j[1][0] = -p.xi * ez;
    j[1][1] = ez * (p.alpha * r[1] - p.xi * r[0] - p.xi) + ez * p.alpha;
    return j;
}

} // namespace relaxcycle

#endif
