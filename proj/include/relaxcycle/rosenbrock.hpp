#ifndef RELAXCYCLE_ROSENBROCK_HPP
#define RELAXCYCLE_ROSENBROCK_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "relaxcycle/errors.hpp"
#include "relaxcycle/linalg.hpp"

// Linearly implicit (Rosenbrock) one-step integrator for stiff systems,
// L-stable of order 4 with an embedded order-3 error estimate and a
// third-order continuous extension. Stage solves reuse one LU
// factorization per step; no Newton iteration is involved.

namespace relaxcycle {

struct IntegratorConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    double h_init = 1e-6;
    double h_min = 1e-14;
    double h_max = 0.0; // 0: no cap beyond the span
    long max_steps = 4000000;
    double newton_tol = 1e-12;  // event polish
    int newton_max_iter = 3;    // event polish
    bool keep_audit = false;

    static IntegratorConfig tight()
    {
        IntegratorConfig c;
        c.abs_tol = 1e-12;
        c.rel_tol = 1e-12;
        return c;
    }
};

struct StepRecord {
    double t;
    double h;
    double err; // scaled embedded estimate; accepted iff <= 1
    bool accepted;
};

template <std::size_t N>
using VecFn = std::function<Vec<N>(const Vec<N>&)>;
template <std::size_t N>
using JacFn = std::function<Mat<N>(const Vec<N>&)>;

// Forward-difference Jacobian with step 1e-7 (1 + |u_j|), the default for
// vector fields without a registered analytic Jacobian.
template <std::size_t N>
JacFn<N> fd_jacobian(VecFn<N> f)
{
    return [f](const Vec<N>& u) {
        Mat<N> j = mat_zero<N>();
        const Vec<N> f0 = f(u);
        for (std::size_t c = 0; c < N; ++c) {
            Vec<N> up = u;
            const double h = 1e-7 * (1.0 + std::abs(u[c]));
            up[c] += h;
            const Vec<N> fp = f(up);
            for (std::size_t r = 0; r < N; ++r) j[r][c] = (fp[r] - f0[r]) / h;
        }
        return j;
    };
}

template <std::size_t N>
struct DenseKnot {
    double t0;
    double h;
    Vec<N> y0;
    Vec<N> y1;
    Vec<N> cont3;
    Vec<N> cont4;

    // evaluation parameterized by theta in [0, 1]: never forms absolute
    // times, which would quantize tiny stiff steps to the ULP of t0
    Vec<N> eval_theta(double s) const
    {
        const double s1 = 1.0 - s;
        Vec<N> out{};
        for (std::size_t i = 0; i < N; ++i)
            out[i] = y0[i] * s1 + s * (y1[i] + s1 * (cont3[i] + s * cont4[i]));
        return out;
    }

    Vec<N> eval(double t) const { return eval_theta((t - t0) / h); }
};

template <std::size_t N>
struct Trajectory {
    std::vector<DenseKnot<N>> knots;
    std::vector<StepRecord> audit;

    double t_begin() const { return knots.empty() ? 0.0 : knots.front().t0; }
    double t_end() const { return knots.empty() ? 0.0 : knots.back().t0 + knots.back().h; }
    const Vec<N>& back_state() const { return knots.back().y1; }

    Vec<N> eval(double t) const
    {
        if (knots.empty()) throw std::runtime_error("Trajectory::eval: empty");
        std::size_t lo = 0, hi = knots.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi + 1) / 2;
            if (knots[mid].t0 <= t)
                lo = mid;
            else
                hi = mid - 1;
        }
        return knots[lo].eval(t);
    }
};

namespace rodas {

// Classic 6-stage stiffly accurate tableau (L-stable, order 4(3)) with
// third-order dense-output weights.
inline constexpr double gamma = 0.25;
inline constexpr double a21 = 1.544;
inline constexpr double a31 = 0.9466785280815826, a32 = 0.2557011698983284;
inline constexpr double a41 = 3.314825187068521, a42 = 2.896124015972201,
                        a43 = 0.9986419139977817;
inline constexpr double a51 = 1.221224509226641, a52 = 6.019134481288629,
                        a53 = 12.53708332932087, a54 = -0.687886036105895;
inline constexpr double c21 = -5.6688;
inline constexpr double c31 = -2.430093356833875, c32 = -0.2063599157091915;
inline constexpr double c41 = -0.1073529058151375, c42 = -9.594562251023355,
                        c43 = -20.47028614809616;
inline constexpr double c51 = 7.496443313967647, c52 = -10.24680431464352,
                        c53 = -33.99990352819905, c54 = 11.7089089320616;
inline constexpr double c61 = 8.083246795921522, c62 = -7.981132988064893,
                        c63 = -31.52159432874371, c64 = 16.31930543123136,
                        c65 = -6.058818238834054;
inline constexpr double d21 = 10.12623508344586, d22 = -7.487995877610167,
                        d23 = -34.80091861555747, d24 = -7.992771707568823,
                        d25 = 1.025137723295662;
inline constexpr double d31 = -0.6762803392801253, d32 = 6.087714651680015,
                        d33 = 16.43084320892478, d34 = 24.76722511418386,
                        d35 = -6.594389125716872;

} // namespace rodas

template <std::size_t N>
struct StepResult {
    Vec<N> y1;
    double err_scaled;
    DenseKnot<N> knot;
};

template <std::size_t N>
class RosenbrockStepper {
public:
    RosenbrockStepper(VecFn<N> f, JacFn<N> jac, IntegratorConfig cfg = {})
        : f_(std::move(f)), jac_(std::move(jac)), cfg_(cfg)
    {
    }

    const IntegratorConfig& config() const { return cfg_; }

    StepResult<N> step(double t0, const Vec<N>& y0, double h) const
    {
        using namespace rodas;
        const Mat<N> j = jac_(y0);
        Mat<N> w = mat_zero<N>();
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t k = 0; k < N; ++k) w[i][k] = -j[i][k];
            w[i][i] += 1.0 / (gamma * h);
        }
        const Lu<N> lu(w);

        const Vec<N> f0 = f_(y0);
        const Vec<N> g1 = lu.solve(f0);

        Vec<N> u = y0 + a21 * g1;
        Vec<N> fu = f_(u);
        const Vec<N> g2 = lu.solve(fu + (c21 / h) * g1);

        u = y0 + a31 * g1 + a32 * g2;
        fu = f_(u);
        const Vec<N> g3 = lu.solve(fu + (1.0 / h) * (c31 * g1 + c32 * g2));

        u = y0 + a41 * g1 + a42 * g2 + a43 * g3;
        fu = f_(u);
        const Vec<N> g4 = lu.solve(fu + (1.0 / h) * (c41 * g1 + c42 * g2 + c43 * g3));

        u = y0 + a51 * g1 + a52 * g2 + a53 * g3 + a54 * g4;
        fu = f_(u);
        const Vec<N> g5 =
            lu.solve(fu + (1.0 / h) * (c51 * g1 + c52 * g2 + c53 * g3 + c54 * g4));

        const Vec<N> yhat = u + g5; // embedded order-3 value
        fu = f_(yhat);
        const Vec<N> g6 = lu.solve(
            fu + (1.0 / h) * (c61 * g1 + c62 * g2 + c63 * g3 + c64 * g4 + c65 * g5));

        StepResult<N> res;
        res.y1 = yhat + g6;

        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sk =
                cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(y0[i]), std::abs(res.y1[i]));
            err += (g6[i] / sk) * (g6[i] / sk);
        }
        res.err_scaled = std::sqrt(err / double(N));

        res.knot.t0 = t0;
        res.knot.h = h;
        res.knot.y0 = y0;
        res.knot.y1 = res.y1;
        for (std::size_t i = 0; i < N; ++i) {
            res.knot.cont3[i] = d21 * g1[i] + d22 * g2[i] + d23 * g3[i] + d24 * g4[i] +
                                d25 * g5[i];
            res.knot.cont4[i] = d31 * g1[i] + d32 * g2[i] + d33 * g3[i] + d34 * g4[i] +
                                d35 * g5[i];
        }
        return res;
    }

    // Next step size from the scaled error (order-3 estimator).
    static double next_h(double h, double err)
    {
        const double safe = 0.9;
        const double fac =
            std::max(1.0 / 6.0, std::min(5.0, std::pow(std::max(err, 1e-30), 0.25) / safe));
        return h / fac;
    }

private:
    VecFn<N> f_;
    JacFn<N> jac_;
    IntegratorConfig cfg_;
};

namespace detail {

// One accepted adaptive step; h is updated in place. Trial-stage range
// errors shrink the step before giving up.
template <std::size_t N>
StepResult<N> accepted_step(const RosenbrockStepper<N>& st, double t, const Vec<N>& y,
                            double& h, double h_floor, std::vector<StepRecord>* audit,
                            long& steps, long max_steps)
{
    for (;;) {
        if (++steps > max_steps)
            throw IntegrationError(IntegrationError::Kind::MaxSteps,
                                   "integrate: max step count exceeded", t);
        bool range_failed = false;
        StepResult<N> r{};
        try {
            r = st.step(t, y, h);
        } catch (const RangeError&) {
            if (h <= 4.0 * h_floor) throw;
            range_failed = true;
        }
        if (!range_failed && std::isfinite(r.err_scaled) && r.err_scaled <= 1.0) {
            if (audit) audit->push_back({t, h, r.err_scaled, true});
            h = RosenbrockStepper<N>::next_h(h, r.err_scaled); // proposal for the next step
            return r;                                          // r.knot.h is the accepted size
        }
        if (audit) audit->push_back({t, h, range_failed ? -1.0 : r.err_scaled, false});
        h = range_failed ? 0.25 * h
                         : std::min(0.5 * h, RosenbrockStepper<N>::next_h(h, r.err_scaled));
        if (h < h_floor)
            throw IntegrationError(IntegrationError::Kind::StepUnderflow,
                                   "integrate: step size underflow (stiffness failure)", t);
    }
}

} // namespace detail

template <std::size_t N>
Trajectory<N> integrate(VecFn<N> f, JacFn<N> jac, const Vec<N>& y0, double t0, double t1,
                        const IntegratorConfig& cfg = {})
{
    RosenbrockStepper<N> st(f, jac, cfg);
    Trajectory<N> traj;
    const double span = t1 - t0;
    double h = std::min(cfg.h_init, span);
    const double h_cap = (cfg.h_max > 0.0) ? cfg.h_max : span;
    double t = t0;
    Vec<N> y = y0;
    long steps = 0;
    const double t_eps = 1e-14 * (1.0 + std::abs(t1));
    while (t < t1 - t_eps) {
        h = std::min({h, h_cap, t1 - t});
        auto r = detail::accepted_step(st, t, y, h, cfg.h_min, cfg.keep_audit ? &traj.audit : nullptr,
                                       steps, cfg.max_steps);
        traj.knots.push_back(r.knot);
        t += r.knot.h;
        y = r.y1;
    }
    return traj;
}

// Stop condition for event location: a scalar function of the state whose
// zero crossing in the requested direction ends the integration.
enum class CrossingDirection { Positive, Negative, Any };

template <std::size_t N>
struct EventResult {
    double t;
    Vec<N> y;
    Trajectory<N> trajectory;
};

template <std::size_t N>
EventResult<N> integrate_to_event(VecFn<N> f, JacFn<N> jac, const Vec<N>& y0, double t0,
                                  double t_max, std::function<double(const Vec<N>&)> g,
                                  CrossingDirection dir, const IntegratorConfig& cfg = {},
                                  double cross_tol = 1e-10, double transversality_min = 1e-8)
{
    RosenbrockStepper<N> st(f, jac, cfg);
    Trajectory<N> traj;
    double h = std::min(cfg.h_init, t_max - t0);
    const double h_cap = (cfg.h_max > 0.0) ? cfg.h_max : (t_max - t0);
    double t = t0;
    Vec<N> y = y0;
    double g_prev = g(y);
    long steps = 0;
    const double t_eps = 1e-14 * (1.0 + std::abs(t_max));
    while (t < t_max - t_eps) {
        h = std::min({h, h_cap, t_max - t});
        auto r = detail::accepted_step(st, t, y, h, cfg.h_min, cfg.keep_audit ? &traj.audit : nullptr,
                                       steps, cfg.max_steps);
        traj.knots.push_back(r.knot);
        const double g_new = g(r.y1);
        const bool sign_change = (g_prev < 0.0 && g_new > 0.0) || (g_prev > 0.0 && g_new < 0.0);
        const bool dir_ok = dir == CrossingDirection::Any ||
                            (dir == CrossingDirection::Positive && g_new > g_prev) ||
                            (dir == CrossingDirection::Negative && g_new < g_prev);
        // a start sitting on the section (|g| ~ rounding) must not retrigger
        const bool at_start = traj.knots.size() == 1 && std::abs(g_prev) <= cross_tol;
        if (sign_change && dir_ok && !at_start) {
            const auto& k = traj.knots.back();
            auto gth = [&](double s) { return g(k.eval_theta(s)); };
            // bisection in theta on the dense output
            double lo = 0.0, hi = 1.0;
            double glo = g_prev;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double gm = gth(mid);
                if ((glo < 0.0) == (gm < 0.0)) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            double th = 0.5 * (lo + hi);
            // Newton polish in theta; steps kept only when they improve
            const double ds = 1e-6;
            double dg_dth = 0.0;
            double best_th = th, best_g = std::abs(gth(th));
            for (int it = 0; it < cfg.newton_max_iter; ++it) {
                const double gc = gth(th);
                const double sp = std::min(th + ds, 1.0);
                const double sm = std::max(th - ds, 0.0);
                dg_dth = (gth(sp) - gth(sm)) / (sp - sm);
                if (!(std::abs(dg_dth) > 1e-300)) break;
                th = std::min(std::max(th - gc / dg_dth, 0.0), 1.0);
                const double gn = std::abs(gth(th));
                if (gn < best_g) {
                    best_g = gn;
                    best_th = th;
                }
                if (gn < cfg.newton_tol) break;
            }
            th = best_th;
            const double tc = k.t0 + th * k.h;
            const Vec<N> yc = k.eval_theta(th);
            const double dg_dt = dg_dth / k.h;
            if (std::abs(g(yc)) > cross_tol)
                throw IntegrationError(IntegrationError::Kind::NoCrossing,
                                       "integrate_to_event: root polish failed", tc);
            if (std::abs(dg_dt) < transversality_min)
                throw IntegrationError(IntegrationError::Kind::TangentialCrossing,
                                       "integrate_to_event: tangential crossing", tc);
            if (dir == CrossingDirection::Positive && dg_dt <= 0.0)
                throw IntegrationError(IntegrationError::Kind::TangentialCrossing,
                                       "integrate_to_event: wrong crossing direction", tc);
            if (dir == CrossingDirection::Negative && dg_dt >= 0.0)
                throw IntegrationError(IntegrationError::Kind::TangentialCrossing,
                                       "integrate_to_event: wrong crossing direction", tc);
            return {tc, yc, std::move(traj)};
        }
        g_prev = g_new;
        t += r.knot.h;
        y = r.y1;
    }
    throw IntegrationError(IntegrationError::Kind::NoCrossing,
                           "integrate_to_event: no crossing before t_max", t_max);
}

} // namespace relaxcycle

#endif
