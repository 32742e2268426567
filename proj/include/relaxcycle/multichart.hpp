#ifndef RELAXCYCLE_MULTICHART_HPP
#define RELAXCYCLE_MULTICHART_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "relaxcycle/compactify.hpp"
#include "relaxcycle/rosenbrock.hpp"

// Integration of the slow flow across the chart atlas. Inside a chart the
// integrator advances the chart field in chart time together with the
// physical slow time as a quadrature variable (state component 3), so
// runs that pass through different charts agree on elapsed time.

namespace relaxcycle {

struct Section {
    ChartId chart = ChartId::AFFINE;
    int coord = 2;
    double level = 0.0;
    CrossingDirection dir = CrossingDirection::Any;
    Vec<3> lo{-std::numeric_limits<double>::infinity(),
              -std::numeric_limits<double>::infinity(),
              -std::numeric_limits<double>::infinity()};
    Vec<3> hi{std::numeric_limits<double>::infinity(),
              std::numeric_limits<double>::infinity(),
              std::numeric_limits<double>::infinity()};

    bool in_window(const Vec<3>& u) const
    {
        for (int i = 0; i < 3; ++i) {
            if (i == coord) continue;
            if (u[i] < lo[i] || u[i] > hi[i]) return false;
        }
        return true;
    }
};

struct MultiSegment {
    ChartId chart;
    Trajectory<4> traj; // state (u0, u1, u2, t_phys) over chart time
};

struct MultiTrajectory {
    std::vector<MultiSegment> segments;
    ChartPoint final_point{};
    double final_time = 0.0;

    const ChartPoint& end_point() const { return final_point; }
    double end_time() const { return final_time; }
    double begin_time() const { return segments.front().traj.knots.front().y0[3]; }

    std::size_t switch_count() const { return segments.size() - 1; }

    double min_z(int samples_per_knot = 4) const
    {
        double zmin = std::numeric_limits<double>::infinity();
        for (const auto& seg : segments) {
            for (const auto& k : seg.traj.knots) {
                for (int i = 0; i <= samples_per_knot; ++i) {
                    const Vec<4> u = k.eval(k.t0 + k.h * i / samples_per_knot);
                    zmin = std::min(zmin, z_of({seg.chart, {u[0], u[1], u[2]}}));
                }
            }
        }
        return zmin;
    }

    std::vector<SphereState> sphere_samples(std::size_t n) const
    {
        std::vector<SphereState> out;
        std::size_t total_knots = 0;
        for (const auto& seg : segments) total_knots += seg.traj.knots.size();
        if (total_knots == 0) return out;
        const double per = double(n) / double(total_knots);
        double acc = 0.0;
        for (const auto& seg : segments) {
            for (const auto& k : seg.traj.knots) {
                acc += per;
                const int take = std::max(1, int(acc));
                acc -= take;
                for (int i = 0; i < take; ++i) {
                    const Vec<4> u = k.eval(k.t0 + k.h * (i + 0.5) / take);
                    out.push_back(chart_to_sphere({seg.chart, {u[0], u[1], u[2]}}));
                }
            }
        }
        return out;
    }

    // (physical time, point) samples for exports
    std::vector<std::pair<double, ChartPoint>> timed_samples(std::size_t n) const
    {
        std::vector<std::pair<double, ChartPoint>> out;
        std::size_t total_knots = 0;
        for (const auto& seg : segments) total_knots += seg.traj.knots.size();
        if (total_knots == 0) return out;
        const double per = double(n) / double(total_knots);
        double acc = 0.0;
        for (const auto& seg : segments) {
            for (const auto& k : seg.traj.knots) {
                acc += per;
                const int take = std::max(1, int(acc));
                acc -= take;
                for (int i = 0; i < take; ++i) {
                    const Vec<4> u = k.eval(k.t0 + k.h * i / std::max(1, take));
                    out.push_back({u[3], ChartPoint{seg.chart, {u[0], u[1], u[2]}}});
                }
            }
        }
        out.push_back({end_time(), end_point()});
        return out;
    }
};

struct MultiEventResult {
    ChartPoint point;
    double t_phys;
    MultiTrajectory trajectory;
};

namespace detail {

inline VecFn<4> augmented_field(ChartId id, const Params& p)
{
    return [id, &p](const Vec<4>& u) {
        const Vec<3> u3{u[0], u[1], u[2]};
        const Vec<3> d = chart_field(id, u3, p);
        return Vec<4>{d[0], d[1], d[2], chart_time_rescale(id, u3, p)};
    };
}

inline JacFn<4> augmented_jacobian(ChartId id, const Params& p)
{
    if (id == ChartId::AFFINE) {
        return [&p](const Vec<4>& u) {
            const Mat<3> j3 = jacobian_slow({u[0], u[1], u[2]}, p);
            Mat<4> j = mat_zero<4>();
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) j[r][c] = j3[r][c];
            return j;
        };
    }
    return fd_jacobian<4>(augmented_field(id, p));
}

// section coordinate in the section's chart, NaN where the conversion is
// undefined
inline double section_value(const Section& sec, ChartId chart, const Vec<4>& u)
{
    try {
        const ChartPoint cp =
            convert_chart({chart, {u[0], u[1], u[2]}}, sec.chart);
        return cp.u[sec.coord] - sec.level;
    } catch (const DomainError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

} // namespace detail

// Integrate from an affine state across charts until physical time t_end
// (section = nullptr) or until the first transversal crossing of the
// section inside its window.
inline MultiEventResult integrate_multichart_impl(
    const ChartPoint& start, double t0, double t_end, const Params& p,
    const IntegratorConfig& cfg, const ChartSwitchPolicy& policy,
    const Section* section, double cross_tol = 1e-10)
{
    MultiTrajectory mt;
    ChartPoint cp = start;
    ChartId chart = policy.select(cp);
    cp = convert_chart(cp, chart);
    double t_phys = t0;
    long steps = 0;

    auto begin_segment = [&](ChartId id) {
        mt.segments.push_back({id, {}});
    };
    begin_segment(chart);

    RosenbrockStepper<4> stepper(detail::augmented_field(chart, p),
                                 detail::augmented_jacobian(chart, p), cfg);
    double h = cfg.h_init;
    Vec<4> y{cp.u[0], cp.u[1], cp.u[2], t_phys};
    double g_prev =
        section ? detail::section_value(*section, chart, y) : std::numeric_limits<double>::quiet_NaN();

    while (true) {
        auto r = detail::accepted_step(stepper, mt.segments.back().traj.t_end(), y, h,
                                       cfg.h_min,
                                       cfg.keep_audit ? &mt.segments.back().traj.audit : nullptr,
                                       steps, cfg.max_steps);
        // chart-time origin: continue from the current segment's end
        r.knot.t0 = mt.segments.back().traj.knots.empty()
                        ? 0.0
                        : mt.segments.back().traj.t_end();
        mt.segments.back().traj.knots.push_back(r.knot);
        const auto& k = mt.segments.back().traj.knots.back();

        // section crossing?
        if (section) {
            const double g_new = detail::section_value(*section, chart, r.y1);
            const bool have = std::isfinite(g_prev) && std::isfinite(g_new);
            const bool sign_change =
                have && ((g_prev < 0 && g_new > 0) || (g_prev > 0 && g_new < 0));
            const bool dir_ok = section->dir == CrossingDirection::Any ||
                                (section->dir == CrossingDirection::Positive && g_new > g_prev) ||
                                (section->dir == CrossingDirection::Negative && g_new < g_prev);
            const bool at_start = mt.segments.size() == 1 &&
                                  mt.segments.back().traj.knots.size() == 1 &&
                                  std::abs(g_prev) <= cross_tol;
            if (sign_change && dir_ok && !at_start) {
                auto gk = [&](double th) {
                    return detail::section_value(*section, chart, k.eval_theta(th));
                };
                double lo = 0.0, hi = 1.0, glo = g_prev;
                for (int it = 0; it < 80; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double gm = gk(mid);
                    if ((glo < 0) == (gm < 0)) {
                        lo = mid;
                        glo = gm;
                    } else {
                        hi = mid;
                    }
                }
                double sc = 0.5 * (lo + hi);
                const double ds = 1e-6;
                double dg = 0.0;
                double best_s = sc, best_g = std::abs(gk(sc));
                for (int it = 0; it < cfg.newton_max_iter; ++it) {
                    const double gc = gk(sc);
                    const double sp = std::min(sc + ds, 1.0);
                    const double sm = std::max(sc - ds, 0.0);
                    dg = (gk(sp) - gk(sm)) / (sp - sm);
                    if (!(std::abs(dg) > 1e-300)) break;
                    sc = std::min(std::max(sc - gc / dg, 0.0), 1.0);
                    const double gn = std::abs(gk(sc));
                    if (gn < best_g) {
                        best_g = gn;
                        best_s = sc;
                    }
                    if (gn < cfg.newton_tol) break;
                }
                sc = best_s;
                const Vec<4> uc = k.eval_theta(sc);
                if (std::abs(gk(sc)) <= cross_tol) {
                    if (std::abs(dg / k.h) < 1e-8)
                        throw IntegrationError(IntegrationError::Kind::TangentialCrossing,
                                               "multichart: tangential section crossing",
                                               uc[3]);
                    const ChartPoint hitc =
                        convert_chart({chart, {uc[0], uc[1], uc[2]}}, section->chart);
                    if (!section->in_window(hitc.u))
                        throw IntegrationError(IntegrationError::Kind::WindowEscape,
                                               "multichart: crossed section outside window",
                                               uc[3]);
                    mt.final_point = hitc;
                    mt.final_time = uc[3];
                    return {hitc, uc[3], std::move(mt)};
                }
            }
            g_prev = g_new;
        }

        y = r.y1;
        t_phys = y[3];

        // time horizon
        if (t_phys >= t_end) {
            if (!section) {
                // locate exact physical-time endpoint on the dense output
                double lo = 0.0, hi = 1.0;
                for (int it = 0; it < 80; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (k.eval_theta(mid)[3] < t_end)
                        lo = mid;
                    else
                        hi = mid;
                }
                const Vec<4> uc = k.eval_theta(0.5 * (lo + hi));
                mt.final_point = {chart, {uc[0], uc[1], uc[2]}};
                mt.final_time = uc[3];
                return {mt.final_point, uc[3], std::move(mt)};
            }
            throw IntegrationError(IntegrationError::Kind::NoCrossing,
                                   "multichart: no section crossing before t_end", t_phys);
        }

        // chart switch?
        const ChartPoint here{chart, {y[0], y[1], y[2]}};
        const ChartId want = policy.select(here);
        if (want != chart) {
            const ChartPoint moved = convert_chart(here, want);
            chart = want;
            begin_segment(chart);
            stepper = RosenbrockStepper<4>(detail::augmented_field(chart, p),
                                           detail::augmented_jacobian(chart, p), cfg);
            y = {moved.u[0], moved.u[1], moved.u[2], t_phys};
            h = cfg.h_init;
            if (section) g_prev = detail::section_value(*section, chart, y);
        }
    }
}

inline MultiTrajectory integrate_multichart(const State& s0, double t0, double t1,
                                            const Params& p, const IntegratorConfig& cfg = {},
                                            const ChartSwitchPolicy& policy = {})
{
    return integrate_multichart_impl({ChartId::AFFINE, s0}, t0, t1, p, cfg, policy, nullptr)
        .trajectory;
}

inline MultiEventResult integrate_multichart_to_section(
    const ChartPoint& start, double t0, double t_max, const Params& p, const Section& sec,
    const IntegratorConfig& cfg = {}, const ChartSwitchPolicy& policy = {})
{
    return integrate_multichart_impl(start, t0, t_max, p, cfg, policy, &sec);
}

} // namespace relaxcycle

#endif
