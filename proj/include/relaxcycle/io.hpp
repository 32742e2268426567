#ifndef RELAXCYCLE_IO_HPP
#define RELAXCYCLE_IO_HPP

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "relaxcycle/blowup_atlas.hpp"
#include "relaxcycle/multichart.hpp"
#include "relaxcycle/return_map.hpp"
#include "relaxcycle/singular_cycle.hpp"

// File formats. CSV columns are documented in the README and stable;
// JSON serialization uses shortest-round-trip doubles so that written
// numbers parse back bit-identically.

namespace relaxcycle {

using nlohmann::json;

inline std::string fmt_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ------------------------------------------------------------ trajectories

// columns: t,chart,u1,u2,u3,x,y,z
inline std::string trajectory_csv(const MultiTrajectory& mt, std::size_t samples = 2000)
{
    std::ostringstream os;
    os << "t,chart,u1,u2,u3,x,y,z\n";
    for (const auto& [t, cp] : mt.timed_samples(samples)) {
        const State s = chart_to_affine(cp);
        os << fmt_double(t) << ',' << chart_name(cp.chart) << ',' << fmt_double(cp.u[0])
           << ',' << fmt_double(cp.u[1]) << ',' << fmt_double(cp.u[2]) << ','
           << fmt_double(s[0]) << ',' << fmt_double(s[1]) << ',' << fmt_double(s[2])
           << '\n';
    }
    return os.str();
}

struct TrajectoryRow {
    double t;
    std::string chart;
    Vec<3> u;
    State s;
};

inline std::vector<TrajectoryRow> parse_trajectory_csv(const std::string& text)
{
    std::vector<TrajectoryRow> rows;
    std::istringstream is(text);
    std::string line;
    std::getline(is, line); // header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        TrajectoryRow r;
        std::istringstream ls(line);
        std::string field;
        std::getline(ls, field, ',');
        r.t = std::strtod(field.c_str(), nullptr);
        std::getline(ls, r.chart, ',');
        for (int i = 0; i < 3; ++i) {
            std::getline(ls, field, ',');
            r.u[i] = std::strtod(field.c_str(), nullptr);
        }
        for (int i = 0; i < 3; ++i) {
            std::getline(ls, field, ',');
            r.s[i] = std::strtod(field.c_str(), nullptr);
        }
        rows.push_back(r);
    }
    return rows;
}

// full dense representation: segments with chart ids and knot data
inline json trajectory_json(const MultiTrajectory& mt)
{
    json segs = json::array();
    for (const auto& seg : mt.segments) {
        json knots = json::array();
        for (const auto& k : seg.traj.knots) {
            knots.push_back({{"t0", k.t0},
                             {"h", k.h},
                             {"y0", k.y0},
                             {"y1", k.y1},
                             {"cont3", k.cont3},
                             {"cont4", k.cont4}});
        }
        segs.push_back({{"chart", chart_name(seg.chart)}, {"knots", std::move(knots)}});
    }
    return {{"segments", std::move(segs)},
            {"final_time", mt.final_time},
            {"final_chart", chart_name(mt.final_point.chart)},
            {"final_u", mt.final_point.u}};
}

inline MultiTrajectory trajectory_from_json(const json& j)
{
    MultiTrajectory mt;
    for (const auto& seg : j.at("segments")) {
        MultiSegment ms;
        const std::string cn = seg.at("chart");
        ms.chart = cn == "affine" ? ChartId::AFFINE : cn == "phi1" ? ChartId::PHI1
                                                                   : ChartId::PHI3;
        for (const auto& k : seg.at("knots")) {
            DenseKnot<4> dk;
            dk.t0 = k.at("t0");
            dk.h = k.at("h");
            k.at("y0").get_to(dk.y0);
            k.at("y1").get_to(dk.y1);
            k.at("cont3").get_to(dk.cont3);
            k.at("cont4").get_to(dk.cont4);
            ms.traj.knots.push_back(dk);
        }
        mt.segments.push_back(std::move(ms));
    }
    mt.final_time = j.at("final_time");
    const std::string fc = j.at("final_chart");
    mt.final_point.chart =
        fc == "affine" ? ChartId::AFFINE : fc == "phi1" ? ChartId::PHI1 : ChartId::PHI3;
    j.at("final_u").get_to(mt.final_point.u);
    return mt;
}

// ------------------------------------------------------------ limit cycles

inline json limit_cycle_json(const LimitCycle& lc)
{
    json orbit = json::array();
    for (const auto& [t, cp] : lc.orbit)
        orbit.push_back({{"t", t}, {"chart", chart_name(cp.chart)}, {"u", cp.u}});
    return {{"alpha", lc.p.alpha},
            {"xi", lc.p.xi},
            {"eps", lc.p.eps},
            {"delta", lc.delta},
            {"converged", lc.converged},
            {"iterations", lc.iterations},
            {"fixed_point", {{"x", lc.fixed_x}, {"y", 1.0 / lc.delta}, {"z", lc.fixed_z}}},
            {"period", lc.period},
            {"min_z", lc.min_z},
            {"contraction", lc.contraction},
            {"residual", lc.residual},
            {"orbit", std::move(orbit)}};
}

inline std::string limit_cycle_csv(const LimitCycle& lc)
{
    std::ostringstream os;
    os << "t,chart,u1,u2,u3,x,y,z\n";
    for (const auto& [t, cp] : lc.orbit) {
        const State s = chart_to_affine(cp);
        os << fmt_double(t) << ',' << chart_name(cp.chart) << ',' << fmt_double(cp.u[0])
           << ',' << fmt_double(cp.u[1]) << ',' << fmt_double(cp.u[2]) << ','
           << fmt_double(s[0]) << ',' << fmt_double(s[1]) << ',' << fmt_double(s[2])
           << '\n';
    }
    return os.str();
}

// ------------------------------------------------------------- Gamma_0

inline json gamma0_json(const SingularCycle& g, std::size_t samples_per_segment = 200)
{
    json segs = json::array();
    for (const auto& s : g.segments) {
        json pts = json::array();
        for (const auto& q : s.sphere_samples(samples_per_segment))
            pts.push_back({q.xb, q.yb, q.zb, q.wb});
        segs.push_back({{"name", s.name},
                        {"chart", chart_name(s.chart)},
                        {"closed_form", s.closed_form},
                        {"sphere_points", std::move(pts)}});
    }
    return {{"alpha", g.p.alpha}, {"xi", g.p.xi}, {"segments", std::move(segs)}};
}

// -------------------------------------------------------------- manifest

inline json atlas_manifest_json()
{
    json charts = json::array();
    auto coords = [](BlowupChartId id) -> std::vector<std::string> {
        switch (id) {
            case BlowupChartId::B1_Q: return {"x", "y", "w", "r1", "e1"};
            case BlowupChartId::B1_EPS: return {"x", "y", "w", "r2", "q2"};
            case BlowupChartId::B11: return {"y", "r1", "rho1", "x1", "e11"};
            case BlowupChartId::B12: return {"y", "r1", "rho2", "x2", "w2"};
            case BlowupChartId::B122: return {"y", "r1", "rho2", "vrho2", "x22"};
            case BlowupChartId::B211: return {"y", "r2", "sigma1", "pi1", "w11"};
            case BlowupChartId::B21: return {"x", "y", "r2", "mu1", "q21"};
            case BlowupChartId::B22: return {"x", "y", "r2", "mu2", "w2"};
            case BlowupChartId::K111: return {"th1", "r1", "rho1", "w11", "e11"};
            case BlowupChartId::K112: return {"th1", "r1", "rho2", "x2", "e12"};
            case BlowupChartId::K1121: return {"r1", "rho2", "vrho1", "x21", "e121"};
            case BlowupChartId::K21: return {"z2", "sigma1", "x1", "e1"};
            case BlowupChartId::K311: return {"x11", "pi1", "mu1", "q", "e11"};
        }
        return {};
    };
    auto target = [](BlowupChartId id) {
        switch (chart_target(id)) {
            case BlowdownTarget::EXT3: return "ext_phi3 (x,y,w,q,eps)";
            case BlowdownTarget::EXT1: return "ext_phi1 (x,th1,w1,q,eps)";
            case BlowdownTarget::PHI1_AFFINE: return "phi1 chart (x1,z1,w1,eps)";
        }
        return "?";
    };
    for (BlowupChartId id : all_blowup_charts()) {
        charts.push_back({{"id", chart_name(id)},
                          {"arity", chart_arity(id)},
                          {"coordinates", coords(id)},
                          {"blowdown_target", target(id)},
                          {"cone", "radial and flat coordinates nonnegative"},
                          {"desingularization_divisor", desing_divisor_tag(id)}});
    }
    json ccs = json::array();
    for (const auto& cc : atlas_changes()) {
        ccs.push_back({{"from", chart_name(cc.src)},
                       {"to", chart_name(cc.dst)},
                       {"overlap", cc.domain},
                       {"leaf_restricted", cc.leaf_restricted}});
    }
    return {{"charts", std::move(charts)}, {"coordinate_changes", std::move(ccs)}};
}

// ------------------------------------------------------------------- SVG

// Small static line-plot writer (multi-series, fixed axes box).
struct SvgSeries {
    std::vector<double> xs, ys;
    std::string color = "#c02020";
    double width = 1.2;
};

inline std::string svg_plot(const std::vector<SvgSeries>& series, const std::string& title,
                            const std::string& xlabel, const std::string& ylabel,
                            int w = 760, int h = 520)
{
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.xs.size(); ++i) {
            xlo = std::min(xlo, s.xs[i]);
            xhi = std::max(xhi, s.xs[i]);
            ylo = std::min(ylo, s.ys[i]);
            yhi = std::max(yhi, s.ys[i]);
        }
    if (!(xhi > xlo)) xhi = xlo + 1.0;
    if (!(yhi > ylo)) yhi = ylo + 1.0;
    const double ml = 62, mr = 16, mt = 36, mb = 46;
    const double pw = w - ml - mr, ph = h - mt - mb;
    auto X = [&](double x) { return ml + pw * (x - xlo) / (xhi - xlo); };
    auto Y = [&](double y) { return mt + ph * (1.0 - (y - ylo) / (yhi - ylo)); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
       << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\""
       << ph << "\" fill=\"none\" stroke=\"#404040\"/>\n";
    char buf[64];
    for (int i = 0; i <= 4; ++i) {
        const double xv = xlo + (xhi - xlo) * i / 4, yv = ylo + (yhi - ylo) * i / 4;
        std::snprintf(buf, sizeof buf, "%.4g", xv);
        os << "<text x=\"" << X(xv) << "\" y=\"" << h - mb + 18
           << "\" font-size=\"11\" text-anchor=\"middle\">" << buf << "</text>\n";
        std::snprintf(buf, sizeof buf, "%.4g", yv);
        os << "<text x=\"" << ml - 6 << "\" y=\"" << Y(yv) + 4
           << "\" font-size=\"11\" text-anchor=\"end\">" << buf << "</text>\n";
    }
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"20\" font-size=\"13\" text-anchor=\"middle\">"
       << title << "</text>\n";
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << h - 10
       << "\" font-size=\"12\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    os << "<text x=\"16\" y=\"" << mt + ph / 2
       << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << mt + ph / 2 << ")\">" << ylabel << "</text>\n";
    for (const auto& s : series) {
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\""
           << s.width << "\" points=\"";
        for (std::size_t i = 0; i < s.xs.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", X(s.xs[i]), Y(s.ys[i]));
            os << buf;
        }
        os << "\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

inline void write_file(const std::string& path, const std::string& content)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_file: cannot open " + path);
    f << content;
}

inline std::string read_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_file: cannot open " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

} // namespace relaxcycle

#endif
