// Command-line driver: simulation, limit-cycle extraction, bifurcation
// sweeps, atlas verification, and singular-cycle convergence tables.
// Exit codes: 0 success, 1 numeric failure, 2 configuration error.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "relaxcycle/atlas_checks.hpp"
#include "relaxcycle/io.hpp"

using namespace relaxcycle;
namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    double alpha = 0.8;
    double xi = 0.5;
    double eps = 1e-2;
    double delta = 0.25;
    double tol = 1e-12;
    std::string out = ".";
    std::string format = "all"; // csv, json, svg or all
    std::uint64_t seed = 12345;
    std::vector<double> eps_list;
    std::vector<double> alpha_grid;
    int threads = 0;
};

int thread_budget(int requested)
{
    int n = requested;
    if (const char* env = std::getenv("RELAXCYCLE_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) n = (n > 0) ? std::min(n, cap) : cap;
    }
    if (n <= 0) n = int(std::thread::hardware_concurrency());
    return std::max(1, n);
}

bool wants(const CommonOpts& o, const char* f)
{
    return o.format == "all" || o.format == f;
}

IntegratorConfig integrator_config(const CommonOpts& o)
{
    IntegratorConfig cfg;
    cfg.abs_tol = cfg.rel_tol = o.tol;
    return cfg;
}

void ensure_out(const CommonOpts& o) { fs::create_directories(o.out); }

std::string out_path(const CommonOpts& o, const std::string& name)
{
    return (fs::path(o.out) / name).string();
}

// ------------------------------------------------------------- simulate

int cmd_simulate(const CommonOpts& o, double t_end, std::vector<double> s0, bool reduced)
{
    ensure_out(o);
    const Params p(o.alpha, o.xi, reduced ? 0.0 : o.eps);

    std::vector<double> ts, xs, ys, zs;
    std::string csv;
    if (reduced) {
        const auto f = [&](const Vec<2>& r) { return vf_reduced(r, p); };
        const auto jac = [&](const Vec<2>& r) { return jacobian_reduced(r, p); };
        const auto traj = integrate<2>(f, jac, {s0[1], s0[2]}, 0.0, t_end,
                                       integrator_config(o));
        std::ostringstream os;
        os << "t,chart,u1,u2,u3,x,y,z\n";
        const int n = 2000;
        for (int i = 0; i <= n; ++i) {
            const double t = t_end * i / n;
            const Vec<2> r = traj.eval(t);
            const double x = m_graph(r[0], r[1], p);
            os << fmt_double(t) << ",reduced," << fmt_double(r[0]) << ','
               << fmt_double(r[1]) << ",0," << fmt_double(x) << ',' << fmt_double(r[0])
               << ',' << fmt_double(r[1]) << '\n';
            ts.push_back(t);
            xs.push_back(x);
            ys.push_back(r[0]);
            zs.push_back(r[1]);
        }
        csv = os.str();
        if (wants(o, "json"))
            write_file(out_path(o, "simulate.json"),
                       json{{"alpha", p.alpha},
                            {"xi", p.xi},
                            {"eps", 0.0},
                            {"reduced", true},
                            {"t", ts},
                            {"x", xs},
                            {"y", ys},
                            {"z", zs}}
                           .dump(2));
    } else {
        const auto mt = integrate_multichart({s0[0], s0[1], s0[2]}, 0.0, t_end, p,
                                             integrator_config(o));
        csv = trajectory_csv(mt, 2000);
        for (const auto& [t, cp] : mt.timed_samples(2000)) {
            const State s = chart_to_affine(cp);
            ts.push_back(t);
            xs.push_back(s[0]);
            ys.push_back(s[1]);
            zs.push_back(s[2]);
        }
        if (wants(o, "json"))
            write_file(out_path(o, "simulate.json"), trajectory_json(mt).dump(2));
    }
    if (wants(o, "csv")) write_file(out_path(o, "simulate.csv"), csv);
    if (wants(o, "svg")) {
        SvgSeries sx{ts, xs, "#1f6fb2", 1.2}, sy{ts, ys, "#2ca02c", 1.2},
            sz{ts, zs, "#c02020", 1.2};
        write_file(out_path(o, "simulate.svg"),
                   svg_plot({sx, sy, sz},
                            "state components against slow time (x blue, y green, z red)",
                            "t", "x, y, z"));
    }
    std::cout << "simulate: wrote outputs under " << o.out << "\n";
    return 0;
}

// ---------------------------------------------------------- limit cycle

int cmd_limit_cycle(const CommonOpts& o)
{
    ensure_out(o);
    const Params p(o.alpha, o.xi, o.eps);
    const auto setup = make_return_map_setup(p, o.delta);
    const LimitCycle lc = find_limit_cycle(setup, integrator_config(o));
    if (!lc.converged) {
        std::cerr << "limit-cycle: iteration did not converge (residual " << lc.residual
                  << ")\n";
        return 1;
    }
    if (wants(o, "json"))
        write_file(out_path(o, "limit_cycle.json"), limit_cycle_json(lc).dump(2));
    if (wants(o, "csv")) write_file(out_path(o, "limit_cycle.csv"), limit_cycle_csv(lc));
    if (wants(o, "svg")) {
        SvgSeries cyc_yz, wcu_yz, cyc_zx, l_zx, c_zx;
        for (const auto& [t, cp] : lc.orbit) {
            const State s = chart_to_affine(cp);
            cyc_yz.xs.push_back(s[1]);
            cyc_yz.ys.push_back(s[2]);
            cyc_zx.xs.push_back(s[2]);
            cyc_zx.ys.push_back(s[0]);
        }
        const auto wcu = wcu_q6(p, 1e3, 400, 1.2 / o.delta);
        for (const auto& s : wcu.samples) {
            if (s[1] < 1.5 / o.delta + 3.0) {
                wcu_yz.xs.push_back(s[1]);
                wcu_yz.ys.push_back(s[2]);
            }
        }
        wcu_yz.color = "#1f6fb2";
        double zmax = 1.0;
        for (double z : cyc_zx.xs) zmax = std::max(zmax, z);
        for (double z = 0.0; z <= zmax; z += zmax / 100) {
            l_zx.xs.push_back(z);
            l_zx.ys.push_back(L_x(z, p));
            c_zx.xs.push_back(z);
            c_zx.ys.push_back(m_graph(1.0 / o.delta, z, p));
        }
        l_zx.color = "#666666";
        c_zx.color = "#2ca02c";
        write_file(out_path(o, "limit_cycle_yz.svg"),
                   svg_plot({cyc_yz, wcu_yz}, "limit cycle (red) and W^cu(Q6) (blue)", "y",
                            "z"));
        write_file(out_path(o, "limit_cycle_zx.svg"),
                   svg_plot({cyc_zx, l_zx, c_zx},
                            "limit cycle (red), L (grey), C at y=1/delta (green)", "z",
                            "x"));
    }
    std::cout << "limit-cycle: converged in " << lc.iterations << " iterations, period "
              << lc.period << ", min z " << lc.min_z << ", contraction " << lc.contraction
              << "\n";
    return 0;
}

// ---------------------------------------------------------- bifurcation

struct SweepRecord {
    double alpha, xi, eps;
    double min_z = 0.0, period = 0.0, contraction = 0.0;
    bool converged = false;
    int iterations = 0;
    std::string error;
};

int cmd_bifurcation(const CommonOpts& o)
{
    ensure_out(o);
    if (o.alpha_grid.empty()) {
        std::cerr << "bifurcation: --alpha-grid lo:hi:n is required\n";
        return 2;
    }
    std::vector<double> eps_list =
        o.eps_list.empty() ? std::vector<double>{o.eps} : o.eps_list;

    std::vector<std::vector<SweepRecord>> lines(eps_list.size());
    IntegratorConfig cfg = integrator_config(o);
    cfg.max_steps = 800000; // fail fast near the onset where excursions stall

    const auto run_line = [&](std::size_t li) {
        const double eps = eps_list[li];
        auto& recs = lines[li];
        recs.resize(o.alpha_grid.size());
        std::optional<std::pair<double, double>> warm;
        for (std::size_t ai = 0; ai < o.alpha_grid.size(); ++ai) {
            const double alpha = o.alpha_grid[ai];
            SweepRecord r;
            r.alpha = alpha;
            r.xi = o.xi;
            r.eps = eps;
            const auto t0 = std::chrono::steady_clock::now();
            try {
                if (!(alpha > o.xi)) throw RegimeError("alpha <= xi: no singular cycle");
                const Params p(alpha, o.xi, eps);
                LimitCycle lc;
                // small cycles near the onset may not reach the default
                // sections; retry once with the sections pulled in
                for (double delta : {o.delta, 1.0 / 3.0}) {
                    try {
                        const auto setup = make_return_map_setup(p, delta);
                        FindCycleOptions opt;
                        opt.start = (delta == o.delta) ? warm : std::nullopt;
                        lc = find_limit_cycle(setup, cfg, opt);
                        if (!lc.converged && opt.start) {
                            opt.start.reset(); // cold restart from the anchor
                            lc = find_limit_cycle(setup, cfg, opt);
                        }
                    } catch (const std::exception&) {
                        lc = LimitCycle{};
                    }
                    if (lc.converged) {
                        if (delta != o.delta) r.error = "sections at 1/delta = 3";
                        break;
                    }
                }
                r.converged = lc.converged;
                r.iterations = lc.iterations;
                if (lc.converged) {
                    r.min_z = lc.min_z;
                    r.period = lc.period;
                    r.contraction = lc.contraction;
                    warm = {{lc.fixed_x, lc.fixed_z}};
                } else {
                    r.error = "no convergence";
                    warm.reset();
                }
            } catch (const std::exception& e) {
                r.error = e.what();
                warm.reset();
            }
            const auto t1 = std::chrono::steady_clock::now();
            std::cerr << "bifurcation eps=" << eps << " alpha=" << alpha
                      << (r.converged ? " ok" : " failed") << " ("
                      << std::chrono::duration<double>(t1 - t0).count() << " s)\n";
            recs[ai] = std::move(r);
        }
    };

    const int pool = std::min<int>(thread_budget(o.threads), int(eps_list.size()));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < pool; ++w)
        workers.emplace_back([&] {
            for (std::size_t li = next++; li < eps_list.size(); li = next++) run_line(li);
        });
    for (auto& w : workers) w.join();

    // Hopf point of the reduced problem: bisection on the trace of the
    // Jacobian at the origin
    double lo = 0.05, hi = 4.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const Mat<2> j = jacobian_reduced({0, 0}, Params(mid, o.xi, 1.0));
        ((j[0][0] + j[1][1]) < 0.0 ? lo : hi) = mid;
    }
    const double hopf_alpha = 0.5 * (lo + hi);

    std::ostringstream csv;
    csv << "alpha,xi,eps,min_z,period,contraction,converged,iterations,error\n";
    json jlines = json::array();
    for (std::size_t li = 0; li < eps_list.size(); ++li) {
        json pts = json::array();
        double onset = std::numeric_limits<double>::quiet_NaN();
        for (const auto& r : lines[li]) {
            csv << fmt_double(r.alpha) << ',' << fmt_double(r.xi) << ','
                << fmt_double(r.eps) << ',' << fmt_double(r.min_z) << ','
                << fmt_double(r.period) << ',' << fmt_double(r.contraction) << ','
                << (r.converged ? 1 : 0) << ',' << r.iterations << ',' << r.error << '\n';
            if (r.converged && std::isnan(onset)) onset = r.alpha;
            pts.push_back({{"alpha", r.alpha},
                           {"min_z", r.min_z},
                           {"period", r.period},
                           {"contraction", r.contraction},
                           {"converged", r.converged},
                           {"error", r.error}});
        }
        jlines.push_back({{"eps", eps_list[li]}, {"onset_alpha", onset}, {"points", pts}});
    }
    if (wants(o, "csv")) write_file(out_path(o, "bifurcation.csv"), csv.str());
    if (wants(o, "json"))
        write_file(out_path(o, "bifurcation.json"),
                   json{{"xi", o.xi}, {"hopf_alpha", hopf_alpha}, {"lines", jlines}}.dump(2));
    if (wants(o, "svg")) {
        std::vector<SvgSeries> series;
        const char* colors[] = {"#c02020", "#1f6fb2", "#2ca02c", "#8a2be2"};
        for (std::size_t li = 0; li < eps_list.size(); ++li) {
            SvgSeries s;
            s.color = colors[li % 4];
            for (const auto& r : lines[li])
                if (r.converged) {
                    s.xs.push_back(r.alpha);
                    s.ys.push_back(r.min_z);
                }
            series.push_back(std::move(s));
        }
        write_file(out_path(o, "bifurcation.svg"),
                   svg_plot(series, "min z of the limit cycle against alpha", "alpha",
                            "min z"));
    }
    std::cout << "bifurcation: Hopf point of the reduced flow at alpha = " << hopf_alpha
              << "\n";
    return 0;
}

// --------------------------------------------------------- verify-atlas

int cmd_verify_atlas(const CommonOpts& o, double perturb)
{
    ensure_out(o);
    atlas_cc_perturbation() = perturb;
    std::vector<std::string> factors;
    const Params p(o.alpha, o.xi, 0.0);
    const auto reports = run_atlas_checks(p, o.seed, &factors);
    atlas_cc_perturbation() = 0.0;

    bool all_pass = true;
    json jchecks = json::array();
    for (const auto& r : reports) {
        all_pass = all_pass && r.pass;
        jchecks.push_back({{"name", r.name},
                           {"worst_error", r.worst},
                           {"threshold", r.threshold},
                           {"pass", r.pass},
                           {"note", r.note}});
        std::cout << (r.pass ? "pass  " : "FAIL  ") << r.name << "  worst " << r.worst
                  << " (threshold " << r.threshold << ") " << r.note << "\n";
    }
    write_file(out_path(o, "verify_atlas.json"),
               json{{"alpha", o.alpha},
                    {"xi", o.xi},
                    {"seed", o.seed},
                    {"perturbation", perturb},
                    {"checks", jchecks},
                    {"desingularization_factors", factors},
                    {"manifest", atlas_manifest_json()}}
                   .dump(2));
    write_file(out_path(o, "atlas_manifest.json"), atlas_manifest_json().dump(2));
    return all_pass ? 0 : 1;
}

// ---------------------------------------------------------- convergence

int cmd_convergence(const CommonOpts& o)
{
    ensure_out(o);
    std::vector<double> eps_list =
        o.eps_list.empty() ? std::vector<double>{1e-2, 1e-3, 1e-4} : o.eps_list;
    const Params p0(o.alpha, o.xi, 0.0);
    const SingularCycle g0 = build_gamma0(p0);
    if (wants(o, "json")) write_file(out_path(o, "gamma0.json"), gamma0_json(g0).dump(2));

    std::ostringstream csv;
    csv << "eps,hausdorff,min_z,period,converged\n";
    std::vector<double> dists;
    json rows = json::array();
    for (double eps : eps_list) {
        const Params p(o.alpha, o.xi, eps);
        FindCycleOptions opt;
        opt.orbit_samples = 4000;
        const LimitCycle lc =
            find_limit_cycle(make_return_map_setup(p, o.delta), integrator_config(o), opt);
        if (!lc.converged) {
            csv << fmt_double(eps) << ",,,,0\n";
            rows.push_back({{"eps", eps}, {"converged", false}});
            continue;
        }
        const double d = hausdorff_to_cycle(lc, g0);
        dists.push_back(d);
        csv << fmt_double(eps) << ',' << fmt_double(d) << ',' << fmt_double(lc.min_z)
            << ',' << fmt_double(lc.period) << ",1\n";
        rows.push_back({{"eps", eps},
                        {"hausdorff", d},
                        {"min_z", lc.min_z},
                        {"period", lc.period},
                        {"converged", true}});
        std::cout << "eps " << eps << ": Hausdorff distance to the singular cycle " << d
                  << "\n";
    }
    bool decreasing = dists.size() >= 2;
    for (std::size_t i = 1; i < dists.size(); ++i)
        decreasing = decreasing && dists[i] < dists[i - 1];
    std::cout << "trend: "
              << (decreasing ? "strictly decreasing" : "NOT strictly decreasing") << "\n";
    if (wants(o, "csv")) write_file(out_path(o, "convergence.csv"), csv.str());
    if (wants(o, "json"))
        write_file(out_path(o, "convergence.json"),
                   json{{"alpha", o.alpha},
                        {"xi", o.xi},
                        {"rows", rows},
                        {"strictly_decreasing", decreasing}}
                       .dump(2));
    return dists.size() == eps_list.size() ? 0 : 1;
}

std::vector<double> parse_grid(const std::string& grid)
{
    double lo, hi;
    int n;
    if (std::sscanf(grid.c_str(), "%lf:%lf:%d", &lo, &hi, &n) != 3 || n < 1)
        throw std::invalid_argument("--alpha-grid expects lo:hi:n");
    std::vector<double> g;
    for (int i = 0; i < n; ++i) g.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    return g;
}

void apply_config_file(const std::string& path, CommonOpts& o)
{
    const json j = json::parse(read_file(path));
    if (j.contains("alpha")) o.alpha = j["alpha"];
    if (j.contains("xi")) o.xi = j["xi"];
    if (j.contains("eps")) o.eps = j["eps"];
    if (j.contains("delta")) o.delta = j["delta"];
    if (j.contains("tol")) o.tol = j["tol"];
    if (j.contains("out")) o.out = j["out"].get<std::string>();
    if (j.contains("format")) o.format = j["format"].get<std::string>();
    if (j.contains("seed")) o.seed = j["seed"];
    if (j.contains("threads")) o.threads = j["threads"];
    if (j.contains("eps_list")) o.eps_list = j["eps_list"].get<std::vector<double>>();
    if (j.contains("alpha_grid"))
        o.alpha_grid = parse_grid(j["alpha_grid"].get<std::string>());
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"spring-block relaxation oscillation toolkit"};
    app.require_subcommand(1);

    CommonOpts o;
    std::string config_path, eps_list_str, alpha_grid_str;
    double t_end = 100.0;
    std::vector<double> s0{0.1, 0.1, 0.1};
    bool reduced = false;
    double perturb = 0.0;

    auto add_common = [&](CLI::App* c) {
        c->add_option("--config", config_path, "JSON config file; flags override");
        c->add_option("--alpha", o.alpha, "rate-and-state parameter");
        c->add_option("--xi", o.xi, "spring stiffness");
        c->add_option("--eps", o.eps, "timescale separation");
        c->add_option("--delta", o.delta, "section parameter (sections at 1/delta)");
        c->add_option("--tol", o.tol, "integrator tolerance");
        c->add_option("--out", o.out, "output directory");
        c->add_option("--format", o.format, "csv, json, svg or all")
            ->check(CLI::IsMember({"csv", "json", "svg", "all"}));
        c->add_option("--seed", o.seed, "seed for randomized checks");
        c->add_option("--threads", o.threads, "worker pool bound");
        c->add_option("--eps-list", eps_list_str, "comma-separated eps values");
        c->add_option("--alpha-grid", alpha_grid_str, "sweep grid lo:hi:n");
    };

    auto* sim = app.add_subcommand("simulate", "integrate and export a trajectory");
    add_common(sim);
    sim->add_option("--t-end", t_end, "integration horizon in slow time");
    sim->add_option("--initial", s0, "initial state x y z")->expected(3);
    sim->add_flag("--reduced", reduced, "integrate the reduced flow on C (eps = 0)");

    auto* lcy =
        app.add_subcommand("limit-cycle", "extract the limit cycle by return-map iteration");
    add_common(lcy);

    auto* bif = app.add_subcommand("bifurcation", "sweep alpha, warm-started");
    add_common(bif);

    auto* ver = app.add_subcommand("verify-atlas", "run all blowup-atlas checks");
    add_common(ver);
    ver->add_option("--perturb-cc", perturb,
                    "test hook: perturb one coordinate-change constant");

    auto* conv =
        app.add_subcommand("convergence", "Hausdorff distances to the singular cycle");
    add_common(conv);

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_path.empty()) {
            CommonOpts flag_opts = o;
            CommonOpts merged;
            apply_config_file(config_path, merged);
            CLI::App* sub = app.get_subcommands().front();
            if (sub->count("--alpha")) merged.alpha = flag_opts.alpha;
            if (sub->count("--xi")) merged.xi = flag_opts.xi;
            if (sub->count("--eps")) merged.eps = flag_opts.eps;
            if (sub->count("--delta")) merged.delta = flag_opts.delta;
            if (sub->count("--tol")) merged.tol = flag_opts.tol;
            if (sub->count("--out")) merged.out = flag_opts.out;
            if (sub->count("--format")) merged.format = flag_opts.format;
            if (sub->count("--seed")) merged.seed = flag_opts.seed;
            if (sub->count("--threads")) merged.threads = flag_opts.threads;
            merged.eps_list = o.eps_list;
            merged.alpha_grid = o.alpha_grid;
            o = merged;
        }
        if (!eps_list_str.empty()) {
            o.eps_list.clear();
            std::istringstream is(eps_list_str);
            std::string tok;
            while (std::getline(is, tok, ',')) o.eps_list.push_back(std::stod(tok));
        }
        if (!alpha_grid_str.empty()) o.alpha_grid = parse_grid(alpha_grid_str);

        Params(o.alpha, o.xi, o.eps); // validate

        if (sim->parsed()) return cmd_simulate(o, t_end, s0, reduced);
        if (lcy->parsed()) return cmd_limit_cycle(o);
        if (bif->parsed()) return cmd_bifurcation(o);
        if (ver->parsed()) return cmd_verify_atlas(o, perturb);
        if (conv->parsed()) return cmd_convergence(o);
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
