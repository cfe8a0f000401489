// deautoconv: command-line surface for the deautoconvolution library.
// Subcommands: forward, solve, table1, illposed, check, fresnel-table.
// Exit codes: 0 success, 1 property/check failure, 2 usage/I-O error,
// 3 solver failure.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "deauto/autoconv.hpp"
#include "deauto/experiments.hpp"
#include "deauto/grid.hpp"
#include "deauto/grid_io.hpp"
#include "deauto/phantoms.hpp"
#include "deauto/regularize.hpp"
#include "deauto/report_io.hpp"

namespace {

using namespace deauto;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitSolver = 3;

DataCase parse_case(const std::string& s) {
    if (s == "full") return DataCase::Full;
    if (s == "limited") return DataCase::Limited;
    throw CLI::ValidationError("--case", "must be 'full' or 'limited'");
}

PhantomId parse_phantom(const std::string& s) {
    if (s == "x1") return PhantomId::X1;
    if (s == "x2") return PhantomId::X2;
    if (s == "x3") return PhantomId::X3;
    if (s == "product2d") return PhantomId::Product2D;
    if (s == "product3d") return PhantomId::Product3D;
    throw CLI::ValidationError("--phantom", "must be one of x1,x2,x3,product2d,product3d");
}

int env_threads_default() {
    if (const char* env = std::getenv("DEAUTOCONV_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return 1;
}

void write_grid(const GridFn& g, const std::string& path, const std::string& format) {
    bool csv = format == "csv" || (format == "auto" && path.size() > 4 &&
                                   path.compare(path.size() - 4, 4, ".csv") == 0);
    if (csv)
        write_grid_csv(g, path);
    else
        write_gfn1(g, path);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// ---------------------------------------------------------------- forward

struct ForwardOpts {
    std::string phantom;
    std::string input;
    std::string case_name = "full";
    std::string out;
    std::string format = "auto";
    int m = 50;
};

int cmd_forward(const ForwardOpts& o) {
    if (o.phantom.empty() == o.input.empty()) {
        std::cerr << "forward: give exactly one of --phantom or --in\n";
        return kExitUsage;
    }
    GridFn x = o.phantom.empty() ? read_gfn1(o.input) : sample_phantom(parse_phantom(o.phantom), o.m);
    GridFn y = autoconvolve(x, parse_case(o.case_name));
    if (!o.out.empty()) write_grid(y, o.out, o.format);
    std::cout << "norm_x=" << fmt(l2_norm(x)) << "\nnorm_Fx=" << fmt(l2_norm(y)) << "\n";
    return kExitOk;
}

// ------------------------------------------------------------------ solve

struct SolveOpts {
    std::string data;
    std::string phantom;
    std::string case_name = "full";
    int m = 50;
    double noise = 0.0;  // relative noise in percent
    std::uint64_t seed = 0;
    double alpha = 0.0;
    bool alpha_opt = false;
    double xbar_const = 0.5;
    std::optional<bool> nonneg;
    int max_iters = 5000;
    double grad_tol = 1e-8;
    std::string out;
    std::string format = "auto";
};

int cmd_solve(const SolveOpts& o) {
    if (o.data.empty() && o.phantom.empty()) {
        std::cerr << "solve: give --data or --phantom for synthetic data\n";
        return kExitUsage;
    }
    if (o.alpha_opt == (o.alpha > 0.0)) {
        std::cerr << "solve: give exactly one of --alpha or --alpha-opt\n";
        return kExitUsage;
    }
    const DataCase data_case = parse_case(o.case_name);

    std::optional<GridFn> xdagger;
    GridFn ydelta = [&] {
        if (!o.data.empty()) return read_gfn1(o.data);
        xdagger = sample_phantom(parse_phantom(o.phantom), o.m);
        return add_noise(autoconvolve(*xdagger, data_case), NoiseSpec{o.noise / 100.0, o.seed});
    }();
    if (o.alpha_opt && !xdagger) {
        std::cerr << "solve: --alpha-opt needs a known solution (synthetic --phantom data)\n";
        return kExitUsage;
    }

    GridSpec xspec = (data_case == DataCase::Full)
                         ? GridSpec::unit_cube(ydelta.spec().dim, (ydelta.spec().cells + 1) / 2)
                         : ydelta.spec();
    TikhonovConfig cfg(sample([&](std::span<const double>) { return o.xbar_const; }, xspec));
    cfg.data_case = data_case;
    cfg.nonneg = o.nonneg.value_or(data_case == DataCase::Limited);
    cfg.max_iters = o.max_iters;
    cfg.grad_tol = o.grad_tol;

    GridFn x = cfg.xbar;
    if (o.alpha_opt) {
        AlphaSelection sel = select_alpha_opt(ydelta, *xdagger, cfg);
        x = sel.x;
        std::cout << "alpha=" << fmt(sel.alpha) << "\n";
        std::cout << "rel_error=" << fmt(sel.error / l2_norm(*xdagger)) << "\n";
    } else {
        cfg.alpha = o.alpha;
        SolveResult res = minimize(ydelta, cfg.xbar, cfg);
        x = res.x;
        std::cout << "alpha=" << fmt(o.alpha) << "\niterations=" << res.iterations
                  << "\nobjective=" << fmt(res.objective_value) << "\n";
        if (xdagger)
            std::cout << "rel_error="
                      << fmt(l2_norm(combine(1.0, x, -1.0, *xdagger)) / l2_norm(*xdagger)) << "\n";
        if (!res.converged) {
            std::cerr << "solve: not converged after " << res.iterations
                      << " iterations (grad_norm=" << fmt(res.grad_norm) << ")\n";
            if (!o.out.empty()) write_grid(x, o.out, o.format);
            return kExitSolver;
        }
    }
    if (!o.out.empty()) write_grid(x, o.out, o.format);
    return kExitOk;
}

// ----------------------------------------------------------------- table1

struct Table1Opts {
    int n = 2;
    std::string case_name = "both";
    int m = 50;
    int runs = 10;
    std::uint64_t seed = 7;
    std::vector<double> levels_percent = {10, 8, 5, 2, 1, 0.8, 0.5, 0.2, 0.1, 0.05};
    std::string out_csv;
    std::string out_json;
    int threads = env_threads_default();
    bool no_timestamp = false;
};

int cmd_table1(const Table1Opts& o) {
    std::vector<DataCase> cases;
    if (o.case_name == "both")
        cases = {DataCase::Full, DataCase::Limited};
    else
        cases = {parse_case(o.case_name)};
    std::vector<double> levels;
    for (double p : o.levels_percent) levels.push_back(p / 100.0);

    std::vector<RateReport> reports;
    for (DataCase c : cases)
        reports.push_back(run_rate_study(o.n, c, o.m, levels, o.runs, o.seed, o.threads));

    std::ostringstream csv;
    write_table_csv(reports, csv, !o.no_timestamp);
    if (o.out_csv.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream os(o.out_csv);
        if (!os) throw std::runtime_error("table1: cannot open " + o.out_csv);
        os << csv.str();
    }
    if (!o.out_json.empty()) {
        nlohmann::ordered_json j = nlohmann::ordered_json::array();
        for (const auto& r : reports) j.push_back(to_json(r));
        std::ofstream os(o.out_json);
        if (!os) throw std::runtime_error("table1: cannot open " + o.out_json);
        os << j.dump(2) << "\n";
    }
    int failures = 0;
    for (const auto& r : reports) failures += r.failures;
    if (failures > 0)
        std::cerr << "table1: warning, " << failures << " cell(s) failed and were excluded\n";
    return kExitOk;
}

// --------------------------------------------------------------- illposed

struct IllposedOpts {
    std::string variant;
    int n = 2;
    int m = 50;
    double r = 0.25;
    std::vector<int> ks = {5, 10, 25};
    std::string dump_prefix;
};

int cmd_illposed(const IllposedOpts& o) {
    std::cout << "k,distance,residual" << (o.variant == "limited" ? ",bound" : "") << "\n";
    if (o.variant == "limited") {
        auto rows = demo_illposed_limited(o.n, o.m, o.r, o.ks);
        for (const auto& row : rows)
            std::cout << row.k << ',' << fmt(row.distance) << ',' << fmt(row.residual) << ','
                      << fmt(row.bound) << "\n";
    } else if (o.variant == "full") {
        GridFn xdagger = sample_phantom(o.n == 1   ? PhantomId::X1
                                        : o.n == 2 ? PhantomId::Product2D
                                                   : PhantomId::Product3D,
                                        o.m);
        auto series = demo_illposed_full(o.n, o.m, o.r, o.ks, xdagger);
        if (series.under_resolved)
            std::cerr << "illposed: warning, mesh under-resolves sin(k^2 t^2) for the largest k\n";
        for (std::size_t i = 0; i < series.rows.size(); ++i) {
            const auto& row = series.rows[i];
            std::cout << row.k << ',' << fmt(row.distance) << ',' << fmt(row.residual) << "\n";
            if (!o.dump_prefix.empty()) {
                write_gfn1(series.x_diffs[i], o.dump_prefix + "_xdiff_k" + std::to_string(row.k) + ".gfn");
                write_gfn1(series.y_diffs[i], o.dump_prefix + "_ydiff_k" + std::to_string(row.k) + ".gfn");
            }
        }
    } else {
        std::cerr << "illposed: --variant must be 'limited' or 'full'\n";
        return kExitUsage;
    }
    return kExitOk;
}

// ------------------------------------------------------------------ check

struct CheckOpts {
    std::string name;
    int n = 2;
    int m = 20;
    int trials = 20;
    int q = 0;
    std::uint64_t seed = 1;
};

GridFn random_grid(const GridSpec& spec, deauto::detail::NormalStream& rng) {
    std::vector<double> v(spec.size());
    for (double& x : v) x = rng.next();
    return GridFn(spec, std::move(v));
}

int cmd_check(const CheckOpts& o) {
    deauto::detail::NormalStream rng(o.seed);
    GridSpec spec = GridSpec::unit_cube(o.n, o.m);
    bool all_pass = true;
    auto report = [&](const std::string& what, bool pass, const std::string& detail) {
        std::cout << (pass ? "PASS" : "FAIL") << "  " << what;
        if (!detail.empty()) std::cout << "  (" << detail << ")";
        std::cout << "\n";
        if (!pass) all_pass = false;
    };

    if (o.name == "twofold") {
        double worst = 0.0;
        for (int t = 0; t < o.trials; ++t) {
            GridFn x = random_grid(spec, rng);
            for (DataCase c : {DataCase::Full, DataCase::Limited}) {
                double gap = check_twofoldness(x, c);
                double ref = l2_norm(autoconvolve(x, c));
                worst = std::max(worst, gap / std::max(ref, 1e-300));
            }
        }
        report("twofold: F(x) == F(-x)", worst <= 1e-14,
               "max relative gap " + fmt(worst) + ", seed " + std::to_string(o.seed));
    } else if (o.name == "nonunique") {
        int q = o.q > 0 ? o.q : o.m / 5;
        auto res = check_nonuniqueness(o.n, o.m, q, o.seed);
        report("nonunique: residual vanishes, distance > 0",
               res.residual <= 1e-14 && res.distance > 0.0,
               "residual " + fmt(res.residual) + ", distance " + fmt(res.distance));
        auto neg = check_nonuniqueness(o.n, o.m, q, o.seed, /*violate=*/true);
        report("nonunique: negative control residual > 0", neg.residual > 1e-3,
               "residual " + fmt(neg.residual));
    } else if (o.name == "nonlinearity") {
        double worst_id = 0.0;
        bool bound_ok = true;
        for (int t = 0; t < o.trials; ++t) {
            GridFn x = random_grid(spec, rng);
            GridFn xt = random_grid(spec, rng);
            for (DataCase c : {DataCase::Full, DataCase::Limited}) {
                auto [lhs, rhs] = nonlinearity_residual(x, xt, c);
                double direct = l2_norm(autoconvolve(combine(1.0, xt, -1.0, x), c));
                worst_id = std::max(worst_id, std::fabs(lhs - direct) / (1.0 + lhs));
                if (lhs > rhs * (1.0 + 1e-12)) bound_ok = false;
            }
        }
        report("nonlinearity: ||F(xt)-F(x)-F'(x)(xt-x)|| == ||F(xt-x)||", worst_id <= 1e-12,
               "max deviation " + fmt(worst_id));
        report("nonlinearity: lhs <= ||xt-x||^2", bound_ok, "");
    } else if (o.name == "support") {
        bool ok = true;
        for (int t = 0; t < o.trials && ok; ++t) {
            GridFn f = random_grid(spec, rng);
            GridFn g = random_grid(spec, rng);
            ok = support_inclusion_check(f, g, 1e-12);
        }
        report("support: supp(f*g) within supp(f)+supp(g)", ok, "");
    } else if (o.name == "adjoint") {
        double worst = 0.0;
        for (int t = 0; t < o.trials; ++t) {
            GridFn x = random_grid(spec, rng);
            GridFn d = random_grid(spec, rng);
            for (DataCase c : {DataCase::Full, DataCase::Limited}) {
                GridFn w = random_grid(output_spec(spec, c), rng);
                double lhs = l2_inner(derivative_apply(x, d, c), w);
                double rhs = l2_inner(d, derivative_adjoint(x, w, c));
                double scale = l2_norm(x) * l2_norm(d) * l2_norm(w);
                worst = std::max(worst, std::fabs(lhs - rhs) / std::max(scale, 1e-300));
            }
        }
        report("adjoint: <F'(x)d, w>_Y == <d, F'(x)*w>_X", worst <= 1e-10,
               "max relative gap " + fmt(worst));
    } else if (o.name == "gradient") {
        double worst = 0.0;
        GridFn ones = sample([](std::span<const double>) { return 1.0; }, spec);
        for (int t = 0; t < o.trials; ++t) {
            GridFn x = combine(1.0, random_grid(spec, rng), 3.0, ones);  // interior point
            GridFn d = random_grid(spec, rng);
            for (DataCase c : {DataCase::Full, DataCase::Limited}) {
                GridFn ydelta = random_grid(output_spec(spec, c), rng);
                TikhonovConfig cfg(ones);
                cfg.alpha = 1e-3;
                cfg.data_case = c;
                GridFn grad = gradient(x, ydelta, cfg);
                const double eps = 1e-6;
                double fp = objective(combine(1.0, x, eps, d), ydelta, cfg);
                double fm = objective(combine(1.0, x, -eps, d), ydelta, cfg);
                double fd = (fp - fm) / (2.0 * eps);
                double dir = l2_inner(grad, d);
                worst = std::max(worst, std::fabs(dir - fd) / std::max(std::fabs(dir), 1e-300));
            }
        }
        report("gradient: central differences match <grad, d>", worst <= 1e-5,
               "max relative gap " + fmt(worst) + ", seed " + std::to_string(o.seed));
    } else {
        std::cerr << "check: unknown name '" << o.name
                  << "' (expected twofold|nonunique|nonlinearity|support|adjoint|gradient)\n";
        return kExitUsage;
    }
    return all_pass ? kExitOk : kExitCheckFailed;
}

// ----------------------------------------------------------- fresnel-table

int cmd_fresnel_table(double max_s, double step) {
    if (!(step > 0.0) || max_s < 0.0) {
        std::cerr << "fresnel-table: need --step > 0 and --max >= 0\n";
        return kExitUsage;
    }
    std::cout << "s,S,C\n";
    for (double s = 0.0; s <= max_s + 1e-12; s += step)
        std::cout << fmt(s) << ',' << fmt(fresnel_S(s)) << ',' << fmt(fresnel_C(s)) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"n-dimensional deautoconvolution: forward operators, Tikhonov solver, experiments"};
    app.require_subcommand(1);

    ForwardOpts fo;
    auto* forward = app.add_subcommand("forward", "Evaluate y = F(x) and write it out");
    forward->add_option("--phantom", fo.phantom, "Phantom id: x1,x2,x3,product2d,product3d");
    forward->add_option("--in", fo.input, "Input grid file (GFN1)");
    forward->add_option("--case", fo.case_name, "Data case: full|limited")->capture_default_str();
    forward->add_option("--m", fo.m, "Cells per axis for phantoms")->capture_default_str();
    forward->add_option("--out", fo.out, "Output path (.gfn binary or .csv)");
    forward->add_option("--format", fo.format, "Output format: auto|gfn|csv")->capture_default_str();

    SolveOpts so;
    auto* solve = app.add_subcommand("solve", "Tikhonov-regularized reconstruction");
    solve->add_option("--data", so.data, "Observed data file (GFN1)");
    solve->add_option("--phantom", so.phantom, "Synthetic truth phantom");
    solve->add_option("--case", so.case_name, "Data case: full|limited")->capture_default_str();
    solve->add_option("--m", so.m, "Cells per axis for synthetic data")->capture_default_str();
    solve->add_option("--noise", so.noise, "Relative noise level in percent")->capture_default_str();
    solve->add_option("--seed", so.seed, "Noise seed")->capture_default_str();
    solve->add_option("--alpha", so.alpha, "Fixed regularization parameter");
    solve->add_flag("--alpha-opt", so.alpha_opt, "Oracle alpha selection (needs known truth)");
    solve->add_option("--xbar", so.xbar_const, "Constant reference element")->capture_default_str();
    bool nonneg_flag = false, no_nonneg_flag = false;
    solve->add_flag("--nonneg", nonneg_flag, "Constrain to nonnegative solutions");
    solve->add_flag("--no-nonneg", no_nonneg_flag, "Solve unconstrained");
    solve->add_option("--max-iters", so.max_iters, "Iteration cap")->capture_default_str();
    solve->add_option("--grad-tol", so.grad_tol, "Relative gradient tolerance")->capture_default_str();
    solve->add_option("--out", so.out, "Output path for the reconstruction");
    solve->add_option("--format", so.format, "Output format: auto|gfn|csv")->capture_default_str();

    Table1Opts to;
    auto* table1 = app.add_subcommand("table1", "Noise-level rate study (Table-1 layout)");
    table1->add_option("--n", to.n, "Dimension: 2 or 3")->capture_default_str();
    table1->add_option("--case", to.case_name, "full|limited|both")->capture_default_str();
    table1->add_option("--m", to.m, "Cells per axis")->capture_default_str();
    table1->add_option("--runs", to.runs, "Independent runs per level")->capture_default_str();
    table1->add_option("--seed", to.seed, "Base seed")->capture_default_str();
    table1->add_option("--levels", to.levels_percent, "Noise levels in percent")->delimiter(',');
    table1->add_option("--out-csv", to.out_csv, "CSV output path (default: stdout)");
    table1->add_option("--out-json", to.out_json, "JSON report path");
    table1->add_option("--threads", to.threads, "Worker threads (env DEAUTOCONV_THREADS)")
        ->capture_default_str();
    table1->add_flag("--no-timestamp", to.no_timestamp, "Suppress the timestamp header field");

    IllposedOpts io;
    auto* illposed = app.add_subcommand("illposed", "Local ill-posedness demonstrations");
    illposed->add_option("--variant", io.variant, "limited|full")->required();
    illposed->add_option("--n", io.n, "Dimension")->capture_default_str();
    illposed->add_option("--m", io.m, "Cells per axis")->capture_default_str();
    illposed->add_option("--r", io.r, "Perturbation amplitude")->capture_default_str();
    illposed->add_option("--k", io.ks, "Sequence indices")->delimiter(',');
    illposed->add_option("--dump", io.dump_prefix, "Dump x_k-x and y_k-y grids with this prefix");

    CheckOpts co;
    auto* check = app.add_subcommand("check", "Randomized property checks");
    check->add_option("name", co.name, "twofold|nonunique|nonlinearity|support|adjoint|gradient")
        ->required();
    check->add_option("--n", co.n, "Dimension")->capture_default_str();
    check->add_option("--m", co.m, "Cells per axis")->capture_default_str();
    check->add_option("--trials", co.trials, "Randomized trials")->capture_default_str();
    check->add_option("--q", co.q, "Zeroed boundary cells (nonunique)")->capture_default_str();
    check->add_option("--seed", co.seed, "Seed")->capture_default_str();

    double fresnel_max = 10.0, fresnel_step = 0.1;
    auto* fresnel = app.add_subcommand("fresnel-table", "Tabulate the Fresnel integrals S and C");
    fresnel->add_option("--max", fresnel_max, "Largest argument")->capture_default_str();
    fresnel->add_option("--step", fresnel_step, "Argument step")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*forward) return cmd_forward(fo);
        if (*solve) {
            if (nonneg_flag) so.nonneg = true;
            if (no_nonneg_flag) so.nonneg = false;
            return cmd_solve(so);
        }
        if (*table1) return cmd_table1(to);
        if (*illposed) return cmd_illposed(io);
        if (*check) return cmd_check(co);
        if (*fresnel) return cmd_fresnel_table(fresnel_max, fresnel_step);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
