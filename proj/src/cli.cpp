#include "confplane/cli.hpp"

#include "confplane/beltrami.hpp"
#include "confplane/deform.hpp"
#include "confplane/report.hpp"
#include "confplane/svg.hpp"

#include "CLI11.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace confplane::cli {

namespace {

/// Grammar violation discovered after CLI11 parsing (malformed expression,
/// bad environment value, argument outside its documented range). Reported
/// like a CLI11 error: message plus subcommand help on stderr, exit 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string shortest(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// ---- configuration knobs --------------------------------------------------

/// One numeric knob with flag > CONFPLANE_* environment > default
/// precedence; `source` records the level that supplied the value.
template <typename T>
struct Knob {
    T value{};
    std::string source = "default";
};

template <typename T>
T parse_env(const char* name, const std::string& text) {
    T out{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto res = std::from_chars(first, last, out);
    if (res.ec != std::errc{} || res.ptr != last)
        throw UsageError(std::string("environment variable ") + name +
                         " is not a valid number: " + text);
    return out;
}

template <typename T>
Knob<T> resolve(const CLI::Option* opt, const T& bound, const char* env_name) {
    if (opt->count() > 0) return {bound, "flag"};
    if (const char* env = std::getenv(env_name))
        return {parse_env<T>(env_name, env), "env"};
    return {bound, "default"};
}

template <typename T>
Knob<T> resolve_flag(const CLI::Option* opt, const T& bound) {
    return {bound, opt->count() > 0 ? "flag" : "default"};
}

template <typename T>
Json knob_json(const Knob<T>& k) {
    Json j;
    j["value"] = k.value;
    j["source"] = k.source;
    return j;
}

void require(bool ok, const std::string& message) {
    if (!ok) throw UsageError(message);
}

// ---- inputs -----------------------------------------------------------------

ExprAst wrap_parse(const std::string& text, const char* what) {
    try {
        return parse(text);
    } catch (const ParseError& e) {
        throw UsageError(std::string(what) + ": " + e.what());
    }
}

Json expr_echo(const std::string& text, const ExprAst& ast) {
    Json j;
    j["expression"] = text;
    j["normalized"] = pretty_print(ast);
    return j;
}

bool is_cpg_path(const std::string& text) {
    return text.size() > 4 && text.compare(text.size() - 4, 4, ".cpg") == 0;
}

/// Metric / coefficient component: a value ending in ".cpg" loads a CPG1
/// grid (echoed by content digest); anything else parses as an expression
/// sampled on the endpoint lattice of the requested window.
ScalarGrid load_component(const std::string& text, double window, int n,
                          Json& input, const char* key) {
    if (is_cpg_path(text)) {
        input[key]["path"] = text;
        input[key]["digest"] = file_digest(text);
        return read_cpg(text);
    }
    ExprAst ast = wrap_parse(text, key);
    input[key] = expr_echo(text, ast);
    return sample(ast, window, n);
}

// ---- CSV / plot emission ----------------------------------------------------

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    return out;
}

/// Radii ladder matching alpha_estimate's: geometric from r0 by rho up to
/// r_max, at least four rungs.
RadialMaxProfile profile_for(const ExprAst& u, double r_max) {
    AlphaOptions opt;
    int count = static_cast<int>(std::floor(std::log(r_max / opt.r0) /
                                                std::log(opt.rho) +
                                            1e-9)) +
                1;
    return profile(u, opt.r0, opt.rho, std::max(count, 4), opt.m);
}

void write_profile_csv(const RadialMaxProfile& p, const std::string& path) {
    auto out = open_out(path);
    out << "r,t,M,secant_slope\n";
    for (std::size_t k = 0; k < p.radii.size(); ++k) {
        out << shortest(p.radii[k]) << ',' << shortest(p.t(k)) << ','
            << shortest(p.values[k]) << ',';
        if (k > 0)
            out << shortest((p.values[k] - p.values[k - 1]) /
                            (p.t(k) - p.t(k - 1)));
        out << '\n';
    }
}

void write_rays_csv(const EscapeReport& r, const std::string& path) {
    auto out = open_out(path);
    out << "angle,radius,partial_length,diverged,finite_tail\n";
    for (const RayRecord& ray : r.rays)
        for (std::size_t k = 0; k < ray.checkpoints.size(); ++k)
            out << shortest(ray.angle) << ',' << shortest(ray.checkpoints[k])
                << ',' << shortest(ray.partials[k]) << ','
                << (ray.diverged ? 1 : 0) << ',' << (ray.finite_tail ? 1 : 0)
                << '\n';
}

ScalarGrid modulus_grid(const ScalarGrid& re, const ScalarGrid& im) {
    ScalarGrid m = make_grid(re.L, re.n);
    for (std::size_t k = 0; k < m.v.size(); ++k)
        m.v[k] = std::hypot(re.v[k], im.v[k]);
    return m;
}

/// φ sampled on the endpoint lattice of the concentric half-window, the
/// region the solver reports as trustworthy; spacing matches the solver
/// lattice (n/2 + 1 endpoint nodes over half the window).
ScalarGrid sample_diffeo(const PlaneDiffeo& phi, bool imag) {
    int n_out = phi.n / 2 + 1;
    ScalarGrid g = make_grid(phi.W / 2.0, n_out);
    for (int j = 0; j < n_out; ++j)
        for (int i = 0; i < n_out; ++i) {
            std::complex<double> w = phi.eval(g.x(i), g.y(j));
            g.at(i, j) = imag ? w.imag() : w.real();
        }
    return g;
}

const double flat_tol = 1e-9;
const double membership_tol = 0.03;
const double roundtrip_tol = 1e-2;

Json flatness_json(bool flat, double window, int n) {
    Json j;
    j["flat"] = flat;
    j["tol"] = flat_tol;
    j["window"] = window;
    j["n"] = n;
    return j;
}

Json solve_stats(const PlaneDiffeo& phi) {
    Json j;
    j["iterations"] = phi.iterations;
    j["residual"] = phi.residual;
    j["contraction"] = phi.contraction;
    j["min_jacobian"] = phi.min_jacobian;
    j["normalization"]["shift_re"] = phi.norm_shift.real();
    j["normalization"]["shift_im"] = phi.norm_shift.imag();
    j["normalization"]["scale_re"] = phi.norm_scale.real();
    j["normalization"]["scale_im"] = phi.norm_scale.imag();
    return j;
}

const char* error_type(const std::exception& e) {
    if (dynamic_cast<const SolveError*>(&e)) return "solve_error";
    if (dynamic_cast<const EvalError*>(&e)) return "eval_error";
    if (dynamic_cast<const SampleError*>(&e)) return "sample_error";
    if (dynamic_cast<const std::invalid_argument*>(&e)) return "invalid_argument";
    if (dynamic_cast<const std::domain_error*>(&e)) return "domain_error";
    if (dynamic_cast<const std::out_of_range*>(&e)) return "out_of_range";
    return "runtime_error";
}

CLI::App* deepest(CLI::App* a) {
    while (!a->get_subcommands().empty()) a = a->get_subcommands().front();
    return a;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
    CLI::App app{"completeness and curvature analysis of conformal metrics "
                 "e^{-2u}g0 on the plane"};
    app.name("confplane");
    app.set_version_flag("--version", tool_version);
    app.require_subcommand(1);

    // ---- analyze ------------------------------------------------------------
    struct {
        std::string u, svg_k, csv_profile, csv_rays;
        double window = 4.0, r_max = 1e6;
        int n = 129, rays = 64;
        CLI::Option *w_o, *n_o, *r_o, *a_o;
    } an;
    CLI::App* analyze = app.add_subcommand(
        "analyze", "full analysis: subharmonicity, alpha band, completeness, "
                   "ray oracle, flatness");
    analyze->add_option("--u", an.u, "conformal factor u(x,y)")->required();
    an.w_o = analyze->add_option("--window", an.window, "grid half-width")
                 ->capture_default_str();
    an.n_o = analyze->add_option("--n", an.n, "grid nodes per axis")
                 ->capture_default_str();
    an.r_o = analyze->add_option("--r-max", an.r_max, "radial extent")
                 ->capture_default_str();
    an.a_o = analyze->add_option("--rays", an.rays, "oracle ray count")
                 ->capture_default_str();
    analyze->add_option("--svg-k", an.svg_k, "write curvature heatmap SVG");
    analyze->add_option("--csv-profile", an.csv_profile,
                        "write radial max profile CSV");
    analyze->add_option("--csv-rays", an.csv_rays,
                        "write per-ray partial-length CSV");

    // ---- alpha ----------------------------------------------------------------
    struct {
        std::string u, csv_profile;
        double r_max = 1e6;
        CLI::Option* r_o;
    } al;
    CLI::App* alpha_cmd =
        app.add_subcommand("alpha", "alpha invariant band of u");
    alpha_cmd->add_option("--u", al.u, "conformal factor u(x,y)")->required();
    al.r_o = alpha_cmd->add_option("--r-max", al.r_max, "radial extent")
                 ->capture_default_str();
    alpha_cmd->add_option("--csv-profile", al.csv_profile,
                          "write radial max profile CSV");

    // ---- curvature -------------------------------------------------------------
    struct {
        std::string u, svg, out_cpg, out_csv;
        double window = 4.0;
        int n = 129;
        CLI::Option *w_o, *n_o;
    } cu;
    CLI::App* curvature_cmd = app.add_subcommand(
        "curvature", "Gauss curvature grid of e^{-2u}g0");
    curvature_cmd->add_option("--u", cu.u, "conformal factor u(x,y)")
        ->required();
    cu.w_o = curvature_cmd->add_option("--window", cu.window, "grid half-width")
                 ->capture_default_str();
    cu.n_o = curvature_cmd->add_option("--n", cu.n, "grid nodes per axis")
                 ->capture_default_str();
    curvature_cmd->add_option("--svg", cu.svg, "write curvature heatmap SVG");
    curvature_cmd->add_option("--out-cpg", cu.out_cpg,
                              "write curvature grid as CPG1");
    curvature_cmd->add_option("--out-csv", cu.out_csv,
                              "write curvature grid as CSV");

    // ---- complete -------------------------------------------------------------
    struct {
        std::string u, csv_rays;
        double r_max = 1e6;
        int rays = 64;
        CLI::Option *r_o, *a_o;
    } co;
    CLI::App* complete_cmd = app.add_subcommand(
        "complete", "completeness: alpha classifier cross-checked against "
                    "the ray oracle");
    complete_cmd->add_option("--u", co.u, "conformal factor u(x,y)")
        ->required();
    co.r_o = complete_cmd->add_option("--r-max", co.r_max, "radial extent")
                 ->capture_default_str();
    co.a_o = complete_cmd->add_option("--rays", co.rays, "oracle ray count")
                 ->capture_default_str();
    complete_cmd->add_option("--csv-rays", co.csv_rays,
                             "write per-ray partial-length CSV");

    // ---- beltrami ---------------------------------------------------------------
    CLI::App* beltrami_cmd = app.add_subcommand(
        "beltrami", "conformal decomposition and Beltrami solver");
    beltrami_cmd->require_subcommand(1);

    struct {
        std::string mu_re, mu_im, out_re, out_im, svg_mu;
        double window = 4.0;
        int n = 128;
        CLI::Option *w_o, *n_o;
    } bs;
    CLI::App* solve_cmd = beltrami_cmd->add_subcommand(
        "solve", "normalized diffeomorphism with prescribed dilatation");
    solve_cmd->add_option("--mu-re", bs.mu_re, "Re mu: CPG1 file or expression")
        ->required();
    solve_cmd->add_option("--mu-im", bs.mu_im, "Im mu: CPG1 file or expression")
        ->required();
    bs.w_o = solve_cmd->add_option("--window", bs.window, "solver half-width")
                 ->capture_default_str();
    bs.n_o = solve_cmd->add_option("--n", bs.n, "solver lattice nodes (even)")
                 ->capture_default_str();
    solve_cmd->add_option("--out-re", bs.out_re,
                          "write Re phi as CPG1 (half-window lattice)");
    solve_cmd->add_option("--out-im", bs.out_im,
                          "write Im phi as CPG1 (half-window lattice)");
    solve_cmd->add_option("--svg-mu", bs.svg_mu, "write |mu| heatmap SVG");

    struct {
        std::string E, F, G, out_lambda, out_mu_re, out_mu_im, svg_mu;
        double window = 4.0;
        int n = 129;
        CLI::Option *w_o, *n_o;
    } bd;
    CLI::App* decompose_cmd = beltrami_cmd->add_subcommand(
        "decompose", "metric to conformal factor lambda and coefficient mu");
    decompose_cmd->add_option("--E", bd.E, "E component: CPG1 file or expression")
        ->required();
    decompose_cmd->add_option("--F", bd.F, "F component: CPG1 file or expression")
        ->required();
    decompose_cmd->add_option("--G", bd.G, "G component: CPG1 file or expression")
        ->required();
    bd.w_o = decompose_cmd
                 ->add_option("--window", bd.window,
                              "sampling half-width for expression components")
                 ->capture_default_str();
    bd.n_o = decompose_cmd
                 ->add_option("--n", bd.n,
                              "sampling nodes for expression components")
                 ->capture_default_str();
    decompose_cmd->add_option("--out-lambda", bd.out_lambda,
                              "write lambda as CPG1");
    decompose_cmd->add_option("--out-mu-re", bd.out_mu_re,
                              "write Re mu as CPG1");
    decompose_cmd->add_option("--out-mu-im", bd.out_mu_im,
                              "write Im mu as CPG1");
    decompose_cmd->add_option("--svg-mu", bd.svg_mu, "write |mu| heatmap SVG");

    struct {
        std::string E, F, G;
        double window = 4.0;
        int n = 129;
        CLI::Option *w_o, *n_o;
    } br;
    CLI::App* roundtrip_cmd = beltrami_cmd->add_subcommand(
        "roundtrip", "decompose, solve, recover, pull back; report the "
                     "deviation from the input metric");
    roundtrip_cmd->add_option("--E", br.E, "E component: CPG1 file or expression")
        ->required();
    roundtrip_cmd->add_option("--F", br.F, "F component: CPG1 file or expression")
        ->required();
    roundtrip_cmd->add_option("--G", br.G, "G component: CPG1 file or expression")
        ->required();
    br.w_o = roundtrip_cmd
                 ->add_option("--window", br.window,
                              "sampling half-width for expression components")
                 ->capture_default_str();
    br.n_o = roundtrip_cmd
                 ->add_option("--n", br.n,
                              "sampling nodes for expression components")
                 ->capture_default_str();

    // ---- deform ------------------------------------------------------------------
    CLI::App* deform_cmd =
        app.add_subcommand("deform", "deformation path generators");
    deform_cmd->require_subcommand(1);

    struct {
        std::string u0, u1;
        double s = 0.0, r_max = 1e6;
        CLI::Option* r_o;
    } dc;
    CLI::App* convex_cmd = deform_cmd->add_subcommand(
        "convex", "convex combination (1-s) u0 + s u1 with membership check");
    convex_cmd->add_option("--u0", dc.u0, "first endpoint factor")->required();
    convex_cmd->add_option("--u1", dc.u1, "second endpoint factor")->required();
    convex_cmd->add_option("--s", dc.s, "combination parameter in [0,1]")
        ->required();
    dc.r_o = convex_cmd->add_option("--r-max", dc.r_max, "radial extent")
                 ->capture_default_str();

    struct {
        std::string u, out_e, csv_rays;
        double s = 0.0, window = 4.0, r_max = 1e6;
        int n = 129, rays = 64;
        CLI::Option *w_o, *n_o, *r_o, *a_o;
    } dp;
    CLI::App* path_cmd = deform_cmd->add_subcommand(
        "complete-path", "completion path metric s + e^{-2u} at parameter s");
    path_cmd->add_option("--u", dp.u, "conformal factor u(x,y)")->required();
    path_cmd->add_option("--s", dp.s, "path parameter, s >= 0")->required();
    dp.w_o = path_cmd->add_option("--window", dp.window, "grid half-width")
                 ->capture_default_str();
    dp.n_o = path_cmd->add_option("--n", dp.n, "grid nodes per axis")
                 ->capture_default_str();
    dp.r_o = path_cmd->add_option("--r-max", dp.r_max, "radial extent")
                 ->capture_default_str();
    dp.a_o = path_cmd->add_option("--rays", dp.rays, "oracle ray count")
                 ->capture_default_str();
    path_cmd->add_option("--out-e", dp.out_e,
                         "write the conformal component E = G as CPG1");
    path_cmd->add_option("--csv-rays", dp.csv_rays,
                         "write per-ray partial-length CSV");

    struct {
        std::string f, out_e, out_f, out_g, svg_k;
        bool builtin = false;
        double window = 4.0;
        int n = 129;
        CLI::Option *w_o, *n_o;
    } dr;
    CLI::App* revolve_cmd = deform_cmd->add_subcommand(
        "revolve", "first fundamental form of a convex revolution graph");
    revolve_cmd->add_option("--f", dr.f, "profile f(r), written in x");
    revolve_cmd->add_flag("--builtin", dr.builtin,
                          "use the built-in plateau-cone profile");
    dr.w_o = revolve_cmd->add_option("--window", dr.window, "grid half-width")
                 ->capture_default_str();
    dr.n_o = revolve_cmd->add_option("--n", dr.n, "grid nodes per axis")
                 ->capture_default_str();
    revolve_cmd->add_option("--out-e", dr.out_e, "write E as CPG1");
    revolve_cmd->add_option("--out-f", dr.out_f, "write F as CPG1");
    revolve_cmd->add_option("--out-g", dr.out_g, "write G as CPG1");
    revolve_cmd->add_option("--svg-k", dr.svg_k,
                            "write curvature heatmap SVG");

    // ---- oracle ------------------------------------------------------------------
    struct {
        std::string u, path, csv_rays;
        double r_max = 1e6, tol = 1e-9;
        int rays = 64;
        CLI::Option *r_o, *a_o, *t_o;
    } orc;
    CLI::App* oracle_cmd = app.add_subcommand(
        "oracle", "brute-force path lengths: ray escape search, or the "
                  "length of an explicit polyline with --path");
    oracle_cmd->add_option("--u", orc.u, "conformal factor u(x,y)")->required();
    oracle_cmd->add_option("--path", orc.path,
                           "polyline \"x1,y1;x2,y2;...\" to measure");
    orc.r_o = oracle_cmd->add_option("--r-max", orc.r_max, "radial extent")
                  ->capture_default_str();
    orc.a_o = oracle_cmd->add_option("--rays", orc.rays, "ray count")
                  ->capture_default_str();
    orc.t_o = oracle_cmd->add_option("--tol", orc.tol, "quadrature tolerance")
                  ->capture_default_str();
    oracle_cmd->add_option("--csv-rays", orc.csv_rays,
                           "write per-ray partial-length CSV");

    // ---- parse --------------------------------------------------------------------
    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(std::move(rev));
    } catch (const CLI::CallForHelp&) {
        out << deepest(&app)->help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << tool_version << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << deepest(&app)->help();
        return 1;
    }

    std::string command;
    for (CLI::App* a = &app; !a->get_subcommands().empty();) {
        a = a->get_subcommands().front();
        if (!command.empty()) command += ' ';
        command += a->get_name();
    }

    auto t0 = std::chrono::steady_clock::now();
    try {
        Json rep = new_report(command);
        Json outputs;

        if (app.got_subcommand(analyze)) {
            ExprAst u = wrap_parse(an.u, "--u");
            auto window = resolve(an.w_o, an.window, "CONFPLANE_WINDOW");
            auto n = resolve(an.n_o, an.n, "CONFPLANE_N");
            auto r_max = resolve(an.r_o, an.r_max, "CONFPLANE_R_MAX");
            auto rays = resolve(an.a_o, an.rays, "CONFPLANE_RAYS");
            require(window.value > 0.0, "--window must be positive");
            require(n.value >= 3, "--n must be at least 3");
            require(r_max.value > 2.0, "--r-max must exceed 2");
            require(rays.value >= 8, "--rays must be at least 8");
            rep["input"]["u"] = expr_echo(an.u, u);
            rep["parameters"]["window"] = knob_json(window);
            rep["parameters"]["n"] = knob_json(n);
            rep["parameters"]["r_max"] = knob_json(r_max);
            rep["parameters"]["rays"] = knob_json(rays);

            ScalarGrid ug = sample(u, window.value, n.value);
            SubharmonicVerdict sv = is_subharmonic(ug, default_subharmonic_tol(ug));
            CrossValidateOptions cvo;
            cvo.alpha_r_max = r_max.value;
            cvo.escape.angles = rays.value;
            cvo.escape.R_max = r_max.value;
            CrossValidation cv = cross_validate(u, cvo);
            bool flat = flatness_test(u, flat_tol, window.value, n.value);
            CurvatureResult kr = curvature(ug);

            rep["verdicts"]["subharmonic"] = to_json(sv, window.value, n.value);
            Json cvj = to_json(cv);
            rep["verdicts"]["alpha"] = cvj["alpha"];
            rep["verdicts"]["completeness"] = cvj["completeness"];
            rep["verdicts"]["oracle"] = cvj["oracle"];
            rep["verdicts"]["agreement"] = cvj["agreement"];
            rep["verdicts"]["flatness"] = flatness_json(flat, window.value, n.value);
            rep["verdicts"]["curvature"] = grid_stats(kr.K);
            rep["verdicts"]["curvature"]["unbounded"] = kr.unbounded;

            if (!an.svg_k.empty()) {
                write_svg_heatmap(kr.K, "K", an.svg_k);
                outputs["svg_k"] = an.svg_k;
            }
            if (!an.csv_profile.empty()) {
                write_profile_csv(profile_for(u, r_max.value), an.csv_profile);
                outputs["csv_profile"] = an.csv_profile;
            }
            if (!an.csv_rays.empty()) {
                write_rays_csv(cv.escape, an.csv_rays);
                outputs["csv_rays"] = an.csv_rays;
            }
        } else if (app.got_subcommand(alpha_cmd)) {
            ExprAst u = wrap_parse(al.u, "--u");
            auto r_max = resolve(al.r_o, al.r_max, "CONFPLANE_R_MAX");
            require(r_max.value > 2.0, "--r-max must exceed 2");
            rep["input"]["u"] = expr_echo(al.u, u);
            rep["parameters"]["r_max"] = knob_json(r_max);
            AlphaEstimate a = alpha_estimate(u, r_max.value);
            rep["verdicts"]["alpha"] = to_json(a);
            if (!al.csv_profile.empty()) {
                write_profile_csv(profile_for(u, r_max.value), al.csv_profile);
                outputs["csv_profile"] = al.csv_profile;
            }
        } else if (app.got_subcommand(curvature_cmd)) {
            ExprAst u = wrap_parse(cu.u, "--u");
            auto window = resolve(cu.w_o, cu.window, "CONFPLANE_WINDOW");
            auto n = resolve(cu.n_o, cu.n, "CONFPLANE_N");
            require(window.value > 0.0, "--window must be positive");
            require(n.value >= 3, "--n must be at least 3");
            rep["input"]["u"] = expr_echo(cu.u, u);
            rep["parameters"]["window"] = knob_json(window);
            rep["parameters"]["n"] = knob_json(n);

            ScalarGrid ug = sample(u, window.value, n.value);
            CurvatureResult kr = curvature(ug);
            SubharmonicVerdict sv = is_subharmonic(ug, default_subharmonic_tol(ug));
            bool flat = flatness_test(u, flat_tol, window.value, n.value);

            rep["verdicts"]["curvature"] = grid_stats(kr.K);
            rep["verdicts"]["curvature"]["unbounded"] = kr.unbounded;
            rep["verdicts"]["curvature"]["flat"] = flat;
            rep["verdicts"]["curvature"]["flat_tol"] = flat_tol;
            rep["verdicts"]["subharmonic"] = to_json(sv, window.value, n.value);

            if (!cu.svg.empty()) {
                write_svg_heatmap(kr.K, "K", cu.svg);
                outputs["svg"] = cu.svg;
            }
            if (!cu.out_cpg.empty()) {
                write_cpg(kr.K, cu.out_cpg);
                outputs["out_cpg"] = cu.out_cpg;
            }
            if (!cu.out_csv.empty()) {
                write_csv(kr.K, cu.out_csv);
                outputs["out_csv"] = cu.out_csv;
            }
        } else if (app.got_subcommand(complete_cmd)) {
            ExprAst u = wrap_parse(co.u, "--u");
            auto r_max = resolve(co.r_o, co.r_max, "CONFPLANE_R_MAX");
            auto rays = resolve(co.a_o, co.rays, "CONFPLANE_RAYS");
            require(r_max.value > 2.0, "--r-max must exceed 2");
            require(rays.value >= 8, "--rays must be at least 8");
            rep["input"]["u"] = expr_echo(co.u, u);
            rep["parameters"]["r_max"] = knob_json(r_max);
            rep["parameters"]["rays"] = knob_json(rays);
            CrossValidateOptions cvo;
            cvo.alpha_r_max = r_max.value;
            cvo.escape.angles = rays.value;
            cvo.escape.R_max = r_max.value;
            CrossValidation cv = cross_validate(u, cvo);
            rep["verdicts"] = to_json(cv);
            if (!co.csv_rays.empty()) {
                write_rays_csv(cv.escape, co.csv_rays);
                outputs["csv_rays"] = co.csv_rays;
            }
        } else if (app.got_subcommand(beltrami_cmd)) {
            if (beltrami_cmd->got_subcommand(solve_cmd)) {
                auto window = resolve(bs.w_o, bs.window, "CONFPLANE_WINDOW");
                auto n = resolve(bs.n_o, bs.n, "CONFPLANE_N");
                require(window.value > 1.0, "--window must exceed 1");
                require(n.value >= 16 && n.value % 2 == 0,
                        "--n must be even and at least 16");
                Json input;
                ScalarGrid re = load_component(bs.mu_re, window.value,
                                               n.value + 1, input, "mu_re");
                ScalarGrid im = load_component(bs.mu_im, window.value,
                                               n.value + 1, input, "mu_im");
                rep["input"] = input;
                rep["parameters"]["window"] = knob_json(window);
                rep["parameters"]["n"] = knob_json(n);

                BeltramiCoefficient mu = make_coefficient(re, im);
                PlaneDiffeo phi = solve_beltrami(mu, window.value, n.value);
                SolveOptions defaults;
                rep["result"] = solve_stats(phi);
                rep["result"]["sup_modulus"] = mu.max_modulus;
                rep["result"]["solver"]["window"] = window.value;
                rep["result"]["solver"]["n"] = n.value;
                rep["result"]["solver"]["residual_tol"] = defaults.residual_tol;
                rep["result"]["solver"]["max_iterations"] = defaults.max_iterations;
                rep["result"]["solver"]["support_factor"] = defaults.support_factor;

                if (!bs.out_re.empty()) {
                    write_cpg(sample_diffeo(phi, false), bs.out_re);
                    outputs["out_re"] = bs.out_re;
                }
                if (!bs.out_im.empty()) {
                    write_cpg(sample_diffeo(phi, true), bs.out_im);
                    outputs["out_im"] = bs.out_im;
                }
                if (!bs.svg_mu.empty()) {
                    write_svg_heatmap(modulus_grid(re, im), "|mu|", bs.svg_mu);
                    outputs["svg_mu"] = bs.svg_mu;
                }
            } else if (beltrami_cmd->got_subcommand(decompose_cmd)) {
                auto window = resolve(bd.w_o, bd.window, "CONFPLANE_WINDOW");
                auto n = resolve(bd.n_o, bd.n, "CONFPLANE_N");
                require(window.value > 0.0, "--window must be positive");
                require(n.value >= 3, "--n must be at least 3");
                Json input;
                ScalarGrid E = load_component(bd.E, window.value, n.value,
                                              input, "E");
                ScalarGrid F = load_component(bd.F, window.value, n.value,
                                              input, "F");
                ScalarGrid G = load_component(bd.G, window.value, n.value,
                                              input, "G");
                rep["input"] = input;
                rep["parameters"]["window"] = knob_json(window);
                rep["parameters"]["n"] = knob_json(n);

                MetricGrid g = make_metric(std::move(E), std::move(F),
                                           std::move(G));
                ConformalDecomposition d = decompose(g);
                rep["result"]["positive_definite"] = true;
                rep["result"]["lambda"] = grid_stats(d.lambda);
                rep["result"]["sup_modulus"] = d.mu.max_modulus;

                if (!bd.out_lambda.empty()) {
                    write_cpg(d.lambda, bd.out_lambda);
                    outputs["out_lambda"] = bd.out_lambda;
                }
                if (!bd.out_mu_re.empty()) {
                    write_cpg(d.mu.re, bd.out_mu_re);
                    outputs["out_mu_re"] = bd.out_mu_re;
                }
                if (!bd.out_mu_im.empty()) {
                    write_cpg(d.mu.im, bd.out_mu_im);
                    outputs["out_mu_im"] = bd.out_mu_im;
                }
                if (!bd.svg_mu.empty()) {
                    write_svg_heatmap(modulus_grid(d.mu.re, d.mu.im), "|mu|",
                                      bd.svg_mu);
                    outputs["svg_mu"] = bd.svg_mu;
                }
            } else {
                auto window = resolve(br.w_o, br.window, "CONFPLANE_WINDOW");
                auto n = resolve(br.n_o, br.n, "CONFPLANE_N");
                require(window.value > 1.0, "--window must exceed 1");
                require(n.value >= 16, "--n must be at least 16");
                Json input;
                ScalarGrid E = load_component(br.E, window.value, n.value,
                                              input, "E");
                ScalarGrid F = load_component(br.F, window.value, n.value,
                                              input, "F");
                ScalarGrid G = load_component(br.G, window.value, n.value,
                                              input, "G");
                rep["input"] = input;
                rep["parameters"]["window"] = knob_json(window);
                rep["parameters"]["n"] = knob_json(n);

                MetricGrid g = make_metric(std::move(E), std::move(F),
                                           std::move(G));
                RoundtripReport rt = pi_roundtrip(g);
                rep["result"]["max_rel_deviation"] = rt.max_rel_deviation;
                rep["result"]["tolerance"] = roundtrip_tol;
                rep["result"]["pass"] = rt.max_rel_deviation <= roundtrip_tol;
                rep["result"]["sup_modulus"] = rt.decomposition.mu.max_modulus;
                rep["result"]["solve"] = solve_stats(rt.phi);
                rep["result"]["lattice"]["n"] = g.E.n;
                rep["result"]["lattice"]["window"] = g.E.L;
            }
        } else if (app.got_subcommand(deform_cmd)) {
            if (deform_cmd->got_subcommand(convex_cmd)) {
                ExprAst u0 = wrap_parse(dc.u0, "--u0");
                ExprAst u1 = wrap_parse(dc.u1, "--u1");
                require(dc.s >= 0.0 && dc.s <= 1.0, "--s must lie in [0,1]");
                auto r_max = resolve(dc.r_o, dc.r_max, "CONFPLANE_R_MAX");
                require(r_max.value > 2.0, "--r-max must exceed 2");
                rep["input"]["u0"] = expr_echo(dc.u0, u0);
                rep["input"]["u1"] = expr_echo(dc.u1, u1);
                rep["parameters"]["s"]["value"] = dc.s;
                rep["parameters"]["s"]["source"] = "flag";
                rep["parameters"]["r_max"] = knob_json(r_max);

                ExprAst blend = convex_path(u0, u1, dc.s);
                AlphaEstimate a0 = alpha_estimate(u0, r_max.value);
                AlphaEstimate a1 = alpha_estimate(u1, r_max.value);
                AlphaEstimate ab = alpha_estimate(blend, r_max.value);
                rep["result"]["expression"] = pretty_print(blend);
                rep["verdicts"]["alpha_u0"] = to_json(a0);
                rep["verdicts"]["alpha_u1"] = to_json(a1);
                rep["verdicts"]["alpha_blend"] = to_json(ab);
                if (!a0.infinite && !a1.infinite) {
                    double interp =
                        (1.0 - dc.s) * a0.value + dc.s * a1.value;
                    MembershipOptions mo;
                    mo.r_max = r_max.value;
                    bool member =
                        s_alpha_member(blend, interp, membership_tol, mo);
                    rep["verdicts"]["membership"]["alpha"] = interp;
                    rep["verdicts"]["membership"]["tol"] = membership_tol;
                    rep["verdicts"]["membership"]["member"] = member;
                    rep["verdicts"]["membership"]["window"] = mo.window_L;
                    rep["verdicts"]["membership"]["n"] = mo.n;
                }
            } else if (deform_cmd->got_subcommand(path_cmd)) {
                ExprAst u = wrap_parse(dp.u, "--u");
                require(dp.s >= 0.0, "--s must be nonnegative");
                auto window = resolve(dp.w_o, dp.window, "CONFPLANE_WINDOW");
                auto n = resolve(dp.n_o, dp.n, "CONFPLANE_N");
                auto r_max = resolve(dp.r_o, dp.r_max, "CONFPLANE_R_MAX");
                auto rays = resolve(dp.a_o, dp.rays, "CONFPLANE_RAYS");
                require(window.value > 0.0, "--window must be positive");
                require(n.value >= 3, "--n must be at least 3");
                require(r_max.value > 2.0, "--r-max must exceed 2");
                require(rays.value >= 8, "--rays must be at least 8");
                rep["input"]["u"] = expr_echo(dp.u, u);
                rep["parameters"]["s"]["value"] = dp.s;
                rep["parameters"]["s"]["source"] = "flag";
                rep["parameters"]["window"] = knob_json(window);
                rep["parameters"]["n"] = knob_json(n);
                rep["parameters"]["r_max"] = knob_json(r_max);
                rep["parameters"]["rays"] = knob_json(rays);

                ExprAst us = completion_factor(u, dp.s);
                MetricGrid g = completion_path(u, dp.s, window.value, n.value);
                AlphaEstimate a = alpha_estimate(us, r_max.value);
                EscapeReport er =
                    ray_escape_search(us, rays.value, r_max.value);
                ScalarGrid usg = sample(us, window.value, n.value);
                SubharmonicVerdict sv =
                    is_subharmonic(usg, default_subharmonic_tol(usg));
                CurvatureResult kr = curvature(usg);

                rep["result"]["factor"] = pretty_print(us);
                rep["result"]["metric"]["E"] = grid_stats(g.E);
                rep["result"]["metric"]["F"] = grid_stats(g.F);
                rep["result"]["metric"]["G"] = grid_stats(g.G);
                rep["verdicts"]["alpha"] = to_json(a);
                rep["verdicts"]["completeness"]["classification"] =
                    to_string(classify_completeness(a));
                rep["verdicts"]["completeness"]["threshold"] = 1.0;
                rep["verdicts"]["oracle"] = to_json(er);
                rep["verdicts"]["subharmonic"] =
                    to_json(sv, window.value, n.value);
                rep["verdicts"]["curvature"] = grid_stats(kr.K);
                rep["verdicts"]["curvature"]["unbounded"] = kr.unbounded;
                rep["verdicts"]["curvature"]["nonnegative"] = sv.pass;

                if (!dp.out_e.empty()) {
                    write_cpg(g.E, dp.out_e);
                    outputs["out_e"] = dp.out_e;
                }
                if (!dp.csv_rays.empty()) {
                    write_rays_csv(er, dp.csv_rays);
                    outputs["csv_rays"] = dp.csv_rays;
                }
            } else {
                bool f_given = !dr.f.empty();
                require(dr.builtin != f_given,
                        "exactly one of --f and --builtin is required");
                auto window = resolve(dr.w_o, dr.window, "CONFPLANE_WINDOW");
                auto n = resolve(dr.n_o, dr.n, "CONFPLANE_N");
                require(window.value > 0.0, "--window must be positive");
                require(n.value >= 3, "--n must be at least 3");
                double corner = std::sqrt(2.0) * window.value;
                RevolutionProfile p;
                if (dr.builtin) {
                    p = plateau_cone_profile();
                    rep["input"]["f"]["builtin"] = "plateau-cone";
                } else {
                    ExprAst f = wrap_parse(dr.f, "--f");
                    rep["input"]["f"] = expr_echo(dr.f, f);
                    p = make_profile(f, corner);
                }
                rep["parameters"]["window"] = knob_json(window);
                rep["parameters"]["n"] = knob_json(n);

                MetricGrid g = revolve(p, window.value, n.value);
                const int samples = 512;
                double kmin = revolve_curvature(p, 0.0);
                for (int k = 1; k < samples; ++k)
                    kmin = std::min(
                        kmin, revolve_curvature(p, corner * k / (samples - 1)));
                int flat_nodes = 0;
                for (int j = 0; j < g.E.n; ++j)
                    for (int i = 0; i < g.E.n; ++i)
                        if (g.E.at(i, j) == 1.0 && g.F.at(i, j) == 0.0 &&
                            g.G.at(i, j) == 1.0)
                            ++flat_nodes;

                rep["result"]["metric"]["E"] = grid_stats(g.E);
                rep["result"]["metric"]["F"] = grid_stats(g.F);
                rep["result"]["metric"]["G"] = grid_stats(g.G);
                rep["result"]["flat_nodes"] = flat_nodes;
                rep["verdicts"]["curvature"]["min"] = kmin;
                rep["verdicts"]["curvature"]["samples"] = samples;
                rep["verdicts"]["curvature"]["max_radius"] = corner;
                rep["verdicts"]["curvature"]["nonnegative"] = kmin >= -1e-9;
                rep["verdicts"]["curvature"]["tol"] = 1e-9;
                rep["verdicts"]["convexity"]["pass"] = true;
                rep["verdicts"]["convexity"]["check_radius"] = p.check_radius;
                rep["verdicts"]["convexity"]["tol"] = p.convexity_tol;

                if (!dr.out_e.empty()) {
                    write_cpg(g.E, dr.out_e);
                    outputs["out_e"] = dr.out_e;
                }
                if (!dr.out_f.empty()) {
                    write_cpg(g.F, dr.out_f);
                    outputs["out_f"] = dr.out_f;
                }
                if (!dr.out_g.empty()) {
                    write_cpg(g.G, dr.out_g);
                    outputs["out_g"] = dr.out_g;
                }
                if (!dr.svg_k.empty()) {
                    ScalarGrid kg = make_grid(window.value, n.value);
                    for (int j = 0; j < kg.n; ++j)
                        for (int i = 0; i < kg.n; ++i)
                            kg.at(i, j) = revolve_curvature(
                                p, std::hypot(kg.x(i), kg.y(j)));
                    write_svg_heatmap(kg, "K", dr.svg_k);
                    outputs["svg_k"] = dr.svg_k;
                }
            }
        } else if (app.got_subcommand(oracle_cmd)) {
            ExprAst u = wrap_parse(orc.u, "--u");
            rep["input"]["u"] = expr_echo(orc.u, u);
            if (!orc.path.empty()) {
                auto tol = resolve_flag(orc.t_o, orc.tol);
                require(tol.value > 0.0, "--tol must be positive");
                rep["parameters"]["tol"] = knob_json(tol);
                PathPolyline poly;
                std::size_t pos = 0;
                while (pos <= orc.path.size()) {
                    std::size_t semi = orc.path.find(';', pos);
                    if (semi == std::string::npos) semi = orc.path.size();
                    std::string pt = orc.path.substr(pos, semi - pos);
                    std::size_t comma = pt.find(',');
                    require(comma != std::string::npos,
                            "--path points must be \"x,y\" pairs");
                    double px = 0.0, py = 0.0;
                    auto rx = std::from_chars(pt.data(), pt.data() + comma, px);
                    auto ry = std::from_chars(pt.data() + comma + 1,
                                              pt.data() + pt.size(), py);
                    require(rx.ec == std::errc{} &&
                                rx.ptr == pt.data() + comma &&
                                ry.ec == std::errc{} &&
                                ry.ptr == pt.data() + pt.size(),
                            "--path points must be \"x,y\" pairs");
                    poly.pts.push_back({px, py});
                    pos = semi + 1;
                }
                require(poly.pts.size() >= 2,
                        "--path needs at least two points");
                rep["input"]["path"] = orc.path;
                QuadratureResult q = conformal_length(u, poly, tol.value);
                rep["result"]["length"] = q.value;
                rep["result"]["error_estimate"] = q.error_estimate;
                rep["result"]["budget_exhausted"] = q.budget_exhausted;
                rep["result"]["segments"] =
                    static_cast<int>(poly.pts.size()) - 1;
            } else {
                auto r_max = resolve(orc.r_o, orc.r_max, "CONFPLANE_R_MAX");
                auto rays = resolve(orc.a_o, orc.rays, "CONFPLANE_RAYS");
                require(r_max.value > 2.0, "--r-max must exceed 2");
                require(rays.value >= 8, "--rays must be at least 8");
                rep["parameters"]["r_max"] = knob_json(r_max);
                rep["parameters"]["rays"] = knob_json(rays);
                EscapeReport er =
                    ray_escape_search(u, rays.value, r_max.value);
                rep["verdicts"]["oracle"] = to_json(er);
                if (!orc.csv_rays.empty()) {
                    write_rays_csv(er, orc.csv_rays);
                    outputs["csv_rays"] = orc.csv_rays;
                }
            }
        }

        if (!outputs.is_null()) rep["outputs"] = outputs;
        double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
        finalize_report(rep, ms);
        out << rep.dump(2) << '\n';
        return 0;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n\n" << deepest(&app)->help();
        return 1;
    } catch (const std::exception& e) {
        Json rep = new_report(command);
        rep["error"]["type"] = error_type(e);
        rep["error"]["message"] = e.what();
        out << rep.dump(2) << '\n';
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

} // namespace confplane::cli
