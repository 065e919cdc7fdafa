#include "confplane/deform.hpp"

#include "confplane/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace confplane {

namespace {

void check_unit_interval(double s, const char* who) {
    if (!(s >= 0.0 && s <= 1.0))
        throw std::invalid_argument(std::string(who) + ": parameter s = " +
                                    std::to_string(s) +
                                    " outside [0,1]");
}

// plateau-to-cone closed forms: f'' = (4/3) cos^4(theta) on the bridge,
// theta = pi (r-2)/2, integrated so f' runs 0 -> 1 and f runs 2 -> 3
// across [1,3].
double bridge_d2(double th) {
    const double c = std::cos(th);
    return (4.0 / 3.0) * c * c * c * c;
}

double bridge_d1(double th) {
    const double g = 3.0 * th / 8.0 + std::sin(2.0 * th) / 4.0 +
                     std::sin(4.0 * th) / 32.0;
    return (8.0 / (3.0 * std::numbers::pi)) *
           (g + 3.0 * std::numbers::pi / 16.0);
}

double bridge_f(double th) {
    auto anti = [](double t) {
        return 3.0 * t * t / 16.0 - std::cos(2.0 * t) / 8.0 -
               std::cos(4.0 * t) / 128.0;
    };
    const double half_pi = std::numbers::pi / 2.0;
    return 2.0 + (16.0 / (3.0 * std::numbers::pi * std::numbers::pi)) *
                     (anti(th) - anti(-half_pi) +
                      (3.0 * std::numbers::pi / 16.0) * (th + half_pi));
}

double expr_at(const ExprAst& f, double r) { return eval(f, r, 0.0); }

} // namespace

DeformationPath make_convex_path(ExprAst u0, ExprAst u1,
                                 std::vector<double> samples) {
    if (!u0 || !u1)
        throw std::invalid_argument("make_convex_path: missing endpoint");
    for (double s : samples) check_unit_interval(s, "make_convex_path");
    DeformationPath p;
    p.rule = DeformationPath::Rule::Convex;
    p.u0 = std::move(u0);
    p.u1 = std::move(u1);
    p.samples = std::move(samples);
    return p;
}

DeformationPath make_completion_path(ExprAst u, std::vector<double> samples) {
    if (!u)
        throw std::invalid_argument("make_completion_path: missing factor");
    for (double s : samples) check_unit_interval(s, "make_completion_path");
    DeformationPath p;
    p.rule = DeformationPath::Rule::Completion;
    p.u0 = std::move(u);
    p.samples = std::move(samples);
    return p;
}

ExprAst convex_path(const ExprAst& u0, const ExprAst& u1, double s) {
    check_unit_interval(s, "convex_path");
    if (s == 0.0) return u0;
    if (s == 1.0) return u1;
    return make_binary(BinaryOp::Add,
                       make_binary(BinaryOp::Mul, make_constant(s), u1),
                       make_binary(BinaryOp::Mul, make_constant(1.0 - s), u0));
}

ExprAst completion_factor(const ExprAst& u, double s) {
    if (!(s >= 0.0))
        throw std::invalid_argument("completion_factor: s must be >= 0");
    // endpoint-exact, and immune to exp(-2u) underflowing inside log
    if (s == 0.0) return u;
    const ExprAst inner = make_binary(
        BinaryOp::Add, make_constant(s),
        make_unary(UnaryOp::Exp,
                   make_binary(BinaryOp::Mul, make_constant(-2.0), u)));
    return make_binary(BinaryOp::Mul, make_constant(-0.5),
                       make_unary(UnaryOp::Log, inner));
}

MetricGrid completion_path(const ExprAst& u, double s, double L, int n) {
    if (!(s >= 0.0))
        throw std::invalid_argument("completion_path: s must be >= 0");
    const ScalarGrid ug = sample(u, L, n);
    ScalarGrid E = make_grid(L, n);
    for (std::size_t t = 0; t < E.v.size(); ++t)
        E.v[t] = s + std::exp(-2.0 * ug.v[t]);
    ScalarGrid G = E;
    return make_metric(std::move(E), make_grid(L, n), std::move(G));
}

RevolutionProfile make_profile(ExprAst f, double check_radius,
                               double convexity_tol) {
    if (!f) throw std::invalid_argument("make_profile: missing expression");
    if (!(check_radius > 0.0))
        throw std::invalid_argument("make_profile: check_radius must be > 0");
    RevolutionProfile p;
    p.f = std::move(f);
    p.check_radius = check_radius;
    p.convexity_tol = convexity_tol;

    const ExprAst d1 = diff(p.f, 'x');
    const ExprAst d2 = diff(d1, 'x');
    const double slope0 = expr_at(d1, 0.0);
    if (!(std::abs(slope0) <= convexity_tol))
        throw std::invalid_argument(
            "make_profile: f'(0) = " + std::to_string(slope0) +
            " != 0 (the surface would have a conical axis)");
    const int samples = 1024;
    for (int k = 0; k <= samples; ++k) {
        const double r = check_radius * k / samples;
        const double fv = expr_at(p.f, r);
        if (!(fv > 0.0))
            throw std::invalid_argument(
                "make_profile: f not positive at r = " + std::to_string(r));
        const double dd = expr_at(d2, r);
        if (!(dd >= -convexity_tol))
            throw std::invalid_argument(
                "make_profile: convexity violated (f'' = " +
                std::to_string(dd) + " at r = " + std::to_string(r) + ")");
    }
    return p;
}

RevolutionProfile plateau_cone_profile() {
    RevolutionProfile p;
    p.builtin = true;
    p.check_radius = std::numeric_limits<double>::infinity();
    return p;
}

double profile_value(const RevolutionProfile& p, double r) {
    if (p.builtin) {
        if (r <= 1.0) return 2.0;
        if (r >= 3.0) return r;
        return bridge_f(std::numbers::pi * (r - 2.0) / 2.0);
    }
    return expr_at(p.f, r);
}

double profile_d1(const RevolutionProfile& p, double r) {
    if (p.builtin) {
        if (r <= 1.0) return 0.0;
        if (r >= 3.0) return 1.0;
        return bridge_d1(std::numbers::pi * (r - 2.0) / 2.0);
    }
    return expr_at(diff(p.f, 'x'), r);
}

double profile_d2(const RevolutionProfile& p, double r) {
    if (p.builtin) {
        if (r <= 1.0 || r >= 3.0) return 0.0;
        return bridge_d2(std::numbers::pi * (r - 2.0) / 2.0);
    }
    return expr_at(diff(diff(p.f, 'x'), 'x'), r);
}

MetricGrid revolve(const RevolutionProfile& f, double L, int n) {
    // re-verify convexity out to the grid corner
    const double corner = std::sqrt(2.0) * L;
    if (!f.builtin) {
        const int samples = 1024;
        const ExprAst d2 = diff(diff(f.f, 'x'), 'x');
        for (int k = 0; k <= samples; ++k) {
            const double r = corner * k / samples;
            const double dd = expr_at(d2, r);
            if (!(dd >= -f.convexity_tol))
                throw std::invalid_argument(
                    "revolve: convexity violated (f'' = " +
                    std::to_string(dd) + " at r = " + std::to_string(r) +
                    ")");
        }
    }
    ScalarGrid E = make_grid(L, n), F = make_grid(L, n), G = make_grid(L, n);
    // profile_d1 on expressions re-derives the AST per call; hoist it
    ExprAst d1;
    if (!f.builtin) d1 = diff(f.f, 'x');
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        for (int i = 0; i < n; ++i) {
            const double x = E.x(i);
            const double y = E.y(j);
            const double r2 = x * x + y * y;
            double Ev = 1.0, Fv = 0.0, Gv = 1.0;
            if (r2 > 0.0) {
                const double r = std::sqrt(r2);
                const double fp =
                    f.builtin ? profile_d1(f, r) : expr_at(d1, r);
                const double q = fp * fp / r2;
                Ev = 1.0 + q * x * x;
                Fv = q * x * y;
                Gv = 1.0 + q * y * y;
            }
            const std::size_t t = jj * n + i;
            E.v[t] = Ev;
            F.v[t] = Fv;
            G.v[t] = Gv;
        }
    });
    return make_metric(std::move(E), std::move(F), std::move(G));
}

double revolve_curvature(const RevolutionProfile& f, double r) {
    if (!(r >= 0.0))
        throw std::invalid_argument("revolve_curvature: r must be >= 0");
    const double fpp = profile_d2(f, r);
    if (r == 0.0) return fpp * fpp;  // limit of f' f'' / r as f'(0) = 0
    const double fp = profile_d1(f, r);
    const double den = 1.0 + fp * fp;
    return fp * fpp / (r * den * den);
}

bool flatness_test(const ExprAst& u, double tol, double L, int n) {
    const ScalarGrid lap = laplacian(sample(u, L, n));
    double worst = 0.0;
    for (int j = 0; j < lap.n; ++j)
        for (int i = 0; i < lap.n; ++i)
            if (lap.valid(i, j))
                worst = std::max(worst, std::abs(lap.at(i, j)));
    return worst <= tol;
}

} // namespace confplane
