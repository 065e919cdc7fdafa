#pragma once

#include "confplane/expr.hpp"
#include "confplane/field.hpp"

#include <vector>

namespace confplane {

/// One-parameter family of metrics: the convex combination of two conformal
/// factors, or the completion family (s + e^{-2u}) g0, together with the
/// parameter values to sample. Parameter 0 and 1 reproduce the endpoints
/// exactly.
struct DeformationPath {
    enum class Rule { Convex, Completion };
    Rule rule = Rule::Convex;
    ExprAst u0;                   ///< first endpoint factor
    ExprAst u1;                   ///< second endpoint (Convex rule only)
    std::vector<double> samples;  ///< parameter values, each in [0,1]
};

DeformationPath make_convex_path(ExprAst u0, ExprAst u1,
                                 std::vector<double> samples);
DeformationPath make_completion_path(ExprAst u, std::vector<double> samples);

/// s*u1 + (1-s)*u0 as an AST. The endpoints are returned untouched, so s=0
/// and s=1 are node-exact. Requires 0 <= s <= 1.
ExprAst convex_path(const ExprAst& u0, const ExprAst& u1, double s);

/// Conformal factor of the completion family: u_s = -log(s + e^{-2u})/2,
/// i.e. (s + e^{-2u}) g0 written as e^{-2 u_s} g0 — this keeps the alpha and
/// ray-oracle tooling applicable along the path. Requires s >= 0.
ExprAst completion_factor(const ExprAst& u, double s);

/// The completed metric sampled on the endpoint lattice: E = G = s + e^{-2u},
/// F = 0. Complete for every s > 0, since lengths are bounded below by
/// sqrt(s) times Euclidean length.
MetricGrid completion_path(const ExprAst& u, double s, double L, int n);

/// Rotationally symmetric profile r -> f(r): either a univariate expression
/// in x (evaluated at x = r) or the built-in plateau-to-cone shape (f = 2 up
/// to r = 1, f = r beyond r = 3, bridged in between by integrating
/// f'' = (4/3) cos^4(pi (r-2)/2), which joins both pieces with five
/// continuous derivatives). check_radius records how far out the invariants
/// (f > 0, convexity, f'(0) = 0) were verified at construction.
struct RevolutionProfile {
    ExprAst f;  ///< null when builtin
    bool builtin = false;
    double check_radius = 0.0;
    double convexity_tol = 1e-9;
};

/// Validate and wrap a profile expression: samples [0, check_radius] for
/// f > 0 and f'' >= -tol, and requires f'(0) = 0 (smoothness of the surface
/// at the axis). Throws std::invalid_argument naming the offending radius.
RevolutionProfile make_profile(ExprAst f, double check_radius,
                               double convexity_tol = 1e-9);

/// The built-in plateau-to-cone profile (flat disk of radius 1, exact cone
/// outside radius 3).
RevolutionProfile plateau_cone_profile();

double profile_value(const RevolutionProfile& p, double r);
double profile_d1(const RevolutionProfile& p, double r);
double profile_d2(const RevolutionProfile& p, double r);

/// Induced metric of the surface of revolution z = f(r), r = |(x,y)|:
/// E = 1 + f'^2 x^2/r^2, F = f'^2 xy/r^2, G = 1 + f'^2 y^2/r^2, with the
/// axis limit E = G = 1, F = 0. Convexity is re-verified out to the grid
/// corner radius before sampling.
MetricGrid revolve(const RevolutionProfile& f, double L, int n);

/// Gauss curvature of the revolution surface:
/// K(r) = f'(r) f''(r) / (r (1 + f'(r)^2)^2), continued at the axis by its
/// limit K(0) = f''(0)^2. Nonnegative for convex nondecreasing profiles.
double revolve_curvature(const RevolutionProfile& f, double r);

/// true iff max |laplacian(u)| <= tol over the interior of the sampled
/// window — harmonic factors give flat metrics.
bool flatness_test(const ExprAst& u, double tol, double L = 4.0, int n = 129);

} // namespace confplane
