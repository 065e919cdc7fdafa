#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "confplane/beltrami.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <vector>

using namespace confplane;
using cd = std::complex<double>;

namespace {

MetricGrid constant_metric(double E, double F, double G, double L, int n) {
    return make_metric(make_grid(L, n, E), make_grid(L, n, F),
                       make_grid(L, n, G));
}

// solver-style cosine cutoff, for building compactly supported test inputs
double taper(double r, double R) {
    const double inner = 0.8 * R;
    if (r <= inner) return 1.0;
    if (r >= R) return 0.0;
    return 0.5 * (1.0 + std::cos(std::numbers::pi * (r - inner) / (R - inner)));
}

BeltramiCoefficient constant_mu(cd c, double L, int n) {
    return make_coefficient(make_grid(L, n, c.real()),
                            make_grid(L, n, c.imag()));
}

std::vector<cd> linear_map_values(cd a, cd b, double W, int n) {
    // values of z -> a z + b conj(z) on the periodic lattice
    std::vector<cd> v(static_cast<std::size_t>(n) * n);
    const double h = 2.0 * W / n;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const cd z(-W + h * i, -W + h * j);
            v[static_cast<std::size_t>(j) * n + i] = a * z + b * std::conj(z);
        }
    return v;
}

double max_inner_quarter_error(const PlaneDiffeo& phi, cd a, cd b) {
    // sup over |x|,|y| <= W/4 of |phi - (a z + b conj z)|
    double err = 0.0;
    const double h = phi.h();
    for (int j = 0; j < phi.n; ++j)
        for (int i = 0; i < phi.n; ++i) {
            const cd z(-phi.W + h * i, -phi.W + h * j);
            if (std::abs(z.real()) > phi.W / 4 || std::abs(z.imag()) > phi.W / 4)
                continue;
            err = std::max(err,
                           std::abs(phi.phi[phi.idx(i, j)] -
                                    (a * z + b * std::conj(z))));
        }
    return err;
}

} // namespace

TEST_CASE("decompose: closed-form examples") {
    const MetricGrid g0 = constant_metric(1, 0, 1, 2, 17);
    ConformalDecomposition d = decompose(g0);
    for (double v : d.lambda.v) CHECK(v == doctest::Approx(1.0));
    CHECK(d.mu.max_modulus == doctest::Approx(0.0));

    const MetricGrid g1 = constant_metric(2, 0, 1, 2, 9);
    d = decompose(g1);
    const double lam = 0.25 * (3.0 + 2.0 * std::sqrt(2.0));
    const double mu = 3.0 - 2.0 * std::sqrt(2.0);
    CHECK(d.lambda.v[0] == doctest::Approx(lam).epsilon(1e-14));
    CHECK(d.mu.re.v[0] == doctest::Approx(mu).epsilon(1e-12));
    CHECK(d.mu.im.v[0] == doctest::Approx(0.0));

    // conformal metrics have zero dilatation
    ScalarGrid w = sample(parse("exp(-2*(0.2*x+0.1*y))"), 2, 17);
    const MetricGrid gc = make_metric(w, make_grid(2, 17, 0.0), w);
    d = decompose(gc);
    for (int t = 0; t < 17 * 17; ++t) {
        CHECK(d.lambda.v[t] == doctest::Approx(w.v[t]).epsilon(1e-14));
        CHECK(d.mu.re.v[t] == doctest::Approx(0.0));
    }
}

TEST_CASE("reconstruct: closed-form examples and inverse relation") {
    ConformalDecomposition d;
    d.lambda = make_grid(2, 9, 1.0);
    d.mu = constant_mu(cd(0, 0.5), 2, 9);
    const MetricGrid g = reconstruct(d);
    CHECK(g.E.v[0] == doctest::Approx(1.25).epsilon(1e-14));
    CHECK(g.G.v[0] == doctest::Approx(1.25).epsilon(1e-14));
    CHECK(g.F.v[0] == doctest::Approx(1.0).epsilon(1e-14));

    d.lambda = make_grid(2, 9, 0.25 * (3.0 + 2.0 * std::sqrt(2.0)));
    d.mu = constant_mu(cd(3.0 - 2.0 * std::sqrt(2.0), 0.0), 2, 9);
    const MetricGrid g2 = reconstruct(d);
    CHECK(g2.E.v[0] == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(g2.G.v[0] == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(g2.F.v[0] == doctest::Approx(0.0));
}

TEST_CASE("decompose/reconstruct: round trips on random SPD metrics") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
    std::uniform_real_distribution<double> logeig(-3.0 * std::log(10.0),
                                                  3.0 * std::log(10.0));
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 4;
        ScalarGrid E = make_grid(1, n), F = make_grid(1, n),
                   G = make_grid(1, n);
        for (int t = 0; t < n * n; ++t) {
            // rotate diag(l1,l2) by theta; condition number up to 1e6
            const double l1 = std::exp(logeig(rng));
            const double l2 = std::exp(logeig(rng));
            const double th = angle(rng);
            const double c = std::cos(th), s = std::sin(th);
            E.v[t] = l1 * c * c + l2 * s * s;
            G.v[t] = l1 * s * s + l2 * c * c;
            F.v[t] = (l1 - l2) * c * s;
        }
        const MetricGrid g = make_metric(E, F, G);
        const ConformalDecomposition d = decompose(g);
        CHECK(d.mu.max_modulus < 1.0);
        const MetricGrid g2 = reconstruct(d);
        const ConformalDecomposition d2 = decompose(g2);
        for (int t = 0; t < n * n; ++t) {
            const double scale = std::max(std::abs(g.E.v[t]),
                                          std::abs(g.G.v[t]));
            CHECK(std::abs(g2.E.v[t] - g.E.v[t]) <= 1e-12 * scale);
            CHECK(std::abs(g2.F.v[t] - g.F.v[t]) <= 1e-12 * scale);
            CHECK(std::abs(g2.G.v[t] - g.G.v[t]) <= 1e-12 * scale);
            const double lscale = std::abs(d.lambda.v[t]);
            CHECK(std::abs(d2.lambda.v[t] - d.lambda.v[t]) <= 1e-12 * lscale);
            CHECK(std::abs(d2.mu.re.v[t] - d.mu.re.v[t]) <= 1e-12);
            CHECK(std::abs(d2.mu.im.v[t] - d.mu.im.v[t]) <= 1e-12);
        }
    }
}

TEST_CASE("make_coefficient: rejects bad input") {
    CHECK_THROWS_AS(make_coefficient(make_grid(1, 5), make_grid(1, 7)),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_coefficient(make_grid(1, 5, 1.0), make_grid(1, 5)),
                    std::invalid_argument);
}

TEST_CASE("dilatation: linear maps recover their coefficient exactly") {
    const int n = 64;
    const double W = 4.0;
    PlaneDiffeo ident = make_diffeo(linear_map_values(1, 0, W, n), W, n);
    BeltramiCoefficient m = dilatation(ident);
    CHECK(m.max_modulus <= 1e-13);

    PlaneDiffeo aff = make_diffeo(linear_map_values(1, 0.3, W, n), W, n);
    m = dilatation(aff);
    for (double v : m.re.v) CHECK(v == doctest::Approx(0.3).epsilon(1e-12));
    for (double v : m.im.v) CHECK(std::abs(v) <= 1e-13);

    PlaneDiffeo aff2 = make_diffeo(linear_map_values(1, cd(0, 0.2), W, n), W, n);
    m = dilatation(aff2);
    for (double v : m.re.v) CHECK(std::abs(v) <= 1e-13);
    for (double v : m.im.v) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("make_diffeo: rejects orientation violations") {
    // z -> conj(z) reverses orientation
    CHECK_THROWS_AS(make_diffeo(linear_map_values(0, 1, 4.0, 32), 4.0, 32),
                    std::domain_error);
}

TEST_CASE("solve_beltrami: mu = 0 gives the identity") {
    const PlaneDiffeo phi = solve_beltrami(constant_mu(0, 4, 65), 4.0, 64);
    CHECK(phi.iterations <= 2);
    CHECK(phi.residual <= 1e-14);
    const double h = phi.h();
    for (int j = 0; j < phi.n; ++j)
        for (int i = 0; i < phi.n; ++i) {
            const cd z(-4.0 + h * i, -4.0 + h * j);
            CHECK(std::abs(phi.phi[phi.idx(i, j)] - z) <= 1e-12);
        }
    CHECK(phi.min_jacobian == doctest::Approx(1.0));
}

TEST_CASE("solve_beltrami: constant mu reproduces the affine model") {
    const double c = 0.3;
    const PlaneDiffeo phi = solve_beltrami(constant_mu(c, 4, 257), 4.0, 256);
    CHECK(phi.iterations <= 60);
    CHECK(phi.residual <= 1e-10);
    CHECK(phi.min_jacobian > 0.0);
    CHECK(phi.contraction == doctest::Approx(0.3).epsilon(1e-12));
    // model (z + c conj z)/(1+c) fixes 0 and 1 and has dilatation c
    const double err =
        max_inner_quarter_error(phi, 1.0 / (1 + c), c / (1 + c));
    CHECK(err <= 1e-2);
    // normalization within tolerance
    CHECK(std::abs(phi.eval(0, 0)) <= 1e-12);
    CHECK(std::abs(phi.eval(1, 0) - 1.0) <= 1e-12);
}

TEST_CASE("solve_beltrami: dilatation round trip for an affine map") {
    const int n = 128;
    const double W = 4.0;
    const PlaneDiffeo aff = make_diffeo(linear_map_values(1, 0.3, W, n), W, n);
    const BeltramiCoefficient mu0 = dilatation(aff);
    const PlaneDiffeo solved = solve_beltrami(mu0, W, n);
    const BeltramiCoefficient mu1 = dilatation(solved);
    // compare on the inner quarter-window, away from the taper
    double err = 0.0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            if (std::abs(mu1.re.x(i)) > W / 4 || std::abs(mu1.re.y(j)) > W / 4)
                continue;
            err = std::max(err, std::abs(cd(mu1.re.at(i, j), mu1.im.at(i, j)) -
                                         cd(0.3, 0.0)));
        }
    CHECK(err <= 1e-3);
}

TEST_CASE("solve_beltrami: non-convergence reports contraction and residual") {
    SolveOptions opt;
    opt.max_iterations = 5;
    try {
        solve_beltrami(constant_mu(0.95, 4, 65), 4.0, 64, opt);
        FAIL("expected SolveError");
    } catch (const SolveError& e) {
        CHECK(e.contraction == doctest::Approx(0.95).epsilon(1e-12));
        CHECK(e.residual > 1e-10);
    }
}

TEST_CASE("solve_beltrami: input validation") {
    CHECK_THROWS_AS(solve_beltrami(constant_mu(0.1, 4, 65), 4.0, 63),
                    std::invalid_argument);
    CHECK_THROWS_AS(solve_beltrami(constant_mu(0.1, 4, 65), 0.5, 64),
                    std::invalid_argument);
}

TEST_CASE("normalization uniqueness: affine post-composition is absorbed") {
    const PlaneDiffeo phi = solve_beltrami(constant_mu(0.25, 4, 129), 4.0, 128);
    PlaneDiffeo moved = phi;
    const cd a(1.7, -0.4), b(0.3, 2.1);
    for (auto& w : moved.phi) w = a * w + b;
    for (auto& w : moved.phi_z) w *= a;
    for (auto& w : moved.phi_zb) w *= a;
    const PlaneDiffeo back = renormalize(std::move(moved));
    double err = 0.0;
    for (std::size_t t = 0; t < phi.phi.size(); ++t)
        err = std::max(err, std::abs(back.phi[t] - phi.phi[t]));
    CHECK(err <= 1e-10);
}

TEST_CASE("pullback: linear-map oracles") {
    const int n = 64;
    const MetricGrid g0 = constant_metric(1, 0, 1, 8, 65);
    const PlaneDiffeo aff = make_diffeo(linear_map_values(1, 0.3, 4.0, n), 4.0, n);
    const MetricGrid p = pullback(g0, aff, 33, 2.0);
    for (int t = 0; t < 33 * 33; ++t) {
        CHECK(p.E.v[t] == doctest::Approx(1.69).epsilon(1e-11));
        CHECK(p.G.v[t] == doctest::Approx(0.49).epsilon(1e-11));
        CHECK(std::abs(p.F.v[t]) <= 1e-12);
    }

    // z + 0.2i conj z has real differential [[1, .2], [.2, 1]]:
    // pullback of g0 is M^T M = [[1.04, .4], [.4, 1.04]]
    const PlaneDiffeo aff2 =
        make_diffeo(linear_map_values(1, cd(0, 0.2), 4.0, n), 4.0, n);
    const MetricGrid q = pullback(g0, aff2, 33, 2.0);
    for (int t = 0; t < 33 * 33; ++t) {
        CHECK(q.E.v[t] == doctest::Approx(1.04).epsilon(1e-11));
        CHECK(q.G.v[t] == doctest::Approx(1.04).epsilon(1e-11));
        CHECK(q.F.v[t] == doctest::Approx(0.4).epsilon(1e-11));
    }

    // identity pullback is the identity on the metric
    const PlaneDiffeo ident = make_diffeo(linear_map_values(1, 0, 4.0, n), 4.0, n);
    const ScalarGrid w = sample(parse("exp(0.1*x-0.2*y)"), 2, 33);
    const MetricGrid gv = make_metric(w, make_grid(2, 33, 0.0), w);
    const MetricGrid pv = pullback(gv, ident, 17, 1.0);
    for (int j = 0; j < 17; ++j)
        for (int i = 0; i < 17; ++i) {
            const double expect =
                std::exp(0.1 * pv.E.x(i) - 0.2 * pv.E.y(j));
            CHECK(pv.E.at(i, j) == doctest::Approx(expect).epsilon(1e-3));
        }
}

TEST_CASE("pullback: image leaving the metric window is an error") {
    const MetricGrid g0 = constant_metric(1, 0, 1, 2, 33);
    const PlaneDiffeo aff = make_diffeo(linear_map_values(1, 0.3, 4.0, 64), 4.0, 64);
    CHECK_THROWS_AS(pullback(g0, aff, 33, 2.0), std::domain_error);
}

TEST_CASE("recover_factor: conformal metric with identity map") {
    // mu = 0 so the solved map is the identity and f = log(lambda) = -2u;
    // a linear u makes the bilinear steps exact
    const double L = 4.0;
    const int n = 128;
    const ExprAst u = parse("0.1*x+0.2*y");
    ScalarGrid w = sample(parse("exp(-2*(0.1*x+0.2*y))"), L, n);
    const MetricGrid g = make_metric(w, make_grid(L, n, 0.0), w);
    const ConformalDecomposition d = decompose(g);
    const PlaneDiffeo phi = solve_beltrami(d.mu, L, n);
    const ScalarGrid f = recover_factor(d, phi);
    CHECK(f.L == doctest::Approx(L / 2));
    for (int j = 0; j < f.n; ++j)
        for (int i = 0; i < f.n; ++i) {
            const double expect = -2.0 * (0.1 * f.x(i) + 0.2 * f.y(j));
            CHECK(std::abs(f.at(i, j) - expect) <= 1e-10);
        }
}

TEST_CASE("pi_roundtrip: flat metric is reproduced to round-off") {
    const RoundtripReport rep = pi_roundtrip(constant_metric(1, 0, 1, 4, 128));
    CHECK(rep.max_rel_deviation <= 1e-11);
}

TEST_CASE("pi_roundtrip: affine-pullback metric at module scale") {
    // g = pullback(g0, z + 0.3 conj z): constants E=1.69, G=0.49, F=0
    const RoundtripReport rep =
        pi_roundtrip(constant_metric(1.69, 0, 0.49, 4, 128));
    CHECK(rep.max_rel_deviation <= 2e-2);
    CHECK(rep.phi.iterations <= 60);
    CHECK(rep.phi.residual <= 1e-10);
}

TEST_CASE("pi_roundtrip: tapered imaginary dilatation at module scale") {
    const double L = 4.0;
    const int n = 128;
    ScalarGrid re = make_grid(L, n), im = make_grid(L, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            im.at(i, j) = 0.2 * taper(std::hypot(re.x(i), re.y(j)), 2.56);
    ConformalDecomposition d;
    d.lambda = make_grid(L, n, 1.0);
    d.mu = make_coefficient(re, im, 2.56);
    const RoundtripReport rep = pi_roundtrip(reconstruct(d));
    CHECK(rep.max_rel_deviation <= 2e-2);
}

TEST_CASE("continuity: solution moves proportionally to the coefficient") {
    const double W = 4.0;
    const int n = 128;
    ScalarGrid base = make_grid(W, n), zero = make_grid(W, n);
    ScalarGrid bump = make_grid(W, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            bump.at(i, j) = taper(std::hypot(base.x(i), base.y(j)), 3.2);
    for (int t = 0; t < n * n; ++t) base.v[t] = 0.3 * bump.v[t];

    const PlaneDiffeo phi0 =
        solve_beltrami(make_coefficient(base, zero), W, n);
    std::vector<double> ratios;
    for (double delta : {1e-3, 5e-4, 2.5e-4}) {
        ScalarGrid re = base;
        for (int t = 0; t < n * n; ++t) re.v[t] += delta * bump.v[t];
        const PlaneDiffeo phi1 =
            solve_beltrami(make_coefficient(re, zero), W, n);
        double dmax = 0.0;
        const double h = phi0.h();
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                if (std::abs(-W + h * i) > W / 4 ||
                    std::abs(-W + h * j) > W / 4)
                    continue;
                dmax = std::max(dmax, std::abs(phi1.phi[phi1.idx(i, j)] -
                                               phi0.phi[phi0.idx(i, j)]));
            }
        ratios.push_back(dmax / delta);
    }
    // bounded, and stable across the dyadic refinement of delta
    for (double r : ratios) {
        CHECK(r > 0.05);
        CHECK(r < 5.0);
    }
    const double rmax = std::max({ratios[0], ratios[1], ratios[2]});
    const double rmin = std::min({ratios[0], ratios[1], ratios[2]});
    CHECK(rmax / rmin < 1.1);
}
