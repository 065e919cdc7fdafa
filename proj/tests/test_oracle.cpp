#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "confplane/oracle.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace confplane;

namespace {

PathPolyline segment(double x0, double y0, double x1, double y1) {
    PathPolyline p;
    p.pts = {{x0, y0}, {x1, y1}};
    return p;
}

} // namespace

TEST_CASE("conformal_length: closed forms") {
    // flat metric: Euclidean length
    QuadratureResult flat = conformal_length(parse("0"), segment(0, 0, 1, 0));
    CHECK(flat.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(flat.budget_exhausted);

    // integral of e^{-x} over [0, 10]
    QuadratureResult decay = conformal_length(parse("x"), segment(0, 0, 10, 0));
    CHECK(decay.value ==
          doctest::Approx(1.0 - std::exp(-10.0)).epsilon(1e-9));
    CHECK(std::abs(decay.value - 0.9999546) < 1e-6);

    // integral of dx/(1+x^2) over [0, 1] = arctan 1
    QuadratureResult at = conformal_length(parse("log(1+x^2+y^2)"),
                                           segment(0, 0, 1, 0));
    CHECK(at.value == doctest::Approx(std::atan(1.0)).epsilon(1e-9));
    CHECK(std::abs(at.value - 0.7853982) < 1e-6);
}

TEST_CASE("conformal_length: multi-segment path and validation") {
    PathPolyline p;
    p.pts = {{0, 0}, {1, 0}, {1, 1}};
    QuadratureResult q = conformal_length(parse("0"), p);
    CHECK(q.value == doctest::Approx(2.0).epsilon(1e-12));

    PathPolyline bad1;
    bad1.pts = {{0, 0}};
    CHECK_THROWS_AS(conformal_length(parse("0"), bad1), std::invalid_argument);
    PathPolyline bad2;
    bad2.pts = {{0, 0}, {0, 0}};
    CHECK_THROWS_AS(conformal_length(parse("0"), bad2), std::invalid_argument);
}

TEST_CASE("conformal_length: overflow of e^{-u} becomes +inf, not UB") {
    QuadratureResult q = conformal_length(parse("x"), segment(-800, 0, -790, 0));
    CHECK(std::isinf(q.value));
}

TEST_CASE("conformal_length: budget exhaustion is flagged with best value") {
    PathPolyline p = segment(0, 0, 10, 0);
    p.refinement_budget = 16;  // absurdly small
    QuadratureResult q = conformal_length(parse("exp(-(x^2))*sin(20*x)+x"), p,
                                          1e-12);
    CHECK(q.budget_exhausted);
    CHECK(std::isfinite(q.value));
}

TEST_CASE("conformal_length: refinement changes stay within error estimates") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    ExprAst u = parse("0.3*log(1+x^2+y^2)+0.1*sin(x)");
    for (int trial = 0; trial < 20; ++trial) {
        PathPolyline coarse;
        coarse.pts = {{coord(rng), coord(rng)}, {coord(rng), coord(rng)}};
        if (coarse.pts[0] == coarse.pts[1]) continue;
        PathPolyline fine;
        fine.pts = {coarse.pts[0],
                    {0.5 * (coarse.pts[0][0] + coarse.pts[1][0]),
                     0.5 * (coarse.pts[0][1] + coarse.pts[1][1])},
                    coarse.pts[1]};
        QuadratureResult a = conformal_length(u, coarse);
        QuadratureResult b = conformal_length(u, fine);
        CHECK(std::abs(a.value - b.value) <=
              a.error_estimate + b.error_estimate + 1e-12);
    }
}

TEST_CASE("ray_escape_search: witness for u = x with closed-form length") {
    EscapeReport rep = ray_escape_search(parse("x"));
    CHECK(rep.verdict == EscapeVerdict::IncompleteWitness);
    CHECK(rep.witness_angle == doctest::Approx(0.0));
    // total along angle 0: integral_1^R e^{-t} dt -> e^{-1} - e^{-R}
    CHECK(std::abs(rep.witness_partial_length - std::exp(-1.0)) < 1e-6);
    CHECK(rep.witness_length_bound >= rep.witness_partial_length);
    // soundness: every recorded partial on the witness ray stays below bound
    for (double p : rep.rays[0].partials)
        CHECK(p <= rep.witness_length_bound);
    CHECK(rep.one_sided);
}

TEST_CASE("ray_escape_search: flat plane has no witness") {
    EscapeReport rep = ray_escape_search(parse("0"));
    CHECK(rep.verdict == EscapeVerdict::NoWitnessFound);
    for (const RayRecord& ray : rep.rays) {
        CHECK(ray.diverged);
        // partial length = R - 1 along every ray
        for (std::size_t k = 0; k < ray.checkpoints.size(); ++k)
            CHECK(ray.partials[k] ==
                  doctest::Approx(ray.checkpoints[k] - 1.0).epsilon(1e-9));
    }
}

TEST_CASE("ray_escape_search: witness on every sampled ray for steep growth") {
    // e^{-u} = (1+r^2)^{-2}: tails converge on every ray
    EscapeReport rep = ray_escape_search(parse("2*log(1+x^2+y^2)"));
    CHECK(rep.verdict == EscapeVerdict::IncompleteWitness);
    for (const RayRecord& ray : rep.rays) {
        CHECK(ray.finite_tail);
        CHECK_FALSE(ray.diverged);
    }
    CHECK(rep.r_max_reached == doctest::Approx(1e6));
}

TEST_CASE("ray_escape_search: inconclusive at the borderline, never coerced") {
    // alpha = 1: partial ~ log R ~ 13.8, increments ~ log 2
    EscapeReport rep = ray_escape_search(parse("0.5*log(1+x^2+y^2)"));
    CHECK(rep.verdict == EscapeVerdict::Inconclusive);
}

TEST_CASE("cross_validate: golden examples") {
    CrossValidation flat = cross_validate(parse("0"));
    CHECK(flat.classification == Completeness::Complete);
    CHECK(flat.escape.verdict == EscapeVerdict::NoWitnessFound);
    CHECK(flat.agreement == Agreement::Agree);

    CrossValidation steep = cross_validate(parse("2*log(1+x^2+y^2)"));
    CHECK(steep.classification == Completeness::Incomplete);
    CHECK(steep.escape.verdict == EscapeVerdict::IncompleteWitness);
    CHECK(steep.agreement == Agreement::Agree);

    CrossValidation borderline = cross_validate(parse("0.5*log(1+x^2+y^2)"));
    CHECK(borderline.classification == Completeness::BorderlineComplete);
    CHECK((borderline.escape.verdict == EscapeVerdict::Inconclusive ||
           borderline.escape.verdict == EscapeVerdict::NoWitnessFound));
    CHECK(borderline.agreement != Agreement::Disagree);

    CrossValidation harmonic = cross_validate(parse("x"));
    CHECK(harmonic.classification == Completeness::Incomplete);
    CHECK(harmonic.escape.verdict == EscapeVerdict::IncompleteWitness);
    CHECK(harmonic.agreement == Agreement::Agree);
    CHECK_FALSE(harmonic.heuristic);  // harmonic is subharmonic
}
