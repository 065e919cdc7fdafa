#include "confplane/oracle.hpp"
#include "confplane/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace confplane {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// e^{-u} with the overflow side made explicit: for u below -709 the weight
// exceeds the double range and the integral is reported as +inf (divergent
// at working precision), never as undefined behavior.
double conformal_weight(double u) {
    if (-u > 709.0) return kInf;
    return std::exp(-u);
}

struct SimpsonState {
    long evals = 0;
    long budget;
    double error = 0.0;
    bool exhausted = false;
    bool infinite = false;
};

// Classic adaptive Simpson with Richardson correction. `whole` is the
// Simpson estimate over [a,b] whose midpoint is m.
template <typename F>
double adapt(const F& f, SimpsonState& st, double a, double fa, double m,
             double fm, double b, double fb, double whole, double tol,
             int depth) {
    if (st.infinite) return kInf;
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm, frm;
    if (st.evals + 2 > st.budget) {
        st.exhausted = true;
        st.error += tol;
        return whole;
    }
    flm = f(lm);
    frm = f(rm);
    st.evals += 2;
    if (std::isinf(flm) || std::isinf(frm)) {
        st.infinite = true;
        return kInf;
    }
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth >= 48 || std::abs(delta) <= 15.0 * tol) {
        if (depth >= 48 && std::abs(delta) > 15.0 * tol) st.exhausted = true;
        st.error += std::abs(delta) / 15.0;
        return left + right + delta / 15.0;
    }
    return adapt(f, st, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth + 1) +
           adapt(f, st, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth + 1);
}

template <typename F>
void integrate(const F& f, double a, double b, double tol, SimpsonState& st,
               double& value) {
    double m = 0.5 * (a + b);
    double fa = f(a), fm = f(m), fb = f(b);
    st.evals += 3;
    if (std::isinf(fa) || std::isinf(fm) || std::isinf(fb)) {
        st.infinite = true;
        value = kInf;
        return;
    }
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    value = adapt(f, st, a, fa, m, fm, b, fb, whole, tol, 0);
    if (st.infinite) value = kInf;
}

// One straight chunk of a ray or segment: integral of e^{-u} along
// p(t) = origin + t*dir for t in [t0, t1], |dir| = 1.
QuadratureResult segment_length(const ExprAst& u, double ox, double oy,
                                double dx, double dy, double t0, double t1,
                                double tol, long budget) {
    SimpsonState st;
    st.budget = budget;
    auto f = [&](double t) {
        return conformal_weight(eval(u, ox + t * dx, oy + t * dy));
    };
    QuadratureResult q;
    integrate(f, t0, t1, tol, st, q.value);
    q.error_estimate = st.infinite ? kInf : st.error;
    q.budget_exhausted = st.exhausted;
    return q;
}

} // namespace

QuadratureResult conformal_length(const ExprAst& u, const PathPolyline& path,
                                  double tol) {
    if (path.pts.size() < 2)
        throw std::invalid_argument("path needs at least 2 vertices");
    double total_len = 0.0;
    for (std::size_t k = 1; k < path.pts.size(); ++k) {
        double dx = path.pts[k][0] - path.pts[k - 1][0];
        double dy = path.pts[k][1] - path.pts[k - 1][1];
        double len = std::hypot(dx, dy);
        if (len == 0.0)
            throw std::invalid_argument(
                "consecutive path vertices must be distinct (vertex " +
                std::to_string(k) + ")");
        total_len += len;
    }
    QuadratureResult total;
    long budget = path.refinement_budget;
    for (std::size_t k = 1; k < path.pts.size(); ++k) {
        double ox = path.pts[k - 1][0], oy = path.pts[k - 1][1];
        double dx = path.pts[k][0] - ox, dy = path.pts[k][1] - oy;
        double len = std::hypot(dx, dy);
        // split the error budget in proportion to Euclidean length
        QuadratureResult q = segment_length(u, ox, oy, dx / len, dy / len, 0.0,
                                            len, tol * (len / total_len),
                                            budget);
        total.value += q.value;
        total.error_estimate += q.error_estimate;
        total.budget_exhausted = total.budget_exhausted || q.budget_exhausted;
        if (std::isinf(total.value)) {
            total.error_estimate = kInf;
            break;
        }
    }
    return total;
}

const char* to_string(EscapeVerdict v) {
    switch (v) {
    case EscapeVerdict::IncompleteWitness: return "IncompleteWitness";
    case EscapeVerdict::NoWitnessFound: return "NoWitnessFound";
    case EscapeVerdict::Inconclusive: return "Inconclusive";
    }
    return "?";
}

EscapeReport ray_escape_search(const ExprAst& u, int angles, double R_max,
                               double finite_threshold,
                               double diverge_threshold) {
    EscapeOptions opt;
    opt.angles = angles;
    opt.R_max = R_max;
    opt.finite_threshold = finite_threshold;
    opt.diverge_threshold = diverge_threshold;
    return ray_escape_search(u, opt);
}

EscapeReport ray_escape_search(const ExprAst& u, const EscapeOptions& opt) {
    if (opt.angles < 8) throw std::invalid_argument("need at least 8 rays");
    if (!(opt.R_max > 1.0)) throw std::invalid_argument("R_max must exceed 1");
    if (!(opt.checkpoint_ratio > 1.0))
        throw std::invalid_argument("checkpoint ratio must exceed 1");

    EscapeReport report;
    report.options = opt;
    report.rays.resize(opt.angles);

    // rays are independent; the merge below is by angle index
    parallel_for(static_cast<std::size_t>(opt.angles), [&](std::size_t a) {
        RayRecord& ray = report.rays[a];
        ray.angle = 2.0 * std::numbers::pi * static_cast<double>(a) /
                    opt.angles;
        double cx = std::cos(ray.angle), sy = std::sin(ray.angle);
        double r_prev = 1.0;
        double partial = 0.0;
        while (true) {
            double r_next = r_prev * opt.checkpoint_ratio;
            if (r_next >= opt.R_max * (1.0 - 1e-12)) r_next = opt.R_max;
            QuadratureResult inc = segment_length(
                u, 0.0, 0.0, cx, sy, r_prev, r_next, opt.quad_tol, 1 << 22);
            partial += inc.value;
            ray.checkpoints.push_back(r_next);
            ray.partials.push_back(partial);
            if (!std::isfinite(partial) || partial > opt.diverge_threshold) {
                ray.diverged = true;
                break;
            }
            if (r_next == opt.R_max) {
                ray.finite_tail = inc.value < opt.finite_threshold;
                break;
            }
            r_prev = r_next;
        }
    });

    for (const RayRecord& ray : report.rays)
        report.r_max_reached =
            std::max(report.r_max_reached, ray.checkpoints.back());

    const RayRecord* witness = nullptr;
    bool all_diverged = true;
    for (const RayRecord& ray : report.rays) {
        if (ray.finite_tail && !witness) witness = &ray;
        if (!ray.diverged) all_diverged = false;
    }
    if (witness) {
        report.verdict = EscapeVerdict::IncompleteWitness;
        report.witness_angle = witness->angle;
        report.witness_partial_length = witness->partials.back();
        report.witness_length_bound =
            witness->partials.back() + 10.0 * opt.finite_threshold;
    } else if (all_diverged) {
        report.verdict = EscapeVerdict::NoWitnessFound;
    } else {
        report.verdict = EscapeVerdict::Inconclusive;
    }
    return report;
}

const char* to_string(Agreement a) {
    switch (a) {
    case Agreement::Agree: return "agree";
    case Agreement::Disagree: return "disagree";
    case Agreement::Inconclusive: return "inconclusive";
    }
    return "?";
}

CrossValidation cross_validate(const ExprAst& u) {
    return cross_validate(u, CrossValidateOptions{});
}

CrossValidation cross_validate(const ExprAst& u,
                               const CrossValidateOptions& opt) {
    CrossValidation cv;
    cv.alpha = alpha_estimate(u, opt.alpha_r_max, opt.alpha);
    cv.classification = classify_completeness(cv.alpha);
    cv.escape = ray_escape_search(u, opt.escape);
    cv.heuristic = cv.alpha.heuristic;

    switch (cv.escape.verdict) {
    case EscapeVerdict::Inconclusive:
        // expected at the borderline (alpha near 1): rays diverge too slowly
        cv.agreement = Agreement::Inconclusive;
        break;
    case EscapeVerdict::NoWitnessFound:
        cv.agreement = (cv.classification == Completeness::Incomplete)
                           ? Agreement::Disagree
                           : Agreement::Agree;
        break;
    case EscapeVerdict::IncompleteWitness:
        cv.agreement = (cv.classification == Completeness::Incomplete)
                           ? Agreement::Agree
                           : Agreement::Disagree;
        break;
    }
    return cv;
}

} // namespace confplane
