#include "confplane/asymptotics.hpp"
#include "confplane/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace confplane {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Golden-section maximization of f on [a, b] (f unimodal near the seed
// maximum; for multimodal u this still only improves on the seed value).
template <typename F>
double golden_max(const F& f, double a, double b) {
    constexpr double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 80 && (b - a) > 1e-12; ++it) {
        if (f1 < f2) {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    return std::max(f1, f2);
}

template <typename F>
double circle_max(const F& f, int m) {
    double best = -std::numeric_limits<double>::infinity();
    int best_i = 0;
    for (int i = 0; i < m; ++i) {
        double v = f(kTwoPi * i / m);
        if (v > best) {
            best = v;
            best_i = i;
        }
    }
    double lo = kTwoPi * (best_i - 1) / m;
    double hi = kTwoPi * (best_i + 1) / m;
    return std::max(best, golden_max(f, lo, hi));
}

struct Slopes {
    double last_window = 0.0;  // secant over the last `window` points
    double prev_window = 0.0;  // the same, one point earlier
    double origin = 0.0;       // secant from the first point
};

Slopes window_slopes(const RadialMaxProfile& p, int window) {
    const std::size_t K = p.values.size() - 1;
    const std::size_t w = static_cast<std::size_t>(window);
    auto secant = [&](std::size_t i, std::size_t j) {
        return (p.values[j] - p.values[i]) / (p.t(j) - p.t(i));
    };
    Slopes s;
    s.last_window = secant(K - w, K);
    s.prev_window = K - w >= 1 ? secant(K - w - 1, K - 1) : s.last_window;
    s.origin = secant(0, K);
    return s;
}

std::string monotonicity_diagnostic(const RadialMaxProfile& p) {
    bool strict = true;
    for (std::size_t k = 1; k < p.values.size(); ++k) {
        if (p.values[k] < p.values[k - 1])
            return "violated@" + std::to_string(k);
        if (p.values[k] == p.values[k - 1]) strict = false;
    }
    return strict ? "increasing" : "nondecreasing";
}

AlphaEstimate estimate_from_profile(const RadialMaxProfile& p,
                                    const AlphaOptions& opt, double r_max) {
    AlphaEstimate a;
    a.window = std::min<int>(opt.window,
                             static_cast<int>(p.values.size()) - 1);
    a.r_max = r_max;
    a.band_margin = opt.band_margin;
    a.monotonicity = monotonicity_diagnostic(p);

    for (double v : p.values) {
        if (!std::isfinite(v)) {
            a.infinite = true;  // u overflowed along some circle: M diverges
            a.value = a.lower = a.upper =
                std::numeric_limits<double>::infinity();
            return a;
        }
    }

    Slopes s = window_slopes(p, a.window);
    double scale = 1.0;
    for (double v : p.values) scale = std::max(scale, std::abs(v));
    if (convexity_defect(p) > opt.defect_tol * scale) a.heuristic = true;

    if (s.last_window > opt.infinity_cap &&
        s.last_window >= s.prev_window * (1.0 - 1e-12)) {
        a.infinite = true;
        a.value = a.lower = a.upper = std::numeric_limits<double>::infinity();
        return a;
    }

    a.value = s.last_window;
    a.lower = s.last_window;
    a.upper = std::max(s.last_window, s.origin) + opt.band_margin;
    return a;
}

} // namespace

double max_on_circle(const ExprAst& u, double r, int m) {
    if (!(r > 0.0)) throw std::invalid_argument("circle radius must be > 0");
    if (m < 16) throw std::invalid_argument("circle sample count must be >= 16");
    return circle_max(
        [&](double theta) {
            return eval(u, r * std::cos(theta), r * std::sin(theta));
        },
        m);
}

double max_on_circle(const ScalarGrid& u, double r, int m) {
    if (!(r > 0.0)) throw std::invalid_argument("circle radius must be > 0");
    if (m < 16) throw std::invalid_argument("circle sample count must be >= 16");
    if (r > u.L)
        throw std::out_of_range("circle of radius " + std::to_string(r) +
                                " does not fit the grid window");
    return circle_max(
        [&](double theta) {
            return interp_bilinear(u, r * std::cos(theta), r * std::sin(theta));
        },
        m);
}

RadialMaxProfile profile(const ExprAst& u, double r0, double rho, int count,
                         int m) {
    if (!(r0 > 0.0)) throw std::invalid_argument("r0 must be > 0");
    if (!(rho > 1.0)) throw std::invalid_argument("rho must be > 1");
    if (count < 4) throw std::invalid_argument("profile needs count >= 4");
    RadialMaxProfile p;
    p.m = m;
    p.radii.resize(count);
    p.values.resize(count);
    for (int k = 0; k < count; ++k) p.radii[k] = r0 * std::pow(rho, k);
    // distinct radii are independent; assembly order is fixed by index
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t k) {
        p.values[k] = max_on_circle(u, p.radii[k], m);
    });
    return p;
}

double convexity_defect(const RadialMaxProfile& p) {
    if (p.values.size() < 3)
        throw std::invalid_argument("convexity defect needs >= 3 points");
    double defect = 0.0;
    for (std::size_t k = 1; k + 1 < p.values.size(); ++k) {
        double second = p.values[k - 1] + p.values[k + 1] - 2.0 * p.values[k];
        defect = std::max(defect, -second);
    }
    return defect;
}

AlphaEstimate alpha_estimate(const ExprAst& u, double r_max, int window) {
    AlphaOptions opt;
    opt.window = window;
    return alpha_estimate(u, r_max, opt);
}

AlphaEstimate alpha_estimate(const ExprAst& u, double r_max,
                             const AlphaOptions& opt) {
    if (!(r_max > opt.r0 * opt.rho))
        throw std::invalid_argument("r_max too small for the radii ladder");
    int count = static_cast<int>(std::floor(
                    std::log(r_max / opt.r0) / std::log(opt.rho) + 1e-9)) + 1;
    count = std::max(count, 4);
    RadialMaxProfile p = profile(u, opt.r0, opt.rho, count, opt.m);
    return estimate_from_profile(p, opt, r_max);
}

AlphaEstimate alpha_estimate(const ScalarGrid& u, int window) {
    AlphaOptions opt;
    opt.window = window;
    // Radii capped by the inscribed circle; the estimate is annotated rather
    // than silently extrapolated beyond the data.
    const int count = 12;
    const double r_top = 0.95 * u.L;
    const double r0 = r_top / std::pow(opt.rho, count - 1);
    RadialMaxProfile p;
    p.m = opt.m;
    p.radii.resize(count);
    p.values.resize(count);
    for (int k = 0; k < count; ++k) p.radii[k] = r0 * std::pow(opt.rho, k);
    for (int k = 0; k < count; ++k)
        p.values[k] = max_on_circle(u, p.radii[k], opt.m);
    AlphaEstimate a = estimate_from_profile(p, opt, r_top);
    a.window_limited = true;
    a.heuristic = true;  // no credible tail: grid data end at the window
    return a;
}

const char* to_string(Completeness c) {
    switch (c) {
    case Completeness::Complete: return "Complete";
    case Completeness::Incomplete: return "Incomplete";
    case Completeness::BorderlineComplete: return "BorderlineComplete";
    }
    return "?";
}

Completeness classify_completeness(const AlphaEstimate& a) {
    if (a.infinite || a.lower > 1.0) return Completeness::Incomplete;
    if (a.upper < 1.0) return Completeness::Complete;
    return Completeness::BorderlineComplete;
}

bool s_alpha_member(const ExprAst& u, double alpha, double tol,
                    const MembershipOptions& opt) {
    if (alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
    ScalarGrid g = sample(u, opt.window_L, opt.n);
    if (!is_subharmonic(g, default_subharmonic_tol(g)).pass) return false;
    AlphaEstimate a = alpha_estimate(u, opt.r_max);
    if (a.infinite) return false;
    return a.upper <= alpha + tol;
}

} // namespace confplane
