#pragma once

#include "confplane/expr.hpp"
#include "confplane/field.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace confplane {

/// Sampled circle maxima M(r_k) = sup{u(z) : |z| = r_k} at geometrically
/// spaced radii r_k = r0 * rho^k. The t-view mu(t) = M(e^t) is convex for
/// subharmonic u, and t_k is uniform because the radii are geometric.
struct RadialMaxProfile {
    std::vector<double> radii;
    std::vector<double> values;
    int m = 512;  ///< circle sample count used per radius

    double t(std::size_t k) const { return std::log(radii[k]); }
};

/// Max of u over the circle |z| = r: m equispaced angles, then a
/// golden-section polish around the best one. The result never exceeds the
/// true supremum; the gap is O(m^-2) for smooth u.
double max_on_circle(const ExprAst& u, double r, int m = 512);

/// Same, for grid inputs (bilinear samples; the circle must fit the window).
double max_on_circle(const ScalarGrid& u, double r, int m = 512);

RadialMaxProfile profile(const ExprAst& u, double r0, double rho, int count,
                         int m = 512);

/// Convexity shortfall of mu(t): max over interior k of the amount by which
/// the second difference mu_{k-1} + mu_{k+1} - 2 mu_k falls below 0.
/// Nonnegative; ~0 for genuinely subharmonic u.
double convexity_defect(const RadialMaxProfile& p);

/// Estimate of alpha(u) = lim M(r,u)/log r. `value` and `lower` are the
/// last-window secant slope of mu (a sound lower bound: convex mu has
/// nondecreasing slopes converging to alpha). `upper` adds a documented
/// heuristic uncertainty floor (band_margin), since no convergence rate is
/// available; the origin secant is folded in when it is larger.
struct AlphaEstimate {
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool infinite = false;        ///< slope exceeded the cap and kept rising,
                                  ///< or M overflowed
    bool heuristic = false;       ///< convexity defect above tolerance
                                  ///< (input not credibly subharmonic)
    bool window_limited = false;  ///< grid input: radii truncated by the window
    int window = 5;
    double r_max = 0.0;
    double band_margin = 0.02;
    std::string monotonicity;     ///< "increasing" | "nondecreasing" |
                                  ///< "violated@k"
};

struct AlphaOptions {
    double r0 = 1.0;
    double rho = 2.0;
    int m = 512;
    int window = 5;
    double band_margin = 0.02;  ///< heuristic uncertainty floor on `upper`
    double infinity_cap = 50.0; ///< slope above this and still increasing
    double defect_tol = 1e-6;   ///< convexity defect above this => heuristic
};

AlphaEstimate alpha_estimate(const ExprAst& u, double r_max = 1e12,
                             int window = 5);
AlphaEstimate alpha_estimate(const ExprAst& u, double r_max,
                             const AlphaOptions& opt);

/// Window-limited variant for grid inputs (always flagged window_limited).
AlphaEstimate alpha_estimate(const ScalarGrid& u, int window = 5);

enum class Completeness { Complete, Incomplete, BorderlineComplete };
const char* to_string(Completeness c);

/// Completeness of e^{-2u}g0 per the threshold alpha <= 1: Complete when
/// upper < 1, Incomplete when lower > 1 or alpha = +inf, BorderlineComplete
/// when the band contains 1 (completeness holds at exactly 1, reported with
/// the uncertainty annotation).
Completeness classify_completeness(const AlphaEstimate& a);

struct MembershipOptions {
    double window_L = 4.0;  ///< subharmonicity window half-width
    int n = 129;            ///< subharmonicity grid resolution
    double r_max = 1e6;     ///< alpha radii extent
};

/// Membership in S_alpha: subharmonic on the analysis window and alpha upper
/// band <= alpha + tol. Recommended tol 0.03 (>= band_margin, matching the
/// alpha accuracy target).
bool s_alpha_member(const ExprAst& u, double alpha, double tol,
                    const MembershipOptions& opt = {});

} // namespace confplane
