#pragma once

#include "confplane/asymptotics.hpp"
#include "confplane/expr.hpp"

#include <array>
#include <vector>

namespace confplane {

/// Piecewise-linear path; conformal length is integrated per segment.
struct PathPolyline {
    std::vector<std::array<double, 2>> pts;  ///< >= 2, consecutive distinct
    long refinement_budget = 1 << 22;        ///< max integrand evaluations
};

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool budget_exhausted = false;  ///< stopped before reaching the tolerance
};

/// Length of the path in the metric e^{-2u}g0, i.e. the integral of e^{-u}
/// arclength, by adaptive Simpson quadrature per segment (absolute error
/// target `tol` across the whole path). e^{-u} overflow for very negative u
/// yields +infinity rather than undefined behavior.
QuadratureResult conformal_length(const ExprAst& u, const PathPolyline& path,
                                  double tol = 1e-9);

enum class EscapeVerdict { IncompleteWitness, NoWitnessFound, Inconclusive };
const char* to_string(EscapeVerdict v);

/// One radial probe: cumulative conformal lengths of t -> t e^{i angle}
/// from t=1, recorded at geometric checkpoints.
struct RayRecord {
    double angle = 0.0;
    std::vector<double> checkpoints;  ///< radii of the records
    std::vector<double> partials;     ///< cumulative lengths at those radii
    bool diverged = false;     ///< crossed diverge_threshold (stopped early)
    bool finite_tail = false;  ///< increment of the final chunk ending at
                               ///< R_max fell below finite_threshold
};

struct EscapeOptions {
    int angles = 64;
    double R_max = 1e6;
    double checkpoint_ratio = 2.0;
    double finite_threshold = 1e-6;
    double diverge_threshold = 1e3;
    double quad_tol = 1e-9;
};

/// Outcome of the ray search. NoWitnessFound is one-sided evidence (rays are
/// not all escaping paths), recorded by the `one_sided` caveat flag;
/// Inconclusive is a valid verdict, never coerced.
struct EscapeReport {
    EscapeVerdict verdict = EscapeVerdict::Inconclusive;
    double witness_angle = 0.0;
    double witness_partial_length = 0.0;  ///< cumulative length at R_max
    double witness_length_bound = 0.0;    ///< partial + safety margin; every
                                          ///< recorded partial stays below it
    std::vector<RayRecord> rays;
    double r_max_reached = 0.0;
    bool one_sided = true;
    EscapeOptions options;
};

/// Probe equispaced rays from r=1 outward: a ray whose final increment at
/// R_max is below finite_threshold is a finite-length escaping-path witness
/// (incompleteness); if every ray's partial length exceeds diverge_threshold
/// the search reports NoWitnessFound; anything else is Inconclusive.
EscapeReport ray_escape_search(const ExprAst& u, int angles = 64,
                               double R_max = 1e6,
                               double finite_threshold = 1e-6,
                               double diverge_threshold = 1e3);
EscapeReport ray_escape_search(const ExprAst& u, const EscapeOptions& opt);

enum class Agreement { Agree, Disagree, Inconclusive };
const char* to_string(Agreement a);

/// Side-by-side verdicts: the alpha classifier against the brute-force ray
/// oracle, corroborating the completeness threshold at alpha = 1.
struct CrossValidation {
    AlphaEstimate alpha;
    Completeness classification = Completeness::Complete;
    EscapeReport escape;
    Agreement agreement = Agreement::Inconclusive;
    bool heuristic = false;  ///< alpha estimate was downgraded (input not
                             ///< credibly subharmonic)
};

struct CrossValidateOptions {
    double alpha_r_max = 1e6;
    AlphaOptions alpha;
    EscapeOptions escape;
};

CrossValidation cross_validate(const ExprAst& u);
CrossValidation cross_validate(const ExprAst& u,
                               const CrossValidateOptions& opt);

} // namespace confplane
