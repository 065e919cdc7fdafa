#pragma once

#include "confplane/field.hpp"

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace confplane {

/// Complex-valued coefficient on the endpoint lattice of a square window,
/// stored as paired real/imaginary grids (which also gives it a CPG1 disk
/// representation for free). Valid coefficients satisfy sup|mu| < 1 strictly.
struct BeltramiCoefficient {
    ScalarGrid re;
    ScalarGrid im;
    double support_radius = 0.0;  ///< mu vanishes for r >= this; 0 = unknown
    double max_modulus = 0.0;     ///< sup |mu| over the nodes

    std::complex<double> at(int i, int j) const {
        return {re.at(i, j), im.at(i, j)};
    }
};

/// Bundle paired grids into a coefficient, checking lattice agreement,
/// finiteness, and sup|mu| < 1; throws std::invalid_argument otherwise.
BeltramiCoefficient make_coefficient(ScalarGrid re, ScalarGrid im,
                                     double support_radius = 0.0);

/// Conformal-scale / dilatation split of a positive-definite metric:
/// g = lambda |dz + mu dzbar|^2.
struct ConformalDecomposition {
    ScalarGrid lambda;  ///< positive everywhere
    BeltramiCoefficient mu;
};

/// lambda = (E + G + 2 sqrt(EG - F^2))/4, mu = (E - G + 2iF)/(4 lambda),
/// nodewise. Positive definiteness of g forces |mu| < 1.
ConformalDecomposition decompose(const MetricGrid& g);

/// Inverse of decompose: E = lambda|1+mu|^2, G = lambda|1-mu|^2,
/// F = 2 lambda Im(mu). decompose(reconstruct(d)) == d to round-off.
MetricGrid reconstruct(const ConformalDecomposition& d);

/// Normalized orientation-preserving map of the plane, sampled on the
/// n-point periodic lattice x_k = -W + k*(2W/n) of the square window
/// [-W,W)^2, row-major with y increasing (index j*n + i). The map satisfies
/// phi(0) = 0 and phi(1) = 1; norm_shift/norm_scale record the affine
/// post-composition w -> (w - norm_shift)/norm_scale that achieved this.
struct PlaneDiffeo {
    int n = 0;
    double W = 0.0;
    std::vector<std::complex<double>> phi;     ///< map values at the nodes
    std::vector<std::complex<double>> phi_z;   ///< Wirtinger d/dz
    std::vector<std::complex<double>> phi_zb;  ///< Wirtinger d/dzbar
    std::complex<double> norm_shift{0.0, 0.0};
    std::complex<double> norm_scale{1.0, 0.0};
    double residual = 0.0;     ///< sup |phi_zb - mu phi_z| over the nodes
    int iterations = 0;        ///< fixed-point iterations used by the solver
    double contraction = 0.0;  ///< sup |mu| after tapering (geometric rate)
    double min_jacobian = 0.0; ///< min over nodes of |phi_z|^2 - |phi_zb|^2

    double h() const { return 2.0 * W / n; }
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(j) * n + i;
    }

    /// Bilinear interpolation of the stored grids. Intended for points well
    /// inside the window; coordinates are clamped to the outermost cells.
    std::complex<double> eval(double px, double py) const;
    std::complex<double> eval_dz(double px, double py) const;
    std::complex<double> eval_dzb(double px, double py) const;
};

/// Wrap raw map values on the periodic lattice into a diffeo record:
/// Wirtinger derivatives by central differences of the value grid (the
/// boundary ring copies its inner neighbor — periodic differences would wrap
/// the non-periodic affine part). Values are kept as given; apply
/// renormalize for the 0,1-normalization. Throws std::domain_error on an
/// orientation violation (Jacobian <= 0).
PlaneDiffeo make_diffeo(std::vector<std::complex<double>> values,
                        double window, int n);

/// Re-apply the 0,1-normalization (after an affine post-composition of the
/// grids); the normalization record composes accordingly.
PlaneDiffeo renormalize(PlaneDiffeo phi);

/// mu_phi = phi_zbar / phi_z recomputed from the map values by central
/// differences, then resampled onto the endpoint lattice of the same window.
/// Throws std::domain_error on an orientation violation at an interior node.
BeltramiCoefficient dilatation(const PlaneDiffeo& phi);

struct SolveOptions {
    double residual_tol = 1e-10;  ///< sup-norm update stopping threshold
    int max_iterations = 200;
    double support_factor = 0.8;  ///< taper support radius R = factor * W
};

/// Fixed-point iteration failed to converge (or produced a degenerate map);
/// carries the contraction estimate and the last residual.
class SolveError : public std::runtime_error {
public:
    double contraction;
    double residual;
    SolveError(const std::string& what, double k, double res)
        : std::runtime_error(what + " (contraction " + std::to_string(k) +
                             ", residual " + std::to_string(res) + ")"),
          contraction(k), residual(res) {}
};

/// Solve phi_zbar = mu phi_z on the periodized window [-window,window)^2.
///
/// The coefficient is resampled onto the periodic lattice (zero outside its
/// own window) and cut off by a radial cosine taper over the outer 20% of
/// the support radius R = support_factor * window, mirroring the
/// compactly-supported extension device. Iterates the singular-integral
/// fixed point omega <- P0[mu (1 + S omega)] with S the Beurling transform
/// (Fourier multiplier conj(xi)/xi) and the constant Fourier mode carried
/// separately as tau (the conj(z) component of the map); then
/// phi = z + tau conj(z) + C(omega) with C the Cauchy transform (multiplier
/// -2i/xi, zero mode gauged to 0 and absorbed by the normalization).
/// Converges geometrically with ratio <= sup|mu|.
///
/// Requires even n >= 16 (so 0 is a lattice node) and window > 1 (so the
/// normalization point 1 is interior). Throws SolveError on non-convergence
/// within the budget or a non-positive Jacobian.
PlaneDiffeo solve_beltrami(const BeltramiCoefficient& mu, double window, int n,
                           const SolveOptions& opt);
PlaneDiffeo solve_beltrami(const BeltramiCoefficient& mu, double window, int n);

/// Conformal factor f with g ~ phi^*(e^f g0): f = log(lambda |phi_z|^-2)
/// composed with phi^-1, returned on the endpoint lattice of the concentric
/// half-window (n unchanged) — the image of the map window covers that much
/// for moderate dilatation. The inverse is evaluated by triangulated
/// scattered-data interpolation of (phi(node) -> node), the dominant error
/// source here; throws std::domain_error for points outside the image mesh.
ScalarGrid recover_factor(const ConformalDecomposition& d,
                          const PlaneDiffeo& phi);

/// Pullback (phi^* g)(v, w) = g(Dphi v, Dphi w), sampled on the endpoint
/// lattice of the given output window (defaults to g's own lattice). The
/// differential comes from the stored derivative grids; g is evaluated at
/// the image points by bilinear interpolation and must contain them
/// (std::domain_error otherwise).
MetricGrid pullback(const MetricGrid& g, const PlaneDiffeo& phi,
                    int n_out, double window_out);
MetricGrid pullback(const MetricGrid& g, const PlaneDiffeo& phi);

/// decompose -> solve_beltrami -> recover_factor -> pullback(e^f g0), with
/// the deviation from g measured on the inner quarter-window (|x|,|y| <=
/// L/4, relative to max(|E|,|G|,1e-9) nodewise) to keep taper artifacts out
/// of the number.
struct RoundtripReport {
    ConformalDecomposition decomposition;
    PlaneDiffeo phi;
    ScalarGrid factor;
    double max_rel_deviation = 0.0;
};

RoundtripReport pi_roundtrip(const MetricGrid& g);

} // namespace confplane
