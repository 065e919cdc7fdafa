#pragma once

#include "confplane/expr.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace confplane {

/// Uniform sampling of a scalar function over the square [-L,L]^2 on the
/// endpoint lattice x_i = -L + i*h, h = 2L/(n-1), stored row-major with y
/// increasing (value index j*n + i). Immutable by convention after
/// construction; nodewise operations return fresh grids.
struct ScalarGrid {
    int n = 0;            ///< nodes per axis, n >= 3
    double L = 0.0;       ///< half-width of the window
    int border = 0;       ///< invalid boundary rings (values zeroed, excluded
                          ///< from verdicts); produced by stencil operations
    std::vector<double> v;

    double h() const { return 2.0 * L / (n - 1); }
    double x(int i) const { return -L + i * h(); }
    double y(int j) const { return -L + j * h(); }
    double at(int i, int j) const { return v[static_cast<std::size_t>(j) * n + i]; }
    double& at(int i, int j) { return v[static_cast<std::size_t>(j) * n + i]; }
    bool valid(int i, int j) const {
        return i >= border && j >= border && i < n - border && j < n - border;
    }
};

/// Domain failure while filling a grid; carries the offending node.
class SampleError : public std::runtime_error {
public:
    int i, j;
    double x, y;
    SampleError(const std::string& what, int i_, int j_, double x_, double y_)
        : std::runtime_error(what + " at node (" + std::to_string(i_) + "," +
                             std::to_string(j_) + "), x=" + std::to_string(x_) +
                             ", y=" + std::to_string(y_)),
          i(i_), j(j_), x(x_), y(y_) {}
};

/// Allocate a constant grid (validates n >= 3, L > 0).
ScalarGrid make_grid(double L, int n, double fill = 0.0);

/// Sample an expression at every node. Rejects domain errors and non-finite
/// values with the node coordinates.
ScalarGrid sample(const ExprAst& expr, double L, int n);

/// 5-point stencil (u_E + u_W + u_N + u_S - 4 u_C)/h^2 on the interior; the
/// boundary ring is flagged invalid (border grows by one), not extrapolated:
/// one-sided second differences are low-order and would pollute verdicts.
ScalarGrid laplacian(const ScalarGrid& u);

/// Gauss curvature K = e^{2u} * laplacian(u) of the metric e^{-2u}g0.
/// Overflow is clamped to +-DBL_MAX and flagged, never a silent NaN.
struct CurvatureResult {
    ScalarGrid K;
    bool unbounded = false;
};
CurvatureResult curvature(const ScalarGrid& u);

/// Nonnegative curvature test: pass iff min over valid nodes of the grid
/// Laplacian is >= -tol.
struct SubharmonicVerdict {
    bool pass = false;
    double min_lap = 0.0;
    int argmin_i = 0, argmin_j = 0;
    double tol = 0.0;
};

/// Default tolerance tied to discretization noise: 1e-8 * scale / h^2 with
/// scale = max(1, max |u|).
double default_subharmonic_tol(const ScalarGrid& u);
SubharmonicVerdict is_subharmonic(const ScalarGrid& u, double tol);

/// First fundamental form samples E, F, G on a shared lattice, pointwise
/// positive definite (E > 0, G > 0, EG - F^2 > 0).
struct MetricGrid {
    ScalarGrid E, F, G;
};

/// Validate lattice agreement + positive definiteness; throws
/// std::invalid_argument naming the first offending node (row-major order).
MetricGrid make_metric(ScalarGrid E, ScalarGrid F, ScalarGrid G);
void validate_metric(const MetricGrid& g);

/// Bilinear interpolation inside the window; throws std::out_of_range beyond.
double interp_bilinear(const ScalarGrid& g, double x, double y);

/// CPG1 file format: header line "CPG1 n L", then n lines of n values,
/// row-major with y increasing. CSV mirrors the layout without the header
/// (the half-width must be supplied on import). Values round-trip exactly
/// (shortest representation).
void write_cpg(const ScalarGrid& g, const std::string& path);
ScalarGrid read_cpg(const std::string& path);
void write_csv(const ScalarGrid& g, const std::string& path);
ScalarGrid read_csv(const std::string& path, double L);

} // namespace confplane
