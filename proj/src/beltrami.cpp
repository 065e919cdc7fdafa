#include "confplane/beltrami.hpp"

#include "confplane/fft.hpp"
#include "confplane/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <utility>

namespace confplane {

namespace {

using cd = std::complex<double>;

std::string node_str(int i, int j) {
    return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

std::string point_str(double x, double y) {
    return "(" + std::to_string(x) + "," + std::to_string(y) + ")";
}

// Bilinear interpolation of a complex grid on the periodic lattice
// x_k = -W + k*(2W/n); coordinates are clamped into the outermost cells.
cd bilin_periodic(const std::vector<cd>& a, int n, double W, double px,
                  double py) {
    const double h = 2.0 * W / n;
    const double fx = (px + W) / h;
    const double fy = (py + W) / h;
    int i0 = static_cast<int>(std::floor(fx));
    int j0 = static_cast<int>(std::floor(fy));
    i0 = std::clamp(i0, 0, n - 2);
    j0 = std::clamp(j0, 0, n - 2);
    const double tx = fx - i0;
    const double ty = fy - j0;
    const std::size_t t = static_cast<std::size_t>(j0) * n + i0;
    return (1 - tx) * (1 - ty) * a[t] + tx * (1 - ty) * a[t + 1] +
           (1 - tx) * ty * a[t + n] + tx * ty * a[t + n + 1];
}

// Radial cosine cutoff: 1 up to 0.8R, 0 beyond R, half-cosine ramp between.
double taper(double r, double R) {
    const double inner = 0.8 * R;
    if (r <= inner) return 1.0;
    if (r >= R) return 0.0;
    return 0.5 * (1.0 + std::cos(std::numbers::pi * (r - inner) / (R - inner)));
}

double min_jacobian_of(const PlaneDiffeo& d) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < d.phi_z.size(); ++t)
        m = std::min(m, std::norm(d.phi_z[t]) - std::norm(d.phi_zb[t]));
    return m;
}

// Central differences of a complex grid on the periodic lattice; the
// boundary ring copies its nearest interior neighbor (periodic wrap would
// mix in the non-periodic affine part of a map grid).
void wirtinger_central(const std::vector<cd>& phi, int n, double h,
                       std::vector<cd>& pz, std::vector<cd>& pzb) {
    pz.resize(phi.size());
    pzb.resize(phi.size());
    const cd iu(0.0, 1.0);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t jj) {
        const int j = std::clamp(static_cast<int>(jj), 1, n - 2);
        for (int ii = 0; ii < n; ++ii) {
            const int i = std::clamp(ii, 1, n - 2);
            const std::size_t t = static_cast<std::size_t>(j) * n + i;
            const cd px = (phi[t + 1] - phi[t - 1]) / (2.0 * h);
            const cd py = (phi[t + n] - phi[t - n]) / (2.0 * h);
            const std::size_t o = jj * n + ii;
            pz[o] = 0.5 * (px - iu * py);
            pzb[o] = 0.5 * (px + iu * py);
        }
    });
}

} // namespace

BeltramiCoefficient make_coefficient(ScalarGrid re, ScalarGrid im,
                                     double support_radius) {
    if (re.n != im.n || re.L != im.L || re.v.size() != im.v.size())
        throw std::invalid_argument(
            "make_coefficient: real and imaginary grids disagree");
    double sup = 0.0;
    for (std::size_t t = 0; t < re.v.size(); ++t) {
        const double m = std::hypot(re.v[t], im.v[t]);
        if (!std::isfinite(m))
            throw std::invalid_argument(
                "make_coefficient: non-finite coefficient value");
        sup = std::max(sup, m);
    }
    if (sup >= 1.0)
        throw std::invalid_argument(
            "make_coefficient: sup|mu| = " + std::to_string(sup) +
            " is not < 1");
    BeltramiCoefficient c;
    c.re = std::move(re);
    c.im = std::move(im);
    c.support_radius = support_radius;
    c.max_modulus = sup;
    return c;
}

ConformalDecomposition decompose(const MetricGrid& g) {
    validate_metric(g);
    const int n = g.E.n;
    ScalarGrid lam = make_grid(g.E.L, n);
    ScalarGrid mre = make_grid(g.E.L, n);
    ScalarGrid mim = make_grid(g.E.L, n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
        for (int i = 0; i < n; ++i) {
            const std::size_t t = j * n + i;
            const double E = g.E.v[t], F = g.F.v[t], G = g.G.v[t];
            const double disc = E * G - F * F;
            const double l = 0.25 * (E + G + 2.0 * std::sqrt(disc));
            lam.v[t] = l;
            mre.v[t] = (E - G) / (4.0 * l);
            mim.v[t] = F / (2.0 * l);
        }
    });
    ConformalDecomposition d;
    d.lambda = std::move(lam);
    // positive definiteness forces |mu| < 1; make_coefficient re-verifies
    d.mu = make_coefficient(std::move(mre), std::move(mim));
    return d;
}

MetricGrid reconstruct(const ConformalDecomposition& d) {
    const ScalarGrid& lam = d.lambda;
    if (lam.n != d.mu.re.n || lam.L != d.mu.re.L)
        throw std::invalid_argument(
            "reconstruct: lambda and mu lattices disagree");
    const int n = lam.n;
    ScalarGrid E = make_grid(lam.L, n);
    ScalarGrid F = make_grid(lam.L, n);
    ScalarGrid G = make_grid(lam.L, n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
        for (int i = 0; i < n; ++i) {
            const std::size_t t = j * n + i;
            const double l = lam.v[t];
            if (!(l > 0.0) || !std::isfinite(l))
                throw std::invalid_argument(
                    "reconstruct: lambda not positive at node " +
                    node_str(i, static_cast<int>(j)));
            const double a = d.mu.re.v[t], b = d.mu.im.v[t];
            E.v[t] = l * ((1.0 + a) * (1.0 + a) + b * b);
            G.v[t] = l * ((1.0 - a) * (1.0 - a) + b * b);
            F.v[t] = 2.0 * l * b;
        }
    });
    return make_metric(std::move(E), std::move(F), std::move(G));
}

cd PlaneDiffeo::eval(double px, double py) const {
    return bilin_periodic(phi, n, W, px, py);
}

cd PlaneDiffeo::eval_dz(double px, double py) const {
    return bilin_periodic(phi_z, n, W, px, py);
}

cd PlaneDiffeo::eval_dzb(double px, double py) const {
    return bilin_periodic(phi_zb, n, W, px, py);
}

PlaneDiffeo renormalize(PlaneDiffeo phi) {
    const cd A = phi.eval(0.0, 0.0);
    const cd B = phi.eval(1.0, 0.0) - A;
    if (std::abs(B) < 1e-12)
        throw std::domain_error(
            "renormalize: map degenerate between 0 and 1");
    for (auto& w : phi.phi) w = (w - A) / B;
    for (auto& w : phi.phi_z) w /= B;
    for (auto& w : phi.phi_zb) w /= B;
    phi.norm_shift += phi.norm_scale * A;
    phi.norm_scale *= B;
    phi.min_jacobian = min_jacobian_of(phi);
    return phi;
}

PlaneDiffeo make_diffeo(std::vector<cd> values, double window, int n) {
    if (n < 16 || n % 2 != 0)
        throw std::invalid_argument("make_diffeo: n must be even and >= 16");
    if (!(window > 1.0))
        throw std::invalid_argument("make_diffeo: window must exceed 1");
    if (values.size() != static_cast<std::size_t>(n) * n)
        throw std::invalid_argument("make_diffeo: value count != n*n");
    for (const cd& w : values)
        if (!std::isfinite(w.real()) || !std::isfinite(w.imag()))
            throw std::invalid_argument("make_diffeo: non-finite map value");

    PlaneDiffeo d;
    d.n = n;
    d.W = window;
    d.phi = std::move(values);
    wirtinger_central(d.phi, n, d.h(), d.phi_z, d.phi_zb);
    for (int j = 1; j < n - 1; ++j)
        for (int i = 1; i < n - 1; ++i) {
            const std::size_t t = d.idx(i, j);
            if (std::norm(d.phi_z[t]) - std::norm(d.phi_zb[t]) <= 0.0)
                throw std::domain_error(
                    "make_diffeo: orientation violation (Jacobian <= 0) at "
                    "node " + node_str(i, j));
        }
    d.min_jacobian = min_jacobian_of(d);
    return d;
}

BeltramiCoefficient dilatation(const PlaneDiffeo& phi) {
    const int n = phi.n;
    std::vector<cd> pz, pzb;
    wirtinger_central(phi.phi, n, phi.h(), pz, pzb);
    std::vector<cd> mu(pz.size());
    for (int j = 1; j < n - 1; ++j)
        for (int i = 1; i < n - 1; ++i) {
            const std::size_t t = phi.idx(i, j);
            if (std::norm(pz[t]) - std::norm(pzb[t]) <= 0.0)
                throw std::domain_error(
                    "dilatation: orientation violation (Jacobian <= 0) at "
                    "node " + node_str(i, j));
            mu[t] = pzb[t] / pz[t];
        }
    // boundary ring copies its interior neighbor (same convention as the
    // derivative stencil)
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            if (j > 0 && j < n - 1 && i > 0 && i < n - 1) continue;
            mu[phi.idx(i, j)] =
                mu[phi.idx(std::clamp(i, 1, n - 2), std::clamp(j, 1, n - 2))];
        }
    // resample from the periodic lattice onto the endpoint lattice
    ScalarGrid re = make_grid(phi.W, n);
    ScalarGrid im = make_grid(phi.W, n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
        for (int i = 0; i < n; ++i) {
            const cd m = bilin_periodic(mu, n, phi.W, re.x(i),
                                        re.y(static_cast<int>(j)));
            re.v[j * n + i] = m.real();
            im.v[j * n + i] = m.imag();
        }
    });
    return make_coefficient(std::move(re), std::move(im));
}

PlaneDiffeo solve_beltrami(const BeltramiCoefficient& mu, double window,
                           int n, const SolveOptions& opt) {
    if (n < 16 || n % 2 != 0)
        throw std::invalid_argument(
            "solve_beltrami: n must be even and >= 16");
    if (!(window > 1.0))
        throw std::invalid_argument(
            "solve_beltrami: window must exceed 1 (the normalization point "
            "1 must be interior)");
    if (!(opt.residual_tol > 0.0) || opt.max_iterations < 1 ||
        !(opt.support_factor > 0.0) || opt.support_factor >= 1.0)
        throw std::invalid_argument("solve_beltrami: invalid options");

    const double W = window;
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    const double step = 2.0 * W / n;
    const double R = opt.support_factor * W;
    const double Lmu = mu.re.L;

    // resample the coefficient onto the periodic lattice (zero outside its
    // own window) and apply the compact-support taper
    std::vector<cd> m(nn);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
        const double y = -W + step * static_cast<double>(j);
        for (int i = 0; i < n; ++i) {
            const double x = -W + step * i;
            cd val = 0.0;
            if (std::abs(x) <= Lmu && std::abs(y) <= Lmu)
                val = cd(interp_bilinear(mu.re, x, y),
                         interp_bilinear(mu.im, x, y));
            m[j * n + i] = taper(std::hypot(x, y), R) * val;
        }
    });
    double k = 0.0;
    for (const cd& v : m) k = std::max(k, std::abs(v));
    if (k >= 1.0)
        throw std::invalid_argument(
            "solve_beltrami: sup|mu| >= 1 after resampling");

    // Fourier symbols on the periodized window: frequency of mode (ki, kj)
    // is xi = (pi/W)(ki + i kj) with k in [-n/2, n/2)
    std::vector<cd> s_sym(nn), c_sym(nn);
    for (int j = 0; j < n; ++j) {
        const double kj = j < n / 2 ? j : j - n;
        for (int i = 0; i < n; ++i) {
            const double ki = i < n / 2 ? i : i - n;
            const std::size_t t = static_cast<std::size_t>(j) * n + i;
            if (i == 0 && j == 0) continue;  // zero mode gauged to 0
            const cd xi = (std::numbers::pi / W) * cd(ki, kj);
            s_sym[t] = std::conj(xi) / xi;
            c_sym[t] = cd(0.0, -2.0) / xi;
        }
    }
    auto apply = [&](const std::vector<cd>& in, const std::vector<cd>& sym) {
        std::vector<cd> out = in;
        fft2(out, n, false);
        for (std::size_t t = 0; t < nn; ++t) out[t] *= sym[t];
        fft2(out, n, true);
        return out;
    };
    auto mean_of = [&](const std::vector<cd>& a) {
        cd acc = 0.0;
        for (const cd& v : a) acc += v;
        return acc / static_cast<double>(nn);
    };

    // fixed point: the zero-free part omega and the constant mode tau of
    // mu (1 + S omega), giving phi_zbar = tau + omega
    cd tau = mean_of(m);
    std::vector<cd> om(nn);
    for (std::size_t t = 0; t < nn; ++t) om[t] = m[t] - tau;
    std::vector<cd> rhs(nn);
    double upd = std::numeric_limits<double>::infinity();
    int iters = 0;
    bool converged = false;
    while (iters < opt.max_iterations) {
        ++iters;
        const std::vector<cd> so = apply(om, s_sym);
        for (std::size_t t = 0; t < nn; ++t) rhs[t] = m[t] * (1.0 + so[t]);
        const cd tau_new = mean_of(rhs);
        upd = std::abs(tau_new - tau);
        for (std::size_t t = 0; t < nn; ++t) {
            const cd w = rhs[t] - tau_new;
            upd = std::max(upd, std::abs(w - om[t]));
            om[t] = w;
        }
        tau = tau_new;
        if (upd <= opt.residual_tol) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw SolveError("solve_beltrami: no convergence within " +
                             std::to_string(opt.max_iterations) +
                             " iterations",
                         k, upd);

    const std::vector<cd> so = apply(om, s_sym);
    const std::vector<cd> co = apply(om, c_sym);
    PlaneDiffeo out;
    out.n = n;
    out.W = W;
    out.phi.resize(nn);
    out.phi_z.resize(nn);
    out.phi_zb.resize(nn);
    for (int j = 0; j < n; ++j) {
        const double y = -W + step * j;
        for (int i = 0; i < n; ++i) {
            const double x = -W + step * i;
            const std::size_t t = static_cast<std::size_t>(j) * n + i;
            const cd z(x, y);
            out.phi[t] = z + tau * std::conj(z) + co[t];
            out.phi_z[t] = 1.0 + so[t];
            out.phi_zb[t] = tau + om[t];
        }
    }
    out.iterations = iters;
    out.contraction = k;
    try {
        out = renormalize(std::move(out));
    } catch (const std::domain_error&) {
        throw SolveError("solve_beltrami: degenerate normalization", k, upd);
    }
    double res = 0.0;
    for (std::size_t t = 0; t < nn; ++t)
        res = std::max(res,
                       std::abs(out.phi_zb[t] - m[t] * out.phi_z[t]));
    out.residual = res;
    if (out.min_jacobian <= 0.0)
        throw SolveError(
            "solve_beltrami: orientation violation (Jacobian <= 0)", k, res);
    return out;
}

PlaneDiffeo solve_beltrami(const BeltramiCoefficient& mu, double window,
                           int n) {
    return solve_beltrami(mu, window, n, SolveOptions{});
}

namespace {

// Piecewise-linear inverse of the forward map: the periodic lattice is
// triangulated (two triangles per cell), node images are hashed into a
// uniform bin grid, and queries interpolate the preimage barycentrically.
class ForwardMesh {
public:
    explicit ForwardMesh(const PlaneDiffeo& d) : d_(d), n_(d.n) {
        double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
        double y0 = x0, y1 = -x0;
        for (const cd& w : d.phi) {
            x0 = std::min(x0, w.real());
            x1 = std::max(x1, w.real());
            y0 = std::min(y0, w.imag());
            y1 = std::max(y1, w.imag());
        }
        nb_ = std::max(16, n_);
        bx0_ = x0;
        by0_ = y0;
        bw_ = std::max(x1 - x0, 1e-300) / nb_;
        bh_ = std::max(y1 - y0, 1e-300) / nb_;
        bins_.resize(static_cast<std::size_t>(nb_) * nb_);
        const int nc = n_ - 1;
        for (int j = 0; j < nc; ++j)
            for (int i = 0; i < nc; ++i)
                for (int half = 0; half < 2; ++half) {
                    const int tri = 2 * (j * nc + i) + half;
                    cd a, b, c;
                    corners(tri, a, b, c);
                    insert_bbox(a, b, c, tri);
                }
    }

    // Returns true and the preimage point when some triangle contains w.
    bool locate(double wx, double wy, double& px, double& py) const {
        const int bi = bin_of(wx, bx0_, bw_);
        const int bj = bin_of(wy, by0_, bh_);
        for (int ring = 0; ring <= 2; ++ring) {
            for (int j = bj - ring; j <= bj + ring; ++j) {
                if (j < 0 || j >= nb_) continue;
                for (int i = bi - ring; i <= bi + ring; ++i) {
                    if (i < 0 || i >= nb_) continue;
                    if (ring > 0 && std::abs(i - bi) != ring &&
                        std::abs(j - bj) != ring)
                        continue;  // interior of the ring already scanned
                    for (int tri :
                         bins_[static_cast<std::size_t>(j) * nb_ + i])
                        if (test(tri, wx, wy, px, py)) return true;
                }
            }
        }
        return false;
    }

private:
    static int bin_of_raw(double v, double v0, double w) {
        return static_cast<int>(std::floor((v - v0) / w));
    }
    int bin_of(double v, double v0, double w) const {
        return std::clamp(bin_of_raw(v, v0, w), 0, nb_ - 1);
    }

    // Triangle tri covers cell (i,j) = (c % (n-1), c / (n-1)) with c=tri/2;
    // even halves are (v00,v10,v11), odd (v00,v11,v01).
    void corners(int tri, cd& a, cd& b, cd& c) const {
        const int cell = tri / 2;
        const int i = cell % (n_ - 1);
        const int j = cell / (n_ - 1);
        const cd v00 = d_.phi[d_.idx(i, j)];
        const cd v10 = d_.phi[d_.idx(i + 1, j)];
        const cd v01 = d_.phi[d_.idx(i, j + 1)];
        const cd v11 = d_.phi[d_.idx(i + 1, j + 1)];
        a = v00;
        if (tri % 2 == 0) {
            b = v10;
            c = v11;
        } else {
            b = v11;
            c = v01;
        }
    }

    void preimages(int tri, cd& a, cd& b, cd& c) const {
        const int cell = tri / 2;
        const int i = cell % (n_ - 1);
        const int j = cell / (n_ - 1);
        const double h = d_.h();
        const double x = -d_.W + h * i;
        const double y = -d_.W + h * j;
        a = cd(x, y);
        if (tri % 2 == 0) {
            b = cd(x + h, y);
            c = cd(x + h, y + h);
        } else {
            b = cd(x + h, y + h);
            c = cd(x, y + h);
        }
    }

    void insert_bbox(cd a, cd b, cd c, int tri) {
        const double x0 = std::min({a.real(), b.real(), c.real()});
        const double x1 = std::max({a.real(), b.real(), c.real()});
        const double y0 = std::min({a.imag(), b.imag(), c.imag()});
        const double y1 = std::max({a.imag(), b.imag(), c.imag()});
        const int i0 = bin_of(x0, bx0_, bw_), i1 = bin_of(x1, bx0_, bw_);
        const int j0 = bin_of(y0, by0_, bh_), j1 = bin_of(y1, by0_, bh_);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i)
                bins_[static_cast<std::size_t>(j) * nb_ + i].push_back(tri);
    }

    bool test(int tri, double wx, double wy, double& px, double& py) const {
        cd a, b, c;
        corners(tri, a, b, c);
        const double d1x = b.real() - a.real(), d1y = b.imag() - a.imag();
        const double d2x = c.real() - a.real(), d2y = c.imag() - a.imag();
        const double det = d1x * d2y - d1y * d2x;
        if (!(std::abs(det) > 1e-300)) return false;
        const double rx = wx - a.real(), ry = wy - a.imag();
        const double s = (rx * d2y - ry * d2x) / det;
        const double t = (d1x * ry - d1y * rx) / det;
        const double eps = 1e-9;
        if (s < -eps || t < -eps || s + t > 1.0 + eps) return false;
        cd za, zb, zc;
        preimages(tri, za, zb, zc);
        const cd p = za + s * (zb - za) + t * (zc - za);
        px = p.real();
        py = p.imag();
        return true;
    }

    const PlaneDiffeo& d_;
    int n_;
    int nb_ = 0;
    double bx0_ = 0.0, by0_ = 0.0, bw_ = 1.0, bh_ = 1.0;
    std::vector<std::vector<int>> bins_;
};

} // namespace

ScalarGrid recover_factor(const ConformalDecomposition& d,
                          const PlaneDiffeo& phi) {
    const ScalarGrid& lam = d.lambda;
    const int n = lam.n;
    // factor before composing with the inverse: log(lambda |phi_z|^-2) on
    // the source lattice
    ScalarGrid fsrc = make_grid(lam.L, n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
        for (int i = 0; i < n; ++i) {
            const double l = lam.v[j * n + i];
            if (!(l > 0.0))
                throw std::invalid_argument(
                    "recover_factor: lambda not positive at node " +
                    node_str(i, static_cast<int>(j)));
            const cd pz =
                phi.eval_dz(lam.x(i), lam.y(static_cast<int>(j)));
            fsrc.v[j * n + i] = std::log(l) - 2.0 * std::log(std::abs(pz));
        }
    });
    const ForwardMesh mesh(phi);
    ScalarGrid f = make_grid(lam.L / 2.0, n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
        for (int i = 0; i < n; ++i) {
            const double wx = f.x(i);
            const double wy = f.y(static_cast<int>(j));
            double px = 0.0, py = 0.0;
            if (!mesh.locate(wx, wy, px, py))
                throw std::domain_error(
                    "recover_factor: point " + point_str(wx, wy) +
                    " is outside the image of the map window");
            // preimages sit well inside the window; clamp for edge safety
            px = std::clamp(px, -lam.L, lam.L);
            py = std::clamp(py, -lam.L, lam.L);
            f.v[j * n + i] = interp_bilinear(fsrc, px, py);
        }
    });
    return f;
}

MetricGrid pullback(const MetricGrid& g, const PlaneDiffeo& phi, int n_out,
                    double window_out) {
    validate_metric(g);
    ScalarGrid E = make_grid(window_out, n_out);
    ScalarGrid F = make_grid(window_out, n_out);
    ScalarGrid G = make_grid(window_out, n_out);
    const cd iu(0.0, 1.0);
    parallel_for(static_cast<std::size_t>(n_out), [&](std::size_t j) {
        for (int i = 0; i < n_out; ++i) {
            const double x = E.x(i);
            const double y = E.y(static_cast<int>(j));
            const cd w = phi.eval(x, y);
            const cd pz = phi.eval_dz(x, y);
            const cd pzb = phi.eval_dzb(x, y);
            const cd px = pz + pzb;        // d phi / dx
            const cd py = iu * (pz - pzb); // d phi / dy
            double Eg, Fg, Gg;
            try {
                Eg = interp_bilinear(g.E, w.real(), w.imag());
                Fg = interp_bilinear(g.F, w.real(), w.imag());
                Gg = interp_bilinear(g.G, w.real(), w.imag());
            } catch (const std::out_of_range&) {
                throw std::domain_error(
                    "pullback: image point " +
                    point_str(w.real(), w.imag()) + " of node " +
                    node_str(i, static_cast<int>(j)) +
                    " lies outside the metric window");
            }
            auto form = [&](const cd& a, const cd& b) {
                return Eg * a.real() * b.real() +
                       Fg * (a.real() * b.imag() + a.imag() * b.real()) +
                       Gg * a.imag() * b.imag();
            };
            const std::size_t t = j * n_out + i;
            E.v[t] = form(px, px);
            F.v[t] = form(px, py);
            G.v[t] = form(py, py);
        }
    });
    return make_metric(std::move(E), std::move(F), std::move(G));
}

MetricGrid pullback(const MetricGrid& g, const PlaneDiffeo& phi) {
    return pullback(g, phi, g.E.n, g.E.L);
}

RoundtripReport pi_roundtrip(const MetricGrid& g) {
    const int n = g.E.n;
    const double L = g.E.L;
    RoundtripReport rep;
    rep.decomposition = decompose(g);
    // the solver lattice needs an even node count; everything downstream
    // interpolates, so bumping an odd n is harmless
    const int ns = n % 2 == 0 ? n : n + 1;
    rep.phi = solve_beltrami(rep.decomposition.mu, L, ns);
    rep.factor = recover_factor(rep.decomposition, rep.phi);

    ScalarGrid Ef = rep.factor;
    for (double& v : Ef.v) v = std::exp(v);
    MetricGrid flat = make_metric(Ef, make_grid(Ef.L, Ef.n), Ef);

    const double Lq = L / 4.0;
    const MetricGrid back = pullback(flat, rep.phi, n, Lq);
    double dev = 0.0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double x = back.E.x(i);
            const double y = back.E.y(j);
            const double Eg = interp_bilinear(g.E, x, y);
            const double Fg = interp_bilinear(g.F, x, y);
            const double Gg = interp_bilinear(g.G, x, y);
            const std::size_t t = static_cast<std::size_t>(j) * n + i;
            const double scale =
                std::max({std::abs(Eg), std::abs(Gg), 1e-9});
            const double delta = std::max(
                {std::abs(back.E.v[t] - Eg), std::abs(back.F.v[t] - Fg),
                 std::abs(back.G.v[t] - Gg)});
            dev = std::max(dev, delta / scale);
        }
    rep.max_rel_deviation = dev;
    return rep;
}

} // namespace confplane
