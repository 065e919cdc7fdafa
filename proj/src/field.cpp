#include "confplane/field.hpp"
#include "confplane/parallel.hpp"

#include <algorithm>
#include <cfloat>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace confplane {

// ------------------------------------------------------------ parallel_for --

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    unsigned hw = std::thread::hardware_concurrency();
    if (count < 2 || hw <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    unsigned workers = static_cast<unsigned>(
        std::min<std::size_t>(hw, count));
    struct Failure {
        std::size_t index;
        std::exception_ptr error;
    };
    std::vector<Failure> failures(workers, {SIZE_MAX, nullptr});
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) {
                try {
                    fn(i);
                } catch (...) {
                    failures[w] = {i, std::current_exception()};
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    const Failure* first = nullptr;
    for (const auto& f : failures)
        if (f.error && (!first || f.index < first->index)) first = &f;
    if (first) std::rethrow_exception(first->error);
}

// ------------------------------------------------------------------- grids --

ScalarGrid make_grid(double L, int n, double fill) {
    if (n < 3) throw std::invalid_argument("grid resolution must be >= 3");
    if (!(L > 0.0)) throw std::invalid_argument("grid half-width must be > 0");
    ScalarGrid g;
    g.n = n;
    g.L = L;
    g.v.assign(static_cast<std::size_t>(n) * n, fill);
    return g;
}

ScalarGrid sample(const ExprAst& expr, double L, int n) {
    ScalarGrid g = make_grid(L, n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
        double yj = g.y(static_cast<int>(j));
        for (int i = 0; i < n; ++i) {
            double xi = g.x(i);
            double val;
            try {
                val = eval(expr, xi, yj);
            } catch (const EvalError& e) {
                throw SampleError(std::string("domain error (") + e.what() + ")",
                                  i, static_cast<int>(j), xi, yj);
            }
            if (!std::isfinite(val))
                throw SampleError("non-finite value", i, static_cast<int>(j),
                                  xi, yj);
            g.at(i, static_cast<int>(j)) = val;
        }
    });
    return g;
}

ScalarGrid laplacian(const ScalarGrid& u) {
    if (u.n < 3) throw std::invalid_argument("grid resolution must be >= 3");
    ScalarGrid out = make_grid(u.L, u.n);
    out.border = u.border + 1;
    const double inv_h2 = 1.0 / (u.h() * u.h());
    const int lo = out.border, hi = u.n - 1 - out.border;
    parallel_for(static_cast<std::size_t>(u.n), [&](std::size_t jz) {
        int j = static_cast<int>(jz);
        if (j < lo || j > hi) return;
        for (int i = lo; i <= hi; ++i) {
            out.at(i, j) = (u.at(i + 1, j) + u.at(i - 1, j) + u.at(i, j + 1) +
                            u.at(i, j - 1) - 4.0 * u.at(i, j)) * inv_h2;
        }
    });
    return out;
}

CurvatureResult curvature(const ScalarGrid& u) {
    ScalarGrid lap = laplacian(u);
    CurvatureResult res;
    res.K = make_grid(u.L, u.n);
    res.K.border = lap.border;
    bool unbounded = false;
    const int lo = lap.border, hi = u.n - 1 - lap.border;
    for (int j = lo; j <= hi; ++j) {
        for (int i = lo; i <= hi; ++i) {
            double dl = lap.at(i, j);
            double k = std::exp(2.0 * u.at(i, j)) * dl;
            if (!std::isfinite(k)) {
                k = dl > 0 ? DBL_MAX : (dl < 0 ? -DBL_MAX : 0.0);
                unbounded = true;
            }
            res.K.at(i, j) = k;
        }
    }
    res.unbounded = unbounded;
    return res;
}

double default_subharmonic_tol(const ScalarGrid& u) {
    double scale = 1.0;
    for (int j = u.border; j < u.n - u.border; ++j)
        for (int i = u.border; i < u.n - u.border; ++i)
            scale = std::max(scale, std::abs(u.at(i, j)));
    return 1e-8 * scale / (u.h() * u.h());
}

SubharmonicVerdict is_subharmonic(const ScalarGrid& u, double tol) {
    ScalarGrid lap = laplacian(u);
    SubharmonicVerdict verdict;
    verdict.tol = tol;
    verdict.min_lap = std::numeric_limits<double>::infinity();
    const int lo = lap.border, hi = u.n - 1 - lap.border;
    if (lo > hi)
        throw std::invalid_argument("grid too small: no valid interior nodes");
    for (int j = lo; j <= hi; ++j) {
        for (int i = lo; i <= hi; ++i) {
            if (lap.at(i, j) < verdict.min_lap) {
                verdict.min_lap = lap.at(i, j);
                verdict.argmin_i = i;
                verdict.argmin_j = j;
            }
        }
    }
    verdict.pass = verdict.min_lap >= -tol;
    return verdict;
}

// ------------------------------------------------------------------ metric --

void validate_metric(const MetricGrid& g) {
    if (g.E.n != g.F.n || g.E.n != g.G.n || g.E.L != g.F.L || g.E.L != g.G.L)
        throw std::invalid_argument("metric components must share one lattice");
    for (int j = 0; j < g.E.n; ++j) {
        for (int i = 0; i < g.E.n; ++i) {
            double E = g.E.at(i, j), F = g.F.at(i, j), G = g.G.at(i, j);
            if (!(E > 0.0) || !(G > 0.0) || !(E * G - F * F > 0.0))
                throw std::invalid_argument(
                    "metric not positive definite at node (" +
                    std::to_string(i) + "," + std::to_string(j) + "), x=" +
                    std::to_string(g.E.x(i)) + ", y=" + std::to_string(g.E.y(j)));
        }
    }
}

MetricGrid make_metric(ScalarGrid E, ScalarGrid F, ScalarGrid G) {
    MetricGrid g{std::move(E), std::move(F), std::move(G)};
    validate_metric(g);
    return g;
}

// ----------------------------------------------------------- interpolation --

double interp_bilinear(const ScalarGrid& g, double x, double y) {
    const double h = g.h();
    if (x < -g.L || x > g.L || y < -g.L || y > g.L)
        throw std::out_of_range("point (" + std::to_string(x) + "," +
                                std::to_string(y) + ") outside grid window");
    double fx = (x + g.L) / h;
    double fy = (y + g.L) / h;
    int i = std::min(static_cast<int>(fx), g.n - 2);
    int j = std::min(static_cast<int>(fy), g.n - 2);
    double tx = fx - i, ty = fy - j;
    return (1 - tx) * (1 - ty) * g.at(i, j) + tx * (1 - ty) * g.at(i + 1, j) +
           (1 - tx) * ty * g.at(i, j + 1) + tx * ty * g.at(i + 1, j + 1);
}

// --------------------------------------------------------------- CPG1 I/O --

namespace {

std::string shortest(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_values(std::ostream& os, const ScalarGrid& g, char sep) {
    for (int j = 0; j < g.n; ++j) {
        for (int i = 0; i < g.n; ++i) {
            if (i) os << sep;
            os << shortest(g.at(i, j));
        }
        os << '\n';
    }
}

} // namespace

void write_cpg(const ScalarGrid& g, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "CPG1 " << g.n << ' ' << shortest(g.L) << '\n';
    write_values(os, g, ' ');
    if (!os) throw std::runtime_error("write failed: " + path);
}

ScalarGrid read_cpg(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::string magic;
    int n = 0;
    double L = 0.0;
    if (!(is >> magic >> n >> L) || magic != "CPG1")
        throw std::runtime_error("not a CPG1 file: " + path);
    if (n < 3 || !(L > 0.0))
        throw std::runtime_error("malformed CPG1 header in " + path);
    ScalarGrid g = make_grid(L, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            if (!(is >> g.at(i, j)))
                throw std::runtime_error("truncated CPG1 data in " + path);
    return g;
}

void write_csv(const ScalarGrid& g, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_values(os, g, ',');
    if (!os) throw std::runtime_error("write failed: " + path);
}

ScalarGrid read_csv(const std::string& path, double L) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    const std::size_t n = rows.size();
    if (n < 3) throw std::runtime_error("CSV grid must have >= 3 rows: " + path);
    for (const auto& row : rows)
        if (row.size() != n)
            throw std::runtime_error("CSV grid must be square: " + path);
    ScalarGrid g = make_grid(L, static_cast<int>(n));
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i)
            g.at(i, j) = rows[j][i];
    return g;
}

} // namespace confplane
