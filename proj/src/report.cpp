#include "confplane/report.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace confplane {

std::string fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int k = 15; k >= 0; --k) {
        out[static_cast<std::size_t>(k)] = hex[h & 0xf];
        h >>= 4;
    }
    return out;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return "fnv1a64:" + fnv1a64(buf.str());
}

Json new_report(const std::string& command) {
    Json rep;
    rep["tool"]["name"] = tool_name;
    rep["tool"]["version"] = tool_version;
    rep["schema"]["name"] = "confplane-report";
    rep["schema"]["version"] = report_schema_version;
    rep["command"] = command;
    return rep;
}

void finalize_report(Json& rep, double total_ms) {
    rep["timings"]["total_ms"] = total_ms;
}

Json to_json(const AlphaEstimate& a) {
    Json j;
    j["value"] = a.value;
    j["lower"] = a.lower;
    j["upper"] = a.upper;
    j["infinite"] = a.infinite;
    j["heuristic"] = a.heuristic;
    j["window_limited"] = a.window_limited;
    j["windows"] = a.window;
    j["band_margin"] = a.band_margin;
    j["r_max"] = a.r_max;
    j["monotonicity"] = a.monotonicity;
    return j;
}

Json to_json(const SubharmonicVerdict& v, double window, int n) {
    Json j;
    j["pass"] = v.pass;
    j["min_laplacian"] = v.min_lap;
    j["argmin_i"] = v.argmin_i;
    j["argmin_j"] = v.argmin_j;
    j["tol"] = v.tol;
    j["window"] = window;
    j["n"] = n;
    return j;
}

Json to_json(const EscapeReport& r) {
    Json j;
    j["verdict"] = to_string(r.verdict);
    j["one_sided"] = r.one_sided;
    j["rays"] = static_cast<int>(r.rays.size());
    j["r_max_reached"] = r.r_max_reached;
    if (r.verdict == EscapeVerdict::IncompleteWitness) {
        j["witness"]["angle"] = r.witness_angle;
        j["witness"]["partial_length"] = r.witness_partial_length;
        j["witness"]["length_bound"] = r.witness_length_bound;
    }
    j["options"]["angles"] = r.options.angles;
    j["options"]["r_max"] = r.options.R_max;
    j["options"]["checkpoint_ratio"] = r.options.checkpoint_ratio;
    j["options"]["finite_threshold"] = r.options.finite_threshold;
    j["options"]["diverge_threshold"] = r.options.diverge_threshold;
    j["options"]["quad_tol"] = r.options.quad_tol;
    return j;
}

Json to_json(const CrossValidation& cv) {
    Json j;
    j["alpha"] = to_json(cv.alpha);
    j["completeness"]["classification"] = to_string(cv.classification);
    j["completeness"]["threshold"] = 1.0;
    j["oracle"] = to_json(cv.escape);
    j["agreement"]["label"] = to_string(cv.agreement);
    j["agreement"]["heuristic"] = cv.heuristic;
    return j;
}

Json grid_stats(const ScalarGrid& g) {
    double lo = 0.0, hi = 0.0;
    bool seen = false;
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i) {
            if (!g.valid(i, j)) continue;
            double v = g.at(i, j);
            if (!seen) {
                lo = hi = v;
                seen = true;
            } else {
                if (v < lo) lo = v;
                if (v > hi) hi = v;
            }
        }
    Json j;
    j["n"] = g.n;
    j["window"] = g.L;
    j["border"] = g.border;
    j["min"] = lo;
    j["max"] = hi;
    return j;
}

} // namespace confplane
