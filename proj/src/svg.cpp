#include "confplane/svg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace confplane {

namespace {

std::string shortest(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct Rgb {
    int r, g, b;
};

Rgb lerp(const Rgb& a, const Rgb& b, double t) {
    auto mix = [t](int u, int v) {
        return static_cast<int>(std::lround(u + t * (v - u)));
    };
    return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

// Two-segment diverging map: blue at 0, near-white at 1/2, red at 1.
Rgb colormap(double t) {
    const Rgb blue{59, 76, 192}, white{221, 221, 221}, red{180, 4, 38};
    t = std::clamp(t, 0.0, 1.0);
    return t < 0.5 ? lerp(blue, white, 2.0 * t) : lerp(white, red, 2.0 * t - 1.0);
}

void hex_color(std::string& out, const Rgb& c) {
    static const char* hex = "0123456789abcdef";
    out += '#';
    for (int v : {c.r, c.g, c.b}) {
        out += hex[(v >> 4) & 0xf];
        out += hex[v & 0xf];
    }
}

std::string escape_text(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

} // namespace

void write_svg_heatmap(const ScalarGrid& g, const std::string& title,
                       const std::string& path) {
    // Value range over the valid nodes; white sits at 0 when the range
    // straddles it so sign structure reads off the picture.
    double lo = 0.0, hi = 0.0;
    bool seen = false;
    for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i) {
            if (!g.valid(i, j) || !std::isfinite(g.at(i, j))) continue;
            double v = g.at(i, j);
            if (!seen) {
                lo = hi = v;
                seen = true;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    if (!seen) throw std::invalid_argument("heatmap grid has no valid nodes");
    double span = hi - lo;
    auto normalize = [&](double v) {
        if (lo < 0.0 && hi > 0.0)
            return v < 0.0 ? 0.5 * (1.0 - v / lo) : 0.5 * (1.0 + v / hi);
        return span > 0.0 ? (v - lo) / span : 0.5;
    };

    const int stride = std::max(1, (g.n + 127) / 128);
    const int cells = (g.n + stride - 1) / stride;
    const int cell_px = std::max(2, 512 / cells);
    const int plot = cells * cell_px;
    const int margin = 20, caption = 40;

    std::string body;
    body.reserve(static_cast<std::size_t>(cells) * cells * 64);
    for (int cj = 0; cj < cells; ++cj) {
        for (int ci = 0; ci < cells; ++ci) {
            int i = ci * stride, j = cj * stride;
            body += "<rect x=\"" + std::to_string(margin + ci * cell_px) +
                    "\" y=\"" +
                    std::to_string(margin + (cells - 1 - cj) * cell_px) +
                    "\" width=\"" + std::to_string(cell_px) + "\" height=\"" +
                    std::to_string(cell_px) + "\" fill=\"";
            if (!g.valid(i, j) || !std::isfinite(g.at(i, j)))
                body += "#808080";
            else
                hex_color(body, colormap(normalize(g.at(i, j))));
            body += "\"/>\n";
        }
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    const int width = plot + 2 * margin;
    const int height = plot + 2 * margin + caption;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << margin << "\" y=\"" << margin - 6
        << "\" font-family=\"monospace\" font-size=\"12\">"
        << escape_text(title) << "</text>\n"
        << body << "<text x=\"" << margin << "\" y=\""
        << plot + margin + 16 << "\" font-family=\"monospace\" font-size=\"11\">"
        << "min=" << shortest(lo) << " max=" << shortest(hi) << " n="
        << g.n << " window=" << shortest(g.L) << "</text>\n</svg>\n";
    if (!out) throw std::runtime_error("cannot write file: " + path);
}

} // namespace confplane
