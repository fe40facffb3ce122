#pragma once

// Minimal deterministic SVG line charts. Every chart has a long-format CSV
// twin (series,x,y) carrying the same numbers.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "inrush/util.hpp"

namespace inrush::svg {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    bool step = false;  ///< draw as a staircase (trip/blocked flags)
};

struct Chart {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    std::vector<Series> series;
    std::vector<double> hlines;  ///< dashed reference levels
};

namespace detail {

inline const char* color(std::size_t i) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    return palette[i % (sizeof palette / sizeof *palette)];
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string num(double v) { return fmt_fixed(v, 2); }

/// Round tick step (1, 2 or 5 times a power of ten) giving about `target` intervals.
inline double nice_step(double span, int target = 5) {
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double f = raw / mag;
    return (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
}

inline std::vector<double> ticks(double lo, double hi) {
    const double step = nice_step(hi - lo);
    std::vector<double> out;
    for (double v = std::ceil(lo / step - 1e-9) * step; v <= hi + 1e-9 * step; v += step) {
        out.push_back(std::abs(v) < 1e-9 * step ? 0.0 : v);
    }
    return out;
}

inline std::string tick_label(double v, double step) {
    const int digits = std::max(0, static_cast<int>(std::ceil(-std::log10(step) - 1e-9)));
    return fmt_fixed(v, digits);
}

} // namespace detail

inline std::string render(const Chart& c, const std::string& provenance, int width = 760, int height = 380) {
    const double ml = 64, mr = 150, mt = 34, mb = 48;
    const double pw = width - ml - mr, ph = height - mt - mb;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : c.series) {
        for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
            x0 = std::min(x0, s.x[k]);
            x1 = std::max(x1, s.x[k]);
            y0 = std::min(y0, s.y[k]);
            y1 = std::max(y1, s.y[k]);
        }
    }
    for (double h : c.hlines) {
        y0 = std::min(y0, h);
        y1 = std::max(y1, h);
    }
    if (!(x0 <= x1)) x0 = 0, x1 = 1;
    if (!(y0 <= y1)) y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-12) x1 = x0 + 1;
    if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return mt + (y1 - y) / (y1 - y0) * ph; };

    std::string o;
    o += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o += "<metadata>" + detail::escape(provenance) + "</metadata>\n";
    o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o += "<text x=\"" + detail::num(ml) + "\" y=\"20\" font-size=\"13\">" + detail::escape(c.title) + "</text>\n";
    o += "<rect x=\"" + detail::num(ml) + "\" y=\"" + detail::num(mt) + "\" width=\"" + detail::num(pw) +
         "\" height=\"" + detail::num(ph) + "\" fill=\"none\" stroke=\"#444\"/>\n";
    const double xstep = detail::nice_step(x1 - x0), ystep = detail::nice_step(y1 - y0);
    for (double xv : detail::ticks(x0, x1)) {
        o += "<text x=\"" + detail::num(px(xv)) + "\" y=\"" + detail::num(mt + ph + 16) +
             "\" text-anchor=\"middle\">" + detail::tick_label(xv, xstep) + "</text>\n";
    }
    for (double yv : detail::ticks(y0, y1)) {
        o += "<text x=\"" + detail::num(ml - 6) + "\" y=\"" + detail::num(py(yv) + 4) + "\" text-anchor=\"end\">" +
             detail::tick_label(yv, ystep) + "</text>\n";
        o += "<line x1=\"" + detail::num(ml) + "\" x2=\"" + detail::num(ml + pw) + "\" y1=\"" +
             detail::num(py(yv)) + "\" y2=\"" + detail::num(py(yv)) + "\" stroke=\"#eee\"/>\n";
    }
    o += "<text x=\"" + detail::num(ml + pw / 2) + "\" y=\"" + detail::num(height - 10.0) +
         "\" text-anchor=\"middle\">" + detail::escape(c.xlabel) + "</text>\n";
    o += "<text transform=\"translate(16," + detail::num(mt + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         detail::escape(c.ylabel) + "</text>\n";
    for (double h : c.hlines) {
        o += "<line x1=\"" + detail::num(ml) + "\" x2=\"" + detail::num(ml + pw) + "\" y1=\"" + detail::num(py(h)) +
             "\" y2=\"" + detail::num(py(h)) + "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
    }
    for (std::size_t i = 0; i < c.series.size(); ++i) {
        const auto& s = c.series[i];
        std::string pts;
        bool have_prev = false;
        double prev_y = 0.0;
        for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
            if (s.step && have_prev) pts += detail::num(px(s.x[k])) + "," + detail::num(py(prev_y)) + " ";
            pts += detail::num(px(s.x[k])) + "," + detail::num(py(s.y[k])) + " ";
            prev_y = s.y[k];
            have_prev = true;
        }
        if (!pts.empty()) pts.pop_back();
        o += "<polyline fill=\"none\" stroke-width=\"1.3\" stroke=\"" + std::string(detail::color(i)) +
             "\" points=\"" + pts + "\"/>\n";
        const double ly = mt + 12 + 16.0 * static_cast<double>(i);
        o += "<line x1=\"" + detail::num(ml + pw + 10) + "\" x2=\"" + detail::num(ml + pw + 30) + "\" y1=\"" +
             detail::num(ly - 4) + "\" y2=\"" + detail::num(ly - 4) + "\" stroke=\"" + detail::color(i) +
             "\" stroke-width=\"2\"/>\n";
        o += "<text x=\"" + detail::num(ml + pw + 34) + "\" y=\"" + detail::num(ly) + "\">" +
             detail::escape(s.name) + "</text>\n";
    }
    o += "</svg>\n";
    return o;
}

/// Long-format twin of a chart: one row per plotted point.
inline std::string to_csv(const Chart& c, const std::string& provenance) {
    std::string o = "# " + provenance + "\nseries,x,y\n";
    for (const auto& s : c.series) {
        for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
            o += s.name + "," + fmt_double(s.x[k]) + "," + fmt_double(s.y[k]) + "\n";
        }
    }
    return o;
}

} // namespace inrush::svg
