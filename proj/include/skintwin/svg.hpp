#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "localization.hpp"
#include "stimulus.hpp"

namespace skintwin::svg {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string family_color(Family f) {
    switch (f) {
        case Family::RED: return "#d62728";
        case Family::BLUE: return "#1f77b4";
        case Family::GRADIENT: return "url(#gradient)";
        case Family::GREEN: return "#2ca02c";
    }
    return "#999";
}

namespace detail {

constexpr double kPx = 3.0;  // pixels per mm
constexpr double kMargin = 30.0;

inline double gx(double xmm) { return kMargin + xmm * kPx; }
inline double gy(double ymm) { return kMargin + (kSkinBounds.y1 - ymm) * kPx; }

inline std::string header(double w, double h) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
           "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\" font-family=\"sans-serif\" font-size=\"10\">\n";
}

inline std::string grid_labels() {
    std::string s;
    for (int c = 1; c <= kGridCols; ++c)
        s += "<text x=\"" + num(gx((c - 0.5) * kCellSizeMm)) + "\" y=\"" + num(gy(0) + 14) +
             "\" text-anchor=\"middle\">" + std::to_string(c) + "</text>\n";
    for (int r = 0; r < kGridRows; ++r)
        s += "<text x=\"" + num(kMargin - 8) + "\" y=\"" + num(gy((r + 0.5) * kCellSizeMm) + 4) +
             "\" text-anchor=\"middle\">" + std::string(1, static_cast<char>('A' + r)) + "</text>\n";
    return s;
}

inline std::string cell_rect(CellId cell, const std::string& fill, double opacity) {
    const Rect r = cell_rectangle(cell);
    return "<rect x=\"" + num(gx(r.x0)) + "\" y=\"" + num(gy(r.y1)) + "\" width=\"" + num(r.width() * kPx) +
           "\" height=\"" + num(r.height() * kPx) + "\" fill=\"" + fill + "\" fill-opacity=\"" + num(opacity) +
           "\" stroke=\"#ffffff\" stroke-width=\"0.5\"/>\n";
}

inline std::string channels(const Network& net, ElectrodePair pair) {
    std::string s;
    for (const auto& e : net.edges) {
        const Point2 a = net.nodes[e[0]], b = net.nodes[e[1]];
        s += "<line x1=\"" + num(gx(a.x)) + "\" y1=\"" + num(gy(a.y)) + "\" x2=\"" + num(gx(b.x)) + "\" y2=\"" +
             num(gy(b.y)) + "\" stroke=\"#333\" stroke-width=\"" + num(net.channelWidth * kPx * 0.5) +
             "\" stroke-opacity=\"0.55\" stroke-linecap=\"round\"/>\n";
    }
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
        const Point2 p = net.nodes[i];
        s += "<circle cx=\"" + num(gx(p.x)) + "\" cy=\"" + num(gy(p.y)) + "\" r=\"3\" fill=\"#222\"/>\n";
        if (!net.labels[i].empty())
            s += "<text x=\"" + num(gx(p.x) + 4) + "\" y=\"" + num(gy(p.y) - 4) + "\" font-size=\"8\">" +
                 net.labels[i] + "</text>\n";
    }
    for (Electrode e : {Electrode::BL, Electrode::C, Electrode::TR}) {
        const Point2 p = net.nodes[net.electrode_node(e)];
        const bool active = e == pair.a || e == pair.b;
        s += "<circle cx=\"" + num(gx(p.x)) + "\" cy=\"" + num(gy(p.y)) + "\" r=\"7\" fill=\"none\" stroke=\"" +
             (active ? std::string("#000") : std::string("#888")) + "\" stroke-width=\"2\"/>\n";
        s += "<text x=\"" + num(gx(p.x) + 9) + "\" y=\"" + num(gy(p.y) + 12) + "\" font-weight=\"bold\">" +
             to_string(e) + "</text>\n";
    }
    return s;
}

}  // namespace detail

/// Checkerboard colored by response family with the channel network on top.
inline std::string family_map(const Network& net, ElectrodePair pair, const std::vector<Family>& families) {
    using namespace detail;
    const double w = 2 * kMargin + kSkinBounds.x1 * kPx + 110, h = 2 * kMargin + kSkinBounds.y1 * kPx;
    std::string s = header(w, h);
    s += "<defs><linearGradient id=\"gradient\" x1=\"0\" y1=\"0\" x2=\"1\" y2=\"1\">"
         "<stop offset=\"0\" stop-color=\"#d62728\"/><stop offset=\"1\" stop-color=\"#1f77b4\"/>"
         "</linearGradient></defs>\n";
    s += "<text x=\"" + num(kMargin) + "\" y=\"18\" font-size=\"12\">Response families, pair " + pair.label() +
         "</text>\n";
    for (const auto& cell : CellId::all())
        s += cell_rect(cell, family_color(families[static_cast<std::size_t>(cell.index())]), 0.55);
    s += grid_labels();
    s += channels(net, pair);
    double ly = kMargin + 10;
    for (Family f : {Family::RED, Family::BLUE, Family::GRADIENT, Family::GREEN}) {
        const double lx = 2 * kMargin + kSkinBounds.x1 * kPx;
        s += "<rect x=\"" + num(lx) + "\" y=\"" + num(ly - 9) + "\" width=\"12\" height=\"12\" fill=\"" +
             family_color(f) + "\" fill-opacity=\"0.55\"/>\n";
        s += "<text x=\"" + num(lx + 16) + "\" y=\"" + num(ly + 1) + "\">" + to_string(f) + "</text>\n";
        ly += 18;
    }
    return s + "</svg>\n";
}

/// Localization scores painted over the grid; the best candidates are outlined.
inline std::string score_map(const Network& net, ElectrodePair pair, const LocalizationResult& res) {
    using namespace detail;
    const double w = 2 * kMargin + kSkinBounds.x1 * kPx, h = 2 * kMargin + kSkinBounds.y1 * kPx;
    std::string s = header(w, h);
    s += "<text x=\"" + num(kMargin) + "\" y=\"18\" font-size=\"12\">Candidate cells (" + to_string(res.family) +
         ")</text>\n";
    for (const auto& c : res.candidates) s += cell_rect(c.cell, "#ff7f0e", std::clamp(c.score, 0.0, 1.0));
    s += grid_labels();
    s += channels(net, pair);
    for (std::size_t i = 0; i < res.candidates.size() && i < 3; ++i) {
        const Rect r = cell_rectangle(res.candidates[i].cell);
        s += "<rect x=\"" + num(gx(r.x0)) + "\" y=\"" + num(gy(r.y1)) + "\" width=\"" + num(r.width() * kPx) +
             "\" height=\"" + num(r.height() * kPx) + "\" fill=\"none\" stroke=\"#000\" stroke-width=\"2\"/>\n";
    }
    return s + "</svg>\n";
}

struct Curve {
    std::string name;
    std::string color;
    std::vector<double> x;
    std::vector<double> y;
};

struct Marker {
    double x = 0.0;
    std::string text;
};

/// Stacked panels sharing one x axis; each curve gets its own panel and y range.
inline std::string panels(const std::string& title, const std::string& xLabel, const std::vector<Curve>& curves,
                          bool logX, const std::vector<Marker>& markers = {}) {
    const double w = 720, panelH = 200, left = 70, right = 20, top = 30, gap = 40;
    const double h = top + curves.size() * (panelH + gap) + 10;
    std::string s = detail::header(w, h);
    s += "<text x=\"" + num(left) + "\" y=\"18\" font-size=\"12\">" + title + "</text>\n";
    auto tx = [&](double v) { return logX ? std::log10(v) : v; };
    double x0 = 1e300, x1 = -1e300;
    for (const auto& c : curves)
        for (double v : c.x) {
            x0 = std::min(x0, tx(v));
            x1 = std::max(x1, tx(v));
        }
    if (!(x1 > x0)) x1 = x0 + 1.0;
    const double plotW = w - left - right;
    for (std::size_t k = 0; k < curves.size(); ++k) {
        const Curve& c = curves[k];
        const double py = top + k * (panelH + gap);
        double y0 = 1e300, y1 = -1e300;
        for (double v : c.y) {
            y0 = std::min(y0, v);
            y1 = std::max(y1, v);
        }
        if (c.y.empty()) y0 = 0, y1 = 1;
        if (!(y1 > y0)) {
            y0 -= 0.5;
            y1 += 0.5;
        }
        const double pad = 0.05 * (y1 - y0);
        y0 -= pad;
        y1 += pad;
        auto mx = [&](double v) { return left + (tx(v) - x0) / (x1 - x0) * plotW; };
        auto my = [&](double v) { return py + panelH - (v - y0) / (y1 - y0) * panelH; };
        s += "<rect x=\"" + num(left) + "\" y=\"" + num(py) + "\" width=\"" + num(plotW) + "\" height=\"" +
             num(panelH) + "\" fill=\"none\" stroke=\"#444\"/>\n";
        for (int t = 0; t <= 4; ++t) {
            const double v = y0 + (y1 - y0) * t / 4.0;
            s += "<text x=\"" + num(left - 4) + "\" y=\"" + num(my(v) + 3) + "\" text-anchor=\"end\">" + num(v) +
                 "</text>\n";
        }
        if (y0 < 0 && y1 > 0)
            s += "<line x1=\"" + num(left) + "\" y1=\"" + num(my(0)) + "\" x2=\"" + num(left + plotW) + "\" y2=\"" +
                 num(my(0)) + "\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n";
        s += "<text x=\"" + num(left + 6) + "\" y=\"" + num(py + 14) + "\" fill=\"" + c.color + "\">" + c.name +
             "</text>\n";
        std::string pts;
        for (std::size_t i = 0; i < c.x.size(); ++i) pts += num(mx(c.x[i])) + "," + num(my(c.y[i])) + " ";
        s += "<polyline fill=\"none\" stroke=\"" + c.color + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        for (const auto& m : markers) {
            s += "<line x1=\"" + num(mx(m.x)) + "\" y1=\"" + num(py) + "\" x2=\"" + num(mx(m.x)) + "\" y2=\"" +
                 num(py + panelH) + "\" stroke=\"#999\" stroke-dasharray=\"2 2\"/>\n";
            if (k == 0)
                s += "<text x=\"" + num(mx(m.x) + 2) + "\" y=\"" + num(py + 26) + "\" font-size=\"9\">" + m.text +
                     "</text>\n";
        }
        const double axisY = py + panelH + 14;
        for (int t = 0; t <= 5; ++t) {
            const double u = x0 + (x1 - x0) * t / 5.0;
            const double v = logX ? std::pow(10.0, u) : u;
            char buf[32];
            std::snprintf(buf, sizeof buf, logX ? "%.3g" : "%.1f", v);
            s += "<text x=\"" + num(left + plotW * t / 5.0) + "\" y=\"" + num(axisY) + "\" text-anchor=\"middle\">" +
                 buf + "</text>\n";
        }
    }
    s += "<text x=\"" + num(left + plotW / 2) + "\" y=\"" + num(h - 2) + "\" text-anchor=\"middle\">" + xLabel +
         "</text>\n";
    return s + "</svg>\n";
}

inline std::string sweep_plot(const std::vector<SweepPoint>& pts, const std::string& title) {
    Curve r{"resistance (ohm)", "#d62728", {}, {}}, x{"reactance (ohm)", "#1f77b4", {}, {}};
    for (const auto& p : pts) {
        r.x.push_back(p.freqHz);
        r.y.push_back(p.z.resistance);
        x.x.push_back(p.freqHz);
        x.y.push_back(p.z.reactance);
    }
    return panels(title, "frequency (Hz)", {r, x}, true);
}

inline std::string series_plot(const TimeSeries& ts, const std::string& title, const std::vector<Marker>& marks = {}) {
    Curve r{"resistance (ohm)", "#d62728", {}, {}}, x{"reactance (ohm)", "#1f77b4", {}, {}};
    for (std::size_t i = 0; i < ts.size(); ++i) {
        r.x.push_back(ts.time(i));
        r.y.push_back(ts.samples[i].resistance);
        x.x.push_back(ts.time(i));
        x.y.push_back(ts.samples[i].reactance);
    }
    return panels(title, "time (s)", {r, x}, false, marks);
}

}  // namespace skintwin::svg
