#pragma once

// Brute-force reference computations. Nothing here calls into the library's own
// predicates or solvers, so agreement means two independent derivations agree.

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include <skintwin/circuit.hpp>
#include <skintwin/geometry.hpp>

namespace oracle {

using skintwin::Point2;

struct Circle {
    Point2 center;
    double radius = 0.0;
};

inline Circle circumcircle(Point2 a, Point2 b, Point2 c) {
    const double d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    const double a2 = a.x * a.x + a.y * a.y, b2 = b.x * b.x + b.y * b.y, c2 = c.x * c.x + c.y * c.y;
    Point2 o{(a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d,
             (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d};
    return {o, std::hypot(a.x - o.x, a.y - o.y)};
}

/// Points strictly inside some triangle's circumcircle, counted per (triangle, point).
inline int circumcircle_violations(const skintwin::Triangulation& tri, double relTol = 1e-9) {
    int bad = 0;
    for (const auto& t : tri.triangles) {
        const Circle c = circumcircle(tri.nodes[t[0]], tri.nodes[t[1]], tri.nodes[t[2]]);
        for (int i = 0; i < static_cast<int>(tri.nodes.size()); ++i) {
            if (i == t[0] || i == t[1] || i == t[2]) continue;
            const double d = std::hypot(tri.nodes[i].x - c.center.x, tri.nodes[i].y - c.center.y);
            if (d < c.radius * (1.0 - relTol)) ++bad;
        }
    }
    return bad;
}

inline double cross(Point2 o, Point2 a, Point2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

/// Edge pairs that cross anywhere other than a shared endpoint.
inline int crossing_edge_pairs(const skintwin::Triangulation& tri) {
    int bad = 0;
    const auto& p = tri.nodes;
    for (std::size_t i = 0; i < tri.edges.size(); ++i)
        for (std::size_t j = i + 1; j < tri.edges.size(); ++j) {
            const auto [a, b] = tri.edges[i];
            const auto [c, d] = tri.edges[j];
            if (a == c || a == d || b == c || b == d) continue;
            const double d1 = cross(p[a], p[b], p[c]), d2 = cross(p[a], p[b], p[d]);
            const double d3 = cross(p[c], p[d], p[a]), d4 = cross(p[c], p[d], p[b]);
            if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) ++bad;
        }
    return bad;
}

/// Convex hull vertices (monotone chain, collinear points dropped).
inline std::vector<Point2> hull(std::vector<Point2> pts) {
    std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    std::vector<Point2> h(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, lo = k + 1; i-- > 0;) {
        while (k >= lo && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

inline double polygon_area(const std::vector<Point2>& poly) {
    double s = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point2 a = poly[i], b = poly[(i + 1) % poly.size()];
        s += a.x * b.y - b.x * a.y;
    }
    return 0.5 * std::abs(s);
}

/// Triangles tile the hull: areas add up and every triangle is counter-clockwise and non-degenerate.
inline bool tiles_hull(const skintwin::Triangulation& tri) {
    double sum = 0.0;
    for (const auto& t : tri.triangles) {
        const double a2 = cross(tri.nodes[t[0]], tri.nodes[t[1]], tri.nodes[t[2]]);
        if (!(a2 > 0.0)) return false;
        sum += 0.5 * a2;
    }
    const double area = polygon_area(hull(tri.nodes));
    return std::abs(sum - area) <= 1e-9 * area;
}

/// Resistor between two nodes.
struct Resistor {
    int a = 0;
    int b = 0;
    double ohms = 1.0;
};

/// Effective resistance from the Moore-Penrose pseudoinverse of the graph Laplacian.
inline double effective_resistance(int nodes, const std::vector<Resistor>& rs, int a, int b) {
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(nodes, nodes);
    for (const auto& r : rs) {
        const double g = 1.0 / r.ohms;
        lap(r.a, r.a) += g;
        lap(r.b, r.b) += g;
        lap(r.a, r.b) -= g;
        lap(r.b, r.a) -= g;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(lap, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double cut = 1e-12 * s(0);
    Eigen::MatrixXd pinv = Eigen::MatrixXd::Zero(nodes, nodes);
    for (int i = 0; i < nodes; ++i)
        if (s(i) > cut) pinv += svd.matrixV().col(i) * (1.0 / s(i)) * svd.matrixU().col(i).transpose();
    Eigen::VectorXd e = Eigen::VectorXd::Zero(nodes);
    e(a) = 1.0;
    e(b) = -1.0;
    return e.dot(pinv * e);
}

/// Connected random resistor network: a random spanning tree plus extra chords.
inline std::vector<Resistor> random_resistor_network(std::mt19937_64& rng, int nodes) {
    std::uniform_real_distribution<double> ohms(1.0, 1000.0);
    std::uniform_int_distribution<int> extraCount(0, nodes);
    std::vector<Resistor> rs;
    std::set<std::pair<int, int>> seen;
    for (int v = 1; v < nodes; ++v) {
        const int u = std::uniform_int_distribution<int>(0, v - 1)(rng);
        rs.push_back({u, v, ohms(rng)});
        seen.insert({u, v});
    }
    const int extra = extraCount(rng);
    for (int k = 0; k < extra; ++k) {
        int u = std::uniform_int_distribution<int>(0, nodes - 1)(rng);
        int v = std::uniform_int_distribution<int>(0, nodes - 1)(rng);
        if (u == v) continue;
        if (u > v) std::swap(u, v);
        if (!seen.insert({u, v}).second) continue;
        rs.push_back({u, v, ohms(rng)});
    }
    return rs;
}

inline skintwin::AdmittanceSystem resistive_system(int nodes, const std::vector<Resistor>& rs) {
    std::vector<skintwin::Branch> branches;
    int k = 0;
    for (const auto& r : rs) branches.push_back({r.a, r.b, {r.ohms, 0.0, 0.0}, k++});
    return skintwin::AdmittanceSystem(nodes, branches);
}

/// Length of the part of segment ab lying within `radius` of the rectangle, by dense sampling.
inline double sampled_length_near_rect(Point2 a, Point2 b, const skintwin::Rect& r, double radius, int samples = 200000) {
    int inside = 0;
    for (int i = 0; i < samples; ++i) {
        const double t = (i + 0.5) / samples;
        const Point2 p{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
        const double dx = std::max({r.x0 - p.x, 0.0, p.x - r.x1});
        const double dy = std::max({r.y0 - p.y, 0.0, p.y - r.y1});
        if (std::hypot(dx, dy) <= radius) ++inside;
    }
    return std::hypot(b.x - a.x, b.y - a.y) * inside / samples;
}

/// Number of sign changes of a sequence, zeros skipped.
inline int sign_changes(const std::vector<double>& v) {
    int n = 0, prev = 0;
    for (double x : v) {
        const int s = (x > 0) - (x < 0);
        if (s == 0) continue;
        if (prev != 0 && s != prev) ++n;
        prev = s;
    }
    return n;
}

}  // namespace oracle
