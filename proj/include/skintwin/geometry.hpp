#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"

namespace skintwin {

struct Point2 {
    double x = 0.0;  // mm
    double y = 0.0;  // mm

    bool operator==(const Point2&) const = default;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Axis-aligned rectangle in mm, x in [x0, x1], y in [y0, y1].
struct Rect {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    Point2 center() const { return {(x0 + x1) / 2, (y0 + y1) / 2}; }
    bool contains(Point2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
    bool operator==(const Rect&) const = default;
};

inline constexpr int kGridRows = 16;
inline constexpr int kGridCols = 20;
inline constexpr double kCellSizeMm = 10.0;
inline constexpr Rect kSkinBounds{0.0, 0.0, kGridCols * kCellSizeMm, kGridRows * kCellSizeMm};

/// Checkerboard square: row letter A..P along y, column number 1..20 along x.
class CellId {
public:
    CellId(int row, int col) : row_(row), col_(col) {
        if (row < 0 || row >= kGridRows || col < 1 || col > kGridCols)
            throw DomainError("cell out of range: row " + std::to_string(row) + ", col " + std::to_string(col));
    }

    static CellId parse(std::string_view label) {
        if (label.size() < 2 || label.size() > 3)
            throw DomainError("invalid cell label '" + std::string(label) + "'");
        char letter = label[0];
        if (letter >= 'a' && letter <= 'z') letter = static_cast<char>(letter - 'a' + 'A');
        if (letter < 'A' || letter >= 'A' + kGridRows)
            throw DomainError("invalid cell row in '" + std::string(label) + "'");
        int col = 0;
        for (char ch : label.substr(1)) {
            if (ch < '0' || ch > '9') throw DomainError("invalid cell column in '" + std::string(label) + "'");
            col = col * 10 + (ch - '0');
        }
        if (label[1] == '0' || col < 1 || col > kGridCols)
            throw DomainError("invalid cell column in '" + std::string(label) + "'");
        return CellId(letter - 'A', col);
    }

    /// Row-major index 0..319, A1 first.
    static CellId from_index(int index) {
        if (index < 0 || index >= kGridRows * kGridCols) throw DomainError("cell index out of range");
        return CellId(index / kGridCols, index % kGridCols + 1);
    }

    static std::vector<CellId> all() {
        std::vector<CellId> cells;
        cells.reserve(kGridRows * kGridCols);
        for (int i = 0; i < kGridRows * kGridCols; ++i) cells.push_back(from_index(i));
        return cells;
    }

    int row() const { return row_; }
    int col() const { return col_; }
    char row_letter() const { return static_cast<char>('A' + row_); }
    int index() const { return row_ * kGridCols + (col_ - 1); }
    std::string label() const { return std::string(1, row_letter()) + std::to_string(col_); }

    auto operator<=>(const CellId&) const = default;

private:
    int row_;
    int col_;
};

inline Rect cell_rectangle(CellId cell) {
    double x0 = (cell.col() - 1) * kCellSizeMm;
    double y0 = cell.row() * kCellSizeMm;
    return {x0, y0, x0 + kCellSizeMm, y0 + kCellSizeMm};
}

inline std::optional<CellId> cell_containing(Point2 p) {
    if (!(p.x >= 0.0 && p.y >= 0.0)) return std::nullopt;
    int col = static_cast<int>(std::floor(p.x / kCellSizeMm)) + 1;
    int row = static_cast<int>(std::floor(p.y / kCellSizeMm));
    if (row >= kGridRows || col > kGridCols) return std::nullopt;
    return CellId(row, col);
}

// ---------------------------------------------------------------------------
// Segment / rectangle helpers

/// Parameter range [t0, t1] of segment a->b inside the closed rectangle, if any.
inline std::optional<std::pair<double, double>> clip_segment(Point2 a, Point2 b, const Rect& r) {
    double t0 = 0.0, t1 = 1.0;
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {a.x - r.x0, r.x1 - a.x, a.y - r.y0, r.y1 - a.y};
    for (int i = 0; i < 4; ++i) {
        if (p[i] == 0.0) {
            if (q[i] < 0.0) return std::nullopt;
            continue;
        }
        double t = q[i] / p[i];
        if (p[i] < 0.0)
            t0 = std::max(t0, t);
        else
            t1 = std::min(t1, t);
    }
    if (t0 > t1) return std::nullopt;
    return std::make_pair(t0, t1);
}

inline double point_segment_distance(Point2 p, Point2 a, Point2 b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return distance(p, {a.x + t * dx, a.y + t * dy});
}

inline double point_rect_distance(Point2 p, const Rect& r) {
    double dx = std::max({r.x0 - p.x, 0.0, p.x - r.x1});
    double dy = std::max({r.y0 - p.y, 0.0, p.y - r.y1});
    return std::hypot(dx, dy);
}

inline double segment_rect_distance(Point2 a, Point2 b, const Rect& r) {
    if (clip_segment(a, b, r)) return 0.0;
    double best = std::min(point_rect_distance(a, r), point_rect_distance(b, r));
    for (Point2 c : {Point2{r.x0, r.y0}, Point2{r.x1, r.y0}, Point2{r.x1, r.y1}, Point2{r.x0, r.y1}})
        best = std::min(best, point_segment_distance(c, a, b));
    return best;
}

/// Parameter range of segment a->b lying within `radius` of the rectangle.
/// The region is convex (a rounded rectangle), so the union of the pieces is one interval.
inline std::optional<std::pair<double, double>> clip_segment_rounded(Point2 a, Point2 b, const Rect& r,
                                                                     double radius) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    auto take = [&](std::optional<std::pair<double, double>> iv) {
        if (!iv) return;
        lo = std::min(lo, iv->first);
        hi = std::max(hi, iv->second);
    };
    take(clip_segment(a, b, {r.x0 - radius, r.y0, r.x1 + radius, r.y1}));
    take(clip_segment(a, b, {r.x0, r.y0 - radius, r.x1, r.y1 + radius}));
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double qa = dx * dx + dy * dy;
    for (Point2 c : {Point2{r.x0, r.y0}, Point2{r.x1, r.y0}, Point2{r.x1, r.y1}, Point2{r.x0, r.y1}}) {
        const double fx = a.x - c.x, fy = a.y - c.y;
        const double qc = fx * fx + fy * fy - radius * radius;
        if (qa == 0.0) {
            if (qc <= 0.0) take(std::make_pair(0.0, 1.0));
            continue;
        }
        const double qb = 2.0 * (fx * dx + fy * dy);
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc < 0.0) continue;
        const double s = std::sqrt(disc);
        double t0 = std::max(0.0, (-qb - s) / (2.0 * qa));
        double t1 = std::min(1.0, (-qb + s) / (2.0 * qa));
        if (t0 <= t1) take(std::make_pair(t0, t1));
    }
    if (lo > hi) return std::nullopt;
    return std::make_pair(lo, hi);
}

inline bool segments_cross(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
    auto orient = [](Point2 a, Point2 b, Point2 c) {
        return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    };
    const double d1 = orient(q1, q2, p1), d2 = orient(q1, q2, p2);
    const double d3 = orient(p1, p2, q1), d4 = orient(p1, p2, q2);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

// ---------------------------------------------------------------------------
// Point generation

inline std::vector<Point2> generate_random_points(std::uint64_t seed, int count, const Rect& bbox,
                                                  double minSeparation) {
    if (count < 0) throw DomainError("count must be non-negative");
    if (!(minSeparation >= 0.0)) throw DomainError("minSeparation must be non-negative");
    if (!(bbox.x1 > bbox.x0 && bbox.y1 > bbox.y0)) throw DomainError("bounding box is degenerate");

    constexpr int kAttemptsPerPoint = 10000;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(bbox.x0, bbox.x1);
    std::uniform_real_distribution<double> uy(bbox.y0, bbox.y1);
    std::vector<Point2> points;
    points.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < kAttemptsPerPoint && !placed; ++attempt) {
            Point2 p{ux(rng), uy(rng)};
            bool ok = std::all_of(points.begin(), points.end(),
                                  [&](Point2 q) { return distance(p, q) >= minSeparation; });
            if (ok) {
                points.push_back(p);
                placed = true;
            }
        }
        if (!placed)
            throw InfeasiblePackingError("could not place point " + std::to_string(i + 1) + " of " +
                                         std::to_string(count) + " with separation " +
                                         std::to_string(minSeparation) + " mm");
    }
    return points;
}

// ---------------------------------------------------------------------------
// Delaunay triangulation

struct Triangulation {
    std::vector<Point2> nodes;
    std::vector<std::array<int, 2>> edges;      // sorted, a < b
    std::vector<std::array<int, 3>> triangles;  // counter-clockwise, smallest index first, sorted

    bool operator==(const Triangulation&) const = default;
};

namespace predicates {

inline double orient(Point2 a, Point2 b, Point2 c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

/// Positive when d is inside the circumcircle of the counter-clockwise triangle abc.
inline double incircle(Point2 a, Point2 b, Point2 c, Point2 d) {
    const double adx = a.x - d.x, ady = a.y - d.y;
    const double bdx = b.x - d.x, bdy = b.y - d.y;
    const double cdx = c.x - d.x, cdy = c.y - d.y;
    const double ad = adx * adx + ady * ady;
    const double bd = bdx * bdx + bdy * bdy;
    const double cd = cdx * cdx + cdy * cdy;
    return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

/// Tolerance for incircle(a, b, c, d): 1e-9 relative to the fourth power of the coordinate spread.
inline double incircle_tolerance(Point2 a, Point2 b, Point2 c, Point2 d) {
    double s = 0.0;
    for (Point2 p : {a, b, c}) s = std::max({s, std::abs(p.x - d.x), std::abs(p.y - d.y)});
    return 1e-9 * s * s * s * s;
}

inline double orient_tolerance(Point2 a, Point2 b, Point2 c) {
    double s = std::max({std::abs(b.x - a.x), std::abs(b.y - a.y), std::abs(c.x - a.x), std::abs(c.y - a.y)});
    return 1e-12 * s * s;
}

/// True when d lies strictly inside the circumcircle of abc (any orientation), beyond tolerance.
inline bool in_circumcircle(Point2 a, Point2 b, Point2 c, Point2 d) {
    double det = incircle(a, b, c, d);
    if (orient(a, b, c) < 0) det = -det;
    return det > incircle_tolerance(a, b, c, d);
}

}  // namespace predicates

namespace detail {

inline std::array<int, 3> canonical_triangle(std::array<int, 3> t) {
    auto it = std::min_element(t.begin(), t.end());
    std::rotate(t.begin(), it, t.end());
    return t;
}

inline std::pair<int, int> edge_key(int a, int b) { return a < b ? std::make_pair(a, b) : std::make_pair(b, a); }

/// Hull sweep over lexicographically sorted points; produces a valid (not yet Delaunay) triangulation.
inline std::vector<std::array<int, 3>> sweep_triangulation(const std::vector<Point2>& pts) {
    const int n = static_cast<int>(pts.size());
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (pts[a].x != pts[b].x) return pts[a].x < pts[b].x;
        if (pts[a].y != pts[b].y) return pts[a].y < pts[b].y;
        return a < b;
    });
    for (int i = 1; i < n; ++i)
        if (pts[order[i]] == pts[order[i - 1]])
            throw DegenerateInputError("duplicate points " + std::to_string(order[i - 1]) + " and " +
                                       std::to_string(order[i]));

    using predicates::orient;
    using predicates::orient_tolerance;
    auto strictly = [&](int a, int b, int c) {
        double o = orient(pts[a], pts[b], pts[c]);
        return std::abs(o) > orient_tolerance(pts[a], pts[b], pts[c]) ? o : 0.0;
    };

    int k = 2;
    while (k < n && strictly(order[0], order[1], order[k]) == 0.0) ++k;
    if (k >= n) throw DegenerateInputError("all points are collinear");

    std::vector<std::array<int, 3>> tris;
    std::vector<int> hull;
    const int apex = order[k];
    if (strictly(order[0], order[1], apex) > 0) {
        for (int i = 0; i + 1 < k; ++i) tris.push_back({order[i], order[i + 1], apex});
        for (int i = 0; i < k; ++i) hull.push_back(order[i]);
        hull.push_back(apex);
    } else {
        for (int i = 0; i + 1 < k; ++i) tris.push_back({order[i + 1], order[i], apex});
        for (int i = k - 1; i >= 0; --i) hull.push_back(order[i]);
        hull.push_back(apex);
    }

    for (int j = k + 1; j < n; ++j) {
        const int p = order[j];
        const int m = static_cast<int>(hull.size());
        std::vector<char> visible(static_cast<std::size_t>(m));
        int firstVisible = -1;
        for (int i = 0; i < m; ++i) {
            visible[i] = strictly(hull[i], hull[(i + 1) % m], p) < 0.0;
            if (visible[i] && firstVisible < 0) firstVisible = i;
        }
        if (firstVisible < 0) throw DegenerateInputError("point " + std::to_string(p) + " sees no hull edge");
        int start = firstVisible;
        while (visible[(start - 1 + m) % m]) start = (start - 1 + m) % m;
        int count = 0;
        while (count < m && visible[(start + count) % m]) {
            int i = (start + count) % m;
            tris.push_back({hull[(i + 1) % m], hull[i], p});
            ++count;
        }
        std::vector<int> next;
        next.reserve(static_cast<std::size_t>(m - count + 2));
        // keep hull[start], drop the interior of the visible chain, insert p
        for (int s = 0; s <= m - count; ++s) {
            int idx = (start + count + s) % m;
            next.push_back(hull[idx]);
        }
        next.push_back(p);
        hull = std::move(next);
    }
    return tris;
}

/// Lawson edge flips until every interior edge is locally Delaunay; cocircular quads
/// take the lexicographically smallest diagonal.
inline void legalize(const std::vector<Point2>& pts, std::vector<std::array<int, 3>>& tris) {
    std::map<std::pair<int, int>, std::array<int, 2>> adjacency;
    auto attach = [&](int t) {
        for (int e = 0; e < 3; ++e) {
            auto key = edge_key(tris[t][e], tris[t][(e + 1) % 3]);
            auto [it, inserted] = adjacency.try_emplace(key, std::array<int, 2>{t, -1});
            if (!inserted) it->second[1] = t;
        }
    };
    auto detach = [&](int t) {
        for (int e = 0; e < 3; ++e) {
            auto it = adjacency.find(edge_key(tris[t][e], tris[t][(e + 1) % 3]));
            auto& slots = it->second;
            if (slots[0] == t) {
                slots[0] = slots[1];
                slots[1] = -1;
            } else {
                slots[1] = -1;
            }
            if (slots[0] < 0) adjacency.erase(it);
        }
    };
    for (int t = 0; t < static_cast<int>(tris.size()); ++t) attach(t);

    std::vector<std::pair<int, int>> stack;
    for (const auto& [key, slots] : adjacency)
        if (slots[1] >= 0) stack.push_back(key);

    // third vertex of t opposite the edge (u, v), and whether t traverses u->v
    auto opposite = [&](int t, int u, int v, bool& forward) {
        const auto& tr = tris[t];
        for (int e = 0; e < 3; ++e) {
            if (tr[e] == u && tr[(e + 1) % 3] == v) {
                forward = true;
                return tr[(e + 2) % 3];
            }
            if (tr[e] == v && tr[(e + 1) % 3] == u) {
                forward = false;
                return tr[(e + 2) % 3];
            }
        }
        return -1;
    };

    while (!stack.empty()) {
        auto key = stack.back();
        stack.pop_back();
        auto it = adjacency.find(key);
        if (it == adjacency.end() || it->second[1] < 0) continue;
        int t1 = it->second[0], t2 = it->second[1];
        bool fwd1 = false, fwd2 = false;
        int c = opposite(t1, key.first, key.second, fwd1);
        int d = opposite(t2, key.first, key.second, fwd2);
        // orient so that t1 = (a, b, c) counter-clockwise and t2 = (b, a, d)
        int a = fwd1 ? key.first : key.second;
        int b = fwd1 ? key.second : key.first;
        (void)fwd2;

        const double ic = predicates::incircle(pts[a], pts[b], pts[c], pts[d]);
        const double tol = predicates::incircle_tolerance(pts[a], pts[b], pts[c], pts[d]);
        bool flip = false;
        if (ic > tol) {
            flip = true;
        } else if (ic >= -tol) {
            flip = edge_key(c, d) < edge_key(a, b);
        }
        if (!flip) continue;
        if (predicates::orient(pts[a], pts[d], pts[c]) <= 0.0 || predicates::orient(pts[d], pts[b], pts[c]) <= 0.0)
            continue;

        detach(t1);
        detach(t2);
        tris[t1] = {a, d, c};
        tris[t2] = {d, b, c};
        attach(t1);
        attach(t2);
        stack.push_back(edge_key(a, d));
        stack.push_back(edge_key(d, b));
        stack.push_back(edge_key(b, c));
        stack.push_back(edge_key(c, a));
    }
}

}  // namespace detail

inline Triangulation delaunay(const std::vector<Point2>& points) {
    if (points.size() < 3) throw DegenerateInputError("delaunay needs at least 3 points");
    for (const auto& p : points)
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw DegenerateInputError("non-finite point coordinate");

    auto tris = detail::sweep_triangulation(points);
    detail::legalize(points, tris);

    Triangulation out;
    out.nodes = points;
    for (auto& t : tris) out.triangles.push_back(detail::canonical_triangle(t));
    std::sort(out.triangles.begin(), out.triangles.end());
    for (const auto& t : out.triangles)
        for (int e = 0; e < 3; ++e) {
            auto [a, b] = detail::edge_key(t[e], t[(e + 1) % 3]);
            out.edges.push_back({a, b});
        }
    std::sort(out.edges.begin(), out.edges.end());
    out.edges.erase(std::unique(out.edges.begin(), out.edges.end()), out.edges.end());
    return out;
}

// ---------------------------------------------------------------------------
// Network

enum class Electrode { BL = 0, C = 1, TR = 2 };

inline std::string to_string(Electrode e) {
    switch (e) {
        case Electrode::BL: return "BL";
        case Electrode::C: return "C";
        case Electrode::TR: return "TR";
    }
    return "?";
}

inline Electrode parse_electrode(std::string_view s) {
    if (s == "BL") return Electrode::BL;
    if (s == "C") return Electrode::C;
    if (s == "TR") return Electrode::TR;
    throw DomainError("unknown electrode '" + std::string(s) + "'");
}

struct ElectrodePair {
    Electrode a = Electrode::BL;
    Electrode b = Electrode::C;

    static ElectrodePair parse(std::string_view s) {
        auto dash = s.find('-');
        if (dash == std::string_view::npos) throw DomainError("electrode pair must look like BL-C");
        ElectrodePair p{parse_electrode(s.substr(0, dash)), parse_electrode(s.substr(dash + 1))};
        if (p.a == p.b) throw DomainError("electrode pair needs two distinct electrodes");
        return p;
    }

    ElectrodePair reversed() const { return {b, a}; }
    std::string label() const { return to_string(a) + "-" + to_string(b); }
    bool operator==(const ElectrodePair&) const = default;
};

struct Network {
    std::vector<Point2> nodes;
    std::vector<std::string> labels;  // cell label per node, empty when unlabeled
    std::vector<std::array<int, 2>> edges;
    std::array<int, 3> electrodes{0, 0, 0};  // node index of BL, C, TR
    double channelWidth = 4.0;               // mm
    double channelDepth = 2.0;               // mm

    int electrode_node(Electrode e) const { return electrodes[static_cast<std::size_t>(e)]; }

    double edge_length(std::size_t edge) const {
        return distance(nodes[edges[edge][0]], nodes[edges[edge][1]]);
    }

    std::optional<int> find_node(std::string_view label) const {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) return static_cast<int>(i);
        return std::nullopt;
    }

    void validate() const {
        const int n = static_cast<int>(nodes.size());
        if (n < 2) throw DomainError("network needs at least two nodes");
        if (labels.size() != nodes.size()) throw DomainError("label count does not match node count");
        if (!(channelWidth > 0.0) || !(channelDepth > 0.0)) throw DomainError("channel dimensions must be positive");
        for (const auto& e : edges)
            if (e[0] < 0 || e[0] >= n || e[1] < 0 || e[1] >= n || e[0] == e[1])
                throw DomainError("edge references an invalid node");
        for (int node : electrodes)
            if (node < 0 || node >= n) throw DomainError("electrode references an invalid node");
    }

    bool operator==(const Network&) const = default;
};

/// Network over a triangulation; nodes are labeled with the cell that contains them.
inline Network make_network(const Triangulation& tri, std::array<int, 3> electrodes, double width = 4.0,
                            double depth = 2.0) {
    Network net;
    net.nodes = tri.nodes;
    for (const auto& p : tri.nodes) {
        auto cell = cell_containing(p);
        net.labels.push_back(cell ? cell->label() : std::string());
    }
    net.edges = tri.edges;
    net.electrodes = electrodes;
    net.channelWidth = width;
    net.channelDepth = depth;
    net.validate();
    return net;
}

inline int nearest_node(const std::vector<Point2>& nodes, Point2 target) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(nodes.size()); ++i)
        if (distance(nodes[i], target) < distance(nodes[best], target)) best = i;
    return best;
}

/// Random skin: seeded points, Delaunay channels, electrodes on the nodes nearest the
/// bottom-left corner, the center and the top-right corner.
inline Network generate_network(std::uint64_t seed, int count, double minSeparation = 15.0) {
    auto pts = generate_random_points(seed, count, kSkinBounds, minSeparation);
    auto tri = delaunay(pts);
    std::array<int, 3> el{nearest_node(pts, {0.0, 0.0}), nearest_node(pts, kSkinBounds.center()),
                          nearest_node(pts, {kSkinBounds.x1, kSkinBounds.y1})};
    if (el[0] == el[1] || el[1] == el[2] || el[0] == el[2])
        throw DomainError("electrode placement collapsed onto a shared node; use more points");
    return make_network(tri, el);
}

struct EdgeUnderCell {
    int edge = 0;
    double t0 = 0.0;  // parameter range along edges[edge] (from node a to node b)
    double t1 = 0.0;
    Point2 from;
    Point2 to;

    double length() const { return distance(from, to); }
};

/// Edges whose centerline widened by channelWidth/2 touches the cell square.
inline std::vector<EdgeUnderCell> edges_under_cell(const Network& net, CellId cell) {
    const Rect rect = cell_rectangle(cell);
    const double radius = net.channelWidth / 2.0;
    std::vector<EdgeUnderCell> out;
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        Point2 a = net.nodes[net.edges[e][0]];
        Point2 b = net.nodes[net.edges[e][1]];
        auto iv = clip_segment_rounded(a, b, rect, radius);
        if (!iv) continue;
        auto lerp = [&](double t) { return Point2{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)}; };
        out.push_back({static_cast<int>(e), iv->first, iv->second, lerp(iv->first), lerp(iv->second)});
    }
    return out;
}

}  // namespace skintwin
