#pragma once

#include <array>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace skintwin {

/// Hand-placed 18-node skin. Each node sits inside the cell it is named after; the
/// short G13-I11 link joins the two central hubs and I11 carries the center electrode.
inline Network default_network() {
    struct Seed {
        const char* label;
        double x;
        double y;
    };
    static constexpr std::array<Seed, 18> kSeeds{{
        {"B2", 12, 14},    {"A6", 58, 8},     {"B12", 112, 12}, {"B17", 168, 16},  {"E20", 192, 42},
        {"F4", 34, 52},    {"E8", 78, 46},    {"G13", 122, 68}, {"I11", 106, 84},  {"M16", 154, 126},
        {"I17", 160, 84},  {"J6", 56, 96},    {"L2", 14, 110},  {"N9", 88, 132},   {"P5", 40, 150},
        {"P13", 126, 152}, {"O19", 186, 148}, {"K20", 190, 100},
    }};
    std::vector<Point2> pts;
    for (const auto& s : kSeeds) pts.push_back({s.x, s.y});
    Network net = make_network(delaunay(pts), {0, 8, 16});
    for (std::size_t i = 0; i < kSeeds.size(); ++i) net.labels[i] = kSeeds[i].label;
    return net;
}

}  // namespace skintwin
