#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "circuit.hpp"
#include "error.hpp"
#include "geometry.hpp"

namespace skintwin {

enum class Family { RED, BLUE, GRADIENT, GREEN };

inline std::string to_string(Family f) {
    switch (f) {
        case Family::RED: return "RED";
        case Family::BLUE: return "BLUE";
        case Family::GRADIENT: return "GRADIENT";
        case Family::GREEN: return "GREEN";
    }
    return "?";
}

inline Family parse_family(std::string_view s) {
    if (s == "RED") return Family::RED;
    if (s == "BLUE") return Family::BLUE;
    if (s == "GRADIENT") return Family::GRADIENT;
    if (s == "GREEN") return Family::GREEN;
    throw DomainError("unknown family '" + std::string(s) + "'");
}

/// Per-100 g sensitivities of a press, by response family.
struct PerturbCoeffs {
    double pathResistanceFactor = 0.97;       // RED: resistance of channels on the conduction path
    double squeezeResistanceFactor = 1.003;   // GRADIENT: resistance
    double squeezeCapacitanceFactor = 1.10;   // GRADIENT: capacitance, on top of the inductance route
    double pumpInductanceFactor = 0.6;        // GREEN: inductance (capacitance moves inversely)
    double inductanceFactor = 1.5;            // BLUE and GRADIENT: inductance (capacitance moves inversely)
    double timeConstant = 0.3;                // s, rise and fall
    double footprintLength = 8.0;             // mm, Gaussian spread of a press around its cell
    double releaseResidual = 0.0;             // reactive fraction left after release
    double stiffness = 1.0;                   // global scale of every sensitivity

    void validate() const {
        for (double f : {pathResistanceFactor, squeezeResistanceFactor, squeezeCapacitanceFactor,
                         pumpInductanceFactor, inductanceFactor})
            if (!(f > 0.0) || !std::isfinite(f)) throw DomainError("perturbation factors must be finite and positive");
        if (!(timeConstant > 0.0) || !std::isfinite(timeConstant)) throw DomainError("time constant must be positive");
        if (!(footprintLength > 0.0) || !std::isfinite(footprintLength))
            throw DomainError("footprint length must be positive");
        if (!std::isfinite(releaseResidual) || releaseResidual <= -1.0 || releaseResidual >= 1.0)
            throw DomainError("release residual must lie in (-1, 1)");
        if (!(stiffness >= 0.0) || !std::isfinite(stiffness)) throw DomainError("stiffness must be non-negative");
    }

    /// Multipliers of (resistance, inductance, capacitance) at full activation for 100 g.
    std::array<double, 3> factors(Family f) const {
        switch (f) {
            case Family::RED: return {pathResistanceFactor, 1.0, 1.0};
            case Family::GREEN: return {1.0, pumpInductanceFactor, 1.0 / pumpInductanceFactor};
            case Family::BLUE: return {1.0, inductanceFactor, 1.0 / inductanceFactor};
            case Family::GRADIENT:
                return {squeezeResistanceFactor, inductanceFactor, squeezeCapacitanceFactor / inductanceFactor};
        }
        return {1.0, 1.0, 1.0};
    }

    /// Coefficients with every factor set to 1.
    static PerturbCoeffs neutral() {
        PerturbCoeffs c;
        c.pathResistanceFactor = c.squeezeResistanceFactor = c.squeezeCapacitanceFactor = 1.0;
        c.pumpInductanceFactor = c.inductanceFactor = 1.0;
        return c;
    }

    bool operator==(const PerturbCoeffs&) const = default;
};

struct FamilyRules {
    double hubLinkThreshold = 25.0;  // mm, shorter channels never read as GREEN
    double influenceRadius = 30.0;   // mm, channels this close to an active electrode never read as GREEN
};

// ---------------------------------------------------------------------------
// Geometric family assignment

/// Channel indices on the shortest (by length) route between two nodes.
inline std::vector<int> shortest_path_edges(const Network& net, int from, int to) {
    const int n = static_cast<int>(net.nodes.size());
    std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(n));
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        adj[net.edges[e][0]].push_back({net.edges[e][1], static_cast<int>(e)});
        adj[net.edges[e][1]].push_back({net.edges[e][0], static_cast<int>(e)});
    }
    std::vector<double> dist(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    std::vector<int> via(static_cast<std::size_t>(n), -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[from] = 0.0;
    queue.push({0.0, from});
    while (!queue.empty()) {
        auto [d, u] = queue.top();
        queue.pop();
        if (d > dist[u]) continue;
        for (auto [v, e] : adj[u]) {
            double nd = d + net.edge_length(static_cast<std::size_t>(e));
            if (nd < dist[v]) {
                dist[v] = nd;
                via[v] = e;
                queue.push({nd, v});
            }
        }
    }
    if (!std::isfinite(dist[to])) return {};
    std::vector<int> path;
    for (int u = to; u != from;) {
        int e = via[u];
        path.push_back(e);
        u = net.edges[e][0] == u ? net.edges[e][1] : net.edges[e][0];
    }
    std::sort(path.begin(), path.end());
    return path;
}

inline Family classify_cell_family(const Network& net, ElectrodePair pair, CellId cell,
                                   const FamilyRules& rules = {}) {
    const int a = net.electrode_node(pair.a), b = net.electrode_node(pair.b);
    const Rect rect = cell_rectangle(cell);
    if (clip_segment(net.nodes[a], net.nodes[b], rect)) return Family::GRADIENT;
    const auto under = edges_under_cell(net, cell);
    const auto path = shortest_path_edges(net, a, b);
    for (const auto& u : under)
        if (std::binary_search(path.begin(), path.end(), u.edge)) return Family::RED;
    for (const auto& u : under) {
        const auto& e = net.edges[static_cast<std::size_t>(u.edge)];
        if (net.edge_length(static_cast<std::size_t>(u.edge)) < rules.hubLinkThreshold) continue;
        const Point2 p = net.nodes[e[0]], q = net.nodes[e[1]];
        double near = std::min(point_segment_distance(net.nodes[a], p, q), point_segment_distance(net.nodes[b], p, q));
        if (near < rules.influenceRadius) continue;
        return Family::GREEN;
    }
    return Family::BLUE;
}

/// Family of every cell, indexed by CellId::index().
inline std::vector<Family> family_map(const Network& net, ElectrodePair pair, const FamilyRules& rules = {}) {
    std::vector<Family> out;
    out.reserve(kGridRows * kGridCols);
    for (const auto& cell : CellId::all()) out.push_back(classify_cell_family(net, pair, cell, rules));
    return out;
}

// ---------------------------------------------------------------------------
// Presses and activation

struct Press {
    CellId cell{0, 1};
    double mass = 100.0;  // g
    double tOn = 0.0;     // s
    double tOff = 1.0;    // s

    void validate() const {
        if (!(mass > 0.0) || !std::isfinite(mass)) throw DomainError("press mass must be positive");
        if (!(tOn < tOff) || !std::isfinite(tOn)) throw DomainError("press needs tOn < tOff");
    }

    bool operator==(const Press&) const = default;
};

struct Activation {
    double resistive = 0.0;
    double reactive = 0.0;
};

/// First-order rise after tOn and decay after tOff. The reactive part settles at
/// releaseResidual times its value at release instead of returning to zero.
inline Activation activation(const Press& p, const PerturbCoeffs& c, double t) {
    if (!(t > p.tOn)) return {};
    auto rise = [&](double s) { return 1.0 - std::exp(-(s - p.tOn) / c.timeConstant); };
    if (t < p.tOff || !std::isfinite(p.tOff)) {
        double a = rise(t);
        return {a, a};
    }
    const double peak = rise(p.tOff);
    const double decay = std::exp(-(t - p.tOff) / c.timeConstant);
    return {peak * decay, peak * (c.releaseResidual + (1.0 - c.releaseResidual) * decay)};
}

/// Gaussian weight of each branch for a press on `cell`: 1 for the closest branch,
/// falling with the extra distance of the others; negligible weights are dropped.
inline std::vector<std::pair<int, double>> press_footprint(const AdmittanceSystem& sys, CellId cell,
                                                           double footprintLength) {
    const Rect rect = cell_rectangle(cell);
    const auto& pos = sys.positions();
    std::vector<double> d;
    d.reserve(sys.branches().size());
    for (const auto& br : sys.branches()) d.push_back(segment_rect_distance(pos[br.a], pos[br.b], rect));
    const double nearest = *std::min_element(d.begin(), d.end());
    std::vector<std::pair<int, double>> out;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double z = (d[i] - nearest) / footprintLength;
        const double w = std::exp(-0.5 * z * z);
        if (w >= 1e-3) out.push_back({static_cast<int>(i), w});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scenario and time series

struct NoiseSettings {
    double sigma = 0.02;       // ohm, white noise on R and X per sample
    double driftRate = 0.005;  // ohm/s, linear drift on R and X
    double randomWalk = 0.0;   // ohm/sqrt(s), drift wander

    static NoiseSettings none() { return {0.0, 0.0, 0.0}; }
    bool operator==(const NoiseSettings&) const = default;
};

struct Scenario {
    std::vector<Press> presses;
    double probeFrequency = 1000.0;  // Hz
    double probeAmplitude = 0.1;     // V RMS
    double samplePeriod = 0.2;       // s
    double duration = 10.0;          // s
    ElectrodePair pair{Electrode::BL, Electrode::C};
    NoiseSettings noise;
    std::uint64_t seed = 0;

    int sample_count() const { return static_cast<int>(std::floor(duration / samplePeriod + 1e-9)) + 1; }

    void validate() const {
        if (!(samplePeriod > 0.0) || !std::isfinite(samplePeriod)) throw DomainError("samplePeriod must be positive");
        if (!(probeFrequency >= 20.0 && probeFrequency <= 2e6))
            throw DomainError("probeFrequency must lie within [20, 2e6] Hz");
        if (!(probeAmplitude > 0.0)) throw DomainError("probeAmplitude must be positive");
        if (!(duration >= 0.0) || !std::isfinite(duration)) throw DomainError("duration must be non-negative");
        if (!(noise.sigma >= 0.0) || !std::isfinite(noise.driftRate) || !(noise.randomWalk >= 0.0))
            throw DomainError("invalid noise settings");
        for (const auto& p : presses) p.validate();
    }

    bool operator==(const Scenario&) const = default;
};

struct TimeSeries {
    double t0 = 0.0;
    double samplePeriod = 0.2;
    double probeFrequency = 1000.0;
    double probeAmplitude = 0.1;
    std::vector<ComplexZ> samples;

    double time(std::size_t i) const { return t0 + static_cast<double>(i) * samplePeriod; }
    std::size_t size() const { return samples.size(); }
    bool operator==(const TimeSeries&) const = default;
};

/// Press simulator bound to one network, material and coefficient set. Family maps,
/// footprints and factorized port systems are cached, so one instance is not thread-safe.
class Simulator {
public:
    Simulator(Network net, MaterialParams material, PerturbCoeffs coeffs, FamilyRules rules = {})
        : net_(std::move(net)), material_(material), coeffs_(coeffs), rules_(rules) {
        net_.validate();
        material_.validate();
        coeffs_.validate();
        system_ = AdmittanceSystem::from_network(net_, material_);
    }

    const Network& network() const { return net_; }
    const MaterialParams& material() const { return material_; }
    const PerturbCoeffs& coeffs() const { return coeffs_; }
    const FamilyRules& rules() const { return rules_; }
    const AdmittanceSystem& system() const { return system_; }

    const std::vector<Family>& families(ElectrodePair pair) {
        auto key = pair_key(pair);
        auto it = families_.find(key);
        if (it == families_.end()) it = families_.emplace(key, family_map(net_, pair, rules_)).first;
        return it->second;
    }

    Family family(ElectrodePair pair, CellId cell) { return families(pair)[static_cast<std::size_t>(cell.index())]; }

    const std::vector<std::pair<int, double>>& footprint(CellId cell) {
        auto it = footprints_.find(cell.index());
        if (it == footprints_.end())
            it = footprints_.emplace(cell.index(), press_footprint(system_, cell, coeffs_.footprintLength)).first;
        return it->second;
    }

    /// Per-branch multipliers of (R, L, C) for the presses at time t; branches absent are unchanged.
    std::map<int, std::array<double, 3>> branch_factors(ElectrodePair pair, const std::vector<Press>& presses,
                                                        double t) {
        std::map<int, std::array<double, 3>> out;
        for (const auto& p : presses) {
            const Activation act = activation(p, coeffs_, t);
            if (act.resistive == 0.0 && act.reactive == 0.0) continue;
            const auto f = coeffs_.factors(family(pair, p.cell));
            const double load = coeffs_.stiffness * p.mass / 100.0;
            for (const auto& [branch, w] : footprint(p.cell)) {
                auto [it, fresh] = out.try_emplace(branch, std::array<double, 3>{1.0, 1.0, 1.0});
                it->second[0] *= 1.0 + (f[0] - 1.0) * w * act.resistive * load;
                it->second[1] *= 1.0 + (f[1] - 1.0) * w * act.reactive * load;
                it->second[2] *= 1.0 + (f[2] - 1.0) * w * act.reactive * load;
            }
        }
        for (auto it = out.begin(); it != out.end();) {
            if (it->second == std::array<double, 3>{1.0, 1.0, 1.0})
                it = out.erase(it);
            else
                ++it;
        }
        return out;
    }

    /// Element list of every branch with the presses applied at time t.
    std::vector<EdgeElement> perturb(ElectrodePair pair, const std::vector<Press>& presses, double t) {
        std::vector<EdgeElement> els;
        els.reserve(system_.branches().size());
        for (const auto& br : system_.branches()) els.push_back(br.element);
        for (const auto& [branch, f] : branch_factors(pair, presses, t)) {
            auto& el = els[static_cast<std::size_t>(branch)];
            el.seriesResistance *= f[0];
            el.seriesInductance *= f[1];
            el.shuntCapacitance *= f[2];
        }
        return els;
    }

    const PortSolver& port(ElectrodePair pair, double freqHz) {
        auto key = std::make_pair(pair_key(pair), freqHz);
        auto it = ports_.find(key);
        if (it == ports_.end()) it = ports_.emplace(key, std::make_unique<PortSolver>(system_, pair, freqHz)).first;
        return *it->second;
    }

    /// Noiseless impedance at time t.
    ComplexZ impedance_at(ElectrodePair pair, double freqHz, const std::vector<Press>& presses, double t) {
        const auto& solver = port(pair, freqHz);
        std::vector<std::pair<int, EdgeElement>> changes;
        for (const auto& [branch, f] : branch_factors(pair, presses, t)) {
            EdgeElement el = system_.branches()[static_cast<std::size_t>(branch)].element;
            el.seriesResistance *= f[0];
            el.seriesInductance *= f[1];
            el.shuntCapacitance *= f[2];
            changes.push_back({branch, el});
        }
        return ComplexZ(solver.solve(changes));
    }

    ComplexZ rest(ElectrodePair pair, double freqHz) { return ComplexZ(port(pair, freqHz).rest()); }

    TimeSeries simulate(const Scenario& sc) {
        sc.validate();
        TimeSeries ts;
        ts.samplePeriod = sc.samplePeriod;
        ts.probeFrequency = sc.probeFrequency;
        ts.probeAmplitude = sc.probeAmplitude;
        const int n = sc.sample_count();
        ts.samples.reserve(static_cast<std::size_t>(n));
        std::mt19937_64 rng(sc.seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        double walkR = 0.0, walkX = 0.0;
        for (int k = 0; k < n; ++k) {
            const double t = ts.time(static_cast<std::size_t>(k));
            ComplexZ z;
            try {
                z = impedance_at(sc.pair, sc.probeFrequency, sc.presses, t);
            } catch (const SingularSystemError& e) {
                throw SingularSystemError("at t=" + std::to_string(t) + " s: " + e.what());
            }
            if (sc.noise.randomWalk > 0.0 && k > 0) {
                const double step = sc.noise.randomWalk * std::sqrt(sc.samplePeriod);
                walkR += step * gauss(rng);
                walkX += step * gauss(rng);
            }
            double nr = 0.0, nx = 0.0;
            if (sc.noise.sigma > 0.0) {
                nr = sc.noise.sigma * gauss(rng);
                nx = sc.noise.sigma * gauss(rng);
            }
            const double drift = sc.noise.driftRate * t;
            ts.samples.push_back({z.resistance + drift + walkR + nr, z.reactance + drift + walkX + nx});
        }
        return ts;
    }

private:
    static int pair_key(ElectrodePair p) { return static_cast<int>(p.a) * 3 + static_cast<int>(p.b); }

    Network net_;
    MaterialParams material_;
    PerturbCoeffs coeffs_;
    FamilyRules rules_;
    AdmittanceSystem system_;
    std::map<int, std::vector<Family>> families_;
    std::map<int, std::vector<std::pair<int, double>>> footprints_;
    std::map<std::pair<int, double>, std::unique_ptr<PortSolver>> ports_;
};

inline TimeSeries simulate_scenario(const Network& net, const MaterialParams& material, const PerturbCoeffs& coeffs,
                                    const Scenario& scenario) {
    Simulator sim(net, material, coeffs);
    return sim.simulate(scenario);
}

/// Element list of the network with the press applied at time t.
inline std::vector<EdgeElement> perturb(const Network& net, const MaterialParams& material, ElectrodePair pair,
                                        const std::vector<Press>& presses, const PerturbCoeffs& coeffs, double t) {
    Simulator sim(net, material, coeffs);
    return sim.perturb(pair, presses, t);
}

// ---------------------------------------------------------------------------
// Drift removal

struct Window {
    double from = 0.0;  // s
    double to = 0.0;    // s
};

/// Fits a least-squares line to the samples inside the windows, separately for R and X,
/// and subtracts it from the whole series.
inline TimeSeries subtract_drift(const TimeSeries& series, const std::vector<Window>& quiescent) {
    for (const auto& w : quiescent)
        if (!(w.to >= w.from)) throw InsufficientBaselineError("quiescent window ends before it starts");
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double t = series.time(i);
        for (const auto& w : quiescent)
            if (t >= w.from - 1e-9 && t <= w.to + 1e-9) {
                idx.push_back(i);
                break;
            }
    }
    if (idx.size() < 2) throw InsufficientBaselineError("quiescent windows contain fewer than 2 samples");
    double tm = 0.0;
    for (auto i : idx) tm += series.time(i);
    tm /= static_cast<double>(idx.size());
    double stt = 0.0;
    for (auto i : idx) stt += (series.time(i) - tm) * (series.time(i) - tm);

    auto fit = [&](auto get) {
        double ym = 0.0;
        for (auto i : idx) ym += get(series.samples[i]);
        ym /= static_cast<double>(idx.size());
        double sty = 0.0;
        for (auto i : idx) sty += (series.time(i) - tm) * (get(series.samples[i]) - ym);
        const double slope = stt > 0.0 ? sty / stt : 0.0;
        return std::make_pair(ym - slope * tm, slope);
    };
    const auto [r0, rs] = fit([](const ComplexZ& z) { return z.resistance; });
    const auto [x0, xs] = fit([](const ComplexZ& z) { return z.reactance; });
    TimeSeries out = series;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double t = out.time(i);
        out.samples[i].resistance -= r0 + rs * t;
        out.samples[i].reactance -= x0 + xs * t;
    }
    return out;
}

}  // namespace skintwin
