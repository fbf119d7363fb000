#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "error.hpp"
#include "stimulus.hpp"

namespace skintwin {

/// Differential reactance per input combination, against the pre-experiment rest.
struct GateOutputs {
    double O00 = 0.0;
    double O01 = 0.0;
    double O10 = 0.0;
    double O11 = 0.0;
    std::array<double, 4> uncertainty{0.0, 0.0, 0.0, 0.0};  // order 00, 01, 10, 11

    double level(int x, int y) const { return x ? (y ? O11 : O10) : (y ? O01 : O00); }
    std::array<double, 4> levels() const { return {O00, O01, O10, O11}; }

    static GateOutputs from_levels(const std::array<double, 4>& v) {
        GateOutputs g;
        g.O00 = v[0];
        g.O01 = v[1];
        g.O10 = v[2];
        g.O11 = v[3];
        return g;
    }

    /// Levels measured on the physical skin in the two-press experiment.
    static GateOutputs measured() {
        GateOutputs g = from_levels({-1.03, 5.79, 0.13, 8.03});
        g.uncertainty = {0.05, 0.04, 0.03, 0.04};
        return g;
    }

    bool operator==(const GateOutputs&) const = default;
};

/// f(x, y) for (x, y) = 00, 01, 10, 11.
struct TruthTable {
    std::array<bool, 4> f{false, false, false, false};

    bool operator()(int x, int y) const { return f[static_cast<std::size_t>(2 * x + y)]; }
    int bits() const { return f[0] * 8 + f[1] * 4 + f[2] * 2 + f[3]; }
    auto operator<=>(const TruthTable& o) const { return bits() <=> o.bits(); }
    bool operator==(const TruthTable& o) const { return f == o.f; }

    static TruthTable of(bool f00, bool f01, bool f10, bool f11) { return {{f00, f01, f10, f11}}; }

    std::string name() const {
        switch (bits()) {
            case 0b0000: return "const-0";
            case 0b1111: return "const-1";
            case 0b0001: return "AND";
            case 0b0111: return "OR";
            case 0b0101: return "y";
            case 0b0011: return "x";
            case 0b0110: return "XOR";
            case 0b1000: return "NOR";
            case 0b1110: return "NAND";
            case 0b1001: return "XNOR";
            case 0b1010: return "NOT y";
            case 0b1100: return "NOT x";
            case 0b0100: return "y AND NOT x";
            case 0b0010: return "x AND NOT y";
            case 0b1101: return "x IMPLIES y";
            case 0b1011: return "y IMPLIES x";
        }
        return "?";
    }
};

/// f(x, y) = 1 exactly when O_xy > T.
inline TruthTable threshold_gate(const GateOutputs& out, double T) {
    return TruthTable::of(out.O00 > T, out.O01 > T, out.O10 > T, out.O11 > T);
}

/// Every table reachable by sweeping T over the real line.
inline std::set<TruthTable> realizable_gates(const GateOutputs& out) {
    auto lv = out.levels();
    std::sort(lv.begin(), lv.end());
    std::set<TruthTable> gates;
    gates.insert(threshold_gate(out, lv.front() - 1.0));
    gates.insert(threshold_gate(out, lv.back()));
    for (std::size_t i = 0; i + 1 < lv.size(); ++i)
        if (lv[i] < lv[i + 1]) gates.insert(threshold_gate(out, lv[i]));
    return gates;
}

// ---------------------------------------------------------------------------
// Multitouch protocol

struct MultitouchOptions {
    double phaseDuration = 5.0;   // s, also the rest before and after
    double samplePeriod = 0.2;    // s
    double steadyFraction = 0.6;  // trailing share of each phase averaged
    double probeFrequency = 1000.0;
    double mass = 100.0;          // g
    NoiseSettings noise{0.02, 0.0, 0.0};
    std::uint64_t seed = 0;
};

struct MultitouchResult {
    GateOutputs outputs;
    double preRestReactance = 0.0;   // ohm, absolute level before phase 1
    double postRestReactance = 0.0;  // ohm, absolute level after phase 4
    TimeSeries series;
};

/// Schedule: rest, press A, press B, release A, release B; each stage lasts one phase.
inline Scenario multitouch_scenario(ElectrodePair pair, CellId cellA, CellId cellB, const MultitouchOptions& opt) {
    const double P = opt.phaseDuration;
    Scenario sc;
    sc.pair = pair;
    sc.probeFrequency = opt.probeFrequency;
    sc.samplePeriod = opt.samplePeriod;
    sc.duration = 5.0 * P - opt.samplePeriod / 2.0;
    sc.noise = opt.noise;
    sc.seed = opt.seed;
    sc.presses = {Press{cellA, opt.mass, P, 3.0 * P}, Press{cellB, opt.mass, 2.0 * P, 4.0 * P}};
    return sc;
}

namespace detail {

/// Sample indices in the steady window of stage k (0 = rest before, 4 = rest after).
inline std::vector<std::size_t> steady_window(const TimeSeries& ts, int stage, const MultitouchOptions& opt) {
    const double P = opt.phaseDuration;
    const double from = stage * P + (1.0 - opt.steadyFraction) * P;
    const double to = (stage + 1) * P;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double t = ts.time(i);
        if (t >= from - 1e-9 && t < to - 1e-9) idx.push_back(i);
    }
    return idx;
}

inline std::pair<double, double> window_stats(const TimeSeries& ts, const std::vector<std::size_t>& idx) {
    double mean = 0.0;
    for (auto i : idx) mean += ts.samples[i].reactance;
    mean /= static_cast<double>(idx.size());
    double ss = 0.0;
    for (auto i : idx) ss += (ts.samples[i].reactance - mean) * (ts.samples[i].reactance - mean);
    return {mean, std::sqrt(ss / static_cast<double>(idx.size() - 1))};
}

}  // namespace detail

inline MultitouchResult run_multitouch(Simulator& sim, ElectrodePair pair, CellId cellA, CellId cellB,
                                       const MultitouchOptions& opt = {}) {
    if (cellA == cellB) throw DomainError("multitouch needs two different cells");
    if (!(opt.phaseDuration > 0.0) || !(opt.steadyFraction > 0.0 && opt.steadyFraction <= 1.0))
        throw ProtocolWindowError("invalid phase duration or steady fraction");
    MultitouchResult res;
    res.series = sim.simulate(multitouch_scenario(pair, cellA, cellB, opt));
    std::array<double, 5> mean{};
    std::array<double, 5> spread{};
    for (int stage = 0; stage < 5; ++stage) {
        auto idx = detail::steady_window(res.series, stage, opt);
        if (idx.size() < 2)
            throw ProtocolWindowError("phase " + std::to_string(stage) + " has fewer than 2 steady samples");
        std::tie(mean[stage], spread[stage]) = detail::window_stats(res.series, idx);
    }
    res.preRestReactance = mean[0];
    res.postRestReactance = mean[4];
    auto& o = res.outputs;
    o.O10 = mean[1] - mean[0];
    o.O11 = mean[2] - mean[0];
    o.O01 = mean[3] - mean[0];
    o.O00 = mean[4] - mean[0];
    o.uncertainty = {spread[4], spread[3], spread[1], spread[2]};
    return res;
}

inline MultitouchResult run_multitouch(const Network& net, const MaterialParams& material, const PerturbCoeffs& coeffs,
                                       ElectrodePair pair, CellId cellA, CellId cellB,
                                       const MultitouchOptions& opt = {}) {
    Simulator sim(net, material, coeffs);
    return run_multitouch(sim, pair, cellA, cellB, opt);
}

// ---------------------------------------------------------------------------
// Calibration

enum class CoeffParam {
    PathResistance,
    SqueezeResistance,
    SqueezeCapacitance,
    PumpInductance,
    Inductance,
    ReleaseResidual,
    FootprintLength,
};

inline std::string to_string(CoeffParam p) {
    switch (p) {
        case CoeffParam::PathResistance: return "pathResistanceFactor";
        case CoeffParam::SqueezeResistance: return "squeezeResistanceFactor";
        case CoeffParam::SqueezeCapacitance: return "squeezeCapacitanceFactor";
        case CoeffParam::PumpInductance: return "pumpInductanceFactor";
        case CoeffParam::Inductance: return "inductanceFactor";
        case CoeffParam::ReleaseResidual: return "releaseResidual";
        case CoeffParam::FootprintLength: return "footprintLength";
    }
    return "?";
}

namespace detail {

inline double& coeff_ref(PerturbCoeffs& c, CoeffParam p) {
    switch (p) {
        case CoeffParam::PathResistance: return c.pathResistanceFactor;
        case CoeffParam::SqueezeResistance: return c.squeezeResistanceFactor;
        case CoeffParam::SqueezeCapacitance: return c.squeezeCapacitanceFactor;
        case CoeffParam::PumpInductance: return c.pumpInductanceFactor;
        case CoeffParam::Inductance: return c.inductanceFactor;
        case CoeffParam::ReleaseResidual: return c.releaseResidual;
        case CoeffParam::FootprintLength: return c.footprintLength;
    }
    return c.stiffness;
}

// Unbounded search coordinate <-> coefficient value. Positive quantities go through a log,
// the residual fraction through tanh so it stays inside (-1, 1).
inline double to_search(CoeffParam p, double v) {
    return p == CoeffParam::ReleaseResidual ? std::atanh(v) : std::log(v);
}

inline double from_search(CoeffParam p, double u) {
    if (p == CoeffParam::ReleaseResidual) return std::tanh(u);
    return std::exp(std::clamp(u, -20.0, 20.0));
}

}  // namespace detail

/// Parameters that influence a press pair: those of the two cells' families plus the release residual.
inline std::vector<CoeffParam> relevant_params(Family a, Family b) {
    std::set<CoeffParam> s{CoeffParam::ReleaseResidual};
    for (Family f : {a, b}) {
        switch (f) {
            case Family::RED: s.insert(CoeffParam::PathResistance); break;
            case Family::GREEN: s.insert(CoeffParam::PumpInductance); break;
            case Family::BLUE: s.insert(CoeffParam::Inductance); break;
            case Family::GRADIENT:
                s.insert(CoeffParam::SqueezeResistance);
                s.insert(CoeffParam::SqueezeCapacitance);
                s.insert(CoeffParam::Inductance);
                break;
        }
    }
    return {s.begin(), s.end()};
}

struct CalibrationOptions {
    int maxEvaluations = 5000;
    std::vector<CoeffParam> params;      // empty: relevant_params of the two cells
    double regularization = 1e-6;        // pull toward the starting point, keeps the problem well posed
    MultitouchOptions protocol{5.0, 0.2, 0.6, 1000.0, 100.0, NoiseSettings::none(), 0};
};

struct CalibrationResult {
    PerturbCoeffs coeffs;
    GateOutputs outputs;
    double maxResidual = 0.0;
    int evaluations = 0;
};

/// Least-squares fit of the perturbation coefficients so the simulated multitouch levels
/// match the targets; Levenberg-Marquardt with forward-difference Jacobians.
inline CalibrationResult calibrate(const Network& net, const MaterialParams& material, ElectrodePair pair,
                                   CellId cellA, CellId cellB, const GateOutputs& target, double tolerance,
                                   const PerturbCoeffs& initial = {}, const CalibrationOptions& opt = {}) {
    initial.validate();
    if (cellA == cellB) throw DomainError("calibration needs two different cells");
    if (!(tolerance > 0.0))
        throw CalibrationInfeasibleError("a tolerance of " + std::to_string(tolerance) +
                                             " ohm is below any attainable residual",
                                         std::numeric_limits<double>::infinity());
    const Family famA = classify_cell_family(net, pair, cellA);
    const Family famB = classify_cell_family(net, pair, cellB);
    const std::vector<CoeffParam> params = opt.params.empty() ? relevant_params(famA, famB) : opt.params;
    const int n = static_cast<int>(params.size());
    const auto goal = target.levels();

    int evaluations = 0;
    CalibrationResult best;
    best.coeffs = initial;
    best.maxResidual = std::numeric_limits<double>::infinity();

    auto coeffs_at = [&](const Eigen::VectorXd& u) {
        PerturbCoeffs c = initial;
        for (int i = 0; i < n; ++i) detail::coeff_ref(c, params[i]) = detail::from_search(params[i], u(i));
        return c;
    };
    Eigen::VectorXd u0(n);
    for (int i = 0; i < n; ++i) u0(i) = detail::to_search(params[i], detail::coeff_ref(best.coeffs, params[i]));

    auto evaluate = [&](const Eigen::VectorXd& u) -> std::array<double, 4> {
        ++evaluations;
        const PerturbCoeffs c = coeffs_at(u);
        GateOutputs out;
        try {
            c.validate();
            Simulator sim(net, material, c);
            out = run_multitouch(sim, pair, cellA, cellB, opt.protocol).outputs;
        } catch (const Error&) {
            return {1e6, 1e6, 1e6, 1e6};
        }
        std::array<double, 4> r{};
        const auto lv = out.levels();
        double worst = 0.0;
        for (int k = 0; k < 4; ++k) {
            r[k] = lv[k] - goal[k];
            worst = std::max(worst, std::abs(r[k]));
        }
        if (worst < best.maxResidual) {
            best.maxResidual = worst;
            best.coeffs = c;
            best.outputs = out;
        }
        return r;
    };

    struct Residuals {
        using Scalar = double;
        using InputType = Eigen::VectorXd;
        using ValueType = Eigen::VectorXd;
        using JacobianType = Eigen::MatrixXd;
        enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

        std::function<std::array<double, 4>(const Eigen::VectorXd&)> eval;
        Eigen::VectorXd anchor;
        double weight = 0.0;
        int inputs() const { return static_cast<int>(anchor.size()); }
        int values() const { return 4 + static_cast<int>(anchor.size()); }
        int operator()(const Eigen::VectorXd& u, Eigen::VectorXd& fvec) const {
            auto r = eval(u);
            for (int k = 0; k < 4; ++k) fvec(k) = r[k];
            for (int i = 0; i < anchor.size(); ++i) fvec(4 + i) = weight * (u(i) - anchor(i));
            return 0;
        }
    };

    // Restarts from scaled copies of the starting point while budget remains.
    const std::array<double, 5> restartScale{1.0, 0.5, 2.0, 0.25, 4.0};
    for (std::size_t attempt = 0; attempt < restartScale.size(); ++attempt) {
        const int remaining = opt.maxEvaluations - evaluations;
        if (remaining <= n + 1 || best.maxResidual <= tolerance) break;
        Residuals f{evaluate, u0, opt.regularization};
        Eigen::NumericalDiff<Residuals> diff(f);
        Eigen::LevenbergMarquardt<Eigen::NumericalDiff<Residuals>> lm(diff);
        lm.parameters.maxfev = remaining;
        lm.parameters.ftol = 1e-14;
        lm.parameters.xtol = 1e-14;
        Eigen::VectorXd u = u0;
        for (int i = 0; i < n; ++i)
            if (params[i] != CoeffParam::FootprintLength) u(i) *= restartScale[attempt];
        // each step costs one Jacobian (n evaluations) plus a few trial points
        auto status = lm.minimizeInit(u);
        while (status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters) {
            if (best.maxResidual <= tolerance * 0.5 || evaluations + 2 * n + 4 > opt.maxEvaluations) break;
            status = lm.minimizeOneStep(u);
            if (status != Eigen::LevenbergMarquardtSpace::Running) break;
        }
    }
    best.evaluations = evaluations;
    if (!(tolerance > 0.0) || !(best.maxResidual <= tolerance))
        throw CalibrationInfeasibleError("calibration stopped at max residual " + std::to_string(best.maxResidual) +
                                             " ohm after " + std::to_string(evaluations) + " evaluations",
                                         best.maxResidual);
    return best;
}

}  // namespace skintwin
