#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "circuit.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "localization.hpp"
#include "logic.hpp"
#include "stimulus.hpp"

namespace skintwin::io {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& field) {
    double v = 0.0;
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw FormatError(field, "not a number: '" + std::string(s) + "'");
    return v;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
}

inline json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(what, std::string("invalid JSON: ") + e.what());
    }
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Strict field access: every error names the JSON path

namespace detail {

inline std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

inline void expect_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw FormatError(path.empty() ? "$" : path, "expected an object");
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& path) {
    expect_object(j, path);
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            if (it.key() == a) ok = true;
        if (!ok) throw FormatError(join(path, it.key()), "unknown field");
    }
}

inline const json& field(const json& j, const std::string& key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) throw FormatError(join(path, key), "missing field");
    return *it;
}

inline double number(const json& j, const std::string& key, const std::string& path) {
    const json& v = field(j, key, path);
    if (!v.is_number()) throw FormatError(join(path, key), "expected a number");
    return v.get<double>();
}

inline double number_or(const json& j, const std::string& key, const std::string& path, double fallback) {
    return j.contains(key) ? number(j, key, path) : fallback;
}

inline int integer(const json& j, const std::string& key, const std::string& path) {
    const json& v = field(j, key, path);
    if (!v.is_number_integer()) throw FormatError(join(path, key), "expected an integer");
    return v.get<int>();
}

inline std::string string(const json& j, const std::string& key, const std::string& path) {
    const json& v = field(j, key, path);
    if (!v.is_string()) throw FormatError(join(path, key), "expected a string");
    return v.get<std::string>();
}

inline void check_schema(const json& j, const std::string& path) {
    expect_object(j, path);
    const int version = integer(j, "schemaVersion", path);
    if (version != kSchemaVersion)
        throw FormatError(join(path, "schemaVersion"), "unsupported version " + std::to_string(version));
}

/// Runs `fn` and re-labels domain errors with the field they came from.
template <class Fn>
auto guarded(const std::string& path, Fn fn) {
    try {
        return fn();
    } catch (const FormatError&) {
        throw;
    } catch (const DomainError& e) {
        throw FormatError(path, e.what());
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Network

inline json network_to_json(const Network& net) {
    json j;
    j["schemaVersion"] = kSchemaVersion;
    json nodes = json::array();
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
        json n;
        n["id"] = i;
        n["x_mm"] = net.nodes[i].x;
        n["y_mm"] = net.nodes[i].y;
        if (!net.labels[i].empty()) n["label"] = net.labels[i];
        nodes.push_back(n);
    }
    j["nodes"] = nodes;
    json edges = json::array();
    for (const auto& e : net.edges) edges.push_back({{"a", e[0]}, {"b", e[1]}});
    j["edges"] = edges;
    j["electrodes"] = {{"BL", net.electrodes[0]}, {"C", net.electrodes[1]}, {"TR", net.electrodes[2]}};
    j["channel"] = {{"width_mm", net.channelWidth}, {"depth_mm", net.channelDepth}};
    return j;
}

inline Network network_from_json(const json& j) {
    using namespace detail;
    check_schema(j, "");
    reject_unknown(j, {"schemaVersion", "nodes", "edges", "electrodes", "channel"}, "");
    Network net;
    const json& nodes = field(j, "nodes", "");
    if (!nodes.is_array()) throw FormatError("nodes", "expected an array");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::string path = "nodes[" + std::to_string(i) + "]";
        reject_unknown(nodes[i], {"id", "x_mm", "y_mm", "label"}, path);
        if (integer(nodes[i], "id", path) != static_cast<int>(i))
            throw FormatError(path + ".id", "ids must run 0, 1, 2, ... in order");
        net.nodes.push_back({number(nodes[i], "x_mm", path), number(nodes[i], "y_mm", path)});
        std::string label;
        if (nodes[i].contains("label")) {
            label = string(nodes[i], "label", path);
            guarded(path + ".label", [&] { return CellId::parse(label); });
        }
        net.labels.push_back(label);
    }
    const json& edges = field(j, "edges", "");
    if (!edges.is_array()) throw FormatError("edges", "expected an array");
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const std::string path = "edges[" + std::to_string(i) + "]";
        reject_unknown(edges[i], {"a", "b"}, path);
        std::array<int, 2> e{integer(edges[i], "a", path), integer(edges[i], "b", path)};
        for (int k = 0; k < 2; ++k)
            if (e[k] < 0 || e[k] >= static_cast<int>(net.nodes.size()) || e[0] == e[1])
                throw FormatError(path, "edge references an invalid node");
        net.edges.push_back(e);
    }
    const json& el = field(j, "electrodes", "");
    reject_unknown(el, {"BL", "C", "TR"}, "electrodes");
    net.electrodes = {integer(el, "BL", "electrodes"), integer(el, "C", "electrodes"), integer(el, "TR", "electrodes")};
    for (const char* name : {"BL", "C", "TR"}) {
        int node = integer(el, name, "electrodes");
        if (node < 0 || node >= static_cast<int>(net.nodes.size()))
            throw FormatError(std::string("electrodes.") + name, "not a node index");
    }
    const json& ch = field(j, "channel", "");
    reject_unknown(ch, {"width_mm", "depth_mm"}, "channel");
    net.channelWidth = number(ch, "width_mm", "channel");
    net.channelDepth = number(ch, "depth_mm", "channel");
    guarded("channel", [&] {
        net.validate();
        return 0;
    });
    return net;
}

inline std::string save_network(const Network& net) { return dump(network_to_json(net)); }
inline Network load_network(const std::string& text) { return network_from_json(parse_json(text, "network")); }

// ---------------------------------------------------------------------------
// Material and perturbation coefficients

inline json material_to_json(const MaterialParams& m) {
    return {{"conductivity_S_per_m", m.conductivity},
            {"inductancePerLength_H_per_m", m.inductancePerLength},
            {"shuntCapacitancePerArea_F_per_m2", m.shuntCapacitancePerArea},
            {"contactResistance_ohm", m.contactResistance},
            {"contactInductance_H", m.contactInductance},
            {"segmentLength_mm", m.segmentLength}};
}

inline MaterialParams material_from_json(const json& j, const std::string& path) {
    using namespace detail;
    reject_unknown(j,
                   {"conductivity_S_per_m", "inductancePerLength_H_per_m", "shuntCapacitancePerArea_F_per_m2",
                    "contactResistance_ohm", "contactInductance_H", "segmentLength_mm"},
                   path);
    MaterialParams d;
    MaterialParams m;
    m.conductivity = number_or(j, "conductivity_S_per_m", path, d.conductivity);
    m.inductancePerLength = number_or(j, "inductancePerLength_H_per_m", path, d.inductancePerLength);
    m.shuntCapacitancePerArea = number_or(j, "shuntCapacitancePerArea_F_per_m2", path, d.shuntCapacitancePerArea);
    m.contactResistance = number_or(j, "contactResistance_ohm", path, d.contactResistance);
    m.contactInductance = number_or(j, "contactInductance_H", path, d.contactInductance);
    m.segmentLength = number_or(j, "segmentLength_mm", path, d.segmentLength);
    guarded(path.empty() ? "$" : path, [&] {
        m.validate();
        return 0;
    });
    return m;
}

inline json coeffs_to_json(const PerturbCoeffs& c) {
    return {{"pathResistanceFactor", c.pathResistanceFactor},
            {"squeezeResistanceFactor", c.squeezeResistanceFactor},
            {"squeezeCapacitanceFactor", c.squeezeCapacitanceFactor},
            {"pumpInductanceFactor", c.pumpInductanceFactor},
            {"inductanceFactor", c.inductanceFactor},
            {"timeConstant_s", c.timeConstant},
            {"footprintLength_mm", c.footprintLength},
            {"releaseResidual", c.releaseResidual},
            {"stiffness", c.stiffness}};
}

inline PerturbCoeffs coeffs_from_json(const json& j, const std::string& path) {
    using namespace detail;
    PerturbCoeffs d;
    PerturbCoeffs c;
    c.pathResistanceFactor = number_or(j, "pathResistanceFactor", path, d.pathResistanceFactor);
    c.squeezeResistanceFactor = number_or(j, "squeezeResistanceFactor", path, d.squeezeResistanceFactor);
    c.squeezeCapacitanceFactor = number_or(j, "squeezeCapacitanceFactor", path, d.squeezeCapacitanceFactor);
    c.pumpInductanceFactor = number_or(j, "pumpInductanceFactor", path, d.pumpInductanceFactor);
    c.inductanceFactor = number_or(j, "inductanceFactor", path, d.inductanceFactor);
    c.timeConstant = number_or(j, "timeConstant_s", path, d.timeConstant);
    c.footprintLength = number_or(j, "footprintLength_mm", path, d.footprintLength);
    c.releaseResidual = number_or(j, "releaseResidual", path, d.releaseResidual);
    c.stiffness = number_or(j, "stiffness", path, d.stiffness);
    guarded(path.empty() ? "$" : path, [&] {
        c.validate();
        return 0;
    });
    return c;
}

/// Where a coefficient set came from: the multitouch experiment it was fitted to.
struct CalibrationRecord {
    ElectrodePair pair;
    CellId cellA{0, 1};
    CellId cellB{0, 2};
    GateOutputs target;
    double tolerance = 0.0;

    bool operator==(const CalibrationRecord&) const = default;
};

struct CoeffsFile {
    PerturbCoeffs coeffs;
    std::optional<MaterialParams> material;
    std::optional<CalibrationRecord> calibration;
    std::string note;

    bool operator==(const CoeffsFile&) const = default;
};

inline json levels_to_json(const GateOutputs& g) {
    return {{"O00", g.O00}, {"O01", g.O01}, {"O10", g.O10}, {"O11", g.O11}};
}

inline GateOutputs levels_from_json(const json& j, const std::string& path) {
    using namespace detail;
    reject_unknown(j, {"O00", "O01", "O10", "O11"}, path);
    return GateOutputs::from_levels(
        {number(j, "O00", path), number(j, "O01", path), number(j, "O10", path), number(j, "O11", path)});
}

inline std::string save_coeffs(const CoeffsFile& f) {
    json j;
    j["schemaVersion"] = kSchemaVersion;
    if (!f.note.empty()) j["note"] = f.note;
    j["coeffs"] = coeffs_to_json(f.coeffs);
    if (f.material) j["material"] = material_to_json(*f.material);
    if (f.calibration) {
        const auto& c = *f.calibration;
        j["calibration"] = {{"pair", c.pair.label()},
                            {"cellA", c.cellA.label()},
                            {"cellB", c.cellB.label()},
                            {"target", levels_to_json(c.target)},
                            {"tolerance_ohm", c.tolerance}};
    }
    return dump(j);
}

inline CoeffsFile load_coeffs(const std::string& text) {
    using namespace detail;
    json j = parse_json(text, "coeffs");
    check_schema(j, "");
    reject_unknown(j, {"schemaVersion", "note", "coeffs", "material", "calibration"}, "");
    CoeffsFile f;
    if (j.contains("note")) f.note = string(j, "note", "");
    const json& cj = field(j, "coeffs", "");
    reject_unknown(cj,
                   {"pathResistanceFactor", "squeezeResistanceFactor", "squeezeCapacitanceFactor",
                    "pumpInductanceFactor", "inductanceFactor", "timeConstant_s", "footprintLength_mm",
                    "releaseResidual", "stiffness"},
                   "coeffs");
    f.coeffs = coeffs_from_json(cj, "coeffs");
    if (j.contains("material")) f.material = material_from_json(j["material"], "material");
    if (j.contains("calibration")) {
        const json& c = j["calibration"];
        reject_unknown(c, {"pair", "cellA", "cellB", "target", "tolerance_ohm"}, "calibration");
        CalibrationRecord rec;
        rec.pair = guarded("calibration.pair", [&] { return ElectrodePair::parse(string(c, "pair", "calibration")); });
        rec.cellA = guarded("calibration.cellA", [&] { return CellId::parse(string(c, "cellA", "calibration")); });
        rec.cellB = guarded("calibration.cellB", [&] { return CellId::parse(string(c, "cellB", "calibration")); });
        rec.target = levels_from_json(field(c, "target", "calibration"), "calibration.target");
        rec.tolerance = number(c, "tolerance_ohm", "calibration");
        f.calibration = rec;
    }
    return f;
}

// ---------------------------------------------------------------------------
// Scenario

inline std::string save_scenario(const Scenario& sc) {
    json j;
    j["schemaVersion"] = kSchemaVersion;
    json presses = json::array();
    for (const auto& p : sc.presses)
        presses.push_back({{"cell", p.cell.label()}, {"mass_g", p.mass}, {"tOn_s", p.tOn}, {"tOff_s", p.tOff}});
    j["presses"] = presses;
    j["probeFrequency_hz"] = sc.probeFrequency;
    j["probeAmplitude_v"] = sc.probeAmplitude;
    j["samplePeriod_s"] = sc.samplePeriod;
    j["duration_s"] = sc.duration;
    j["pair"] = sc.pair.label();
    j["noise"] = {{"sigma_ohm", sc.noise.sigma},
                  {"driftRate_ohm_per_s", sc.noise.driftRate},
                  {"randomWalk_ohm_per_sqrt_s", sc.noise.randomWalk}};
    j["seed"] = sc.seed;
    return dump(j);
}

inline Scenario load_scenario(const std::string& text) {
    using namespace detail;
    json j = parse_json(text, "scenario");
    check_schema(j, "");
    reject_unknown(j,
                   {"schemaVersion", "presses", "probeFrequency_hz", "probeAmplitude_v", "samplePeriod_s",
                    "duration_s", "pair", "noise", "seed"},
                   "");
    Scenario sc;
    const json& presses = field(j, "presses", "");
    if (!presses.is_array()) throw FormatError("presses", "expected an array");
    for (std::size_t i = 0; i < presses.size(); ++i) {
        const std::string path = "presses[" + std::to_string(i) + "]";
        reject_unknown(presses[i], {"cell", "mass_g", "tOn_s", "tOff_s"}, path);
        Press p;
        p.cell = guarded(path + ".cell", [&] { return CellId::parse(string(presses[i], "cell", path)); });
        p.mass = number_or(presses[i], "mass_g", path, 100.0);
        p.tOn = number(presses[i], "tOn_s", path);
        p.tOff = number(presses[i], "tOff_s", path);
        guarded(path, [&] {
            p.validate();
            return 0;
        });
        sc.presses.push_back(p);
    }
    sc.probeFrequency = number_or(j, "probeFrequency_hz", "", sc.probeFrequency);
    sc.probeAmplitude = number_or(j, "probeAmplitude_v", "", sc.probeAmplitude);
    sc.samplePeriod = number_or(j, "samplePeriod_s", "", sc.samplePeriod);
    sc.duration = number(j, "duration_s", "");
    if (j.contains("pair"))
        sc.pair = guarded("pair", [&] { return ElectrodePair::parse(string(j, "pair", "")); });
    if (j.contains("noise")) {
        const json& n = j["noise"];
        reject_unknown(n, {"sigma_ohm", "driftRate_ohm_per_s", "randomWalk_ohm_per_sqrt_s"}, "noise");
        sc.noise.sigma = number_or(n, "sigma_ohm", "noise", sc.noise.sigma);
        sc.noise.driftRate = number_or(n, "driftRate_ohm_per_s", "noise", sc.noise.driftRate);
        sc.noise.randomWalk = number_or(n, "randomWalk_ohm_per_sqrt_s", "noise", sc.noise.randomWalk);
    }
    if (j.contains("seed")) {
        const json& s = j["seed"];
        if (!s.is_number_unsigned()) throw FormatError("seed", "expected a non-negative integer");
        sc.seed = s.get<std::uint64_t>();
    }
    guarded("$", [&] {
        sc.validate();
        return 0;
    });
    return sc;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string series_to_csv(const TimeSeries& ts) {
    std::string out = "t_s,R_ohm,X_ohm\n";
    for (std::size_t i = 0; i < ts.size(); ++i)
        out += format_double(ts.time(i)) + "," + format_double(ts.samples[i].resistance) + "," +
               format_double(ts.samples[i].reactance) + "\n";
    return out;
}

namespace detail {

inline std::vector<std::vector<std::string>> split_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace detail

/// Reads t_s, R_ohm, X_ohm rows; the sampling must be uniform.
inline TimeSeries series_from_csv(const std::string& text, double probeFrequency = 1000.0) {
    auto rows = detail::split_csv(text);
    if (rows.empty()) throw FormatError("csv", "empty file");
    const std::vector<std::string> header{"t_s", "R_ohm", "X_ohm"};
    if (rows[0] != header) throw FormatError("csv.header", "expected t_s,R_ohm,X_ohm");
    TimeSeries ts;
    ts.probeFrequency = probeFrequency;
    std::vector<double> t;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const std::string where = "csv.row[" + std::to_string(i) + "]";
        if (rows[i].size() != 3) throw FormatError(where, "expected 3 columns");
        t.push_back(parse_double(rows[i][0], where + ".t_s"));
        ts.samples.push_back(
            {parse_double(rows[i][1], where + ".R_ohm"), parse_double(rows[i][2], where + ".X_ohm")});
    }
    if (t.size() < 2) throw FormatError("csv", "need at least 2 samples");
    ts.t0 = t[0];
    ts.samplePeriod = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    if (!(ts.samplePeriod > 0.0)) throw FormatError("csv.t_s", "time must increase");
    for (std::size_t i = 0; i < t.size(); ++i)
        if (std::abs(t[i] - ts.time(i)) > 1e-6 * std::max(1.0, std::abs(t[i])))
            throw FormatError("csv.row[" + std::to_string(i + 1) + "].t_s", "sampling is not uniform");
    return ts;
}

inline std::string sweep_to_csv(const std::vector<SweepPoint>& pts) {
    std::string out = "freq_hz,R_ohm,X_ohm,Zmod_ohm,Zphase_deg\n";
    for (const auto& p : pts)
        out += format_double(p.freqHz) + "," + format_double(p.z.resistance) + "," + format_double(p.z.reactance) +
               "," + format_double(p.z.magnitude()) + "," + format_double(p.z.phase_deg()) + "\n";
    return out;
}

inline std::string iv_to_csv(const std::vector<IvPoint>& pts) {
    std::string out = "v_volt,i_amp\n";
    for (const auto& p : pts) out += format_double(p.volts) + "," + format_double(p.amps) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Reports

inline json event_to_json(const Event& ev) {
    return {{"tPeak_s", ev.tPeak}, {"deltaR_ohm", ev.deltaR}, {"deltaX_ohm", ev.deltaX}, {"width_s", ev.width}};
}

inline json localization_to_json(const Event& ev, const LocalizationResult& res, std::size_t limit = 10) {
    json c = json::array();
    for (std::size_t i = 0; i < res.candidates.size() && i < limit; ++i)
        c.push_back({{"cell", res.candidates[i].cell.label()}, {"score", res.candidates[i].score}});
    return {{"event", event_to_json(ev)}, {"family", to_string(res.family)}, {"candidates", c}};
}

inline json truth_table_to_json(const TruthTable& t) {
    return {{"f00", t(0, 0) ? 1 : 0}, {"f01", t(0, 1) ? 1 : 0}, {"f10", t(1, 0) ? 1 : 0},
            {"f11", t(1, 1) ? 1 : 0}, {"gate", t.name()}};
}

inline json gate_report(const MultitouchResult& r, const std::vector<double>& thresholds) {
    json j;
    j["schemaVersion"] = kSchemaVersion;
    j["outputs"] = levels_to_json(r.outputs);
    const auto& u = r.outputs.uncertainty;
    j["uncertainties"] = {{"O00", u[0]}, {"O01", u[1]}, {"O10", u[2]}, {"O11", u[3]}};
    j["rest"] = {{"preExperimentReactance_ohm", r.preRestReactance},
                 {"postExperimentReactance_ohm", r.postRestReactance},
                 {"O00_preExperiment", 0.0},
                 {"O00_postExperiment", r.outputs.O00}};
    json gates = json::array();
    for (double T : thresholds) {
        json g = truth_table_to_json(threshold_gate(r.outputs, T));
        g["threshold_ohm"] = T;
        gates.push_back(g);
    }
    j["thresholds"] = gates;
    json realizable = json::array();
    for (const auto& t : realizable_gates(r.outputs)) realizable.push_back(t.name());
    j["realizableGates"] = realizable;
    return j;
}

/// 2x2 grid with x down the rows and y across the columns.
inline std::string truth_grid(const TruthTable& t, double T) {
    std::string s = "T = " + format_double(T) + "  (" + t.name() + ")\n";
    s += "        y=0  y=1\n";
    for (int x = 0; x < 2; ++x)
        s += "  x=" + std::to_string(x) + "    " + std::to_string(t(x, 0) ? 1 : 0) + "    " +
             std::to_string(t(x, 1) ? 1 : 0) + "\n";
    return s;
}

}  // namespace skintwin::io
