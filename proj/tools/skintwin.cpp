// skintwin: command-line front end for the channel-network skin simulator.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <skintwin/default_network.hpp>
#include <skintwin/io.hpp>
#include <skintwin/localization.hpp>
#include <skintwin/logic.hpp>
#include <skintwin/service.hpp>
#include <skintwin/svg.hpp>

using namespace skintwin;

namespace {

struct Inputs {
    std::string network;  // empty: built-in default
    std::string coeffs;   // empty: defaults

    Network load_network() const {
        return network.empty() ? default_network() : io::load_network(io::read_text(network));
    }
    io::CoeffsFile load_coeffs() const {
        if (coeffs.empty()) return {};
        return io::load_coeffs(io::read_text(coeffs));
    }
};

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-")
        std::cout << text;
    else
        io::write_text(path, text);
}

ElectrodePair pair_arg(const std::string& s) {
    try {
        return ElectrodePair::parse(s);
    } catch (const DomainError& e) {
        throw FormatError("--pair", e.what());
    }
}

CellId cell_arg(const std::string& s, const char* flag) {
    try {
        return CellId::parse(s);
    } catch (const DomainError& e) {
        throw FormatError(flag, e.what());
    }
}

std::vector<double> list_arg(const std::string& s, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(io::parse_double(item, flag));
    return out;
}

int default_port() {
    if (const char* p = std::getenv("SKINTWIN_PORT")) {
        try {
            return std::stoi(p);
        } catch (const std::exception&) {
            throw FormatError("SKINTWIN_PORT", std::string("not a port number: '") + p + "'");
        }
    }
    return 8080;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator for a channel-network resistive skin"};
    app.set_config("--config", "", "TOML/INI file with option values");
    app.require_subcommand(1);

    Inputs in;
    auto network_opt = [&](CLI::App* sub) {
        sub->add_option("--network", in.network, "network file (default: built-in network)");
    };
    auto coeffs_opt = [&](CLI::App* sub) {
        sub->add_option("--coeffs", in.coeffs, "coefficient file (default: built-in coefficients)");
    };

    // gen-network
    auto* gen = app.add_subcommand("gen-network", "seeded random network");
    std::uint64_t seed = 0;
    int count = 25;
    double minSep = 15.0;
    std::string out;
    gen->add_option("--seed", seed)->required();
    gen->add_option("--count", count, "node count")->capture_default_str();
    gen->add_option("--min-separation", minSep, "mm")->capture_default_str();
    gen->add_option("-o,--out", out, "output file (default: stdout)");

    // show-families
    auto* fam = app.add_subcommand("show-families", "SVG map of the response family of every cell");
    std::string pairText = "BL-C";
    network_opt(fam);
    fam->add_option("--pair", pairText)->capture_default_str();
    fam->add_option("-o,--out", out, "SVG file (default: stdout)");

    // sweep
    auto* sw = app.add_subcommand("sweep", "impedance spectrum at rest");
    double fLow = 20.0, fHigh = 2e6;
    int points = 50;
    std::string csvOut, svgOut;
    network_opt(sw);
    coeffs_opt(sw);
    sw->add_option("--pair", pairText)->capture_default_str();
    sw->add_option("--from", fLow, "Hz")->capture_default_str();
    sw->add_option("--to", fHigh, "Hz")->capture_default_str();
    sw->add_option("--points", points)->capture_default_str();
    sw->add_option("--csv", csvOut, "CSV file (default: stdout)");
    sw->add_option("--svg", svgOut, "SVG plot");

    // simulate
    auto* sim = app.add_subcommand("simulate", "time series of a press scenario");
    std::string scenarioPath;
    network_opt(sim);
    coeffs_opt(sim);
    sim->add_option("scenario", scenarioPath, "scenario file")->required();
    sim->add_option("--csv", csvOut, "CSV file (default: stdout)");
    sim->add_option("--svg", svgOut, "SVG plot");

    // localize
    auto* loc = app.add_subcommand("localize", "locate the press behind the strongest event of a series");
    std::string seriesPath, reportOut;
    double freq = 1000.0;
    std::vector<std::string> baselines;
    network_opt(loc);
    coeffs_opt(loc);
    loc->add_option("series", seriesPath, "series CSV")->required();
    loc->add_option("--pair", pairText)->capture_default_str();
    loc->add_option("--frequency", freq, "probe frequency of the series, Hz")->capture_default_str();
    loc->add_option("--baseline", baselines, "quiescent window FROM:TO in s (default: first and last 10%)");
    loc->add_option("-o,--out", reportOut, "JSON report (default: stdout)");
    loc->add_option("--svg", svgOut, "SVG score map");

    // logic
    auto* lg = app.add_subcommand("logic", "two-press protocol and threshold gates");
    std::string cellA, cellB, thresholdText = "0.13,5.79";
    double sigma = 0.02;
    std::optional<std::string> pairOverride;
    network_opt(lg);
    coeffs_opt(lg);
    lg->add_option("--cell-a", cellA, "first cell (default: from the coefficient file)");
    lg->add_option("--cell-b", cellB, "second cell (default: from the coefficient file)");
    lg->add_option("--pair", pairOverride, "electrode pair (default: from the coefficient file, else BL-C)");
    lg->add_option("--thresholds", thresholdText, "comma-separated, ohm")->capture_default_str();
    lg->add_option("--noise", sigma, "measurement noise sigma, ohm")->capture_default_str();
    lg->add_option("--seed", seed)->capture_default_str();
    lg->add_option("-o,--out", reportOut, "JSON report (default: stdout)");
    lg->add_option("--svg", svgOut, "SVG trace of the protocol");

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "fit coefficients to four target levels");
    std::string targetText;
    double tolerance = 0.05;
    int budget = 5000;
    std::string note;
    network_opt(cal);
    coeffs_opt(cal);
    cal->add_option("--cell-a", cellA)->required();
    cal->add_option("--cell-b", cellB)->required();
    cal->add_option("--pair", pairText)->capture_default_str();
    cal->add_option("--target", targetText, "O00,O01,O10,O11 in ohm")->required();
    cal->add_option("--tolerance", tolerance, "ohm")->capture_default_str();
    cal->add_option("--budget", budget, "forward evaluations")->capture_default_str();
    cal->add_option("--note", note);
    cal->add_option("-o,--out", out, "coefficient file (default: stdout)");

    // serve
    auto* srv = app.add_subcommand("serve", "HTTP session API");
    int port = 0;
    std::string host = "127.0.0.1";
    network_opt(srv);
    coeffs_opt(srv);
    srv->add_option("--port", port, "TCP port (default: $SKINTWIN_PORT or 8080)");
    srv->add_option("--host", host)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*gen) {
            emit(out, io::save_network(generate_network(seed, count, minSep)));
        } else if (*fam) {
            const Network net = in.load_network();
            const ElectrodePair pair = pair_arg(pairText);
            emit(out, svg::family_map(net, pair, family_map(net, pair)));
        } else if (*sw) {
            const Network net = in.load_network();
            const auto cf = in.load_coeffs();
            const auto sys = AdmittanceSystem::from_network(net, cf.material.value_or(MaterialParams{}));
            const ElectrodePair pair = pair_arg(pairText);
            const auto pts = sweep(sys, pair, log_frequencies(fLow, fHigh, points));
            emit(csvOut, io::sweep_to_csv(pts));
            if (!svgOut.empty()) io::write_text(svgOut, svg::sweep_plot(pts, "Impedance " + pair.label()));
        } else if (*sim) {
            const Network net = in.load_network();
            const auto cf = in.load_coeffs();
            const Scenario sc = io::load_scenario(io::read_text(scenarioPath));
            Simulator s(net, cf.material.value_or(MaterialParams{}), cf.coeffs);
            const TimeSeries ts = s.simulate(sc);
            emit(csvOut, io::series_to_csv(ts));
            if (!svgOut.empty()) {
                std::vector<svg::Marker> marks;
                for (const auto& p : sc.presses) {
                    marks.push_back({p.tOn, p.cell.label() + " on"});
                    marks.push_back({p.tOff, p.cell.label() + " off"});
                }
                io::write_text(svgOut, svg::series_plot(ts, "Response " + sc.pair.label(), marks));
            }
        } else if (*loc) {
            const Network net = in.load_network();
            const auto cf = in.load_coeffs();
            const ElectrodePair pair = pair_arg(pairText);
            const TimeSeries raw = io::series_from_csv(io::read_text(seriesPath), freq);
            std::vector<Window> windows;
            if (baselines.empty()) {
                const double span = raw.time(raw.size() - 1) - raw.t0;
                windows = {{raw.t0, raw.t0 + 0.1 * span}, {raw.t0 + 0.9 * span, raw.time(raw.size() - 1)}};
            }
            for (const auto& b : baselines) {
                const auto colon = b.find(':');
                if (colon == std::string::npos) throw FormatError("--baseline", "expected FROM:TO, got '" + b + "'");
                windows.push_back({io::parse_double(b.substr(0, colon), "--baseline"),
                                   io::parse_double(b.substr(colon + 1), "--baseline")});
            }
            const TimeSeries corrected = subtract_drift(raw, windows);
            const Event ev = dominant_event(corrected, DetectOptions{});
            Simulator s(net, cf.material.value_or(MaterialParams{}), cf.coeffs);
            Localizer localizer(s, pair, freq);
            const auto res = localizer.localize(ev);
            emit(reportOut, io::dump(io::localization_to_json(ev, res)));
            if (!svgOut.empty()) io::write_text(svgOut, svg::score_map(net, pair, res));
        } else if (*lg) {
            const Network net = in.load_network();
            const auto cf = in.load_coeffs();
            ElectrodePair pair{Electrode::BL, Electrode::C};
            if (cf.calibration) pair = cf.calibration->pair;
            if (pairOverride) pair = pair_arg(*pairOverride);
            if (cellA.empty() && cf.calibration) cellA = cf.calibration->cellA.label();
            if (cellB.empty() && cf.calibration) cellB = cf.calibration->cellB.label();
            if (cellA.empty()) throw FormatError("--cell-a", "required when the coefficient file names no cells");
            if (cellB.empty()) throw FormatError("--cell-b", "required when the coefficient file names no cells");
            const CellId a = cell_arg(cellA, "--cell-a"), b = cell_arg(cellB, "--cell-b");
            const auto thresholds = list_arg(thresholdText, "--thresholds");
            MultitouchOptions opt;
            opt.noise.sigma = sigma;
            opt.seed = seed;
            const auto result = run_multitouch(net, cf.material.value_or(MaterialParams{}), cf.coeffs, pair, a, b, opt);
            io::json report = io::gate_report(result, thresholds);
            report["pair"] = pair.label();
            report["cellA"] = a.label();
            report["cellB"] = b.label();
            emit(reportOut, io::dump(report));
            if (!reportOut.empty() && reportOut != "-") {
                for (double T : thresholds) std::cout << io::truth_grid(threshold_gate(result.outputs, T), T) << "\n";
            }
            if (!svgOut.empty()) {
                const double P = opt.phaseDuration;
                io::write_text(svgOut, svg::series_plot(result.series, "Two-press protocol " + pair.label(),
                                                        {{P, a.label() + " on"},
                                                         {2 * P, b.label() + " on"},
                                                         {3 * P, a.label() + " off"},
                                                         {4 * P, b.label() + " off"}}));
            }
        } else if (*cal) {
            const Network net = in.load_network();
            const auto cf = in.load_coeffs();
            const ElectrodePair pair = pair_arg(pairText);
            const CellId a = cell_arg(cellA, "--cell-a"), b = cell_arg(cellB, "--cell-b");
            const auto levels = list_arg(targetText, "--target");
            if (levels.size() != 4) throw FormatError("--target", "expected 4 comma-separated levels");
            const GateOutputs target = GateOutputs::from_levels({levels[0], levels[1], levels[2], levels[3]});
            CalibrationOptions opt;
            opt.maxEvaluations = budget;
            const MaterialParams material = cf.material.value_or(MaterialParams{});
            const auto res = calibrate(net, material, pair, a, b, target, tolerance, cf.coeffs, opt);
            io::CoeffsFile file;
            file.coeffs = res.coeffs;
            file.material = cf.material;
            file.calibration = io::CalibrationRecord{pair, a, b, target, tolerance};
            file.note = note;
            emit(out, io::save_coeffs(file));
            std::cerr << "calibrated in " << res.evaluations << " evaluations, max residual "
                      << io::format_double(res.maxResidual) << " ohm\n";
        } else if (*srv) {
            const Network net = in.load_network();
            const auto cf = in.load_coeffs();
            if (port == 0) port = default_port();
            service::SessionStore store(net, cf.material.value_or(MaterialParams{}), cf.coeffs);
            service::Service api(store);
            std::cerr << "listening on http://" << host << ":" << port << "\n";
            if (!api.listen(host, port)) {
                std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
                return 1;
            }
        }
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const CalibrationInfeasibleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
