#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"
#include "stimulus.hpp"

namespace skintwin {

struct Event {
    double tPeak = 0.0;   // s
    double deltaR = 0.0;  // ohm, signed extremum
    double deltaX = 0.0;  // ohm, signed extremum
    double width = 0.0;   // s

    bool operator==(const Event&) const = default;
};

struct DetectOptions {
    double threshold = 0.1;     // ohm
    double minSeparation = 1.0; // s, closer excursions merge into one event
    int smoothing = 5;          // samples in the centered moving average
};

namespace detail {

inline std::vector<double> moving_average(const std::vector<double>& v, int window) {
    const int n = static_cast<int>(v.size());
    const int half = std::max(0, window / 2);
    std::vector<double> out(v.size());
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - half), hi = std::min(n - 1, i + half);
        double s = 0.0;
        for (int j = lo; j <= hi; ++j) s += v[j];
        out[i] = s / (hi - lo + 1);
    }
    return out;
}

}  // namespace detail

/// Excursions of a baseline-corrected series beyond the threshold, ordered by peak time.
inline std::vector<Event> detect_events(const TimeSeries& series, const DetectOptions& opt = {}) {
    if (series.size() < 3) throw InsufficientDataError("event detection needs at least 3 samples");
    if (!(opt.threshold > 0.0)) throw DomainError("detection threshold must be positive");
    std::vector<double> r, x;
    for (const auto& z : series.samples) {
        r.push_back(z.resistance);
        x.push_back(z.reactance);
    }
    r = detail::moving_average(r, opt.smoothing);
    x = detail::moving_average(x, opt.smoothing);

    std::vector<std::pair<std::size_t, std::size_t>> runs;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(std::abs(r[i]) > opt.threshold || std::abs(x[i]) > opt.threshold)) continue;
        if (!runs.empty() && series.time(i) - series.time(runs.back().second) <= opt.minSeparation)
            runs.back().second = i;
        else
            runs.push_back({i, i});
    }

    std::vector<Event> events;
    for (auto [lo, hi] : runs) {
        Event ev;
        std::size_t peak = lo;
        double best = -1.0;
        for (std::size_t i = lo; i <= hi; ++i) {
            if (std::abs(r[i]) > std::abs(ev.deltaR)) ev.deltaR = r[i];
            if (std::abs(x[i]) > std::abs(ev.deltaX)) ev.deltaX = x[i];
            const double m = std::max(std::abs(r[i]), std::abs(x[i]));
            if (m > best) {
                best = m;
                peak = i;
            }
        }
        ev.tPeak = series.time(peak);
        ev.width = static_cast<double>(hi - lo + 1) * series.samplePeriod;
        events.push_back(ev);
    }
    return events;
}

/// Family of a (deltaR, deltaX) signature. A component is featured when it reaches
/// noFeatureRatio of the larger one; equal magnitudes count as reactance-dominated.
inline Family classify_signature(const Event& ev, double noFeatureRatio = 0.2) {
    const double ar = std::abs(ev.deltaR), ax = std::abs(ev.deltaX);
    const bool resistive = ar > ax;
    const double top = std::max(ar, ax);
    const bool featR = ar >= noFeatureRatio * top;
    const bool featX = ax >= noFeatureRatio * top;
    if (top > 0.0) {
        if (ev.deltaR < 0.0 && resistive) return Family::RED;
        if (ev.deltaR > 0.0 && ev.deltaX > 0.0 && featR && featX) return Family::GRADIENT;
        if (!resistive && ev.deltaX < 0.0 && !featR) return Family::GREEN;
        if (!resistive && ev.deltaX > 0.0 && !featR) return Family::BLUE;
    }
    throw UnclassifiableEventError(ev.deltaR, ev.deltaX);
}

struct Candidate {
    CellId cell{0, 1};
    double score = 0.0;
};

struct LocalizationResult {
    Family family = Family::BLUE;
    std::vector<Candidate> candidates;
};

/// Timing of the reference press used for forward predictions.
struct ProbePress {
    double lead = 1.0;     // s of rest before the press
    double hold = 5.0;     // s
    double tail = 4.0;     // s of rest after release
    double mass = 100.0;   // g

    Scenario scenario(CellId cell, ElectrodePair pair, double freqHz = 1000.0) const {
        Scenario sc;
        sc.presses = {Press{cell, mass, lead, lead + hold}};
        sc.duration = lead + hold + tail;
        sc.pair = pair;
        sc.probeFrequency = freqHz;
        sc.noise = NoiseSettings::none();
        return sc;
    }

    /// Rest stretches before the press and at the end of the tail.
    std::vector<Window> quiescent() const {
        return {{0.0, lead - 0.2}, {lead + hold + tail / 2.0, lead + hold + tail}};
    }
};

/// Single event of a probe run: the strongest detection, or the raw extremum when nothing crosses the threshold.
inline Event dominant_event(const TimeSeries& corrected, const DetectOptions& opt) {
    auto events = detect_events(corrected, opt);
    if (!events.empty())
        return *std::max_element(events.begin(), events.end(), [](const Event& a, const Event& b) {
            return std::max(std::abs(a.deltaR), std::abs(a.deltaX)) < std::max(std::abs(b.deltaR), std::abs(b.deltaX));
        });
    DetectOptions tiny = opt;
    tiny.threshold = std::numeric_limits<double>::min();
    events = detect_events(corrected, tiny);
    if (events.empty()) return {};
    return events.front();
}

/// Ranks same-family cells by how closely their forward-simulated signature matches an event.
class Localizer {
public:
    Localizer(Simulator& sim, ElectrodePair pair, double freqHz = 1000.0, ProbePress probe = {},
              DetectOptions detect = {}, double noFeatureRatio = 0.2)
        : sim_(&sim), pair_(pair), freq_(freqHz), probe_(probe), detect_(detect), ratio_(noFeatureRatio) {}

    /// Noiseless signature of the probe press on a cell, through the same detection path as measurements.
    Event predicted(CellId cell) {
        auto it = cache_.find(cell.index());
        if (it != cache_.end()) return it->second;
        auto series = sim_->simulate(probe_.scenario(cell, pair_, freq_));
        auto corrected = subtract_drift(series, probe_.quiescent());
        Event ev = dominant_event(corrected, detect_);
        cache_.emplace(cell.index(), ev);
        return ev;
    }

    LocalizationResult localize(const Event& ev) {
        LocalizationResult res;
        res.family = classify_signature(ev, ratio_);
        const auto& fam = sim_->families(pair_);
        for (const auto& cell : CellId::all()) {
            if (fam[static_cast<std::size_t>(cell.index())] != res.family) continue;
            const Event p = predicted(cell);
            const double norm = std::hypot(p.deltaR, p.deltaX);
            const double miss = std::hypot(ev.deltaR - p.deltaR, ev.deltaX - p.deltaX);
            const double score = norm > 0.0 ? 1.0 / (1.0 + miss / norm) : 0.0;
            res.candidates.push_back({cell, score});
        }
        std::stable_sort(res.candidates.begin(), res.candidates.end(),
                         [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
        return res;
    }

    ElectrodePair pair() const { return pair_; }
    const ProbePress& probe() const { return probe_; }
    const DetectOptions& detect_options() const { return detect_; }

private:
    Simulator* sim_;
    ElectrodePair pair_;
    double freq_;
    ProbePress probe_;
    DetectOptions detect_;
    double ratio_;
    std::map<int, Event> cache_;
};

inline LocalizationResult localize(const Event& ev, const Network& net, ElectrodePair pair,
                                   const PerturbCoeffs& coeffs, const MaterialParams& material) {
    Simulator sim(net, material, coeffs);
    Localizer loc(sim, pair);
    return loc.localize(ev);
}

/// Rank (1-based) of a cell in a result, or 0 when absent.
inline int rank_of(const LocalizationResult& res, CellId cell) {
    for (std::size_t i = 0; i < res.candidates.size(); ++i)
        if (res.candidates[i].cell == cell) return static_cast<int>(i) + 1;
    return 0;
}

}  // namespace skintwin
