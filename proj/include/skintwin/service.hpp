#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "io.hpp"
#include "logic.hpp"
#include "stimulus.hpp"

// after Eigen: <resolv.h> defines a _res macro that collides with Eigen parameter names
#include <httplib.h>

namespace skintwin::service {

using json = nlohmann::ordered_json;

/// Seconds since an arbitrary origin.
using Clock = std::function<double()>;

inline Clock steady_clock() {
    return [] {
        using namespace std::chrono;
        return duration<double>(steady_clock::now().time_since_epoch()).count();
    };
}

/// Request problem reported back to the client with an HTTP status and the offending field.
struct ApiError {
    int status = 400;
    std::string message;
    std::string field;
};

struct SessionConfig {
    ElectrodePair pair{Electrode::BL, Electrode::C};
    double samplePeriod = 0.2;
    double probeFrequency = 1000.0;
    NoiseSettings noise{0.02, 0.0, 0.0};
    std::uint64_t seed = 0;
};

/// One live skin: presses arrive in real time and samples accumulate on the wall clock.
class Session {
public:
    Session(std::string id, const Network& net, const MaterialParams& material, const PerturbCoeffs& coeffs,
            SessionConfig cfg, double created)
        : id_(std::move(id)), cfg_(cfg), created_(created), sim_(net, material, coeffs), rng_(cfg.seed) {}

    const std::string& id() const { return id_; }
    const SessionConfig& config() const { return cfg_; }
    double created() const { return created_; }
    std::mutex& mutex() { return mutex_; }
    Simulator& simulator() { return sim_; }

    /// Session time quantized down to the sample grid.
    double timestamp(double now) const {
        const double t = std::max(0.0, now - created_);
        return std::floor(t / cfg_.samplePeriod + 1e-9) * cfg_.samplePeriod;
    }

    /// Computes every sample whose time has passed.
    void advance(double now) {
        const double t = std::max(0.0, now - created_);
        const auto due = static_cast<std::size_t>(std::floor(t / cfg_.samplePeriod + 1e-9)) + 1;
        std::normal_distribution<double> gauss(0.0, 1.0);
        while (samples_.size() < due) {
            const double ts = static_cast<double>(samples_.size()) * cfg_.samplePeriod;
            ComplexZ z = sim_.impedance_at(cfg_.pair, cfg_.probeFrequency, presses_, ts);
            if (cfg_.noise.randomWalk > 0.0 && !samples_.empty()) {
                const double step = cfg_.noise.randomWalk * std::sqrt(cfg_.samplePeriod);
                walkR_ += step * gauss(rng_);
                walkX_ += step * gauss(rng_);
            }
            double nr = 0.0, nx = 0.0;
            if (cfg_.noise.sigma > 0.0) {
                nr = cfg_.noise.sigma * gauss(rng_);
                nx = cfg_.noise.sigma * gauss(rng_);
            }
            const double drift = cfg_.noise.driftRate * ts;
            samples_.push_back({z.resistance + drift + walkR_ + nr, z.reactance + drift + walkX_ + nx});
        }
    }

    /// Starts or ends a press at the current quantized time; returns that time.
    double press(CellId cell, double mass, bool down, double now) {
        advance(now);
        // activation is zero at tOn and continuous at tOff, so the sample at t is already correct
        const double t = timestamp(now);
        if (down) {
            for (const auto& p : presses_)
                if (p.cell == cell && !std::isfinite(p.tOff))
                    throw ApiError{409, "cell " + cell.label() + " is already pressed", "cell"};
            presses_.push_back(Press{cell, mass, t, std::numeric_limits<double>::infinity()});
        } else {
            bool found = false;
            for (auto& p : presses_)
                if (p.cell == cell && !std::isfinite(p.tOff)) {
                    p.tOff = std::max(t, p.tOn + cfg_.samplePeriod);
                    found = true;
                }
            if (!found) throw ApiError{409, "cell " + cell.label() + " is not pressed", "cell"};
        }
        return t;
    }

    const std::vector<ComplexZ>& samples() const { return samples_; }
    const std::vector<Press>& presses() const { return presses_; }

private:
    std::string id_;
    SessionConfig cfg_;
    double created_;
    Simulator sim_;
    std::mt19937_64 rng_;
    double walkR_ = 0.0;
    double walkX_ = 0.0;
    std::vector<ComplexZ> samples_;
    std::vector<Press> presses_;
    std::mutex mutex_;
};

class SessionStore {
public:
    SessionStore(Network net, MaterialParams material, PerturbCoeffs coeffs, Clock clock = steady_clock())
        : net_(std::move(net)), material_(material), coeffs_(coeffs), clock_(std::move(clock)),
          idRng_(std::random_device{}()) {}

    double now() const { return clock_(); }
    const Network& network() const { return net_; }

    std::shared_ptr<Session> create(const SessionConfig& cfg) {
        std::lock_guard lock(mutex_);
        std::string id;
        do {
            char buf[17];
            std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(idRng_()));
            id = buf;
        } while (sessions_.count(id));
        auto s = std::make_shared<Session>(id, net_, material_, coeffs_, cfg, now());
        sessions_.emplace(id, s);
        return s;
    }

    std::shared_ptr<Session> find(const std::string& id) const {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw ApiError{404, "unknown session '" + id + "'", "id"};
        return it->second;
    }

    void erase(const std::string& id) {
        std::lock_guard lock(mutex_);
        if (!sessions_.erase(id)) throw ApiError{404, "unknown session '" + id + "'", "id"};
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return sessions_.size();
    }

private:
    Network net_;
    MaterialParams material_;
    PerturbCoeffs coeffs_;
    Clock clock_;
    mutable std::mutex mutex_;
    std::mt19937_64 idRng_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
};

namespace detail {

inline json parse_body(const httplib::Request& req, bool allowEmpty) {
    if (req.body.empty()) {
        if (allowEmpty) return json::object();
        throw ApiError{400, "request body is empty", "$"};
    }
    try {
        json j = json::parse(req.body);
        if (!j.is_object()) throw ApiError{400, "body must be a JSON object", "$"};
        return j;
    } catch (const json::parse_error& e) {
        throw ApiError{400, std::string("invalid JSON: ") + e.what(), "$"};
    }
}

inline void only_fields(const json& j, std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ApiError{400, "unknown field", it.key()};
    }
}

inline std::string text_field(const json& j, const char* key, bool required) {
    if (!j.contains(key)) {
        if (required) throw ApiError{400, "missing field", key};
        return {};
    }
    if (!j[key].is_string()) throw ApiError{400, "expected a string", key};
    return j[key].get<std::string>();
}

inline std::optional<double> number_field(const json& j, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    if (!j[key].is_number()) throw ApiError{400, "expected a number", key};
    return j[key].get<double>();
}

/// Cell labels that parse but name no square are a semantic error (422), not a syntax error.
inline CellId cell_field(const json& j, const char* key) {
    const std::string label = text_field(j, key, true);
    try {
        return CellId::parse(label);
    } catch (const DomainError& e) {
        throw ApiError{422, e.what(), key};
    }
}

inline void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

}  // namespace detail

/// Routes of the session API on an httplib server.
class Service {
public:
    explicit Service(SessionStore& store) : store_(&store) { routes(); }

    httplib::Server& server() { return server_; }

    bool listen(const std::string& host, int port) { return server_.listen(host, port); }
    int bind_any(const std::string& host) { return server_.bind_to_any_port(host); }
    bool listen_after_bind() { return server_.listen_after_bind(); }
    void stop() { server_.stop(); }

private:
    template <class Fn>
    httplib::Server::Handler wrap(Fn fn) {
        return [fn](const httplib::Request& req, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Origin", "*");
            try {
                fn(req, res);
            } catch (const ApiError& e) {
                detail::reply(res, e.status, {{"error", e.message}, {"field", e.field}});
            } catch (const Error& e) {
                detail::reply(res, 422, {{"error", e.what()}});
            } catch (const std::exception& e) {
                detail::reply(res, 500, {{"error", e.what()}});
            }
        };
    }

    void routes() {
        using namespace detail;
        SessionStore* store = store_;

        server_.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Origin", "*");
            res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.status = 204;
        });

        server_.Post("/api/sessions", wrap([store](const httplib::Request& req, httplib::Response& res) {
            json body = parse_body(req, true);
            only_fields(body, {"seed", "pair", "samplePeriod_s", "noiseSigma_ohm"});
            SessionConfig cfg;
            if (body.contains("seed")) {
                if (!body["seed"].is_number_unsigned()) throw ApiError{400, "expected a non-negative integer", "seed"};
                cfg.seed = body["seed"].get<std::uint64_t>();
            }
            if (body.contains("pair")) {
                try {
                    cfg.pair = ElectrodePair::parse(text_field(body, "pair", true));
                } catch (const DomainError& e) {
                    throw ApiError{400, e.what(), "pair"};
                }
            }
            if (auto v = number_field(body, "samplePeriod_s")) {
                if (!(*v >= 0.01 && *v <= 10.0)) throw ApiError{400, "must lie within [0.01, 10] s", "samplePeriod_s"};
                cfg.samplePeriod = *v;
            }
            if (auto v = number_field(body, "noiseSigma_ohm")) {
                if (!(*v >= 0.0)) throw ApiError{400, "must be non-negative", "noiseSigma_ohm"};
                cfg.noise.sigma = *v;
            }
            auto s = store->create(cfg);
            reply(res, 201, {{"id", s->id()}, {"pair", cfg.pair.label()}, {"samplePeriod_s", cfg.samplePeriod},
                             {"seed", cfg.seed}});
        }));

        server_.Get(R"(/api/sessions/([^/]+)/network)",
                    wrap([store](const httplib::Request& req, httplib::Response& res) {
                        store->find(req.matches[1]);
                        reply(res, 200, io::network_to_json(store->network()));
                    }));

        server_.Post(R"(/api/sessions/([^/]+)/press)", wrap([store](const httplib::Request& req,
                                                                   httplib::Response& res) {
            auto s = store->find(req.matches[1]);
            json body = parse_body(req, false);
            only_fields(body, {"cell", "mass_g", "action"});
            const std::string action = text_field(body, "action", true);
            if (action != "down" && action != "up") throw ApiError{400, "must be \"down\" or \"up\"", "action"};
            double mass = 100.0;
            if (auto v = number_field(body, "mass_g")) {
                if (!(*v > 0.0 && *v <= 10000.0)) throw ApiError{400, "must lie within (0, 10000] g", "mass_g"};
                mass = *v;
            }
            const CellId cell = cell_field(body, "cell");
            std::lock_guard lock(s->mutex());
            const double t = s->press(cell, mass, action == "down", store->now());
            reply(res, 200, {{"cell", cell.label()}, {"mass_g", mass}, {"action", action}, {"t_s", t},
                             {"sample", s->samples().size()}});
        }));

        server_.Get(R"(/api/sessions/([^/]+)/series)", wrap([store](const httplib::Request& req,
                                                                   httplib::Response& res) {
            auto s = store->find(req.matches[1]);
            std::size_t since = 0;
            if (req.has_param("sinceSample")) {
                const std::string v = req.get_param_value("sinceSample");
                try {
                    std::size_t used = 0;
                    const long long n = std::stoll(v, &used);
                    if (used != v.size() || n < 0) throw std::invalid_argument(v);
                    since = static_cast<std::size_t>(n);
                } catch (const std::exception&) {
                    throw ApiError{400, "expected a non-negative integer", "sinceSample"};
                }
            }
            std::lock_guard lock(s->mutex());
            s->advance(store->now());
            const auto& samples = s->samples();
            json list = json::array();
            const double dt = s->config().samplePeriod;
            for (std::size_t i = since; i < samples.size(); ++i)
                list.push_back({{"i", i}, {"t_s", static_cast<double>(i) * dt}, {"R_ohm", samples[i].resistance},
                                {"X_ohm", samples[i].reactance}});
            reply(res, 200, {{"head", samples.size()}, {"sinceSample", since}, {"samplePeriod_s", dt},
                             {"samples", list}});
        }));

        server_.Get(R"(/api/sessions/([^/]+)/families)", wrap([store](const httplib::Request& req,
                                                                     httplib::Response& res) {
            auto s = store->find(req.matches[1]);
            ElectrodePair pair = s->config().pair;
            if (req.has_param("pair")) {
                try {
                    pair = ElectrodePair::parse(req.get_param_value("pair"));
                } catch (const DomainError& e) {
                    throw ApiError{400, e.what(), "pair"};
                }
            }
            std::lock_guard lock(s->mutex());
            const auto& fam = s->simulator().families(pair);
            json cells = json::object();
            for (const auto& cell : CellId::all())
                cells[cell.label()] = to_string(fam[static_cast<std::size_t>(cell.index())]);
            reply(res, 200, {{"pair", pair.label()}, {"families", cells}});
        }));

        server_.Post(R"(/api/sessions/([^/]+)/logic)", wrap([store](const httplib::Request& req,
                                                                   httplib::Response& res) {
            auto s = store->find(req.matches[1]);
            json body = parse_body(req, false);
            only_fields(body, {"cellA", "cellB", "thresholds"});
            const CellId a = cell_field(body, "cellA");
            const CellId b = cell_field(body, "cellB");
            if (a == b) throw ApiError{422, "cellA and cellB must differ", "cellB"};
            std::vector<double> thresholds{0.13, 5.79};
            if (body.contains("thresholds")) {
                if (!body["thresholds"].is_array()) throw ApiError{400, "expected an array", "thresholds"};
                thresholds.clear();
                for (const auto& v : body["thresholds"]) {
                    if (!v.is_number()) throw ApiError{400, "expected numbers", "thresholds"};
                    thresholds.push_back(v.get<double>());
                }
            }
            std::lock_guard lock(s->mutex());
            MultitouchOptions opt;
            opt.seed = s->config().seed;
            opt.noise.sigma = s->config().noise.sigma;
            auto result = run_multitouch(s->simulator(), s->config().pair, a, b, opt);
            json report = io::gate_report(result, thresholds);
            report["cellA"] = a.label();
            report["cellB"] = b.label();
            report["pair"] = s->config().pair.label();
            reply(res, 200, report);
        }));

        server_.Delete(R"(/api/sessions/([^/]+))", wrap([store](const httplib::Request& req, httplib::Response& res) {
            store->erase(req.matches[1]);
            res.status = 204;
        }));
    }

    SessionStore* store_;
    httplib::Server server_;
};

}  // namespace skintwin::service
