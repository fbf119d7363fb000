#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <thread>

#include <skintwin/default_network.hpp>
#include <skintwin/service.hpp>

using namespace skintwin;
using json = nlohmann::ordered_json;

namespace {

/// Server on an ephemeral port whose clock the test advances by hand.
struct Harness {
    std::atomic<double> now{1000.0};
    service::SessionStore store{default_network(), MaterialParams{}, PerturbCoeffs{}, [this] { return now.load(); }};
    service::Service api{store};
    int port = 0;
    std::thread thread;
    httplib::Client client{"127.0.0.1", 0};

    Harness() : client("127.0.0.1", (port = api.bind_any("127.0.0.1"))) {
        thread = std::thread([this] { api.listen_after_bind(); });
        api.server().wait_until_ready();
    }
    ~Harness() {
        api.stop();
        thread.join();
    }

    json post(const std::string& path, const json& body, int expect) {
        auto res = client.Post(path, body.dump(), "application/json");
        REQUIRE(res);
        INFO(path << " -> " << res->body);
        CHECK(res->status == expect);
        return res->body.empty() ? json() : json::parse(res->body);
    }
    json get(const std::string& path, int expect) {
        auto res = client.Get(path);
        REQUIRE(res);
        INFO(path << " -> " << res->body);
        CHECK(res->status == expect);
        return res->body.empty() ? json() : json::parse(res->body);
    }
    std::string create(std::uint64_t seed = 0) {
        return post("/api/sessions", {{"seed", seed}}, 201)["id"].get<std::string>();
    }
};

}  // namespace

TEST_CASE("session lifecycle") {
    Harness h;
    const std::string id = h.create();
    CHECK(id.size() == 16);
    CHECK(h.create() != id);
    CHECK(h.store.size() == 2);

    const json net = h.get("/api/sessions/" + id + "/network", 200);
    CHECK(io::network_from_json(net) == default_network());

    auto del = h.client.Delete("/api/sessions/" + id);
    REQUIRE(del);
    CHECK(del->status == 204);
    CHECK(h.store.size() == 1);
    h.get("/api/sessions/" + id + "/network", 404);
    auto again = h.client.Delete("/api/sessions/" + id);
    REQUIRE(again);
    CHECK(again->status == 404);
}

TEST_CASE("a held press shows up in the live series") {
    Harness h;
    const std::string id = h.create();
    h.now = 1002.0;
    const json ack = h.post("/api/sessions/" + id + "/press", {{"cell", "L9"}, {"mass_g", 100}, {"action", "down"}}, 200);
    CHECK(ack["t_s"] == 2.0);
    CHECK(ack["action"] == "down");
    h.now = 1003.0;
    const json page = h.get("/api/sessions/" + id + "/series", 200);
    const auto& samples = page["samples"];
    REQUIRE(samples.size() == 16);
    CHECK(page["head"] == 16);
    const double rest = samples[0]["X_ohm"].get<double>();
    double deviation = 0.0;
    for (const auto& s : samples) deviation = std::max(deviation, std::abs(s["X_ohm"].get<double>() - rest));
    CHECK(deviation > 0.1);

    h.post("/api/sessions/" + id + "/press", {{"cell", "L9"}, {"action", "up"}}, 200);
    h.post("/api/sessions/" + id + "/press", {{"cell", "L9"}, {"action", "up"}}, 409);
}

TEST_CASE("incremental pages concatenate to the full series") {
    Harness h;
    const std::string id = h.create(5);
    std::vector<json> paged;
    std::size_t since = 0;
    for (int step = 1; step <= 12; ++step) {
        h.now = 1000.0 + 0.7 * step;
        if (step == 3) h.post("/api/sessions/" + id + "/press", {{"cell", "C2"}, {"action", "down"}}, 200);
        if (step == 8) h.post("/api/sessions/" + id + "/press", {{"cell", "C2"}, {"action", "up"}}, 200);
        const json page = h.get("/api/sessions/" + id + "/series?sinceSample=" + std::to_string(since), 200);
        for (const auto& s : page["samples"]) paged.push_back(s);
        since = page["head"].get<std::size_t>();
    }
    const json full = h.get("/api/sessions/" + id + "/series?sinceSample=0", 200);
    REQUIRE(full["samples"].size() == paged.size());
    for (std::size_t i = 0; i < paged.size(); ++i) CHECK(full["samples"][i] == paged[i]);

    const json beyond = h.get("/api/sessions/" + id + "/series?sinceSample=100000", 200);
    CHECK(beyond["samples"].empty());
    CHECK(beyond["head"] == full["head"]);
}

TEST_CASE("sessions with different seeds are independent") {
    Harness h;
    const std::string a = h.create(1), b = h.create(2);
    h.now = 1004.0;
    const json sa = h.get("/api/sessions/" + a + "/series", 200);
    const json sb = h.get("/api/sessions/" + b + "/series", 200);
    REQUIRE(sa["samples"].size() == sb["samples"].size());
    CHECK(sa["samples"] != sb["samples"]);
    h.post("/api/sessions/" + a + "/press", {{"cell", "L9"}, {"action", "down"}}, 200);
    h.now = 1005.0;
    const json sb2 = h.get("/api/sessions/" + b + "/series", 200);
    for (std::size_t i = 0; i < sb["samples"].size(); ++i) CHECK(sb2["samples"][i] == sb["samples"][i]);
}

TEST_CASE("families endpoint") {
    Harness h;
    const std::string id = h.create();
    const json f = h.get("/api/sessions/" + id + "/families?pair=BL-C", 200);
    CHECK(f["pair"] == "BL-C");
    CHECK(f["families"].size() == 320);
    const auto expected = family_map(default_network(), {Electrode::BL, Electrode::C});
    for (const auto& c : CellId::all()) CHECK(f["families"][c.label()] == to_string(expected[c.index()]));
    h.get("/api/sessions/" + id + "/families?pair=BL-BL", 400);
}

TEST_CASE("logic endpoint runs the two-press protocol") {
    Harness h;
    const std::string id = h.create();
    const json rep = h.post("/api/sessions/" + id + "/logic", {{"cellA", "C3"}, {"cellB", "C2"}}, 200);
    CHECK(rep["cellA"] == "C3");
    CHECK(rep["thresholds"].size() == 2);
    CHECK(rep["outputs"].contains("O11"));
    h.post("/api/sessions/" + id + "/logic", {{"cellA", "C3"}, {"cellB", "C3"}}, 422);
}

TEST_CASE("request errors carry status and field") {
    Harness h;
    const std::string id = h.create();
    const std::string press = "/api/sessions/" + id + "/press";
    CHECK(h.post(press, {{"cell", "Z99"}, {"action", "down"}}, 422)["field"] == "cell");
    CHECK(h.post(press, {{"cell", "L9"}, {"action", "sideways"}}, 400)["field"] == "action");
    CHECK(h.post(press, {{"cell", "L9"}}, 400)["field"] == "action");
    CHECK(h.post(press, {{"cell", "L9"}, {"action", "down"}, {"mass_g", -3}}, 400)["field"] == "mass_g");
    CHECK(h.post(press, {{"cell", "L9"}, {"action", "down"}, {"colour", 1}}, 400)["field"] == "colour");
    CHECK(h.post(press, {{"cell", 9}, {"action", "down"}}, 400)["field"] == "cell");

    auto raw = h.client.Post(press, "{oops", "application/json");
    REQUIRE(raw);
    CHECK(raw->status == 400);

    h.post("/api/sessions/ffffffffffffffff/press", {{"cell", "L9"}, {"action", "down"}}, 404);
    h.get("/api/sessions/" + id + "/series?sinceSample=-4", 400);
    CHECK(h.post("/api/sessions", {{"samplePeriod_s", 0}}, 400)["field"] == "samplePeriod_s");
    CHECK(h.post("/api/sessions", {{"pair", "BL"}}, 400)["field"] == "pair");
}

TEST_CASE("concurrent clients keep every session consistent") {
    Harness h;
    std::vector<std::string> ids;
    for (int i = 0; i < 4; ++i) ids.push_back(h.create(static_cast<std::uint64_t>(i)));
    std::atomic<int> failures{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < 4; ++w)
        workers.emplace_back([&, w] {
            httplib::Client c("127.0.0.1", h.port);
            const std::string base = "/api/sessions/" + ids[static_cast<std::size_t>(w)];
            std::size_t head = 0;
            for (int k = 0; k < 20; ++k) {
                auto res = c.Get(base + "/series?sinceSample=0");
                if (!res || res->status != 200) {
                    ++failures;
                    continue;
                }
                const json page = json::parse(res->body);
                const std::size_t n = page["samples"].size();
                if (n < head || page["head"].get<std::size_t>() != n) ++failures;
                head = n;
            }
        });
    for (int k = 0; k < 20; ++k) h.now = h.now + 0.3;
    for (auto& t : workers) t.join();
    CHECK(failures == 0);
}
