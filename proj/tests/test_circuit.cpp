#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <random>

#include <skintwin/circuit.hpp>
#include <skintwin/default_network.hpp>

#include "oracles.hpp"

using namespace skintwin;
using Catch::Approx;

namespace {

MaterialParams with_conductivity(double s) {
    MaterialParams m;
    m.conductivity = s;
    return m;
}

const AdmittanceSystem& default_system() {
    static const AdmittanceSystem sys = AdmittanceSystem::from_network(default_network(), MaterialParams{});
    return sys;
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace

TEST_CASE("channel element follows the bulk formulas") {
    const auto e = channel_element(100.0, 4.0, 2.0, with_conductivity(100.0));
    CHECK(e.seriesResistance == Approx(125.0).epsilon(1e-12));
    const MaterialParams m;
    CHECK(e.seriesInductance == Approx(m.inductancePerLength * 0.1));
    CHECK(e.shuntCapacitance == Approx(m.shuntCapacitancePerArea * 0.004 * 0.1));

    const auto deep = channel_element(100.0, 4.0, 4.0, with_conductivity(100.0));
    CHECK(deep.seriesResistance == Approx(e.seriesResistance / 2));
    CHECK(deep.seriesInductance == e.seriesInductance);
    CHECK(deep.shuntCapacitance == e.shuntCapacitance);

    double prevR = e.seriesResistance, prevL = e.seriesInductance, prevC = e.shuntCapacitance;
    for (double len : {10.0, 1.0, 1e-3, 1e-9}) {
        const auto s = channel_element(len, 4.0, 2.0, with_conductivity(100.0));
        CHECK(s.seriesResistance < prevR);
        CHECK(s.seriesInductance < prevL);
        CHECK(s.shuntCapacitance < prevC);
        prevR = s.seriesResistance;
        prevL = s.seriesInductance;
        prevC = s.shuntCapacitance;
    }
    CHECK(prevR < 1e-6);
    CHECK_THROWS_AS(channel_element(0.0, 4.0, 2.0, m), DomainError);
    CHECK_THROWS_AS(channel_element(10.0, -4.0, 2.0, m), DomainError);
}

TEST_CASE("single resistive edge at DC") {
    AdmittanceSystem sys(2, {{0, 1, {125.0, 0.0, 0.0}}});
    const ComplexZ z = impedance(sys, 0, 1, 0.0);
    CHECK(z.resistance == Approx(125.0).epsilon(1e-12));
    CHECK(z.reactance == 0.0);
}

TEST_CASE("triangle of unit resistors") {
    AdmittanceSystem sys(3, {{0, 1, {1, 0, 0}}, {1, 2, {1, 0, 0}}, {0, 2, {1, 0, 0}}});
    for (auto [a, b] : {std::pair{0, 1}, {1, 2}, {0, 2}, {2, 0}})
        CHECK(impedance(sys, a, b, 0.0).resistance == Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("DC impedance equals Laplacian pseudoinverse effective resistance") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = std::uniform_int_distribution<int>(2, 20)(rng);
        const auto rs = oracle::random_resistor_network(rng, n);
        const auto sys = oracle::resistive_system(n, rs);
        const int a = std::uniform_int_distribution<int>(0, n - 1)(rng);
        int b = std::uniform_int_distribution<int>(0, n - 2)(rng);
        if (b >= a) ++b;
        const double expected = oracle::effective_resistance(n, rs, a, b);
        const ComplexZ z = impedance(sys, a, b, 0.0);
        INFO("trial " << trial << " n " << n);
        CHECK(std::abs(z.resistance - expected) <= 1e-9 * expected);
        CHECK(z.reactance == 0.0);
    }
}

TEST_CASE("default network is reciprocal and passive over the sweep") {
    const auto& sys = default_system();
    const auto freqs = log_frequencies(20.0, 2e6, 50);
    for (const auto& pair : {ElectrodePair{Electrode::BL, Electrode::C}, ElectrodePair{Electrode::C, Electrode::TR},
                             ElectrodePair{Electrode::BL, Electrode::TR}}) {
        const auto fwd = sweep(sys, pair, freqs);
        const auto back = sweep(sys, pair.reversed(), freqs);
        for (std::size_t i = 0; i < freqs.size(); ++i) {
            INFO(pair.label() << " at " << freqs[i] << " Hz");
            CHECK(rel(fwd[i].z.value(), back[i].z.value()) <= 1e-12);
            CHECK(fwd[i].z.resistance >= 0.0);
        }
    }
}

TEST_CASE("default network is capacitive low and inductive high") {
    const auto& sys = default_system();
    const ElectrodePair pair{Electrode::BL, Electrode::C};
    CHECK(impedance(sys, pair, 100.0).reactance < 0.0);
    CHECK(impedance(sys, pair, 1e6).reactance > 0.0);

    std::vector<double> x;
    for (const auto& p : sweep(sys, pair, log_frequencies(20.0, 2e6, 50))) x.push_back(p.z.reactance);
    CHECK(oracle::sign_changes(x) == 1);
}

TEST_CASE("sweep is order independent and agrees with point evaluation") {
    const auto& sys = default_system();
    const ElectrodePair pair{Electrode::C, Electrode::TR};
    auto freqs = log_frequencies(50.0, 5e5, 9);
    const auto fwd = sweep(sys, pair, freqs);
    std::reverse(freqs.begin(), freqs.end());
    const auto rev = sweep(sys, pair, freqs);
    for (std::size_t i = 0; i < fwd.size(); ++i) {
        CHECK(fwd[i].z == rev[fwd.size() - 1 - i].z);
        CHECK(fwd[i].z == impedance(sys, pair, fwd[i].freqHz));
    }
    CHECK(sweep(sys, pair, {1234.0})[0].z == impedance(sys, pair, 1234.0));
    CHECK_THROWS_AS(sweep(sys, pair, {}), DomainError);
    CHECK_THROWS_AS(sweep(sys, pair, {100.0, -1.0}), DomainError);
}

TEST_CASE("negative angular frequency gives the conjugate") {
    const auto& sys = default_system();
    for (double w : {10.0, 1e4, 1e6}) {
        const cplx zp = impedance_at_omega(sys, 0, 8, w);
        const cplx zn = impedance_at_omega(sys, 0, 8, -w);
        CHECK(rel(zn, std::conj(zp)) <= 1e-12);
    }
}

TEST_CASE("impedance scales with a uniform impedance scaling") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    std::vector<Branch> br;
    for (int i = 0; i < 6; ++i)
        for (int j = i + 1; j < 6; ++j)
            if ((i + j) % 3 != 0) br.push_back({i, j, {100 * u(rng), 1e-3 * u(rng), 1e-7 * u(rng)}});
    const AdmittanceSystem base(6, br);
    const double k = 7.5;
    auto scaled = br;
    for (auto& b : scaled) {
        b.element.seriesResistance *= k;
        b.element.seriesInductance *= k;
        b.element.shuntCapacitance /= k;
    }
    const AdmittanceSystem big(6, scaled);
    for (double f : {0.0, 100.0, 1e4, 1e6})
        CHECK(rel(impedance(big, 0, 5, f).value(), k * impedance(base, 0, 5, f).value()) <= 1e-10);
}

TEST_CASE("random RLC networks are passive") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 8;
        const auto rs = oracle::random_resistor_network(rng, n);
        std::vector<Branch> br;
        for (const auto& r : rs) br.push_back({r.a, r.b, {r.ohms, 1e-3 * u(rng), 1e-7 * u(rng)}});
        const AdmittanceSystem sys(n, br, {0, n - 1, 1}, 1.0, 1e-4);
        for (double f : log_frequencies(10.0, 1e7, 15)) CHECK(impedance(sys, 0, n - 1, f).resistance >= 0.0);
    }
}

TEST_CASE("DC current-voltage line") {
    const auto& sys = default_system();
    const ElectrodePair pair{Electrode::BL, Electrode::C};
    const auto iv = dc_iv(sys, pair, {-1.0, -0.5, 0.0, 0.5, 1.0});
    CHECK(iv[2].amps == 0.0);
    CHECK(iv[0].amps == -iv[4].amps);
    CHECK(iv[1].amps == -iv[3].amps);

    std::vector<oracle::Resistor> rs;
    for (const auto& b : sys.branches()) rs.push_back({b.a, b.b, b.element.seriesResistance});
    const double r = oracle::effective_resistance(sys.node_count(), rs, sys.terminal(pair.a), sys.terminal(pair.b)) +
                     2.0 * sys.contact_resistance();
    CHECK(iv[4].amps == Approx(1.0 / r).epsilon(1e-9));
}

TEST_CASE("zero-resistance branch at DC is singular") {
    AdmittanceSystem sys(3, {{0, 1, {0.0, 0.0, 0.0}}, {1, 2, {5.0, 0.0, 0.0}}});
    CHECK_THROWS_AS(impedance(sys, 0, 2, 0.0), SingularSystemError);
}

TEST_CASE("invalid inputs are rejected") {
    CHECK_THROWS_AS(AdmittanceSystem(2, {{0, 2, {1, 0, 0}}}), DomainError);
    CHECK_THROWS_AS(AdmittanceSystem(2, {{1, 1, {1, 0, 0}}}), DomainError);
    CHECK_THROWS_AS(impedance(default_system(), ElectrodePair{}, -5.0), DomainError);
    MaterialParams m;
    m.conductivity = 0.0;
    CHECK_THROWS_AS(AdmittanceSystem::from_network(default_network(), m), DomainError);
}

TEST_CASE("discretization keeps every piece within the segment length") {
    const Network net = default_network();
    const auto& sys = default_system();
    const MaterialParams m;
    double total = 0.0;
    for (const auto& b : sys.branches()) {
        const double len = distance(sys.positions()[b.a], sys.positions()[b.b]);
        CHECK(len <= m.segmentLength + 1e-9);
        total += len;
    }
    double expected = 0.0;
    for (std::size_t e = 0; e < net.edges.size(); ++e) expected += net.edge_length(e);
    CHECK(total == Approx(expected).epsilon(1e-12));
}

TEST_CASE("low-rank port solver matches a full re-solve") {
    const auto& sys = default_system();
    const ElectrodePair pair{Electrode::BL, Electrode::C};
    for (double f : {100.0, 1000.0, 1e5}) {
        PortSolver ps(sys, pair, f);
        CHECK(rel(ps.rest(), impedance(sys, pair, f).value()) <= 1e-10);
        std::mt19937_64 rng(static_cast<std::uint64_t>(f));
        std::uniform_int_distribution<int> pick(0, static_cast<int>(sys.branches().size()) - 1);
        std::uniform_real_distribution<double> scale(0.5, 1.8);
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<std::pair<int, EdgeElement>> changes;
            std::vector<EdgeElement> elements;
            for (const auto& b : sys.branches()) elements.push_back(b.element);
            for (int k = 0; k < 6; ++k) {
                const int i = pick(rng);
                EdgeElement e = elements[i];
                e.seriesResistance *= scale(rng);
                e.seriesInductance *= scale(rng);
                e.shuntCapacitance *= scale(rng);
                elements[i] = e;
                changes.erase(std::remove_if(changes.begin(), changes.end(), [&](auto& c) { return c.first == i; }),
                              changes.end());
                changes.push_back({i, e});
            }
            const cplx direct = impedance(sys.with_elements(elements), pair, f).value();
            CHECK(rel(ps.solve(changes), direct) <= 1e-9);
        }
    }
}
