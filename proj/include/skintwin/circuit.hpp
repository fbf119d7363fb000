#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "geometry.hpp"

namespace skintwin {

using cplx = std::complex<double>;

struct MaterialParams {
    double conductivity = 0.25;              // S/m
    double inductancePerLength = 0.16;       // H/m
    double shuntCapacitancePerArea = 5e-7;   // F/m^2
    double contactResistance = 10.0;         // ohm per electrode
    double contactInductance = 2e-3;         // H per electrode
    double segmentLength = 10.0;             // mm, channels are split into pieces no longer than this

    void validate() const {
        if (!(conductivity > 0.0) || !(inductancePerLength > 0.0) || !(shuntCapacitancePerArea > 0.0) ||
            !(contactResistance >= 0.0) || !(contactInductance >= 0.0) || !(segmentLength > 0.0) ||
            !std::isfinite(conductivity + inductancePerLength + shuntCapacitancePerArea + contactResistance +
                           contactInductance + segmentLength))
            throw DomainError("material parameters must be finite and positive");
    }

    bool operator==(const MaterialParams&) const = default;
};

struct EdgeElement {
    double seriesResistance = 0.0;  // ohm
    double seriesInductance = 0.0;  // H
    double shuntCapacitance = 0.0;  // F, half to each end node against the plane

    bool operator==(const EdgeElement&) const = default;
};

struct ComplexZ {
    double resistance = 0.0;  // ohm
    double reactance = 0.0;   // ohm

    ComplexZ() = default;
    ComplexZ(double r, double x) : resistance(r), reactance(x) {}
    explicit ComplexZ(cplx z) : resistance(z.real()), reactance(z.imag()) {}

    cplx value() const { return {resistance, reactance}; }
    double magnitude() const { return std::abs(value()); }
    double phase_deg() const { return std::arg(value()) * 180.0 / std::numbers::pi; }
    bool operator==(const ComplexZ&) const = default;
};

inline EdgeElement channel_element(double lengthMm, double widthMm, double depthMm, const MaterialParams& m) {
    if (!(lengthMm > 0.0) || !(widthMm > 0.0) || !(depthMm > 0.0))
        throw DomainError("channel dimensions must be positive");
    const double len = lengthMm * 1e-3, width = widthMm * 1e-3, depth = depthMm * 1e-3;
    return {len / (m.conductivity * width * depth), m.inductancePerLength * len,
            m.shuntCapacitancePerArea * width * len};
}

/// One lumped piece of a channel between two circuit nodes.
struct Branch {
    int a = 0;
    int b = 0;
    EdgeElement element;
    int channel = -1;  // owning network edge, -1 when built by hand
};

/// Linear two-terminal network: series R-L branches, end capacitances to a floating plane,
/// and contact R-L in series with each terminal.
class AdmittanceSystem {
public:
    AdmittanceSystem() = default;

    AdmittanceSystem(int nodeCount, std::vector<Branch> branches, std::array<int, 3> terminals = {0, 1, 1},
                     double contactResistance = 0.0, double contactInductance = 0.0)
        : nodeCount_(nodeCount), branches_(std::move(branches)), terminals_(terminals),
          contactResistance_(contactResistance), contactInductance_(contactInductance) {
        for (const auto& br : branches_)
            if (br.a < 0 || br.a >= nodeCount_ || br.b < 0 || br.b >= nodeCount_ || br.a == br.b)
                throw DomainError("branch references an invalid node");
        positions_.assign(static_cast<std::size_t>(nodeCount_), Point2{});
    }

    /// Discretizes every channel of the network into equal pieces of at most segmentLength.
    static AdmittanceSystem from_network(const Network& net, const MaterialParams& m) {
        net.validate();
        m.validate();
        AdmittanceSystem sys;
        sys.positions_ = net.nodes;
        sys.nodeCount_ = static_cast<int>(net.nodes.size());
        sys.terminals_ = net.electrodes;
        sys.contactResistance_ = m.contactResistance;
        sys.contactInductance_ = m.contactInductance;
        for (std::size_t e = 0; e < net.edges.size(); ++e) {
            const int from = net.edges[e][0], to = net.edges[e][1];
            const Point2 pa = net.nodes[from], pb = net.nodes[to];
            const double length = distance(pa, pb);
            const int pieces = std::max(1, static_cast<int>(std::ceil(length / m.segmentLength - 1e-9)));
            const EdgeElement piece = channel_element(length / pieces, net.channelWidth, net.channelDepth, m);
            int prev = from;
            for (int s = 0; s < pieces; ++s) {
                int next = to;
                if (s + 1 < pieces) {
                    const double t = static_cast<double>(s + 1) / pieces;
                    sys.positions_.push_back({pa.x + t * (pb.x - pa.x), pa.y + t * (pb.y - pa.y)});
                    next = sys.nodeCount_++;
                }
                sys.branches_.push_back({prev, next, piece, static_cast<int>(e)});
                prev = next;
            }
        }
        return sys;
    }

    int node_count() const { return nodeCount_; }
    const std::vector<Branch>& branches() const { return branches_; }
    const std::vector<Point2>& positions() const { return positions_; }
    int terminal(Electrode e) const { return terminals_[static_cast<std::size_t>(e)]; }
    double contact_resistance() const { return contactResistance_; }
    double contact_inductance() const { return contactInductance_; }

    /// Series impedance of both contacts at angular frequency omega.
    cplx contact_impedance(double omega) const {
        return 2.0 * cplx(contactResistance_, omega * contactInductance_);
    }

    /// Same topology with every branch element replaced.
    AdmittanceSystem with_elements(const std::vector<EdgeElement>& elements) const {
        if (elements.size() != branches_.size()) throw DomainError("element count does not match branch count");
        AdmittanceSystem copy = *this;
        for (std::size_t i = 0; i < elements.size(); ++i) copy.branches_[i].element = elements[i];
        return copy;
    }

    /// Full nodal admittance matrix; the last row/column is the capacitance plane.
    Eigen::MatrixXcd assemble(double omega) const {
        const int n = nodeCount_ + 1;
        Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
        for (const auto& br : branches_) stamp(y, br, omega, nodeCount_);
        return y;
    }

    /// Admittance of the series R-L part of a branch.
    static cplx series_admittance(const EdgeElement& el, double omega) {
        return 1.0 / cplx(el.seriesResistance, omega * el.seriesInductance);
    }

    static void stamp(Eigen::MatrixXcd& y, const Branch& br, double omega, int plane) {
        const cplx ys = series_admittance(br.element, omega);
        y(br.a, br.a) += ys;
        y(br.b, br.b) += ys;
        y(br.a, br.b) -= ys;
        y(br.b, br.a) -= ys;
        if (omega != 0.0 && br.element.shuntCapacitance > 0.0) {
            const cplx yc(0.0, omega * br.element.shuntCapacitance / 2.0);
            for (int node : {br.a, br.b}) {
                y(node, node) += yc;
                y(node, plane) -= yc;
                y(plane, node) -= yc;
                y(plane, plane) += yc;
            }
        }
    }

private:
    int nodeCount_ = 0;
    std::vector<Branch> branches_;
    std::vector<Point2> positions_;
    std::array<int, 3> terminals_{0, 1, 1};
    double contactResistance_ = 0.0;
    double contactInductance_ = 0.0;
};

namespace detail {

/// Nodes reachable from `start` through branches.
inline std::vector<char> reachable(const AdmittanceSystem& sys, int start) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(sys.node_count()));
    for (const auto& br : sys.branches()) {
        adj[br.a].push_back(br.b);
        adj[br.b].push_back(br.a);
    }
    std::vector<char> seen(static_cast<std::size_t>(sys.node_count()), 0);
    std::vector<int> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int v : adj[u])
            if (!seen[v]) {
                seen[v] = 1;
                stack.push_back(v);
            }
    }
    return seen;
}

/// Reduced nodal system for a port: connected component of `a`, plane included when
/// capacitances are active, reference node `b` removed.
struct ReducedSystem {
    Eigen::MatrixXcd matrix;
    std::vector<int> index;  // full node index (plane = node_count) -> reduced index, -1 if absent
    int port = 0;            // reduced index of node a
};

inline ReducedSystem reduce(const AdmittanceSystem& sys, int a, int b, double omega) {
    const int n = sys.node_count();
    if (a < 0 || a >= n || b < 0 || b >= n) throw DomainError("port node out of range");
    if (a == b) throw DomainError("port terminals must be distinct");
    auto seen = reachable(sys, a);
    if (!seen[b])
        throw SingularSystemError("terminals " + std::to_string(a) + " and " + std::to_string(b) +
                                  " are not connected");
    bool plane = false;
    if (omega != 0.0)
        for (const auto& br : sys.branches())
            if (seen[br.a] && br.element.shuntCapacitance > 0.0) plane = true;

    ReducedSystem red;
    red.index.assign(static_cast<std::size_t>(n + 1), -1);
    int m = 0;
    for (int i = 0; i < n; ++i)
        if (seen[i] && i != b) red.index[i] = m++;
    if (plane) red.index[n] = m++;

    Eigen::MatrixXcd full = Eigen::MatrixXcd::Zero(n + 1, n + 1);
    for (const auto& br : sys.branches()) {
        if (!seen[br.a]) continue;
        if (omega == 0.0 && br.element.seriesResistance == 0.0)
            throw SingularSystemError("branch without resistance shorts the DC system");
        AdmittanceSystem::stamp(full, br, omega, n);
    }
    red.matrix.resize(m, m);
    for (int i = 0; i <= n; ++i) {
        if (red.index[i] < 0) continue;
        for (int j = 0; j <= n; ++j)
            if (red.index[j] >= 0) red.matrix(red.index[i], red.index[j]) = full(i, j);
    }
    red.port = red.index[a];
    return red;
}

inline Eigen::PartialPivLU<Eigen::MatrixXcd> factorize(const Eigen::MatrixXcd& y) {
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(y);
    const double scale = y.cwiseAbs().rowwise().sum().maxCoeff();
    const double pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(pivot >= 1e-12 * scale)) throw SingularSystemError("nodal matrix is numerically singular");
    return lu;
}

}  // namespace detail

/// Port impedance at signed angular frequency; negative omega gives the conjugate response.
inline cplx impedance_at_omega(const AdmittanceSystem& sys, int a, int b, double omega) {
    auto red = detail::reduce(sys, a, b, omega);
    auto lu = detail::factorize(red.matrix);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(red.matrix.rows());
    rhs(red.port) = 1.0;
    Eigen::VectorXcd v = lu.solve(rhs);
    return v(red.port) + sys.contact_impedance(omega);
}

inline ComplexZ impedance(const AdmittanceSystem& sys, int a, int b, double freqHz) {
    if (!(freqHz >= 0.0) || !std::isfinite(freqHz)) throw DomainError("frequency must be finite and >= 0");
    return ComplexZ(impedance_at_omega(sys, a, b, 2.0 * std::numbers::pi * freqHz));
}

inline ComplexZ impedance(const AdmittanceSystem& sys, ElectrodePair pair, double freqHz) {
    return impedance(sys, sys.terminal(pair.a), sys.terminal(pair.b), freqHz);
}

struct SweepPoint {
    double freqHz = 0.0;
    ComplexZ z;
};

inline std::vector<SweepPoint> sweep(const AdmittanceSystem& sys, ElectrodePair pair,
                                     const std::vector<double>& freqs) {
    if (freqs.empty()) throw DomainError("sweep needs at least one frequency");
    std::vector<SweepPoint> out;
    out.reserve(freqs.size());
    for (double f : freqs) {
        try {
            out.push_back({f, impedance(sys, pair, f)});
        } catch (const SingularSystemError& e) {
            throw SingularSystemError("at " + std::to_string(f) + " Hz: " + e.what());
        } catch (const DomainError& e) {
            throw DomainError("at " + std::to_string(f) + " Hz: " + e.what());
        }
    }
    return out;
}

inline std::vector<double> log_frequencies(double fLow, double fHigh, int count) {
    if (!(fLow > 0.0) || !(fHigh > fLow) || count < 2) throw DomainError("invalid logarithmic sweep range");
    std::vector<double> f(static_cast<std::size_t>(count));
    const double l0 = std::log10(fLow), l1 = std::log10(fHigh);
    for (int i = 0; i < count; ++i) f[i] = std::pow(10.0, l0 + (l1 - l0) * i / (count - 1));
    f.front() = fLow;
    f.back() = fHigh;
    return f;
}

struct IvPoint {
    double volts = 0.0;
    double amps = 0.0;
};

inline std::vector<IvPoint> dc_iv(const AdmittanceSystem& sys, ElectrodePair pair, const std::vector<double>& volts) {
    const double r = impedance(sys, pair, 0.0).resistance;
    std::vector<IvPoint> out;
    out.reserve(volts.size());
    for (double v : volts) {
        if (!std::isfinite(v)) throw DomainError("voltage must be finite");
        out.push_back({v, v / r});
    }
    return out;
}

/// Port impedance under local element changes, by a low-rank update of a cached inverse.
class PortSolver {
public:
    PortSolver(const AdmittanceSystem& sys, int a, int b, double freqHz)
        : sys_(&sys), omega_(2.0 * std::numbers::pi * freqHz) {
        if (!(freqHz >= 0.0)) throw DomainError("frequency must be >= 0");
        red_ = detail::reduce(sys, a, b, omega_);
        auto lu = detail::factorize(red_.matrix);
        inverse_ = lu.inverse();
        rest_ = inverse_(red_.port, red_.port) + sys.contact_impedance(omega_);
    }

    PortSolver(const AdmittanceSystem& sys, ElectrodePair pair, double freqHz)
        : PortSolver(sys, sys.terminal(pair.a), sys.terminal(pair.b), freqHz) {}

    cplx rest() const { return rest_; }

    /// Impedance with each listed branch replaced by the paired element.
    cplx solve(const std::vector<std::pair<int, EdgeElement>>& changes) const {
        if (changes.empty()) return rest_;
        const int plane = sys_->node_count();
        std::vector<int> local(static_cast<std::size_t>(red_.matrix.rows()), -1);
        std::vector<int> touched;
        auto touch = [&](int node) {
            int r = red_.index[node];
            if (r >= 0 && local[r] < 0) {
                local[r] = static_cast<int>(touched.size());
                touched.push_back(r);
            }
        };
        for (const auto& change : changes) {
            const Branch& br = sys_->branches()[static_cast<std::size_t>(change.first)];
            if (red_.index[br.a] < 0 && red_.index[br.b] < 0) continue;
            touch(br.a);
            touch(br.b);
            touch(plane);
        }
        const int k = static_cast<int>(touched.size());
        if (k == 0) return rest_;

        Eigen::MatrixXcd delta = Eigen::MatrixXcd::Zero(k, k);
        auto add = [&](int p, int q, cplx val) {
            int rp = red_.index[p], rq = red_.index[q];
            if (rp >= 0 && rq >= 0) delta(local[rp], local[rq]) += val;
        };
        for (const auto& [bi, el] : changes) {
            const Branch& br = sys_->branches()[static_cast<std::size_t>(bi)];
            if (red_.index[br.a] < 0 && red_.index[br.b] < 0) continue;
            const cplx dys = AdmittanceSystem::series_admittance(el, omega_) -
                             AdmittanceSystem::series_admittance(br.element, omega_);
            add(br.a, br.a, dys);
            add(br.b, br.b, dys);
            add(br.a, br.b, -dys);
            add(br.b, br.a, -dys);
            if (omega_ != 0.0) {
                const cplx dyc(0.0, omega_ * (el.shuntCapacitance - br.element.shuntCapacitance) / 2.0);
                for (int node : {br.a, br.b}) {
                    add(node, node, dyc);
                    add(node, plane, -dyc);
                    add(plane, node, -dyc);
                    add(plane, plane, dyc);
                }
            }
        }
        Eigen::MatrixXcd gtt(k, k);
        Eigen::VectorXcd vt(k);
        for (int i = 0; i < k; ++i) {
            vt(i) = inverse_(touched[i], red_.port);
            for (int j = 0; j < k; ++j) gtt(i, j) = inverse_(touched[i], touched[j]);
        }
        Eigen::MatrixXcd core = Eigen::MatrixXcd::Identity(k, k) + delta * gtt;
        Eigen::VectorXcd w = core.partialPivLu().solve(delta * vt);
        return rest_ - (vt.transpose() * w)(0);
    }

private:
    const AdmittanceSystem* sys_;
    double omega_;
    detail::ReducedSystem red_;
    Eigen::MatrixXcd inverse_;
    cplx rest_;
};

}  // namespace skintwin
