#include "qbsde/quantum.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qbsde::quantum {

namespace {

constexpr Complex kI{0.0, 1.0};

void check_wire(std::size_t wire, std::size_t n_qubits) {
    if (wire >= n_qubits) {
        throw std::out_of_range("wire " + std::to_string(wire) + " out of range for " +
                                std::to_string(n_qubits) + " qubits");
    }
}

inline std::size_t wire_mask(std::size_t wire, std::size_t n_qubits) {
    return std::size_t{1} << (n_qubits - 1 - wire);
}

}  // namespace

StateVector::StateVector(std::size_t n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits == 0 || n_qubits > kMaxQubits) {
        throw std::invalid_argument("StateVector: qubit count must be in [1, " +
                                    std::to_string(kMaxQubits) + "]");
    }
    amps_.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
    amps_[0] = 1.0;
}

StateVector StateVector::from_amplitudes(std::vector<Complex> amplitudes) {
    const std::size_t size = amplitudes.size();
    if (size < 2 || (size & (size - 1)) != 0) {
        throw std::invalid_argument("StateVector: amplitude count must be a power of two >= 2");
    }
    StateVector state;
    state.n_qubits_ = static_cast<std::size_t>(std::countr_zero(size));
    if (state.n_qubits_ > kMaxQubits) throw std::invalid_argument("StateVector: too many qubits");
    state.amps_ = std::move(amplitudes);
    return state;
}

double StateVector::norm_squared() const noexcept {
    double total = 0.0;
    for (const auto& a : amps_) total += std::norm(a);
    return total;
}

Gate rx(double theta) {
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    return {"RX", {Complex{c, 0.0}, -kI * s, -kI * s, Complex{c, 0.0}}, false};
}

Gate ry(double theta) {
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    return {"RY", {Complex{c, 0.0}, Complex{-s, 0.0}, Complex{s, 0.0}, Complex{c, 0.0}}, false};
}

Gate rz(double theta) {
    const Complex lo = std::exp(-kI * (0.5 * theta));
    const Complex hi = std::exp(kI * (0.5 * theta));
    return {"RZ", {lo, Complex{}, Complex{}, hi}, false};
}

Gate pauli_x() { return {"X", {Complex{}, Complex{1.0}, Complex{1.0}, Complex{}}, false}; }
Gate pauli_y() { return {"Y", {Complex{}, -kI, kI, Complex{}}, false}; }
Gate pauli_z() { return {"Z", {Complex{1.0}, Complex{}, Complex{}, Complex{-1.0}}, false}; }

Gate hadamard() {
    const double h = std::numbers::sqrt2 / 2.0;
    return {"H", {Complex{h}, Complex{h}, Complex{h}, Complex{-h}}, false};
}

Gate controlled(const Gate& base) {
    if (base.controlled) throw std::invalid_argument("controlled: gate is already controlled");
    return {"C" + base.name, base.matrix, true};
}

Gate cnot() { return controlled(pauli_x()); }

void apply_gate(StateVector& state, const Gate& gate, std::span<const std::size_t> wires) {
    const std::size_t n = state.num_qubits();
    if (wires.size() != gate.num_wires()) {
        throw std::invalid_argument("apply_gate: " + gate.name + " expects " +
                                    std::to_string(gate.num_wires()) + " wire(s), got " +
                                    std::to_string(wires.size()));
    }
    for (std::size_t w : wires) check_wire(w, n);

    const auto& m = gate.matrix;
    auto amps = state.amplitudes();
    const std::size_t target = gate.controlled ? wires[1] : wires[0];
    const std::size_t t_mask = wire_mask(target, n);
    std::size_t c_mask = 0;
    if (gate.controlled) {
        if (wires[0] == wires[1]) throw std::invalid_argument("apply_gate: control equals target");
        c_mask = wire_mask(wires[0], n);
    }
    for (std::size_t i = 0; i < amps.size(); ++i) {
        if ((i & t_mask) || (i & c_mask) != c_mask) continue;
        const std::size_t j = i | t_mask;
        const Complex a0 = amps[i];
        const Complex a1 = amps[j];
        amps[i] = m[0] * a0 + m[1] * a1;
        amps[j] = m[2] * a0 + m[3] * a1;
    }
}

void apply_gate(StateVector& state, const Gate& gate, std::initializer_list<std::size_t> wires) {
    apply_gate(state, gate, std::span<const std::size_t>(wires.begin(), wires.size()));
}

Eigen::MatrixXcd gate_matrix(const Gate& gate, std::span<const std::size_t> wires,
                             std::size_t n_qubits) {
    const std::size_t dim = std::size_t{1} << n_qubits;
    Eigen::MatrixXcd u(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t col = 0; col < dim; ++col) {
        std::vector<Complex> basis(dim, Complex{});
        basis[col] = 1.0;
        auto state = StateVector::from_amplitudes(std::move(basis));
        apply_gate(state, gate, wires);
        const auto amps = state.amplitudes();
        for (std::size_t row = 0; row < dim; ++row) {
            u(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = amps[row];
        }
    }
    return u;
}

std::vector<Observable> pauli_z_all(std::size_t n_qubits) {
    std::vector<Observable> obs;
    obs.reserve(n_qubits);
    for (std::size_t q = 0; q < n_qubits; ++q) obs.push_back({Pauli::z, q});
    return obs;
}

std::vector<double> measure(const StateVector& state, std::span<const Observable> observables) {
    const std::size_t n = state.num_qubits();
    const auto amps = state.amplitudes();
    std::vector<double> out;
    out.reserve(observables.size());
    for (const auto& obs : observables) {
        check_wire(obs.wire, n);
        const std::size_t mask = wire_mask(obs.wire, n);
        double value = 0.0;
        if (obs.pauli == Pauli::z) {
            for (std::size_t i = 0; i < amps.size(); ++i) {
                value += (i & mask) ? -std::norm(amps[i]) : std::norm(amps[i]);
            }
        } else {
            // <psi|P|psi> summed over the (|..0..>, |..1..>) pairs of the wire.
            Complex acc{};
            for (std::size_t i = 0; i < amps.size(); ++i) {
                if (i & mask) continue;
                const Complex a0 = amps[i];
                const Complex a1 = amps[i | mask];
                if (obs.pauli == Pauli::x) {
                    acc += std::conj(a0) * a1 + std::conj(a1) * a0;
                } else {
                    acc += std::conj(a0) * (-kI * a1) + std::conj(a1) * (kI * a0);
                }
            }
            value = acc.real();
        }
        out.push_back(value);
    }
    return out;
}

double encoding_angle(double feature) noexcept { return std::numbers::pi * std::tanh(feature); }

StateVector encode(StateVector state, std::span<const double> features) {
    const std::size_t n = state.num_qubits();
    if (features.size() != n) {
        throw std::invalid_argument("encode: expected " + std::to_string(n) + " features, got " +
                                    std::to_string(features.size()));
    }
    for (std::size_t q = 0; q < n; ++q) {
        apply_gate(state, ry(encoding_angle(features[q])), {q});
    }
    return state;
}

StateVector ansatz(StateVector state, std::span<const double> thetas, std::size_t layers) {
    const std::size_t n = state.num_qubits();
    if (thetas.size() != layers * n) {
        throw std::invalid_argument("ansatz: expected " + std::to_string(layers * n) +
                                    " angles for " + std::to_string(layers) + " layer(s) on " +
                                    std::to_string(n) + " qubit(s), got " +
                                    std::to_string(thetas.size()));
    }
    const Gate entangler = cnot();
    const std::size_t ring = n == 1 ? 0 : (n == 2 ? 1 : n);
    for (std::size_t l = 0; l < layers; ++l) {
        for (std::size_t q = 0; q < n; ++q) apply_gate(state, ry(thetas[l * n + q]), {q});
        for (std::size_t q = 0; q < ring; ++q) apply_gate(state, entangler, {q, (q + 1) % n});
    }
    return state;
}

}  // namespace qbsde::quantum
