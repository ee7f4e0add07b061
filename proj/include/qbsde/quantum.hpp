#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qbsde::quantum {

using Complex = std::complex<double>;

/// Row-major 2x2 matrix {m00, m01, m10, m11}.
using Matrix2 = std::array<Complex, 4>;

inline constexpr std::size_t kMaxQubits = 20;

/// Dense n-qubit register. Wire 0 is the most significant bit of the basis
/// index, so |q0 q1 ... q_{n-1}> sits at index sum_q q_q 2^{n-1-q}.
class StateVector {
public:
    /// |0...0> on `n_qubits` wires.
    explicit StateVector(std::size_t n_qubits);

    /// Takes ownership of explicit amplitudes; size must be a power of two.
    static StateVector from_amplitudes(std::vector<Complex> amplitudes);

    [[nodiscard]] std::size_t num_qubits() const noexcept { return n_qubits_; }
    [[nodiscard]] std::size_t size() const noexcept { return amps_.size(); }
    [[nodiscard]] std::span<const Complex> amplitudes() const noexcept { return amps_; }
    [[nodiscard]] std::span<Complex> amplitudes() noexcept { return amps_; }
    [[nodiscard]] double norm_squared() const noexcept;

private:
    StateVector() = default;
    std::size_t n_qubits_ = 0;
    std::vector<Complex> amps_;
};

/// A one-qubit unitary, optionally controlled by a second wire. For a
/// controlled gate the wires are {control, target}.
struct Gate {
    std::string name;
    Matrix2 matrix{};
    bool controlled = false;

    [[nodiscard]] std::size_t num_wires() const noexcept { return controlled ? 2 : 1; }
};

[[nodiscard]] Gate rx(double theta);
[[nodiscard]] Gate ry(double theta);
[[nodiscard]] Gate rz(double theta);
[[nodiscard]] Gate pauli_x();
[[nodiscard]] Gate pauli_y();
[[nodiscard]] Gate pauli_z();
[[nodiscard]] Gate hadamard();
[[nodiscard]] Gate cnot();
[[nodiscard]] Gate controlled(const Gate& base);

/// Applies `gate` to `wires` in place. Throws std::out_of_range for a wire
/// >= num_qubits and std::invalid_argument for a wrong wire count or a
/// control equal to its target.
void apply_gate(StateVector& state, const Gate& gate, std::span<const std::size_t> wires);
void apply_gate(StateVector& state, const Gate& gate, std::initializer_list<std::size_t> wires);

/// The 2^n x 2^n matrix of `gate` on `wires`, assembled column by column by
/// running the kernel on computational basis states.
[[nodiscard]] Eigen::MatrixXcd gate_matrix(const Gate& gate, std::span<const std::size_t> wires,
                                           std::size_t n_qubits);

enum class Pauli { x, y, z };

struct Observable {
    Pauli pauli = Pauli::z;
    std::size_t wire = 0;
};

/// Z on each of `n_qubits` wires, in wire order.
[[nodiscard]] std::vector<Observable> pauli_z_all(std::size_t n_qubits);

/// <psi|H_j|psi> for every observable.
[[nodiscard]] std::vector<double> measure(const StateVector& state,
                                          std::span<const Observable> observables);

/// Rotation angle pi * tanh(feature), confined to (-pi, pi).
[[nodiscard]] double encoding_angle(double feature) noexcept;

/// RY(encoding_angle(features[q])) on every wire q. One feature per wire.
[[nodiscard]] StateVector encode(StateVector state, std::span<const double> features);

/// Layered evolution. For each layer l: RY(thetas[l * n + q]) on every wire
/// q, then the CNOT ring q -> (q + 1) mod n. With one wire the ring is empty
/// and with two wires it is the single CNOT(0, 1), so no pair is entangled
/// twice in a layer.
[[nodiscard]] StateVector ansatz(StateVector state, std::span<const double> thetas,
                                 std::size_t layers);

}  // namespace qbsde::quantum
