#include "qbsde/vqc.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qbsde/rng.hpp"

namespace qbsde {

namespace {

constexpr double kShift = std::numbers::pi / 2.0;

std::vector<double> tensor_values(const Eigen::MatrixXd& m) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
    }
    return out;
}

Eigen::MatrixXd tensor_matrix(const NamedTensor& t) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols));
    for (std::size_t r = 0; r < t.rows; ++r) {
        for (std::size_t c = 0; c < t.cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t.values[r * t.cols + c];
        }
    }
    return m;
}

}  // namespace

VqcModel::VqcModel(std::size_t state_dim, std::size_t n_qubits, std::size_t n_layers,
                   std::uint64_t adapter_seed, std::uint64_t theta_seed)
    : layers_(n_layers), adapter_seed_(adapter_seed) {
    if (state_dim == 0 || n_qubits == 0 || n_layers == 0) {
        throw std::invalid_argument("VqcModel: dimensions must be positive");
    }
    const auto d = static_cast<Eigen::Index>(state_dim);
    const auto n = static_cast<Eigen::Index>(n_qubits);
    const double enc_scale = 1.0 / std::sqrt(static_cast<double>(state_dim + 1));
    const double dec_scale =
        1.0 / (std::sqrt(static_cast<double>(n_qubits)) * static_cast<double>(state_dim));
    encoder_.resize(n, d + 1);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c <= d; ++c) {
            encoder_(r, c) = enc_scale * counter_normal(adapter_seed, Stream::adapter_init, 0,
                                                        static_cast<std::uint64_t>(r),
                                                        static_cast<std::uint64_t>(c));
        }
    }
    decoder_.resize(d, n);
    for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index c = 0; c < n; ++c) {
            decoder_(r, c) = dec_scale * counter_normal(adapter_seed, Stream::adapter_init, 1,
                                                        static_cast<std::uint64_t>(r),
                                                        static_cast<std::uint64_t>(c));
        }
    }
    thetas_.resize(n_layers * n_qubits);
    for (std::size_t l = 0; l < n_layers; ++l) {
        for (std::size_t q = 0; q < n_qubits; ++q) {
            const double u = counter_uniform(theta_seed, Stream::vqc_init, l, q, 0);
            thetas_[l * n_qubits + q] = std::numbers::pi * (2.0 * u - 1.0);
        }
    }
    observables_ = quantum::pauli_z_all(n_qubits);
    validate();
}

VqcModel::VqcModel(std::size_t n_layers, Eigen::MatrixXd encoder, Eigen::MatrixXd decoder,
                   std::vector<double> thetas, std::uint64_t adapter_seed)
    : layers_(n_layers),
      encoder_(std::move(encoder)),
      decoder_(std::move(decoder)),
      thetas_(std::move(thetas)),
      adapter_seed_(adapter_seed),
      observables_(quantum::pauli_z_all(static_cast<std::size_t>(encoder_.rows()))) {
    validate();
}

void VqcModel::validate() const {
    const auto n = encoder_.rows();
    if (n == 0 || static_cast<std::size_t>(n) > quantum::kMaxQubits) {
        throw std::invalid_argument("VqcModel: qubit count must be in [1, " +
                                    std::to_string(quantum::kMaxQubits) + "]");
    }
    if (layers_ == 0) throw std::invalid_argument("VqcModel: need at least one layer");
    if (decoder_.cols() != n) throw std::invalid_argument("VqcModel: decoder columns != qubits");
    if (decoder_.rows() == 0 || encoder_.cols() != decoder_.rows() + 1) {
        throw std::invalid_argument("VqcModel: encoder must have d + 1 columns for decoder rows d");
    }
    if (thetas_.size() != layers_ * static_cast<std::size_t>(n)) {
        throw std::invalid_argument("VqcModel: expected " +
                                    std::to_string(layers_ * static_cast<std::size_t>(n)) +
                                    " angles, got " + std::to_string(thetas_.size()));
    }
    if (!encoder_.allFinite() || !decoder_.allFinite()) {
        throw std::invalid_argument("VqcModel: non-finite adapter entries");
    }
}

void VqcModel::set_parameters(std::span<const double> values) {
    if (values.size() != thetas_.size()) {
        throw std::invalid_argument("VqcModel: expected " + std::to_string(thetas_.size()) +
                                    " angles, got " + std::to_string(values.size()));
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw std::invalid_argument("VqcModel: non-finite angle");
    }
    thetas_.assign(values.begin(), values.end());
}

Eigen::VectorXd VqcModel::features(double time_feature, std::span<const double> state) const {
    const auto d = static_cast<Eigen::Index>(state_dim());
    if (static_cast<Eigen::Index>(state.size()) != d) {
        throw std::invalid_argument("VqcModel: state dimension mismatch");
    }
    const Eigen::Map<const Eigen::VectorXd> x(state.data(), d);
    return encoder_.leftCols(d) * x + encoder_.col(d) * time_feature;
}

std::vector<double> VqcModel::expectations(std::span<const double> features,
                                           std::span<const double> thetas) const {
    auto psi = quantum::encode(quantum::StateVector(num_qubits()), features);
    psi = quantum::ansatz(std::move(psi), thetas, layers_);
    return quantum::measure(psi, observables_);
}

Eigen::MatrixXd VqcModel::expectation_jacobian(std::span<const double> features) const {
    const auto encoded = quantum::encode(quantum::StateVector(num_qubits()), features);
    const std::size_t k = observables_.size();
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(thetas_.size()));
    std::vector<double> shifted = thetas_;
    for (std::size_t i = 0; i < thetas_.size(); ++i) {
        shifted[i] = thetas_[i] + kShift;
        const auto plus = quantum::measure(quantum::ansatz(encoded, shifted, layers_), observables_);
        shifted[i] = thetas_[i] - kShift;
        const auto minus = quantum::measure(quantum::ansatz(encoded, shifted, layers_), observables_);
        shifted[i] = thetas_[i];
        for (std::size_t j = 0; j < k; ++j) {
            jac(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
                0.5 * (plus[j] - minus[j]);
        }
    }
    return jac;
}

Eigen::MatrixXd VqcModel::forward_batch(double time_feature,
                                        const Eigen::Ref<const Eigen::MatrixXd>& states) const {
    check_batch(time_feature, states);
    const auto n = encoder_.rows();
    const auto d = states.rows();
    // Features for the whole batch at once: E_x * X + e_t * t.
    Eigen::MatrixXd feats = encoder_.leftCols(d) * states;
    feats.colwise() += encoder_.col(d) * time_feature;
    Eigen::MatrixXd readout(n, states.cols());
    for (Eigen::Index b = 0; b < states.cols(); ++b) {
        const Eigen::VectorXd f = feats.col(b);
        const auto m = expectations({f.data(), static_cast<std::size_t>(n)}, thetas_);
        for (Eigen::Index j = 0; j < n; ++j) readout(j, b) = m[static_cast<std::size_t>(j)];
    }
    return decoder_ * readout;
}

Eigen::VectorXd VqcModel::backward_batch(double time_feature,
                                         const Eigen::Ref<const Eigen::MatrixXd>& states,
                                         const Eigen::Ref<const Eigen::MatrixXd>& upstream) const {
    check_batch(time_feature, states);
    if (upstream.rows() != states.rows() || upstream.cols() != states.cols()) {
        throw std::invalid_argument("VqcModel: upstream gradient shape mismatch");
    }
    const auto n = encoder_.rows();
    const auto d = states.rows();
    Eigen::MatrixXd feats = encoder_.leftCols(d) * states;
    feats.colwise() += encoder_.col(d) * time_feature;
    // Chain through the fixed decoder: d(u . D m)/dm = D^T u.
    const Eigen::MatrixXd readout_grad = decoder_.transpose() * upstream;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(thetas_.size()));
    for (Eigen::Index b = 0; b < states.cols(); ++b) {
        const Eigen::VectorXd f = feats.col(b);
        const Eigen::MatrixXd jac = expectation_jacobian({f.data(), static_cast<std::size_t>(n)});
        grad.noalias() += jac.transpose() * readout_grad.col(b);
    }
    return grad;
}

std::unique_ptr<Approximator> VqcModel::clone() const { return std::make_unique<VqcModel>(*this); }

Checkpoint VqcModel::to_checkpoint() const {
    Checkpoint ckpt;
    ckpt.model = "vqc";
    ckpt.meta["n_qubits"] = std::to_string(num_qubits());
    ckpt.meta["n_layers"] = std::to_string(layers_);
    ckpt.meta["state_dim"] = std::to_string(state_dim());
    ckpt.meta["adapter_seed"] = std::to_string(adapter_seed_);
    ckpt.tensors.push_back({"thetas", true, layers_, num_qubits(), thetas_});
    ckpt.tensors.push_back({"encoder", false, static_cast<std::size_t>(encoder_.rows()),
                            static_cast<std::size_t>(encoder_.cols()), tensor_values(encoder_)});
    ckpt.tensors.push_back({"decoder", false, static_cast<std::size_t>(decoder_.rows()),
                            static_cast<std::size_t>(decoder_.cols()), tensor_values(decoder_)});
    return ckpt;
}

VqcModel VqcModel::from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.model != "vqc") throw std::runtime_error("checkpoint is not a vqc");
    const std::size_t layers = std::stoul(ckpt.meta_value("n_layers"));
    const std::uint64_t adapter_seed = std::stoull(ckpt.meta_value("adapter_seed"));
    const auto& thetas = ckpt.tensor("thetas");
    const auto& enc = ckpt.tensor("encoder");
    const auto& dec = ckpt.tensor("decoder");
    if (enc.trainable || dec.trainable) {
        throw std::runtime_error("checkpoint: vqc adapters must be marked non-trainable");
    }
    VqcModel model(layers, tensor_matrix(enc), tensor_matrix(dec), thetas.values, adapter_seed);
    if (model.num_qubits() != std::stoul(ckpt.meta_value("n_qubits")) ||
        model.state_dim() != std::stoul(ckpt.meta_value("state_dim"))) {
        throw std::runtime_error("checkpoint: vqc shape metadata disagrees with tensors");
    }
    return model;
}

}  // namespace qbsde
