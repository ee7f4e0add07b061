#include "qbsde/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "qbsde/rng.hpp"

namespace qbsde {

MlpModel::MlpModel(std::vector<std::size_t> widths, std::uint64_t init_seed)
    : widths_(std::move(widths)) {
    if (widths_.size() < 2) throw std::invalid_argument("MlpModel: need at least two widths");
    for (std::size_t w : widths_) {
        if (w == 0) throw std::invalid_argument("MlpModel: zero layer width");
    }
    if (widths_.front() != widths_.back() + 1) {
        throw std::invalid_argument("MlpModel: input width must equal output width + 1");
    }
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        offsets_.push_back(total);
        total += widths_[l] * widths_[l + 1] + widths_[l + 1];
    }
    params_.assign(total, 0.0);
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        const std::size_t in = widths_[l];
        const std::size_t out = widths_[l + 1];
        const double scale = 1.0 / std::sqrt(static_cast<double>(in));
        double* w = params_.data() + offsets_[l];
        for (std::size_t r = 0; r < out; ++r) {
            for (std::size_t c = 0; c < in; ++c) {
                w[r * in + c] = scale * counter_normal(init_seed, Stream::mlp_init, l, r, c);
            }
        }
    }
}

MlpModel MlpModel::with_hidden(std::size_t state_dim, const std::vector<std::size_t>& hidden,
                               std::uint64_t init_seed) {
    std::vector<std::size_t> widths{state_dim + 1};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(state_dim);
    return MlpModel(std::move(widths), init_seed);
}

void MlpModel::set_parameters(std::span<const double> values) {
    if (values.size() != params_.size()) {
        throw std::invalid_argument("MlpModel: expected " + std::to_string(params_.size()) +
                                    " parameters, got " + std::to_string(values.size()));
    }
    params_.assign(values.begin(), values.end());
}

Eigen::Map<const MlpModel::RowMatrix> MlpModel::weights(std::size_t layer) const {
    return {params_.data() + offsets_[layer], static_cast<Eigen::Index>(widths_[layer + 1]),
            static_cast<Eigen::Index>(widths_[layer])};
}

Eigen::Map<const Eigen::VectorXd> MlpModel::bias(std::size_t layer) const {
    return {params_.data() + bias_offset(layer), static_cast<Eigen::Index>(widths_[layer + 1])};
}

Eigen::MatrixXd MlpModel::input_matrix(double time_feature,
                                       const Eigen::Ref<const Eigen::MatrixXd>& states) const {
    check_batch(time_feature, states);
    Eigen::MatrixXd h(states.rows() + 1, states.cols());
    h.topRows(states.rows()) = states;
    h.bottomRows(1).setConstant(time_feature);
    return h;
}

Eigen::MatrixXd MlpModel::forward_batch(double time_feature,
                                        const Eigen::Ref<const Eigen::MatrixXd>& states) const {
    Eigen::MatrixXd h = input_matrix(time_feature, states);
    const std::size_t layers = num_layers();
    for (std::size_t l = 0; l < layers; ++l) {
        Eigen::MatrixXd a = weights(l) * h;
        a.colwise() += bias(l);
        if (l + 1 < layers) a = a.cwiseMax(0.0);
        h = std::move(a);
    }
    return h;
}

Eigen::VectorXd MlpModel::backward_batch(double time_feature,
                                         const Eigen::Ref<const Eigen::MatrixXd>& states,
                                         const Eigen::Ref<const Eigen::MatrixXd>& upstream) const {
    if (upstream.rows() != states.rows() || upstream.cols() != states.cols()) {
        throw std::invalid_argument("MlpModel: upstream gradient shape mismatch");
    }
    const std::size_t layers = num_layers();
    // activations[l] is the input to layer l; pre[l] its pre-activation output.
    std::vector<Eigen::MatrixXd> activations;
    std::vector<Eigen::MatrixXd> pre;
    activations.reserve(layers);
    pre.reserve(layers);
    activations.push_back(input_matrix(time_feature, states));
    for (std::size_t l = 0; l < layers; ++l) {
        Eigen::MatrixXd a = weights(l) * activations.back();
        a.colwise() += bias(l);
        pre.push_back(a);
        if (l + 1 < layers) activations.push_back(a.cwiseMax(0.0));
    }

    Eigen::VectorXd grad(static_cast<Eigen::Index>(params_.size()));
    Eigen::MatrixXd delta = upstream;
    for (std::size_t l = layers; l-- > 0;) {
        const auto in = static_cast<Eigen::Index>(widths_[l]);
        const auto out = static_cast<Eigen::Index>(widths_[l + 1]);
        Eigen::Map<RowMatrix> grad_w(grad.data() + offsets_[l], out, in);
        grad_w.noalias() = delta * activations[l].transpose();
        grad.segment(static_cast<Eigen::Index>(bias_offset(l)), out) = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd back = weights(l).transpose() * delta;
            // ReLU derivative, taken as zero at exactly zero.
            delta = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
        }
    }
    return grad;
}

std::unique_ptr<Approximator> MlpModel::clone() const { return std::make_unique<MlpModel>(*this); }

Checkpoint MlpModel::to_checkpoint() const {
    Checkpoint ckpt;
    ckpt.model = "mlp";
    std::string widths;
    for (std::size_t i = 0; i < widths_.size(); ++i) {
        if (i) widths += ',';
        widths += std::to_string(widths_[i]);
    }
    ckpt.meta["widths"] = widths;
    for (std::size_t l = 0; l < num_layers(); ++l) {
        const std::size_t in = widths_[l];
        const std::size_t out = widths_[l + 1];
        const double* w = params_.data() + offsets_[l];
        const double* b = params_.data() + bias_offset(l);
        ckpt.tensors.push_back({"W" + std::to_string(l), true, out, in,
                                std::vector<double>(w, w + out * in)});
        ckpt.tensors.push_back({"b" + std::to_string(l), true, out, 1,
                                std::vector<double>(b, b + out)});
    }
    return ckpt;
}

MlpModel MlpModel::from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.model != "mlp") throw std::runtime_error("checkpoint is not an mlp");
    std::vector<std::size_t> widths;
    const std::string& text = ckpt.meta_value("widths");
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        widths.push_back(std::stoul(text.substr(pos, comma - pos)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    MlpModel model(widths, 0);
    std::vector<double> params;
    params.reserve(model.num_parameters());
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        const auto& w = ckpt.tensor("W" + std::to_string(l));
        const auto& b = ckpt.tensor("b" + std::to_string(l));
        if (w.rows != widths[l + 1] || w.cols != widths[l] || b.rows != widths[l + 1] ||
            b.cols != 1) {
            throw std::runtime_error("checkpoint: mlp layer " + std::to_string(l) +
                                     " has the wrong shape");
        }
        params.insert(params.end(), w.values.begin(), w.values.end());
        params.insert(params.end(), b.values.begin(), b.values.end());
    }
    model.set_parameters(params);
    return model;
}

}  // namespace qbsde
