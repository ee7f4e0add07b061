#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qbsde {

/// Dense row-major [dim0, dim1, dim2] array of doubles.
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(std::size_t d0, std::size_t d1, std::size_t d2, double fill = 0.0)
        : d0_(d0), d1_(d1), d2_(d2), data_(d0 * d1 * d2, fill) {}

    [[nodiscard]] std::size_t dim0() const noexcept { return d0_; }
    [[nodiscard]] std::size_t dim1() const noexcept { return d1_; }
    [[nodiscard]] std::size_t dim2() const noexcept { return d2_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j, std::size_t k) noexcept {
        return data_[(i * d1_ + j) * d2_ + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept {
        return data_[(i * d1_ + j) * d2_ + k];
    }

    /// The innermost vector at (i, j).
    [[nodiscard]] std::span<double> row(std::size_t i, std::size_t j) noexcept {
        return {data_.data() + (i * d1_ + j) * d2_, d2_};
    }
    [[nodiscard]] std::span<const double> row(std::size_t i, std::size_t j) const noexcept {
        return {data_.data() + (i * d1_ + j) * d2_, d2_};
    }

    [[nodiscard]] double* data() noexcept { return data_.data(); }
    [[nodiscard]] const double* data() const noexcept { return data_.data(); }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return data_; }

    friend bool operator==(const Tensor3&, const Tensor3&) = default;

private:
    std::size_t d0_ = 0;
    std::size_t d1_ = 0;
    std::size_t d2_ = 0;
    std::vector<double> data_;
};

}  // namespace qbsde
