#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace qbsde {

/// A row-major matrix of parameters with a name and a trainable flag.
struct NamedTensor {
    std::string name;
    bool trainable = true;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

/// Model container shared by every approximator and the solver head.
///
/// Text layout, one record per line:
///
///     qbsde-checkpoint 1
///     model <kind>
///     meta <key> <value>                          (zero or more)
///     tensor <name> <trainable 0|1> <rows> <cols>
///     <cols values>                               (repeated rows times)
///     end
///
/// Values are written in shortest round-trip decimal form, so reading a
/// checkpoint back reproduces every double bit for bit.
struct Checkpoint {
    std::string model;
    std::map<std::string, std::string> meta;
    std::vector<NamedTensor> tensors;

    [[nodiscard]] const NamedTensor& tensor(const std::string& name) const;
    [[nodiscard]] const std::string& meta_value(const std::string& key) const;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
[[nodiscard]] Checkpoint read_checkpoint(std::istream& is);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
[[nodiscard]] Checkpoint load_checkpoint(const std::string& path);

/// Shortest decimal text that parses back to exactly `v`.
[[nodiscard]] std::string format_double(double v);

}  // namespace qbsde
