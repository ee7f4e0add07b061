#include "qbsde/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qbsde {

namespace {

constexpr const char* kMagic = "qbsde-checkpoint";
constexpr int kVersion = 1;

double parse_double(const std::string& token) {
    double v = 0.0;
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        // from_chars rejects "inf"/"nan" spellings produced by some writers.
        if (token == "nan") return std::numeric_limits<double>::quiet_NaN();
        if (token == "inf") return std::numeric_limits<double>::infinity();
        if (token == "-inf") return -std::numeric_limits<double>::infinity();
        throw std::runtime_error("checkpoint: bad number '" + token + "'");
    }
    return v;
}

std::string next_line(std::istream& is, const char* expecting) {
    std::string line;
    if (!std::getline(is, line)) {
        throw std::runtime_error(std::string("checkpoint: unexpected end of input, expected ") +
                                 expecting);
    }
    return line;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, ptr);
}

const NamedTensor& Checkpoint::tensor(const std::string& name) const {
    for (const auto& t : tensors) {
        if (t.name == name) return t;
    }
    throw std::runtime_error("checkpoint: no tensor named '" + name + "'");
}

const std::string& Checkpoint::meta_value(const std::string& key) const {
    auto it = meta.find(key);
    if (it == meta.end()) throw std::runtime_error("checkpoint: missing meta '" + key + "'");
    return it->second;
}

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
    os << kMagic << ' ' << kVersion << '\n';
    os << "model " << ckpt.model << '\n';
    for (const auto& [key, value] : ckpt.meta) os << "meta " << key << ' ' << value << '\n';
    for (const auto& t : ckpt.tensors) {
        if (t.values.size() != t.rows * t.cols) {
            throw std::invalid_argument("checkpoint: tensor '" + t.name + "' has inconsistent shape");
        }
        os << "tensor " << t.name << ' ' << (t.trainable ? 1 : 0) << ' ' << t.rows << ' '
           << t.cols << '\n';
        for (std::size_t r = 0; r < t.rows; ++r) {
            for (std::size_t c = 0; c < t.cols; ++c) {
                if (c) os << ' ';
                os << format_double(t.values[r * t.cols + c]);
            }
            os << '\n';
        }
    }
    os << "end\n";
}

Checkpoint read_checkpoint(std::istream& is) {
    Checkpoint ckpt;
    {
        std::istringstream header(next_line(is, "header"));
        std::string magic;
        int version = 0;
        header >> magic >> version;
        if (magic != kMagic || version != kVersion) {
            throw std::runtime_error("checkpoint: unsupported header");
        }
    }
    {
        std::istringstream line(next_line(is, "model line"));
        std::string tag;
        line >> tag >> ckpt.model;
        if (tag != "model" || ckpt.model.empty()) throw std::runtime_error("checkpoint: bad model line");
    }
    for (;;) {
        const std::string raw = next_line(is, "record");
        std::istringstream line(raw);
        std::string tag;
        line >> tag;
        if (tag == "end") break;
        if (tag == "meta") {
            std::string key, value;
            line >> key >> value;
            if (key.empty()) throw std::runtime_error("checkpoint: bad meta line");
            ckpt.meta[key] = value;
        } else if (tag == "tensor") {
            NamedTensor t;
            int trainable = 0;
            if (!(line >> t.name >> trainable >> t.rows >> t.cols)) {
                throw std::runtime_error("checkpoint: bad tensor header '" + raw + "'");
            }
            t.trainable = trainable != 0;
            t.values.reserve(t.rows * t.cols);
            for (std::size_t r = 0; r < t.rows; ++r) {
                std::istringstream row(next_line(is, "tensor row"));
                std::string token;
                std::size_t count = 0;
                while (row >> token) {
                    t.values.push_back(parse_double(token));
                    ++count;
                }
                if (count != t.cols) {
                    throw std::runtime_error("checkpoint: tensor '" + t.name + "' row has " +
                                             std::to_string(count) + " values, expected " +
                                             std::to_string(t.cols));
                }
            }
            ckpt.tensors.push_back(std::move(t));
        } else {
            throw std::runtime_error("checkpoint: unknown record '" + tag + "'");
        }
    }
    return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_checkpoint(os, ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open '" + path + "'");
    return read_checkpoint(is);
}

}  // namespace qbsde
