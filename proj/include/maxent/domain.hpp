#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "maxent/errors.hpp"

namespace maxent {

enum class BlockKind { Bit, OneHot };
enum class BlockRole { Feature, Label, Protected };

/// One attribute of the domain: a single binary coordinate or a one-hot
/// group of k coordinates encoding a k-valued categorical attribute.
struct AttributeBlock {
    std::string name;
    BlockKind kind = BlockKind::Bit;
    int cardinality = 2;  // number of attribute values (always 2 for Bit)
    BlockRole role = BlockRole::Feature;
    int offset = 0;  // first coordinate in the flattened bit vector
    std::vector<std::string> categories;  // value labels, size == cardinality

    int width() const { return kind == BlockKind::Bit ? 1 : cardinality; }
};

inline AttributeBlock bit_block(std::string name, BlockRole role = BlockRole::Feature,
                                std::vector<std::string> categories = {}) {
    AttributeBlock b;
    b.name = std::move(name);
    b.kind = BlockKind::Bit;
    b.cardinality = 2;
    b.role = role;
    b.categories = categories.empty() ? std::vector<std::string>{"0", "1"}
                                      : std::move(categories);
    return b;
}

inline AttributeBlock onehot_block(std::string name, int cardinality,
                                   BlockRole role = BlockRole::Feature,
                                   std::vector<std::string> categories = {}) {
    AttributeBlock b;
    b.name = std::move(name);
    b.kind = BlockKind::OneHot;
    b.cardinality = cardinality;
    b.role = role;
    if (categories.empty()) {
        for (int c = 0; c < cardinality; ++c) b.categories.push_back(std::to_string(c));
    } else {
        b.categories = std::move(categories);
    }
    return b;
}

/// A point of the domain: d coordinates in {0,1}, one-hot within each
/// categorical block.
struct DataPoint {
    std::vector<std::uint8_t> bits;

    bool operator==(const DataPoint& o) const { return bits == o.bits; }
    int dimension() const { return static_cast<int>(bits.size()); }
};

struct DataPointHash {
    std::size_t operator()(const DataPoint& p) const {
        // FNV-1a over the bit bytes
        std::uint64_t h = 1469598103934665603ULL;
        for (std::uint8_t b : p.bits) {
            h ^= b;
            h *= 1099511628211ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

/// Ordered list of attribute blocks describing Ω = Ω₁ × … × Ω_m as a set of
/// d-coordinate bit vectors. Immutable after construction.
class DomainSchema {
public:
    DomainSchema() = default;

    explicit DomainSchema(std::vector<AttributeBlock> blocks) : blocks_(std::move(blocks)) {
        int offset = 0;
        for (auto& b : blocks_) {
            if (b.kind == BlockKind::OneHot && b.cardinality < 2)
                throw SchemaError("one-hot block '" + b.name + "' needs cardinality >= 2");
            if (b.kind == BlockKind::Bit) b.cardinality = 2;
            if (static_cast<int>(b.categories.size()) != b.cardinality)
                throw SchemaError("block '" + b.name + "' has " +
                                  std::to_string(b.categories.size()) + " category labels, expected " +
                                  std::to_string(b.cardinality));
            b.offset = offset;
            offset += b.width();
        }
        d_ = offset;
        if (d_ < 1) throw SchemaError("schema has no coordinates");
        for (int i = 0; i < block_count(); ++i) {
            if (blocks_[i].role == BlockRole::Protected) {
                if (protected_block_ >= 0) throw SchemaError("more than one protected block");
                protected_block_ = i;
            }
            if (blocks_[i].role == BlockRole::Label) {
                if (label_block_ >= 0) throw SchemaError("more than one label block");
                label_block_ = i;
            }
        }
        coord_block_.resize(d_);
        for (int b = 0; b < block_count(); ++b)
            for (int j = 0; j < blocks_[b].width(); ++j) coord_block_[blocks_[b].offset + j] = b;
    }

    int dimension() const { return d_; }
    int block_count() const { return static_cast<int>(blocks_.size()); }
    const AttributeBlock& block(int b) const { return blocks_.at(b); }
    const std::vector<AttributeBlock>& blocks() const { return blocks_; }
    int block_of(int coordinate) const { return coord_block_.at(coordinate); }

    bool has_protected() const { return protected_block_ >= 0; }
    bool has_label() const { return label_block_ >= 0; }

    int protected_block() const {
        if (protected_block_ < 0) throw SchemaError("schema has no protected block");
        return protected_block_;
    }
    int label_block() const {
        if (label_block_ < 0) throw SchemaError("schema has no label block");
        return label_block_;
    }

    /// Coordinate index ℓ of the protected attribute; requires a binary block.
    int protected_index() const {
        const auto& b = block(protected_block());
        if (b.kind != BlockKind::Bit)
            throw SchemaError("protected attribute must be binary; binarize at ingestion");
        return b.offset;
    }
    int label_index() const {
        const auto& b = block(label_block());
        if (b.kind != BlockKind::Bit)
            throw SchemaError("class label must be binary");
        return b.offset;
    }

    /// Natural log of |Ω| = Π block cardinalities.
    double log_domain_size() const {
        double s = 0.0;
        for (const auto& b : blocks_) s += std::log(static_cast<double>(b.cardinality));
        return s;
    }

    /// Value of block b in point p (bit value, or hot index for one-hot).
    int block_value(const DataPoint& p, int b) const {
        const auto& blk = block(b);
        if (p.dimension() != d_) throw InvalidPoint("point has wrong dimension");
        if (blk.kind == BlockKind::Bit) return p.bits[blk.offset];
        int hot = -1;
        for (int c = 0; c < blk.cardinality; ++c) {
            if (p.bits[blk.offset + c]) {
                if (hot >= 0) throw InvalidOneHot(blk.name);
                hot = c;
            }
        }
        if (hot < 0) throw InvalidOneHot(blk.name);
        return hot;
    }

    void set_block_value(DataPoint& p, int b, int value) const {
        const auto& blk = block(b);
        if (value < 0 || value >= blk.cardinality)
            throw UnknownCategory(blk.name, std::to_string(value));
        if (blk.kind == BlockKind::Bit) {
            p.bits[blk.offset] = static_cast<std::uint8_t>(value);
        } else {
            for (int c = 0; c < blk.cardinality; ++c) p.bits[blk.offset + c] = 0;
            p.bits[blk.offset + value] = 1;
        }
    }

    bool valid_point(const DataPoint& p) const {
        if (p.dimension() != d_) return false;
        for (int b = 0; b < block_count(); ++b) {
            const auto& blk = blocks_[b];
            if (blk.kind == BlockKind::Bit) {
                if (p.bits[blk.offset] > 1) return false;
            } else {
                int hot = 0;
                for (int c = 0; c < blk.cardinality; ++c) hot += p.bits[blk.offset + c] ? 1 : 0;
                if (hot != 1) return false;
            }
        }
        return true;
    }

    bool operator==(const DomainSchema& o) const {
        if (block_count() != o.block_count()) return false;
        for (int b = 0; b < block_count(); ++b) {
            const auto& x = blocks_[b];
            const auto& y = o.blocks_[b];
            if (x.name != y.name || x.kind != y.kind || x.cardinality != y.cardinality ||
                x.role != y.role || x.categories != y.categories)
                return false;
        }
        return true;
    }

private:
    std::vector<AttributeBlock> blocks_;
    std::vector<int> coord_block_;
    int d_ = 0;
    int protected_block_ = -1;
    int label_block_ = -1;
};

/// Distinct points with positive integer frequencies; adding an existing
/// point merges frequencies.
class Dataset {
public:
    void add(DataPoint p, std::int64_t frequency = 1) {
        if (frequency < 1) throw InvalidPoint("frequency must be >= 1");
        auto it = index_.find(p);
        if (it != index_.end()) {
            freqs_[it->second] += frequency;
        } else {
            index_.emplace(p, points_.size());
            points_.push_back(std::move(p));
            freqs_.push_back(frequency);
        }
        total_ += frequency;
    }

    std::size_t size() const { return points_.size(); }
    std::int64_t total() const { return total_; }
    const DataPoint& point(std::size_t i) const { return points_[i]; }
    std::int64_t frequency(std::size_t i) const { return freqs_[i]; }
    const std::vector<DataPoint>& points() const { return points_; }
    const std::vector<std::int64_t>& frequencies() const { return freqs_; }

    std::optional<std::size_t> find(const DataPoint& p) const {
        auto it = index_.find(p);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::vector<DataPoint> points_;
    std::vector<std::int64_t> freqs_;
    std::int64_t total_ = 0;
    std::unordered_map<DataPoint, std::size_t, DataPointHash> index_;
};

/// Encode one record given as a per-block value index (bit value or category
/// index). Inverse of decode_point.
inline DataPoint encode_record(const DomainSchema& schema, const std::vector<int>& values) {
    if (static_cast<int>(values.size()) != schema.block_count())
        throw ArityMismatch(schema.block_count(), values.size());
    DataPoint p;
    p.bits.assign(schema.dimension(), 0);
    for (int b = 0; b < schema.block_count(); ++b) schema.set_block_value(p, b, values[b]);
    return p;
}

/// Encode one record given as category labels (the CSV representation).
inline DataPoint encode_record_labels(const DomainSchema& schema,
                                      const std::vector<std::string>& labels) {
    if (static_cast<int>(labels.size()) != schema.block_count())
        throw ArityMismatch(schema.block_count(), labels.size());
    std::vector<int> values(labels.size());
    for (int b = 0; b < schema.block_count(); ++b) {
        const auto& cats = schema.block(b).categories;
        auto it = std::find(cats.begin(), cats.end(), labels[b]);
        if (it == cats.end()) throw UnknownCategory(schema.block(b).name, labels[b]);
        values[b] = static_cast<int>(it - cats.begin());
    }
    return encode_record(schema, values);
}

inline std::vector<int> decode_point(const DomainSchema& schema, const DataPoint& p) {
    std::vector<int> values(schema.block_count());
    for (int b = 0; b < schema.block_count(); ++b) values[b] = schema.block_value(p, b);
    return values;
}

/// θ^d: coordinate-wise mean of the dataset, (1/N) Σ n_α α.
inline Eigen::VectorXd empirical_marginal(const Dataset& ds) {
    if (ds.size() == 0) throw EmptyDataset();
    const int d = ds.point(0).dimension();
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double f = static_cast<double>(ds.frequency(i));
        for (int j = 0; j < d; ++j) theta[j] += f * ds.point(i).bits[j];
    }
    theta /= static_cast<double>(ds.total());
    return theta;
}

/// Interiority margin η = min_i min(θ_i, 1−θ_i); throws BoundaryMarginal
/// (reporting the first offending coordinate) when η < eta_min.
inline double validate_interior(const Eigen::VectorXd& theta, double eta_min = 1e-6) {
    double eta = 0.5;
    for (int i = 0; i < theta.size(); ++i) {
        const double m = std::min(theta[i], 1.0 - theta[i]);
        if (m < eta_min) throw BoundaryMarginal(i, theta[i]);
        eta = std::min(eta, m);
    }
    return eta;
}

/// Clamping alternative to validate_interior: out-of-range coordinates are
/// moved to the boundary of the admissible interior. Returns the number of
/// clamped coordinates so callers can log a warning.
inline int clamp_to_interior(Eigen::VectorXd& theta, double eta_min = 1e-6) {
    int clamped = 0;
    for (int i = 0; i < theta.size(); ++i) {
        if (theta[i] < eta_min) {
            theta[i] = eta_min;
            ++clamped;
        } else if (theta[i] > 1.0 - eta_min) {
            theta[i] = 1.0 - eta_min;
            ++clamped;
        }
    }
    return clamped;
}

}  // namespace maxent
