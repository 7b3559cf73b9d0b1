#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "maxent/numeric.hpp"
#include "maxent/rng.hpp"
#include "maxent/solver.hpp"

namespace maxent {

/// A subset of blocks pinned to concrete values.
class PartialAssignment {
public:
    explicit PartialAssignment(const DomainSchema& schema)
        : values_(schema.block_count(), -1) {
        cards_.reserve(schema.block_count());
        for (const auto& b : schema.blocks()) cards_.push_back(b.cardinality);
    }

    void assign(int block, int value) {
        if (block < 0 || block >= static_cast<int>(values_.size()))
            throw InconsistentAssignment("block index out of range");
        if (value < 0 || value >= cards_[block])
            throw InconsistentAssignment("value out of range for block " + std::to_string(block));
        if (values_[block] >= 0) throw BlockAlreadyAssigned(block);
        values_[block] = value;
    }

    bool assigned(int block) const { return values_.at(block) >= 0; }
    int value(int block) const { return values_.at(block); }
    int block_count() const { return static_cast<int>(values_.size()); }

private:
    std::vector<int> values_;
    std::vector<int> cards_;
};

/// Exact marginalization engine for a solved model: restricted partition
/// sums, block conditionals, point probabilities and sequential sampling.
/// Per-model factors are precomputed once; a restricted sum then costs
/// O(N + m) where m is the block count.
class PartitionOracle {
public:
    explicit PartitionOracle(const MaxEntModel& model) : model_(model) {
        const auto& schema = model.schema();
        const auto& prior = model.prior;
        const int m = schema.block_count();
        const double c = prior.uniform_coefficient();

        block_exponents_.resize(m);
        block_free_.resize(m);
        for (int b = 0; b < m; ++b) {
            const auto& blk = schema.block(b);
            auto& t = block_exponents_[b];
            t.resize(blk.cardinality);
            if (blk.kind == BlockKind::Bit) {
                t[0] = 0.0;
                t[1] = model.lambda[blk.offset];
            } else {
                for (int v = 0; v < blk.cardinality; ++v) t[v] = model.lambda[blk.offset + v];
            }
            block_free_[b] = logsumexp(t);
        }
        log_uniform_base_ = c > 0.0 ? std::log(c) - prior.log_domain_size() : kNegInf;

        const std::size_t n = prior.support().size();
        support_exponents_.assign(n, kNegInf);
        support_values_.resize(n);
        const double log_1mc = c < 1.0 ? std::log1p(-c) : kNegInf;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& p = prior.support()[i];
            support_values_[i].resize(m);
            for (int b = 0; b < m; ++b)
                support_values_[i][b] = schema.block_value(p, b);
            if (prior.weights()[i] > 0.0 && c < 1.0) {
                double dot = 0.0;
                for (auto j : prior.support_ones()[i]) dot += model.lambda[j];
                support_exponents_[i] = log_1mc + std::log(prior.weights()[i]) + dot;
            }
        }
        log_partition_ = restricted_log_partition(PartialAssignment(schema));
    }

    const MaxEntModel& model() const { return model_; }

    /// log Σ_β q(β) e^{⟨λ,β⟩}, the unshifted normalizer.
    double log_partition() const { return log_partition_; }

    /// log of the partition sum restricted to points consistent with pa.
    double restricted_log_partition(const PartialAssignment& pa) const {
        const int m = pa.block_count();
        if (m != model_.schema().block_count())
            throw InconsistentAssignment("assignment built for a different schema");
        double uniform = log_uniform_base_;
        if (uniform != kNegInf) {
            for (int b = 0; b < m; ++b)
                uniform += pa.assigned(b) ? block_exponents_[b][pa.value(b)] : block_free_[b];
        }
        double wmax = kNegInf;
        for (std::size_t i = 0; i < support_exponents_.size(); ++i)
            if (consistent(i, pa)) wmax = std::max(wmax, support_exponents_[i]);
        double weighted = kNegInf;
        if (wmax != kNegInf) {
            double s = 0.0;
            for (std::size_t i = 0; i < support_exponents_.size(); ++i)
                if (consistent(i, pa)) s += std::exp(support_exponents_[i] - wmax);
            weighted = wmax + std::log(s);
        }
        return logsumexp2(uniform, weighted);
    }

    /// Conditional distribution of block j's value given the assignment.
    Eigen::VectorXd conditional_block_distribution(const PartialAssignment& pa, int block) const {
        if (pa.assigned(block)) throw BlockAlreadyAssigned(block);
        const int k = model_.schema().block(block).cardinality;
        Eigen::VectorXd logs(k);
        for (int v = 0; v < k; ++v) {
            PartialAssignment ext = pa;
            ext.assign(block, v);
            logs[v] = restricted_log_partition(ext);
        }
        const double total = logsumexp(std::span<const double>(logs.data(), logs.size()));
        if (total == kNegInf)
            throw InconsistentAssignment("conditioning event has zero probability");
        Eigen::VectorXd probs(k);
        for (int v = 0; v < k; ++v) probs[v] = std::exp(logs[v] - total);
        return probs;
    }

    /// log p(α) = log q(α) + ⟨λ,α⟩ − log Z.
    double log_prob(const DataPoint& p) const {
        const double q = model_.prior.mass(p);
        if (q == 0.0) return kNegInf;
        double dot = 0.0;
        for (int j = 0; j < p.dimension(); ++j)
            if (p.bits[j]) dot += model_.lambda[j];
        return std::log(q) + dot - log_partition_;
    }

    /// Exact probability of a joint event given as (block, value) pins.
    double joint_mass(const std::vector<std::pair<int, int>>& fixes) const {
        PartialAssignment pa(model_.schema());
        for (auto [b, v] : fixes) pa.assign(b, v);
        return std::exp(restricted_log_partition(pa) - log_partition_);
    }

private:
    friend class SampleSession;

    bool consistent(std::size_t i, const PartialAssignment& pa) const {
        if (support_exponents_[i] == kNegInf) return false;
        for (int b = 0; b < pa.block_count(); ++b)
            if (pa.assigned(b) && support_values_[i][b] != pa.value(b)) return false;
        return true;
    }

    const MaxEntModel& model_;
    std::vector<std::vector<double>> block_exponents_;  // f_{b,v} = ⟨bits(v), λ_b⟩
    std::vector<double> block_free_;                    // log Σ_v e^{f_{b,v}}
    double log_uniform_base_ = kNegInf;                 // log C − log|Ω|
    std::vector<double> support_exponents_;             // log((1−C) w_i) + ⟨λ, α_i⟩
    std::vector<std::vector<std::int32_t>> support_values_;
    double log_partition_ = 0.0;
};

/// Draws points by sampling blocks sequentially from their exact conditional
/// distributions, maintaining the running restricted partition: the uniform
/// factor product is updated in O(1) per block and the support is filtered
/// incrementally, so a sample costs O(N + Σ_b k_b) instead of O(N·d²).
class SampleSession {
public:
    explicit SampleSession(const PartitionOracle& oracle) : po_(oracle) {
        const int m = po_.model().schema().block_count();
        order_.resize(m);
        for (int b = 0; b < m; ++b) order_[b] = b;
    }

    /// Blocks are drawn in the given order; the induced distribution is the
    /// model distribution for any fixed order.
    void set_block_order(std::vector<int> order) { order_ = std::move(order); }

    DataPoint draw(SplitMix64& rng) {
        const auto& schema = po_.model().schema();
        const int m = schema.block_count();
        double uniform_run = po_.log_uniform_base_;
        if (uniform_run != kNegInf)
            for (int b = 0; b < m; ++b) uniform_run += po_.block_free_[b];
        active_.clear();
        for (std::size_t i = 0; i < po_.support_exponents_.size(); ++i)
            if (po_.support_exponents_[i] != kNegInf)
                active_.push_back(static_cast<std::int32_t>(i));

        DataPoint p;
        p.bits.assign(schema.dimension(), 0);
        for (int b : order_) {
            const int k = schema.block(b).cardinality;
            // weighted restricted sums bucketed by this block's value
            bucket_max_.assign(k, kNegInf);
            for (auto i : active_) {
                const int v = po_.support_values_[i][b];
                bucket_max_[v] = std::max(bucket_max_[v], po_.support_exponents_[i]);
            }
            bucket_sum_.assign(k, 0.0);
            for (auto i : active_) {
                const int v = po_.support_values_[i][b];
                bucket_sum_[v] += std::exp(po_.support_exponents_[i] - bucket_max_[v]);
            }
            logs_.assign(k, kNegInf);
            for (int v = 0; v < k; ++v) {
                const double uni = uniform_run == kNegInf
                                       ? kNegInf
                                       : uniform_run - po_.block_free_[b] +
                                             po_.block_exponents_[b][v];
                const double wgt = bucket_max_[v] == kNegInf
                                       ? kNegInf
                                       : bucket_max_[v] + std::log(bucket_sum_[v]);
                logs_[v] = logsumexp2(uni, wgt);
            }
            const double total = logsumexp(logs_);
            const double u = rng.next_double();
            int v = k - 1;
            double cdf = 0.0;
            for (int c = 0; c < k; ++c) {
                cdf += std::exp(logs_[c] - total);
                if (u < cdf) {
                    v = c;
                    break;
                }
            }
            schema.set_block_value(p, b, v);
            if (uniform_run != kNegInf)
                uniform_run += po_.block_exponents_[b][v] - po_.block_free_[b];
            std::size_t keep = 0;
            for (auto i : active_)
                if (po_.support_values_[i][b] == v) active_[keep++] = i;
            active_.resize(keep);
        }
        return p;
    }

private:
    const PartitionOracle& po_;
    std::vector<int> order_;
    std::vector<std::int32_t> active_;
    std::vector<double> bucket_max_, bucket_sum_, logs_;
};

inline double restricted_log_partition(const MaxEntModel& model, const PartialAssignment& pa) {
    return PartitionOracle(model).restricted_log_partition(pa);
}

inline Eigen::VectorXd conditional_block_distribution(const MaxEntModel& model,
                                                      const PartialAssignment& pa, int block) {
    return PartitionOracle(model).conditional_block_distribution(pa, block);
}

inline DataPoint sample_point(const MaxEntModel& model, std::uint64_t seed) {
    PartitionOracle oracle(model);
    SampleSession session(oracle);
    auto rng = SplitMix64::stream(seed, 0);
    return session.draw(rng);
}

/// i.i.d. samples aggregated into a dataset. Sample i uses stream (seed, i),
/// so the output is reproducible and independent of any batching.
inline Dataset sample_dataset(const MaxEntModel& model, std::int64_t count, std::uint64_t seed) {
    if (count < 1) throw Error("sample count must be >= 1");
    PartitionOracle oracle(model);
    SampleSession session(oracle);
    Dataset out;
    for (std::int64_t i = 0; i < count; ++i) {
        auto rng = SplitMix64::stream(seed, static_cast<std::uint64_t>(i));
        out.add(session.draw(rng));
    }
    return out;
}

}  // namespace maxent
