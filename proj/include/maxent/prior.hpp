#pragma once

#include <cmath>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "maxent/domain.hpp"
#include "maxent/errors.hpp"

namespace maxent {

/// A probability distribution supported on the dataset points.
struct ReweightedDistribution {
    std::vector<DataPoint> support;
    std::vector<double> weights;  // sums to 1
    std::optional<double> tau;    // balance parameter, set when built by reweight()
};

/// Balance the dataset so that for every label value y the group-0 mass is
/// exactly tau times the group-1 mass: point α gets weight
/// n_α · c(Y_α) / c(Y_α, Z_α), the z = 0 cell count scaled by 1/tau, then the
/// weights are normalized. Runs in one pass over the dataset.
inline ReweightedDistribution reweight(const Dataset& ds, const DomainSchema& schema,
                                       double tau) {
    if (!(tau > 0.0) || tau > 1.0) throw InvalidTau(tau);
    if (ds.size() == 0) throw EmptyDataset();
    const int label = schema.label_index();
    const int prot = schema.protected_index();

    // raw cell counts c(y) and c(y, z)
    std::int64_t c_y[2] = {0, 0};
    std::int64_t c_yz[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& p = ds.point(i);
        c_y[p.bits[label]] += ds.frequency(i);
        c_yz[p.bits[label]][p.bits[prot]] += ds.frequency(i);
    }
    for (int y = 0; y < 2; ++y) {
        for (int z = 0; z < 2; ++z) {
            if (c_yz[y][z] == 0 && c_yz[y][1 - z] != 0) throw EmptyCell(y, z);
        }
    }

    ReweightedDistribution w;
    w.support = ds.points();
    w.weights.resize(ds.size());
    w.tau = tau;
    double total = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& p = ds.point(i);
        const int y = p.bits[label];
        const int z = p.bits[prot];
        const double cell = z == 0 ? static_cast<double>(c_yz[y][0]) / tau
                                   : static_cast<double>(c_yz[y][1]);
        w.weights[i] = static_cast<double>(ds.frequency(i)) *
                       static_cast<double>(c_y[y]) / cell;
        total += w.weights[i];
    }
    for (auto& x : w.weights) x /= total;
    return w;
}

/// Empirical weights n_α / N (the unadjusted baseline prior support).
inline ReweightedDistribution empirical_weights(const Dataset& ds) {
    if (ds.size() == 0) throw EmptyDataset();
    ReweightedDistribution w;
    w.support = ds.points();
    w.weights.resize(ds.size());
    const double n = static_cast<double>(ds.total());
    for (std::size_t i = 0; i < ds.size(); ++i)
        w.weights[i] = static_cast<double>(ds.frequency(i)) / n;
    return w;
}

/// The mixture C·u + (1−C)·w of the uniform distribution over the domain and
/// a distribution supported on the dataset. Immutable; every domain point
/// keeps mass at least C/|Ω|.
class MixedPrior {
public:
    MixedPrior(DomainSchema schema, double C, ReweightedDistribution w)
        : schema_(std::move(schema)), c_(C), weighted_(std::move(w)) {
        if (!(C >= 0.0 && C <= 1.0)) throw Error("C outside [0, 1]");
        if (weighted_.support.size() != weighted_.weights.size())
            throw Error("support and weight lists differ in length");
        if (c_ < 1.0) {
            if (weighted_.support.empty())
                throw Error("a mixture with C < 1 needs a weighted part");
            double sum = 0.0;
            for (double x : weighted_.weights) {
                if (x < 0.0) throw Error("negative support weight");
                sum += x;
            }
            if (std::abs(sum - 1.0) > 1e-9) throw Error("support weights must sum to 1");
        }
        log_domain_size_ = schema_.log_domain_size();
        support_ones_.resize(weighted_.support.size());
        for (std::size_t i = 0; i < weighted_.support.size(); ++i) {
            const auto& p = weighted_.support[i];
            if (!schema_.valid_point(p)) throw InvalidPoint("support point violates schema");
            for (int j = 0; j < p.dimension(); ++j)
                if (p.bits[j]) support_ones_[i].push_back(j);
            index_.emplace(p, i);
        }
    }

    const DomainSchema& schema() const { return schema_; }
    double uniform_coefficient() const { return c_; }
    std::optional<double> tau() const { return weighted_.tau; }
    const std::vector<DataPoint>& support() const { return weighted_.support; }
    const std::vector<double>& weights() const { return weighted_.weights; }
    const ReweightedDistribution& weighted() const { return weighted_; }
    double log_domain_size() const { return log_domain_size_; }

    /// Indices of set coordinates per support point (cached for the oracles).
    const std::vector<std::vector<std::int32_t>>& support_ones() const { return support_ones_; }

    /// w(α), zero off-support.
    double support_weight(const DataPoint& p) const {
        auto it = index_.find(p);
        return it == index_.end() ? 0.0 : weighted_.weights[it->second];
    }

    std::optional<std::size_t> support_index(const DataPoint& p) const {
        auto it = index_.find(p);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    /// q(α) = C/|Ω| + (1−C)·w(α).
    double mass(const DataPoint& p) const {
        if (!schema_.valid_point(p)) throw InvalidPoint("point violates schema");
        return c_ * std::exp(-log_domain_size_) + (1.0 - c_) * support_weight(p);
    }

private:
    DomainSchema schema_;
    double c_ = 0.5;
    ReweightedDistribution weighted_;
    double log_domain_size_ = 0.0;
    std::vector<std::vector<std::int32_t>> support_ones_;
    std::unordered_map<DataPoint, std::size_t, DataPointHash> index_;
};

inline MixedPrior mix_prior(double C, const DomainSchema& schema, ReweightedDistribution w) {
    return MixedPrior(schema, C, std::move(w));
}

inline double prior_mass(const MixedPrior& q, const DataPoint& p) { return q.mass(p); }

}  // namespace maxent
