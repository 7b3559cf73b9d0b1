#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "maxent/maxent.hpp"

namespace testutil {

using namespace maxent;

inline bool close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

/// Random schema: a label bit, a protected bit, then a mix of feature bits
/// and small one-hot blocks filling the coordinate budget.
inline DomainSchema random_schema(SplitMix64& rng, int coords) {
    std::vector<AttributeBlock> blocks;
    blocks.push_back(bit_block("y", BlockRole::Label));
    blocks.push_back(bit_block("z", BlockRole::Protected));
    int remaining = coords - 2;
    int n = 0;
    while (remaining > 0) {
        if (remaining >= 3 && rng.next_double() < 0.4) {
            const int k = 3 + static_cast<int>(rng.next_below(
                                  static_cast<std::uint64_t>(std::min(2, remaining - 2))));
            blocks.push_back(onehot_block("c" + std::to_string(n++), std::min(k, remaining)));
            remaining -= blocks.back().width();
        } else {
            blocks.push_back(bit_block("x" + std::to_string(n++)));
            remaining -= 1;
        }
    }
    return DomainSchema(std::move(blocks));
}

/// Random dataset over the schema with every (label, protected) cell present.
inline Dataset random_dataset(SplitMix64& rng, const DomainSchema& schema, int target_total) {
    Dataset ds;
    auto random_point = [&](int force_y, int force_z) {
        std::vector<int> values(schema.block_count());
        for (int b = 0; b < schema.block_count(); ++b)
            values[b] = static_cast<int>(
                rng.next_below(static_cast<std::uint64_t>(schema.block(b).cardinality)));
        if (force_y >= 0) values[schema.label_block()] = force_y;
        if (force_z >= 0) values[schema.protected_block()] = force_z;
        return encode_record(schema, values);
    };
    for (int y = 0; y < 2 && ds.total() < target_total; ++y)
        for (int z = 0; z < 2 && ds.total() < target_total; ++z) ds.add(random_point(y, z));
    while (ds.total() < target_total)
        ds.add(random_point(-1, -1), 1 + static_cast<std::int64_t>(rng.next_below(3)));
    return ds;
}

/// Random block-consistent interior marginal vector.
inline Eigen::VectorXd random_theta(SplitMix64& rng, const DomainSchema& schema) {
    Eigen::VectorXd theta(schema.dimension());
    for (const auto& blk : schema.blocks()) {
        if (blk.kind == BlockKind::Bit) {
            theta[blk.offset] = 0.15 + 0.7 * rng.next_double();
        } else {
            double total = 0.0;
            for (int c = 0; c < blk.cardinality; ++c) {
                theta[blk.offset + c] = 0.3 + 0.7 * rng.next_double();
                total += theta[blk.offset + c];
            }
            for (int c = 0; c < blk.cardinality; ++c) theta[blk.offset + c] /= total;
        }
    }
    return theta;
}

inline Eigen::VectorXd random_lambda(SplitMix64& rng, int d, double scale = 2.0) {
    Eigen::VectorXd lambda(d);
    for (int i = 0; i < d; ++i) lambda[i] = scale * (2.0 * rng.next_double() - 1.0);
    return lambda;
}

/// Random normalized support weights (not necessarily from the reweighting
/// algorithm); exercises the oracles on arbitrary priors.
inline ReweightedDistribution random_weights(SplitMix64& rng, const Dataset& ds) {
    ReweightedDistribution w;
    w.support = ds.points();
    w.weights.resize(ds.size());
    double total = 0.0;
    for (auto& x : w.weights) {
        x = 0.05 + rng.next_double();
        total += x;
    }
    for (auto& x : w.weights) x /= total;
    return w;
}

struct Instance {
    DomainSchema schema;
    Dataset dataset;
    double c;
    MixedPrior prior;
    Eigen::VectorXd theta;
};

inline Instance random_instance(SplitMix64& rng, int coords, int total, double c,
                                bool algorithmic_weights = false, double tau = 1.0) {
    auto schema = random_schema(rng, coords);
    auto ds = random_dataset(rng, schema, total);
    // the reweighting algorithm needs every (y, z) cell occupied
    auto w = algorithmic_weights && total >= 4 ? reweight(ds, schema, tau)
                                               : random_weights(rng, ds);
    MixedPrior prior(schema, c, std::move(w));
    auto theta = random_theta(rng, schema);
    return Instance{std::move(schema), std::move(ds), c, std::move(prior), std::move(theta)};
}

/// All domain points with their exact model probabilities.
inline std::vector<std::pair<DataPoint, double>> enumerate_probs(const MaxEntModel& model) {
    PartitionOracle oracle(model);
    std::vector<std::pair<DataPoint, double>> out;
    for_each_domain_point(model.schema(), [&](const DataPoint& p) {
        out.emplace_back(p, std::exp(oracle.log_prob(p)));
    });
    return out;
}

/// KL(p° ‖ q) by direct enumeration.
inline double kl_model_vs_prior(const MaxEntModel& model) {
    PartitionOracle oracle(model);
    long double kl = 0.0L;
    for_each_domain_point(model.schema(), [&](const DataPoint& p) {
        const double lp = oracle.log_prob(p);
        if (lp == kNegInf) return;
        const double q = model.prior.mass(p);
        kl += static_cast<long double>(std::exp(lp)) * (lp - std::log(q));
    });
    return static_cast<double>(kl);
}

}  // namespace testutil
