#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "maxent/sampler.hpp"

namespace maxent {

enum class ReportSource { ExactDistribution, EmpiricalDataset };

struct FairnessReport {
    double representation_rate = 0.0;
    double statistical_rate = 0.0;
    std::vector<double> group_mass;         // P(Z = z), indexed by protected value
    std::vector<double> group_conditional;  // P(Y = y | Z = z)
    int label_value = 1;
    int protected_block = -1;
    ReportSource source = ReportSource::EmpiricalDataset;
};

namespace detail {

/// min over ordered pairs (z_i, z_j) of m_i / m_j; with all masses positive
/// this is min(m) / max(m).
inline double min_pair_ratio(const std::vector<double>& m) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double x : m) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    return lo / hi;
}

inline std::vector<double> group_masses(const Dataset& ds, const DomainSchema& schema) {
    const int pb = schema.protected_block();
    std::vector<double> mass(schema.block(pb).cardinality, 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i)
        mass[schema.block_value(ds.point(i), pb)] += static_cast<double>(ds.frequency(i));
    for (auto& x : mass) x /= static_cast<double>(ds.total());
    return mass;
}

inline std::vector<double> group_masses(const PartitionOracle& oracle) {
    const auto& schema = oracle.model().schema();
    const int pb = schema.protected_block();
    std::vector<double> mass(schema.block(pb).cardinality);
    for (int z = 0; z < static_cast<int>(mass.size()); ++z)
        mass[z] = oracle.joint_mass({{pb, z}});
    return mass;
}

}  // namespace detail

inline double representation_rate(const Dataset& ds, const DomainSchema& schema) {
    auto mass = detail::group_masses(ds, schema);
    for (std::size_t z = 0; z < mass.size(); ++z)
        if (mass[z] == 0.0) throw ZeroGroupMass(static_cast<int>(z));
    return detail::min_pair_ratio(mass);
}

inline double representation_rate(const MaxEntModel& model) {
    PartitionOracle oracle(model);
    auto mass = detail::group_masses(oracle);
    for (std::size_t z = 0; z < mass.size(); ++z)
        if (mass[z] == 0.0) throw ZeroGroupMass(static_cast<int>(z));
    return detail::min_pair_ratio(mass);
}

inline FairnessReport fairness_report(const Dataset& ds, const DomainSchema& schema,
                                      int label_value) {
    const int pb = schema.protected_block();
    const int lb = schema.label_block();
    FairnessReport r;
    r.label_value = label_value;
    r.protected_block = pb;
    r.source = ReportSource::EmpiricalDataset;
    r.group_mass = detail::group_masses(ds, schema);
    const int k = schema.block(pb).cardinality;
    std::vector<double> joint(k, 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (schema.block_value(ds.point(i), lb) != label_value) continue;
        joint[schema.block_value(ds.point(i), pb)] += static_cast<double>(ds.frequency(i));
    }
    r.group_conditional.resize(k);
    for (int z = 0; z < k; ++z) {
        if (r.group_mass[z] == 0.0) throw ZeroGroupMass(z);
        joint[z] /= static_cast<double>(ds.total());
        if (joint[z] == 0.0) throw ZeroJointMass(label_value, z);
        r.group_conditional[z] = joint[z] / r.group_mass[z];
    }
    r.representation_rate = detail::min_pair_ratio(r.group_mass);
    r.statistical_rate = detail::min_pair_ratio(r.group_conditional);
    return r;
}

/// Exact report: joint masses come from restricted partition sums, so there
/// is no Monte-Carlo noise.
inline FairnessReport fairness_report(const MaxEntModel& model, int label_value) {
    const auto& schema = model.schema();
    const int pb = schema.protected_block();
    const int lb = schema.label_block();
    PartitionOracle oracle(model);
    FairnessReport r;
    r.label_value = label_value;
    r.protected_block = pb;
    r.source = ReportSource::ExactDistribution;
    r.group_mass = detail::group_masses(oracle);
    const int k = schema.block(pb).cardinality;
    r.group_conditional.resize(k);
    for (int z = 0; z < k; ++z) {
        if (r.group_mass[z] == 0.0) throw ZeroGroupMass(z);
        const double joint = oracle.joint_mass({{lb, label_value}, {pb, z}});
        if (joint == 0.0) throw ZeroJointMass(label_value, z);
        r.group_conditional[z] = joint / r.group_mass[z];
    }
    r.representation_rate = detail::min_pair_ratio(r.group_mass);
    r.statistical_rate = detail::min_pair_ratio(r.group_conditional);
    return r;
}

inline double statistical_rate(const Dataset& ds, const DomainSchema& schema, int label_value) {
    return fairness_report(ds, schema, label_value).statistical_rate;
}

inline double statistical_rate(const MaxEntModel& model, int label_value) {
    return fairness_report(model, label_value).statistical_rate;
}

/// Certified statistical-rate floor τ′ = τ − 4δ(1+τ)/(C+4δ) with
/// δ = max_z |p(Y=y,Z=z) − q(Y=y,Z=z)| computed exactly. The hypothesis
/// 1/2 ≤ θ_ℓ ≤ 1/(1+τ) is reported, not enforced.
struct FairnessBound {
    double delta = 0.0;
    double tau_prime = 0.0;
    bool hypothesis_ok = false;
};

inline FairnessBound fairness_bound(const MaxEntModel& model, int label_value, double tau) {
    if (!(tau > 0.0) || tau > 1.0) throw InvalidTau(tau);
    const auto& schema = model.schema();
    const auto& prior = model.prior;
    const int pb = schema.protected_block();
    const int lb = schema.label_block();
    const int lbl_idx = schema.label_index();
    const int prot_idx = schema.protected_index();
    const double c = prior.uniform_coefficient();

    PartitionOracle oracle(model);
    FairnessBound out;
    for (int z = 0; z < 2; ++z) {
        const double p_joint = oracle.joint_mass({{lb, label_value}, {pb, z}});
        // prior joint mass: C · u(Y=y,Z=z) + (1−C) · Σ w over the matching cell
        double w_joint = 0.0;
        for (std::size_t i = 0; i < prior.support().size(); ++i) {
            const auto& pt = prior.support()[i];
            if (pt.bits[lbl_idx] == label_value && pt.bits[prot_idx] == z)
                w_joint += prior.weights()[i];
        }
        const double q_joint = c * 0.25 + (1.0 - c) * w_joint;
        out.delta = std::max(out.delta, std::abs(p_joint - q_joint));
    }
    out.tau_prime = tau - 4.0 * out.delta * (1.0 + tau) / (c + 4.0 * out.delta);
    const double theta_l = model.theta[prot_idx];
    out.hypothesis_ok = theta_l >= 0.5 - 1e-12 && theta_l <= 1.0 / (1.0 + tau) + 1e-12;
    return out;
}

namespace detail {

/// Smoothed empirical reference: zero-mass points get `floor`, then the whole
/// thing is renormalized.
struct SmoothedReference {
    const Dataset& ds;
    double floor;
    double log_norm;

    SmoothedReference(const Dataset& ds, const DomainSchema& schema, double floor)
        : ds(ds), floor(floor) {
        const double points = std::exp(schema.log_domain_size());
        const double off_support = points - static_cast<double>(ds.size());
        log_norm = std::log1p(floor * off_support);
    }

    double log_mass(const DataPoint& p) const {
        auto idx = ds.find(p);
        const double raw = idx ? static_cast<double>(ds.frequency(*idx)) /
                                     static_cast<double>(ds.total())
                               : floor;
        return std::log(raw) - log_norm;
    }
};

inline void check_enumerable(const DomainSchema& schema) {
    if (schema.log_domain_size() > 20.0 * std::log(2.0) + 1e-9)
        throw DomainTooLarge(
            "KL divergence needs full enumeration; use the covariance metric instead");
}

}  // namespace detail

/// KL(p ‖ q̂) of the exact model distribution against the smoothed empirical
/// distribution of `reference`.
inline double kl_divergence_smoothed(const MaxEntModel& model, const Dataset& reference,
                                     double floor = 1e-7) {
    if (!(floor > 0.0)) throw Error("smoothing floor must be positive");
    detail::check_enumerable(model.schema());
    PartitionOracle oracle(model);
    detail::SmoothedReference ref(reference, model.schema(), floor);
    long double kl = 0.0L;
    for_each_domain_point(model.schema(), [&](const DataPoint& p) {
        const double lp = oracle.log_prob(p);
        if (lp == kNegInf) return;
        kl += static_cast<long double>(std::exp(lp)) * (lp - ref.log_mass(p));
    });
    return static_cast<double>(kl);
}

/// KL(p̂ ‖ q̂) between a dataset's empirical distribution and the smoothed
/// empirical distribution of `reference`.
inline double kl_divergence_smoothed(const Dataset& ds, const Dataset& reference,
                                     const DomainSchema& schema, double floor = 1e-7) {
    if (!(floor > 0.0)) throw Error("smoothing floor must be positive");
    detail::check_enumerable(schema);
    detail::SmoothedReference ref(reference, schema, floor);
    long double kl = 0.0L;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double p = static_cast<double>(ds.frequency(i)) / static_cast<double>(ds.total());
        kl += static_cast<long double>(p) * (std::log(p) - ref.log_mass(ds.point(i)));
    }
    return static_cast<double>(kl);
}

namespace detail {

/// Population covariance over decoded attribute columns (bits as 0/1, one-hot
/// blocks as their category index).
inline Eigen::MatrixXd decoded_covariance(const Dataset& ds, const DomainSchema& schema) {
    const int m = schema.block_count();
    const double n = static_cast<double>(ds.total());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd x(m);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (int b = 0; b < m; ++b)
            x[b] = static_cast<double>(schema.block_value(ds.point(i), b));
        const double f = static_cast<double>(ds.frequency(i));
        mean += f * x;
        second += f * (x * x.transpose());
    }
    mean /= n;
    second /= n;
    return second - mean * mean.transpose();
}

}  // namespace detail

/// Frobenius norm of Cov(a) − Cov(b) over decoded attribute columns.
inline double covariance_difference_norm(const Dataset& a, const Dataset& b,
                                         const DomainSchema& schema, bool squared = false) {
    if (a.size() == 0 || b.size() == 0) throw EmptyDataset();
    if (a.point(0).dimension() != schema.dimension() ||
        b.point(0).dimension() != schema.dimension())
        throw SchemaMismatch("dataset does not match the schema dimension");
    const Eigen::MatrixXd diff =
        detail::decoded_covariance(a, schema) - detail::decoded_covariance(b, schema);
    const double norm = diff.norm();
    return squared ? norm * norm : norm;
}

}  // namespace maxent
