#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "maxent/numeric.hpp"
#include "maxent/prior.hpp"

namespace maxent {

/// Value, gradient and (optionally) Hessian of the dual objective
/// h(λ) = log Σ_α q(α) e^{⟨α−θ, λ⟩} at one point.
struct DualEvaluation {
    double value = 0.0;
    Eigen::VectorXd gradient;
    std::optional<Eigen::MatrixXd> hessian;
    double log_partition = 0.0;  // shifted log partition, equals value
};

namespace detail {

inline void check_oracle_inputs(const MixedPrior& q, const Eigen::VectorXd& theta,
                                const Eigen::VectorXd& lambda) {
    const int d = q.schema().dimension();
    if (theta.size() != d) throw DimensionMismatch(d, theta.size());
    if (lambda.size() != d) throw DimensionMismatch(d, lambda.size());
    if (!theta.allFinite() || !lambda.allFinite()) throw NonFiniteInput();
}

/// Per-block pieces of the uniform partition factor. Everything is kept in
/// log scale; the block mean is the softmax of the block's λ entries, which
/// the shift ⟨θ_b, λ_b⟩ does not affect.
struct UniformPart {
    double log_g = 0.0;       // log Σ_valid e^{⟨α−θ,λ⟩} − log|Ω|, summed over blocks
    Eigen::VectorXd mean;     // E_u-tilted [α], block-wise softmax
};

inline UniformPart uniform_part(const DomainSchema& schema, const Eigen::VectorXd& theta,
                                const Eigen::VectorXd& lambda) {
    UniformPart u;
    const int d = schema.dimension();
    u.mean.resize(d);
    std::vector<double> t;
    for (const auto& blk : schema.blocks()) {
        const int o = blk.offset;
        double shift = 0.0;
        for (int j = 0; j < blk.width(); ++j) shift += theta[o + j] * lambda[o + j];
        t.clear();
        if (blk.kind == BlockKind::Bit) {
            t.push_back(-shift);              // α_j = 0
            t.push_back(lambda[o] - shift);   // α_j = 1
        } else {
            for (int c = 0; c < blk.cardinality; ++c) t.push_back(lambda[o + c] - shift);
        }
        const double lse = logsumexp(t);
        u.log_g += lse - std::log(static_cast<double>(blk.cardinality));
        if (blk.kind == BlockKind::Bit) {
            u.mean[o] = std::exp(t[1] - lse);
        } else {
            for (int c = 0; c < blk.cardinality; ++c) u.mean[o + c] = std::exp(t[c] - lse);
        }
    }
    return u;
}

}  // namespace detail

/// Evaluate the dual objective with derivatives up to `order` (0, 1 or 2) in
/// O(d + N·s) / O(d² + N·s²) time, splitting the partition sum into the
/// block-factorized uniform part and the finite-support weighted part. All
/// sums run in log scale so large ‖λ‖ cannot overflow.
inline DualEvaluation dual_evaluate(const MixedPrior& q, const Eigen::VectorXd& theta,
                                    const Eigen::VectorXd& lambda, int order) {
    detail::check_oracle_inputs(q, theta, lambda);
    const auto& schema = q.schema();
    const int d = schema.dimension();
    const double c = q.uniform_coefficient();
    const double log_c = c > 0.0 ? std::log(c) : kNegInf;
    const double log_1mc = c < 1.0 ? std::log1p(-c) : kNegInf;

    const auto u = detail::uniform_part(schema, theta, lambda);

    // weighted part: exponents log w(α) + ⟨α−θ, λ⟩ over the support
    const std::size_t n = q.support().size();
    const double theta_dot_lambda = theta.dot(lambda);
    std::vector<double> expo(n, kNegInf);
    double log_gw = kNegInf;
    if (c < 1.0) {
        for (std::size_t i = 0; i < n; ++i) {
            const double w = q.weights()[i];
            if (w <= 0.0) continue;
            double dot = 0.0;
            for (auto j : q.support_ones()[i]) dot += lambda[j];
            expo[i] = std::log(w) + dot - theta_dot_lambda;
        }
        log_gw = logsumexp(expo);
    }

    DualEvaluation out;
    out.value = logsumexp2(log_c + u.log_g, log_1mc + log_gw);
    out.log_partition = out.value;
    if (!std::isfinite(out.value))
        throw NumericalBreakdown("dual value is not finite");
    if (order < 1) return out;

    const double pi_u = c > 0.0 ? std::exp(log_c + u.log_g - out.value) : 0.0;
    const double pi_w = c < 1.0 ? std::exp(log_1mc + log_gw - out.value) : 0.0;

    std::vector<double> post(n, 0.0);  // support posterior under the tilt
    Eigen::VectorXd mean_w = Eigen::VectorXd::Zero(d);
    if (pi_w > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            if (expo[i] == kNegInf) continue;
            post[i] = std::exp(expo[i] - log_gw);
            for (auto j : q.support_ones()[i]) mean_w[j] += post[i];
        }
    }
    const Eigen::VectorXd mean = pi_u * u.mean + pi_w * mean_w;
    out.gradient = mean - theta;
    if (order < 2) return out;

    // second moment: uniform part is the outer product of block means with
    // exact within-block structure (α_iα_j = δ_ij α_i inside a block)
    Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(d, d);
    if (pi_u > 0.0) {
        m2 = pi_u * (u.mean * u.mean.transpose());
        for (const auto& blk : schema.blocks()) {
            const int o = blk.offset;
            for (int i = 0; i < blk.width(); ++i)
                for (int j = 0; j < blk.width(); ++j)
                    m2(o + i, o + j) = i == j ? pi_u * u.mean[o + i] : 0.0;
        }
    }
    if (pi_w > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            if (post[i] == 0.0) continue;
            const auto& ones = q.support_ones()[i];
            const double p = pi_w * post[i];
            for (auto a : ones)
                for (auto b : ones) m2(a, b) += p;
        }
    }
    out.hessian = m2 - mean * mean.transpose();
    return out;
}

inline double dual_value(const MixedPrior& q, const Eigen::VectorXd& theta,
                         const Eigen::VectorXd& lambda) {
    return dual_evaluate(q, theta, lambda, 0).value;
}

inline Eigen::VectorXd dual_gradient(const MixedPrior& q, const Eigen::VectorXd& theta,
                                     const Eigen::VectorXd& lambda) {
    return dual_evaluate(q, theta, lambda, 1).gradient;
}

inline Eigen::MatrixXd dual_hessian(const MixedPrior& q, const Eigen::VectorXd& theta,
                                    const Eigen::VectorXd& lambda) {
    return *dual_evaluate(q, theta, lambda, 2).hessian;
}

/// Enumerate every block value combination of the domain.
/// `f(point)` is called once per point, in odometer order.
template <typename F>
void for_each_domain_point(const DomainSchema& schema, F&& f) {
    const int m = schema.block_count();
    std::vector<int> values(m, 0);
    DataPoint p;
    p.bits.assign(schema.dimension(), 0);
    for (;;) {
        for (int b = 0; b < m; ++b) schema.set_block_value(p, b, values[b]);
        f(static_cast<const DataPoint&>(p));
        int b = m - 1;
        while (b >= 0) {
            if (++values[b] < schema.block(b).cardinality) break;
            values[b] = 0;
            --b;
        }
        if (b < 0) break;
    }
}

/// Reference oracle: literal sum over the whole domain (guarded at 2^20
/// points). Ground truth for the factorized oracles above.
inline DualEvaluation brute_force_dual(const MixedPrior& q, const Eigen::VectorXd& theta,
                                       const Eigen::VectorXd& lambda, int order) {
    detail::check_oracle_inputs(q, theta, lambda);
    const auto& schema = q.schema();
    const int d = schema.dimension();
    if (schema.log_domain_size() > 20.0 * std::log(2.0) + 1e-9)
        throw DomainTooLarge("brute-force oracle is limited to |Omega| <= 2^20");

    double max_expo = kNegInf;
    for_each_domain_point(schema, [&](const DataPoint& p) {
        double x = 0.0;
        for (int j = 0; j < d; ++j) x += (p.bits[j] - theta[j]) * lambda[j];
        max_expo = std::max(max_expo, x);
    });

    long double s0 = 0.0L;
    std::vector<long double> s1(d, 0.0L);
    std::vector<long double> s2;
    if (order >= 2) s2.assign(static_cast<std::size_t>(d) * d, 0.0L);
    for_each_domain_point(schema, [&](const DataPoint& p) {
        double x = 0.0;
        for (int j = 0; j < d; ++j) x += (p.bits[j] - theta[j]) * lambda[j];
        const long double term =
            static_cast<long double>(q.mass(p)) * std::exp(static_cast<long double>(x - max_expo));
        s0 += term;
        if (order >= 1) {
            for (int j = 0; j < d; ++j)
                if (p.bits[j]) s1[j] += term;
        }
        if (order >= 2) {
            for (int a = 0; a < d; ++a) {
                if (!p.bits[a]) continue;
                for (int b = 0; b < d; ++b)
                    if (p.bits[b]) s2[static_cast<std::size_t>(a) * d + b] += term;
            }
        }
    });

    DualEvaluation out;
    out.value = max_expo + static_cast<double>(std::log(s0));
    out.log_partition = out.value;
    if (order >= 1) {
        out.gradient.resize(d);
        for (int j = 0; j < d; ++j)
            out.gradient[j] = static_cast<double>(s1[j] / s0) - theta[j];
    }
    if (order >= 2) {
        Eigen::MatrixXd h(d, d);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                h(a, b) = static_cast<double>(s2[static_cast<std::size_t>(a) * d + b] / s0 -
                                              (s1[a] / s0) * (s1[b] / s0));
        out.hessian = h;
    }
    return out;
}

/// Exact second and finite-difference third directional derivative of h along
/// y. Used by the second-order robustness property tests.
inline std::pair<double, double> directional_derivatives(const MixedPrior& q,
                                                         const Eigen::VectorXd& theta,
                                                         const Eigen::VectorXd& lambda,
                                                         const Eigen::VectorXd& y) {
    detail::check_oracle_inputs(q, theta, lambda);
    if (y.size() != lambda.size()) throw DimensionMismatch(lambda.size(), y.size());
    if (y.lpNorm<Eigen::Infinity>() > 1.0 + 1e-12)
        throw Error("direction must satisfy ||y||_inf <= 1");

    const auto quad = [&](const Eigen::VectorXd& at) {
        const Eigen::MatrixXd h = dual_hessian(q, theta, at);
        return y.dot(h * y);
    };
    const double d2 = quad(lambda);
    const double eps = 1e-3;
    const double d3 = (quad(lambda + eps * y) - quad(lambda - eps * y)) / (2.0 * eps);
    return {d2, d3};
}

}  // namespace maxent
