#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "maxent/oracle.hpp"
#include "maxent/prior.hpp"
#include "maxent/rng.hpp"

namespace maxent {

enum class SolverMode { DampedNewton, BoxNewton };

struct SolverConfig {
    double epsilon = 1e-3;  // target dual accuracy (drives the BoxNewton schedule)
    SolverMode mode = SolverMode::DampedNewton;
    int max_iterations = 500;
    double gradient_tolerance = 1e-10;
    std::optional<double> radius_override;

    void validate() const {
        if (!(epsilon > 0.0) || epsilon >= 1.0) throw Error("epsilon must be in (0, 1)");
        if (!(gradient_tolerance > 0.0)) throw Error("gradient_tolerance must be > 0");
        if (max_iterations < 1) throw Error("max_iterations must be >= 1");
    }
};

/// Succinct representation of the solved distribution
/// p(α) = q(α) e^{⟨λ,α⟩} / Σ_β q(β) e^{⟨λ,β⟩}.
struct MaxEntModel {
    MixedPrior prior;
    Eigen::VectorXd theta;
    Eigen::VectorXd lambda;
    double dual_value = 0.0;

    const DomainSchema& schema() const { return prior.schema(); }
};

struct SolverResult {
    MaxEntModel model;
    int iterations = 0;
    double final_gradient_norm = 0.0;
    std::vector<double> dual_trace;  // h at each iterate, starting from λ = 0
    bool converged = false;          // gradient tolerance met
};

/// ℓ₂ bound (d/η)·log(1/C) on the optimal dual solution.
inline double bounding_radius(int d, double eta, double C) {
    if (!(eta > 0.0) || eta > 0.5) throw InvalidEta(eta);
    if (!(C > 0.0)) throw UnboundedRadius();
    if (C > 1.0) throw Error("C outside (0, 1]");
    return (static_cast<double>(d) / eta) * std::log(1.0 / C);
}

enum class MarginalKind { Empirical, Reweighted, Balanced };

/// Construct the target marginal vector: the dataset mean, the mean under the
/// reweighted distribution, or the dataset mean with the protected coordinate
/// forced to 1/2. The result must be interior; BoundaryMarginal propagates.
inline Eigen::VectorXd target_marginal(const Dataset& ds, const ReweightedDistribution* w,
                                       MarginalKind kind, const DomainSchema& schema) {
    Eigen::VectorXd theta;
    switch (kind) {
        case MarginalKind::Empirical:
            theta = empirical_marginal(ds);
            break;
        case MarginalKind::Reweighted: {
            if (w == nullptr) throw Error("reweighted marginal needs the weight distribution");
            theta = Eigen::VectorXd::Zero(schema.dimension());
            for (std::size_t i = 0; i < w->support.size(); ++i)
                for (int j = 0; j < schema.dimension(); ++j)
                    theta[j] += w->weights[i] * w->support[i].bits[j];
            break;
        }
        case MarginalKind::Balanced:
            theta = empirical_marginal(ds);
            theta[schema.protected_index()] = 0.5;
            break;
    }
    validate_interior(theta);
    return theta;
}

/// Minimize ⟨g,y⟩ + (1/2e)·yᵀHy over the box ‖y‖_∞ ≤ box, ‖center+y‖_∞ ≤ R by
/// projected coordinate descent with random-permutation sweeps (fixed seed).
/// Terminates when a duality-gap bound certifies the objective is within tol
/// of the constrained minimum.
inline Eigen::VectorXd inner_qp_solve(const Eigen::VectorXd& g, const Eigen::MatrixXd& h,
                                      double box, const Eigen::VectorXd& center, double R,
                                      double tol) {
    const int d = static_cast<int>(g.size());
    if (!(box > 0.0)) throw Error("box must be positive");
    constexpr double inv_e = 1.0 / 2.718281828459045235;

    Eigen::VectorXd lo(d), hi(d);
    for (int i = 0; i < d; ++i) {
        lo[i] = std::max(-box, std::isfinite(R) ? -R - center[i] : -box);
        hi[i] = std::min(box, std::isfinite(R) ? R - center[i] : box);
        if (lo[i] > hi[i]) lo[i] = hi[i] = 0.0;  // center already at the wall
    }

    Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd hy = Eigen::VectorXd::Zero(d);
    std::vector<int> perm(d);
    for (int i = 0; i < d; ++i) perm[i] = i;
    SplitMix64 rng(0x9d2c5680u);  // fixed seed: sweeps are reproducible

    const int max_sweeps = 20000;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        for (int i = d - 1; i > 0; --i)
            std::swap(perm[i], perm[rng.next_below(static_cast<std::uint64_t>(i + 1))]);
        for (int k = 0; k < d; ++k) {
            const int i = perm[k];
            const double cross = hy[i] - h(i, i) * y[i];
            double target;
            if (h(i, i) > 1e-300) {
                target = -(g[i] / inv_e + cross) / h(i, i);
            } else {
                const double slope = g[i] + inv_e * cross;
                target = slope > 0.0 ? lo[i] : (slope < 0.0 ? hi[i] : y[i]);
            }
            const double clipped = std::clamp(target, lo[i], hi[i]);
            const double delta = clipped - y[i];
            if (delta != 0.0) {
                y[i] = clipped;
                hy += delta * h.col(i);
            }
        }
        // gap bound: f(y) − f(y★) ≤ Σ_i max_{x∈box} ∇f(y)_i (y_i − x_i)
        double gap = 0.0;
        for (int i = 0; i < d; ++i) {
            const double grad = g[i] + inv_e * hy[i];
            gap += grad > 0.0 ? grad * (y[i] - lo[i]) : grad * (y[i] - hi[i]);
        }
        if (gap <= tol) return y;
    }
    throw QPNotConverged();
}

namespace detail {

/// Newton direction with ridge escalation. Returns the direction or nullopt
/// when no usable descent direction could be produced.
inline std::optional<Eigen::VectorXd> newton_direction(const Eigen::MatrixXd& h,
                                                       const Eigen::VectorXd& g) {
    const int d = static_cast<int>(g.size());
    const double scale = std::max(1.0, h.trace());
    for (double ridge = 0.0; ridge <= 1e-2 * scale;
         ridge = ridge == 0.0 ? 1e-12 * scale : ridge * 100.0) {
        Eigen::MatrixXd hr = h;
        if (ridge > 0.0) hr += ridge * Eigen::MatrixXd::Identity(d, d);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(hr);
        if (ldlt.info() != Eigen::Success) continue;
        Eigen::VectorXd dir = ldlt.solve(-g);
        if (!dir.allFinite()) continue;
        if (g.dot(dir) < 0.0) return dir;
    }
    return std::nullopt;
}

inline SolverResult finish(MixedPrior q, Eigen::VectorXd theta, Eigen::VectorXd lambda,
                           double value, int iterations, double gnorm,
                           std::vector<double> trace, bool converged) {
    return SolverResult{
        MaxEntModel{std::move(q), std::move(theta), std::move(lambda), value},
        iterations, gnorm, std::move(trace), converged};
}

inline SolverResult solve_damped_newton(const MixedPrior& q, const Eigen::VectorXd& theta,
                                        const SolverConfig& cfg) {
    const int d = q.schema().dimension();
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(d);
    std::vector<double> trace;
    constexpr double armijo = 1e-4;

    auto eval = dual_evaluate(q, theta, lambda, 2);
    trace.push_back(eval.value);
    for (int it = 0; it < cfg.max_iterations; ++it) {
        const double gnorm = eval.gradient.lpNorm<Eigen::Infinity>();
        if (gnorm <= cfg.gradient_tolerance)
            return finish(q, theta, lambda, eval.value, it, gnorm, std::move(trace), true);

        auto dir = newton_direction(*eval.hessian, eval.gradient);
        if (!dir) {
            // gradient step with 1/L from the Hessian trace
            const double l = std::max(eval.hessian->trace(), 1e-12);
            dir = Eigen::VectorXd(-eval.gradient / l);
        }
        const double slope = eval.gradient.dot(*dir);
        double step = 1.0;
        std::optional<DualEvaluation> next;
        while (step >= 0x1p-40) {
            Eigen::VectorXd cand = lambda + step * *dir;
            try {
                auto e = dual_evaluate(q, theta, cand, 2);
                if (e.value <= eval.value + armijo * step * slope) {
                    lambda = std::move(cand);
                    next = std::move(e);
                    break;
                }
            } catch (const NumericalBreakdown&) {
                // shrink and retry
            }
            step *= 0.5;
        }
        if (!next) throw NumericalBreakdown("line search failed to find a finite descent step");
        eval = std::move(*next);
        trace.push_back(eval.value);
    }
    const double gnorm = eval.gradient.lpNorm<Eigen::Infinity>();
    if (gnorm <= cfg.gradient_tolerance)
        return finish(q, theta, lambda, eval.value, cfg.max_iterations, gnorm, std::move(trace),
                      true);
    throw NotConverged("gradient norm " + std::to_string(gnorm) + " > tolerance " +
                       std::to_string(cfg.gradient_tolerance) + " after " +
                       std::to_string(cfg.max_iterations) + " iterations");
}

/// Box-constrained Newton schedule: R = 8d·log(1/(Cε)), T = 16dR·log(1/(Cε)),
/// per-step box 1/(8d), quadratic damping 1/(2e) and step division by e².
/// Stops early once the gradient tolerance is met; otherwise runs the full
/// schedule, which guarantees an ε-accurate dual value.
inline SolverResult solve_box_newton(const MixedPrior& q, const Eigen::VectorXd& theta,
                                     const SolverConfig& cfg) {
    const int d = q.schema().dimension();
    const double c = q.uniform_coefficient();
    const double log_budget = std::log(1.0 / (c * cfg.epsilon));
    const double radius = cfg.radius_override.value_or(8.0 * d * log_budget);
    if (!(radius > 0.0)) throw Error("box radius is not positive; lower epsilon");
    const long iterations = static_cast<long>(std::ceil(16.0 * d * radius * log_budget));
    const double box = 1.0 / (8.0 * d);
    const double qp_tol = cfg.epsilon / (8.0 * d * radius);
    constexpr double inv_e2 = 1.0 / (2.718281828459045235 * 2.718281828459045235);

    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(d);
    std::vector<double> trace;
    auto eval = dual_evaluate(q, theta, lambda, 2);
    trace.push_back(eval.value);
    for (long it = 0; it < iterations; ++it) {
        const double gnorm = eval.gradient.lpNorm<Eigen::Infinity>();
        if (gnorm <= cfg.gradient_tolerance)
            return finish(q, theta, lambda, eval.value, static_cast<int>(it), gnorm,
                          std::move(trace), true);
        const Eigen::VectorXd y =
            inner_qp_solve(eval.gradient, *eval.hessian, box, lambda, radius, qp_tol);
        lambda += inv_e2 * y;
        eval = dual_evaluate(q, theta, lambda, 2);
        trace.push_back(eval.value);
    }
    return finish(q, theta, lambda, eval.value, static_cast<int>(iterations),
                  eval.gradient.lpNorm<Eigen::Infinity>(), std::move(trace), false);
}

}  // namespace detail

/// Minimize the dual objective from λ = 0 and package the model. The target
/// marginal must be interior and the prior must put mass on the whole domain
/// (C > 0), otherwise the optimum may escape to infinity.
inline SolverResult solve(const MixedPrior& q, const Eigen::VectorXd& theta,
                          const SolverConfig& cfg) {
    cfg.validate();
    if (!(q.uniform_coefficient() > 0.0)) throw UnboundedRadius();
    if (theta.size() != q.schema().dimension())
        throw DimensionMismatch(q.schema().dimension(), theta.size());
    validate_interior(theta);
    return cfg.mode == SolverMode::DampedNewton ? detail::solve_damped_newton(q, theta, cfg)
                                                : detail::solve_box_newton(q, theta, cfg);
}

}  // namespace maxent
