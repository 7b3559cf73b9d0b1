#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace maxent {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Pairwise (tree) summation in fixed index order; the reduction tree depends
/// only on n, so results are reproducible regardless of how work is split.
inline double pairwise_sum(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

/// log Σ e^{x_i} with the running maximum subtracted.
inline double logsumexp(std::span<const double> x) {
    double m = kNegInf;
    for (double v : x) m = std::max(m, v);
    if (m == kNegInf) return kNegInf;
    std::vector<double> t;
    t.reserve(x.size());
    for (double v : x) t.push_back(std::exp(v - m));
    return m + std::log(pairwise_sum(t));
}

inline double logsumexp2(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace maxent
