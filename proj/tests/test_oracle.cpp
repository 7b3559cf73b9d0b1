#include <catch2/catch_amalgamated.hpp>

#include "testutil.hpp"

using namespace maxent;
using testutil::close;

namespace {

MixedPrior uniform_prior(const DomainSchema& schema) {
    return MixedPrior(schema, 1.0, ReweightedDistribution{});
}

DomainSchema bits(int d) {
    std::vector<AttributeBlock> blocks;
    for (int i = 0; i < d; ++i) blocks.push_back(bit_block("b" + std::to_string(i)));
    return DomainSchema(std::move(blocks));
}

}  // namespace

TEST_CASE("dual value at lambda = 0 is 0") {
    SplitMix64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const auto inst = testutil::random_instance(rng, 2 + static_cast<int>(rng.next_below(8)),
                                                    20, 0.1 + 0.8 * rng.next_double());
        const Eigen::VectorXd zero = Eigen::VectorXd::Zero(inst.schema.dimension());
        CHECK(std::abs(dual_value(inst.prior, inst.theta, zero)) <= 1e-12);
    }
}

TEST_CASE("dual value on the two-bit uniform example") {
    const auto schema = bits(2);
    const auto q = uniform_prior(schema);
    Eigen::VectorXd theta(2), lambda(2);
    theta << 0.5, 0.5;
    lambda << std::log(3.0), 0.0;
    const double expected = std::log(2.0) - 0.5 * std::log(3.0);
    CHECK(dual_value(q, theta, lambda) == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gradient of the uniform prior at 0") {
    const auto schema = bits(2);
    const auto q = uniform_prior(schema);
    Eigen::VectorXd theta(2);
    theta << 0.3, 0.3;
    const auto g = dual_gradient(q, theta, Eigen::VectorXd::Zero(2));
    CHECK(g[0] == Catch::Approx(0.2).epsilon(1e-12));
    CHECK(g[1] == Catch::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("gradient vanishes when theta is the tilted expectation") {
    SplitMix64 rng(32);
    const auto inst = testutil::random_instance(rng, 7, 20, 0.4);
    const auto lambda = testutil::random_lambda(rng, inst.schema.dimension());
    // set θ to the expectation of the tilt at λ, then the gradient must vanish
    const auto mean =
        dual_gradient(inst.prior, Eigen::VectorXd::Zero(inst.schema.dimension()), lambda);
    const auto g = dual_gradient(inst.prior, mean, lambda);
    CHECK(g.lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("hessian examples") {
    SECTION("uniform two-bit at 0 is 0.25 I") {
        const auto schema = bits(2);
        const auto h = dual_hessian(uniform_prior(schema), Eigen::VectorXd::Constant(2, 0.5),
                                    Eigen::VectorXd::Zero(2));
        CHECK(close(h(0, 0), 0.25, 1e-12));
        CHECK(close(h(1, 1), 0.25, 1e-12));
        CHECK(std::abs(h(0, 1)) <= 1e-14);
        CHECK(std::abs(h(1, 0)) <= 1e-14);
    }
    SECTION("point mass has zero covariance") {
        const auto schema = bits(2);
        ReweightedDistribution w;
        w.support = {DataPoint{{1, 0}}};
        w.weights = {1.0};
        MixedPrior q(schema, 0.0, w);
        const auto h = dual_hessian(q, Eigen::VectorXd::Constant(2, 0.5),
                                    Eigen::VectorXd::Zero(2));
        CHECK(h.lpNorm<Eigen::Infinity>() <= 1e-14);
    }
}

TEST_CASE("oracles match brute-force enumeration") {
    SplitMix64 rng(33);
    for (int trial = 0; trial < 40; ++trial) {
        const double c = std::vector<double>{0.1, 0.5, 0.9}[rng.next_below(3)];
        const auto inst = testutil::random_instance(
            rng, 2 + static_cast<int>(rng.next_below(9)),
            1 + static_cast<int>(rng.next_below(30)), c, trial % 2 == 0);
        const auto lambda = testutil::random_lambda(rng, inst.schema.dimension(), 3.0);
        const auto fast = dual_evaluate(inst.prior, inst.theta, lambda, 2);
        const auto slow = brute_force_dual(inst.prior, inst.theta, lambda, 2);
        REQUIRE(close(fast.value, slow.value, 1e-10));
        for (int i = 0; i < inst.schema.dimension(); ++i)
            REQUIRE(close(fast.gradient[i], slow.gradient[i], 1e-10));
        for (int i = 0; i < inst.schema.dimension(); ++i)
            for (int j = 0; j < inst.schema.dimension(); ++j)
                REQUIRE(close((*fast.hessian)(i, j), (*slow.hessian)(i, j), 1e-10));
    }
}

TEST_CASE("shifted and unshifted forms agree") {
    SplitMix64 rng(34);
    for (int trial = 0; trial < 10; ++trial) {
        const auto inst = testutil::random_instance(rng, 6, 15, 0.5);
        const auto lambda = testutil::random_lambda(rng, inst.schema.dimension());
        // h(λ) = log g_q^{unshifted}(λ) − ⟨θ, λ⟩, the unshifted value being the
        // oracle evaluated at θ = 0
        const double shifted = dual_value(inst.prior, inst.theta, lambda);
        const double unshifted =
            dual_value(inst.prior, Eigen::VectorXd::Zero(inst.schema.dimension()), lambda);
        REQUIRE(close(shifted, unshifted - inst.theta.dot(lambda), 1e-10));
    }
}

TEST_CASE("convexity along random chords") {
    SplitMix64 rng(35);
    for (int trial = 0; trial < 20; ++trial) {
        const auto inst = testutil::random_instance(rng, 6, 12, 0.3);
        const auto l1 = testutil::random_lambda(rng, inst.schema.dimension());
        const auto l2 = testutil::random_lambda(rng, inst.schema.dimension());
        const double t = rng.next_double();
        const double lhs = dual_value(inst.prior, inst.theta, t * l1 + (1 - t) * l2);
        const double rhs = t * dual_value(inst.prior, inst.theta, l1) +
                           (1 - t) * dual_value(inst.prior, inst.theta, l2);
        REQUIRE(lhs <= rhs + 1e-10);
    }
}

TEST_CASE("gradient matches finite differences of the value") {
    SplitMix64 rng(36);
    for (int trial = 0; trial < 10; ++trial) {
        const auto inst = testutil::random_instance(rng, 6, 15, 0.5);
        const auto lambda = testutil::random_lambda(rng, inst.schema.dimension());
        const auto g = dual_gradient(inst.prior, inst.theta, lambda);
        const double h = 1e-5;
        for (int i = 0; i < inst.schema.dimension(); ++i) {
            Eigen::VectorXd up = lambda, dn = lambda;
            up[i] += h;
            dn[i] -= h;
            const double fd = (dual_value(inst.prior, inst.theta, up) -
                               dual_value(inst.prior, inst.theta, dn)) /
                              (2 * h);
            REQUIRE(close(g[i], fd, 1e-5));
        }
    }
}

TEST_CASE("block expectations form a probability vector") {
    SplitMix64 rng(37);
    const auto inst = testutil::random_instance(rng, 9, 20, 0.4);
    const auto lambda = testutil::random_lambda(rng, inst.schema.dimension());
    const auto g = dual_gradient(inst.prior, inst.theta, lambda);
    for (const auto& blk : inst.schema.blocks()) {
        if (blk.kind != BlockKind::OneHot) continue;
        double s = 0.0;
        for (int c = 0; c < blk.cardinality; ++c)
            s += g[blk.offset + c] + inst.theta[blk.offset + c];
        REQUIRE(close(s, 1.0, 1e-12));
    }
}

TEST_CASE("oracle input validation") {
    const auto schema = bits(2);
    const auto q = uniform_prior(schema);
    Eigen::VectorXd theta(2), lambda(3);
    theta << 0.5, 0.5;
    lambda << 0, 0, 0;
    CHECK_THROWS_AS(dual_value(q, theta, lambda), DimensionMismatch);
    Eigen::VectorXd nan2(2);
    nan2 << std::nan(""), 0.0;
    CHECK_THROWS_AS(dual_value(q, theta, nan2), NonFiniteInput);
}

TEST_CASE("brute force guards the domain size") {
    const auto schema = bits(21);
    const auto q = uniform_prior(schema);
    const Eigen::VectorXd theta = Eigen::VectorXd::Constant(21, 0.5);
    const Eigen::VectorXd lambda = Eigen::VectorXd::Zero(21);
    CHECK_THROWS_AS(brute_force_dual(q, theta, lambda, 0), DomainTooLarge);

    SECTION("one-bit analytic values") {
        const auto s1 = bits(1);
        const auto e = brute_force_dual(uniform_prior(s1), Eigen::VectorXd::Constant(1, 0.5),
                                        Eigen::VectorXd::Zero(1), 2);
        CHECK(std::abs(e.value) <= 1e-14);
        CHECK(std::abs(e.gradient[0]) <= 1e-14);
        CHECK((*e.hessian)(0, 0) == Catch::Approx(0.25));
    }
}

TEST_CASE("directional derivatives") {
    const auto schema = bits(1);
    const auto q = uniform_prior(schema);
    const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 0.5);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);

    SECTION("zero direction") {
        const auto [d2, d3] = directional_derivatives(q, theta, zero, zero);
        CHECK(d2 == 0.0);
        CHECK(std::abs(d3) <= 1e-12);
    }
    SECTION("symmetric Bernoulli has zero third moment") {
        Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 1.0);
        const auto [d2, d3] = directional_derivatives(q, theta, zero, y);
        CHECK(d2 == Catch::Approx(0.25).epsilon(1e-10));
        CHECK(std::abs(d3) <= 1e-8);
    }
}

TEST_CASE("second-order robustness bound") {
    SplitMix64 rng(38);
    for (int trial = 0; trial < 30; ++trial) {
        const auto inst = testutil::random_instance(rng, 2 + static_cast<int>(rng.next_below(7)),
                                                    15, 0.2 + 0.6 * rng.next_double());
        const int d = inst.schema.dimension();
        const auto lambda = testutil::random_lambda(rng, d);
        Eigen::VectorXd y(d);
        for (int i = 0; i < d; ++i) y[i] = 2.0 * rng.next_double() - 1.0;
        const auto [d2, d3] = directional_derivatives(inst.prior, inst.theta, lambda, y);
        REQUIRE(std::abs(d3) <= 4.0 * d * d2 + 1e-6);
    }
}
