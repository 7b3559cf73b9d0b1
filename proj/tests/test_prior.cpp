#include <catch2/catch_amalgamated.hpp>

#include "testutil.hpp"

using namespace maxent;

namespace {

DomainSchema yz_schema(int extra_bits = 0) {
    std::vector<AttributeBlock> blocks{bit_block("y", BlockRole::Label),
                                       bit_block("z", BlockRole::Protected)};
    for (int i = 0; i < extra_bits; ++i) blocks.push_back(bit_block("x" + std::to_string(i)));
    return DomainSchema(std::move(blocks));
}

/// Direct-summation check of the balance identity
/// Σ_{Y=y,Z=0} w = τ · Σ_{Y=y,Z=1} w for both label values.
void check_balance_identity(const DomainSchema& schema, const ReweightedDistribution& w,
                            double tau, double tol = 1e-12) {
    const int yi = schema.label_index();
    const int zi = schema.protected_index();
    for (int y = 0; y < 2; ++y) {
        double mass[2] = {0.0, 0.0};
        for (std::size_t i = 0; i < w.support.size(); ++i)
            if (w.support[i].bits[yi] == y) mass[w.support[i].bits[zi]] += w.weights[i];
        if (mass[0] == 0.0 && mass[1] == 0.0) continue;
        REQUIRE(std::abs(mass[0] - tau * mass[1]) <= tol);
    }
}

}  // namespace

TEST_CASE("reweight matches the hand-traced example") {
    // five unit-frequency points: (y=1,z=1) twice, (y=1,z=0), (y=0,z=1), (y=0,z=0)
    const auto schema = yz_schema(1);  // an extra bit keeps the five points distinct
    Dataset ds;
    ds.add(encode_record(schema, {1, 1, 0}));
    ds.add(encode_record(schema, {1, 1, 1}));
    ds.add(encode_record(schema, {1, 0, 0}));
    ds.add(encode_record(schema, {0, 1, 0}));
    ds.add(encode_record(schema, {0, 0, 0}));

    const auto w = reweight(ds, schema, 1.0);
    REQUIRE(w.weights.size() == 5);
    CHECK(w.weights[0] == Catch::Approx(0.15).epsilon(1e-12));
    CHECK(w.weights[1] == Catch::Approx(0.15).epsilon(1e-12));
    CHECK(w.weights[2] == Catch::Approx(0.30).epsilon(1e-12));
    CHECK(w.weights[3] == Catch::Approx(0.20).epsilon(1e-12));
    CHECK(w.weights[4] == Catch::Approx(0.20).epsilon(1e-12));
    check_balance_identity(schema, w, 1.0);
}

TEST_CASE("reweight on an already balanced dataset is a fixed point") {
    const auto schema = yz_schema(1);
    Dataset ds;
    for (int y = 0; y < 2; ++y)
        for (int z = 0; z < 2; ++z)
            for (int x = 0; x < 2; ++x) ds.add(encode_record(schema, {y, z, x}), 1 + x);
    const auto w = reweight(ds, schema, 1.0);
    check_balance_identity(schema, w, 1.0);
    // weights proportional to n_α within each (y,z) cell
    for (std::size_t i = 0; i < ds.size(); ++i)
        CHECK(w.weights[i] ==
              Catch::Approx(static_cast<double>(ds.frequency(i)) / ds.total()).epsilon(1e-12));
}

TEST_CASE("reweight balance identity on random datasets and taus") {
    SplitMix64 rng(21);
    for (double tau : {0.3, 0.6, 0.8, 1.0}) {
        for (int trial = 0; trial < 10; ++trial) {
            const auto schema = testutil::random_schema(rng, 2 + static_cast<int>(rng.next_below(7)));
            const auto ds = testutil::random_dataset(rng, schema, 30);
            const auto w = reweight(ds, schema, tau);
            check_balance_identity(schema, w, tau);
            double sum = 0.0;
            for (double x : w.weights) {
                REQUIRE(x >= 0.0);
                sum += x;
            }
            REQUIRE(std::abs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("reweight rejects unbalanced empty cells and bad tau") {
    const auto schema = yz_schema();
    Dataset ds;
    ds.add(encode_record(schema, {1, 1}));
    ds.add(encode_record(schema, {0, 0}));
    ds.add(encode_record(schema, {0, 1}));
    // (y=1, z=0) is empty while (y=1, z=1) is not
    CHECK_THROWS_AS(reweight(ds, schema, 1.0), EmptyCell);
    CHECK_THROWS_AS(reweight(ds, schema, 0.0), InvalidTau);
    CHECK_THROWS_AS(reweight(ds, schema, 1.5), InvalidTau);
}

TEST_CASE("mix_prior degenerate mixtures") {
    const auto schema = yz_schema(1);
    Dataset ds;
    ds.add(encode_record(schema, {1, 1, 0}));
    ds.add(encode_record(schema, {1, 0, 0}));
    ds.add(encode_record(schema, {0, 1, 0}));
    ds.add(encode_record(schema, {0, 0, 1}));
    const auto w = reweight(ds, schema, 1.0);

    SECTION("C = 1 is exactly uniform") {
        const auto q = mix_prior(1.0, schema, w);
        for_each_domain_point(schema, [&](const DataPoint& p) {
            CHECK(prior_mass(q, p) == Catch::Approx(0.125).epsilon(1e-14));
        });
    }
    SECTION("C = 0 is exactly the weighted part") {
        const auto q = mix_prior(0.0, schema, w);
        for (std::size_t i = 0; i < w.support.size(); ++i)
            CHECK(prior_mass(q, w.support[i]) == Catch::Approx(w.weights[i]).epsilon(1e-14));
        CHECK(prior_mass(q, encode_record(schema, {1, 1, 1})) == 0.0);
    }
    SECTION("C outside [0,1] rejected") {
        CHECK_THROWS_AS(mix_prior(-0.1, schema, w), Error);
        CHECK_THROWS_AS(mix_prior(1.1, schema, w), Error);
    }
}

TEST_CASE("prior_mass formula") {
    const auto schema = DomainSchema(
        {bit_block("y", BlockRole::Label), bit_block("z", BlockRole::Protected), bit_block("x")});
    // hand-built weighted part with w(α) = 0.3 on one point
    ReweightedDistribution w;
    w.support = {encode_record(schema, {1, 1, 1}), encode_record(schema, {0, 0, 0}),
                 encode_record(schema, {0, 1, 0})};
    w.weights = {0.3, 0.5, 0.2};

    const auto q = mix_prior(0.5, schema, w);
    CHECK(prior_mass(q, encode_record(schema, {1, 0, 0})) == Catch::Approx(0.0625));
    CHECK(prior_mass(q, encode_record(schema, {1, 1, 1})) == Catch::Approx(0.2125));

    const auto uniform = mix_prior(1.0, schema, w);
    CHECK(prior_mass(uniform, encode_record(schema, {1, 0, 1})) == Catch::Approx(1.0 / 8));

    DataPoint bad;
    bad.bits = {1, 1};
    CHECK_THROWS_AS(prior_mass(q, bad), InvalidPoint);
}

TEST_CASE("prior_mass sums to 1 over small domains") {
    SplitMix64 rng(22);
    for (int trial = 0; trial < 8; ++trial) {
        const auto inst = testutil::random_instance(rng, 2 + static_cast<int>(rng.next_below(11)),
                                                    25, 0.1 + 0.8 * rng.next_double());
        long double total = 0.0L;
        for_each_domain_point(inst.schema,
                              [&](const DataPoint& p) { total += inst.prior.mass(p); });
        REQUIRE(std::abs(static_cast<double>(total) - 1.0) <= 1e-10);
    }
}

namespace {

/// Exact joint mass q(Y=y, Z=z) of a mixed prior by direct summation:
/// uniform part contributes C/4, weighted part the matching support mass.
double prior_joint(const MixedPrior& q, int y, int z) {
    const auto& schema = q.schema();
    const int yi = schema.label_index();
    const int zi = schema.protected_index();
    double w_mass = 0.0;
    for (std::size_t i = 0; i < q.support().size(); ++i) {
        const auto& p = q.support()[i];
        if (p.bits[yi] == y && p.bits[zi] == z) w_mass += q.weights()[i];
    }
    return q.uniform_coefficient() * 0.25 + (1.0 - q.uniform_coefficient()) * w_mass;
}

double prior_statistical_rate(const MixedPrior& q, int y) {
    const double j0 = prior_joint(q, y, 0);
    const double j1 = prior_joint(q, y, 1);
    const double m0 = prior_joint(q, 0, 0) + prior_joint(q, 1, 0);
    const double m1 = prior_joint(q, 0, 1) + prior_joint(q, 1, 1);
    const double r0 = j0 / m0, r1 = j1 / m1;
    return std::min(r0 / r1, r1 / r0);
}

}  // namespace

TEST_CASE("mixture keeps the statistical rate of the reweighted part") {
    SplitMix64 rng(23);
    for (double tau : {0.6, 0.8, 1.0}) {
        for (int trial = 0; trial < 6; ++trial) {
            const auto schema = testutil::random_schema(rng, 6);
            const auto ds = testutil::random_dataset(rng, schema, 40);
            const auto w = reweight(ds, schema, tau);
            for (double c = 0.0; c <= 1.0001; c += 0.1) {
                const auto q = mix_prior(std::min(c, 1.0), schema, w);
                for (int y = 0; y < 2; ++y) {
                    // joint-mass inequalities of the convex combination
                    const double j0 = prior_joint(q, y, 0);
                    const double j1 = prior_joint(q, y, 1);
                    REQUIRE(j0 >= tau * j1 - 1e-12);
                    REQUIRE(j1 >= j0 - 1e-12);
                    REQUIRE(prior_statistical_rate(q, y) >= tau - 1e-10);
                }
            }
        }
    }
}

TEST_CASE("mixture with tau = 1 reaches statistical parity exactly") {
    SplitMix64 rng(24);
    const auto schema = testutil::random_schema(rng, 5);
    const auto ds = testutil::random_dataset(rng, schema, 30);
    const auto w = reweight(ds, schema, 1.0);
    const auto q = mix_prior(0.5, schema, w);
    for (int y = 0; y < 2; ++y) CHECK(prior_statistical_rate(q, y) >= 1.0 - 1e-10);
}
