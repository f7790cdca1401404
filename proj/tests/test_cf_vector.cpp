#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cfrefine/cf_vector.hpp"
#include "oracles.hpp"

using namespace cfrefine;

namespace {

CFVector make_cf(std::size_t n, std::vector<double> ls, std::vector<double> ss) {
    CFVector cf;
    cf.n = n;
    cf.ls = std::move(ls);
    cf.ss = std::move(ss);
    return cf;
}

CFVector cf_of_points(const std::vector<oracle::Point>& pts) {
    return cf_of(pts, pts.front().size());
}

} // namespace

TEST(CFVector, AddIsComponentwise) {
    const auto sum = cf_add(make_cf(2, {2, 2}, {2, 2}), make_cf(1, {1, 1}, {1, 1}));
    EXPECT_EQ(sum, make_cf(3, {3, 3}, {3, 3}));
}

TEST(CFVector, ZeroIsAdditiveIdentity) {
    const auto cf = make_cf(4, {1.5, -2.0, 3.0}, {9.0, 8.0, 7.0});
    EXPECT_EQ(cf_add(cf, CFVector(3)), cf);
}

TEST(CFVector, AddRejectsDimensionMismatch) {
    EXPECT_THROW(cf_add(CFVector(2), CFVector(3)), DataError);
}

TEST(CFVector, AddOfHalvesEqualsWhole) {
    std::mt19937_64 rng(7);
    const auto pts = oracle::random_points(rng, 20, 3);
    const std::vector<oracle::Point> first(pts.begin(), pts.begin() + 10);
    const std::vector<oracle::Point> second(pts.begin() + 10, pts.end());
    const auto joined = cf_add(cf_of_points(first), cf_of_points(second));
    const auto whole = cf_of_points(pts);
    ASSERT_EQ(joined.n, whole.n);
    for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_TRUE(oracle::rel_close(joined.ls[j], whole.ls[j], 1e-12));
        EXPECT_TRUE(oracle::rel_close(joined.ss[j], whole.ss[j], 1e-12));
    }
}

TEST(CFVector, Centroid) {
    EXPECT_EQ(centroid(make_cf(2, {4, 6}, {10, 20})), (std::vector<double>{2, 3}));
    const std::vector<double> p{0.25, -7.0, 3.5};
    EXPECT_EQ(centroid(CFVector::of_point(p)), p);
    EXPECT_DOUBLE_EQ(centroid(cf_of_points({{0.0}, {2.0}}))[0], 1.0);
    EXPECT_THROW(centroid(CFVector(2)), DataError);
}

TEST(CFVector, RadiusMatchesHandValues) {
    EXPECT_DOUBLE_EQ(radius(cf_of_points({{0.0}, {2.0}})), 1.0);
    EXPECT_DOUBLE_EQ(radius(CFVector::of_point(std::vector<double>{3.0, 4.0})), 0.0);
    EXPECT_NEAR(radius(cf_of_points({{0.0}, {1.0}, {2.0}})), std::sqrt(2.0 / 3.0), 1e-12);
    EXPECT_NEAR(oracle::radius({{0.0}, {1.0}, {2.0}}), 0.816497, 1e-6);
    EXPECT_THROW(radius(CFVector(1)), DataError);
}

TEST(CFVector, DiameterMatchesHandValues) {
    EXPECT_DOUBLE_EQ(diameter(cf_of_points({{0.0}, {2.0}})), 2.0);
    EXPECT_DOUBLE_EQ(diameter(CFVector::of_point(std::vector<double>{1.0})), 0.0);
    EXPECT_NEAR(diameter(cf_of_points({{0.0}, {1.0}, {2.0}})), std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(oracle::diameter({{0.0}, {1.0}, {2.0}}), 1.414214, 1e-6);
    EXPECT_THROW(diameter(CFVector(1)), DataError);
}

TEST(CFVector, TightClusterDoesNotProduceNaN) {
    // Identical large-magnitude points: the radicands cancel to ~0 and may
    // round below zero.
    std::vector<oracle::Point> pts(50, oracle::Point{1e6 + 0.1, -3e5});
    const auto cf = cf_of_points(pts);
    EXPECT_GE(radius(cf), 0.0);
    EXPECT_GE(diameter(cf), 0.0);
    EXPECT_FALSE(std::isnan(radius(cf)));
    EXPECT_FALSE(std::isnan(diameter(cf)));
}

TEST(CFVector, SquaredSumsDominateLinearSums) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const auto pts = oracle::random_points(rng, 1 + trial % 17, 1 + trial % 5);
        const auto cf = cf_of_points(pts);
        const double n = static_cast<double>(cf.n);
        for (std::size_t j = 0; j < cf.dimension(); ++j) {
            EXPECT_GE(cf.ss[j] * (1.0 + 1e-9), cf.ls[j] * cf.ls[j] / n);
        }
    }
}

TEST(CFVector, RadiusAndDiameterMatchBruteForce) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> size(1, 100);
    std::uniform_int_distribution<std::size_t> dim(1, 10);
    for (int trial = 0; trial < 200; ++trial) {
        const auto pts = oracle::random_points(rng, size(rng), dim(rng));
        const auto cf = cf_of_points(pts);
        EXPECT_TRUE(oracle::rel_close(radius(cf), oracle::radius(pts), 1e-6));
        EXPECT_TRUE(oracle::rel_close(diameter(cf), oracle::diameter(pts), 1e-6));
    }
}
