// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>

#include "ura/analysis.hpp"
#include "ura/rng.hpp"

using namespace ura;

namespace {

TreeCodeProfile small_profile() {
    // S=5, J=8, l=[0,4,4,4,4]
    return make_profile(24, 5, 8, {8, 4, 4, 4, 4});
}

}  // namespace

TEST_CASE("p_match closed form") {
    CHECK(analysis::p_match(16, 1) == doctest::Approx(1.0 / 16.0).epsilon(1e-12));
    // N_b > N_RF/2 forces an intersection
    CHECK(analysis::p_match(16, 9) == doctest::Approx(1.0));
    CHECK(analysis::p_match(8, 5) == doctest::Approx(1.0));
    CHECK_THROWS_AS(analysis::p_match(8, 0), std::invalid_argument);
    CHECK_THROWS_AS(analysis::p_match(8, 9), std::invalid_argument);
}

TEST_CASE("p_match is a probability, nondecreasing in N_b") {
    for (int n_rf : {8, 16, 64, 1024}) {
        double prev = 0.0;
        for (int n_b = 1; n_b <= n_rf; ++n_b) {
            const double p = analysis::p_match(n_rf, n_b);
            CHECK(p >= prev - 1e-12);
            CHECK(p >= 0.0);
            CHECK(p <= 1.0 + 1e-12);
            prev = p;
        }
    }
}

TEST_CASE("p_match agrees with subset sampling") {
    Rng rng(17);
    const int n_rf = 16, n_b = 3, samples = 200000;
    int hits = 0;
    for (int t = 0; t < samples; ++t) {
        std::uint64_t a = 0, b = 0;
        while (std::popcount(a) < n_b) a |= 1ull << rng.uniform_int(n_rf);
        while (std::popcount(b) < n_b) b |= 1ull << rng.uniform_int(n_rf);
        if (a & b) ++hits;
    }
    CHECK(static_cast<double>(hits) / samples ==
          doctest::Approx(analysis::p_match(n_rf, n_b)).epsilon(0.02));
}

TEST_CASE("closed-form stage-2 term") {
    const auto p = small_profile();
    const double pm = 0.3;
    const int ka = 20;
    CHECK(analysis::expected_erroneous_paths(ka, p, pm, 2) ==
          doctest::Approx(pm * (ka - 1) * std::ldexp(1.0, -p.parity_bits[1])).epsilon(1e-12));
}

TEST_CASE("single user never creates erroneous paths") {
    const auto p = small_profile();
    for (int j = 2; j <= p.sub_blocks; ++j)
        CHECK(analysis::expected_erroneous_paths(1, p, 0.5, j) == doctest::Approx(0.0));
}

TEST_CASE("closed form reduces to the recursion at p_match = 1") {
    const std::vector<TreeCodeProfile> profiles = {
        small_profile(),
        make_profile(14, 4, 5, {5, 3, 3, 3}),
        make_profile(20, 6, 6, {6, 4, 4, 3, 2, 1}),
    };
    for (const auto& p : profiles)
        for (int ka : {2, 5, 20, 100})
            for (int j = 2; j <= p.sub_blocks; ++j)
                CHECK(analysis::expected_erroneous_paths(ka, p, 1.0, j) ==
                      doctest::Approx(analysis::traditional_expected_paths(ka, p, j))
                          .epsilon(1e-12));
}

TEST_CASE("false-alarm bound is nonnegative and nondecreasing in K_a") {
    const auto p = small_profile();
    double prev = 0.0;
    for (int ka = 2; ka <= 100; ka += 7) {
        const double bound = analysis::fa_bound(ka, p, 0.25);
        CHECK(bound >= 0.0);
        CHECK(bound >= prev - 1e-12);
        prev = bound;
    }
}

TEST_CASE("expected root collisions") {
    const auto p = make_profile(31, 4, 10, {10, 7, 7, 7});
    // K_a=50, k=2, s=1, N=1024 -> C(50,2)/1024
    CHECK(analysis::expected_collisions(50, 2, 1, 1024, p) ==
          doctest::Approx(1225.0 / 1024.0).epsilon(1e-9));
    // deep consistent prefixes make collisions vanish
    CHECK(analysis::expected_collisions(50, 2, 4, 1024, p) < 1e-5);
    CHECK_THROWS_AS(analysis::expected_collisions(50, 1, 1, 1024, p), std::invalid_argument);
}

TEST_CASE("root collision count matches sampling") {
    const auto p = make_profile(31, 4, 10, {10, 7, 7, 7});
    Rng rng(19);
    const int trials = 10000, ka = 50, n = 1024;
    double pairs = 0.0;
    std::vector<int> counts(n);
    for (int t = 0; t < trials; ++t) {
        std::fill(counts.begin(), counts.end(), 0);
        for (int k = 0; k < ka; ++k) ++counts[rng.uniform_int(n)];
        for (int c : counts) pairs += c * (c - 1) / 2.0;
    }
    CHECK(pairs / trials ==
          doctest::Approx(analysis::expected_collisions(ka, 2, 1, n, p)).epsilon(0.1));
}

TEST_CASE("user-count bound") {
    // p_b = 1 removes the beam gain from both terms
    const double base = analysis::ka_upper_bound(100, 1024, 10, 94.0 / 320.0, 1.0, 1.0);
    const double half = analysis::ka_upper_bound(100, 1024, 10, 94.0 / 320.0, 0.5, 1.0);
    CHECK(half == doctest::Approx(2.0 * base).epsilon(1e-12));

    // J=10, R=94/320, p_b=3/16: tree-side term dominates at large c1
    const double r_tree = 94.0 / 320.0;
    const double expected_tree = std::pow(2.0, 10.0 * (1.0 - r_tree) + 1.0) / (3.0 / 16.0);
    CHECK(analysis::ka_upper_bound(100, 1024, 10, r_tree, 3.0 / 16.0, 1e9) ==
          doctest::Approx(expected_tree).epsilon(1e-9));
}

TEST_CASE("complexity estimates") {
    const auto p = small_profile();
    // beam matching never increases the stitching work
    for (int ka : {5, 20, 60})
        for (double pm : {0.05, 0.3, 0.9}) {
            const auto c = analysis::complexity_estimates(ka, p, pm, 2, 24, 5);
            CHECK(c.hard <= c.traditional + 1e-9);
        }
    // S=2: single stitching stage costs K
    const auto two = make_profile(10, 2, 6, {6, 4});
    CHECK(analysis::complexity_estimates(7, two, 0.5, 2, 24, 5).traditional ==
          doctest::Approx(7.0));
    // soft complexity is linear in L_save
    const auto c1 = analysis::complexity_estimates(10, p, 0.3, 2, 10, 5);
    const auto c2 = analysis::complexity_estimates(10, p, 0.3, 2, 20, 5);
    const auto c3 = analysis::complexity_estimates(10, p, 0.3, 2, 30, 5);
    CHECK(c3.soft - c2.soft == doctest::Approx(c2.soft - c1.soft).epsilon(1e-9));
}
