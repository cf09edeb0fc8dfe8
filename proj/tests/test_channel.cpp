// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "ura/channel.hpp"

using namespace ura;

TEST_CASE("steering vector at broadside is all ones") {
    const auto e = steering_vector(0.0, 4);
    REQUIRE(e.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(e(i).real() == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(e(i).imag() == doctest::Approx(0.0).epsilon(1e-15));
    }
}

TEST_CASE("steering vector matches the exponent formula at theta = pi/2") {
    // m in {-1/2, +1/2}, entries exp(-j*pi*sin(theta)*m)
    const auto e = steering_vector(M_PI / 2, 2);
    const std::complex<double> expected0 = std::exp(std::complex<double>(0.0, M_PI * 0.5));
    const std::complex<double> expected1 = std::exp(std::complex<double>(0.0, -M_PI * 0.5));
    CHECK(std::abs(e(0) - expected0) < 1e-12);
    CHECK(std::abs(e(1) - expected1) < 1e-12);
}

TEST_CASE("steering vector entries are unit modulus") {
    Rng rng(7);
    for (int t = 0; t < 20; ++t) {
        const double theta = rng.uniform(-M_PI / 2, M_PI / 2);
        const auto e = steering_vector(theta, 16);
        for (int i = 0; i < e.size(); ++i) CHECK(std::abs(e(i)) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("steering vector rejects out-of-range angles") {
    CHECK_THROWS_AS(steering_vector(2.0, 8), std::invalid_argument);
    CHECK_THROWS_AS(steering_vector(-2.0, 8), std::invalid_argument);
}

TEST_CASE("beamforming with group size one is the DFT codebook itself") {
    const auto bf = build_beamforming_matrix(4, 4);
    CHECK(bf.gamma == doctest::Approx(1.0));
    for (int i = 0; i < 4; ++i) {
        const double theta = std::asin((2.0 * (i + 1) - 1.0) / 4.0 - 1.0);
        const Eigen::VectorXcd w = steering_vector(theta, 4) / 2.0;
        CHECK((bf.w.col(i) - w).norm() < 1e-12);
    }
}

TEST_CASE("beamforming columns have unit power") {
    for (auto [n_r, n_rf] : {std::pair{256, 16}, std::pair{64, 8}, std::pair{32, 32}}) {
        const auto bf = build_beamforming_matrix(n_r, n_rf);
        REQUIRE(bf.w.cols() == n_rf);
        for (int c = 0; c < n_rf; ++c) CHECK(bf.w.col(c).norm() == doctest::Approx(1.0).epsilon(1e-12));
        // grouped DFT beams stay orthonormal
        const Eigen::MatrixXcd gram = bf.w.adjoint() * bf.w;
        for (int c = 0; c < n_rf; ++c) CHECK(std::abs(gram(c, c) - 1.0) < 1e-12);
    }
}

TEST_CASE("beamforming requires divisible dimensions") {
    CHECK_THROWS_AS(build_beamforming_matrix(10, 3), std::invalid_argument);
}

TEST_CASE("single broadside path gives the all-ones channel") {
    const auto bf = build_beamforming_matrix(8, 4);
    const auto ch = channel_from_paths({{1.0, 0.0}}, {0.0}, bf);
    for (int i = 0; i < 8; ++i) CHECK(std::abs(ch.h(i) - std::complex<double>(1.0, 0.0)) < 1e-12);
    CHECK((ch.h_beam - bf.w.adjoint() * ch.h).norm() < 1e-12);
}

TEST_CASE("beam projection equals the adjoint product") {
    const auto bf = build_beamforming_matrix(32, 8);
    Rng rng(11);
    for (int t = 0; t < 10; ++t) {
        Eigen::VectorXcd h(32);
        for (int i = 0; i < 32; ++i) h(i) = rng.cgaussian(1.0);
        const Eigen::VectorXcd direct = bf.w.adjoint() * h;
        const Eigen::VectorXcd api = to_beam_domain(h, bf);
        CHECK((direct - api).norm() / direct.norm() < 1e-12);
    }
}

TEST_CASE("channel energy averages to the antenna count") {
    ChannelConfig cfg;
    cfg.n_antennas = 32;
    cfg.n_rf_chains = 8;
    cfg.clusters = 3;
    cfg.subpaths = 10;
    const auto bf = build_beamforming_matrix(cfg.n_antennas, cfg.n_rf_chains);
    Rng rng(123);
    double total = 0.0;
    const int draws = 20000;
    for (int t = 0; t < draws; ++t) total += draw_channel(cfg, bf, rng).h.squaredNorm();
    CHECK(total / draws == doctest::Approx(cfg.n_antennas).epsilon(0.05));
}

TEST_CASE("beam energy concentrates near the cluster directions") {
    // with a small angular spread, >= 80% of the beam-domain energy should
    // fall on the ceil(2*spread*N_RF/pi)+1 beams nearest each cluster
    ChannelConfig cfg;
    cfg.n_antennas = 64;
    cfg.n_rf_chains = 16;
    cfg.clusters = 3;
    cfg.subpaths = 10;
    cfg.angular_spread = 0.03;
    const auto bf = build_beamforming_matrix(cfg.n_antennas, cfg.n_rf_chains);
    const int per_cluster =
        static_cast<int>(std::ceil(2.0 * cfg.angular_spread * cfg.n_rf_chains / M_PI)) + 1;

    Rng rng(99);
    double fraction_sum = 0.0;
    const int draws = 500;
    for (int t = 0; t < draws; ++t) {
        const auto ch = draw_channel(cfg, bf, rng);

        // cluster centers are the first sub-path AoA of each cluster up to the
        // intra-cluster jitter; recover centers from the draw layout
        std::vector<double> centers;
        for (int p = 0; p < cfg.clusters; ++p) {
            double mean = 0.0;
            for (int q = 0; q < cfg.subpaths; ++q) mean += ch.aoas[p * cfg.subpaths + q];
            centers.push_back(mean / cfg.subpaths);
        }

        // beam c covers sin(theta) in [2c/N_RF - 1, 2(c+1)/N_RF - 1]
        std::vector<char> keep(cfg.n_rf_chains, 0);
        for (double center : centers) {
            std::vector<std::pair<double, int>> dist;
            for (int c = 0; c < cfg.n_rf_chains; ++c) {
                const double mid = (2.0 * c + 1.0) / cfg.n_rf_chains - 1.0;
                dist.push_back({std::abs(std::sin(center) - mid), c});
            }
            std::sort(dist.begin(), dist.end());
            for (int i = 0; i < per_cluster; ++i) keep[dist[i].second] = 1;
        }

        double kept = 0.0;
        for (int c = 0; c < cfg.n_rf_chains; ++c)
            if (keep[c]) kept += std::norm(ch.h_beam(c));
        fraction_sum += kept / ch.h_beam.squaredNorm();
    }
    CHECK(fraction_sum / draws >= 0.8);
}

TEST_CASE("config validation") {
    ChannelConfig bad;
    bad.n_antennas = 10;
    bad.n_rf_chains = 4;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = ChannelConfig{};
    bad.clusters = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
