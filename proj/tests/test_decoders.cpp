// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "ura/decoders.hpp"

using namespace ura;

namespace {

BitVec random_bits(int count, Rng& rng) {
    BitVec v(count);
    for (auto& b : v) b = rng.bernoulli() ? 1 : 0;
    return v;
}

// slot fixture from parallel index/pattern/estimate lists
CsSlotOutput make_slot(std::vector<std::uint32_t> indices, std::vector<std::uint64_t> patterns,
                       std::vector<Eigen::VectorXcd> estimates, int n, int n_rf) {
    std::vector<std::size_t> order(indices.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return indices[a] < indices[b]; });

    CsSlotOutput slot;
    slot.x_hat = Eigen::MatrixXcd::Zero(n, n_rf);
    slot.channel_estimates.resize(static_cast<int>(indices.size()), n_rf);
    for (std::size_t i = 0; i < order.size(); ++i) {
        slot.detected.push_back(indices[order[i]]);
        slot.beam_patterns.push_back(patterns[order[i]]);
        if (!estimates.empty()) {
            slot.channel_estimates.row(static_cast<int>(i)) = estimates[order[i]].transpose();
            slot.x_hat.row(indices[order[i]]) = estimates[order[i]].transpose();
        } else {
            slot.channel_estimates.row(static_cast<int>(i)).setZero();
        }
    }
    return slot;
}

// slots carrying the true messages (unique indices per slot), shared pattern
std::vector<CsSlotOutput> perfect_slots(const std::vector<std::vector<std::uint32_t>>& per_user,
                                        const TreeCodeProfile& p, int n_rf,
                                        std::uint64_t pattern) {
    std::vector<CsSlotOutput> slots;
    for (int s = 0; s < p.sub_blocks; ++s) {
        std::vector<std::uint32_t> idx;
        for (const auto& u : per_user) idx.push_back(u[s]);
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        std::vector<std::uint64_t> patterns(idx.size(), pattern);
        std::vector<Eigen::VectorXcd> est(idx.size(), Eigen::VectorXcd::Ones(n_rf));
        slots.push_back(make_slot(idx, patterns, est, 1 << p.block_bits, n_rf));
    }
    return slots;
}

void check_soundness(const DecodedList& list, const TreeCodeProfile& p, const ParityMatrices& g) {
    for (const auto& m : list.messages) {
        const auto re = tree_encode(m.info_bits, p, g);
        CHECK(re.indices == m.indices);
    }
}

std::set<std::vector<std::uint32_t>> message_set(const DecodedList& list) {
    std::set<std::vector<std::uint32_t>> out;
    for (const auto& m : list.messages) out.insert(m.indices);
    return out;
}

}  // namespace

TEST_CASE("single user with perfect lists decodes exactly") {
    const auto p = make_profile(14, 4, 5, {5, 3, 3, 3});
    const auto g = draw_parity_matrices(p, 1);
    Rng rng(2);
    const BitVec u = random_bits(14, rng);
    const auto coded = tree_encode(u, p, g);
    const auto slots = perfect_slots({coded.indices}, p, 4, 0b1111);

    for (const auto& list :
         {tree_decode_traditional(slots, p, g), beam_tree_decode_hard(slots, p, g)}) {
        REQUIRE(list.messages.size() == 1);
        CHECK(list.messages[0].info_bits == u);
        check_soundness(list, p, g);
    }
}

TEST_CASE("two users sharing the root are both recovered from that root") {
    const auto p = make_profile(11, 3, 5, {5, 3, 3});
    const auto g = draw_parity_matrices(p, 5);
    Rng rng(7);
    BitVec u1 = random_bits(11, rng);
    BitVec u2 = u1;
    for (int i = 5; i < 11; ++i) u2[i] = rng.bernoulli() ? 1 : 0;  // same root block
    bool differ = false;
    for (int i = 5; i < 11; ++i) differ |= (u1[i] != u2[i]);
    if (!differ) u2[6] ^= 1;

    const auto c1 = tree_encode(u1, p, g);
    const auto c2 = tree_encode(u2, p, g);
    REQUIRE(c1.indices[0] == c2.indices[0]);
    const auto slots = perfect_slots({c1.indices, c2.indices}, p, 4, 0b1111);

    const auto list = tree_decode_traditional(slots, p, g);
    const auto got = message_set(list);
    CHECK(got.count(c1.indices) == 1);
    CHECK(got.count(c2.indices) == 1);
    check_soundness(list, p, g);
}

TEST_CASE("stitching equals brute-force enumeration on small instances") {
    const auto p = make_profile(9, 3, 4, {4, 3, 2});
    Rng rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        const auto g = draw_parity_matrices(p, 100 + trial);
        // three users plus junk entries in every list
        std::vector<std::vector<std::uint32_t>> users;
        for (int k = 0; k < 3; ++k) users.push_back(tree_encode(random_bits(9, rng), p, g).indices);

        std::vector<CsSlotOutput> slots;
        for (int s = 0; s < 3; ++s) {
            std::set<std::uint32_t> idx;
            for (const auto& u : users) idx.insert(u[s]);
            while (idx.size() < 6) idx.insert(static_cast<std::uint32_t>(rng.uniform_int(16)));
            std::vector<std::uint32_t> v(idx.begin(), idx.end());
            std::vector<std::uint64_t> patterns(v.size(), 1);
            std::vector<Eigen::VectorXcd> est(v.size(), Eigen::VectorXcd::Ones(2));
            slots.push_back(make_slot(v, patterns, est, 16, 2));
        }

        // oracle: every tuple from K_1 x K_2 x K_3 satisfying both parity
        // equations
        std::set<std::vector<std::uint32_t>> expected;
        for (auto i0 : slots[0].detected)
            for (auto i1 : slots[1].detected)
                for (auto i2 : slots[2].detected) {
                    const std::vector<std::uint32_t> infos = {index_info(i0, p, 0),
                                                              index_info(i1, p, 1),
                                                              index_info(i2, p, 2)};
                    if (index_parity(i1, p, 1) != stage_parity_value(infos, 1, p, g)) continue;
                    if (index_parity(i2, p, 2) != stage_parity_value(infos, 2, p, g)) continue;
                    expected.insert({i0, i1, i2});
                }

        const auto list = tree_decode_traditional(slots, p, g);
        CHECK(message_set(list) == expected);
        check_soundness(list, p, g);
    }
}

TEST_CASE("all-ones patterns make the hard decoder match the traditional one") {
    const auto p = make_profile(14, 4, 5, {5, 3, 3, 3});
    const auto g = draw_parity_matrices(p, 3);
    Rng rng(13);
    std::vector<std::vector<std::uint32_t>> users;
    for (int k = 0; k < 4; ++k) users.push_back(tree_encode(random_bits(14, rng), p, g).indices);
    const auto slots = perfect_slots(users, p, 4, 0b1111);
    CHECK(message_set(beam_tree_decode_hard(slots, p, g)) ==
          message_set(tree_decode_traditional(slots, p, g)));
}

TEST_CASE("disjoint beam patterns prune the true path") {
    const auto p = make_profile(8, 2, 5, {5, 3});
    const auto g = draw_parity_matrices(p, 9);
    Rng rng(17);
    const auto coded = tree_encode(random_bits(8, rng), p, g);

    auto slot0 = make_slot({coded.indices[0]}, {0b0011}, {Eigen::VectorXcd::Ones(4)}, 32, 4);
    auto slot1 = make_slot({coded.indices[1]}, {0b1100}, {Eigen::VectorXcd::Ones(4)}, 32, 4);
    CHECK(beam_tree_decode_hard({slot0, slot1}, p, g).messages.empty());

    auto slot1_match = make_slot({coded.indices[1]}, {0b0110}, {Eigen::VectorXcd::Ones(4)}, 32, 4);
    CHECK(beam_tree_decode_hard({slot0, slot1_match}, p, g).messages.size() == 1);
}

TEST_CASE("hard decoder output is a subset of the traditional output") {
    const auto p = make_profile(12, 4, 4, {4, 3, 3, 2});
    Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const auto g = draw_parity_matrices(p, 500 + trial);
        std::vector<CsSlotOutput> slots;
        for (int s = 0; s < 4; ++s) {
            std::set<std::uint32_t> idx;
            const int count = 3 + static_cast<int>(rng.uniform_int(5));
            while (static_cast<int>(idx.size()) < count)
                idx.insert(static_cast<std::uint32_t>(rng.uniform_int(16)));
            std::vector<std::uint32_t> v(idx.begin(), idx.end());
            std::vector<std::uint64_t> patterns;
            for (std::size_t i = 0; i < v.size(); ++i)
                patterns.push_back(1 + rng.uniform_int(15));  // nonzero 4-beam masks
            std::vector<Eigen::VectorXcd> est(v.size(), Eigen::VectorXcd::Ones(4));
            slots.push_back(make_slot(v, patterns, est, 16, 4));
        }
        const auto hard = message_set(beam_tree_decode_hard(slots, p, g));
        const auto trad = message_set(tree_decode_traditional(slots, p, g));
        CHECK(std::includes(trad.begin(), trad.end(), hard.begin(), hard.end()));
    }
}

TEST_CASE("interference cancellation") {
    const auto cb = generate_codebook(20, 5, 31);
    Rng rng(37);
    const int n_rf = 4;

    Eigen::VectorXcd h1(n_rf), h2(n_rf);
    for (int i = 0; i < n_rf; ++i) {
        h1(i) = rng.cgaussian(1.0);
        h2(i) = rng.cgaussian(1.0);
    }
    const Eigen::MatrixXcd y = cb.a.col(3) * h1.transpose() + cb.a.col(17) * h2.transpose();
    const auto slot = make_slot({3, 17}, {0b0111, 0b1000}, {h1, h2}, 32, n_rf);

    SUBCASE("candidate superset leaves the signal unchanged") {
        const auto reduced = interference_cancel(y, slot, {3, 17}, cb, 0b1111);
        REQUIRE(reduced.rows() == 4);
        for (int m = 0; m < n_rf; ++m)
            CHECK((reduced.row(m).transpose() - y.col(m)).norm() < 1e-12);
    }

    SUBCASE("detected non-candidates are removed exactly") {
        const auto reduced = interference_cancel(y, slot, {3}, cb, 0b1111);
        const Eigen::MatrixXcd residual_expected = cb.a.col(3) * h1.transpose();
        for (int m = 0; m < n_rf; ++m)
            CHECK((reduced.row(m).transpose() - residual_expected.col(m)).norm() < 1e-10);
    }

    SUBCASE("rows follow the root pattern") {
        const auto reduced = interference_cancel(y, slot, {3, 17}, cb, 0b0101);
        REQUIRE(reduced.rows() == 2);
        CHECK((reduced.row(0).transpose() - y.col(0)).norm() < 1e-12);
        CHECK((reduced.row(1).transpose() - y.col(2)).norm() < 1e-12);
    }

    SUBCASE("empty root pattern falls back to all beams") {
        const auto reduced = interference_cancel(y, slot, {3, 17}, cb, 0);
        CHECK(reduced.rows() == n_rf);
    }
}

TEST_CASE("mpa llr degenerate single-candidate cases") {
    const auto cb = generate_codebook(16, 4, 41);
    Eigen::MatrixXcd estimates(1, 1);
    estimates(0, 0) = {1.5, -0.5};

    // y contains exactly the candidate's signal: strongly positive
    Eigen::MatrixXcd y_on(1, 16);
    y_on.row(0) = (estimates(0, 0) * cb.a.col(7)).transpose();
    const auto llr_on = mpa_llr(y_on, estimates, {7}, cb, 0.0, 3, 40.0);
    CHECK(llr_on[0] >= 20.0);

    // y empty while the estimate is strong: strongly negative
    Eigen::MatrixXcd y_off = Eigen::MatrixXcd::Zero(1, 16);
    const auto llr_off = mpa_llr(y_off, estimates, {7}, cb, 0.0, 3, 40.0);
    CHECK(llr_off[0] <= -20.0);
}

TEST_CASE("mpa llr signs match the exact two-candidate posterior") {
    const int l_p = 24;
    const auto cb = generate_codebook(l_p, 4, 47);
    Rng rng(53);
    const double noise_var = 0.1;  // 10 dB against unit-power received codewords

    int mpa_correct = 0, oracle_correct = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        // orthogonalized pair of codewords
        Eigen::VectorXcd a1 = cb.a.col(2 * (t % 7) + 1);
        Eigen::VectorXcd a2 = cb.a.col(2 * (t % 7) + 2);
        a2 -= a1.dot(a2) * a1;
        a2.normalize();
        Codebook local = cb;
        local.a.col(1) = a1;
        local.a.col(2) = a2;

        Eigen::MatrixXcd estimates(2, 1);
        estimates(0, 0) = std::complex<double>(1.0, 0.3);
        estimates(1, 0) = std::complex<double>(0.8, -0.4);

        // candidate 1 transmitted, candidate 2 silent
        Eigen::MatrixXcd y(1, l_p);
        for (int j = 0; j < l_p; ++j)
            y(0, j) = estimates(0, 0) * a1(j) + rng.cgaussian(noise_var);

        const auto llrs = mpa_llr(y, estimates, {1, 2}, local, noise_var, 5, 40.0);
        if (llrs[0] > 0.0 && llrs[1] < 0.0) ++mpa_correct;

        // brute-force posterior over x in {0,1}^2 with uniform prior
        auto loglike = [&](int x1, int x2) {
            double ll = 0.0;
            for (int j = 0; j < l_p; ++j) {
                const std::complex<double> mean =
                    double(x1) * estimates(0, 0) * a1(j) + double(x2) * estimates(1, 0) * a2(j);
                ll -= std::norm(y(0, j) - mean) / noise_var;
            }
            return ll;
        };
        const double l11 = loglike(1, 1), l10 = loglike(1, 0), l01 = loglike(0, 1),
                     l00 = loglike(0, 0);
        auto logsum = [](double a, double b) {
            const double m = std::max(a, b);
            return m + std::log(std::exp(a - m) + std::exp(b - m));
        };
        const double oracle1 = logsum(l11, l10) - logsum(l01, l00);
        const double oracle2 = logsum(l11, l01) - logsum(l10, l00);
        if (oracle1 > 0.0 && oracle2 < 0.0) ++oracle_correct;
    }
    CHECK(mpa_correct >= 190);
    CHECK(oracle_correct >= 190);
}

TEST_CASE("llr outputs respect the clamp") {
    const auto cb = generate_codebook(16, 4, 59);
    Eigen::MatrixXcd estimates(3, 2);
    estimates.setConstant(std::complex<double>(3.0, 0.0));
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(2, 16);
    const auto llrs = mpa_llr(y, estimates, {1, 2, 3}, cb, 1e-6, 5, 40.0);
    for (double l : llrs) {
        CHECK(l <= 40.0);
        CHECK(l >= -40.0);
    }
}

TEST_CASE("path metric update") {
    CHECK(path_metric_update(0.0, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(path_metric_update(1.0, 1000.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(path_metric_update(0.0, -40.0) - 40.0) < 1e-9);
    // monotone nondecreasing in the accumulated metric
    double pm = 0.0;
    Rng rng(61);
    for (int i = 0; i < 100; ++i) {
        const double next = path_metric_update(pm, rng.uniform(-40.0, 40.0));
        CHECK(next >= pm);
        pm = next;
    }
}

TEST_CASE("similarity metric") {
    std::vector<int> data{10};
    for (int i = 0; i < 28; ++i) data.push_back(3);
    for (int i = 0; i < 3; ++i) data.push_back(0);
    const auto p = make_profile(94, 32, 10, data);

    Rng rng(67);
    const BitVec u = random_bits(94, rng);
    CHECK(similarity(u, u, p) == doctest::Approx(1.0));

    // differ in every nonempty info block: only the three empty tails match
    BitVec v = u;
    std::size_t pos = 0;
    for (int s = 0; s < p.sub_blocks; ++s) {
        if (p.data_bits[s] > 0) v[pos] ^= 1;
        pos += p.data_bits[s];
    }
    CHECK(similarity(u, v, p) == doctest::Approx(3.0 / 32.0));

    // one differing stage
    BitVec w = u;
    w[10] ^= 1;  // inside stage 2
    CHECK(similarity(u, w, p) == doctest::Approx(31.0 / 32.0));
}

namespace {

struct SoftFixture {
    TreeCodeProfile profile = make_profile(20, 8, 8, {8, 3, 3, 3, 3, 0, 0, 0});
    ParityMatrices parity;
    Codebook cb = generate_codebook(60, 8, 71);
    int n_rf = 4;
    double noise_var = 0.01;

    SoftFixture() { parity = draw_parity_matrices(profile, 73); }

    // signals plus oracle CS outputs for the given users
    std::pair<std::vector<Eigen::MatrixXcd>, std::vector<CsSlotOutput>> build(
        const std::vector<std::vector<std::uint32_t>>& users,
        const std::vector<Eigen::VectorXcd>& channels, Rng& rng) {
        std::vector<Eigen::MatrixXcd> signals;
        std::vector<CsSlotOutput> slots;
        for (int s = 0; s < profile.sub_blocks; ++s) {
            std::vector<std::uint32_t> idx;
            for (const auto& u : users) idx.push_back(u[s]);
            signals.push_back(synthesize_slot(idx, channels, cb, noise_var, rng));

            std::set<std::uint32_t> uniq(idx.begin(), idx.end());
            std::vector<std::uint32_t> det(uniq.begin(), uniq.end());
            std::vector<Eigen::VectorXcd> est;
            std::vector<std::uint64_t> patterns;
            for (auto index : det) {
                Eigen::VectorXcd row = Eigen::VectorXcd::Zero(n_rf);
                for (std::size_t k = 0; k < users.size(); ++k)
                    if (users[k][s] == index) row += channels[k];
                est.push_back(row);
                std::uint64_t mask = 0;
                for (int m = 0; m < n_rf; ++m)
                    if (std::abs(row(m)) >= 0.3 * row.cwiseAbs().maxCoeff()) mask |= 1ull << m;
                patterns.push_back(mask);
            }
            slots.push_back(make_slot(det, patterns, est, cb.size(), n_rf));
        }
        return {signals, slots};
    }
};

void drop_detection(CsSlotOutput& slot, std::uint32_t index, int n_rf) {
    const int pos = slot.find(index);
    REQUIRE(pos >= 0);
    slot.detected.erase(slot.detected.begin() + pos);
    slot.beam_patterns.erase(slot.beam_patterns.begin() + pos);
    Eigen::MatrixXcd trimmed(slot.channel_estimates.rows() - 1, n_rf);
    for (int i = 0, j = 0; i < slot.channel_estimates.rows(); ++i)
        if (i != pos) trimmed.row(j++) = slot.channel_estimates.row(i);
    slot.channel_estimates = std::move(trimmed);
}

}  // namespace

TEST_CASE("soft decoder with perfect lists recovers the message with consistent metric") {
    SoftFixture fx;
    Rng rng(79);
    const BitVec u = random_bits(20, rng);
    const auto coded = tree_encode(u, fx.profile, fx.parity);

    Eigen::VectorXcd h(fx.n_rf);
    for (int i = 0; i < fx.n_rf; ++i) h(i) = rng.cgaussian(4.0);
    auto [signals, slots] = fx.build({coded.indices}, {h}, rng);

    SoftDecodeConfig cfg;
    cfg.l_save = 1;
    cfg.l_split = 1;
    const auto list = beam_tree_decode_soft(signals, slots, fx.cb, fx.noise_var, fx.profile,
                                            fx.parity, cfg);
    REQUIRE(list.messages.size() == 1);
    CHECK(list.messages[0].info_bits == u);

    double pm = 0.0;
    for (double llr : list.messages[0].llrs) pm = path_metric_update(pm, llr);
    CHECK(list.messages[0].path_metric == doctest::Approx(pm).epsilon(1e-12));
    check_soundness(list, fx.profile, fx.parity);
}

TEST_CASE("soft decoder recovers an erased sub-block that kills the hard decoders") {
    SoftFixture fx;
    Rng rng(83);
    int soft_hits = 0;
    const int trials = 20;
    for (int t = 0; t < trials; ++t) {
        const BitVec u = random_bits(20, rng);
        const auto coded = tree_encode(u, fx.profile, fx.parity);
        Eigen::VectorXcd h(fx.n_rf);
        for (int i = 0; i < fx.n_rf; ++i) h(i) = rng.cgaussian(4.0);
        auto [signals, slots] = fx.build({coded.indices}, {h}, rng);

        // drop the true sub-block of one list-decoded stage
        const int victim = 1 + static_cast<int>(rng.uniform_int(4));  // stages 2..5 of 8
        drop_detection(slots[victim], coded.indices[victim], fx.n_rf);

        CHECK(tree_decode_traditional(slots, fx.profile, fx.parity).messages.empty());
        CHECK(beam_tree_decode_hard(slots, fx.profile, fx.parity).messages.empty());

        SoftDecodeConfig cfg;  // L_save 24, L_split 8, S' = 5
        const auto list = beam_tree_decode_soft(signals, slots, fx.cb, fx.noise_var, fx.profile,
                                                fx.parity, cfg);
        check_soundness(list, fx.profile, fx.parity);
        for (const auto& m : list.messages)
            if (m.info_bits == u) ++soft_hits;
    }
    CHECK(soft_hits >= trials * 8 / 10);
}

TEST_CASE("near-duplicate survivors collapse onto the more reliable path") {
    SoftFixture fx;
    Rng rng(89);
    const BitVec u = random_bits(20, rng);
    const auto coded = tree_encode(u, fx.profile, fx.parity);
    Eigen::VectorXcd h(fx.n_rf);
    for (int i = 0; i < fx.n_rf; ++i) h(i) = rng.cgaussian(4.0);
    auto [signals, slots] = fx.build({coded.indices}, {h}, rng);

    SoftDecodeConfig cfg;
    cfg.tau = 0.5;
    const auto list =
        beam_tree_decode_soft(signals, slots, fx.cb, fx.noise_var, fx.profile, fx.parity, cfg);
    // single transmitted message: the root's survivors are near-duplicates of
    // it, so exactly one representative remains
    REQUIRE(list.messages.size() == 1);
    CHECK(list.messages[0].info_bits == u);
}

TEST_CASE("soft decoder validates list configuration") {
    SoftFixture fx;
    std::vector<Eigen::MatrixXcd> signals(8, Eigen::MatrixXcd::Zero(60, 4));
    std::vector<CsSlotOutput> slots(8);
    SoftDecodeConfig cfg;
    cfg.l_split = 8;
    cfg.l_save = 4;  // must be >= l_split
    CHECK_THROWS_AS(
        beam_tree_decode_soft(signals, slots, fx.cb, 0.01, fx.profile, fx.parity, cfg),
        std::invalid_argument);
}
