// SPDX-License-Identifier: Apache-2.0

#include "ura/analysis.hpp"

#include <cmath>
#include <stdexcept>

namespace ura {
namespace analysis {

namespace {

// C(n-b, b)/C(n, b) as a telescoping product; exact zero when b > n - b.
// Stays finite for n up to a few thousand where lgamma-based binomials would
// be the alternative.
double complement_choose_ratio(int n, int b) {
    if (b > n - b) return 0.0;
    double r = 1.0;
    for (int i = 0; i < b; ++i)
        r *= static_cast<double>(n - b - i) / static_cast<double>(n - i);
    return r;
}

double choose(double n, int k) {
    if (k < 0 || k > n) return 0.0;
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

}  // namespace

double p_match(int n_rf, int n_b) {
    if (n_rf < 1 || n_b < 1 || n_b > n_rf)
        throw std::invalid_argument("p_match: need 1 <= N_b <= N_RF");
    return 1.0 - complement_choose_ratio(n_rf, n_b);
}

double expected_erroneous_paths(int ka, const TreeCodeProfile& profile, double p_match,
                                int stage_j) {
    if (stage_j < 2 || stage_j > profile.sub_blocks)
        throw std::invalid_argument("expected_erroneous_paths: stage out of [2, S]");
    const double k = static_cast<double>(ka);
    double total = 0.0;
    for (int q = 2; q <= stage_j; ++q) {
        double term = std::pow(p_match, stage_j - q + 1) * std::pow(k, stage_j - q) * (k - 1.0);
        for (int s = q; s <= stage_j; ++s)
            term *= std::ldexp(1.0, -profile.parity_bits[s - 1]);
        total += term;
    }
    return total;
}

double traditional_expected_paths(int ka, const TreeCodeProfile& profile, int stage_j) {
    if (stage_j < 2 || stage_j > profile.sub_blocks)
        throw std::invalid_argument("traditional_expected_paths: stage out of [2, S]");
    // A wrong prefix can continue through any of the K detected sub-blocks,
    // the true prefix through the K-1 wrong ones; each match costs 2^{-l_j}.
    const double k = static_cast<double>(ka);
    double e = (k - 1.0) * std::ldexp(1.0, -profile.parity_bits[1]);
    for (int j = 3; j <= stage_j; ++j)
        e = std::ldexp(k * e + (k - 1.0), -profile.parity_bits[j - 1]);
    return e;
}

double fa_bound(int ka, const TreeCodeProfile& profile, double p_match) {
    return expected_erroneous_paths(ka, profile, p_match, profile.sub_blocks);
}

double expected_collisions(int ka, int colliders, int consistent_stages, int n_codewords,
                           const TreeCodeProfile& profile) {
    if (colliders < 2) throw std::invalid_argument("expected_collisions: need k >= 2");
    if (consistent_stages < 1 || consistent_stages > profile.sub_blocks)
        throw std::invalid_argument("expected_collisions: stage count out of range");
    double log2_den = std::log2(static_cast<double>(n_codewords));
    for (int i = 2; i <= consistent_stages; ++i) log2_den += profile.data_bits[i - 1];
    const double numer = choose(static_cast<double>(ka), colliders);
    return numer * std::exp2(-log2_den * (colliders - 1));
}

double ka_upper_bound(int l_p, int n_codewords, int block_bits, double r_tree, double p_b,
                      double c1) {
    if (p_b <= 0.0 || p_b > 1.0) throw std::invalid_argument("ka_upper_bound: p_b in (0, 1]");
    const double cs_limit =
        c1 * l_p / (p_b * std::log(static_cast<double>(n_codewords) / l_p));
    const double tree_limit = std::exp2(block_bits * (1.0 - r_tree) + 1.0) / p_b;
    return std::min(cs_limit, tree_limit);
}

ComplexityEstimates complexity_estimates(int ka, const TreeCodeProfile& profile, double p_match,
                                         int n_b, int l_save, int mpa_iters) {
    const int s_count = profile.sub_blocks;
    ComplexityEstimates c;
    c.traditional = (s_count - 1.0) * ka;
    c.hard = (s_count - 1.0) * ka;
    for (int j = 2; j <= s_count - 1; ++j) {
        c.traditional += traditional_expected_paths(ka, profile, j) * ka;
        c.hard += expected_erroneous_paths(ka, profile, p_match, j) * ka;
    }
    if (s_count >= 2) {
        c.soft = static_cast<double>(n_b) * std::ldexp(1.0, profile.data_bits[1]) * mpa_iters;
        for (int j = 3; j <= s_count; ++j)
            c.soft += static_cast<double>(l_save) * n_b *
                      std::ldexp(1.0, profile.data_bits[j - 1]) * mpa_iters;
    }
    return c;
}

}  // namespace analysis
}  // namespace ura
