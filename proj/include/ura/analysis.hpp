// SPDX-License-Identifier: Apache-2.0

#ifndef URA_ANALYSIS_HPP
#define URA_ANALYSIS_HPP

#include "ura/tree_code.hpp"

namespace ura {
namespace analysis {

// Probability that two independent uniformly random N_b-subsets of the N_RF
// beams intersect: 1 - C(N_RF - N_b, N_b)/C(N_RF, N_b).
double p_match(int n_rf, int n_b);

// Expected surviving erroneous paths at stage j (1-based, 2 <= j <= S) for
// the pattern-matched decoder:
//   sum_{q=2}^{j} p_match^{j-q+1} K^{j-q} (K-1) prod_{s=q}^{j} 2^{-l_s}.
double expected_erroneous_paths(int ka, const TreeCodeProfile& profile, double p_match,
                                int stage_j);

// Same expectation for the plain decoder, evaluated by the recursion
//   E[L^(2)] = (K-1) 2^{-l_2},  E[L^(j)] = 2^{-l_j} (K E[L^(j-1)] + K - 1),
// the p_match = 1 specialization of the sum above.
double traditional_expected_paths(int ka, const TreeCodeProfile& profile, int stage_j);

// Markov bound on the false-alarm probability: E[erroneous paths] at stage S.
double fa_bound(int ka, const TreeCodeProfile& profile, double p_match);

// Average number of k-user collisions on consistent sub-blocks 1..s:
//   C(K_a, k) / (N * prod_{i=2}^{s} 2^{b_i})^{k-1}.
double expected_collisions(int ka, int colliders, int consistent_stages, int n_codewords,
                           const TreeCodeProfile& profile);

// min( c1 * L_p / (p_b log(N/L_p)),  2^{J(1-R_tree)+1} / p_b )
double ka_upper_bound(int l_p, int n_codewords, int block_bits, double r_tree, double p_b,
                      double c1);

struct ComplexityEstimates {
    double traditional = 0.0;  // (S-1)K + sum_{j=2}^{S-1} E[L^(j)] K
    double hard = 0.0;         // same with pattern-matched expectations
    double soft = 0.0;         // N_b 2^{b_2} I_max + sum_{j=3}^{S} L_save N_b 2^{b_j} I_max
};

ComplexityEstimates complexity_estimates(int ka, const TreeCodeProfile& profile, double p_match,
                                         int n_b, int l_save, int mpa_iters);

}  // namespace analysis
}  // namespace ura

#endif
