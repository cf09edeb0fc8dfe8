// SPDX-License-Identifier: Apache-2.0

#ifndef URA_DECODERS_HPP
#define URA_DECODERS_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ura/cs_layer.hpp"
#include "ura/tree_code.hpp"

namespace ura {

struct DecodedMessage {
    BitVec info_bits;                     // length B
    std::vector<std::uint32_t> indices;   // codeword index per stage
    double path_metric = 0.0;             // soft decoder only
    std::vector<double> llrs;             // per list-decoded stage, soft only
};

struct DecodedList {
    std::vector<DecodedMessage> messages;
};

// Stitches detected sub-blocks across sub-slots: depth growth from every
// stage-1 root, children restricted to detected indices whose parity bits
// match the path prefix.
DecodedList tree_decode_traditional(const std::vector<CsSlotOutput>& slots,
                                    const TreeCodeProfile& profile, const ParityMatrices& g);

// As traditional, plus the beam constraint: a child survives only when its
// beam pattern shares at least one active beam with the stage-1 root's.
DecodedList beam_tree_decode_hard(const std::vector<CsSlotOutput>& slots,
                                  const TreeCodeProfile& profile, const ParityMatrices& g);

// Removes detected non-candidate codewords from the slot signal and keeps the
// rows of the root's active beams; falls back to all beams when the root
// pattern is empty. Returns T x L_p with T = popcount(effective pattern).
Eigen::MatrixXcd interference_cancel(const Eigen::MatrixXcd& y, const CsSlotOutput& cs,
                                     const std::vector<std::uint32_t>& candidates,
                                     const Codebook& cb, std::uint64_t root_pattern);

// Gaussian-approximation message passing on the candidate-vs-beam factor
// graph. y_reduced is T x L_p (one row per resource), estimates is K x T
// (zero rows for candidates the CS decoder did not detect). Returns one LLR
// per candidate, clamped to +/- llr_clamp.
std::vector<double> mpa_llr(const Eigen::MatrixXcd& y_reduced, const Eigen::MatrixXcd& estimates,
                            const std::vector<std::uint32_t>& candidates, const Codebook& cb,
                            double noise_var, int iters, double llr_clamp);

// PM <- PM + ln(1 + exp(-llr)), stable for large |llr|
double path_metric_update(double pm_prev, double llr);

// Fraction of stages whose info blocks coincide; stages with no data bits
// count as matching.
double similarity(const BitVec& info_a, const BitVec& info_b, const TreeCodeProfile& profile);

struct SoftDecodeConfig {
    int l_save = 24;
    int l_split = 8;
    int list_stages = 0;    // S', 0: S - 3
    int mpa_iters = 5;
    double tau = 0.5;
    double llr_clamp = 40.0;

    int effective_list_stages(int sub_blocks) const {
        int sp = list_stages > 0 ? list_stages : sub_blocks - 3;
        return std::max(2, std::min(sp, sub_blocks));
    }
};

// List decoder over the former S' stages: every parity-consistent candidate
// gets an LLR from interference cancellation + MPA, branches are pruned to
// L_split per path and L_save per root by path metric. The remaining stages
// extend hard via detected sub-blocks and beam matching, and near-duplicate
// survivors of a root are collapsed onto the lowest-metric one.
DecodedList beam_tree_decode_soft(const std::vector<Eigen::MatrixXcd>& slot_signals,
                                  const std::vector<CsSlotOutput>& slots, const Codebook& cb,
                                  double noise_var, const TreeCodeProfile& profile,
                                  const ParityMatrices& g, const SoftDecodeConfig& cfg);

}  // namespace ura

#endif
