// SPDX-License-Identifier: Apache-2.0

#ifndef URA_TREE_CODE_HPP
#define URA_TREE_CODE_HPP

#include <cstdint>
#include <vector>

#include "ura/rng.hpp"

namespace ura {

using BitVec = std::vector<std::uint8_t>;

// Bit partition of a B-bit message into S sub-blocks of J bits each:
// b_s info bits plus l_s = J - b_s parity bits per stage, b_1 = J.
struct TreeCodeProfile {
    int total_bits = 0;   // B
    int sub_blocks = 0;   // S
    int block_bits = 0;   // J
    std::vector<int> data_bits;    // b_s, length S
    std::vector<int> parity_bits;  // l_s, length S

    double rate() const {
        return static_cast<double>(total_bits) / (static_cast<double>(block_bits) * sub_blocks);
    }
    std::uint32_t parity_mask(int stage) const { return (1u << parity_bits[stage]) - 1u; }
};

TreeCodeProfile make_profile(int total_bits, int sub_blocks, int block_bits,
                             const std::vector<int>& data_profile);

// Random parity generators G_{i,s-1} in {0,1}^{b_i x l_s} for 1 <= i < s <= S.
// Row j of G_{i,s-1} is stored as an l_s-bit mask so a stage parity is an XOR
// fold over the set info bits. Regenerated from (profile, seed), never
// serialized.
struct ParityMatrices {
    std::uint64_t seed = 0;
    // masks[s][i][j]: contribution of info bit j of stage i to stage s parity
    std::vector<std::vector<std::vector<std::uint32_t>>> masks;
};

ParityMatrices draw_parity_matrices(const TreeCodeProfile& profile, std::uint64_t seed);

struct CodedMessage {
    BitVec bits;                          // length J*S: [b(1),l(1),...,b(S),l(S)]
    std::vector<std::uint32_t> indices;   // codeword index per stage, MSB-first
};

// info value of a codeword index (top b_s bits) and its parity value (low l_s bits)
inline std::uint32_t index_info(std::uint32_t index, const TreeCodeProfile& p, int stage) {
    return index >> p.parity_bits[stage];
}
inline std::uint32_t index_parity(std::uint32_t index, const TreeCodeProfile& p, int stage) {
    return index & p.parity_mask(stage);
}
inline std::uint32_t make_index(std::uint32_t info, std::uint32_t parity,
                                const TreeCodeProfile& p, int stage) {
    return (info << p.parity_bits[stage]) | parity;
}

CodedMessage tree_encode(const BitVec& info, const TreeCodeProfile& profile,
                         const ParityMatrices& g);

// Parity any consistent stage sub-block must carry, from the info values of
// stages 0..stage-1 (stage is 0-based).
std::uint32_t stage_parity_value(const std::vector<std::uint32_t>& info_values, int stage,
                                 const TreeCodeProfile& profile, const ParityMatrices& g);

// Bit-vector variant of the parity equation; path_info_bits concatenates the
// info bits of stages 0..stage-1.
BitVec stage_parity(const BitVec& path_info_bits, int stage, const TreeCodeProfile& profile,
                    const ParityMatrices& g);

// Info bits recovered from a coded message (systematic positions), and the
// reverse helpers used throughout the decoders.
BitVec strip_parity(const CodedMessage& m, const TreeCodeProfile& profile);
std::vector<std::uint32_t> info_values_of(const BitVec& info, const TreeCodeProfile& profile);
BitVec info_bits_from_values(const std::vector<std::uint32_t>& values,
                             const TreeCodeProfile& profile);

}  // namespace ura

#endif
