// SPDX-License-Identifier: Apache-2.0

#include "ura/tree_code.hpp"

#include <numeric>
#include <stdexcept>

namespace ura {

TreeCodeProfile make_profile(int total_bits, int sub_blocks, int block_bits,
                             const std::vector<int>& data_profile) {
    if (sub_blocks < 1) throw std::invalid_argument("profile: need at least one sub-block");
    if (block_bits < 1 || block_bits > 20)
        throw std::invalid_argument("profile: J must be in [1, 20]");
    if (static_cast<int>(data_profile.size()) != sub_blocks)
        throw std::invalid_argument("profile: data profile length must equal S");
    if (data_profile[0] != block_bits)
        throw std::invalid_argument("profile: first sub-block must be all data (b_1 = J)");

    TreeCodeProfile p;
    p.total_bits = total_bits;
    p.sub_blocks = sub_blocks;
    p.block_bits = block_bits;
    p.data_bits = data_profile;
    p.parity_bits.resize(sub_blocks);
    int sum = 0;
    for (int s = 0; s < sub_blocks; ++s) {
        if (data_profile[s] < 0 || data_profile[s] > block_bits)
            throw std::invalid_argument("profile: b_s must be in [0, J]");
        p.parity_bits[s] = block_bits - data_profile[s];
        sum += data_profile[s];
    }
    if (sum != total_bits)
        throw std::invalid_argument("profile: data profile must sum to B");
    return p;
}

ParityMatrices draw_parity_matrices(const TreeCodeProfile& profile, std::uint64_t seed) {
    ParityMatrices g;
    g.seed = seed;
    Rng rng(derive_seed(seed, 0x70617269));  // dedicated stream

    const int s_count = profile.sub_blocks;
    g.masks.resize(s_count);
    for (int s = 1; s < s_count; ++s) {
        const int l = profile.parity_bits[s];
        g.masks[s].resize(s);
        for (int i = 0; i < s; ++i) {
            auto& rows = g.masks[s][i];
            rows.assign(profile.data_bits[i], 0u);
            for (auto& row : rows)
                for (int t = 0; t < l; ++t)
                    if (rng.bernoulli()) row |= (1u << (l - 1 - t));
        }
    }
    return g;
}

std::uint32_t stage_parity_value(const std::vector<std::uint32_t>& info_values, int stage,
                                 const TreeCodeProfile& profile, const ParityMatrices& g) {
    std::uint32_t parity = 0;
    for (int i = 0; i < stage; ++i) {
        const int b = profile.data_bits[i];
        const std::uint32_t v = info_values[i];
        const auto& rows = g.masks[stage][i];
        for (int j = 0; j < b; ++j)
            if ((v >> (b - 1 - j)) & 1u) parity ^= rows[j];
    }
    return parity;
}

BitVec stage_parity(const BitVec& path_info_bits, int stage, const TreeCodeProfile& profile,
                    const ParityMatrices& g) {
    std::vector<std::uint32_t> values(stage, 0);
    std::size_t pos = 0;
    for (int i = 0; i < stage; ++i) {
        const int b = profile.data_bits[i];
        if (pos + b > path_info_bits.size())
            throw std::invalid_argument("stage_parity: path bits shorter than stages 1..s-1");
        std::uint32_t v = 0;
        for (int j = 0; j < b; ++j) v = (v << 1) | (path_info_bits[pos + j] & 1u);
        values[i] = v;
        pos += b;
    }
    const std::uint32_t parity = stage_parity_value(values, stage, profile, g);
    const int l = profile.parity_bits[stage];
    BitVec out(l);
    for (int t = 0; t < l; ++t) out[t] = (parity >> (l - 1 - t)) & 1u;
    return out;
}

CodedMessage tree_encode(const BitVec& info, const TreeCodeProfile& profile,
                         const ParityMatrices& g) {
    if (static_cast<int>(info.size()) != profile.total_bits)
        throw std::invalid_argument("tree_encode: message length must equal B");

    const auto values = info_values_of(info, profile);

    CodedMessage m;
    m.bits.resize(static_cast<std::size_t>(profile.block_bits) * profile.sub_blocks);
    m.indices.resize(profile.sub_blocks);

    std::size_t pos = 0;
    for (int s = 0; s < profile.sub_blocks; ++s) {
        const int b = profile.data_bits[s];
        const int l = profile.parity_bits[s];
        const std::uint32_t parity = stage_parity_value(values, s, profile, g);
        m.indices[s] = make_index(values[s], parity, profile, s);
        for (int j = 0; j < b; ++j) m.bits[pos + j] = (values[s] >> (b - 1 - j)) & 1u;
        for (int t = 0; t < l; ++t) m.bits[pos + b + t] = (parity >> (l - 1 - t)) & 1u;
        pos += profile.block_bits;
    }
    return m;
}

BitVec strip_parity(const CodedMessage& m, const TreeCodeProfile& profile) {
    BitVec info;
    info.reserve(profile.total_bits);
    std::size_t pos = 0;
    for (int s = 0; s < profile.sub_blocks; ++s) {
        for (int j = 0; j < profile.data_bits[s]; ++j) info.push_back(m.bits[pos + j]);
        pos += profile.block_bits;
    }
    return info;
}

std::vector<std::uint32_t> info_values_of(const BitVec& info, const TreeCodeProfile& profile) {
    std::vector<std::uint32_t> values(profile.sub_blocks, 0);
    std::size_t pos = 0;
    for (int s = 0; s < profile.sub_blocks; ++s) {
        std::uint32_t v = 0;
        for (int j = 0; j < profile.data_bits[s]; ++j) v = (v << 1) | (info[pos + j] & 1u);
        values[s] = v;
        pos += profile.data_bits[s];
    }
    return values;
}

BitVec info_bits_from_values(const std::vector<std::uint32_t>& values,
                             const TreeCodeProfile& profile) {
    BitVec info;
    info.reserve(profile.total_bits);
    for (int s = 0; s < profile.sub_blocks; ++s) {
        const int b = profile.data_bits[s];
        for (int j = 0; j < b; ++j) info.push_back((values[s] >> (b - 1 - j)) & 1u);
    }
    return info;
}

}  // namespace ura
