// SPDX-License-Identifier: Apache-2.0

#include "ura/decoders.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace ura {

namespace {

struct Path {
    std::vector<std::uint32_t> info_values;  // chosen info value per stage so far
    std::vector<std::uint32_t> indices;      // chosen codeword index per stage
    std::vector<double> llrs;                // per list-decoded stage
    double pm = 0.0;
    std::uint64_t root_pattern = 0;
};

DecodedMessage finish_path(const Path& p, const TreeCodeProfile& profile) {
    DecodedMessage m;
    m.indices = p.indices;
    m.info_bits = info_bits_from_values(p.info_values, profile);
    m.path_metric = p.pm;
    m.llrs = p.llrs;
    return m;
}

// children of a path at `stage` drawn from the detected list; when
// `match_pattern` is set the child must additionally share a beam with the
// root pattern
template <typename OnChild>
void expand_detected(const Path& p, const CsSlotOutput& slot, int stage,
                     const TreeCodeProfile& profile, const ParityMatrices& g, bool match_pattern,
                     OnChild&& on_child) {
    const std::uint32_t parity = stage_parity_value(p.info_values, stage, profile, g);
    const std::uint32_t mask = profile.parity_mask(stage);
    for (std::size_t pos = 0; pos < slot.detected.size(); ++pos) {
        const std::uint32_t index = slot.detected[pos];
        if ((index & mask) != parity) continue;
        if (match_pattern && (p.root_pattern & slot.beam_patterns[pos]) == 0) continue;
        on_child(index, pos);
    }
}

DecodedList stitch(const std::vector<CsSlotOutput>& slots, const TreeCodeProfile& profile,
                   const ParityMatrices& g, bool match_pattern) {
    if (static_cast<int>(slots.size()) != profile.sub_blocks)
        throw std::invalid_argument("tree decode: one slot output per sub-block required");
    if (match_pattern)
        for (const auto& s : slots)
            if (s.beam_patterns.size() != s.detected.size())
                throw std::invalid_argument("tree decode: beam pattern per detected index required");

    DecodedList out;
    const int s_count = profile.sub_blocks;
    for (std::size_t root = 0; root < slots[0].detected.size(); ++root) {
        std::vector<Path> paths(1);
        paths[0].info_values = {index_info(slots[0].detected[root], profile, 0)};
        paths[0].indices = {slots[0].detected[root]};
        if (match_pattern) paths[0].root_pattern = slots[0].beam_patterns[root];

        for (int stage = 1; stage < s_count && !paths.empty(); ++stage) {
            std::vector<Path> next;
            for (const auto& p : paths) {
                expand_detected(p, slots[stage], stage, profile, g, match_pattern,
                                [&](std::uint32_t index, std::size_t) {
                                    Path child = p;
                                    child.info_values.push_back(index_info(index, profile, stage));
                                    child.indices.push_back(index);
                                    next.push_back(std::move(child));
                                });
            }
            paths = std::move(next);
        }
        for (const auto& p : paths) out.messages.push_back(finish_path(p, profile));
    }
    return out;
}

}  // namespace

DecodedList tree_decode_traditional(const std::vector<CsSlotOutput>& slots,
                                    const TreeCodeProfile& profile, const ParityMatrices& g) {
    return stitch(slots, profile, g, false);
}

DecodedList beam_tree_decode_hard(const std::vector<CsSlotOutput>& slots,
                                  const TreeCodeProfile& profile, const ParityMatrices& g) {
    return stitch(slots, profile, g, true);
}

Eigen::MatrixXcd interference_cancel(const Eigen::MatrixXcd& y, const CsSlotOutput& cs,
                                     const std::vector<std::uint32_t>& candidates,
                                     const Codebook& cb, std::uint64_t root_pattern) {
    const int n_rf = static_cast<int>(y.cols());
    Eigen::MatrixXcd cancelled = y;
    for (std::size_t pos = 0; pos < cs.detected.size(); ++pos) {
        const std::uint32_t index = cs.detected[pos];
        if (std::binary_search(candidates.begin(), candidates.end(), index)) continue;
        cancelled.noalias() -=
            cb.a.col(index) * cs.channel_estimates.row(static_cast<int>(pos));
    }

    const std::uint64_t valid = (n_rf >= 64) ? ~0ull : ((1ull << n_rf) - 1);
    std::uint64_t pattern = root_pattern & valid;
    if (pattern == 0) pattern = valid;  // degenerate root: keep all beams

    const int t_count = std::popcount(pattern);
    Eigen::MatrixXcd reduced(t_count, y.rows());
    int t = 0;
    for (int m = 0; m < n_rf; ++m)
        if (pattern & (1ull << m)) reduced.row(t++) = cancelled.col(m).transpose();
    return reduced;
}

std::vector<double> mpa_llr(const Eigen::MatrixXcd& y_reduced, const Eigen::MatrixXcd& estimates,
                            const std::vector<std::uint32_t>& candidates, const Codebook& cb,
                            double noise_var, int iters, double llr_clamp) {
    const int k_count = static_cast<int>(candidates.size());
    const int t_count = static_cast<int>(y_reduced.rows());
    const int l_p = static_cast<int>(y_reduced.cols());
    if (estimates.rows() != k_count || estimates.cols() != t_count)
        throw std::invalid_argument("mpa_llr: estimates must be K x T");

    const double var_floor = std::max(noise_var, 1e-12);

    Eigen::MatrixXcd cand(l_p, k_count);
    for (int k = 0; k < k_count; ++k) cand.col(k) = cb.a.col(candidates[k]);
    Eigen::MatrixXd cand_sq = cand.cwiseAbs2();

    Eigen::MatrixXd l_var_to_res = Eigen::MatrixXd::Zero(k_count, t_count);  // L_{k->t}
    Eigen::MatrixXd l_res_to_var = Eigen::MatrixXd::Zero(t_count, k_count);  // L_{t->k}
    Eigen::MatrixXd prob(k_count, t_count);

    Eigen::VectorXcd mean(l_p);
    Eigen::VectorXd var(l_p);

    for (int it = 0; it < iters; ++it) {
        for (int k = 0; k < k_count; ++k)
            for (int t = 0; t < t_count; ++t)
                prob(k, t) = 1.0 / (1.0 + std::exp(-l_var_to_res(k, t)));

        for (int t = 0; t < t_count; ++t) {
            // aggregate interference over all candidates at this resource
            mean.setZero();
            var.setConstant(var_floor);
            for (int k = 0; k < k_count; ++k) {
                const std::complex<double> h = estimates(k, t);
                if (h == std::complex<double>(0.0, 0.0)) continue;
                const double p = prob(k, t);
                mean.noalias() += (h * p) * cand.col(k);
                var.noalias() += (std::norm(h) * p * (1.0 - p)) * cand_sq.col(k);
            }
            for (int k = 0; k < k_count; ++k) {
                const std::complex<double> h = estimates(k, t);
                if (h == std::complex<double>(0.0, 0.0)) {
                    l_res_to_var(t, k) = 0.0;  // both hypotheses explain y equally
                    continue;
                }
                const double p = prob(k, t);
                double llr = 0.0;
                for (int j = 0; j < l_p; ++j) {
                    const std::complex<double> contrib = h * cand(j, k);
                    const std::complex<double> mu = mean(j) - contrib * p;
                    const double v =
                        std::max(var(j) - std::norm(contrib) * p * (1.0 - p), var_floor);
                    const std::complex<double> e0 = y_reduced(t, j) - mu;
                    const std::complex<double> e1 = e0 - contrib;
                    llr += (std::norm(e0) - std::norm(e1)) / v;
                }
                l_res_to_var(t, k) = std::clamp(llr, -llr_clamp, llr_clamp);
            }
        }

        for (int k = 0; k < k_count; ++k) {
            double sum = 0.0;
            for (int t = 0; t < t_count; ++t) sum += l_res_to_var(t, k);
            for (int t = 0; t < t_count; ++t)
                l_var_to_res(k, t) = std::clamp(sum - l_res_to_var(t, k), -llr_clamp, llr_clamp);
        }
    }

    std::vector<double> llrs(k_count);
    for (int k = 0; k < k_count; ++k) {
        double sum = 0.0;
        for (int t = 0; t < t_count; ++t) sum += l_res_to_var(t, k);
        llrs[k] = std::clamp(sum, -llr_clamp, llr_clamp);
    }
    return llrs;
}

double path_metric_update(double pm_prev, double llr) {
    // softplus(-llr) = ln(1 + exp(-llr))
    const double inc = llr >= 0.0 ? std::log1p(std::exp(-llr)) : -llr + std::log1p(std::exp(llr));
    return pm_prev + inc;
}

double similarity(const BitVec& info_a, const BitVec& info_b, const TreeCodeProfile& profile) {
    if (static_cast<int>(info_a.size()) != profile.total_bits ||
        static_cast<int>(info_b.size()) != profile.total_bits)
        throw std::invalid_argument("similarity: messages must have B bits");
    int matching = 0;
    std::size_t pos = 0;
    for (int s = 0; s < profile.sub_blocks; ++s) {
        const int b = profile.data_bits[s];
        bool equal = true;
        for (int j = 0; j < b; ++j)
            if (info_a[pos + j] != info_b[pos + j]) {
                equal = false;
                break;
            }
        if (equal) ++matching;
        pos += b;
    }
    return static_cast<double>(matching) / profile.sub_blocks;
}

namespace {

bool pm_order(const Path& a, const Path& b) {
    if (a.pm != b.pm) return a.pm < b.pm;
    return a.indices < b.indices;  // deterministic tie-break
}

// restriction of a detected index's channel estimate to the resource beams;
// zero row when the index was not detected
void fill_candidate_estimates(const CsSlotOutput& slot,
                              const std::vector<std::uint32_t>& candidates,
                              std::uint64_t pattern, int n_rf, Eigen::MatrixXcd& estimates) {
    std::vector<int> beams;
    for (int m = 0; m < n_rf; ++m)
        if (pattern & (1ull << m)) beams.push_back(m);
    estimates.setZero(static_cast<int>(candidates.size()), static_cast<int>(beams.size()));
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const int pos = slot.find(candidates[k]);
        if (pos < 0) continue;
        for (std::size_t t = 0; t < beams.size(); ++t)
            estimates(static_cast<int>(k), static_cast<int>(t)) =
                slot.channel_estimates(pos, beams[t]);
    }
}

}  // namespace

DecodedList beam_tree_decode_soft(const std::vector<Eigen::MatrixXcd>& slot_signals,
                                  const std::vector<CsSlotOutput>& slots, const Codebook& cb,
                                  double noise_var, const TreeCodeProfile& profile,
                                  const ParityMatrices& g, const SoftDecodeConfig& cfg) {
    const int s_count = profile.sub_blocks;
    if (static_cast<int>(slots.size()) != s_count ||
        static_cast<int>(slot_signals.size()) != s_count)
        throw std::invalid_argument("soft decode: signals and CS outputs per sub-block required");
    if (cfg.l_split < 1 || cfg.l_save < cfg.l_split)
        throw std::invalid_argument("soft decode: need L_save >= L_split >= 1");
    for (const auto& s : slots)
        if (s.beam_patterns.size() != s.detected.size())
            throw std::invalid_argument("soft decode: beam pattern per detected index required");
    const int list_stages = cfg.effective_list_stages(s_count);
    const int n_rf = s_count > 0 ? static_cast<int>(slot_signals[0].cols()) : 0;

    // Per-path cancellation rewritten as one shared subtraction: the slot
    // signal minus every detected contribution, after which each path adds
    // back only its detected candidates.
    std::vector<Eigen::MatrixXcd> cancelled_all(list_stages);
    for (int stage = 1; stage < list_stages; ++stage) {
        cancelled_all[stage] = slot_signals[stage];
        const auto& slot = slots[stage];
        for (std::size_t pos = 0; pos < slot.detected.size(); ++pos)
            cancelled_all[stage].noalias() -=
                cb.a.col(slot.detected[pos]) * slot.channel_estimates.row(static_cast<int>(pos));
    }

    DecodedList out;
    for (std::size_t root = 0; root < slots[0].detected.size(); ++root) {
        std::vector<Path> paths(1);
        paths[0].info_values = {index_info(slots[0].detected[root], profile, 0)};
        paths[0].indices = {slots[0].detected[root]};
        paths[0].root_pattern = slots[0].beam_patterns[root];

        for (int stage = 1; stage < s_count && !paths.empty(); ++stage) {
            std::vector<Path> next;
            if (stage < list_stages) {
                // list decoding: all parity-consistent candidates, scored by MPA
                for (const auto& p : paths) {
                    const std::uint32_t parity = stage_parity_value(p.info_values, stage, profile, g);
                    const int b = profile.data_bits[stage];
                    std::vector<std::uint32_t> candidates(1u << b);
                    for (std::uint32_t v = 0; v < candidates.size(); ++v)
                        candidates[v] = make_index(v, parity, profile, stage);

                    const std::uint64_t valid =
                        (n_rf >= 64) ? ~0ull : ((1ull << n_rf) - 1);
                    std::uint64_t pattern = p.root_pattern & valid;
                    if (pattern == 0) pattern = valid;
                    std::vector<int> beams;
                    for (int m = 0; m < n_rf; ++m)
                        if (pattern & (1ull << m)) beams.push_back(m);

                    // add this path's detected candidates back into the
                    // all-cancelled signal, restricted to the root beams
                    Eigen::MatrixXcd reduced(static_cast<int>(beams.size()),
                                             slot_signals[stage].rows());
                    for (std::size_t t = 0; t < beams.size(); ++t)
                        reduced.row(static_cast<int>(t)) =
                            cancelled_all[stage].col(beams[t]).transpose();
                    for (const auto index : candidates) {
                        const int pos = slots[stage].find(index);
                        if (pos < 0) continue;
                        for (std::size_t t = 0; t < beams.size(); ++t)
                            reduced.row(static_cast<int>(t)).noalias() +=
                                slots[stage].channel_estimates(pos, beams[t]) *
                                cb.a.col(index).transpose();
                    }
                    Eigen::MatrixXcd estimates;
                    fill_candidate_estimates(slots[stage], candidates, pattern, n_rf, estimates);

                    const std::vector<double> llrs =
                        mpa_llr(reduced, estimates, candidates, cb, noise_var, cfg.mpa_iters,
                                cfg.llr_clamp);

                    std::vector<Path> branches;
                    branches.reserve(candidates.size());
                    for (std::size_t v = 0; v < candidates.size(); ++v) {
                        Path child = p;
                        child.info_values.push_back(static_cast<std::uint32_t>(v));
                        child.indices.push_back(candidates[v]);
                        child.llrs.push_back(llrs[v]);
                        child.pm = path_metric_update(p.pm, llrs[v]);
                        branches.push_back(std::move(child));
                    }
                    if (static_cast<int>(branches.size()) > cfg.l_split) {
                        std::partial_sort(branches.begin(), branches.begin() + cfg.l_split,
                                          branches.end(), pm_order);
                        branches.resize(cfg.l_split);
                    }
                    for (auto& b_path : branches) next.push_back(std::move(b_path));
                }
                if (static_cast<int>(next.size()) > cfg.l_save) {
                    std::partial_sort(next.begin(), next.begin() + cfg.l_save, next.end(),
                                      pm_order);
                    next.resize(cfg.l_save);
                }
            } else {
                // hard extension through the parity-heavy tail
                for (const auto& p : paths) {
                    expand_detected(p, slots[stage], stage, profile, g, true,
                                    [&](std::uint32_t index, std::size_t) {
                                        Path child = p;
                                        child.info_values.push_back(
                                            index_info(index, profile, stage));
                                        child.indices.push_back(index);
                                        next.push_back(std::move(child));
                                    });
                }
            }
            paths = std::move(next);
        }

        // similarity pruning among this root's survivors: keep the most
        // reliable representative of every near-duplicate group
        std::sort(paths.begin(), paths.end(), pm_order);
        std::vector<DecodedMessage> kept;
        for (const auto& p : paths) {
            DecodedMessage m = finish_path(p, profile);
            bool duplicate = false;
            for (const auto& k : kept)
                if (similarity(m.info_bits, k.info_bits, profile) > cfg.tau) {
                    duplicate = true;
                    break;
                }
            if (!duplicate) kept.push_back(std::move(m));
        }
        for (auto& m : kept) out.messages.push_back(std::move(m));
    }
    return out;
}

}  // namespace ura
