// SPDX-License-Identifier: Apache-2.0

#ifndef URA_HARNESS_HPP
#define URA_HARNESS_HPP

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ura/config.hpp"

namespace ura {

// Per-trial empirical missed-detection and false-alarm fractions. p_fa is 0
// for an empty decoded list.
std::pair<double, double> compute_metrics(const std::vector<BitVec>& truth,
                                          const std::vector<BitVec>& decoded);

struct DecoderScore {
    std::string decoder;
    int missed = 0;
    int false_alarms = 0;
    int decoded_count = 0;
    double p_md = 0.0;
    double p_fa = 0.0;
    double seconds = 0.0;  // decode wall time, excluded from determinism
};

struct TrialResult {
    std::uint64_t seed = 0;
    std::vector<BitVec> transmitted;
    std::map<std::string, DecodedList> decoded;
    std::vector<DecoderScore> scores;
    bool amp_diverged = false;
};

// Immutable context shared by all trials of a sweep.
struct SimContext {
    TreeCodeProfile profile;
    ParityMatrices parity;
    Codebook codebook;
    BeamformingMatrix beams;
};

SimContext make_context(const SystemConfig& cfg);

// End-to-end single trial: draw messages and channels, encode, synthesize
// each sub-slot, run the CS layer (or the oracle bypass), apply configured
// erasures, run every selected decoder, score.
TrialResult run_trial(const SystemConfig& cfg, const SimContext& ctx, double noise_level, int ka,
                      std::uint64_t seed);
TrialResult run_trial(const SystemConfig& cfg, std::uint64_t seed);

// Oracle CS outputs for one slot: true indices, exact summed beam channels,
// patterns from the same decision rule the estimator uses.
std::vector<CsSlotOutput> oracle_cs_outputs(const std::vector<std::vector<std::uint32_t>>& indices,
                                            const std::vector<Eigen::VectorXcd>& beam_channels,
                                            int codebook_size);

// Removes one detected index (and its estimate/pattern) from a slot output.
void erase_detection(CsSlotOutput& slot, std::uint32_t index);

struct MetricsRow {
    std::string decoder;
    double ebn0_db = 0.0;  // noise level of the configured mode
    int ka = 0;
    double p_md = 0.0;
    double p_fa = 0.0;
    double p_err = 0.0;
    int trials = 0;
    double seconds = 0.0;
};

struct MetricsTable {
    std::vector<MetricsRow> rows;
};

// Full grid sweep, trials distributed over worker threads with per-trial
// derived seeds; the result does not depend on the worker count.
MetricsTable run_sweep(const SystemConfig& cfg, std::ostream* progress = nullptr);

enum class ResultFormat { csv, json };

void write_results(const MetricsTable& table, std::ostream& out, ResultFormat format);
void write_results(const MetricsTable& table, const std::string& path, ResultFormat format);
MetricsTable read_results(std::istream& in, ResultFormat format);
MetricsTable read_results(const std::string& path, ResultFormat format);

}  // namespace ura

#endif
