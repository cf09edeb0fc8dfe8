// SPDX-License-Identifier: Apache-2.0

#include "ura/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace ura {

namespace {

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<BitVec> draw_messages(const TreeCodeProfile& profile, const ParityMatrices& parity,
                                  int ka, bool collision_free, Rng& rng,
                                  std::vector<std::vector<std::uint32_t>>& slot_indices) {
    const int s_count = profile.sub_blocks;
    std::vector<BitVec> messages(ka, BitVec(profile.total_bits));
    std::vector<std::vector<std::uint32_t>> per_user(ka);

    for (;;) {
        for (int k = 0; k < ka; ++k) {
            for (auto& bit : messages[k]) bit = rng.bernoulli() ? 1 : 0;
            per_user[k] = tree_encode(messages[k], profile, parity).indices;
        }
        if (!collision_free) break;
        bool clean = true;
        for (int s = 0; s < s_count && clean; ++s) {
            std::set<std::uint32_t> seen;
            for (int k = 0; k < ka; ++k)
                if (!seen.insert(per_user[k][s]).second) {
                    clean = false;
                    break;
                }
        }
        if (clean) break;
    }

    slot_indices.assign(s_count, std::vector<std::uint32_t>(ka));
    for (int s = 0; s < s_count; ++s)
        for (int k = 0; k < ka; ++k) slot_indices[s][k] = per_user[k][s];
    return messages;
}

}  // namespace

std::pair<double, double> compute_metrics(const std::vector<BitVec>& truth,
                                          const std::vector<BitVec>& decoded) {
    if (truth.empty()) throw std::invalid_argument("compute_metrics: truth set must be non-empty");
    const std::set<BitVec> truth_set(truth.begin(), truth.end());
    const std::set<BitVec> decoded_set(decoded.begin(), decoded.end());

    int missed = 0;
    for (const auto& u : truth_set)
        if (!decoded_set.count(u)) ++missed;
    int false_alarms = 0;
    for (const auto& u : decoded_set)
        if (!truth_set.count(u)) ++false_alarms;

    const double p_md = static_cast<double>(missed) / static_cast<double>(truth_set.size());
    const double p_fa = decoded_set.empty()
                            ? 0.0
                            : static_cast<double>(false_alarms) / static_cast<double>(decoded_set.size());
    return {p_md, p_fa};
}

SimContext make_context(const SystemConfig& cfg) {
    cfg.validate();
    SimContext ctx;
    ctx.profile = cfg.profile();
    ctx.parity = draw_parity_matrices(ctx.profile, cfg.code.parity_seed);
    ctx.codebook = generate_codebook(cfg.codebook.length, cfg.code.block_bits, cfg.codebook.seed);
    ctx.beams = build_beamforming_matrix(cfg.channel.n_antennas, cfg.channel.n_rf_chains);
    return ctx;
}

std::vector<CsSlotOutput> oracle_cs_outputs(const std::vector<std::vector<std::uint32_t>>& indices,
                                            const std::vector<Eigen::VectorXcd>& beam_channels,
                                            int codebook_size) {
    const int s_count = static_cast<int>(indices.size());
    const int n_rf = beam_channels.empty() ? 0 : static_cast<int>(beam_channels[0].size());

    std::vector<CsSlotOutput> slots(s_count);
    for (int s = 0; s < s_count; ++s) {
        auto& slot = slots[s];
        slot.x_hat = Eigen::MatrixXcd::Zero(codebook_size, n_rf);
        for (std::size_t k = 0; k < indices[s].size(); ++k)
            slot.x_hat.row(indices[s][k]) += beam_channels[k].transpose();

        slot.detected = indices[s];
        std::sort(slot.detected.begin(), slot.detected.end());
        slot.detected.erase(std::unique(slot.detected.begin(), slot.detected.end()),
                            slot.detected.end());

        slot.channel_estimates.resize(static_cast<int>(slot.detected.size()), n_rf);
        for (std::size_t i = 0; i < slot.detected.size(); ++i)
            slot.channel_estimates.row(static_cast<int>(i)) = slot.x_hat.row(slot.detected[i]);

        if (!slot.detected.empty()) {
            std::vector<double> mags;
            mags.reserve(slot.detected.size() * n_rf);
            for (int i = 0; i < slot.channel_estimates.rows(); ++i)
                for (int m = 0; m < n_rf; ++m) mags.push_back(std::abs(slot.channel_estimates(i, m)));
            slot.beam_patterns =
                estimate_beam_patterns(slot.channel_estimates, default_pattern_priors(mags));
        }
    }
    return slots;
}

void erase_detection(CsSlotOutput& slot, std::uint32_t index) {
    const int pos = slot.find(index);
    if (pos < 0) return;
    slot.detected.erase(slot.detected.begin() + pos);
    slot.beam_patterns.erase(slot.beam_patterns.begin() + pos);
    Eigen::MatrixXcd trimmed(slot.channel_estimates.rows() - 1, slot.channel_estimates.cols());
    for (int i = 0, j = 0; i < slot.channel_estimates.rows(); ++i)
        if (i != pos) trimmed.row(j++) = slot.channel_estimates.row(i);
    slot.channel_estimates = std::move(trimmed);
}

TrialResult run_trial(const SystemConfig& cfg, const SimContext& ctx, double noise_level, int ka,
                      std::uint64_t seed) {
    const int s_count = ctx.profile.sub_blocks;
    const double noise_var = cfg.noise_variance(noise_level, ka);

    Rng base(seed);
    Rng msg_rng = base.fork(1);
    Rng chan_rng = base.fork(2);
    Rng noise_rng = base.fork(3);
    Rng erase_rng = base.fork(4);

    TrialResult result;
    result.seed = seed;

    std::vector<std::vector<std::uint32_t>> slot_indices;
    result.transmitted = draw_messages(ctx.profile, ctx.parity, ka, cfg.sim.no_collisions,
                                       msg_rng, slot_indices);

    std::vector<Eigen::VectorXcd> beam_channels(ka);
    for (int k = 0; k < ka; ++k)
        beam_channels[k] = draw_channel(cfg.channel, ctx.beams, chan_rng).h_beam;

    std::vector<Eigen::MatrixXcd> slot_signals(s_count);
    for (int s = 0; s < s_count; ++s)
        slot_signals[s] =
            synthesize_slot(slot_indices[s], beam_channels, ctx.codebook, noise_var, noise_rng);

    std::vector<CsSlotOutput> slots;
    if (cfg.sim.oracle_cs) {
        slots = oracle_cs_outputs(slot_indices, beam_channels, ctx.codebook.size());
    } else {
        slots.resize(s_count);
        for (int s = 0; s < s_count; ++s) {
            slots[s] = cs_decode_slot(slot_signals[s], ctx.codebook, noise_var, cfg.cs);
            result.amp_diverged = result.amp_diverged || slots[s].amp_diverged;
        }
    }

    if (cfg.sim.erase > 0) {
        // deletions land in the list-decoded stages, where the soft decoder
        // can still enumerate the missing sub-block
        const int last = cfg.soft.effective_list_stages(s_count) - 1;
        for (int k = 0; k < ka; ++k) {
            std::vector<int> stages;
            for (int s = 1; s <= last; ++s) stages.push_back(s);
            for (int e = 0; e < cfg.sim.erase && !stages.empty(); ++e) {
                const std::size_t pick = erase_rng.uniform_int(stages.size());
                erase_detection(slots[stages[pick]], slot_indices[stages[pick]][k]);
                stages.erase(stages.begin() + pick);
            }
        }
    }

    for (const auto& name : cfg.sim.decoders) {
        const auto start = std::chrono::steady_clock::now();
        DecodedList list;
        if (name == "traditional")
            list = tree_decode_traditional(slots, ctx.profile, ctx.parity);
        else if (name == "hard")
            list = beam_tree_decode_hard(slots, ctx.profile, ctx.parity);
        else if (name == "soft")
            list = beam_tree_decode_soft(slot_signals, slots, ctx.codebook, noise_var,
                                         ctx.profile, ctx.parity, cfg.soft);
        else
            throw std::invalid_argument("unknown decoder '" + name + "'");

        DecoderScore score;
        score.decoder = name;
        score.seconds = elapsed_seconds(start);
        std::vector<BitVec> decoded;
        decoded.reserve(list.messages.size());
        for (const auto& m : list.messages) decoded.push_back(m.info_bits);
        const auto [p_md, p_fa] = compute_metrics(result.transmitted, decoded);
        score.p_md = p_md;
        score.p_fa = p_fa;
        score.decoded_count = static_cast<int>(decoded.size());
        score.missed = static_cast<int>(std::lround(p_md * ka));
        score.false_alarms = static_cast<int>(std::lround(p_fa * decoded.size()));
        result.scores.push_back(score);
        result.decoded.emplace(name, std::move(list));
    }
    return result;
}

TrialResult run_trial(const SystemConfig& cfg, std::uint64_t seed) {
    return run_trial(cfg, make_context(cfg), cfg.noise.value, cfg.sim.ka, seed);
}

MetricsTable run_sweep(const SystemConfig& cfg, std::ostream* progress) {
    const SimContext ctx = make_context(cfg);

    std::vector<double> levels = cfg.sim.level_grid;
    if (levels.empty()) levels.push_back(cfg.noise.value);
    std::vector<int> kas = cfg.sim.ka_grid;
    if (kas.empty()) kas.push_back(cfg.sim.ka);

    int workers = cfg.sim.workers > 0 ? cfg.sim.workers
                                      : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, cfg.sim.trials));

    MetricsTable table;
    std::uint64_t point_id = 0;
    for (double level : levels) {
        for (int ka : kas) {
            std::vector<TrialResult> trials(cfg.sim.trials);
            std::atomic<int> cursor{0};
            std::atomic<int> failures{0};

            auto work = [&]() {
                for (;;) {
                    const int i = cursor.fetch_add(1);
                    if (i >= cfg.sim.trials) return;
                    const std::uint64_t seed =
                        derive_seed(cfg.sim.master_seed, (point_id << 32) | static_cast<std::uint64_t>(i));
                    try {
                        trials[i] = run_trial(cfg, ctx, level, ka, seed);
                    } catch (const std::exception&) {
                        failures.fetch_add(1);  // recorded, sweep continues
                    }
                }
            };
            std::vector<std::thread> pool;
            for (int w = 1; w < workers; ++w) pool.emplace_back(work);
            work();
            for (auto& t : pool) t.join();

            if (progress && failures.load() > 0)
                *progress << "[sweep] level=" << level << " ka=" << ka << ": "
                          << failures.load() << " trial(s) failed\n";

            for (const auto& name : cfg.sim.decoders) {
                MetricsRow row;
                row.decoder = name;
                row.ebn0_db = level;
                row.ka = ka;
                int counted = 0;
                for (const auto& trial : trials) {
                    for (const auto& score : trial.scores) {
                        if (score.decoder != name) continue;
                        row.p_md += score.p_md;
                        row.p_fa += score.p_fa;
                        row.seconds += score.seconds;
                        ++counted;
                    }
                }
                if (counted > 0) {
                    row.p_md /= counted;
                    row.p_fa /= counted;
                }
                row.p_err = row.p_md + row.p_fa;
                row.trials = counted;
                table.rows.push_back(row);
            }
            ++point_id;
            if (progress)
                *progress << "[sweep] level=" << level << " ka=" << ka << " done ("
                          << cfg.sim.trials << " trials)\n";
        }
    }
    return table;
}

namespace {

// 6 significant digits, the serialization precision of both formats
double round6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::strtod(buf, nullptr);
}

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

void write_results(const MetricsTable& table, std::ostream& out, ResultFormat format) {
    if (format == ResultFormat::csv) {
        out << "decoder,ebn0_db,ka,p_md,p_fa,p_err,trials,seconds\n";
        for (const auto& r : table.rows)
            out << r.decoder << ',' << fmt6(r.ebn0_db) << ',' << r.ka << ',' << fmt6(r.p_md)
                << ',' << fmt6(r.p_fa) << ',' << fmt6(r.p_err) << ',' << r.trials << ','
                << fmt6(r.seconds) << '\n';
    } else {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : table.rows) {
            arr.push_back({{"decoder", r.decoder},
                           {"ebn0_db", round6(r.ebn0_db)},
                           {"ka", r.ka},
                           {"p_md", round6(r.p_md)},
                           {"p_fa", round6(r.p_fa)},
                           {"p_err", round6(r.p_err)},
                           {"trials", r.trials},
                           {"seconds", round6(r.seconds)}});
        }
        out << arr.dump(2) << '\n';
    }
    if (!out) throw std::runtime_error("write_results: stream failure");
}

void write_results(const MetricsTable& table, const std::string& path, ResultFormat format) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_results: cannot open '" + path + "'");
    write_results(table, out, format);
    if (!out) throw std::runtime_error("write_results: failed writing '" + path + "'");
}

MetricsTable read_results(std::istream& in, ResultFormat format) {
    MetricsTable table;
    if (format == ResultFormat::csv) {
        std::string line;
        if (!std::getline(in, line)) throw std::runtime_error("read_results: missing header");
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            MetricsRow r;
            std::array<std::string, 8> fields;
            std::size_t start = 0;
            for (int f = 0; f < 8; ++f) {
                const auto comma = line.find(',', start);
                fields[f] = line.substr(start, comma == std::string::npos ? comma : comma - start);
                if (comma == std::string::npos && f != 7)
                    throw std::runtime_error("read_results: short row '" + line + "'");
                start = comma + 1;
            }
            r.decoder = fields[0];
            r.ebn0_db = std::stod(fields[1]);
            r.ka = std::stoi(fields[2]);
            r.p_md = std::stod(fields[3]);
            r.p_fa = std::stod(fields[4]);
            r.p_err = std::stod(fields[5]);
            r.trials = std::stoi(fields[6]);
            r.seconds = std::stod(fields[7]);
            table.rows.push_back(r);
        }
    } else {
        nlohmann::json arr = nlohmann::json::parse(in);
        for (const auto& item : arr) {
            MetricsRow r;
            r.decoder = item.at("decoder").get<std::string>();
            r.ebn0_db = item.at("ebn0_db").get<double>();
            r.ka = item.at("ka").get<int>();
            r.p_md = item.at("p_md").get<double>();
            r.p_fa = item.at("p_fa").get<double>();
            r.p_err = item.at("p_err").get<double>();
            r.trials = item.at("trials").get<int>();
            r.seconds = item.at("seconds").get<double>();
            table.rows.push_back(r);
        }
    }
    return table;
}

MetricsTable read_results(const std::string& path, ResultFormat format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_results: cannot open '" + path + "'");
    return read_results(in, format);
}

}  // namespace ura
