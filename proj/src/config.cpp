// SPDX-License-Identifier: Apache-2.0

#include "ura/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace ura {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> items;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

int parse_int(const std::string& v) {
    std::size_t used = 0;
    const int r = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument("expected integer, got '" + v + "'");
    return r;
}

double parse_double(const std::string& v) {
    std::size_t used = 0;
    const double r = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("expected number, got '" + v + "'");
    return r;
}

std::uint64_t parse_u64(const std::string& v) {
    std::size_t used = 0;
    const std::uint64_t r = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("expected unsigned integer, got '" + v + "'");
    return r;
}

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw std::invalid_argument("expected boolean, got '" + v + "'");
}

struct KeyEntry {
    std::string name;
    std::string help;
    std::function<void(SystemConfig&, const std::string&)> set;
};

const std::vector<KeyEntry>& key_table() {
    static const std::vector<KeyEntry> table = {
        {"channel.n_r", "receive antennas N_r",
         [](SystemConfig& c, const std::string& v) { c.channel.n_antennas = parse_int(v); }},
        {"channel.n_rf", "RF chains N_RF (divides N_r)",
         [](SystemConfig& c, const std::string& v) { c.channel.n_rf_chains = parse_int(v); }},
        {"channel.clusters", "multipath clusters P_c",
         [](SystemConfig& c, const std::string& v) { c.channel.clusters = parse_int(v); }},
        {"channel.subpaths", "sub-paths per cluster Q_p",
         [](SystemConfig& c, const std::string& v) { c.channel.subpaths = parse_int(v); }},
        {"channel.angular_spread", "intra-cluster AoA half-width, radians",
         [](SystemConfig& c, const std::string& v) { c.channel.angular_spread = parse_double(v); }},

        {"code.s", "sub-blocks S",
         [](SystemConfig& c, const std::string& v) { c.code.sub_blocks = parse_int(v); }},
        {"code.j", "bits per coded sub-block J",
         [](SystemConfig& c, const std::string& v) { c.code.block_bits = parse_int(v); }},
        {"code.data_profile", "comma list of b_s (length S, sums to B)",
         [](SystemConfig& c, const std::string& v) {
             c.code.data_profile.clear();
             for (const auto& item : split_list(v)) c.code.data_profile.push_back(parse_int(item));
         }},
        {"code.parity_profile", "comma list of l_s; optional, checked against J - b_s",
         [](SystemConfig& c, const std::string& v) {
             c.code.parity_profile.clear();
             for (const auto& item : split_list(v))
                 c.code.parity_profile.push_back(parse_int(item));
         }},
        {"code.parity_seed", "seed for the random parity generators",
         [](SystemConfig& c, const std::string& v) { c.code.parity_seed = parse_u64(v); }},

        {"codebook.l_p", "codeword length L_p",
         [](SystemConfig& c, const std::string& v) { c.codebook.length = parse_int(v); }},
        {"codebook.seed", "codebook generation seed",
         [](SystemConfig& c, const std::string& v) { c.codebook.seed = parse_u64(v); }},

        {"cs.max_iters", "AMP iteration cap",
         [](SystemConfig& c, const std::string& v) { c.cs.max_iters = parse_int(v); }},
        {"cs.damping", "AMP damping factor",
         [](SystemConfig& c, const std::string& v) { c.cs.damping = parse_double(v); }},
        {"cs.tol", "AMP relative-change stop",
         [](SystemConfig& c, const std::string& v) { c.cs.tol = parse_double(v); }},
        {"cs.components", "Gaussian mixture components I",
         [](SystemConfig& c, const std::string& v) { c.cs.gm_components = parse_int(v); }},
        {"cs.rho", "initial sparsity rate (0: 4*N_RF/N)",
         [](SystemConfig& c, const std::string& v) { c.cs.rho_init = parse_double(v); }},
        {"cs.epsilon", "detection threshold (0: automatic)",
         [](SystemConfig& c, const std::string& v) { c.cs.epsilon = parse_double(v); }},

        {"soft.l_save", "paths kept per root each stage",
         [](SystemConfig& c, const std::string& v) { c.soft.l_save = parse_int(v); }},
        {"soft.l_split", "branches kept per path",
         [](SystemConfig& c, const std::string& v) { c.soft.l_split = parse_int(v); }},
        {"soft.s_prime", "list-decoded stages S' (0: S-3)",
         [](SystemConfig& c, const std::string& v) { c.soft.list_stages = parse_int(v); }},
        {"soft.mpa_iters", "message passing iterations",
         [](SystemConfig& c, const std::string& v) { c.soft.mpa_iters = parse_int(v); }},
        {"soft.tau", "similarity pruning threshold",
         [](SystemConfig& c, const std::string& v) { c.soft.tau = parse_double(v); }},
        {"soft.llr_clamp", "LLR clamp magnitude",
         [](SystemConfig& c, const std::string& v) { c.soft.llr_clamp = parse_double(v); }},

        {"noise.mode", "ebn0 | snr | var",
         [](SystemConfig& c, const std::string& v) { c.noise.mode = v; }},
        {"noise.value", "noise level in the chosen mode",
         [](SystemConfig& c, const std::string& v) { c.noise.value = parse_double(v); }},
        {"noise.power", "per-codeword transmit power P",
         [](SystemConfig& c, const std::string& v) { c.noise.power = parse_double(v); }},

        {"sim.ka", "active users K_a",
         [](SystemConfig& c, const std::string& v) { c.sim.ka = parse_int(v); }},
        {"sim.trials", "Monte Carlo trials per grid point",
         [](SystemConfig& c, const std::string& v) { c.sim.trials = parse_int(v); }},
        {"sim.seed", "master seed",
         [](SystemConfig& c, const std::string& v) { c.sim.master_seed = parse_u64(v); }},
        {"sim.level_grid", "comma list of noise levels to sweep",
         [](SystemConfig& c, const std::string& v) {
             c.sim.level_grid.clear();
             for (const auto& item : split_list(v)) c.sim.level_grid.push_back(parse_double(item));
         }},
        {"sim.ka_grid", "comma list of K_a values to sweep",
         [](SystemConfig& c, const std::string& v) {
             c.sim.ka_grid.clear();
             for (const auto& item : split_list(v)) c.sim.ka_grid.push_back(parse_int(item));
         }},
        {"sim.decoders", "comma list of traditional,hard,soft",
         [](SystemConfig& c, const std::string& v) { c.sim.decoders = split_list(v); }},
        {"sim.oracle_cs", "bypass AMP and feed true lists",
         [](SystemConfig& c, const std::string& v) { c.sim.oracle_cs = parse_bool(v); }},
        {"sim.erase", "true sub-blocks deleted per user from the CS lists",
         [](SystemConfig& c, const std::string& v) { c.sim.erase = parse_int(v); }},
        {"sim.no_collisions", "redraw messages until slot indices are collision-free",
         [](SystemConfig& c, const std::string& v) { c.sim.no_collisions = parse_bool(v); }},
        {"sim.workers", "worker threads (0: hardware)",
         [](SystemConfig& c, const std::string& v) { c.sim.workers = parse_int(v); }},
    };
    return table;
}

}  // namespace

TreeCodeProfile SystemConfig::profile() const {
    int total = 0;
    for (int b : code.data_profile) total += b;
    return make_profile(total, code.sub_blocks, code.block_bits, code.data_profile);
}

double SystemConfig::noise_variance(double level, int ka) const {
    if (noise.mode == "ebn0") {
        int total_bits = 0;
        for (int b : code.data_profile) total_bits += b;
        const double eb = noise.power * codebook.length * code.sub_blocks / total_bits;
        return eb / std::pow(10.0, level / 10.0);
    }
    if (noise.mode == "snr")
        return noise.power * ka / codebook.length * std::pow(10.0, -level / 10.0);
    if (noise.mode == "var") return level;
    throw std::invalid_argument("noise.mode must be ebn0, snr or var");
}

void SystemConfig::validate() const {
    channel.validate();
    const TreeCodeProfile p = profile();  // throws on an inconsistent code section
    if (!code.parity_profile.empty() && code.parity_profile != p.parity_bits)
        throw std::invalid_argument("code.parity_profile must equal J - b_s per stage");
    if (codebook.length < 1) throw std::invalid_argument("codebook.l_p must be positive");
    if (sim.trials < 1) throw std::invalid_argument("sim.trials must be >= 1");
    if (sim.ka < 1) throw std::invalid_argument("sim.ka must be >= 1");
    if (noise.mode != "ebn0" && noise.mode != "snr" && noise.mode != "var")
        throw std::invalid_argument("noise.mode must be ebn0, snr or var");
    if (sim.decoders.empty()) throw std::invalid_argument("sim.decoders must not be empty");
    for (const auto& d : sim.decoders)
        if (d != "traditional" && d != "hard" && d != "soft")
            throw std::invalid_argument("unknown decoder '" + d + "'");
    if (sim.erase < 0) throw std::invalid_argument("sim.erase must be >= 0");
    noise_variance(noise.value, sim.ka);
}

void apply_override(SystemConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& entry : key_table()) {
        if (entry.name == key) {
            entry.set(cfg, trim(value));
            return;
        }
    }
    throw std::invalid_argument("unknown configuration key '" + key + "'");
}

void parse_config_line(SystemConfig& cfg, const std::string& raw) {
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) return;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("malformed configuration line '" + raw + "'");
    apply_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
}

SystemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    SystemConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        try {
            parse_config_line(cfg, line);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> out;
        for (const auto& entry : key_table()) out.push_back({entry.name, entry.help});
        return out;
    }();
    return keys;
}

}  // namespace ura
