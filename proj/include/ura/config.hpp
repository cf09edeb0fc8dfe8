// SPDX-License-Identifier: Apache-2.0

#ifndef URA_CONFIG_HPP
#define URA_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ura/channel.hpp"
#include "ura/cs_layer.hpp"
#include "ura/decoders.hpp"
#include "ura/tree_code.hpp"

namespace ura {

// Every scenario and algorithm knob, loadable from a flat key=value file with
// dotted section names (e.g. `channel.n_rf = 16`) and overridable by CLI
// flags of the same names.
struct SystemConfig {
    ChannelConfig channel;

    struct CodeConfig {
        int sub_blocks = 8;
        int block_bits = 8;
        std::vector<int> data_profile{8, 4, 4, 4, 4, 0, 0, 0};
        std::vector<int> parity_profile;  // optional; must equal J - b_s when given
        std::uint64_t parity_seed = 1;
    } code;

    struct CodebookConfig {
        int length = 100;  // L_p
        std::uint64_t seed = 2;
    } codebook;

    CsDecodeConfig cs;
    SoftDecodeConfig soft;

    struct NoiseConfig {
        std::string mode = "ebn0";  // ebn0 | snr | var
        double value = 25.0;
        double power = 1.0;  // per-codeword transmit power P
    } noise;

    struct SimConfig {
        int ka = 10;
        int trials = 100;
        std::uint64_t master_seed = 12345;
        std::vector<double> level_grid;  // noise levels; empty: just noise.value
        std::vector<int> ka_grid;        // empty: just ka
        std::vector<std::string> decoders{"traditional", "hard", "soft"};
        bool oracle_cs = false;
        int erase = 0;
        bool no_collisions = false;
        int workers = 0;  // 0: hardware concurrency
    } sim;

    TreeCodeProfile profile() const;

    // Noise variance per complex sample for a given level of the configured
    // mode. ebn0 uses E_b = P * L_p * S / B. snr is the per-received-sample
    // ratio: the expected beam-domain channel energy is N_RF, so the signal
    // power per entry of Y is P * K_a / L_p and the level L maps to
    // P * (K_a / L_p) * 10^(-L/10). var takes the level verbatim.
    double noise_variance(double level, int ka) const;

    void validate() const;  // throws std::invalid_argument
};

// key=value text, '#' comments, unknown keys rejected
SystemConfig load_config(const std::string& path);
void parse_config_line(SystemConfig& cfg, const std::string& line);
void apply_override(SystemConfig& cfg, const std::string& key, const std::string& value);

struct ConfigKey {
    std::string name;
    std::string help;
};
const std::vector<ConfigKey>& config_keys();

}  // namespace ura

#endif
