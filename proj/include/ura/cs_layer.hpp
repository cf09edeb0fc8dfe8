// SPDX-License-Identifier: Apache-2.0

#ifndef URA_CS_LAYER_HPP
#define URA_CS_LAYER_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ura/rng.hpp"

namespace ura {

// Common codebook A in C^{L_p x N}, N = 2^J. Entries i.i.d. circular complex
// Gaussian, columns normalized to unit power.
struct Codebook {
    Eigen::MatrixXcd a;
    std::uint64_t seed = 0;

    int length() const { return static_cast<int>(a.rows()); }        // L_p
    int size() const { return static_cast<int>(a.cols()); }          // N
};

Codebook generate_codebook(int l_p, int block_bits, std::uint64_t seed);

// Y_s = sum_k a_{i_k(s)} h_k^T + Z with Z entries CN(0, noise_var).
// beam_channels[k] is the beam-domain channel of active user k.
Eigen::MatrixXcd synthesize_slot(const std::vector<std::uint32_t>& codeword_of_user,
                                 const std::vector<Eigen::VectorXcd>& beam_channels,
                                 const Codebook& cb, double noise_var, Rng& rng);

// Spike-plus-Gaussian-mixture prior on the entries of X:
//   p(x) = (1-rho) delta(x) + rho * sum_i w_i CN(x; mu_i, nu_i)
struct GmPrior {
    double rho = 0.1;
    std::vector<double> weights;
    std::vector<std::complex<double>> means;
    std::vector<double> variances;

    int components() const { return static_cast<int>(weights.size()); }
    void validate() const;  // throws std::invalid_argument
};

// components log-spaced in variance around active_power, zero means, uniform
// weights; the standard starting point when nothing is known about the gains.
GmPrior make_gm_prior(int components, double rho, double active_power);

struct AmpResult {
    Eigen::MatrixXcd x_hat;  // N x N_RF
    GmPrior prior;           // EM-learned parameters
    int iterations = 0;
    bool diverged = false;
    double residual = 0.0;   // final squared residual norm
};

// Columnwise AMP with the spike+GM MMSE denoiser and an EM re-estimation of
// (rho, w, mu, nu) between iterations. Stops at max_iters, when the relative
// change of x_hat drops below tol, or when the residual energy has grown 10x
// from its minimum (flagged as diverged).
AmpResult amp_gm_decode(const Eigen::MatrixXcd& y, const Eigen::MatrixXcd& a,
                        const GmPrior& init, int max_iters, double damping, double tol);

// MRC detection statistic of one row: sum_i eta_i |x_i| with
// eta_i = |x_i| / ||x||_2, which collapses to the row l2 norm. Zero rows give
// exactly zero.
double mrc_statistic(const Eigen::RowVectorXcd& row);

// indices whose statistic reaches epsilon, ascending
std::vector<std::uint32_t> detect_active(const Eigen::MatrixXcd& x_hat, double epsilon);

// 3 sigma rule: sigma is the median row norm of the rows a coarse first pass
// classifies as inactive (norm <= 3x overall median). noise_row_scale, when
// positive, floors the threshold at a quarter of that scale so a signal-free
// slot cannot alarm on the tail of the shrunk-noise rows; callers pass the
// AMP residual row norm sqrt(||Z||_F^2 / L_p).
double default_detection_threshold(const Eigen::MatrixXcd& x_hat, double noise_row_scale = 0.0);

// Two-Gaussian classifier for beam activity, N(mu1, s1^2) for active beams
// and N(mu2, s2^2) for silent ones, mu1 > mu2.
struct GaussianPair {
    double mu1 = 1.0, sigma1 = 0.5;
    double mu2 = 0.0, sigma2 = 0.05;
};

// quartile-based initialization: top quartile of the pooled magnitudes seeds
// the active class, bottom quartile the inactive class
GaussianPair default_pattern_priors(const std::vector<double>& magnitudes);

// One refinement round: classify pooled magnitudes under the priors,
// re-estimate each class (kept unchanged when it receives no samples), then
// decide every entry by the updated likelihood ratio. Rows are the detected
// channel estimates; bit m of the returned mask marks beam m active.
std::vector<std::uint64_t> estimate_beam_patterns(const Eigen::MatrixXcd& rows,
                                                  const GaussianPair& priors);

// Per-sub-slot CS decoder output consumed by the outer decoders.
struct CsSlotOutput {
    std::vector<std::uint32_t> detected;       // K_s, ascending
    Eigen::MatrixXcd channel_estimates;        // |K_s| x N_RF
    std::vector<std::uint64_t> beam_patterns;  // |K_s| bitmasks
    Eigen::MatrixXcd x_hat;                    // full N x N_RF estimate
    bool amp_diverged = false;

    // position of a codeword index in `detected`, or -1
    int find(std::uint32_t index) const;
};

struct CsDecodeConfig {
    int max_iters = 30;
    double damping = 0.7;
    double tol = 1e-6;
    int gm_components = 3;
    double rho_init = 0.0;   // 0: 4*N_RF/N
    double epsilon = 0.0;    // 0: default_detection_threshold
};

// AMP -> activity detection -> beam pattern estimation for one sub-slot.
// Retries once with half the damping if AMP diverges.
CsSlotOutput cs_decode_slot(const Eigen::MatrixXcd& y, const Codebook& cb, double noise_var,
                            const CsDecodeConfig& cfg);

}  // namespace ura

#endif
