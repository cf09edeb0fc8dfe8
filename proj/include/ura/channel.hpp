// SPDX-License-Identifier: Apache-2.0

#ifndef URA_CHANNEL_HPP
#define URA_CHANNEL_HPP

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "ura/rng.hpp"

namespace ura {

// Clustered mmWave multipath channel for a ULA receiver with hybrid
// beamforming. All angles are in radians, antenna spacing is half a
// wavelength.
struct ChannelConfig {
    int n_antennas = 256;             // N_r
    int n_rf_chains = 16;             // N_RF, must divide N_r
    int clusters = 3;                 // P_c
    int subpaths = 10;                // Q_p per cluster
    double angular_spread = 0.1309;   // intra-cluster AoA half-width (7.5 deg)

    void validate() const;  // throws std::invalid_argument
};

// Grouped-DFT receive beamformer: N_RF columns, each the normalized sum of
// N_r/N_RF consecutive DFT beams. Columns are orthonormal.
struct BeamformingMatrix {
    Eigen::MatrixXcd w;   // N_r x N_RF
    double gamma = 1.0;   // scale applied to each group sum

    int group_size() const { return static_cast<int>(w.rows() / w.cols()); }
};

struct ChannelRealization {
    std::vector<std::complex<double>> gains;  // beta_{p,q}
    std::vector<double> aoas;                 // theta_{p,q}
    Eigen::VectorXcd h;                       // antenna domain, length N_r
    Eigen::VectorXcd h_beam;                  // beam domain, length N_RF
};

// ULA steering vector with symmetric half-integer indexing
// m in J(N_r) = { i - (N_r-1)/2 : i = 0..N_r-1 }, entry exp(-j*pi*sin(theta)*m).
Eigen::VectorXcd steering_vector(double theta, int n_antennas);

BeamformingMatrix build_beamforming_matrix(int n_antennas, int n_rf_chains);

Eigen::VectorXcd to_beam_domain(const Eigen::VectorXcd& h, const BeamformingMatrix& bf);

// Assembles h and its beam projection from explicit per-path parameters.
ChannelRealization channel_from_paths(const std::vector<std::complex<double>>& gains,
                                      const std::vector<double>& aoas,
                                      const BeamformingMatrix& bf);

// Draws cluster centers uniform on [-pi/2, pi/2], sub-path AoAs uniform
// within +/- angular_spread of the center (clamped), sub-path gains circular
// complex Gaussian with variance 1/(P_c*Q_p) so that E||h||^2 = N_r.
ChannelRealization draw_channel(const ChannelConfig& cfg, const BeamformingMatrix& bf, Rng& rng);

}  // namespace ura

#endif
