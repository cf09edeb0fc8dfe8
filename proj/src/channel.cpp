// SPDX-License-Identifier: Apache-2.0

#include "ura/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace ura {

void ChannelConfig::validate() const {
    if (n_antennas <= 0 || n_rf_chains <= 0)
        throw std::invalid_argument("channel: antenna and RF chain counts must be positive");
    if (n_antennas % n_rf_chains != 0)
        throw std::invalid_argument("channel: N_r must be a multiple of N_RF");
    if (clusters < 1 || subpaths < 1)
        throw std::invalid_argument("channel: need at least one cluster and one sub-path");
    if (angular_spread < 0.0 || angular_spread > M_PI)
        throw std::invalid_argument("channel: angular spread out of range");
}

Eigen::VectorXcd steering_vector(double theta, int n_antennas) {
    if (n_antennas <= 0) throw std::invalid_argument("steering_vector: antenna count must be positive");
    if (theta < -M_PI / 2 - 1e-12 || theta > M_PI / 2 + 1e-12)
        throw std::invalid_argument("steering_vector: AoA outside [-pi/2, pi/2]");

    Eigen::VectorXcd e(n_antennas);
    const double half = 0.5 * (n_antennas - 1);
    const double phase_scale = -M_PI * std::sin(theta);  // 2*pi*(d/lambda) with d/lambda = 1/2
    for (int i = 0; i < n_antennas; ++i) {
        const double m = static_cast<double>(i) - half;
        e(i) = std::polar(1.0, phase_scale * m);
    }
    return e;
}

BeamformingMatrix build_beamforming_matrix(int n_antennas, int n_rf_chains) {
    if (n_antennas <= 0 || n_rf_chains <= 0 || n_antennas % n_rf_chains != 0)
        throw std::invalid_argument("build_beamforming_matrix: N_RF must divide N_r");

    const int group = n_antennas / n_rf_chains;
    const double unit = 1.0 / std::sqrt(static_cast<double>(n_antennas));

    BeamformingMatrix bf;
    bf.gamma = 1.0 / std::sqrt(static_cast<double>(group));
    bf.w = Eigen::MatrixXcd::Zero(n_antennas, n_rf_chains);

    // DFT beams w_i = e(theta_i)/sqrt(N_r), theta_i = arcsin((2i-1)/N_r - 1).
    // Consecutive groups of N_r/N_RF beams are summed; the beams are
    // orthonormal, so the group sum has norm sqrt(group) and gamma restores
    // unit column power.
    for (int c = 0; c < n_rf_chains; ++c) {
        Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(n_antennas);
        for (int g = 0; g < group; ++g) {
            const int i = c * group + g + 1;  // 1-based DFT index
            const double theta = std::asin((2.0 * i - 1.0) / n_antennas - 1.0);
            acc += unit * steering_vector(theta, n_antennas);
        }
        bf.w.col(c) = bf.gamma * acc;
    }
    return bf;
}

Eigen::VectorXcd to_beam_domain(const Eigen::VectorXcd& h, const BeamformingMatrix& bf) {
    return bf.w.adjoint() * h;
}

ChannelRealization channel_from_paths(const std::vector<std::complex<double>>& gains,
                                      const std::vector<double>& aoas,
                                      const BeamformingMatrix& bf) {
    if (gains.size() != aoas.size())
        throw std::invalid_argument("channel_from_paths: gain/AoA size mismatch");
    const int n_antennas = static_cast<int>(bf.w.rows());

    ChannelRealization ch;
    ch.gains = gains;
    ch.aoas = aoas;
    ch.h = Eigen::VectorXcd::Zero(n_antennas);
    for (std::size_t p = 0; p < gains.size(); ++p)
        ch.h += gains[p] * steering_vector(aoas[p], n_antennas);
    ch.h_beam = to_beam_domain(ch.h, bf);
    return ch;
}

ChannelRealization draw_channel(const ChannelConfig& cfg, const BeamformingMatrix& bf, Rng& rng) {
    cfg.validate();

    const int n_paths = cfg.clusters * cfg.subpaths;
    const double gain_var = 1.0 / static_cast<double>(n_paths);

    std::vector<std::complex<double>> gains;
    std::vector<double> aoas;
    gains.reserve(n_paths);
    aoas.reserve(n_paths);

    for (int p = 0; p < cfg.clusters; ++p) {
        const double center = rng.uniform(-M_PI / 2, M_PI / 2);
        for (int q = 0; q < cfg.subpaths; ++q) {
            double theta = center + rng.uniform(-cfg.angular_spread, cfg.angular_spread);
            theta = std::min(M_PI / 2, std::max(-M_PI / 2, theta));
            aoas.push_back(theta);
            gains.push_back(rng.cgaussian(gain_var));
        }
    }
    return channel_from_paths(gains, aoas, bf);
}

}  // namespace ura
