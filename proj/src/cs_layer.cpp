// SPDX-License-Identifier: Apache-2.0

#include "ura/cs_layer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ura {

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
        return 0.5 * (hi + v[mid - 1]);
    }
    return hi;
}

double gaussian_log_pdf(double x, double mu, double sigma) {
    const double d = (x - mu) / sigma;
    return -0.5 * d * d - std::log(sigma);
}

}  // namespace

Codebook generate_codebook(int l_p, int block_bits, std::uint64_t seed) {
    if (l_p < 1) throw std::invalid_argument("codebook: L_p must be positive");
    if (block_bits < 1 || block_bits > 20)
        throw std::invalid_argument("codebook: J must be in [1, 20]");

    const int n = 1 << block_bits;
    Codebook cb;
    cb.seed = seed;
    cb.a.resize(l_p, n);
    Rng rng(derive_seed(seed, 0xc0deb00c));
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < l_p; ++r) cb.a(r, c) = rng.cgaussian(1.0);
        cb.a.col(c) /= cb.a.col(c).norm();
    }
    return cb;
}

Eigen::MatrixXcd synthesize_slot(const std::vector<std::uint32_t>& codeword_of_user,
                                 const std::vector<Eigen::VectorXcd>& beam_channels,
                                 const Codebook& cb, double noise_var, Rng& rng) {
    if (codeword_of_user.size() != beam_channels.size())
        throw std::invalid_argument("synthesize_slot: one codeword per active user required");
    if (noise_var < 0.0) throw std::invalid_argument("synthesize_slot: negative noise variance");

    const int n_rf = beam_channels.empty() ? 0 : static_cast<int>(beam_channels[0].size());
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(cb.length(), n_rf);
    for (std::size_t k = 0; k < codeword_of_user.size(); ++k)
        y += cb.a.col(codeword_of_user[k]) * beam_channels[k].transpose();
    if (noise_var > 0.0)
        for (int c = 0; c < y.cols(); ++c)
            for (int r = 0; r < y.rows(); ++r) y(r, c) += rng.cgaussian(noise_var);
    return y;
}

void GmPrior::validate() const {
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("gm prior: rho must be in (0,1)");
    if (weights.empty() || weights.size() != means.size() || weights.size() != variances.size())
        throw std::invalid_argument("gm prior: component arrays must be non-empty and aligned");
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("gm prior: negative weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("gm prior: weights must sum to 1");
    for (double v : variances)
        if (v <= 0.0) throw std::invalid_argument("gm prior: variances must be positive");
}

GmPrior make_gm_prior(int components, double rho, double active_power) {
    if (components < 1) throw std::invalid_argument("gm prior: need at least one component");
    GmPrior p;
    p.rho = std::min(0.95, std::max(1e-6, rho));
    p.weights.assign(components, 1.0 / components);
    p.means.assign(components, {0.0, 0.0});
    p.variances.resize(components);
    // factors log-spaced over two decades, rescaled so the mixture variance
    // equals active_power
    double norm = 0.0;
    for (int i = 0; i < components; ++i) {
        const double expo = components == 1 ? 0.0 : -1.0 + 2.0 * i / (components - 1.0);
        p.variances[i] = std::pow(10.0, expo);
        norm += p.weights[i] * p.variances[i];
    }
    const double scale = std::max(active_power, 1e-12) / norm;
    for (auto& v : p.variances) v *= scale;
    p.validate();
    return p;
}

namespace {

// Posterior statistics of one coefficient under pseudo-observation r with
// effective noise tau2. Also accumulates the EM sufficient statistics.
struct EmAccum {
    double pi_sum = 0.0;
    std::vector<double> gamma_sum;
    std::vector<std::complex<double>> gamma_mean_sum;
    std::vector<double> gamma_m2_sum;

    explicit EmAccum(int comps)
        : gamma_sum(comps, 0.0), gamma_mean_sum(comps, {0.0, 0.0}), gamma_m2_sum(comps, 0.0) {}
};

inline void denoise_entry(std::complex<double> r, double tau2, const GmPrior& prior,
                          std::complex<double>& x_post, double& var_post, EmAccum& acc) {
    const int comps = prior.components();
    // log evidences; spike first
    double log_spike = std::log1p(-prior.rho) - std::norm(r) / tau2 - std::log(tau2);
    double max_log = log_spike;
    static thread_local std::vector<double> log_ev;
    static thread_local std::vector<std::complex<double>> post_mean;
    static thread_local std::vector<double> post_var;
    log_ev.resize(comps);
    post_mean.resize(comps);
    post_var.resize(comps);
    for (int i = 0; i < comps; ++i) {
        const double tot = prior.variances[i] + tau2;
        log_ev[i] = std::log(prior.rho * prior.weights[i] + 1e-300) - std::norm(r - prior.means[i]) / tot -
                    std::log(tot);
        post_mean[i] = (prior.variances[i] * r + tau2 * prior.means[i]) / tot;
        post_var[i] = prior.variances[i] * tau2 / tot;
        max_log = std::max(max_log, log_ev[i]);
    }
    const double spike_w = std::exp(log_spike - max_log);
    double active_w = 0.0;
    for (int i = 0; i < comps; ++i) {
        log_ev[i] = std::exp(log_ev[i] - max_log);
        active_w += log_ev[i];
    }
    const double total_w = spike_w + active_w;
    const double pi_act = active_w / total_w;

    std::complex<double> mean{0.0, 0.0};
    double second = 0.0;
    for (int i = 0; i < comps; ++i) {
        const double resp = log_ev[i] / total_w;  // joint responsibility pi*beta_i
        mean += resp * post_mean[i];
        second += resp * (std::norm(post_mean[i]) + post_var[i]);
        acc.gamma_sum[i] += resp;
        acc.gamma_mean_sum[i] += resp * post_mean[i];
        acc.gamma_m2_sum[i] += resp * (std::norm(post_mean[i]) + post_var[i]);
    }
    acc.pi_sum += pi_act;
    x_post = mean;
    var_post = std::max(second - std::norm(mean), 0.0);
}

void em_update(GmPrior& prior, const EmAccum& acc, std::size_t n_entries, double var_floor) {
    const int comps = prior.components();
    const double pi_total = acc.pi_sum;
    prior.rho = std::min(0.95, std::max(1e-8, pi_total / static_cast<double>(n_entries)));
    if (pi_total <= 1e-12) return;  // nothing classified active; keep mixture shape
    double wsum = 0.0;
    for (int i = 0; i < comps; ++i) {
        if (acc.gamma_sum[i] > 1e-12) {
            prior.weights[i] = acc.gamma_sum[i] / pi_total;
            prior.means[i] = acc.gamma_mean_sum[i] / acc.gamma_sum[i];
            const double second = acc.gamma_m2_sum[i] / acc.gamma_sum[i];
            prior.variances[i] = std::max(second - std::norm(prior.means[i]), var_floor);
        } else {
            prior.weights[i] = 1e-12;
        }
        wsum += prior.weights[i];
    }
    for (auto& w : prior.weights) w /= wsum;
}

}  // namespace

AmpResult amp_gm_decode(const Eigen::MatrixXcd& y, const Eigen::MatrixXcd& a,
                        const GmPrior& init, int max_iters, double damping, double tol) {
    if (max_iters < 1) throw std::invalid_argument("amp: max_iters must be >= 1");
    if (y.rows() != a.rows()) throw std::invalid_argument("amp: Y and A row counts differ");
    init.validate();

    const int l_p = static_cast<int>(a.rows());
    const int n = static_cast<int>(a.cols());
    const int cols = static_cast<int>(y.cols());

    AmpResult res;
    res.prior = init;
    res.x_hat = Eigen::MatrixXcd::Zero(n, cols);

    Eigen::MatrixXcd z = y;
    Eigen::VectorXd tau2(cols);
    for (int c = 0; c < cols; ++c) tau2(c) = std::max(z.col(c).squaredNorm() / l_p, 1e-30);

    const double power_scale = y.squaredNorm() / std::max(1, l_p * cols);
    const double var_floor = 1e-12 * std::max(power_scale, 1e-12);

    double min_residual = z.squaredNorm();
    Eigen::MatrixXcd x_new(n, cols), z_new(l_p, cols), r(n, cols);
    Eigen::VectorXd var_sum(cols);

    for (int it = 0; it < max_iters; ++it) {
        r = res.x_hat + a.adjoint() * z;

        EmAccum acc(res.prior.components());
        var_sum.setZero();
        for (int c = 0; c < cols; ++c) {
            const double t2 = tau2(c);
            for (int i = 0; i < n; ++i) {
                std::complex<double> xp;
                double vp;
                denoise_entry(r(i, c), t2, res.prior, xp, vp, acc);
                x_new(i, c) = xp;
                var_sum(c) += vp;
            }
        }

        // Onsager-corrected residual
        z_new = y - a * x_new;
        for (int c = 0; c < cols; ++c)
            z_new.col(c) += (var_sum(c) / (l_p * tau2(c))) * z.col(c);

        const double delta = (x_new - res.x_hat).norm();
        const double scale = std::max(x_new.norm(), 1e-12);

        res.x_hat = damping * x_new + (1.0 - damping) * res.x_hat;
        z = damping * z_new + (1.0 - damping) * z;
        for (int c = 0; c < cols; ++c) tau2(c) = std::max(z.col(c).squaredNorm() / l_p, 1e-30);

        em_update(res.prior, acc, static_cast<std::size_t>(n) * cols, var_floor);
        res.iterations = it + 1;

        res.residual = z.squaredNorm();
        min_residual = std::min(min_residual, res.residual);
        if (res.residual > 10.0 * min_residual && it > 2) {
            res.diverged = true;
            break;
        }
        if (delta / scale < tol) break;
    }
    return res;
}

double mrc_statistic(const Eigen::RowVectorXcd& row) {
    const double norm = row.norm();
    if (norm <= 0.0) return 0.0;
    double stat = 0.0;
    for (int i = 0; i < row.size(); ++i) {
        const double mag = std::abs(row(i));
        stat += (mag / norm) * mag;
    }
    return stat;
}

std::vector<std::uint32_t> detect_active(const Eigen::MatrixXcd& x_hat, double epsilon) {
    if (epsilon <= 0.0) throw std::invalid_argument("detect_active: epsilon must be positive");
    std::vector<std::uint32_t> detected;
    for (int i = 0; i < x_hat.rows(); ++i)
        if (mrc_statistic(x_hat.row(i)) >= epsilon) detected.push_back(i);
    return detected;
}

double default_detection_threshold(const Eigen::MatrixXcd& x_hat, double noise_row_scale) {
    std::vector<double> norms(x_hat.rows());
    double max_norm = 0.0;
    for (int i = 0; i < x_hat.rows(); ++i) {
        norms[i] = x_hat.row(i).norm();
        max_norm = std::max(max_norm, norms[i]);
    }
    const double coarse = median_of(norms);
    std::vector<double> inactive;
    for (double v : norms)
        if (v <= 3.0 * coarse) inactive.push_back(v);
    const double sigma = median_of(inactive);
    double threshold = std::max(3.0 * sigma, 1e-12 * std::max(max_norm, 1e-30));
    if (noise_row_scale > 0.0) threshold = std::max(threshold, 0.25 * noise_row_scale);
    return threshold;
}

GaussianPair default_pattern_priors(const std::vector<double>& magnitudes) {
    GaussianPair pr;
    if (magnitudes.size() < 4) return pr;
    std::vector<double> sorted(magnitudes);
    std::sort(sorted.begin(), sorted.end());
    const std::size_t quart = std::max<std::size_t>(1, sorted.size() / 4);

    auto moments = [](const double* begin, std::size_t count) {
        double mean = 0.0;
        for (std::size_t i = 0; i < count; ++i) mean += begin[i];
        mean /= count;
        double var = 0.0;
        for (std::size_t i = 0; i < count; ++i) var += (begin[i] - mean) * (begin[i] - mean);
        return std::make_pair(mean, std::sqrt(var / count));
    };
    auto [m2, s2] = moments(sorted.data(), quart);
    auto [m1, s1] = moments(sorted.data() + sorted.size() - quart, quart);
    pr.mu1 = m1;
    pr.mu2 = m2;
    if (pr.mu1 <= pr.mu2) pr.mu1 = pr.mu2 + 1e-6;
    // keep both classes non-degenerate relative to their separation, else a
    // collapsed class captures or rejects everything
    const double floor = 0.05 * (pr.mu1 - pr.mu2);
    pr.sigma1 = std::max(s1, floor);
    pr.sigma2 = std::max(s2, floor);
    return pr;
}

std::vector<std::uint64_t> estimate_beam_patterns(const Eigen::MatrixXcd& rows,
                                                  const GaussianPair& priors) {
    const int n_rf = static_cast<int>(rows.cols());
    if (n_rf > 64) throw std::invalid_argument("estimate_beam_patterns: at most 64 beams");

    std::vector<double> mags(static_cast<std::size_t>(rows.rows()) * n_rf);
    for (int i = 0; i < rows.rows(); ++i)
        for (int m = 0; m < n_rf; ++m) mags[static_cast<std::size_t>(i) * n_rf + m] = std::abs(rows(i, m));

    // classify under the priors, then re-estimate each class once
    double sum1 = 0.0, sq1 = 0.0, sum2 = 0.0, sq2 = 0.0;
    std::size_t n1 = 0, n2 = 0;
    for (double v : mags) {
        if (gaussian_log_pdf(v, priors.mu1, priors.sigma1) >=
            gaussian_log_pdf(v, priors.mu2, priors.sigma2)) {
            sum1 += v;
            sq1 += v * v;
            ++n1;
        } else {
            sum2 += v;
            sq2 += v * v;
            ++n2;
        }
    }
    GaussianPair upd = priors;
    if (n1 > 0) {
        upd.mu1 = sum1 / n1;
        upd.sigma1 = std::sqrt(std::max(sq1 / n1 - upd.mu1 * upd.mu1, 0.0));
    }
    if (n2 > 0) {
        upd.mu2 = sum2 / n2;
        upd.sigma2 = std::sqrt(std::max(sq2 / n2 - upd.mu2 * upd.mu2, 0.0));
    }
    if (upd.mu1 <= upd.mu2) upd.mu1 = upd.mu2 + 1e-6;
    const double floor = 0.05 * (upd.mu1 - upd.mu2);
    upd.sigma1 = std::max(upd.sigma1, floor);
    upd.sigma2 = std::max(upd.sigma2, floor);

    std::vector<std::uint64_t> patterns(rows.rows(), 0);
    for (int i = 0; i < rows.rows(); ++i) {
        int strongest = -1;
        double strongest_mag = 0.0;
        for (int m = 0; m < n_rf; ++m) {
            const double v = mags[static_cast<std::size_t>(i) * n_rf + m];
            if (gaussian_log_pdf(v, upd.mu1, upd.sigma1) >= gaussian_log_pdf(v, upd.mu2, upd.sigma2))
                patterns[i] |= (1ull << m);
            if (v > strongest_mag) {
                strongest_mag = v;
                strongest = m;
            }
        }
        // a row with any energy received it somewhere; keeping its strongest
        // beam makes patterns of the same user overlap across sub-slots even
        // when the class boundary wobbles
        if (strongest >= 0) patterns[i] |= (1ull << strongest);
    }
    return patterns;
}

int CsSlotOutput::find(std::uint32_t index) const {
    auto it = std::lower_bound(detected.begin(), detected.end(), index);
    if (it == detected.end() || *it != index) return -1;
    return static_cast<int>(it - detected.begin());
}

CsSlotOutput cs_decode_slot(const Eigen::MatrixXcd& y, const Codebook& cb, double noise_var,
                            const CsDecodeConfig& cfg) {
    const int n = cb.size();
    const int n_rf = static_cast<int>(y.cols());

    const double rho = cfg.rho_init > 0.0 ? cfg.rho_init
                                          : std::min(0.5, 4.0 * n_rf / static_cast<double>(n));
    // per-active-coefficient power from the measurement energy:
    // ||Y||_F^2 ~ sum_k ||h_k||^2 + L_p*N_RF*noise_var with unit-norm codewords
    const double signal_energy =
        std::max(y.squaredNorm() - noise_var * cb.length() * n_rf, 1e-8);
    const double active_power = signal_energy / (rho * n * n_rf);
    GmPrior prior = make_gm_prior(cfg.gm_components, rho, active_power);

    AmpResult amp = amp_gm_decode(y, cb.a, prior, cfg.max_iters, cfg.damping, cfg.tol);
    if (amp.diverged)
        amp = amp_gm_decode(y, cb.a, prior, cfg.max_iters, cfg.damping * 0.5, cfg.tol);

    CsSlotOutput out;
    out.amp_diverged = amp.diverged;
    out.x_hat = std::move(amp.x_hat);

    const double residual_row = std::sqrt(amp.residual / std::max(1, cb.length()));
    const double eps =
        cfg.epsilon > 0.0 ? cfg.epsilon : default_detection_threshold(out.x_hat, residual_row);
    out.detected = detect_active(out.x_hat, eps);

    out.channel_estimates.resize(static_cast<int>(out.detected.size()), n_rf);
    for (std::size_t i = 0; i < out.detected.size(); ++i)
        out.channel_estimates.row(static_cast<int>(i)) = out.x_hat.row(out.detected[i]);

    // The entrywise prior shrinks an active row's weak beams toward the
    // spike; a ridge-regularized least-squares refit on the detected support
    // removes that bias from the channel estimates. Skipped when the support
    // approaches L_p and the refit would be ill-conditioned.
    const int support = static_cast<int>(out.detected.size());
    if (support > 0 && 5 * support <= 4 * cb.length()) {
        Eigen::MatrixXcd a_s(cb.length(), support);
        for (int i = 0; i < support; ++i) a_s.col(i) = cb.a.col(out.detected[i]);
        Eigen::MatrixXcd gram = a_s.adjoint() * a_s;
        gram.diagonal().array() += std::max(noise_var, 1e-10);
        const Eigen::MatrixXcd refit = gram.ldlt().solve(a_s.adjoint() * y);
        for (int i = 0; i < support; ++i) {
            out.channel_estimates.row(i) = refit.row(i);
            out.x_hat.row(out.detected[i]) = refit.row(i);
        }
    }

    if (!out.detected.empty()) {
        std::vector<double> mags;
        mags.reserve(out.detected.size() * n_rf);
        for (int i = 0; i < out.channel_estimates.rows(); ++i)
            for (int m = 0; m < n_rf; ++m) mags.push_back(std::abs(out.channel_estimates(i, m)));
        out.beam_patterns =
            estimate_beam_patterns(out.channel_estimates, default_pattern_priors(mags));
    }
    return out;
}

}  // namespace ura
