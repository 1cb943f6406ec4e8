#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sicsim/framing.hpp"
#include "sicsim/turbo.hpp"

namespace sicsim {

/// Per-symbol channel estimate plus the per-dimension residual variance,
/// which absorbs both thermal noise and whatever interference the current
/// stage has not removed.
struct ChannelEstimate {
    std::vector<std::complex<double>> h_hat;
    double sigma_hat_n2 = 0.0;
    std::size_t degenerate_windows = 0;

    double magnitude(std::size_t t) const { return std::abs(h_hat[t]); }
    double phase(std::size_t t) const { return std::arg(h_hat[t]); }
};

/// Sliding-window M-step: the window correlation sum(conj(x_hat) y) sets the
/// phase; the magnitude is that correlation derotated by its own phase,
/// normalized by sum(E[|x|^2]). The per-term real-part form underestimates
/// the magnitude by the cosine of the window phase whenever the phase is not
/// near zero, and fails the constant-channel exactness property, so the
/// derotated form is used. Windows truncate at the frame edges. A window
/// whose confidence mass is (near) zero holds the most recent estimate.
inline ChannelEstimate estimate_channel_window(
    const std::vector<std::complex<double>>& y, const SoftSymbols& soft, int window_half_width,
    const ChannelEstimate* previous = nullptr) {
    const std::size_t n = y.size();
    if (soft.x_hat.size() != n || soft.second_moment.size() != n)
        throw std::invalid_argument("soft symbol sequence length mismatch");
    if (window_half_width < 1) throw std::invalid_argument("window half width must be >= 1");
    const std::size_t w = static_cast<std::size_t>(window_half_width);

    ChannelEstimate est;
    est.h_hat.resize(n);
    std::complex<double> corr{0.0, 0.0};
    double mass = 0.0;
    auto add = [&](std::size_t t) {
        corr += std::conj(soft.x_hat[t]) * y[t];
        mass += soft.second_moment[t];
    };
    auto remove = [&](std::size_t t) {
        corr -= std::conj(soft.x_hat[t]) * y[t];
        mass -= soft.second_moment[t];
    };
    for (std::size_t t = 0; t < std::min(n, w + 1); ++t) add(t);

    constexpr double kMinMass = 1e-9;
    for (std::size_t t = 0; t < n; ++t) {
        if (t > 0) {
            if (t + w < n) add(t + w);
            if (t > w) remove(t - w - 1);
        }
        if (mass > kMinMass) {
            est.h_hat[t] = corr / mass;
        } else {
            est.h_hat[t] = t > 0            ? est.h_hat[t - 1]
                           : previous != nullptr ? previous->h_hat[t]
                                                 : std::complex<double>{0.0, 0.0};
            ++est.degenerate_windows;
        }
    }
    if (previous != nullptr) est.sigma_hat_n2 = previous->sigma_hat_n2;
    return est;
}

/// Per-dimension residual variance over the frame.
inline double estimate_noise_variance(const std::vector<std::complex<double>>& y,
                                      const std::vector<std::complex<double>>& h_hat,
                                      const std::vector<std::complex<double>>& x_hat) {
    if (h_hat.size() != y.size() || x_hat.size() != y.size())
        throw std::invalid_argument("sequence length mismatch");
    double acc = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) acc += std::norm(y[t] - h_hat[t] * x_hat[t]);
    return acc / (2.0 * static_cast<double>(y.size()));
}

/// Pilot-only bootstrap: windowed correlation over pilot positions alone,
/// then complex linear interpolation between pilot anchors, held flat
/// outside the first and last pilot. The bootstrap window widens to the
/// pilot spacing when the configured W is narrower, so no anchor is ever
/// empty. Residual variance comes from the pilot positions.
inline ChannelEstimate pilot_bootstrap(const std::vector<std::complex<double>>& y,
                                       const FrameLayout& layout,
                                       const std::vector<std::complex<double>>& pilots,
                                       int window_half_width) {
    const std::size_t n = y.size();
    if (n != layout.total) throw std::invalid_argument("frame length mismatch");
    if (pilots.size() != layout.pilot_count())
        throw std::invalid_argument("pilot sequence length mismatch");
    const auto& pos = layout.pilot_positions;
    ChannelEstimate est;
    est.h_hat.assign(n, {0.0, 0.0});
    if (pos.empty()) {
        ++est.degenerate_windows;
        return est;
    }

    std::size_t spacing = n;
    if (pos.size() >= 2) spacing = pos[1] - pos[0];
    const std::size_t reach =
        std::max<std::size_t>(static_cast<std::size_t>(window_half_width), spacing);

    std::vector<std::complex<double>> anchor(pos.size());
    for (std::size_t i = 0; i < pos.size(); ++i) {
        std::complex<double> corr{0.0, 0.0};
        double mass = 0.0;
        for (std::size_t j = 0; j < pos.size(); ++j) {
            const auto lo = pos[i] >= reach ? pos[i] - reach : 0;
            if (pos[j] < lo || pos[j] > pos[i] + reach) continue;
            corr += std::conj(pilots[j]) * y[pos[j]];
            mass += std::norm(pilots[j]);
        }
        anchor[i] = corr / mass;
    }

    for (std::size_t t = 0; t <= pos.front(); ++t) est.h_hat[t] = anchor.front();
    for (std::size_t i = 0; i + 1 < pos.size(); ++i) {
        const std::size_t lo = pos[i], hi = pos[i + 1];
        for (std::size_t t = lo + 1; t <= hi; ++t) {
            const double frac =
                static_cast<double>(t - lo) / static_cast<double>(hi - lo);
            est.h_hat[t] = anchor[i] + frac * (anchor[i + 1] - anchor[i]);
        }
    }
    for (std::size_t t = pos.back(); t < n; ++t) est.h_hat[t] = anchor.back();

    double acc = 0.0;
    for (std::size_t i = 0; i < pos.size(); ++i)
        acc += std::norm(y[pos[i]] - est.h_hat[pos[i]] * pilots[i]);
    est.sigma_hat_n2 = acc / (2.0 * static_cast<double>(pos.size()));
    return est;
}

/// Matched-filter LLRs against the current channel estimate; variance floor
/// keeps early near-zero residual estimates from producing NaNs.
inline std::vector<double> channel_llrs(const std::vector<std::complex<double>>& y,
                                        const std::vector<std::complex<double>>& h_hat,
                                        double sigma2, double clamp) {
    const double var = std::max(sigma2, 1e-12);
    std::vector<double> llrs(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) {
        const double raw = 2.0 * std::real(std::conj(h_hat[t]) * y[t]) / var;
        llrs[t] = std::clamp(raw, -clamp, clamp);
    }
    return llrs;
}

enum class CsiMode { em, perfect, pilot_only };

struct ReceiverConfig {
    int window_half_width = 16;
    int em_iterations = 15;
    CsiMode csi_mode = CsiMode::em;
};

/// Everything the receiver knows a priori about one user's transmission.
struct UserLink {
    CodeConfig code;
    FrameLayout layout;
    Permutation channel_interleaver;
    std::vector<std::complex<double>> pilots;
};

struct EmDecodeResult {
    TurboDecodeResult decode;
    SoftSymbols soft;
    ChannelEstimate channel;
    std::vector<double> e_bar_trace;  // genie-only, one value per iteration
};

namespace detail {
inline double normalized_channel_mse(const std::vector<std::complex<double>>& truth,
                                     const std::vector<std::complex<double>>& estimate) {
    double acc = 0.0;
    for (std::size_t t = 0; t < truth.size(); ++t)
        acc += std::norm(truth[t] - estimate[t]) / std::norm(truth[t]);
    return acc / static_cast<double>(truth.size());
}
}  // namespace detail

/// Alternating estimation and decoding for a single user on its residual
/// sequence. E-step: matched-filter LLRs from the current estimate, one full
/// SISO decode, fresh each iteration. M-step: windowed re-estimation and
/// residual variance over the whole frame, pilots included. Modes: "em" is
/// the full loop; "perfect" pins h_hat to the true channel and only tracks
/// the residual variance; "pilot_only" decodes once on the bootstrap.
inline EmDecodeResult em_decode_user(const std::vector<std::complex<double>>& y,
                                     const UserLink& link, const ReceiverConfig& rc,
                                     const std::vector<std::complex<double>>* true_h = nullptr) {
    if (rc.em_iterations < 1) throw std::invalid_argument("em_iterations must be >= 1");
    if (rc.csi_mode == CsiMode::perfect && true_h == nullptr)
        throw std::invalid_argument("perfect CSI mode needs the true channel");
    const double clamp = link.code.llr_clamp;

    EmDecodeResult res;
    ChannelEstimate est = pilot_bootstrap(y, link.layout, link.pilots, rc.window_half_width);
    if (rc.csi_mode == CsiMode::perfect) {
        est.h_hat = *true_h;
        double acc = 0.0;
        const auto& pos = link.layout.pilot_positions;
        for (std::size_t i = 0; i < pos.size(); ++i)
            acc += std::norm(y[pos[i]] - est.h_hat[pos[i]] * link.pilots[i]);
        if (!pos.empty()) est.sigma_hat_n2 = acc / (2.0 * static_cast<double>(pos.size()));
    }

    const int rounds = rc.csi_mode == CsiMode::pilot_only ? 1 : rc.em_iterations;
    for (int it = 0; it < rounds; ++it) {
        const auto frame_llrs = channel_llrs(y, est.h_hat, est.sigma_hat_n2, clamp);
        const auto coded_llrs =
            extract_data_llrs(frame_llrs, link.channel_interleaver, link.layout);
        res.decode = turbo_decode(coded_llrs, link.code);
        res.soft = soft_symbol_estimates(res.decode.coded_app, link.channel_interleaver,
                                         link.layout, link.pilots);
        if (rc.csi_mode == CsiMode::em) {
            auto refined = estimate_channel_window(y, res.soft, rc.window_half_width, &est);
            refined.sigma_hat_n2 = estimate_noise_variance(y, refined.h_hat, res.soft.x_hat);
            est = std::move(refined);
        } else if (rc.csi_mode == CsiMode::perfect) {
            est.sigma_hat_n2 = estimate_noise_variance(y, est.h_hat, res.soft.x_hat);
        }
        if (true_h != nullptr)
            res.e_bar_trace.push_back(detail::normalized_channel_mse(*true_h, est.h_hat));
    }
    res.channel = std::move(est);
    return res;
}

}  // namespace sicsim
