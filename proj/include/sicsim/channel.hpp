#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "sicsim/framing.hpp"
#include "sicsim/modulation.hpp"
#include "sicsim/rng.hpp"

namespace sicsim {

/// Random-walk carrier phase: theta_t = theta_{t-1} + N(0, sigma_p2).
inline std::vector<double> generate_phase_noise(std::size_t length, double sigma_p2,
                                                double initial_phase,
                                                RandomStream& stream) {
    if (sigma_p2 < 0.0) throw std::invalid_argument("phase increment variance must be >= 0");
    std::vector<double> phase(length);
    const double step = std::sqrt(sigma_p2);
    double theta = initial_phase;
    for (std::size_t t = 0; t < length; ++t) {
        phase[t] = theta;
        theta += step * stream.gaussian();
    }
    return phase;
}

/// Decoding order is by received power, strongest first: user u gets
/// imbalance_db more power than user u+1, and the last (weakest) user sits
/// at unit amplitude. The nominal SNR is that weakest user's Es/N0 on
/// unit-power data symbols.
inline std::vector<double> user_amplitudes(std::size_t users, double imbalance_db) {
    std::vector<double> amps(users);
    for (std::size_t u = 0; u < users; ++u)
        amps[u] = amplitude_from_db(imbalance_db * static_cast<double>(users - 1 - u));
    return amps;
}

/// Es/N0 = 1/(2 sigma_n2) for a unit-power symbol.
inline double noise_variance_per_dim(double snr_db) {
    return 0.5 * std::pow(10.0, -snr_db / 10.0);
}

/// Per-user flat channels h_{t,u} = A_u e^{i theta_{t,u}}; the only time
/// variation inside a frame is the phase walk.
struct ChannelRealization {
    std::vector<std::vector<std::complex<double>>> h;  // [user][symbol]
    std::vector<double> amplitudes;
    std::vector<std::vector<double>> phase_walk;
    double sigma_n2 = 0.0;
    double sigma_p2 = 0.0;
};

inline ChannelRealization realize_channel(std::size_t users, std::size_t frame_length,
                                          double snr_db, double imbalance_db,
                                          double sigma_p2, std::uint64_t seed,
                                          std::uint64_t trial) {
    ChannelRealization ch;
    ch.sigma_p2 = sigma_p2;
    ch.sigma_n2 = noise_variance_per_dim(snr_db);
    ch.amplitudes = user_amplitudes(users, imbalance_db);
    ch.h.resize(users);
    ch.phase_walk.resize(users);
    for (std::size_t u = 0; u < users; ++u) {
        RandomStream stream(seed, trial, u, StreamRole::phase);
        const double initial = 2.0 * std::numbers::pi * stream.uniform01();
        ch.phase_walk[u] = generate_phase_noise(frame_length, sigma_p2, initial, stream);
        ch.h[u].resize(frame_length);
        for (std::size_t t = 0; t < frame_length; ++t)
            ch.h[u][t] = std::polar(ch.amplitudes[u], ch.phase_walk[u][t]);
    }
    return ch;
}

/// y_t = sum_u h_{t,u} x_{t,u} + w_t, w white circularly symmetric Gaussian
/// with sigma_n2 per dimension. One noise realization per received frame.
inline std::vector<std::complex<double>> synthesize_received(
    const std::vector<UserFrame>& frames, const ChannelRealization& channel,
    RandomStream& noise_stream) {
    if (frames.empty()) throw std::invalid_argument("no user frames");
    if (frames.size() != channel.h.size())
        throw std::invalid_argument("frame count does not match channel realization");
    const std::size_t length = frames[0].symbols.size();
    for (const auto& f : frames)
        if (f.symbols.size() != length)
            throw std::invalid_argument("user frames must be equal length");

    std::vector<std::complex<double>> y(length);
    const double sigma = std::sqrt(channel.sigma_n2);
    for (std::size_t t = 0; t < length; ++t) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t u = 0; u < frames.size(); ++u) {
            if (channel.h[u].size() != length)
                throw std::invalid_argument("channel length does not match frames");
            acc += channel.h[u][t] * frames[u].symbols[t];
        }
        y[t] = acc + sigma * noise_stream.gaussian_pair();
    }
    return y;
}

}  // namespace sicsim
