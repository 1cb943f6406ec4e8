#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sicsim/interleaver.hpp"
#include "sicsim/modulation.hpp"
#include "sicsim/rng.hpp"

namespace sicsim {

/// Where pilots sit inside one user's frame. Pilots are spread uniformly,
/// one every floor(X/X_p) positions, which keeps the largest gap a phase
/// tracker must bridge as small as the pilot budget allows.
struct FrameLayout {
    std::size_t total = 0;
    std::vector<std::uint8_t> pilot_mask;
    std::vector<std::size_t> pilot_positions;
    std::vector<std::size_t> data_positions;
    double pilot_amplitude = 1.0;

    std::size_t pilot_count() const { return pilot_positions.size(); }
    std::size_t data_count() const { return data_positions.size(); }

    static FrameLayout uniform(std::size_t data_count, std::size_t pilots,
                               double boost_db) {
        FrameLayout layout;
        layout.total = data_count + pilots;
        layout.pilot_amplitude = amplitude_from_db(boost_db);
        layout.pilot_mask.assign(layout.total, 0);
        if (pilots > 0) {
            const std::size_t spacing = layout.total / pilots;
            if (spacing == 0)
                throw std::invalid_argument("more pilots than frame positions");
            for (std::size_t i = 0; i < pilots; ++i) {
                const std::size_t t = i * spacing;
                if (t >= layout.total)
                    throw std::invalid_argument("pilot placement exceeds frame length");
                layout.pilot_mask[t] = 1;
                layout.pilot_positions.push_back(t);
            }
        }
        layout.data_positions.reserve(data_count);
        for (std::size_t t = 0; t < layout.total; ++t)
            if (!layout.pilot_mask[t]) layout.data_positions.push_back(t);
        return layout;
    }
};

/// Known pilot values: boosted antipodal signs drawn from the user's pilot
/// stream, so transmitter and receiver regenerate the same sequence.
inline std::vector<std::complex<double>> generate_pilot_symbols(const FrameLayout& layout,
                                                                RandomStream& stream) {
    std::vector<std::complex<double>> pilots(layout.pilot_count());
    for (auto& p : pilots) {
        const double sign = (stream() & 1u) ? -1.0 : 1.0;
        p = {sign * layout.pilot_amplitude, 0.0};
    }
    return pilots;
}

/// One user's transmitted frame. Data symbols are unit-power PSK points,
/// pilots carry the boost.
struct UserFrame {
    std::vector<std::complex<double>> symbols;
    std::vector<std::uint8_t> pilot_mask;
    std::size_t pilot_count = 0;
    std::size_t data_count = 0;
    double pilot_boost = 1.0;
};

/// Interleave coded bits, map to BPSK, multiplex pilots.
inline UserFrame modulate_and_frame(const std::vector<std::uint8_t>& coded_bits,
                                    const Permutation& channel_interleaver,
                                    const FrameLayout& layout,
                                    const std::vector<std::complex<double>>& pilots) {
    if (coded_bits.size() != layout.data_count())
        throw std::invalid_argument("coded block does not fill the frame's data positions");
    if (channel_interleaver.size() != coded_bits.size())
        throw std::invalid_argument("channel interleaver length mismatch");
    if (pilots.size() != layout.pilot_count())
        throw std::invalid_argument("pilot sequence length mismatch");

    const auto interleaved = permute(coded_bits, channel_interleaver);
    UserFrame frame;
    frame.symbols.resize(layout.total);
    frame.pilot_mask = layout.pilot_mask;
    frame.pilot_count = layout.pilot_count();
    frame.data_count = layout.data_count();
    frame.pilot_boost = layout.pilot_amplitude;
    for (std::size_t i = 0; i < layout.pilot_count(); ++i)
        frame.symbols[layout.pilot_positions[i]] = pilots[i];
    for (std::size_t i = 0; i < layout.data_count(); ++i)
        frame.symbols[layout.data_positions[i]] = {bpsk(interleaved[i]), 0.0};
    return frame;
}

/// Per-symbol MMSE estimates and second moments for reconstruction. Data
/// positions come from decoder APPs; pilots are known exactly, so their
/// second moment is the deterministic |pilot|^2.
struct SoftSymbols {
    std::vector<std::complex<double>> x_hat;
    std::vector<double> second_moment;
};

inline SoftSymbols soft_symbol_estimates(const std::vector<double>& coded_bit_app,
                                         const Permutation& channel_interleaver,
                                         const FrameLayout& layout,
                                         const std::vector<std::complex<double>>& pilots) {
    if (coded_bit_app.size() != layout.data_count())
        throw std::invalid_argument("APP block does not fill the frame's data positions");
    SoftSymbols soft;
    soft.x_hat.resize(layout.total);
    soft.second_moment.resize(layout.total);
    const auto interleaved = permute(coded_bit_app, channel_interleaver);
    for (std::size_t i = 0; i < layout.data_count(); ++i) {
        soft.x_hat[layout.data_positions[i]] = {soft_symbol(interleaved[i]), 0.0};
        soft.second_moment[layout.data_positions[i]] = 1.0;
    }
    for (std::size_t i = 0; i < layout.pilot_count(); ++i) {
        soft.x_hat[layout.pilot_positions[i]] = pilots[i];
        soft.second_moment[layout.pilot_positions[i]] = std::norm(pilots[i]);
    }
    return soft;
}

/// Pull per-symbol observation LLRs back into codeword order.
inline std::vector<double> extract_data_llrs(const std::vector<double>& frame_llrs,
                                             const Permutation& channel_interleaver,
                                             const FrameLayout& layout) {
    if (frame_llrs.size() != layout.total)
        throw std::invalid_argument("frame LLR length mismatch");
    std::vector<double> interleaved(layout.data_count());
    for (std::size_t i = 0; i < layout.data_count(); ++i)
        interleaved[i] = frame_llrs[layout.data_positions[i]];
    return unpermute(interleaved, channel_interleaver);
}

inline std::vector<std::complex<double>> hard_decisions(
    const std::vector<std::complex<double>>& x_hat) {
    std::vector<std::complex<double>> out(x_hat.size());
    for (std::size_t i = 0; i < x_hat.size(); ++i) out[i] = hard_decision(x_hat[i]);
    return out;
}

}  // namespace sicsim
