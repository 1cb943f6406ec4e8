#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace sicsim {

/// bit 0 -> +1, bit 1 -> -1
inline double bpsk(std::uint8_t bit) { return bit ? -1.0 : 1.0; }

/// MMSE symbol estimate from a bit LLR (positive favors bit 0).
inline double soft_symbol(double llr) { return std::tanh(0.5 * llr); }

/// Nearest constellation point; zero resolves to +1.
inline std::complex<double> hard_decision(std::complex<double> x_hat) {
    return {x_hat.real() >= 0.0 ? 1.0 : -1.0, 0.0};
}

/// dB figures are power ratios; amplitudes scale by the square root.
inline double amplitude_from_db(double power_db) {
    return std::pow(10.0, power_db / 20.0);
}

}  // namespace sicsim
