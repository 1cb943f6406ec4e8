#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace sicsim {

/// Philox4x64-10 counter-based generator (Salmon et al., "Parallel Random
/// Numbers: As Easy as 1, 2, 3"). Stateless: every 256-bit counter/key pair
/// maps to an independent 256-bit block, so any stream of the simulation can
/// be regenerated in isolation.
class Philox4x64 {
public:
    using Counter = std::array<std::uint64_t, 4>;
    using Key = std::array<std::uint64_t, 2>;

    static Counter block(Counter ctr, Key key) {
        for (int round = 0; round < 9; ++round) {
            ctr = single_round(ctr, key);
            key[0] += 0x9E3779B97F4A7C15ull;
            key[1] += 0xBB67AE8584CAA73Bull;
        }
        return single_round(ctr, key);
    }

private:
    static Counter single_round(const Counter& c, const Key& k) {
        const unsigned __int128 p0 =
            static_cast<unsigned __int128>(0xD2E7470EE14C6C93ull) * c[0];
        const unsigned __int128 p1 =
            static_cast<unsigned __int128>(0xCA5A826395121157ull) * c[2];
        const auto hi0 = static_cast<std::uint64_t>(p0 >> 64);
        const auto lo0 = static_cast<std::uint64_t>(p0);
        const auto hi1 = static_cast<std::uint64_t>(p1 >> 64);
        const auto lo1 = static_cast<std::uint64_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/// What a stream is used for. Part of the stream key, so draws for one
/// purpose never perturb another.
enum class StreamRole : std::uint64_t {
    payload = 1,
    pilot = 2,
    phase = 3,
    noise = 4,
    turbo_interleaver = 5,
    channel_interleaver = 6,
    calibration = 7,
};

/// User slot in a stream key for draws that are shared by all users of a
/// trial (e.g. the one additive-noise realization).
inline constexpr std::uint64_t kSharedUser = 0xFFFFull;

/// One independent random stream, keyed by (seed, trial, user, role).
/// Satisfies UniformRandomBitGenerator.
class RandomStream {
public:
    using result_type = std::uint64_t;

    RandomStream(std::uint64_t seed, std::uint64_t trial, std::uint64_t user,
                 StreamRole role)
        : ctr_{0, trial, (user << 16) | static_cast<std::uint64_t>(role), 0},
          key_{seed, 0x73696373696d3031ull} {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
        if (pos_ == 4) {
            buf_ = Philox4x64::block(ctr_, key_);
            ++ctr_[0];
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; consumes uniforms in fixed pairs so
    /// the draw sequence is platform-independent.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Complex sample with independent N(0,1) real and imaginary parts.
    std::complex<double> gaussian_pair() {
        const double re = gaussian();
        const double im = gaussian();
        return {re, im};
    }

    /// Uniform integer in [0, n). Lemire multiply-shift reduction.
    std::uint64_t uniform_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>((*this)()) * n) >> 64);
    }

private:
    Philox4x64::Counter ctr_;
    Philox4x64::Key key_;
    std::array<std::uint64_t, 4> buf_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace sicsim
