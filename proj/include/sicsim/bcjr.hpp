#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "sicsim/trellis.hpp"

namespace sicsim {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Jacobian logarithm, exact form. Identities with -inf operands hold.
inline double max_star(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    return std::max(a, b) + std::log1p(std::exp(-std::abs(a - b)));
}

inline double max_star_approx(double a, double b) { return std::max(a, b); }

/// LLR difference of two log-likelihood accumulators. Both empty means no
/// information; a single empty side saturates.
inline double llr_from_accumulators(double metric0, double metric1) {
    if (metric0 == kNegInf && metric1 == kNegInf) return 0.0;
    if (metric0 == kNegInf) return -std::numeric_limits<double>::infinity();
    if (metric1 == kNegInf) return std::numeric_limits<double>::infinity();
    return metric0 - metric1;
}

/// One soft-in soft-out pass over a terminated RSC trellis.
/// Inputs are LLRs with positive sign meaning bit 0; the systematic input at
/// info positions already contains any a-priori term. Lengths are
/// info_length + memory; the trailing entries cover the termination steps
/// where the input bit is forced by the trellis state.
struct BcjrInput {
    std::span<const double> systematic_llr;
    std::span<const double> parity_llr;
    std::size_t info_length = 0;
};

/// APP LLRs for every transmitted bit of this constituent stream, tails
/// included; needed when the decoder output feeds symbol reconstruction.
struct BcjrOutput {
    std::vector<double> systematic_app;
    std::vector<double> parity_app;
};

inline BcjrOutput bcjr_decode(const RscTrellis& trellis, const BcjrInput& in,
                              bool exact_log_map = true) {
    const std::size_t total = in.systematic_llr.size();
    const std::size_t info = in.info_length;
    const std::uint32_t ns = trellis.num_states();
    if (in.parity_llr.size() != total || total != info + static_cast<std::size_t>(trellis.memory()))
        throw std::invalid_argument("soft input length does not match trellis");

    auto combine = exact_log_map ? max_star : max_star_approx;
    auto sign = [](std::uint32_t bit) { return bit ? -1.0 : 1.0; };

    // branch metric for (step t, state s, input u); tails force u
    auto gamma = [&](std::size_t t, std::uint32_t s, std::uint32_t u) {
        if (t < info) {
            const std::uint32_t z = trellis.parity(s, u);
            return 0.5 * (sign(u) * in.systematic_llr[t] + sign(z) * in.parity_llr[t]);
        }
        const std::uint32_t x = trellis.tail_input(s);
        const std::uint32_t z = trellis.tail_parity(s);
        return 0.5 * (sign(x) * in.systematic_llr[t] + sign(z) * in.parity_llr[t]);
    };

    std::vector<double> alpha((total + 1) * ns, kNegInf);
    std::vector<double> beta((total + 1) * ns, kNegInf);
    alpha[0] = 0.0;
    beta[total * ns + 0] = 0.0;  // register driven back to zero by the tail

    for (std::size_t t = 0; t < total; ++t) {
        double* cur = &alpha[t * ns];
        double* nxt = &alpha[(t + 1) * ns];
        for (std::uint32_t s = 0; s < ns; ++s) {
            if (cur[s] == kNegInf) continue;
            if (t < info) {
                for (std::uint32_t u = 0; u <= 1; ++u) {
                    const std::uint32_t d = trellis.next_state(s, u);
                    nxt[d] = combine(nxt[d], cur[s] + gamma(t, s, u));
                }
            } else {
                const std::uint32_t d = trellis.tail_next(s);
                nxt[d] = combine(nxt[d], cur[s] + gamma(t, s, 0));
            }
        }
        const double peak = *std::max_element(nxt, nxt + ns);
        if (peak != kNegInf)
            for (std::uint32_t s = 0; s < ns; ++s) nxt[s] -= peak;
    }

    for (std::size_t t = total; t-- > 0;) {
        double* cur = &beta[t * ns];
        const double* nxt = &beta[(t + 1) * ns];
        for (std::uint32_t s = 0; s < ns; ++s) {
            if (t < info) {
                for (std::uint32_t u = 0; u <= 1; ++u) {
                    const std::uint32_t d = trellis.next_state(s, u);
                    if (nxt[d] == kNegInf) continue;
                    cur[s] = combine(cur[s], nxt[d] + gamma(t, s, u));
                }
            } else {
                const std::uint32_t d = trellis.tail_next(s);
                if (nxt[d] == kNegInf) continue;
                cur[s] = combine(cur[s], nxt[d] + gamma(t, s, 0));
            }
        }
        const double peak = *std::max_element(cur, cur + ns);
        if (peak != kNegInf)
            for (std::uint32_t s = 0; s < ns; ++s) cur[s] -= peak;
    }

    BcjrOutput out;
    out.systematic_app.resize(total);
    out.parity_app.resize(total);
    for (std::size_t t = 0; t < total; ++t) {
        const double* a = &alpha[t * ns];
        const double* b = &beta[(t + 1) * ns];
        double sys0 = kNegInf, sys1 = kNegInf, par0 = kNegInf, par1 = kNegInf;
        for (std::uint32_t s = 0; s < ns; ++s) {
            if (a[s] == kNegInf) continue;
            if (t < info) {
                for (std::uint32_t u = 0; u <= 1; ++u) {
                    const std::uint32_t d = trellis.next_state(s, u);
                    if (b[d] == kNegInf) continue;
                    const double m = a[s] + gamma(t, s, u) + b[d];
                    (u ? sys1 : sys0) = combine(u ? sys1 : sys0, m);
                    const std::uint32_t z = trellis.parity(s, u);
                    (z ? par1 : par0) = combine(z ? par1 : par0, m);
                }
            } else {
                const std::uint32_t d = trellis.tail_next(s);
                if (b[d] == kNegInf) continue;
                const double m = a[s] + gamma(t, s, 0) + b[d];
                const std::uint32_t x = trellis.tail_input(s);
                (x ? sys1 : sys0) = combine(x ? sys1 : sys0, m);
                const std::uint32_t z = trellis.tail_parity(s);
                (z ? par1 : par0) = combine(z ? par1 : par0, m);
            }
        }
        out.systematic_app[t] = llr_from_accumulators(sys0, sys1);
        out.parity_app[t] = llr_from_accumulators(par0, par1);
    }
    return out;
}

}  // namespace sicsim
