#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sicsim/bcjr.hpp"
#include "sicsim/interleaver.hpp"
#include "sicsim/puncture.hpp"
#include "sicsim/trellis.hpp"

namespace sicsim {

/// Parallel-concatenated code: two identical RSC constituents, a seeded
/// internal permutation, and a rate-matching pattern that keeps exactly the
/// parity count needed for the requested codeword length.
struct CodeConfig {
    std::uint32_t feedback_octal = 013;
    std::uint32_t feedforward_octal = 015;
    std::size_t info_length = 0;
    PuncturePattern puncture;
    Permutation internal_interleaver;
    int turbo_iterations = 8;
    double llr_clamp = 30.0;
    bool exact_log_map = true;

    int memory() const { return std::bit_width(feedback_octal) - 1; }
    std::size_t tail_bits() const { return 2u * 2u * static_cast<std::size_t>(memory()); }
    std::size_t coded_length() const {
        return info_length + puncture.kept_parity1() + puncture.kept_parity2() + tail_bits();
    }
    double rate() const {
        return static_cast<double>(info_length) / static_cast<double>(coded_length());
    }

    /// info_length = round(rate * coded_length); parity kept-counts chosen so
    /// the codeword length is met exactly.
    static CodeConfig for_rate(double rate, std::size_t coded_length,
                               std::uint64_t interleaver_seed,
                               std::uint32_t feedback = 013, std::uint32_t feedforward = 015) {
        CodeConfig cfg;
        cfg.feedback_octal = feedback;
        cfg.feedforward_octal = feedforward;
        if (!(rate > 0.0) || !(rate < 1.0))
            throw std::invalid_argument("code rate must lie in (0, 1)");
        cfg.info_length = static_cast<std::size_t>(
            std::llround(rate * static_cast<double>(coded_length)));
        cfg.puncture = exact_rate_pattern(cfg.info_length, coded_length, cfg.tail_bits());
        cfg.internal_interleaver = build_interleaver(cfg.info_length, interleaver_seed,
                                                     StreamRole::turbo_interleaver);
        cfg.validate();
        return cfg;
    }

    void validate() const {
        std::string problems;
        auto add = [&](const std::string& p) {
            if (!problems.empty()) problems += "; ";
            problems += p;
        };
        if (info_length == 0) add("info_length is zero");
        if (((feedback_octal >> memory()) & 1u) == 0) add("feedback polynomial not monic");
        if (internal_interleaver.size() != info_length)
            add("interleaver length " + std::to_string(internal_interleaver.size()) +
                " does not match info_length " + std::to_string(info_length));
        else if (!is_permutation_of_indices(internal_interleaver))
            add("interleaver is not a permutation");
        if (puncture.keep_parity1.size() != info_length ||
            puncture.keep_parity2.size() != info_length)
            add("puncture mask length does not match info_length");
        if (turbo_iterations < 1) add("turbo_iterations must be positive");
        if (!(llr_clamp > 0.0)) add("llr_clamp must be positive");
        if (!problems.empty()) throw std::invalid_argument("bad code config: " + problems);
    }
};

/// Position of every coded bit in the serialized codeword. Shared by the
/// encoder mux and the decoder demux/remux so the layout is defined once.
struct CodedLayout {
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    std::vector<std::size_t> systematic;
    std::vector<std::size_t> parity1;
    std::vector<std::size_t> parity2;
    std::vector<std::size_t> tail1_sys, tail1_par, tail2_sys, tail2_par;
    std::size_t coded_length = 0;

    explicit CodedLayout(const CodeConfig& cfg) {
        const std::size_t b = cfg.info_length;
        const std::size_t m = static_cast<std::size_t>(cfg.memory());
        systematic.resize(b);
        parity1.assign(b, npos);
        parity2.assign(b, npos);
        tail1_sys.resize(m);
        tail1_par.resize(m);
        tail2_sys.resize(m);
        tail2_par.resize(m);
        std::size_t pos = 0;
        for (std::size_t k = 0; k < b; ++k) {
            systematic[k] = pos++;
            if (cfg.puncture.keep_parity1[k]) parity1[k] = pos++;
            if (cfg.puncture.keep_parity2[k]) parity2[k] = pos++;
        }
        for (std::size_t j = 0; j < m; ++j) {
            tail1_sys[j] = pos++;
            tail1_par[j] = pos++;
        }
        for (std::size_t j = 0; j < m; ++j) {
            tail2_sys[j] = pos++;
            tail2_par[j] = pos++;
        }
        coded_length = pos;
    }
};

inline std::vector<std::uint8_t> turbo_encode(const std::vector<std::uint8_t>& bits,
                                              const CodeConfig& cfg) {
    if (bits.size() != cfg.info_length)
        throw std::invalid_argument("info block length mismatch");
    const RscTrellis trellis(cfg.feedback_octal, cfg.feedforward_octal);
    const CodedLayout layout(cfg);

    const auto enc1 = trellis.encode(bits);
    const auto permuted = permute(bits, cfg.internal_interleaver);
    const auto enc2 = trellis.encode(permuted);

    std::vector<std::uint8_t> out(layout.coded_length);
    for (std::size_t k = 0; k < bits.size(); ++k) {
        out[layout.systematic[k]] = bits[k];
        if (layout.parity1[k] != CodedLayout::npos) out[layout.parity1[k]] = enc1.parity[k];
        if (layout.parity2[k] != CodedLayout::npos) out[layout.parity2[k]] = enc2.parity[k];
    }
    for (std::size_t j = 0; j < enc1.tail_systematic.size(); ++j) {
        out[layout.tail1_sys[j]] = enc1.tail_systematic[j];
        out[layout.tail1_par[j]] = enc1.tail_parity[j];
        out[layout.tail2_sys[j]] = enc2.tail_systematic[j];
        out[layout.tail2_par[j]] = enc2.tail_parity[j];
    }
    return out;
}

struct TurboDecodeResult {
    std::vector<double> info_app;         // per info bit, positive means 0
    std::vector<std::uint8_t> info_bits;  // hard decisions, ties resolve to 0
    std::vector<double> coded_app;        // per transmitted coded bit, codeword order
};

/// Iterative exchange of extrinsics between the two constituent decoders.
/// Coded-bit APPs are taken from each constituent's final pass so the caller
/// can rebuild soft estimates of everything that was transmitted.
inline TurboDecodeResult turbo_decode(const std::vector<double>& channel_llr,
                                      const CodeConfig& cfg, int iterations_override = 0) {
    const RscTrellis trellis(cfg.feedback_octal, cfg.feedforward_octal);
    const CodedLayout layout(cfg);
    if (channel_llr.size() != layout.coded_length)
        throw std::invalid_argument("coded LLR length mismatch");
    const std::size_t b = cfg.info_length;
    const std::size_t m = static_cast<std::size_t>(cfg.memory());
    const double clamp = cfg.llr_clamp;
    auto clip = [clamp](double v) { return std::clamp(v, -clamp, clamp); };
    const int iterations = iterations_override > 0 ? iterations_override : cfg.turbo_iterations;

    std::vector<double> sys(b), par1(b + m), par2(b + m);
    std::vector<double> tail1_sys(m), tail2_sys(m);
    for (std::size_t k = 0; k < b; ++k) {
        sys[k] = clip(channel_llr[layout.systematic[k]]);
        par1[k] = layout.parity1[k] == CodedLayout::npos
                      ? 0.0
                      : clip(channel_llr[layout.parity1[k]]);
        par2[k] = layout.parity2[k] == CodedLayout::npos
                      ? 0.0
                      : clip(channel_llr[layout.parity2[k]]);
    }
    for (std::size_t j = 0; j < m; ++j) {
        tail1_sys[j] = clip(channel_llr[layout.tail1_sys[j]]);
        par1[b + j] = clip(channel_llr[layout.tail1_par[j]]);
        tail2_sys[j] = clip(channel_llr[layout.tail2_sys[j]]);
        par2[b + j] = clip(channel_llr[layout.tail2_par[j]]);
    }

    std::vector<double> in_sys1(b + m), in_sys2(b + m);
    std::copy(tail1_sys.begin(), tail1_sys.end(), in_sys1.begin() + static_cast<std::ptrdiff_t>(b));
    std::copy(tail2_sys.begin(), tail2_sys.end(), in_sys2.begin() + static_cast<std::ptrdiff_t>(b));

    std::vector<double> prior1(b, 0.0), prior2(b, 0.0);
    std::vector<double> ext1(b, 0.0), ext2(b, 0.0);
    BcjrOutput out1, out2;
    for (int it = 0; it < iterations; ++it) {
        for (std::size_t k = 0; k < b; ++k) in_sys1[k] = sys[k] + prior1[k];
        out1 = bcjr_decode(trellis, {in_sys1, par1, b}, cfg.exact_log_map);
        for (std::size_t k = 0; k < b; ++k) {
            ext1[k] = clip(out1.systematic_app[k] - sys[k] - prior1[k]);
            prior2[k] = ext1[cfg.internal_interleaver[k]];
        }

        for (std::size_t k = 0; k < b; ++k)
            in_sys2[k] = sys[cfg.internal_interleaver[k]] + prior2[k];
        out2 = bcjr_decode(trellis, {in_sys2, par2, b}, cfg.exact_log_map);
        for (std::size_t k = 0; k < b; ++k) {
            ext2[k] = clip(out2.systematic_app[k] - sys[cfg.internal_interleaver[k]] - prior2[k]);
            prior1[cfg.internal_interleaver[k]] = ext2[k];
        }
    }

    TurboDecodeResult res;
    res.info_app.resize(b);
    res.info_bits.resize(b);
    res.coded_app.resize(layout.coded_length);
    for (std::size_t k = 0; k < b; ++k) {
        res.info_app[k] = clip(sys[k] + ext1[k] + prior1[k]);
        res.info_bits[k] = res.info_app[k] >= 0.0 ? 0 : 1;
        res.coded_app[layout.systematic[k]] = res.info_app[k];
        if (layout.parity1[k] != CodedLayout::npos)
            res.coded_app[layout.parity1[k]] = clip(out1.parity_app[k]);
        if (layout.parity2[k] != CodedLayout::npos)
            res.coded_app[layout.parity2[k]] = clip(out2.parity_app[k]);
    }
    for (std::size_t j = 0; j < m; ++j) {
        res.coded_app[layout.tail1_sys[j]] = clip(out1.systematic_app[b + j]);
        res.coded_app[layout.tail1_par[j]] = clip(out1.parity_app[b + j]);
        res.coded_app[layout.tail2_sys[j]] = clip(out2.systematic_app[b + j]);
        res.coded_app[layout.tail2_par[j]] = clip(out2.parity_app[b + j]);
    }
    return res;
}

}  // namespace sicsim
