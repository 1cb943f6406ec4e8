#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "sicsim/bcjr.hpp"
#include "sicsim/rng.hpp"
#include "sicsim/testing/exhaustive_map.hpp"
#include "sicsim/trellis.hpp"
#include "sicsim/turbo.hpp"

using namespace sicsim;

namespace {

std::vector<std::uint8_t> random_bits(std::size_t n, std::uint64_t seed) {
    RandomStream s(seed, 0, 0, StreamRole::calibration);
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) b = static_cast<std::uint8_t>(s() & 1u);
    return bits;
}

std::vector<double> bits_to_llrs(const std::vector<std::uint8_t>& bits, double magnitude) {
    std::vector<double> llrs(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) llrs[i] = bits[i] ? -magnitude : magnitude;
    return llrs;
}

CodeConfig small_config(std::size_t info, std::uint64_t seed) {
    CodeConfig cfg;
    cfg.info_length = info;
    cfg.puncture = identity_pattern(info);
    cfg.internal_interleaver = build_interleaver(info, seed, StreamRole::turbo_interleaver);
    cfg.validate();
    return cfg;
}

}  // namespace

TEST_CASE("max-star identities") {
    REQUIRE(max_star(kNegInf, 2.5) == 2.5);
    REQUIRE(max_star(2.5, kNegInf) == 2.5);
    REQUIRE(max_star(kNegInf, kNegInf) == kNegInf);
    for (const double a : {-3.0, 0.0, 1.7}) {
        for (const double b : {-1.2, 0.4, 5.0}) {
            const double expected = std::log(std::exp(a) + std::exp(b));
            REQUIRE(std::abs(max_star(a, b) - expected) < 1e-12);
            REQUIRE(max_star(a, b) == max_star(b, a));
            REQUIRE(max_star(a, b) >= std::max(a, b));
        }
    }
    REQUIRE(llr_from_accumulators(kNegInf, kNegInf) == 0.0);
    REQUIRE(llr_from_accumulators(1.0, kNegInf) ==
            std::numeric_limits<double>::infinity());
}

TEST_CASE("trellis tables agree with a direct register walk") {
    for (const auto& [fb, ff] : {std::pair<unsigned, unsigned>{013, 015},
                                std::pair<unsigned, unsigned>{07, 05},
                                std::pair<unsigned, unsigned>{023, 035}}) {
        const RscTrellis trellis(fb, ff);
        const testing::RegisterCode reference(fb, ff);
        REQUIRE(trellis.memory() == reference.m);
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto bits = random_bits(40, 100 + seed);
            const auto enc = trellis.encode(bits);
            std::vector<int> info(bits.begin(), bits.end());
            std::vector<int> ref_sys, ref_par;
            reference.run(info, ref_sys, ref_par);
            REQUIRE(ref_sys.size() == bits.size() + static_cast<std::size_t>(reference.m));
            for (std::size_t k = 0; k < bits.size(); ++k) {
                REQUIRE(static_cast<int>(bits[k]) == ref_sys[k]);
                REQUIRE(static_cast<int>(enc.parity[k]) == ref_par[k]);
            }
            for (int j = 0; j < reference.m; ++j) {
                REQUIRE(static_cast<int>(enc.tail_systematic[static_cast<std::size_t>(j)]) ==
                        ref_sys[bits.size() + static_cast<std::size_t>(j)]);
                REQUIRE(static_cast<int>(enc.tail_parity[static_cast<std::size_t>(j)]) ==
                        ref_par[bits.size() + static_cast<std::size_t>(j)]);
            }
        }
    }
}

TEST_CASE("constituent encoder matches worked-out vectors") {
    const RscTrellis trellis(013, 015);
    {
        const std::vector<std::uint8_t> bits{1, 0, 1, 1, 0, 0, 1, 0};
        const auto enc = trellis.encode(bits);
        REQUIRE(enc.parity == std::vector<std::uint8_t>{1, 1, 0, 1, 0, 0, 1, 1});
        REQUIRE(enc.tail_systematic == std::vector<std::uint8_t>{1, 1, 0});
        REQUIRE(enc.tail_parity == std::vector<std::uint8_t>{0, 1, 0});
    }
    {
        const std::vector<std::uint8_t> bits{1, 1, 1, 1, 1};
        const auto enc = trellis.encode(bits);
        REQUIRE(enc.parity == std::vector<std::uint8_t>{1, 0, 1, 0, 0});
        REQUIRE(enc.tail_systematic == std::vector<std::uint8_t>{1, 1, 0});
        REQUIRE(enc.tail_parity == std::vector<std::uint8_t>{0, 1, 0});
    }
}

TEST_CASE("termination drives the register to zero from every state") {
    const RscTrellis trellis(013, 015);
    for (std::uint32_t s = 0; s < trellis.num_states(); ++s) {
        std::uint32_t state = s;
        for (int j = 0; j < trellis.memory(); ++j) state = trellis.tail_next(state);
        REQUIRE(state == 0);
    }
}

TEST_CASE("rate geometry comes out exact") {
    const auto strong = CodeConfig::for_rate(0.72, 5000, 11);
    REQUIRE(strong.info_length == 3600);
    REQUIRE(strong.coded_length() == 5000);
    REQUIRE(strong.tail_bits() == 12);
    REQUIRE(strong.puncture.kept_parity1() == 694);
    REQUIRE(strong.puncture.kept_parity2() == 694);

    const auto weak = CodeConfig::for_rate(0.53, 5000, 12);
    REQUIRE(weak.info_length == 2650);
    REQUIRE(weak.coded_length() == 5000);
    REQUIRE(std::abs(weak.rate() - 0.53) < 1e-9);

    CodeConfig bad = strong;
    bad.internal_interleaver.pop_back();
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = strong;
    bad.internal_interleaver[0] = bad.internal_interleaver[1];
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("all-zero input encodes to the all-zero codeword") {
    const auto cfg = CodeConfig::for_rate(0.5, 200, 3);
    const auto word = turbo_encode(std::vector<std::uint8_t>(cfg.info_length, 0), cfg);
    REQUIRE(word.size() == 200);
    for (const auto b : word) REQUIRE(b == 0);
}

TEST_CASE("noiseless round trip recovers bits and codeword softs") {
    const auto cfg = CodeConfig::for_rate(0.5, 300, 21);
    const auto bits = random_bits(cfg.info_length, 77);
    const auto word = turbo_encode(bits, cfg);
    REQUIRE(word.size() == cfg.coded_length());
    const auto res = turbo_decode(bits_to_llrs(word, 8.0), cfg);
    REQUIRE(res.info_bits == bits);
    for (std::size_t k = 0; k < bits.size(); ++k) {
        REQUIRE((res.info_app[k] < 0) == (bits[k] == 1));
        REQUIRE(std::abs(res.info_app[k]) > 1.0);
    }
    for (std::size_t c = 0; c < word.size(); ++c)
        REQUIRE((res.coded_app[c] < 0) == (word[c] == 1));
}

TEST_CASE("saturated input stays finite") {
    const auto cfg = CodeConfig::for_rate(0.4, 120, 5);
    const auto bits = random_bits(cfg.info_length, 99);
    const auto word = turbo_encode(bits, cfg);
    const auto res = turbo_decode(bits_to_llrs(word, 1e9), cfg);
    REQUIRE(res.info_bits == bits);
    for (const double v : res.info_app) {
        REQUIRE(std::isfinite(v));
        REQUIRE(std::abs(v) <= cfg.llr_clamp);
    }
    for (const double v : res.coded_app) REQUIRE(std::isfinite(v));
}

TEST_CASE("zero observations yield exactly indifferent outputs") {
    const auto cfg = small_config(24, 31);
    const auto res = turbo_decode(std::vector<double>(cfg.coded_length(), 0.0), cfg);
    for (const double v : res.info_app) REQUIRE(v == 0.0);
    for (const double v : res.coded_app) REQUIRE(v == 0.0);
    for (const auto b : res.info_bits) REQUIRE(b == 0);
}

TEST_CASE("constituent soft-out matches exhaustive enumeration") {
    for (const auto& [fb, ff] : {std::pair<unsigned, unsigned>{013, 015},
                                std::pair<unsigned, unsigned>{07, 05}}) {
        const RscTrellis trellis(fb, ff);
        const std::size_t info = 8;
        const std::size_t total = info + static_cast<std::size_t>(trellis.memory());
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            RandomStream s(seed, 1, 0, StreamRole::calibration);
            std::vector<double> sys(total), par(total);
            for (auto& v : sys) v = 8.0 * s.uniform01() - 4.0;
            for (auto& v : par) v = 8.0 * s.uniform01() - 4.0;
            const auto got = bcjr_decode(trellis, {sys, par, info}, true);
            const auto want = testing::enumerate_constituent_app(sys, par, info, fb, ff);
            for (std::size_t t = 0; t < total; ++t) {
                REQUIRE(std::abs(got.systematic_app[t] - want.systematic_app[t]) < 1e-6);
                REQUIRE(std::abs(got.parity_app[t] - want.parity_app[t]) < 1e-6);
            }
        }
    }
}

TEST_CASE("iterative decisions agree with codebook-wide soft decisions") {
    const auto cfg = small_config(10, 8);
    const testing::TurboEnumerator oracle(cfg);
    const double sigma = 0.6;  // convergence verified with margin on both sides
    std::size_t mismatched_frames = 0;
    for (std::uint64_t trial = 0; trial < 1000; ++trial) {
        RandomStream bitstream(501, trial, 0, StreamRole::payload);
        RandomStream noise(501, trial, kSharedUser, StreamRole::noise);
        std::vector<std::uint8_t> bits(cfg.info_length);
        for (auto& b : bits) b = static_cast<std::uint8_t>(bitstream() & 1u);
        const auto word = turbo_encode(bits, cfg);
        std::vector<double> llr(word.size());
        for (std::size_t c = 0; c < word.size(); ++c) {
            const double x = word[c] ? -1.0 : 1.0;
            const double y = x + sigma * noise.gaussian();
            llr[c] = 2.0 * y / (sigma * sigma);
        }
        if (turbo_decode(llr, cfg).info_bits != oracle.bitwise_map(llr))
            ++mismatched_frames;
    }
    REQUIRE(mismatched_frames == 0);
}

TEST_CASE("more exchanges never hurt at aggregate scale") {
    const auto cfg = small_config(400, 17);
    std::size_t errors_single = 0, errors_full = 0;
    const double sigma = 1.0;
    for (std::uint64_t trial = 0; trial < 60; ++trial) {
        RandomStream bitstream(303, trial, 0, StreamRole::payload);
        RandomStream noise(303, trial, kSharedUser, StreamRole::noise);
        std::vector<std::uint8_t> bits(cfg.info_length);
        for (auto& b : bits) b = static_cast<std::uint8_t>(bitstream() & 1u);
        const auto word = turbo_encode(bits, cfg);
        std::vector<double> llr(word.size());
        for (std::size_t c = 0; c < word.size(); ++c) {
            const double x = word[c] ? -1.0 : 1.0;
            llr[c] = 2.0 * (x + sigma * noise.gaussian()) / (sigma * sigma);
        }
        const auto one = turbo_decode(llr, cfg, 1);
        const auto full = turbo_decode(llr, cfg, 8);
        for (std::size_t k = 0; k < bits.size(); ++k) {
            errors_single += one.info_bits[k] != bits[k];
            errors_full += full.info_bits[k] != bits[k];
        }
    }
    REQUIRE(errors_single > 0);
    REQUIRE(errors_full < errors_single);
}

TEST_CASE("max-log variant still recovers a clean block") {
    auto cfg = CodeConfig::for_rate(0.5, 300, 21);
    cfg.exact_log_map = false;
    const auto bits = random_bits(cfg.info_length, 55);
    const auto res = turbo_decode(bits_to_llrs(turbo_encode(bits, cfg), 6.0), cfg);
    REQUIRE(res.info_bits == bits);
}
