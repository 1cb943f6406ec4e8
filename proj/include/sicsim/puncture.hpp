#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sicsim {

/// Keep-masks over the two parity streams of the rate-1/3 mother code.
/// Systematic bits and tail bits are never punctured.
struct PuncturePattern {
    std::vector<std::uint8_t> keep_parity1;
    std::vector<std::uint8_t> keep_parity2;

    std::size_t kept_parity1() const {
        std::size_t n = 0;
        for (const auto k : keep_parity1) n += k;
        return n;
    }
    std::size_t kept_parity2() const {
        std::size_t n = 0;
        for (const auto k : keep_parity2) n += k;
        return n;
    }
};

/// Keep every parity bit (mother rate 1/3 plus tails).
inline PuncturePattern identity_pattern(std::size_t info_length) {
    return {std::vector<std::uint8_t>(info_length, 1),
            std::vector<std::uint8_t>(info_length, 1)};
}

/// Tile periodic keep-strings ("10" keeps every other bit) over the block.
inline PuncturePattern periodic_pattern(std::size_t info_length,
                                        const std::string& period1,
                                        const std::string& period2) {
    auto tile = [info_length](const std::string& period) {
        if (period.empty()) throw std::invalid_argument("empty puncture period");
        std::vector<std::uint8_t> mask(info_length);
        for (std::size_t i = 0; i < info_length; ++i) {
            const char c = period[i % period.size()];
            if (c != '0' && c != '1')
                throw std::invalid_argument("puncture pattern must be a bit string");
            mask[i] = static_cast<std::uint8_t>(c - '0');
        }
        return mask;
    };
    return {tile(period1), tile(period2)};
}

/// Mask keeping exactly `kept` evenly spaced positions out of `length`.
inline std::vector<std::uint8_t> spread_mask(std::size_t length, std::size_t kept) {
    std::vector<std::uint8_t> mask(length, 0);
    for (std::size_t j = 0; j < kept; ++j) mask[j * length / kept] = 1;
    return mask;
}

/// Pattern hitting an exact coded length: keeps coded_length - info_length -
/// tail_bits parity bits, split evenly between the two streams and spread
/// evenly within each. Exactness matters because all users of a frame must
/// produce equal symbol counts.
inline PuncturePattern exact_rate_pattern(std::size_t info_length,
                                          std::size_t coded_length,
                                          std::size_t tail_bits) {
    if (coded_length < info_length + tail_bits)
        throw std::invalid_argument("coded length too small for systematic bits plus tails");
    const std::size_t kept = coded_length - info_length - tail_bits;
    if (kept > 2 * info_length)
        throw std::invalid_argument("coded length exceeds the rate-1/3 mother code");
    const std::size_t k1 = (kept + 1) / 2;
    const std::size_t k2 = kept / 2;
    return {spread_mask(info_length, k1), spread_mask(info_length, k2)};
}

/// Drop masked-out positions.
template <typename T>
std::vector<T> rate_match(const std::vector<T>& stream,
                          const std::vector<std::uint8_t>& keep_mask) {
    if (stream.size() != keep_mask.size())
        throw std::invalid_argument("stream/mask length mismatch");
    std::vector<T> out;
    out.reserve(stream.size());
    for (std::size_t i = 0; i < stream.size(); ++i)
        if (keep_mask[i]) out.push_back(stream[i]);
    return out;
}

/// Inverse of rate_match: restores kept values, neutral fill elsewhere.
template <typename T>
std::vector<T> depuncture(const std::vector<T>& kept,
                          const std::vector<std::uint8_t>& keep_mask,
                          T fill = T{}) {
    std::vector<T> out(keep_mask.size(), fill);
    std::size_t j = 0;
    for (std::size_t i = 0; i < keep_mask.size(); ++i) {
        if (keep_mask[i]) {
            if (j >= kept.size()) throw std::invalid_argument("kept stream too short");
            out[i] = kept[j++];
        }
    }
    if (j != kept.size()) throw std::invalid_argument("kept stream too long");
    return out;
}

}  // namespace sicsim
