#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sicsim/rng.hpp"

namespace sicsim {

using Permutation = std::vector<std::size_t>;

/// Seeded pseudo-random permutation (Fisher-Yates over a keyed stream).
/// Same (length, seed, role) always yields the same permutation, so two
/// transmitters configured with one seed share one channel interleaver.
inline Permutation build_interleaver(std::size_t length, std::uint64_t seed,
                                     StreamRole role = StreamRole::channel_interleaver) {
    if (length < 1) throw std::invalid_argument("interleaver length must be >= 1");
    Permutation perm(length);
    for (std::size_t i = 0; i < length; ++i) perm[i] = i;
    RandomStream stream(seed, 0, 0, role);
    for (std::size_t i = length - 1; i > 0; --i) {
        const std::size_t j = stream.uniform_below(i + 1);
        std::swap(perm[i], perm[j]);
    }
    return perm;
}

/// out[i] = in[perm[i]]
template <typename T>
std::vector<T> permute(const std::vector<T>& in, const Permutation& perm) {
    std::vector<T> out(in.size());
    for (std::size_t i = 0; i < perm.size(); ++i) out[i] = in[perm[i]];
    return out;
}

/// out[perm[i]] = in[i]
template <typename T>
std::vector<T> unpermute(const std::vector<T>& in, const Permutation& perm) {
    std::vector<T> out(in.size());
    for (std::size_t i = 0; i < perm.size(); ++i) out[perm[i]] = in[i];
    return out;
}

inline bool is_permutation_of_indices(const Permutation& perm) {
    std::vector<std::uint8_t> seen(perm.size(), 0);
    for (const std::size_t p : perm) {
        if (p >= perm.size() || seen[p]) return false;
        seen[p] = 1;
    }
    return true;
}

}  // namespace sicsim
