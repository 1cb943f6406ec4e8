#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace sicsim {

/// Trellis of a recursive systematic convolutional code given as an octal
/// (feedback, feedforward) generator pair, MSB = coefficient of D^0.
/// State bit j-1 holds the register value from j steps ago; the tail tables
/// describe the termination steps that drive the register to zero.
class RscTrellis {
public:
    RscTrellis(std::uint32_t feedback_octal, std::uint32_t feedforward_octal)
        : feedback_(feedback_octal), feedforward_(feedforward_octal) {
        if (feedback_octal == 0 || feedforward_octal == 0)
            throw std::invalid_argument("generator polynomials must be nonzero");
        memory_ = std::bit_width(feedback_octal) - 1;
        if (memory_ < 1 || memory_ > 16)
            throw std::invalid_argument("unsupported constraint length");
        if (static_cast<int>(std::bit_width(feedforward_octal)) > memory_ + 1)
            throw std::invalid_argument("feedforward degree exceeds feedback degree");
        num_states_ = 1u << memory_;

        std::uint32_t fb_mask = 0;
        std::uint32_t ff_mask = 0;
        for (int j = 1; j <= memory_; ++j) {
            if ((feedback_octal >> (memory_ - j)) & 1u) fb_mask |= 1u << (j - 1);
            if ((feedforward_octal >> (memory_ - j)) & 1u) ff_mask |= 1u << (j - 1);
        }
        const std::uint32_t ff_w = (feedforward_octal >> memory_) & 1u;

        next_state_.resize(num_states_ * 2);
        parity_.resize(num_states_ * 2);
        tail_input_.resize(num_states_);
        tail_parity_.resize(num_states_);
        tail_next_.resize(num_states_);
        for (std::uint32_t s = 0; s < num_states_; ++s) {
            const std::uint32_t fb = std::popcount(s & fb_mask) & 1u;
            for (std::uint32_t u = 0; u <= 1; ++u) {
                const std::uint32_t w = u ^ fb;
                parity_[s * 2 + u] = static_cast<std::uint8_t>(
                    ((ff_w & w) ^ std::popcount(s & ff_mask)) & 1u);
                next_state_[s * 2 + u] =
                    static_cast<std::uint8_t>(((s << 1) | w) & (num_states_ - 1));
            }
            tail_input_[s] = static_cast<std::uint8_t>(fb);
            tail_parity_[s] = static_cast<std::uint8_t>(std::popcount(s & ff_mask) & 1u);
            tail_next_[s] = static_cast<std::uint8_t>((s << 1) & (num_states_ - 1));
        }
    }

    int memory() const { return memory_; }
    std::uint32_t num_states() const { return num_states_; }
    std::uint32_t feedback_octal() const { return feedback_; }
    std::uint32_t feedforward_octal() const { return feedforward_; }

    std::uint8_t next_state(std::uint32_t state, std::uint32_t input) const {
        return next_state_[state * 2 + input];
    }
    std::uint8_t parity(std::uint32_t state, std::uint32_t input) const {
        return parity_[state * 2 + input];
    }
    std::uint8_t tail_input(std::uint32_t state) const { return tail_input_[state]; }
    std::uint8_t tail_parity(std::uint32_t state) const { return tail_parity_[state]; }
    std::uint8_t tail_next(std::uint32_t state) const { return tail_next_[state]; }

    /// Encode one block. Appends `memory()` termination steps; the forced
    /// tail inputs and parities are returned separately from the in-block
    /// parity sequence.
    struct EncodeResult {
        std::vector<std::uint8_t> parity;
        std::vector<std::uint8_t> tail_systematic;
        std::vector<std::uint8_t> tail_parity;
    };
    EncodeResult encode(const std::vector<std::uint8_t>& bits) const {
        EncodeResult out;
        out.parity.resize(bits.size());
        out.tail_systematic.resize(static_cast<std::size_t>(memory_));
        out.tail_parity.resize(static_cast<std::size_t>(memory_));
        std::uint32_t state = 0;
        for (std::size_t k = 0; k < bits.size(); ++k) {
            const std::uint32_t u = bits[k] & 1u;
            out.parity[k] = parity(state, u);
            state = next_state(state, u);
        }
        for (int j = 0; j < memory_; ++j) {
            out.tail_systematic[static_cast<std::size_t>(j)] = tail_input_[state];
            out.tail_parity[static_cast<std::size_t>(j)] = tail_parity_[state];
            state = tail_next_[state];
        }
        return out;
    }

private:
    std::uint32_t feedback_;
    std::uint32_t feedforward_;
    int memory_;
    std::uint32_t num_states_;
    std::vector<std::uint8_t> next_state_;
    std::vector<std::uint8_t> parity_;
    std::vector<std::uint8_t> tail_input_;
    std::vector<std::uint8_t> tail_parity_;
    std::vector<std::uint8_t> tail_next_;
};

}  // namespace sicsim
