#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sicsim/sic.hpp"

namespace sicsim {

/// Aggregated measurements for one (sweep point, stage, user) cell.
/// ber is always bit_errors/bits; the quality means are weighted by the
/// bit counts that produced them.
struct MetricsRecord {
    double snr_db = 0.0;
    double imbalance_db = 0.0;
    SicScheme scheme = SicScheme::partial;
    int stage = 0;
    std::size_t user = 0;
    double ber = 0.0;
    std::uint64_t bit_errors = 0;
    std::uint64_t bits = 0;
    double e_bar = 0.0;
    double alpha_data = 0.0;
    double alpha_pilot = 0.0;
    double beta = 0.0;
    std::uint64_t trials = 0;
    double wall_seconds = 0.0;  // bookkeeping only, not part of the emitted table

    bool same_cell(const MetricsRecord& o) const {
        return snr_db == o.snr_db && imbalance_db == o.imbalance_db && scheme == o.scheme &&
               stage == o.stage && user == o.user;
    }
};

/// Merge records of one cell: counts add exactly, means recombine weighted
/// by bit counts. Mixing cells is a caller bug.
inline MetricsRecord accumulate_metrics(const std::vector<MetricsRecord>& records) {
    if (records.empty()) throw std::invalid_argument("nothing to accumulate");
    MetricsRecord out = records.front();
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!out.same_cell(r))
            throw std::invalid_argument("cannot accumulate across different sweep cells");
        const double w_old = static_cast<double>(out.bits);
        const double w_new = static_cast<double>(r.bits);
        const double w = w_old + w_new;
        if (w > 0.0) {
            out.e_bar = (out.e_bar * w_old + r.e_bar * w_new) / w;
            out.alpha_data = (out.alpha_data * w_old + r.alpha_data * w_new) / w;
            out.alpha_pilot = (out.alpha_pilot * w_old + r.alpha_pilot * w_new) / w;
            out.beta = (out.beta * w_old + r.beta * w_new) / w;
        }
        out.bit_errors += r.bit_errors;
        out.bits += r.bits;
        out.trials += r.trials;
        out.wall_seconds += r.wall_seconds;
    }
    out.ber = out.bits > 0 ? static_cast<double>(out.bit_errors) / static_cast<double>(out.bits)
                           : 0.0;
    return out;
}

}  // namespace sicsim
