#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sicsim/channel.hpp"
#include "sicsim/em.hpp"
#include "sicsim/framing.hpp"
#include "sicsim/modulation.hpp"

namespace sicsim {

enum class SicScheme { full, partial };
enum class EbarMode { genie, lookup };
enum class AlphaMode { data, pilot };

/// Piecewise-linear map from estimated post-cancellation SINR (dB) to the
/// expected normalized channel-error power. Rows sorted by SINR ascending.
/// Queries outside the tabulated range clamp to the nearest row and flag it.
struct EbarTable {
    std::vector<double> sinr_db;
    std::vector<double> e_bar;

    struct Lookup {
        double value = 0.0;
        bool clamped = false;
    };

    void validate() const {
        if (sinr_db.empty() || sinr_db.size() != e_bar.size())
            throw std::invalid_argument("SINR table needs matching, non-empty columns");
        for (std::size_t i = 1; i < sinr_db.size(); ++i)
            if (!(sinr_db[i] > sinr_db[i - 1]))
                throw std::invalid_argument("SINR table rows must be strictly ascending");
        for (const double e : e_bar)
            if (!(e >= 0.0)) throw std::invalid_argument("SINR table error power must be >= 0");
    }

    Lookup lookup(double query_db) const {
        if (sinr_db.empty()) throw std::logic_error("lookup on empty SINR table");
        if (query_db <= sinr_db.front()) return {e_bar.front(), query_db < sinr_db.front()};
        if (query_db >= sinr_db.back()) return {e_bar.back(), query_db > sinr_db.back()};
        std::size_t hi = 1;
        while (sinr_db[hi] < query_db) ++hi;
        if (sinr_db[hi] == query_db) return {e_bar[hi], false};
        const double frac = (query_db - sinr_db[hi - 1]) / (sinr_db[hi] - sinr_db[hi - 1]);
        return {e_bar[hi - 1] + frac * (e_bar[hi] - e_bar[hi - 1]), false};
    }

    std::string to_csv() const {
        std::ostringstream out;
        out.precision(17);
        out << "sinr_db,e_bar\n";
        for (std::size_t i = 0; i < sinr_db.size(); ++i)
            out << sinr_db[i] << ',' << e_bar[i] << '\n';
        return out.str();
    }

    static EbarTable from_csv_text(const std::string& text) {
        EbarTable table;
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line.front() == '#') continue;
            const auto comma = line.find(',');
            if (comma == std::string::npos)
                throw std::invalid_argument("SINR table line " + std::to_string(lineno) +
                                            " is not a two-column row");
            char* end = nullptr;
            const double s = std::strtod(line.c_str(), &end);
            if (end == line.c_str()) continue;  // header row
            const char* second = line.c_str() + comma + 1;
            const double e = std::strtod(second, &end);
            if (end == second)
                throw std::invalid_argument("SINR table line " + std::to_string(lineno) +
                                            " has a malformed error column");
            table.sinr_db.push_back(s);
            table.e_bar.push_back(e);
        }
        table.validate();
        return table;
    }

    static EbarTable from_csv_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open SINR table: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return from_csv_text(buf.str());
    }
};

/// Payload-position averages of the decoder's soft symbols. The correlation
/// column substitutes hard decisions for the unknown transmitted symbols.
struct SoftStatistics {
    double correlation = 0.0;
    double second_moment = 0.0;
    std::size_t count = 0;
};

inline SoftStatistics data_soft_statistics(const SoftSymbols& soft, const FrameLayout& layout) {
    SoftStatistics st;
    double corr = 0.0;
    double sm = 0.0;
    for (const auto t : layout.data_positions) {
        corr += std::real(std::conj(hard_decision(soft.x_hat[t])) * soft.x_hat[t]);
        sm += std::norm(soft.x_hat[t]);
    }
    st.count = layout.data_positions.size();
    if (st.count > 0) {
        corr /= static_cast<double>(st.count);
        sm /= static_cast<double>(st.count);
        st.correlation = corr;
        st.second_moment = sm;
    }
    return st;
}

/// Cancellation weight for one user state. Data mode balances decision
/// confidence against channel-estimate quality; pilot mode depends on the
/// channel error alone because pilot symbols are known. Zero confidence
/// cancels nothing.
inline double compute_alpha(const SoftSymbols& soft, const FrameLayout& layout, double e_bar,
                            AlphaMode mode, bool clamp = true) {
    if (!(e_bar >= 0.0)) throw std::invalid_argument("channel error power must be >= 0");
    if (mode == AlphaMode::pilot) {
        const double a = 1.0 / (1.0 + e_bar);
        return clamp ? std::clamp(a, 0.0, 1.0) : a;
    }
    const auto st = data_soft_statistics(soft, layout);
    if (st.count == 0 || st.second_moment <= 0.0) return 0.0;
    const double a = st.correlation / (st.second_moment * (1.0 + e_bar));
    return clamp ? std::clamp(a, 0.0, 1.0) : a;
}

inline double estimated_sinr_db(const ChannelEstimate& est) {
    if (est.h_hat.empty()) throw std::invalid_argument("empty channel estimate");
    double p = 0.0;
    for (const auto& h : est.h_hat) p += std::norm(h);
    p /= static_cast<double>(est.h_hat.size());
    const double denom = std::max(2.0 * est.sigma_hat_n2, 1e-30);
    return 10.0 * std::log10(std::max(p, 1e-30) / denom);
}

struct EbarEstimate {
    double value = 0.0;
    bool clamped = false;
};

inline EbarEstimate genie_e_bar(const std::vector<std::complex<double>>& truth,
                                const std::vector<std::complex<double>>& estimate) {
    if (truth.size() != estimate.size() || truth.empty())
        throw std::invalid_argument("channel truth and estimate must have equal nonzero length");
    return {detail::normalized_channel_mse(truth, estimate), false};
}

inline EbarEstimate lookup_e_bar(const EbarTable& table, const ChannelEstimate& est) {
    const auto l = table.lookup(estimated_sinr_db(est));
    return {l.value, l.clamped};
}

/// One user's contribution to interference cancellation, as most recently
/// refreshed. The weight applied at each position follows that user's own
/// pilot mask.
struct UserCancellationState {
    bool valid = false;
    double alpha_data = 0.0;
    double alpha_pilot = 0.0;
    std::vector<std::complex<double>> h_hat;
    std::vector<std::complex<double>> x_hat;
    const std::vector<std::uint8_t>* pilot_mask = nullptr;
};

/// Received sequence minus every other user's weighted reconstruction.
/// Users without a state yet contribute nothing, which makes the first
/// user of the first stage operate on the raw input.
inline std::vector<std::complex<double>> compute_residual(
    const std::vector<std::complex<double>>& y, const std::vector<UserCancellationState>& states,
    std::size_t target_user) {
    if (target_user >= states.size())
        throw std::invalid_argument("target user outside the state set");
    auto residual = y;
    for (std::size_t u = 0; u < states.size(); ++u) {
        if (u == target_user || !states[u].valid) continue;
        const auto& st = states[u];
        if (st.h_hat.size() != y.size() || st.x_hat.size() != y.size() ||
            st.pilot_mask == nullptr || st.pilot_mask->size() != y.size())
            throw std::invalid_argument("cancellation state shape mismatch");
        for (std::size_t t = 0; t < y.size(); ++t) {
            const double a = (*st.pilot_mask)[t] ? st.alpha_pilot : st.alpha_data;
            residual[t] -= a * st.h_hat[t] * st.x_hat[t];
        }
    }
    return residual;
}

struct StageState {
    double alpha_data = 0.0;
    double alpha_pilot = 0.0;
    std::vector<std::complex<double>> h_hat;
    SoftSymbols soft;
};

/// Genie-side quality figures for one user state. Power ratios cover the
/// whole frame with the position-appropriate weight; the moment columns
/// cover payload positions and correlate against the true symbols.
struct CancellationDiagnostics {
    double beta_empirical = 0.0;
    double e_bar = 0.0;
    double i_full = 0.0;
    double i_partial = 0.0;
    double gamma_bar = 1.0;
    double correlation_term = 0.0;
    double second_moment_mean = 0.0;
};

inline CancellationDiagnostics cancellation_diagnostics(
    const std::vector<std::complex<double>>& h, const std::vector<std::complex<double>>& x,
    const StageState& state, const FrameLayout& layout) {
    const auto n = h.size();
    if (n == 0 || x.size() != n || state.h_hat.size() != n || state.soft.x_hat.size() != n ||
        layout.total != n)
        throw std::invalid_argument("diagnostic inputs must share the frame length");
    CancellationDiagnostics d;
    double full_acc = 0.0;
    double part_acc = 0.0;
    double err_acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const auto ref = h[t] * x[t];
        const double ref_power = std::norm(ref);
        const auto rebuilt = state.h_hat[t] * state.soft.x_hat[t];
        const double a = layout.pilot_mask[t] ? state.alpha_pilot : state.alpha_data;
        full_acc += std::norm(ref - rebuilt) / ref_power;
        part_acc += std::norm(ref - a * rebuilt) / ref_power;
        err_acc += std::norm(h[t] - state.h_hat[t]) / std::norm(h[t]);
    }
    d.i_full = full_acc / static_cast<double>(n);
    d.i_partial = part_acc / static_cast<double>(n);
    d.beta_empirical = 1.0 - d.i_partial;
    d.e_bar = err_acc / static_cast<double>(n);
    d.gamma_bar = d.i_full > 1e-15 ? d.i_partial / d.i_full : 1.0;
    double corr = 0.0;
    double sm = 0.0;
    for (const auto t : layout.data_positions) {
        corr += std::real(x[t] * std::conj(state.soft.x_hat[t]));
        sm += std::norm(state.soft.x_hat[t]);
    }
    if (!layout.data_positions.empty()) {
        d.correlation_term = corr / static_cast<double>(layout.data_positions.size());
        d.second_moment_mean = sm / static_cast<double>(layout.data_positions.size());
    }
    return d;
}

struct SicConfig {
    int stages = 7;
    SicScheme scheme = SicScheme::partial;
    EbarMode e_bar_mode = EbarMode::genie;
    bool alpha_clamp = true;
    bool early_exit = false;
    // diagnostic hook: fixes the channel-error power fed to the weight
    // computation, bypassing both estimation modes
    std::optional<double> e_bar_override;
    const EbarTable* e_bar_table = nullptr;
    ReceiverConfig receiver;
};

struct UserStageDiagnostics {
    std::size_t user = 0;
    int stage = 0;
    double alpha_data = 0.0;
    double alpha_pilot = 0.0;
    double e_bar_used = 0.0;
    bool e_bar_clamped = false;
    double e_bar_genie = std::numeric_limits<double>::quiet_NaN();
    double estimated_sinr = std::numeric_limits<double>::quiet_NaN();
    double sigma_hat_n2 = 0.0;
    double correlation = 0.0;
    double second_moment = 0.0;
    double beta = std::numeric_limits<double>::quiet_NaN();
    std::size_t degenerate_windows = 0;
    std::size_t bit_errors = 0;
    std::size_t info_bits = 0;
    bool frame_error = false;
};

/// Simulation-side ground truth. Channel truth enables genie error power and
/// the perfect-CSI mode; frames enable cancellation quality; bits enable
/// per-stage error counting.
struct SicTruth {
    const ChannelRealization* channel = nullptr;
    const std::vector<UserFrame>* frames = nullptr;
    const std::vector<std::vector<std::uint8_t>>* info_bits = nullptr;
};

struct SicResult {
    std::vector<std::vector<std::uint8_t>> decoded;
    // indexed [stage][user], users in their original numbering
    std::vector<std::vector<UserStageDiagnostics>> stage_diagnostics;
    std::vector<std::size_t> decoding_order;
    int stages_run = 0;
    bool early_exited = false;
};

namespace detail {
inline bool llrs_saturated(const std::vector<double>& app, double clamp) {
    for (const double v : app)
        if (std::abs(v) < clamp - 1e-9) return false;
    return !app.empty();
}
}  // namespace detail

/// Stage loop. Within a stage users are visited in descending configured
/// power (ties by index); each visit re-decodes that user on the residual
/// built from every other user's latest state, then refreshes the state and
/// its weights. Full scheme pins both weights to one.
inline SicResult run_multistage_sic(const std::vector<std::complex<double>>& y,
                                    const std::vector<UserLink>& links,
                                    const std::vector<double>& powers, const SicConfig& cfg,
                                    const SicTruth* truth = nullptr) {
    const std::size_t users = links.size();
    if (users == 0) throw std::invalid_argument("at least one user required");
    if (powers.size() != users) throw std::invalid_argument("one power entry per user required");
    if (cfg.stages < 1) throw std::invalid_argument("stage count must be >= 1");
    for (const auto& link : links)
        if (link.layout.total != y.size())
            throw std::invalid_argument("frame layouts must match the received length");
    const bool have_channel_truth = truth != nullptr && truth->channel != nullptr;
    if (cfg.scheme == SicScheme::partial && !cfg.e_bar_override) {
        if (cfg.e_bar_mode == EbarMode::genie && !have_channel_truth)
            throw std::invalid_argument("genie error power needs the true channel");
        if (cfg.e_bar_mode == EbarMode::lookup && cfg.e_bar_table == nullptr)
            throw std::invalid_argument("lookup error power needs a calibration table");
    }
    if (cfg.receiver.csi_mode == CsiMode::perfect && !have_channel_truth)
        throw std::invalid_argument("perfect CSI needs the true channel");
    if (have_channel_truth && truth->channel->h.size() != users)
        throw std::invalid_argument("channel truth user count mismatch");
    if (truth != nullptr && truth->frames != nullptr && truth->frames->size() != users)
        throw std::invalid_argument("frame truth user count mismatch");
    if (truth != nullptr && truth->info_bits != nullptr && truth->info_bits->size() != users)
        throw std::invalid_argument("bit truth user count mismatch");

    std::vector<std::size_t> order(users);
    for (std::size_t u = 0; u < users; ++u) order[u] = u;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return powers[a] > powers[b]; });

    SicResult res;
    res.decoding_order = order;
    std::vector<UserCancellationState> states(users);
    std::vector<TurboDecodeResult> last(users);
    for (int s = 0; s < cfg.stages; ++s) {
        res.stage_diagnostics.emplace_back(users);
        for (const auto u : order) {
            const auto& link = links[u];
            const auto residual = compute_residual(y, states, u);
            const std::vector<std::complex<double>>* true_h =
                have_channel_truth ? &truth->channel->h[u] : nullptr;
            auto dec = em_decode_user(residual, link, cfg.receiver, true_h);

            double e_used = 0.0;
            bool e_clamped = false;
            if (cfg.e_bar_override) {
                e_used = *cfg.e_bar_override;
            } else if (cfg.e_bar_mode == EbarMode::genie) {
                if (have_channel_truth)
                    e_used = genie_e_bar(truth->channel->h[u], dec.channel.h_hat).value;
            } else if (cfg.e_bar_table != nullptr) {
                const auto l = lookup_e_bar(*cfg.e_bar_table, dec.channel);
                e_used = l.value;
                e_clamped = l.clamped;
            }

            double a_d = 1.0;
            double a_p = 1.0;
            if (cfg.scheme == SicScheme::partial) {
                a_d = compute_alpha(dec.soft, link.layout, e_used, AlphaMode::data,
                                    cfg.alpha_clamp);
                a_p = compute_alpha(dec.soft, link.layout, e_used, AlphaMode::pilot,
                                    cfg.alpha_clamp);
            }

            auto& d = res.stage_diagnostics[static_cast<std::size_t>(s)][u];
            d.user = u;
            d.stage = s;
            d.alpha_data = a_d;
            d.alpha_pilot = a_p;
            d.e_bar_used = e_used;
            d.e_bar_clamped = e_clamped;
            d.estimated_sinr = estimated_sinr_db(dec.channel);
            d.sigma_hat_n2 = dec.channel.sigma_hat_n2;
            d.degenerate_windows = dec.channel.degenerate_windows;
            const auto stats = data_soft_statistics(dec.soft, link.layout);
            d.correlation = stats.correlation;
            d.second_moment = stats.second_moment;
            if (true_h != nullptr)
                d.e_bar_genie = detail::normalized_channel_mse(*true_h, dec.channel.h_hat);
            if (have_channel_truth && truth->frames != nullptr) {
                StageState ss;
                ss.alpha_data = a_d;
                ss.alpha_pilot = a_p;
                ss.h_hat = dec.channel.h_hat;
                ss.soft = dec.soft;
                d.beta = cancellation_diagnostics(truth->channel->h[u], (*truth->frames)[u].symbols,
                                                  ss, link.layout)
                             .beta_empirical;
            }
            if (truth != nullptr && truth->info_bits != nullptr) {
                const auto& want = (*truth->info_bits)[u];
                const auto& got = dec.decode.info_bits;
                d.info_bits = want.size();
                for (std::size_t k = 0; k < want.size() && k < got.size(); ++k)
                    d.bit_errors += want[k] != got[k];
                d.frame_error = d.bit_errors > 0;
            }

            auto& st = states[u];
            st.valid = true;
            st.alpha_data = a_d;
            st.alpha_pilot = a_p;
            st.h_hat = std::move(dec.channel.h_hat);
            st.x_hat = std::move(dec.soft.x_hat);
            st.pilot_mask = &link.layout.pilot_mask;
            last[u] = std::move(dec.decode);
        }
        res.stages_run = s + 1;
        if (cfg.early_exit) {
            bool all = true;
            for (std::size_t u = 0; u < users; ++u)
                all = all && detail::llrs_saturated(last[u].info_app, links[u].code.llr_clamp);
            if (all) {
                res.early_exited = true;
                break;
            }
        }
    }
    res.decoded.resize(users);
    for (std::size_t u = 0; u < users; ++u) res.decoded[u] = std::move(last[u].info_bits);
    return res;
}

}  // namespace sicsim
