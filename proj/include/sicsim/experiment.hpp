#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sicsim/config.hpp"
#include "sicsim/metrics.hpp"
#include "sicsim/sic.hpp"

namespace sicsim {

namespace detail {

/// Fan a dense job index range over a small thread pool. Results must be
/// written to preallocated slots; completion order is unspecified.
inline void parallel_jobs(std::size_t total, unsigned threads,
                          const std::function<void(std::size_t)>& fn) {
    if (total == 0) return;
    std::size_t n = threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
    n = std::min(n, total);
    if (n <= 1) {
        for (std::size_t i = 0; i < total; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (std::size_t k = 0; k < n; ++k)
        pool.emplace_back([&] {
            for (;;) {
                const auto i = next.fetch_add(1);
                if (i >= total) return;
                fn(i);
            }
        });
    for (auto& t : pool) t.join();
}

}  // namespace detail

/// The transmission system of one user: code, frame geometry, interleaver.
/// Fixed per user index so different seeds and sweep points exercise the
/// same system; only payloads, pilots, channel, and noise are redrawn.
inline UserLink build_user_link(const UserSpec& spec, std::size_t user) {
    UserLink link;
    link.code = CodeConfig::for_rate(spec.rate, spec.block_length, user);
    link.layout = FrameLayout::uniform(spec.block_length, spec.pilot_count, spec.pilot_boost_db);
    link.channel_interleaver = build_interleaver(spec.block_length, user);
    return link;
}

struct TrialCellStats {
    std::uint64_t bit_errors = 0;
    std::uint64_t bits = 0;
    double e_bar = 0.0;
    double alpha_data = 0.0;
    double alpha_pilot = 0.0;
    double beta = 0.0;
    bool frame_error = false;
};

struct TrialOutcome {
    bool failed = false;
    std::string error;
    std::vector<std::vector<TrialCellStats>> cells;  // [stage][user]
};

/// One frame per user at one sweep point. All randomness is keyed by
/// (base_seed, trial, user, role), so the draw is independent of execution
/// order and identical across SNR points for matched trials.
inline TrialOutcome run_single_trial(const ExperimentConfig& cfg,
                                     const std::vector<UserLink>& templates,
                                     const EbarTable* table, double snr_db, std::uint64_t trial) {
    TrialOutcome out;
    try {
        const std::size_t users = cfg.users.size();
        std::vector<UserLink> links = templates;
        std::vector<std::vector<std::uint8_t>> bits(users);
        std::vector<UserFrame> frames(users);
        for (std::size_t u = 0; u < users; ++u) {
            const auto uid = static_cast<std::uint16_t>(u);
            RandomStream ps(cfg.base_seed, trial, uid, StreamRole::pilot);
            links[u].pilots = generate_pilot_symbols(links[u].layout, ps);
            RandomStream bs(cfg.base_seed, trial, uid, StreamRole::payload);
            bits[u].resize(links[u].code.info_length);
            for (auto& b : bits[u]) b = static_cast<std::uint8_t>(bs() & 1u);
            frames[u] = modulate_and_frame(turbo_encode(bits[u], links[u].code),
                                           links[u].channel_interleaver, links[u].layout,
                                           links[u].pilots);
        }
        const auto channel =
            realize_channel(users, links[0].layout.total, snr_db, cfg.power_imbalance_db,
                            cfg.sigma_p2, cfg.base_seed, trial);
        RandomStream ns(cfg.base_seed, trial, kSharedUser, StreamRole::noise);
        const auto y = synthesize_received(frames, channel, ns);

        SicConfig sic;
        sic.stages = cfg.stages;
        sic.scheme = cfg.scheme;
        sic.e_bar_mode = cfg.e_bar_mode;
        sic.alpha_clamp = cfg.alpha_clamp;
        sic.early_exit = cfg.early_exit;
        sic.e_bar_table = table;
        sic.receiver.window_half_width = cfg.window_half_width;
        sic.receiver.em_iterations = cfg.em_iterations;
        sic.receiver.csi_mode = cfg.csi_mode;
        const SicTruth truth{&channel, &frames, &bits};
        const auto res = run_multistage_sic(y, links, channel.amplitudes, sic, &truth);

        out.cells.resize(res.stage_diagnostics.size());
        for (std::size_t s = 0; s < res.stage_diagnostics.size(); ++s) {
            out.cells[s].resize(users);
            for (std::size_t u = 0; u < users; ++u) {
                const auto& d = res.stage_diagnostics[s][u];
                auto& c = out.cells[s][u];
                c.bit_errors = d.bit_errors;
                c.bits = d.info_bits;
                c.e_bar = d.e_bar_used;
                c.alpha_data = d.alpha_data;
                c.alpha_pilot = d.alpha_pilot;
                c.beta = d.beta;
                c.frame_error = d.frame_error;
            }
        }
    } catch (const std::exception& e) {
        out.failed = true;
        out.error = e.what();
        out.cells.clear();
    }
    return out;
}

struct ExperimentResult {
    std::vector<MetricsRecord> records;
    std::uint64_t failed_trials = 0;
    std::vector<std::string> failure_samples;  // first few error messages
    double wall_seconds = 0.0;
};

/// Sweep executor. Jobs (sweep point x trial) are distributed over workers;
/// aggregation always walks trials in index order, so the emitted table is
/// byte-identical for any thread count.
inline ExperimentResult run_experiment(
    const ExperimentConfig& cfg, unsigned threads = 0, const EbarTable* table = nullptr,
    const std::function<void(std::size_t, std::size_t)>& progress = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    EbarTable loaded;
    if (cfg.e_bar_mode == EbarMode::lookup && table == nullptr) {
        loaded = EbarTable::from_csv_file(cfg.e_bar_table_path);
        table = &loaded;
    }
    std::vector<UserLink> templates;
    templates.reserve(cfg.users.size());
    for (std::size_t u = 0; u < cfg.users.size(); ++u)
        templates.push_back(build_user_link(cfg.users[u], u));

    const std::size_t points = cfg.snr_grid_db.size();
    const std::size_t trials = cfg.trials;
    std::vector<std::vector<TrialOutcome>> outcomes(points);
    for (auto& row : outcomes) row.resize(trials);

    std::mutex progress_mutex;
    std::size_t done = 0;
    detail::parallel_jobs(points * trials, threads, [&](std::size_t job) {
        const auto p = job / trials;
        const auto t = job % trials;
        outcomes[p][t] =
            run_single_trial(cfg, templates, table, cfg.snr_grid_db[p], t);
        if (progress) {
            std::lock_guard<std::mutex> lock(progress_mutex);
            progress(++done, points * trials);
        }
    });

    ExperimentResult result;
    const std::size_t users = cfg.users.size();
    for (std::size_t p = 0; p < points; ++p) {
        struct Cell {
            std::uint64_t errors = 0;
            std::uint64_t bits = 0;
            double e_sum = 0.0;
            double ad_sum = 0.0;
            double ap_sum = 0.0;
            double b_sum = 0.0;
            std::uint64_t trials = 0;
        };
        std::vector<std::vector<Cell>> agg(static_cast<std::size_t>(cfg.stages),
                                           std::vector<Cell>(users));
        for (std::size_t t = 0; t < trials; ++t) {
            const auto& o = outcomes[p][t];
            if (o.failed) {
                ++result.failed_trials;
                if (result.failure_samples.size() < 5) result.failure_samples.push_back(o.error);
                continue;
            }
            for (std::size_t s = 0; s < o.cells.size(); ++s) {
                for (std::size_t u = 0; u < users; ++u) {
                    const auto& c = o.cells[s][u];
                    auto& a = agg[s][u];
                    a.errors += c.bit_errors;
                    a.bits += c.bits;
                    const auto w = static_cast<double>(c.bits);
                    a.e_sum += c.e_bar * w;
                    a.ad_sum += c.alpha_data * w;
                    a.ap_sum += c.alpha_pilot * w;
                    a.b_sum += c.beta * w;
                    ++a.trials;
                }
            }
        }
        for (std::size_t s = 0; s < agg.size(); ++s) {
            for (std::size_t u = 0; u < users; ++u) {
                const auto& a = agg[s][u];
                if (a.trials == 0) continue;  // stages skipped by an early exit
                MetricsRecord r;
                r.snr_db = cfg.snr_grid_db[p];
                r.imbalance_db = cfg.power_imbalance_db;
                r.scheme = cfg.scheme;
                r.stage = static_cast<int>(s);
                r.user = u;
                r.bit_errors = a.errors;
                r.bits = a.bits;
                r.ber = a.bits > 0
                            ? static_cast<double>(a.errors) / static_cast<double>(a.bits)
                            : 0.0;
                const auto w = static_cast<double>(a.bits);
                if (w > 0.0) {
                    r.e_bar = a.e_sum / w;
                    r.alpha_data = a.ad_sum / w;
                    r.alpha_pilot = a.ap_sum / w;
                    r.beta = a.b_sum / w;
                }
                r.trials = a.trials;
                result.records.push_back(r);
            }
        }
    }
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

/// Small two-user campaign sized for interactive work: short blocks, few
/// stages, same rate pair and pilot spacing as the full-scale setup.
inline ExperimentConfig desk_preset() {
    ExperimentConfig cfg;
    cfg.users = {{0.72, 1000, 52, 3.0}, {0.53, 1000, 52, 3.0}};
    cfg.snr_grid_db = {4.0, 5.0, 6.0, 7.0, 8.0};
    cfg.power_imbalance_db = 2.0;
    cfg.sigma_p2 = 0.01;
    cfg.window_half_width = 16;
    cfg.em_iterations = 5;
    cfg.stages = 3;
    cfg.trials = 200;
    cfg.base_seed = 1;
    cfg.output_path = "desk_results.csv";
    return cfg;
}

/// Full-scale two-user campaign: 5000-symbol blocks, 256 boosted pilots,
/// seven stages, fifteen estimator iterations.
inline ExperimentConfig large_preset() {
    ExperimentConfig cfg;
    cfg.users = {{0.72, 5000, 256, 3.0}, {0.53, 5000, 256, 3.0}};
    cfg.snr_grid_db = {3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0};
    cfg.power_imbalance_db = 2.0;
    cfg.sigma_p2 = 0.01;
    cfg.window_half_width = 16;
    cfg.em_iterations = 15;
    cfg.stages = 7;
    cfg.trials = 400;
    cfg.base_seed = 1;
    cfg.output_path = "large_results.csv";
    return cfg;
}

/// Conditions for regenerating the SINR-to-channel-error table: single user,
/// no interference, moderate phase noise, the deployable estimator settings.
struct CalibrationSpec {
    std::vector<double> snr_grid_db;
    std::uint64_t trials = 32;
    std::uint64_t base_seed = 7;
    UserSpec user{0.53, 2000, 100, 3.0};
    double sigma_p2 = 0.01;
    int window_half_width = 16;
    int em_iterations = 10;

    CalibrationSpec() {
        for (double s = -2.0; s <= 14.0 + 1e-9; s += 1.0) snr_grid_db.push_back(s);
    }
};

/// Measure (estimated SINR, true channel-error power) pairs across an SNR
/// sweep and tabulate the means. Rows that fail to ascend in SINR are
/// dropped so the result always interpolates cleanly.
inline EbarTable calibrate_ebar_table(const CalibrationSpec& spec, unsigned threads = 0,
                                      const std::function<void(std::size_t, std::size_t)>&
                                          progress = {}) {
    if (spec.snr_grid_db.empty()) throw std::invalid_argument("calibration grid is empty");
    if (spec.trials == 0) throw std::invalid_argument("calibration needs at least one trial");
    const auto link_template = build_user_link(spec.user, 0);
    ReceiverConfig rc;
    rc.window_half_width = spec.window_half_width;
    rc.em_iterations = spec.em_iterations;
    rc.csi_mode = CsiMode::em;

    const std::size_t points = spec.snr_grid_db.size();
    struct Sample {
        double sinr_db = 0.0;
        double e_bar = 0.0;
        bool failed = false;
    };
    std::vector<std::vector<Sample>> samples(points);
    for (auto& row : samples) row.resize(spec.trials);

    std::mutex progress_mutex;
    std::size_t done = 0;
    detail::parallel_jobs(points * spec.trials, threads, [&](std::size_t job) {
        const auto p = job / spec.trials;
        const auto t = job % spec.trials;
        auto& slot = samples[p][t];
        try {
            UserLink link = link_template;
            RandomStream ps(spec.base_seed, t, 0, StreamRole::pilot);
            link.pilots = generate_pilot_symbols(link.layout, ps);
            RandomStream bs(spec.base_seed, t, 0, StreamRole::payload);
            std::vector<std::uint8_t> bits(link.code.info_length);
            for (auto& b : bits) b = static_cast<std::uint8_t>(bs() & 1u);
            const auto frame = modulate_and_frame(turbo_encode(bits, link.code),
                                                  link.channel_interleaver, link.layout,
                                                  link.pilots);
            const auto channel = realize_channel(1, link.layout.total, spec.snr_grid_db[p], 0.0,
                                                 spec.sigma_p2, spec.base_seed, t);
            RandomStream ns(spec.base_seed, t, kSharedUser, StreamRole::noise);
            const auto y = synthesize_received({frame}, channel, ns);
            const auto res = em_decode_user(y, link, rc, &channel.h[0]);
            slot.sinr_db = estimated_sinr_db(res.channel);
            slot.e_bar = res.e_bar_trace.back();
        } catch (const std::exception&) {
            slot.failed = true;
        }
        if (progress) {
            std::lock_guard<std::mutex> lock(progress_mutex);
            progress(++done, points * spec.trials);
        }
    });

    EbarTable table;
    for (std::size_t p = 0; p < points; ++p) {
        double s_sum = 0.0;
        double e_sum = 0.0;
        std::size_t n = 0;
        for (std::size_t t = 0; t < spec.trials; ++t) {
            if (samples[p][t].failed) continue;
            s_sum += samples[p][t].sinr_db;
            e_sum += samples[p][t].e_bar;
            ++n;
        }
        if (n == 0) continue;
        const double s_mean = s_sum / static_cast<double>(n);
        const double e_mean = e_sum / static_cast<double>(n);
        if (!table.sinr_db.empty() && s_mean <= table.sinr_db.back() + 1e-9) continue;
        table.sinr_db.push_back(s_mean);
        table.e_bar.push_back(std::max(e_mean, 0.0));
    }
    table.validate();
    return table;
}

}  // namespace sicsim
