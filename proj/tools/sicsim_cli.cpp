#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sicsim/csv.hpp"
#include "sicsim/experiment.hpp"
#include "sicsim/testing/exhaustive_map.hpp"
#include "sicsim/version.hpp"

namespace {

// exit categories: 0 success, 2 configuration problem, 3 runtime failure
constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void print_progress(std::size_t done, std::size_t total) {
    const std::size_t step = std::max<std::size_t>(1, total / 20);
    if (done % step == 0 || done == total)
        std::fprintf(stderr, "\r%zu/%zu trials", done, total);
    if (done == total) std::fprintf(stderr, "\n");
}

int do_run(const std::string& config_path, const std::string& preset,
           const std::string& output_override, std::uint64_t seed_override, bool seed_given,
           std::uint64_t trials_override, bool trials_given, unsigned threads, bool quiet) {
    sicsim::ExperimentConfig cfg;
    if (!config_path.empty() && !preset.empty()) {
        std::fprintf(stderr, "give either --config or --preset, not both\n");
        return kConfigError;
    }
    try {
        if (!config_path.empty()) {
            cfg = sicsim::parse_config(read_file(config_path));
        } else if (preset == "desk") {
            cfg = sicsim::desk_preset();
        } else if (preset == "large") {
            cfg = sicsim::large_preset();
        } else {
            std::fprintf(stderr, "give --config <file> or --preset desk|large\n");
            return kConfigError;
        }
        if (!output_override.empty()) cfg.output_path = output_override;
        if (seed_given) cfg.base_seed = seed_override;
        if (trials_given) {
            if (trials_override == 0) {
                std::fprintf(stderr, "--trials must be >= 1\n");
                return kConfigError;
            }
            cfg.trials = trials_override;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kConfigError;
    }

    try {
        const auto result = sicsim::run_experiment(
            cfg, threads, nullptr, quiet ? std::function<void(std::size_t, std::size_t)>{}
                                         : print_progress);
        sicsim::emit_results(result.records, cfg, cfg.output_path);
        std::printf("wrote %zu rows to %s (%.1f s)\n", result.records.size(),
                    cfg.output_path.c_str(), result.wall_seconds);
        const int last_stage = cfg.stages - 1;
        for (const auto& r : result.records) {
            if (r.stage != last_stage) continue;
            std::printf("snr %+5.1f dB  user %zu  ber %.3e  (%llu/%llu bits, %llu trials)\n",
                        r.snr_db, r.user, r.ber,
                        static_cast<unsigned long long>(r.bit_errors),
                        static_cast<unsigned long long>(r.bits),
                        static_cast<unsigned long long>(r.trials));
        }
        if (result.failed_trials > 0) {
            std::fprintf(stderr, "%llu trials failed:\n",
                         static_cast<unsigned long long>(result.failed_trials));
            for (const auto& msg : result.failure_samples)
                std::fprintf(stderr, "  %s\n", msg.c_str());
        }
        return kOk;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "run failed: %s\n", e.what());
        return kRuntimeError;
    }
}

int do_calibrate(const std::string& output, std::uint64_t seed, std::uint64_t trials,
                 unsigned threads, double snr_min, double snr_max, double snr_step, bool quiet) {
    if (snr_step <= 0.0 || snr_max < snr_min) {
        std::fprintf(stderr, "need snr-max >= snr-min and snr-step > 0\n");
        return kConfigError;
    }
    if (trials == 0) {
        std::fprintf(stderr, "--trials must be >= 1\n");
        return kConfigError;
    }
    try {
        sicsim::CalibrationSpec spec;
        spec.snr_grid_db.clear();
        for (double s = snr_min; s <= snr_max + 1e-9; s += snr_step)
            spec.snr_grid_db.push_back(s);
        spec.trials = trials;
        spec.base_seed = seed;
        const auto table = sicsim::calibrate_ebar_table(
            spec, threads, quiet ? std::function<void(std::size_t, std::size_t)>{}
                                 : print_progress);
        std::ofstream out(output, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open output file: " + output);
        out << "# estimated-SINR to channel-error-power table\n";
        out << "# conditions: single user, rate " << spec.user.rate << ", block "
            << spec.user.block_length << ", " << spec.user.pilot_count
            << " pilots boosted " << spec.user.pilot_boost_db << " dB, sigma_p2 "
            << spec.sigma_p2 << ", W " << spec.window_half_width << ", "
            << spec.em_iterations << " estimator iterations, " << spec.trials
            << " trials per point, seed " << spec.base_seed << "\n";
        out << "# version = " << sicsim::kVersion << "\n";
        out << table.to_csv();
        if (!out) throw std::runtime_error("write failed: " + output);
        std::printf("wrote %zu table rows to %s\n", table.sinr_db.size(), output.c_str());
        return kOk;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "calibration failed: %s\n", e.what());
        return kRuntimeError;
    }
}

// brute-force cross-checks of the decoder on instances small enough to
// enumerate every codeword
int do_oracle(std::uint64_t seed) {
    using namespace sicsim;
    bool all_ok = true;

    const double sigma_c = 0.8;
    for (const auto& [fb, ff] : {std::pair<unsigned, unsigned>{013, 015},
                                std::pair<unsigned, unsigned>{07, 05}}) {
        const RscTrellis trellis(fb, ff);
        const std::size_t info = 8;
        const std::size_t total = info + trellis.memory();
        double worst = 0.0;
        RandomStream s(seed, 0, fb, StreamRole::calibration);
        for (int frame = 0; frame < 25; ++frame) {
            std::vector<double> sys(total);
            std::vector<double> par(total);
            for (auto& v : sys) v = 2.0 * ((s() & 1u) ? -1.0 : 1.0) / (sigma_c * sigma_c) +
                                    2.0 * s.gaussian() / sigma_c;
            for (auto& v : par) v = 2.0 * ((s() & 1u) ? -1.0 : 1.0) / (sigma_c * sigma_c) +
                                    2.0 * s.gaussian() / sigma_c;
            const auto exact = testing::enumerate_constituent_app(sys, par, info, fb, ff);
            const auto got = bcjr_decode(trellis, BcjrInput{sys, par, info});
            for (std::size_t k = 0; k < total; ++k) {
                worst = std::max(worst, std::abs(exact.systematic_app[k] -
                                                 got.systematic_app[k]));
                worst = std::max(worst, std::abs(exact.parity_app[k] - got.parity_app[k]));
            }
        }
        const bool ok = worst < 1e-6;
        all_ok = all_ok && ok;
        std::printf("constituent (%o,%o) vs enumeration: worst gap %.2e  %s\n", fb, ff, worst,
                    ok ? "ok" : "FAIL");
    }

    {
        const std::size_t info = 10;
        const std::size_t coded = 3 * info + 12;
        const auto cfg = CodeConfig::for_rate(static_cast<double>(info) / coded, coded, 5);
        const testing::TurboEnumerator enumerator(cfg);
        const double sigma = 0.6;
        RandomStream s(seed, 1, 0, StreamRole::calibration);
        std::size_t mismatches = 0;
        const int frames = 200;
        for (int frame = 0; frame < frames; ++frame) {
            std::vector<std::uint8_t> bits(info);
            for (auto& b : bits) b = static_cast<std::uint8_t>(s() & 1u);
            const auto coded_bits = turbo_encode(bits, cfg);
            std::vector<double> llr(coded_bits.size());
            for (std::size_t c = 0; c < llr.size(); ++c) {
                const double x = coded_bits[c] ? -1.0 : 1.0;
                llr[c] = 2.0 * (x + sigma * s.gaussian()) / (sigma * sigma);
            }
            const auto iterative = turbo_decode(llr, cfg);
            const auto exact = enumerator.bitwise_map(llr);
            if (iterative.info_bits != exact) ++mismatches;
        }
        const bool ok = mismatches == 0;
        all_ok = all_ok && ok;
        std::printf("iterative decoder vs bitwise exhaustive decisions: %zu/%d mismatched  %s\n",
                    mismatches, frames, ok ? "ok" : "FAIL");
    }

    std::printf("oracle checks %s\n", all_ok ? "passed" : "FAILED");
    return all_ok ? kOk : kRuntimeError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multiuser uplink interference-cancellation simulator"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "execute a simulation campaign");
    std::string config_path;
    std::string preset;
    std::string output_override;
    std::uint64_t seed_override = 0;
    std::uint64_t trials_override = 0;
    unsigned threads = 0;
    bool quiet = false;
    run->add_option("--config", config_path, "key = value campaign description");
    run->add_option("--preset", preset, "built-in campaign")
        ->check(CLI::IsMember({"desk", "large"}));
    run->add_option("--output", output_override, "override the configured output path");
    auto* seed_opt = run->add_option("--seed", seed_override, "override the base seed");
    auto* trials_opt = run->add_option("--trials", trials_override,
                                       "override the trial count per sweep point");
    run->add_option("--threads", threads, "worker threads (0 = all cores)");
    run->add_flag("--quiet", quiet, "suppress progress output");

    auto* cal = app.add_subcommand("calibrate-ebar",
                                   "regenerate the SINR to channel-error table");
    std::string cal_output = "data/ebar_table.csv";
    std::uint64_t cal_seed = 7;
    std::uint64_t cal_trials = 32;
    unsigned cal_threads = 0;
    double snr_min = -2.0;
    double snr_max = 14.0;
    double snr_step = 1.0;
    bool cal_quiet = false;
    cal->add_option("--output", cal_output, "table file to write");
    cal->add_option("--seed", cal_seed, "base seed for calibration draws");
    cal->add_option("--trials", cal_trials, "trials per SNR point");
    cal->add_option("--threads", cal_threads, "worker threads (0 = all cores)");
    cal->add_option("--snr-min", snr_min, "lowest SNR in dB");
    cal->add_option("--snr-max", snr_max, "highest SNR in dB");
    cal->add_option("--snr-step", snr_step, "grid step in dB");
    cal->add_flag("--quiet", cal_quiet, "suppress progress output");

    auto* oracle = app.add_subcommand("oracle", "run brute-force decoder cross-checks");
    std::uint64_t oracle_seed = 1;
    oracle->add_option("--seed", oracle_seed, "seed for the random instances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    if (run->parsed())
        return do_run(config_path, preset, output_override, seed_override,
                      seed_opt->count() > 0, trials_override, trials_opt->count() > 0, threads,
                      quiet);
    if (cal->parsed())
        return do_calibrate(cal_output, cal_seed, cal_trials, cal_threads, snr_min, snr_max,
                            snr_step, cal_quiet);
    return do_oracle(oracle_seed);
}
