#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <string>
#include <vector>

#include "sicsim/csv.hpp"
#include "sicsim/experiment.hpp"

using namespace sicsim;

namespace {

const std::string kMinimalConfig =
    "snr_grid_db = 5\n"
    "[user]\n"
    "rate = 0.5\n"
    "block_length = 200\n"
    "pilot_count = 10\n"
    "pilot_boost_db = 3\n";

bool mentions(const ConfigError& e, const std::string& needle) {
    return std::any_of(e.problems.begin(), e.problems.end(), [&](const std::string& p) {
        return p.find(needle) != std::string::npos;
    });
}

MetricsRecord sample_record(std::uint64_t errors, std::uint64_t bits) {
    MetricsRecord r;
    r.snr_db = 4.0;
    r.imbalance_db = 2.0;
    r.scheme = SicScheme::partial;
    r.stage = 1;
    r.user = 0;
    r.bit_errors = errors;
    r.bits = bits;
    r.ber = bits > 0 ? static_cast<double>(errors) / static_cast<double>(bits) : 0.0;
    r.e_bar = 0.05;
    r.alpha_data = 0.9;
    r.alpha_pilot = 0.95;
    r.beta = 0.85;
    r.trials = 1;
    return r;
}

}  // namespace

TEST_CASE("a minimal config fills the documented defaults") {
    const auto cfg = parse_config(kMinimalConfig);
    REQUIRE(cfg.users.size() == 1);
    REQUIRE(cfg.users[0].rate == 0.5);
    REQUIRE(cfg.users[0].block_length == 200);
    REQUIRE(cfg.stages == 7);
    REQUIRE(cfg.em_iterations == 15);
    REQUIRE(cfg.window_half_width == 16);
    REQUIRE(cfg.scheme == SicScheme::partial);
    REQUIRE(cfg.csi_mode == CsiMode::em);
    REQUIRE(cfg.e_bar_mode == EbarMode::genie);
    REQUIRE(cfg.alpha_clamp);
    REQUIRE_FALSE(cfg.early_exit);
    REQUIRE(cfg.sigma_p2 == 0.01);
    REQUIRE(cfg.snr_grid_db == std::vector<double>{5.0});
}

TEST_CASE("every violation is collected and named") {
    const std::string bad =
        "snr_grid_db = 5\n"
        "trials = 0\n"
        "nonsense = 1\n"
        "stages = 7\n"
        "stages = 3\n"
        "[user]\n"
        "rate = 1.5\n"
        "block_length = 200\n"
        "pilot_count = 10\n"
        "pilot_boost_db = 3\n";
    try {
        parse_config(bad);
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        REQUIRE(e.problems.size() == 4);
        REQUIRE(mentions(e, "trials"));
        REQUIRE(mentions(e, "nonsense"));
        REQUIRE(mentions(e, "duplicate key 'stages'"));
        REQUIRE(mentions(e, "rate"));
    }
}

TEST_CASE("structural mistakes are rejected with locations") {
    REQUIRE_THROWS_AS(parse_config("rate = 0.5\n"), ConfigError);
    try {
        parse_config("snr_grid_db = 5\nrate = 0.5\n[user]\nrate = 0.5\nblock_length = 200\n"
                     "pilot_count = 10\npilot_boost_db = 3\ntrials = 7\n");
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        REQUIRE(mentions(e, "belongs inside a [user] section"));
        REQUIRE(mentions(e, "not valid inside [user]"));
    }
    try {
        parse_config("snr_grid_db = 5\n[observer]\n" + kMinimalConfig.substr(kMinimalConfig.find("[user]")));
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        REQUIRE(mentions(e, "unknown section [observer]"));
    }
}

TEST_CASE("phase noise accepts exactly one parameterization") {
    auto with_line = [](const std::string& extra) {
        return "snr_grid_db = 5\n" + extra +
               "[user]\nrate = 0.5\nblock_length = 200\npilot_count = 10\npilot_boost_db = 3\n";
    };
    const auto from_baud = parse_config(with_line("baud_rate = 10000\n"));
    REQUIRE(from_baud.sigma_p2 == Catch::Approx(0.01));
    REQUIRE(from_baud.baud_rate.has_value());
    REQUIRE_THROWS_AS(parse_config(with_line("baud_rate = 10000\nsigma_p2 = 0.02\n")),
                      ConfigError);
    REQUIRE_THROWS_AS(parse_config(with_line("baud_rate = -1\n")), ConfigError);
}

TEST_CASE("unencodable rate and mismatched frame lengths are named") {
    try {
        parse_config(
            "snr_grid_db = 5\n[user]\nrate = 0.99\nblock_length = 20\npilot_count = 2\n"
            "pilot_boost_db = 0\n[user]\nrate = 0.5\nblock_length = 100\npilot_count = 4\n"
            "pilot_boost_db = 0\n");
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        REQUIRE(mentions(e, "not encodable"));
        REQUIRE(mentions(e, "must match user 0"));
    }
}

TEST_CASE("the canonical echo reparses to the same config") {
    auto cfg = desk_preset();
    cfg.e_bar_mode = EbarMode::lookup;
    cfg.e_bar_table_path = "data/ebar_table.csv";
    cfg.snr_grid_db = {4.25, 5.0, 6.125};
    cfg.trials = 17;
    const auto again = parse_config(echo_config(cfg));
    REQUIRE(again.snr_grid_db == cfg.snr_grid_db);
    REQUIRE(again.power_imbalance_db == cfg.power_imbalance_db);
    REQUIRE(again.sigma_p2 == cfg.sigma_p2);
    REQUIRE(again.window_half_width == cfg.window_half_width);
    REQUIRE(again.em_iterations == cfg.em_iterations);
    REQUIRE(again.stages == cfg.stages);
    REQUIRE(again.scheme == cfg.scheme);
    REQUIRE(again.csi_mode == cfg.csi_mode);
    REQUIRE(again.e_bar_mode == cfg.e_bar_mode);
    REQUIRE(again.e_bar_table_path == cfg.e_bar_table_path);
    REQUIRE(again.trials == cfg.trials);
    REQUIRE(again.base_seed == cfg.base_seed);
    REQUIRE(again.output_path == cfg.output_path);
    REQUIRE(again.users.size() == cfg.users.size());
    for (std::size_t u = 0; u < cfg.users.size(); ++u) {
        REQUIRE(again.users[u].rate == cfg.users[u].rate);
        REQUIRE(again.users[u].block_length == cfg.users[u].block_length);
        REQUIRE(again.users[u].pilot_count == cfg.users[u].pilot_count);
        REQUIRE(again.users[u].pilot_boost_db == cfg.users[u].pilot_boost_db);
    }
}

TEST_CASE("metric accumulation is exact and order-insensitive") {
    const auto one = sample_record(1, 1000);
    const auto single = accumulate_metrics({one});
    REQUIRE(single.ber == one.ber);
    REQUIRE(single.bits == one.bits);

    auto three = sample_record(3, 1000);
    three.e_bar = 0.15;
    const auto ab = accumulate_metrics({one, three});
    REQUIRE(ab.ber == 2e-3);
    REQUIRE(ab.bit_errors == 4);
    REQUIRE(ab.bits == 2000);
    REQUIRE(ab.e_bar == Catch::Approx(0.1));
    REQUIRE(ab.trials == 2);
    const auto ba = accumulate_metrics({three, one});
    REQUIRE(ab.ber == ba.ber);
    REQUIRE(ab.e_bar == ba.e_bar);
    REQUIRE(ab.alpha_data == ba.alpha_data);

    auto other = sample_record(1, 1000);
    other.stage = 0;
    REQUIRE_THROWS_AS(accumulate_metrics({one, other}), std::invalid_argument);
    REQUIRE_THROWS_AS(accumulate_metrics({}), std::invalid_argument);
}

TEST_CASE("result tables round trip through the emitter") {
    const auto cfg = desk_preset();
    std::vector<MetricsRecord> records{sample_record(1, 1000), sample_record(3, 1000)};
    records[1].stage = 2;
    records[1].user = 1;
    records[1].scheme = SicScheme::full;
    const auto text = render_results(records, cfg);
    REQUIRE(text.find(kCsvColumns) != std::string::npos);
    const auto parsed = parse_results(text);
    REQUIRE(parsed.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        REQUIRE(parsed[i].snr_db == records[i].snr_db);
        REQUIRE(parsed[i].imbalance_db == records[i].imbalance_db);
        REQUIRE(parsed[i].scheme == records[i].scheme);
        REQUIRE(parsed[i].stage == records[i].stage);
        REQUIRE(parsed[i].user == records[i].user);
        REQUIRE(parsed[i].ber == records[i].ber);
        REQUIRE(parsed[i].bit_errors == records[i].bit_errors);
        REQUIRE(parsed[i].bits == records[i].bits);
        REQUIRE(parsed[i].e_bar == records[i].e_bar);
        REQUIRE(parsed[i].alpha_data == records[i].alpha_data);
        REQUIRE(parsed[i].alpha_pilot == records[i].alpha_pilot);
        REQUIRE(parsed[i].beta == records[i].beta);
        REQUIRE(parsed[i].trials == records[i].trials);
    }

    const auto empty = render_results({}, cfg);
    REQUIRE(parse_results(empty).empty());
    // every config key is echoed
    for (const auto key : {"snr_grid_db", "power_imbalance_db", "sigma_p2", "W =",
                           "em_iterations", "stages", "scheme", "csi_mode", "e_bar_mode",
                           "alpha_clamp", "early_exit", "trials", "base_seed", "output_path",
                           "rate", "block_length", "pilot_count", "pilot_boost_db", "version"})
        REQUIRE(empty.find(key) != std::string::npos);

    REQUIRE_THROWS_AS(parse_results("snr_db,bad_columns\n"), std::invalid_argument);
    REQUIRE_THROWS_AS(parse_results(""), std::invalid_argument);
}

TEST_CASE("a clean single-user sweep counts every bit and no errors") {
    ExperimentConfig cfg;
    cfg.users = {{0.53, 200, 10, 3.0}};
    cfg.snr_grid_db = {10.0};
    cfg.sigma_p2 = 0.001;
    cfg.stages = 1;
    cfg.em_iterations = 1;
    cfg.csi_mode = CsiMode::perfect;
    cfg.trials = 20;
    cfg.base_seed = 3;
    const auto result = run_experiment(cfg, 2);
    REQUIRE(result.failed_trials == 0);
    REQUIRE(result.records.size() == 1);
    const auto& r = result.records[0];
    REQUIRE(r.bits == 20 * 106);  // trials times info bits, exactly
    REQUIRE(r.bit_errors == 0);
    REQUIRE(r.ber == 0.0);
    REQUIRE(r.trials == 20);
    REQUIRE(r.beta > 0.9);
}

TEST_CASE("thread count never changes the emitted table") {
    ExperimentConfig cfg;
    cfg.users = {{0.6, 120, 6, 3.0}, {0.5, 120, 6, 3.0}};
    cfg.snr_grid_db = {6.0, 8.0};
    cfg.sigma_p2 = 0.01;
    cfg.stages = 2;
    cfg.em_iterations = 2;
    cfg.trials = 6;
    cfg.base_seed = 11;
    const auto serial = run_experiment(cfg, 1);
    const auto parallel = run_experiment(cfg, 4);
    REQUIRE(render_results(serial.records, cfg) == render_results(parallel.records, cfg));
    REQUIRE(serial.records.size() == 2 * 2 * 2);
}

TEST_CASE("per-trial failures are counted, not dropped or fatal") {
    ExperimentConfig cfg;
    cfg.users = {{0.5, 100, 5, 3.0}, {0.5, 200, 10, 3.0}};  // mismatched frame lengths
    cfg.snr_grid_db = {8.0};
    cfg.stages = 1;
    cfg.em_iterations = 1;
    cfg.trials = 4;
    const auto result = run_experiment(cfg, 2);
    REQUIRE(result.failed_trials == 4);
    REQUIRE_FALSE(result.failure_samples.empty());
    REQUIRE(result.records.empty());
}

TEST_CASE("calibration produces an ascending, plausible table") {
    CalibrationSpec spec;
    spec.snr_grid_db = {2.0, 6.0, 10.0};
    spec.trials = 4;
    spec.user = {0.5, 400, 20, 3.0};
    spec.em_iterations = 3;
    const auto table = calibrate_ebar_table(spec, 2);
    REQUIRE(table.sinr_db.size() >= 2);
    REQUIRE(std::is_sorted(table.sinr_db.begin(), table.sinr_db.end()));
    REQUIRE(table.e_bar.front() > table.e_bar.back());
    for (const double e : table.e_bar) REQUIRE(e >= 0.0);
    REQUIRE_NOTHROW(table.validate());
}
