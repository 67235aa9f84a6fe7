// Command-line entry point: the three study commands plus a data-file
// checker. Every flag has a config-file equivalent; flags win. Exit codes:
// 0 success, 1 usage or config problem, 2 ingestion problem, 3 numerical
// failure.

#include "loglap/studies.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>

namespace {

namespace fs = std::filesystem;
using namespace loglap;

struct Flags {
    std::string config_path;
    std::map<std::string, std::string> overrides;
};

void add_override(CLI::App* cmd, Flags& flags, const std::string& option,
                  const std::string& key, const std::string& description) {
    cmd->add_option_function<std::string>(
        option, [&flags, key](const std::string& value) { flags.overrides[key] = value; },
        description);
}

void add_common_flags(CLI::App* cmd, Flags& flags) {
    cmd->add_option("--config", flags.config_path, "config file (key = value sections)");
    add_override(cmd, flags, "--seed", "seed", "master seed (default 1)");
    add_override(cmd, flags, "--replicates", "replicates", "replicate count");
    add_override(cmd, flags, "--out-dir", "out_dir", "output directory (default out)");
}

void add_ingest_flags(CLI::App* cmd, Flags& flags) {
    add_override(cmd, flags, "--price-file", "price_file", "price CSV (date,value)");
    add_override(cmd, flags, "--iv-file", "iv_file",
                 "implied-volatility CSV, joined on date (optional)");
    add_override(cmd, flags, "--date-column", "date_column", "date column name");
    add_override(cmd, flags, "--value-column", "value_column", "value column name");
    add_override(cmd, flags, "--return-kind", "return_kind", "log-return or raw");
}

StudyConfig resolve_config(StudyKind kind, const Flags& flags) {
    ConfigMap file;
    if (!flags.config_path.empty()) {
        std::ifstream in(flags.config_path);
        if (!in) throw ConfigError(flags.config_path + ": cannot open config file");
        file = parse_config_file(in);
    }
    return make_study_config(kind, file, flags.overrides);
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& writer) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error(path.string() + ": cannot open for writing");
    writer(os);
    os.flush();
    if (!os) throw std::runtime_error(path.string() + ": write failed");
}

fs::path prepare_out_dir(const StudyConfig& config) {
    fs::path dir(config.out_dir);
    fs::create_directories(dir);
    return dir;
}

int run_sim_study_command(const Flags& flags) {
    StudyConfig config = resolve_config(StudyKind::sim_study, flags);
    fs::path dir = prepare_out_dir(config);
    SimStudyResult result = run_sim_study(config);
    write_file(dir / "sim_study.csv", [&](std::ostream& os) { write_sim_study_csv(os, result); });
    write_file(dir / "sim_study.txt",
               [&](std::ostream& os) { write_sim_study_text(os, result); });
    std::cout << "wrote " << (dir / "sim_study.csv").string() << " and "
              << (dir / "sim_study.txt").string() << "\n";
    return 0;
}

int run_lorenz_study_command(const Flags& flags) {
    StudyConfig config = resolve_config(StudyKind::lorenz_study, flags);
    fs::path dir = prepare_out_dir(config);
    LorenzStudyResult result = run_lorenz_study(config);
    write_file(dir / "lorenz_study.csv",
               [&](std::ostream& os) { write_lorenz_study_csv(os, result); });
    write_file(dir / "lorenz_study.txt",
               [&](std::ostream& os) { write_lorenz_study_text(os, result); });
    std::cout << "wrote " << (dir / "lorenz_study.csv").string() << " and "
              << (dir / "lorenz_study.txt").string() << "\n";
    return 0;
}

int run_backtest_command(const Flags& flags) {
    StudyConfig config = resolve_config(StudyKind::backtest, flags);
    IngestSpec spec = ingest_spec_from(config);
    IngestReport report;
    SeriesBundle bundle = ingest_csv(spec, &report);
    fs::path dir = prepare_out_dir(config);
    BacktestResult result = run_backtest(config, bundle, report.dates);
    write_file(dir / "backtest_table.csv",
               [&](std::ostream& os) { write_backtest_table_csv(os, result); });
    write_file(dir / "backtest_table.txt",
               [&](std::ostream& os) { write_backtest_table_text(os, result); });
    write_file(dir / "backtest_summary.csv",
               [&](std::ostream& os) { write_backtest_summary_csv(os, result); });
    write_file(dir / "forecast_records.csv",
               [&](std::ostream& os) { write_forecast_records_csv(os, result); });
    write_file(dir / "panel_returns.csv",
               [&](std::ostream& os) { write_panel_returns_csv(os, result); });
    write_file(dir / "panel_volatility.csv",
               [&](std::ostream& os) { write_panel_volatility_csv(os, result); });
    write_file(dir / "panel_tail_probability.csv", [&](std::ostream& os) {
        write_panel_tail_probability_csv(os, result, config.classifier_threshold);
    });
    std::cout << "ingested " << report.joined_rows << " rows";
    if (!report.dates.empty())
        std::cout << " (" << report.dates.front() << " .. " << report.dates.back() << ")";
    std::cout << "\nwhole-sample delta_hat = "
              << csv::format_double(result.whole_sample_delta_hat) << "\n"
              << "wrote 7 files under " << dir.string() << "\n";
    return 0;
}

int run_ingest_check_command(const Flags& flags) {
    StudyConfig config = resolve_config(StudyKind::backtest, flags);
    IngestSpec spec = ingest_spec_from(config);
    IngestReport report;
    ingest_csv(spec, &report);
    std::cout << "price rows: " << report.price_rows << "\n"
              << "return rows: " << report.return_rows << "\n"
              << "joined rows: " << report.joined_rows << "\n";
    for (const auto& [name, dropped] : report.dropped_by_covariate)
        std::cout << "dropped by covariate " << name << ": " << dropped << "\n";
    if (!report.dates.empty())
        std::cout << "date range: " << report.dates.front() << " .. " << report.dates.back()
                  << "\n";
    std::cout << "ok\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"log-Laplace stochastic-volatility studies"};
    app.require_subcommand(1);

    Flags sim_flags, lorenz_flags, backtest_flags, ingest_flags;

    CLI::App* sim = app.add_subcommand(
        "sim-study", "delta-estimation study over the AR(2)/AR(5) processes");
    add_common_flags(sim, sim_flags);
    add_override(sim, sim_flags, "--sample-size", "sample_size",
                 "base sample size T; the study also runs 2T (default 625)");
    add_override(sim, sim_flags, "--multipliers", "threshold_multipliers",
                 "estimation thresholds k of k sigma (default \"2 3 4\")");
    add_override(sim, sim_flags, "--ar-order", "ar_order",
                 "conditional-mean AR order (default 10)");

    CLI::App* lorenz =
        app.add_subcommand("lorenz-study", "Lorenz-driven volatility train/test study");
    add_common_flags(lorenz, lorenz_flags);
    add_override(lorenz, lorenz_flags, "--sample-size", "sample_size",
                 "trajectory length (default 10000)");
    add_override(lorenz, lorenz_flags, "--splits", "splits",
                 "train fractions (default \"0.3 0.4 0.5\")");
    add_override(lorenz, lorenz_flags, "--lag-count", "lag_count",
                 "H-proxy lags in the design (default 20)");
    add_override(lorenz, lorenz_flags, "--multipliers", "threshold_multipliers",
                 "estimation threshold k (default 4)");
    add_override(lorenz, lorenz_flags, "--classifier-threshold", "classifier_threshold",
                 "event-probability cutoff (default 0.0135)");

    CLI::App* backtest =
        app.add_subcommand("backtest", "train/test backtest on ingested price data");
    add_common_flags(backtest, backtest_flags);
    add_ingest_flags(backtest, backtest_flags);
    add_override(backtest, backtest_flags, "--split", "split_fraction",
                 "train fraction (default 0.5)");
    add_override(backtest, backtest_flags, "--lag-count", "lag_count",
                 "lags per covariate track (default 10)");
    add_override(backtest, backtest_flags, "--multipliers", "threshold_multipliers",
                 "estimation threshold k (default 4)");
    add_override(backtest, backtest_flags, "--classifier-threshold", "classifier_threshold",
                 "event-probability cutoff (default 0.0135)");

    CLI::App* ingest = app.add_subcommand("ingest-check", "parse and validate data files");
    ingest->add_option("--config", ingest_flags.config_path,
                       "config file (key = value sections)");
    add_ingest_flags(ingest, ingest_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (app.got_subcommand(sim)) return run_sim_study_command(sim_flags);
        if (app.got_subcommand(lorenz)) return run_lorenz_study_command(lorenz_flags);
        if (app.got_subcommand(backtest)) return run_backtest_command(backtest_flags);
        if (app.got_subcommand(ingest)) return run_ingest_check_command(ingest_flags);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const IngestError& e) {
        std::cerr << "ingest error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
