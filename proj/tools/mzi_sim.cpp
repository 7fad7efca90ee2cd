// mzi-sim: run, sweep and re-analyze fibre Mach-Zehnder scenarios.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mzi/mzi.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct RunOptions {
    std::string scenario;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> duration_s;
    std::string out_dir;
};

mzi::ScenarioConfig resolve_config(const RunOptions& opt) {
    std::optional<mzi::ScenarioId> id;
    if (!opt.scenario.empty()) {
        id = mzi::parse_scenario_id(opt.scenario);
        if (!id) throw mzi::ConfigError("scenario", "unknown scenario '" + opt.scenario + "'");
    }
    mzi::ScenarioConfig cfg = opt.config_path.empty() ? mzi::load_config_text("", id) : mzi::load_config(opt.config_path, id);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.duration_s) cfg.duration_s = *opt.duration_s;
    if (!opt.out_dir.empty()) cfg.output_dir = opt.out_dir;
    mzi::validate(cfg);
    return cfg;
}

mzi::SummaryStats run_one(const mzi::ScenarioConfig& cfg, const std::filesystem::path& dir) {
    const auto result = mzi::run_scenario(cfg);
    const auto stats = mzi::analyze_counts(result.counts.net, cfg.bin_s, cfg.analysis.envelope_window_s,
                                           cfg.analysis.hist_bin);
    mzi::write_outputs(result, stats, dir);
    return stats.summary;
}

void add_run_flags(CLI::App* cmd, RunOptions& opt) {
    cmd->add_option("--scenario", opt.scenario, "pol_on | pol_off | phase_off | custom");
    cmd->add_option("--config", opt.config_path, "key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--duration-s", opt.duration_s, "simulated duration in seconds");
    cmd->add_option("--out-dir", opt.out_dir, "output directory");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fibre Mach-Zehnder single-photon interferometer simulator"};
    app.require_subcommand(1);

    RunOptions run_opt;
    auto* run = app.add_subcommand("run", "simulate one scenario and write CSV outputs");
    add_run_flags(run, run_opt);
    run->add_option("--seed", run_opt.seed, "RNG seed");

    RunOptions sweep_opt;
    std::uint64_t seed_start = 1;
    int seed_count = 5;
    auto* sweep = app.add_subcommand("sweep", "repeat a scenario over consecutive seeds");
    add_run_flags(sweep, sweep_opt);
    sweep->add_option("--seed-start", seed_start, "first seed")->capture_default_str();
    sweep->add_option("--count", seed_count, "number of seeds")->capture_default_str()->check(CLI::PositiveNumber);

    std::string counts_path;
    double window_s = 600.0;
    double hist_bin = 0.01;
    double bin_override = 0.0;
    std::string analyze_out;
    auto* analyze = app.add_subcommand("analyze", "recompute envelope, visibility and histogram from counts.csv");
    analyze->add_option("--counts", counts_path, "counts.csv from a previous run")->required()->check(CLI::ExistingFile);
    analyze->add_option("--window-s", window_s, "envelope window in seconds")->capture_default_str();
    analyze->add_option("--hist-bin", hist_bin, "histogram bin width")->capture_default_str();
    analyze->add_option("--bin-s", bin_override, "bin width; inferred from counts.csv when omitted");
    analyze->add_option("--out-dir", analyze_out, "output directory (defaults to the counts.csv directory)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*run) {
            const auto cfg = resolve_config(run_opt);
            const auto summary = run_one(cfg, cfg.output_dir);
            std::cout << "scenario=" << mzi::to_string(cfg.scenario) << " seed=" << cfg.seed
                      << " mean_V=" << summary.mean << " std_V=" << summary.stddev << " n=" << summary.n
                      << " out=" << cfg.output_dir << '\n';
        } else if (*sweep) {
            auto cfg = resolve_config(sweep_opt);
            const std::filesystem::path root = cfg.output_dir;
            std::filesystem::create_directories(root);
            std::ofstream table(root / "sweep.csv");
            table << "seed,mean_V,std_V,n_valid\n";
            for (int k = 0; k < seed_count; ++k) {
                cfg.seed = seed_start + static_cast<std::uint64_t>(k);
                const auto dir = root / ("seed_" + std::to_string(cfg.seed));
                const auto summary = run_one(cfg, dir);
                table << cfg.seed << ',' << mzi::config_detail::format_double(summary.mean) << ','
                      << mzi::config_detail::format_double(summary.stddev) << ',' << summary.n << '\n';
                std::cout << "seed=" << cfg.seed << " mean_V=" << summary.mean << " std_V=" << summary.stddev
                          << '\n';
            }
        } else if (*analyze) {
            auto series = mzi::read_counts_csv(counts_path);
            const double bin = bin_override > 0.0 ? bin_override : series.bin_s;
            const auto stats = mzi::analyze_counts(series.net, bin, window_s, hist_bin);
            const std::filesystem::path dir =
                analyze_out.empty() ? std::filesystem::path(counts_path).parent_path() : std::filesystem::path(analyze_out);
            mzi::write_visibility_files(dir.empty() ? "." : dir, stats, bin);
            std::cout << "mean_V=" << stats.summary.mean << " std_V=" << stats.summary.stddev
                      << " n=" << stats.summary.n << '\n';
        }
    } catch (const mzi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const mzi::InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
