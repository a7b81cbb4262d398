#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kinn/experiment.hpp"
#include "kinn/series.hpp"
#include "kinn/windows.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides) {
    kinn::RunConfig config;
    if (!config_path.empty()) config = kinn::parse_config_file(config_path);
    for (const auto& entry : overrides) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos) {
            std::cerr << "error: --set expects key=value, got '" << entry << "'\n";
            return 2;
        }
        kinn::apply_config_entry(config, entry.substr(0, eq), entry.substr(eq + 1));
    }

    const auto summary = kinn::run_experiment(config);
    std::cout << "wrote " << summary.output_dir.string() << " (" << summary.session_count
              << " sessions)\n";
    for (const auto& cmp : summary.comparisons) {
        std::printf("  %-20s", cmp.model.c_str());
        if (!cmp.baseline.empty()) {
            std::printf("  ann %.5f +- %.5f", cmp.baseline_mape.mean, cmp.baseline_mape.stddev);
        }
        if (!cmp.kinn.empty()) {
            std::printf("  kinn %.5f +- %.5f", cmp.kinn_mape.mean, cmp.kinn_mape.stddev);
        }
        if (!cmp.baseline.empty() && !cmp.kinn.empty()) {
            std::printf("  p=%.5f", cmp.wilcoxon.p);
        }
        std::printf("\n");
    }
    if (!summary.failures.empty()) {
        std::cerr << "warning: " << summary.failures.size()
                  << " session trainings failed (see failures.csv)\n";
    }
    return 0;
}

int cmd_validate(const std::string& data_path, std::size_t session_len,
                 const std::string& dump_path, bool dump_normalized) {
    const auto frame = kinn::load_series(data_path);
    std::cout << data_path << ": " << frame.size() << " rows, "
              << frame.dates.front().to_string() << " .. " << frame.dates.back().to_string()
              << "\n";
    const std::size_t blocks = frame.size() / session_len;
    std::cout << "  " << blocks << " full blocks of " << session_len << " days";
    if (blocks >= 2) {
        std::cout << " -> " << (blocks - 1) << " walk-forward sessions";
    } else {
        std::cout << " (too short for a train/test session pair)";
    }
    std::cout << "\n";
    if (!dump_path.empty()) {
        kinn::PartitionParams pp;
        pp.session_len = session_len;
        const auto plans = kinn::plan_sessions(frame, pp);
        kinn::dump_windows_jsonl(frame, plans, pp, dump_normalized, dump_path);
        std::cout << "  windows dumped to " << dump_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kinematic-informed forecasting lab"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "train and evaluate paired baseline/kinematic models");
    std::string config_path;
    std::vector<std::string> overrides;
    run->add_option("-c,--config", config_path, "key = value config file");
    run->add_option("-s,--set", overrides, "config override, key=value (repeatable)");

    auto* plot = app.add_subcommand("plot", "concatenate run traces into one plot table");
    std::string run_dir, plot_arch, plot_arm = "kinn", plot_out = "plot.csv";
    plot->add_option("-r,--run-dir", run_dir, "experiment output directory")->required();
    plot->add_option("-a,--arch", plot_arch, "architecture name")->required();
    plot->add_option("--arm", plot_arm, "ann or kinn")->check(CLI::IsMember({"ann", "kinn"}));
    plot->add_option("-o,--out", plot_out, "output CSV path");

    auto* validate = app.add_subcommand("validate-data", "check an index CSV and report sessions");
    std::string data_path, dump_path;
    std::size_t session_len = 120;
    bool dump_normalized = false;
    validate->add_option("-d,--data", data_path, "input CSV (date,value)")->required();
    validate->add_option("--session-len", session_len, "days per session block");
    validate->add_option("--dump-windows", dump_path, "write training windows as JSON lines");
    validate->add_flag("--normalized", dump_normalized, "dump min-max normalized windows");

    CLI11_PARSE(app, argc, argv);
    try {
        if (run->parsed()) return cmd_run(config_path, overrides);
        if (plot->parsed()) {
            kinn::emit_plot_data(run_dir, plot_arch, plot_arm, plot_out);
            std::cout << "wrote " << plot_out << "\n";
            return 0;
        }
        if (validate->parsed()) {
            return cmd_validate(data_path, session_len, dump_path, dump_normalized);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
