#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "kinn/metrics.hpp"
#include "kinn/models.hpp"
#include "kinn/windows.hpp"

namespace kinn {

enum class Arms { baseline, kinn, both };

struct RunConfig {
    std::filesystem::path data_path;
    std::filesystem::path output_dir = "run_out";
    std::vector<Arch> architectures;
    std::map<Arch, bool> normalize;  // unlisted architectures use their default
    Arms arms = Arms::both;
    PartitionParams partition;
    std::size_t epochs = 1000;
    std::size_t batch_size = 32;
    double lr = 0.01;
    std::uint64_t master_seed = 1;
    std::size_t threads = 0;  // 0 = hardware concurrency
    MapePooling pooling = MapePooling::days;
    bool velocity_supervision = false;
    double consistency_weight = 1.0;
    ArchParams arch_params;

    bool arch_normalized(Arch arch) const;
};

// Flat key=value config file; '#' starts a comment. Unknown keys are errors.
RunConfig parse_config_file(const std::filesystem::path& path);
// Applies one key=value assignment (shared by the file parser and CLI flags).
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

struct TrainingFailure {
    std::string model;
    std::string arm;
    int session = 0;
    std::string reason;
};

struct RunSummary {
    std::filesystem::path output_dir;
    std::vector<ModelComparison> comparisons;
    std::vector<TrainingFailure> failures;
    std::size_t session_count = 0;
};

// Walk-forward paired experiment. Per architecture x arm x session: fresh
// seeded model, trained on the session's windows, evaluated on the following
// block. Writes sessions.csv, summary.csv, per-session traces and
// run_metadata.json under the output directory (KINN_OUTPUT_DIR overrides).
RunSummary run_experiment(const RunConfig& config);

// Concatenates a run's per-session traces for one architecture arm into a
// single plot table `session,window,day,actual,predicted`.
void emit_plot_data(const std::filesystem::path& run_dir, const std::string& arch,
                    const std::string& arm, const std::filesystem::path& out_csv);

}  // namespace kinn
