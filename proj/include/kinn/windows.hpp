#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "kinn/series.hpp"

namespace kinn {

struct PartitionParams {
    std::size_t session_len = 120;
    std::size_t t_p = 30;       // input days per window
    std::size_t t_f = 30;       // forecast days per window
    std::size_t train_obs = 30; // training windows per session
};

// One walk-forward step: train on block s, test on block s+1. Test inputs
// start on the unused tail of block s; windows slide by one day until the
// last target day leaves block s+1 (or the series ends).
struct SessionPlan {
    int session_index = 0;
    std::size_t train_start = 0;
    std::size_t train_len = 0;
    std::size_t train_window_count = 0;
    std::size_t test_input_start = 0;
    std::size_t test_window_count = 0;
};

std::vector<SessionPlan> plan_sessions(const SeriesFrame& frame,
                                       const PartitionParams& params = {});

struct NormalizationRecord {
    double window_min = 0.0;
    double window_max = 1.0;
    bool enabled = false;
    bool constant_window = false;

    double normalize(double x) const {
        return enabled ? (x - window_min) / (window_max - window_min) : x;
    }
    double denormalize(double x) const {
        return enabled ? x * (window_max - window_min) + window_min : x;
    }
};

// One (input, target) pair in model space: values plus their one-step
// differences, normalized by the input window's min-max when requested.
struct WindowSample {
    std::vector<double> input_values;     // T_p
    std::vector<double> input_velocities; // T_p - 1
    std::vector<double> target_values;    // T_f (empty if beyond the series)
    std::vector<double> target_velocities;
    NormalizationRecord norm;
    std::size_t input_start = 0;
};

// Targets are optional only when allow_missing_targets is set and the window
// extends past the series end; training paths never set it.
WindowSample make_window(const SeriesFrame& frame, std::size_t input_start, std::size_t t_p,
                         std::size_t t_f, bool normalize, bool allow_missing_targets = false);

// Model-facing layout: values then velocities (lengths 2T-1), or plain
// values when kinematic is off.
std::vector<double> assemble_input(const WindowSample& sample, bool kinematic);
std::vector<double> assemble_target(const WindowSample& sample, bool kinematic);

std::vector<double> denormalize_forecast(std::span<const double> pred,
                                         const NormalizationRecord& norm);

// Debug dump: one JSON object per line per training window
// {"session":..,"offset":..,"input":[..],"target":[..],"min":..,"max":..}
void dump_windows_jsonl(const SeriesFrame& frame, const std::vector<SessionPlan>& plans,
                        const PartitionParams& params, bool normalize,
                        const std::filesystem::path& out_path);

}  // namespace kinn
