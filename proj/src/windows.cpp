#include "kinn/windows.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace kinn {

std::vector<SessionPlan> plan_sessions(const SeriesFrame& frame, const PartitionParams& p) {
    if (p.t_p == 0 || p.t_f == 0 || p.train_obs == 0 || p.session_len == 0) {
        throw std::invalid_argument("plan_sessions: all parameters must be positive");
    }
    if (p.t_p + p.t_f + p.train_obs - 1 > p.session_len) {
        throw std::invalid_argument(
            "plan_sessions: training windows spill into the next session (T_p + T_f + "
            "train_obs - 1 > session_len)");
    }
    const std::size_t n = frame.size();
    if (n < 2 * p.session_len) {
        throw std::invalid_argument("plan_sessions: series shorter than two sessions");
    }

    const std::size_t blocks = n / p.session_len;
    std::vector<SessionPlan> plans;
    plans.reserve(blocks - 1);
    for (std::size_t s = 0; s + 1 < blocks; ++s) {
        SessionPlan plan;
        plan.session_index = static_cast<int>(s);
        plan.train_start = s * p.session_len;
        plan.train_len = p.session_len;
        plan.train_window_count = p.train_obs;
        // test inputs begin on the tail of block s never seen in training
        plan.test_input_start = (s + 1) * p.session_len - p.t_p;
        const std::size_t block_end = std::min((s + 2) * p.session_len, n);
        // last admissible input start so the final target day stays in block s+1
        const std::size_t last_start = block_end - p.t_p - p.t_f;
        plan.test_window_count = last_start - plan.test_input_start + 1;
        plans.push_back(plan);
    }
    return plans;
}

WindowSample make_window(const SeriesFrame& frame, std::size_t input_start, std::size_t t_p,
                         std::size_t t_f, bool normalize, bool allow_missing_targets) {
    if (input_start + t_p > frame.size()) {
        throw std::out_of_range("make_window: input window extends past the series end");
    }
    const bool has_targets = input_start + t_p + t_f <= frame.size();
    if (!has_targets && !allow_missing_targets) {
        throw std::out_of_range("make_window: target window extends past the series end");
    }

    WindowSample w;
    w.input_start = input_start;
    const double* base = frame.values.data() + input_start;

    if (normalize) {
        const auto [lo_it, hi_it] = std::minmax_element(base, base + t_p);
        double lo = *lo_it, hi = *hi_it;
        w.norm.enabled = true;
        if (hi == lo) {
            // degenerate flat window: map to 0.5 with unit scale
            w.norm.constant_window = true;
            lo = *lo_it - 0.5;
            hi = *lo_it + 0.5;
        }
        w.norm.window_min = lo;
        w.norm.window_max = hi;
    }

    w.input_values.resize(t_p);
    for (std::size_t i = 0; i < t_p; ++i) w.input_values[i] = w.norm.normalize(base[i]);
    w.input_velocities.resize(t_p - 1);
    for (std::size_t i = 0; i + 1 < t_p; ++i) {
        w.input_velocities[i] = w.input_values[i + 1] - w.input_values[i];
    }

    if (has_targets) {
        const double* tbase = base + t_p;
        w.target_values.resize(t_f);
        for (std::size_t i = 0; i < t_f; ++i) w.target_values[i] = w.norm.normalize(tbase[i]);
        w.target_velocities.resize(t_f - 1);
        for (std::size_t i = 0; i + 1 < t_f; ++i) {
            w.target_velocities[i] = w.target_values[i + 1] - w.target_values[i];
        }
    }
    return w;
}

namespace {

std::vector<double> concat(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

}  // namespace

std::vector<double> assemble_input(const WindowSample& s, bool kinematic) {
    return kinematic ? concat(s.input_values, s.input_velocities) : s.input_values;
}

std::vector<double> assemble_target(const WindowSample& s, bool kinematic) {
    return kinematic ? concat(s.target_values, s.target_velocities) : s.target_values;
}

std::vector<double> denormalize_forecast(std::span<const double> pred,
                                         const NormalizationRecord& norm) {
    std::vector<double> out(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) out[i] = norm.denormalize(pred[i]);
    return out;
}

void dump_windows_jsonl(const SeriesFrame& frame, const std::vector<SessionPlan>& plans,
                        const PartitionParams& params, bool normalize,
                        const std::filesystem::path& out_path) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path.string());
    for (const auto& plan : plans) {
        for (std::size_t o = 0; o < plan.train_window_count; ++o) {
            const auto w =
                make_window(frame, plan.train_start + o, params.t_p, params.t_f, normalize);
            nlohmann::json j;
            j["session"] = plan.session_index;
            j["offset"] = o;
            j["input"] = w.input_values;
            j["target"] = w.target_values;
            j["min"] = w.norm.window_min;
            j["max"] = w.norm.window_max;
            out << j.dump() << '\n';
        }
    }
}

}  // namespace kinn
