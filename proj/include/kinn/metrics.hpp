#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace kinn {

// Mean absolute percentage error, as a fraction. Rejects zero actuals.
double mape(std::span<const double> actual, std::span<const double> forecast);
double rmse(std::span<const double> actual, std::span<const double> forecast);

struct SessionResult {
    int session_index = 0;
    double mape = 0.0;
    double rmse = 0.0;
    std::size_t prediction_count = 0;
};

struct WindowForecast {
    std::vector<double> actual;
    std::vector<double> forecast;
};

enum class MapePooling {
    days,     // one flat list over every predicted day in the session
    windows,  // average of per-window metrics
};

SessionResult session_metrics(int session_index, const std::vector<WindowForecast>& windows,
                              MapePooling pooling = MapePooling::days);

enum class WilcoxonMethod { automatic, exact, normal_approx };

struct WilcoxonResult {
    double p = 1.0;
    double statistic = 0.0;  // W+: rank sum of positive differences x - y
    std::size_t n_effective = 0;
    bool degenerate = false;  // every difference was zero
    bool exact = false;       // exact enumeration path used
};

// One-sided signed-rank test of the alternative "y < x" on paired samples.
// Zero differences are dropped, ties get average ranks. Exact enumeration
// for n <= 12 (automatic), tie-corrected normal approximation with
// continuity correction otherwise.
WilcoxonResult wilcoxon_one_sided(std::span<const double> x, std::span<const double> y,
                                  WilcoxonMethod method = WilcoxonMethod::automatic);

struct ArmStats {
    double mean = 0.0;
    double stddev = 0.0;        // sample standard deviation (n-1)
    bool single_sample = false; // stddev reported as 0 with this flag when n == 1
};

ArmStats mape_stats(const std::vector<SessionResult>& results);

// Paired per-session results for one model; wilcoxon tests "kinn < baseline".
struct ModelComparison {
    std::string model;
    std::vector<SessionResult> baseline;
    std::vector<SessionResult> kinn;
    ArmStats baseline_mape;
    ArmStats kinn_mape;
    WilcoxonResult wilcoxon;
};

ModelComparison aggregate(std::string model, std::vector<SessionResult> baseline,
                          std::vector<SessionResult> kinn);

// `model,arm,session,mape,rmse` with arms named ann / kinn
void write_sessions_csv(const std::filesystem::path& path,
                        std::span<const ModelComparison> comparisons);
// `model,mean_ann,std_ann,mean_kinn,std_kinn,wilcoxon_p`
void write_summary_csv(const std::filesystem::path& path,
                       std::span<const ModelComparison> comparisons);

}  // namespace kinn
