#include "kinn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace kinn {

namespace {

void check_pair(std::span<const double> actual, std::span<const double> forecast) {
    if (actual.size() != forecast.size()) {
        throw std::invalid_argument("metric: actual/forecast lengths differ");
    }
    if (actual.empty()) throw std::invalid_argument("metric: empty vectors");
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

}  // namespace

double mape(std::span<const double> actual, std::span<const double> forecast) {
    check_pair(actual, forecast);
    double acc = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (actual[i] == 0.0) {
            throw std::invalid_argument("mape: actual value is zero at index " +
                                        std::to_string(i));
        }
        acc += std::abs((actual[i] - forecast[i]) / actual[i]);
    }
    return acc / static_cast<double>(actual.size());
}

double rmse(std::span<const double> actual, std::span<const double> forecast) {
    check_pair(actual, forecast);
    double acc = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double d = actual[i] - forecast[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(actual.size()));
}

SessionResult session_metrics(int session_index, const std::vector<WindowForecast>& windows,
                              MapePooling pooling) {
    if (windows.empty()) throw std::invalid_argument("session_metrics: no predictions");
    SessionResult r;
    r.session_index = session_index;
    if (pooling == MapePooling::days) {
        std::vector<double> actual, forecast;
        for (const auto& w : windows) {
            actual.insert(actual.end(), w.actual.begin(), w.actual.end());
            forecast.insert(forecast.end(), w.forecast.begin(), w.forecast.end());
        }
        r.prediction_count = actual.size();
        r.mape = mape(actual, forecast);
        r.rmse = rmse(actual, forecast);
    } else {
        double mape_acc = 0.0, rmse_acc = 0.0;
        std::size_t count = 0;
        for (const auto& w : windows) {
            mape_acc += mape(w.actual, w.forecast);
            rmse_acc += rmse(w.actual, w.forecast);
            count += w.actual.size();
        }
        r.prediction_count = count;
        r.mape = mape_acc / static_cast<double>(windows.size());
        r.rmse = rmse_acc / static_cast<double>(windows.size());
    }
    return r;
}

WilcoxonResult wilcoxon_one_sided(std::span<const double> x, std::span<const double> y,
                                  WilcoxonMethod method) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("wilcoxon: paired samples must have equal length");
    }
    std::vector<double> diffs;
    diffs.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        if (d != 0.0) diffs.push_back(d);
    }

    WilcoxonResult res;
    res.n_effective = diffs.size();
    if (diffs.empty()) {
        res.degenerate = true;
        res.p = 1.0;
        return res;
    }
    if (diffs.size() < 5) {
        throw std::invalid_argument("wilcoxon: fewer than 5 nonzero differences");
    }

    const std::size_t n = diffs.size();
    // ranks of |d| with average ranks for ties, doubled so they stay integral
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(diffs[a]) < std::abs(diffs[b]);
    });
    std::vector<long long> rank2(n, 0);
    std::vector<std::size_t> tie_sizes;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && std::abs(diffs[order[j]]) == std::abs(diffs[order[i]])) ++j;
        const long long avg2 = static_cast<long long>(i + 1 + j);  // 2 * average rank
        for (std::size_t k = i; k < j; ++k) rank2[order[k]] = avg2;
        if (j - i > 1) tie_sizes.push_back(j - i);
        i = j;
    }

    long long w2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (diffs[i] > 0.0) w2 += rank2[i];
    }
    res.statistic = static_cast<double>(w2) / 2.0;

    const bool use_exact =
        method == WilcoxonMethod::exact || (method == WilcoxonMethod::automatic && n <= 12);
    if (use_exact) {
        if (n > 20) throw std::invalid_argument("wilcoxon: exact path limited to n <= 20");
        const std::uint64_t total = 1ull << n;
        std::uint64_t at_least = 0;
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            long long t2 = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (mask & (1ull << i)) t2 += rank2[i];
            }
            if (t2 >= w2) ++at_least;
        }
        res.p = static_cast<double>(at_least) / static_cast<double>(total);
        res.exact = true;
        return res;
    }

    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    for (std::size_t t : tie_sizes) {
        const double td = static_cast<double>(t);
        var -= (td * td * td - td) / 48.0;
    }
    if (var <= 0.0) {
        // every |d| identical and tied: no usable variance, report the
        // conservative bound
        res.p = 1.0;
        return res;
    }
    const double z = (res.statistic - mean - 0.5) / std::sqrt(var);
    res.p = 0.5 * std::erfc(z / std::sqrt(2.0));
    return res;
}

ArmStats mape_stats(const std::vector<SessionResult>& results) {
    ArmStats s;
    if (results.empty()) throw std::invalid_argument("mape_stats: no sessions");
    double acc = 0.0;
    for (const auto& r : results) acc += r.mape;
    s.mean = acc / static_cast<double>(results.size());
    if (results.size() == 1) {
        s.single_sample = true;
        s.stddev = 0.0;
        return s;
    }
    double ss = 0.0;
    for (const auto& r : results) {
        const double d = r.mape - s.mean;
        ss += d * d;
    }
    s.stddev = std::sqrt(ss / static_cast<double>(results.size() - 1));
    return s;
}

ModelComparison aggregate(std::string model, std::vector<SessionResult> baseline,
                          std::vector<SessionResult> kinn) {
    if (baseline.size() != kinn.size()) {
        throw std::invalid_argument("aggregate: arm session counts differ");
    }
    for (std::size_t i = 0; i < baseline.size(); ++i) {
        if (baseline[i].session_index != kinn[i].session_index) {
            throw std::invalid_argument("aggregate: arm session indexes do not match");
        }
    }
    ModelComparison cmp;
    cmp.model = std::move(model);
    cmp.baseline = std::move(baseline);
    cmp.kinn = std::move(kinn);
    cmp.baseline_mape = mape_stats(cmp.baseline);
    cmp.kinn_mape = mape_stats(cmp.kinn);
    std::vector<double> b, k;
    for (const auto& r : cmp.baseline) b.push_back(r.mape);
    for (const auto& r : cmp.kinn) k.push_back(r.mape);
    cmp.wilcoxon = wilcoxon_one_sided(b, k);
    return cmp;
}

void write_sessions_csv(const std::filesystem::path& path,
                        std::span<const ModelComparison> comparisons) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "model,arm,session,mape,rmse\n";
    for (const auto& cmp : comparisons) {
        for (const auto& [arm, results] :
             {std::pair{"ann", &cmp.baseline}, std::pair{"kinn", &cmp.kinn}}) {
            for (const auto& r : *results) {
                out << cmp.model << ',' << arm << ',' << r.session_index << ',' << fmt(r.mape)
                    << ',' << fmt(r.rmse) << '\n';
            }
        }
    }
}

void write_summary_csv(const std::filesystem::path& path,
                       std::span<const ModelComparison> comparisons) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "model,mean_ann,std_ann,mean_kinn,std_kinn,wilcoxon_p\n";
    for (const auto& cmp : comparisons) {
        out << cmp.model << ',';
        if (cmp.baseline.empty()) {
            out << ",,";
        } else {
            out << fmt(cmp.baseline_mape.mean) << ',' << fmt(cmp.baseline_mape.stddev) << ',';
        }
        if (cmp.kinn.empty()) {
            out << ",,";
        } else {
            out << fmt(cmp.kinn_mape.mean) << ',' << fmt(cmp.kinn_mape.stddev) << ',';
        }
        if (cmp.baseline.empty() || cmp.kinn.empty()) {
            out << '\n';
        } else {
            out << fmt(cmp.wilcoxon.p) << '\n';
        }
    }
}

}  // namespace kinn
