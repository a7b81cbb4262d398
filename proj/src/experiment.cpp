#include "kinn/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "kinn/loss.hpp"
#include "kinn/rng.hpp"
#include "kinn/trainer.hpp"

namespace kinn {

using ad::Tensor;

bool RunConfig::arch_normalized(Arch arch) const {
    auto it = normalize.find(arch);
    return it != normalize.end() ? it->second : arch_default_normalize(arch);
}

namespace {

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("config: expected a boolean, got '" + v + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = item.find_last_not_of(" \t");
        parts.push_back(item.substr(b, e - b + 1));
    }
    return parts;
}

std::size_t parse_size(const std::string& v) {
    std::size_t pos = 0;
    const auto n = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("config: bad integer '" + v + "'");
    return n;
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

}  // namespace

void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value) {
    if (key == "data") {
        config.data_path = value;
    } else if (key == "output_dir") {
        config.output_dir = value;
    } else if (key == "architectures") {
        config.architectures.clear();
        for (const auto& name : split(value, ',')) config.architectures.push_back(parse_arch(name));
    } else if (key == "normalize") {
        // either a single boolean for every architecture or arch:bool pairs
        const auto parts = split(value, ',');
        if (parts.size() == 1 && parts[0].find(':') == std::string::npos) {
            const bool flag = parse_bool(parts[0]);
            for (Arch a : all_archs()) config.normalize[a] = flag;
            return;
        }
        for (const auto& part : parts) {
            const auto colon = part.find(':');
            if (colon == std::string::npos) {
                throw std::invalid_argument("config: normalize entries must be arch:bool");
            }
            config.normalize[parse_arch(part.substr(0, colon))] =
                parse_bool(part.substr(colon + 1));
        }
    } else if (key == "arms") {
        if (value == "baseline") config.arms = Arms::baseline;
        else if (value == "kinn") config.arms = Arms::kinn;
        else if (value == "both") config.arms = Arms::both;
        else throw std::invalid_argument("config: arms must be baseline, kinn or both");
    } else if (key == "t_p") {
        config.partition.t_p = parse_size(value);
    } else if (key == "t_f") {
        config.partition.t_f = parse_size(value);
    } else if (key == "session_len") {
        config.partition.session_len = parse_size(value);
    } else if (key == "train_obs") {
        config.partition.train_obs = parse_size(value);
    } else if (key == "epochs") {
        config.epochs = parse_size(value);
    } else if (key == "batch_size") {
        config.batch_size = parse_size(value);
    } else if (key == "lr") {
        config.lr = std::stod(value);
    } else if (key == "seed") {
        config.master_seed = std::stoull(value);
    } else if (key == "threads") {
        config.threads = parse_size(value);
    } else if (key == "mape_pooling") {
        if (value == "days") config.pooling = MapePooling::days;
        else if (value == "windows") config.pooling = MapePooling::windows;
        else throw std::invalid_argument("config: mape_pooling must be days or windows");
    } else if (key == "velocity_supervision") {
        config.velocity_supervision = parse_bool(value);
    } else if (key == "consistency_weight") {
        config.consistency_weight = std::stod(value);
    } else if (key == "rbf_centers") {
        config.arch_params.rbf_centers = parse_size(value);
    } else if (key == "gmdh_select_k") {
        config.arch_params.gmdh_select_k = parse_size(value);
    } else if (key == "gmdh_max_layers") {
        config.arch_params.gmdh_max_layers = parse_size(value);
    } else if (key == "attention_width") {
        config.arch_params.attention_width = parse_size(value);
    } else {
        throw std::invalid_argument("config: unknown key '" + key + "'");
    }
}

RunConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    RunConfig config;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": expected key = value");
        }
        auto trim = [](std::string s) {
            const auto lo = s.find_first_not_of(" \t\r");
            if (lo == std::string::npos) return std::string();
            const auto hi = s.find_last_not_of(" \t\r");
            return s.substr(lo, hi - lo + 1);
        };
        try {
            apply_config_entry(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " +
                                     e.what());
        }
    }
    return config;
}

namespace {

struct TraceRow {
    std::size_t window = 0;
    std::size_t day = 0;
    double actual = 0.0;
    double predicted = 0.0;
};

struct WorkItem {
    Arch arch;
    bool kinematic = false;  // arm
    int session = 0;
};

struct WorkOutcome {
    bool failed = false;
    std::string reason;
    SessionResult metrics;
    std::vector<TraceRow> trace;
};

struct SessionData {
    Tensor train_x, train_y, test_x;
    std::vector<WindowSample> test_windows;
};

SessionData assemble_session(const SeriesFrame& frame, const SessionPlan& plan,
                             const PartitionParams& pp, bool normalize, bool kinematic) {
    SessionData data;
    const std::size_t m = kinematic ? 2 * pp.t_p - 1 : pp.t_p;
    const std::size_t n = kinematic ? 2 * pp.t_f - 1 : pp.t_f;
    data.train_x = Tensor(plan.train_window_count, m);
    data.train_y = Tensor(plan.train_window_count, n);
    for (std::size_t o = 0; o < plan.train_window_count; ++o) {
        const auto w = make_window(frame, plan.train_start + o, pp.t_p, pp.t_f, normalize);
        const auto in = assemble_input(w, kinematic);
        const auto out = assemble_target(w, kinematic);
        std::copy(in.begin(), in.end(), data.train_x.v.begin() + o * m);
        std::copy(out.begin(), out.end(), data.train_y.v.begin() + o * n);
    }
    data.test_x = Tensor(plan.test_window_count, m);
    data.test_windows.reserve(plan.test_window_count);
    for (std::size_t k = 0; k < plan.test_window_count; ++k) {
        auto w = make_window(frame, plan.test_input_start + k, pp.t_p, pp.t_f, normalize);
        const auto in = assemble_input(w, kinematic);
        std::copy(in.begin(), in.end(), data.test_x.v.begin() + k * m);
        data.test_windows.push_back(std::move(w));
    }
    return data;
}

WorkOutcome run_item(const RunConfig& config, const SeriesFrame& frame, const SessionPlan& plan,
                     const WorkItem& item) {
    WorkOutcome outcome;
    const auto& pp = config.partition;
    const bool normalize = config.arch_normalized(item.arch);
    const SessionData data = assemble_session(frame, plan, pp, normalize, item.kinematic);

    ModelConfig mc;
    mc.arch = item.arch;
    mc.input_dim = data.train_x.cols;
    mc.output_dim = data.train_y.cols;
    mc.kinematic = item.kinematic;
    mc.normalize = normalize;
    mc.params = config.arch_params;
    mc.seed = mix_seed(config.master_seed,
                       std::string(arch_name(item.arch)) + "/" +
                           (item.kinematic ? "kinn" : "ann"),
                       static_cast<std::uint64_t>(item.session));

    LossSpec loss = item.kinematic ? LossSpec::kinematic(static_cast<int>(pp.t_f))
                                   : LossSpec::mse();
    loss.velocity_supervision = config.velocity_supervision && item.kinematic;
    loss.consistency_weight = config.consistency_weight;

    ModelHandle model;
    try {
        if (item.arch == Arch::linear_closed_form) {
            model = fit_linear_closed_form(data.train_x, data.train_y, mc);
        } else if (item.arch == Arch::gmdh) {
            // time-ordered split: last fifth of the windows validates growth
            const std::size_t rows = data.train_x.rows;
            const std::size_t val = std::max<std::size_t>(1, rows / 5);
            const std::size_t fit = rows - val;
            auto head = [&](const Tensor& t) {
                Tensor out(fit, t.cols);
                std::copy(t.v.begin(), t.v.begin() + fit * t.cols, out.v.begin());
                return out;
            };
            auto tail = [&](const Tensor& t) {
                Tensor out(val, t.cols);
                std::copy(t.v.begin() + fit * t.cols, t.v.end(), out.v.begin());
                return out;
            };
            model = grow_gmdh(head(data.train_x), head(data.train_y), tail(data.train_x),
                              tail(data.train_y), mc);
        } else {
            model = build_model(mc, &data.train_x);
            TrainOptions opts;
            opts.epochs = config.epochs;
            opts.batch_size = config.batch_size;
            opts.adam.lr = config.lr;
            opts.seed = mix_seed(mc.seed, "train");
            const TrainResult tr = train_model(model, data.train_x, data.train_y, loss, opts);
            if (tr.diverged) {
                outcome.failed = true;
                outcome.reason = "training diverged to non-finite values";
                return outcome;
            }
        }

        const Tensor pred = predict_batch(model, data.test_x);
        std::vector<WindowForecast> forecasts;
        forecasts.reserve(data.test_windows.size());
        for (std::size_t k = 0; k < data.test_windows.size(); ++k) {
            const auto& w = data.test_windows[k];
            WindowForecast f;
            f.forecast =
                denormalize_forecast(pred.row_span(k).subspan(0, pp.t_f), w.norm);
            const std::size_t target_start = w.input_start + pp.t_p;
            f.actual.assign(frame.values.begin() + target_start,
                            frame.values.begin() + target_start + pp.t_f);
            for (std::size_t h = 0; h < pp.t_f; ++h) {
                outcome.trace.push_back(
                    {k, target_start + h, f.actual[h], f.forecast[h]});
            }
            forecasts.push_back(std::move(f));
        }
        outcome.metrics = session_metrics(plan.session_index, forecasts, config.pooling);
    } catch (const std::exception& e) {
        outcome.failed = true;
        outcome.reason = e.what();
        outcome.trace.clear();
    }
    return outcome;
}

void write_trace(const std::filesystem::path& path, const std::vector<TraceRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "day,actual,predicted\n";
    for (const auto& r : rows) {
        out << r.day << ',' << fmt(r.actual) << ',' << fmt(r.predicted) << '\n';
    }
}

}  // namespace

RunSummary run_experiment(const RunConfig& base_config) {
    RunConfig config = base_config;
    if (const char* env = std::getenv("KINN_OUTPUT_DIR"); env != nullptr && *env != '\0') {
        config.output_dir = env;
    }
    if (config.architectures.empty()) {
        throw std::invalid_argument("run: no architectures configured");
    }
    if (config.data_path.empty()) throw std::invalid_argument("run: no data file configured");
    if (config.partition.t_f < 2 && config.arms != Arms::baseline) {
        throw std::invalid_argument("run: kinematic arm needs t_f >= 2");
    }

    const SeriesFrame frame = load_series(config.data_path, 2 * config.partition.session_len);
    const auto plans = plan_sessions(frame, config.partition);

    std::vector<bool> arms;
    if (config.arms != Arms::kinn) arms.push_back(false);
    if (config.arms != Arms::baseline) arms.push_back(true);

    std::vector<WorkItem> items;
    for (Arch arch : config.architectures) {
        for (bool kinematic : arms) {
            for (const auto& plan : plans) {
                items.push_back({arch, kinematic, plan.session_index});
            }
        }
    }

    std::vector<WorkOutcome> outcomes(items.size());
    std::atomic<std::size_t> next{0};
    const std::size_t worker_count =
        std::max<std::size_t>(1, config.threads > 0 ? config.threads
                                                    : std::thread::hardware_concurrency());
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            outcomes[i] = run_item(config, frame, plans[items[i].session], items[i]);
        }
    };
    if (worker_count == 1 || items.size() == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(worker_count, items.size()); ++t) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) t.join();
    }

    // single collector: group, drop sessions that failed in either arm, write
    std::filesystem::create_directories(config.output_dir);
    const auto traces_dir = config.output_dir / "traces";
    std::filesystem::create_directories(traces_dir);

    RunSummary summary;
    summary.output_dir = config.output_dir;
    summary.session_count = plans.size();

    std::map<std::pair<Arch, bool>, std::map<int, const WorkOutcome*>> grouped;
    for (std::size_t i = 0; i < items.size(); ++i) {
        grouped[{items[i].arch, items[i].kinematic}][items[i].session] = &outcomes[i];
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (outcomes[i].failed) {
            summary.failures.push_back({arch_name(items[i].arch),
                                        items[i].kinematic ? "kinn" : "ann", items[i].session,
                                        outcomes[i].reason});
        }
    }

    for (Arch arch : config.architectures) {
        ModelComparison cmp;
        cmp.model = arch_name(arch);
        const bool run_base = config.arms != Arms::kinn;
        const bool run_kinn = config.arms != Arms::baseline;
        for (const auto& plan : plans) {
            const WorkOutcome* base =
                run_base ? grouped[{arch, false}][plan.session_index] : nullptr;
            const WorkOutcome* kin =
                run_kinn ? grouped[{arch, true}][plan.session_index] : nullptr;
            if ((base != nullptr && base->failed) || (kin != nullptr && kin->failed)) {
                continue;  // drop the pair so the arms stay aligned
            }
            if (base != nullptr) cmp.baseline.push_back(base->metrics);
            if (kin != nullptr) cmp.kinn.push_back(kin->metrics);
            for (const auto& [arm, outcome] :
                 {std::pair{"ann", base}, std::pair{"kinn", kin}}) {
                if (outcome == nullptr) continue;
                write_trace(traces_dir / (cmp.model + "_" + arm + "_s" +
                                          std::to_string(plan.session_index) + ".csv"),
                            outcome->trace);
            }
        }
        if (!cmp.baseline.empty()) cmp.baseline_mape = mape_stats(cmp.baseline);
        if (!cmp.kinn.empty()) cmp.kinn_mape = mape_stats(cmp.kinn);
        if (!cmp.baseline.empty() && !cmp.kinn.empty()) {
            std::vector<double> b, k;
            for (const auto& r : cmp.baseline) b.push_back(r.mape);
            for (const auto& r : cmp.kinn) k.push_back(r.mape);
            cmp.wilcoxon = wilcoxon_one_sided(b, k);
        }
        summary.comparisons.push_back(std::move(cmp));
    }

    write_sessions_csv(config.output_dir / "sessions.csv", summary.comparisons);
    write_summary_csv(config.output_dir / "summary.csv", summary.comparisons);

    if (!summary.failures.empty()) {
        std::ofstream out(config.output_dir / "failures.csv");
        out << "model,arm,session,reason\n";
        for (const auto& f : summary.failures) {
            out << f.model << ',' << f.arm << ',' << f.session << ",\"" << f.reason << "\"\n";
        }
    }

    nlohmann::json meta;
    meta["version"] = "kinn 0.1.0";
    meta["timestamp"] = static_cast<std::int64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
    meta["data"] = config.data_path.string();
    meta["rows"] = frame.size();
    meta["sessions"] = plans.size();
    meta["t_p"] = config.partition.t_p;
    meta["t_f"] = config.partition.t_f;
    meta["session_len"] = config.partition.session_len;
    meta["train_obs"] = config.partition.train_obs;
    meta["epochs"] = config.epochs;
    meta["batch_size"] = config.batch_size;
    meta["lr"] = config.lr;
    meta["adam_beta1"] = 0.9;
    meta["adam_beta2"] = 0.999;
    meta["adam_eps"] = 1e-8;
    meta["seed"] = config.master_seed;
    meta["seed_rule"] = "fnv1a(master, arch/arm, session)";
    meta["arms"] = config.arms == Arms::both ? "both"
                   : config.arms == Arms::kinn ? "kinn"
                                               : "baseline";
    meta["mape_pooling"] = config.pooling == MapePooling::days ? "days" : "windows";
    meta["velocity_supervision"] = config.velocity_supervision;
    meta["consistency_weight"] = config.consistency_weight;
    meta["threads"] = worker_count;
    nlohmann::json archs = nlohmann::json::array();
    for (Arch a : config.architectures) {
        archs.push_back({{"name", arch_name(a)}, {"normalize", config.arch_normalized(a)}});
    }
    meta["architectures"] = archs;
    if (config.batch_size > config.partition.train_obs) {
        meta["batch_note"] = "batch_size exceeds the training windows per session; each epoch "
                             "takes a single full-batch step";
    }
    if (!summary.failures.empty()) meta["failed_items"] = summary.failures.size();
    std::ofstream meta_out(config.output_dir / "run_metadata.json");
    meta_out << meta.dump(2) << '\n';

    return summary;
}

void emit_plot_data(const std::filesystem::path& run_dir, const std::string& arch,
                    const std::string& arm, const std::filesystem::path& out_csv) {
    const auto meta_path = run_dir / "run_metadata.json";
    std::ifstream meta_in(meta_path);
    if (!meta_in) throw std::runtime_error("missing run metadata " + meta_path.string());
    const auto meta = nlohmann::json::parse(meta_in);
    const auto t_f = meta.at("t_f").get<std::size_t>();
    const auto sessions = meta.at("sessions").get<std::size_t>();

    std::ofstream out(out_csv);
    if (!out) throw std::runtime_error("cannot write " + out_csv.string());
    out << "session,window,day,actual,predicted\n";
    bool found = false;
    for (std::size_t s = 0; s < sessions; ++s) {
        const auto trace_path =
            run_dir / "traces" / (arch + "_" + arm + "_s" + std::to_string(s) + ".csv");
        std::ifstream in(trace_path);
        if (!in) continue;  // session may have been dropped as failed
        found = true;
        std::string line;
        std::getline(in, line);  // header
        std::size_t row = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            out << s << ',' << row / t_f << ',' << line << '\n';
            ++row;
        }
    }
    if (!found) {
        throw std::runtime_error("no traces found for " + arch + " " + arm + " under " +
                                 (run_dir / "traces").string());
    }
}

}  // namespace kinn
