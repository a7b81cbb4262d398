#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "kinn/linalg.hpp"
#include "kinn/loss.hpp"
#include "kinn/models.hpp"
#include "kinn/rng.hpp"

namespace kinn {

using ad::Graph;
using ad::ParamStore;
using ad::Tensor;

namespace {

struct Readout {
    Tensor w;  // features x outputs
    Tensor b;  // 1 x outputs
};

Readout fit_readout(const Tensor& features, const Tensor& targets) {
    Tensor design(features.rows, features.cols + 1);
    for (std::size_t i = 0; i < features.rows; ++i) {
        for (std::size_t j = 0; j < features.cols; ++j) design.at(i, j) = features.at(i, j);
        design.at(i, features.cols) = 1.0;
    }
    Tensor solution = least_squares(design, targets);
    Readout r;
    r.w = Tensor(features.cols, targets.cols);
    r.b = Tensor(1, targets.cols);
    for (std::size_t j = 0; j < targets.cols; ++j) {
        for (std::size_t i = 0; i < features.cols; ++i) r.w.at(i, j) = solution.at(i, j);
        r.b.at(0, j) = solution.at(features.cols, j);
    }
    return r;
}

Tensor apply_readout(const Tensor& features, const Readout& r) {
    Tensor out = ad::matmul(features, r.w);
    for (std::size_t i = 0; i < out.rows; ++i) {
        for (std::size_t j = 0; j < out.cols; ++j) out.at(i, j) += r.b.at(0, j);
    }
    return out;
}

double matrix_mse(const Tensor& a, const Tensor& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.v[i] - b.v[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

Tensor column(const Tensor& m, std::size_t j) {
    Tensor out(m.rows, 1);
    for (std::size_t i = 0; i < m.rows; ++i) out.v[i] = m.at(i, j);
    return out;
}

struct FittedCandidate {
    double wi = 0.0, wj = 0.0, w0 = 0.0;
    double score = std::numeric_limits<double>::infinity();
};

// Quadratic pair neuron with a throwaway affine readout, fitted by adam
// against the residual; scored by validation MSE of the same readout.
FittedCandidate fit_candidate(const Tensor& fi, const Tensor& fj, const Tensor& resid,
                              const Tensor& fi_val, const Tensor& fj_val,
                              const Tensor& resid_val, const ArchParams& params, Rng& rng) {
    ParamStore store;
    const double wb = 1.0 / std::sqrt(2.0);
    store.add("wi", Tensor::scalar(rng.uniform(-wb, wb)));
    store.add("wj", Tensor::scalar(rng.uniform(-wb, wb)));
    store.add("w0", Tensor::scalar(rng.uniform(-wb, wb)));
    Tensor a(1, resid.cols), c(1, resid.cols);
    for (double& x : a.v) x = rng.uniform(-1.0, 1.0);
    for (double& x : c.v) x = rng.uniform(-1.0, 1.0);
    store.add("a", std::move(a));
    store.add("c", std::move(c));

    Graph g;
    auto in_i = g.input("fi", ad::kDynamicRows, 1);
    auto in_j = g.input("fj", ad::kDynamicRows, 1);
    auto in_r = g.input("r", ad::kDynamicRows, resid.cols);
    auto u = g.broadcast_add(g.add(g.broadcast_mul(in_i, g.param(*store.find("wi"))),
                                   g.broadcast_mul(in_j, g.param(*store.find("wj")))),
                             g.param(*store.find("w0")));
    auto feature = g.square(u);
    auto pred = g.affine(feature, g.param(*store.find("a")), g.param(*store.find("c")));
    g.set_output(g.mean_all(g.square(g.sub(pred, in_r))));

    ad::Inputs train_in{{"fi", fi}, {"fj", fj}, {"r", resid}};
    ad::AdamConfig adam{.lr = params.gmdh_candidate_lr};
    FittedCandidate out;
    try {
        for (std::size_t step = 0; step < params.gmdh_candidate_steps; ++step) {
            auto res = ad::backward(g, train_in, store);
            store.adam_step(res.grads_by_id, adam);
        }
        ad::Inputs val_in{{"fi", fi_val}, {"fj", fj_val}, {"r", resid_val}};
        out.score = evaluate(g, val_in, store).v[0];
    } catch (const std::runtime_error&) {
        return out;  // diverged; keep infinite score
    }
    out.wi = store.value("wi").v[0];
    out.wj = store.value("wj").v[0];
    out.w0 = store.value("w0").v[0];
    return out;
}

struct GrownLayer {
    GmdhStructure::Layer topology;
    Tensor a;  // prev features x kept
    Tensor b;  // 1 x kept
};

Tensor layer_features(const Tensor& features, const GrownLayer& layer) {
    Tensor out = ad::matmul(features, layer.a);
    for (std::size_t i = 0; i < out.rows; ++i) {
        for (std::size_t j = 0; j < out.cols; ++j) {
            const double u = out.at(i, j) + layer.b.at(0, j);
            out.at(i, j) = u * u;
        }
    }
    return out;
}

}  // namespace

ModelHandle grow_gmdh(const Tensor& train_x, const Tensor& train_y, const Tensor& val_x,
                      const Tensor& val_y, ModelConfig config) {
    if (train_x.cols < 2) {
        throw std::invalid_argument("gmdh: need at least two input features");
    }
    if (val_x.rows == 0) {
        throw std::invalid_argument("gmdh: validation split must be non-empty");
    }
    if (train_x.rows != train_y.rows || val_x.rows != val_y.rows ||
        train_x.cols != val_x.cols || train_y.cols != val_y.cols) {
        throw std::invalid_argument("gmdh: inconsistent matrix shapes");
    }
    config.arch = Arch::gmdh;
    config.input_dim = train_x.cols;
    config.output_dim = train_y.cols;

    Rng rng(mix_seed(config.seed, "gmdh"));
    const std::size_t select_k = config.params.gmdh_select_k > 0
                                     ? config.params.gmdh_select_k
                                     : 2 * config.input_dim + 1;

    std::vector<GrownLayer> grown;
    Tensor f_train = train_x;
    Tensor f_val = val_x;

    Readout readout = fit_readout(f_train, train_y);
    double best_val = matrix_mse(apply_readout(f_val, readout), val_y);
    std::size_t best_depth = 0;
    Readout best_readout = readout;

    Tensor resid_train = train_y, resid_val = val_y;
    auto refresh_residuals = [&](const Readout& r) {
        Tensor pt = apply_readout(f_train, r);
        Tensor pv = apply_readout(f_val, r);
        for (std::size_t i = 0; i < resid_train.size(); ++i) {
            resid_train.v[i] = train_y.v[i] - pt.v[i];
        }
        for (std::size_t i = 0; i < resid_val.size(); ++i) resid_val.v[i] = val_y.v[i] - pv.v[i];
    };
    refresh_residuals(readout);

    for (std::size_t depth = 1; depth <= config.params.gmdh_max_layers; ++depth) {
        const std::size_t fcount = f_train.cols;
        if (fcount < 2) break;
        std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
        pairs.reserve(fcount * (fcount - 1) / 2);
        for (std::uint32_t i = 0; i < fcount; ++i) {
            for (std::uint32_t j = i + 1; j < fcount; ++j) pairs.emplace_back(i, j);
        }
        if (pairs.size() > config.params.gmdh_candidate_cap) {
            rng.shuffle(pairs);
            pairs.resize(config.params.gmdh_candidate_cap);
        }

        std::vector<FittedCandidate> fits(pairs.size());
        for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
            const auto [i, j] = pairs[idx];
            fits[idx] = fit_candidate(column(f_train, i), column(f_train, j), resid_train,
                                      column(f_val, i), column(f_val, j), resid_val,
                                      config.params, rng);
        }

        std::vector<std::size_t> order(pairs.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return fits[a].score < fits[b].score;
        });
        const std::size_t kept = std::min(select_k, order.size());
        if (kept == 0 || !std::isfinite(fits[order[0]].score)) break;

        GrownLayer layer;
        layer.a = Tensor(fcount, kept);
        layer.b = Tensor(1, kept);
        for (std::size_t k = 0; k < kept; ++k) {
            const auto& fit = fits[order[k]];
            const auto [i, j] = pairs[order[k]];
            layer.topology.pairs.emplace_back(i, j);
            layer.a.at(i, k) = fit.wi;
            layer.a.at(j, k) = fit.wj;
            layer.b.at(0, k) = fit.w0;
        }

        Tensor next_train = layer_features(f_train, layer);
        Tensor next_val = layer_features(f_val, layer);
        if (!next_train.all_finite() || !next_val.all_finite()) break;
        f_train = std::move(next_train);
        f_val = std::move(next_val);
        grown.push_back(std::move(layer));

        readout = fit_readout(f_train, train_y);
        const double val_mse = matrix_mse(apply_readout(f_val, readout), val_y);
        if (val_mse < best_val) {
            best_val = val_mse;
            best_depth = depth;
            best_readout = readout;
        } else {
            break;  // validation stopped improving
        }
        refresh_residuals(readout);
    }

    ModelHandle handle;
    handle.config = config;
    for (std::size_t depth = 0; depth < best_depth; ++depth) {
        const std::string p = "gmdh.L" + std::to_string(depth) + ".";
        handle.params.add(p + "A", grown[depth].a);
        handle.params.add(p + "b", grown[depth].b);
        handle.gmdh.layers.push_back(grown[depth].topology);
    }
    handle.params.add("gmdh.out.W", best_readout.w);
    handle.params.add("gmdh.out.b", best_readout.b);
    handle.graph = build_predict_graph(handle, 1);
    return handle;
}

}  // namespace kinn
