#include "kinn/trainer.hpp"

#include <map>
#include <stdexcept>

#include "kinn/rng.hpp"

namespace kinn {

using ad::Graph;
using ad::Tensor;

namespace {

Graph build_training_graph(const ModelHandle& model, std::size_t batch_rows,
                           const LossSpec& loss) {
    Graph g = build_predict_graph(model, batch_rows);
    const auto pred = g.output();
    const auto rows = model.config.arch == Arch::attention ? batch_rows : ad::kDynamicRows;
    const auto target = g.input("y", rows, model.config.output_dim);
    g.set_output(append_loss(g, pred, target, loss));
    return g;
}

Tensor gather_rows(const Tensor& m, const std::vector<std::size_t>& idx, std::size_t lo,
                   std::size_t hi) {
    Tensor out(hi - lo, m.cols);
    for (std::size_t r = lo; r < hi; ++r) {
        const double* src = m.v.data() + idx[r] * m.cols;
        std::copy(src, src + m.cols, out.v.begin() + (r - lo) * m.cols);
    }
    return out;
}

}  // namespace

TrainResult train_model(ModelHandle& model, const Tensor& inputs, const Tensor& targets,
                        const LossSpec& loss, const TrainOptions& options) {
    if (arch_self_fitting(model.config.arch)) {
        throw std::invalid_argument("train_model: architecture is fitted in closed form");
    }
    if (inputs.rows == 0 || inputs.rows != targets.rows) {
        throw std::invalid_argument("train_model: bad training matrix shapes");
    }
    if (inputs.cols != model.config.input_dim || targets.cols != model.config.output_dim) {
        throw std::invalid_argument("train_model: matrices do not match model dimensions");
    }
    if (loss.kind == LossSpec::Kind::kinematic &&
        targets.cols != static_cast<std::size_t>(2 * loss.t_f - 1)) {
        throw std::invalid_argument("train_model: kinematic loss requires 2*T_f-1 outputs");
    }

    const std::size_t rows = inputs.rows;
    const bool full_batch = options.batch_size >= rows;
    std::map<std::size_t, Graph> graph_cache;
    auto graph_for = [&](std::size_t b) -> const Graph& {
        auto it = graph_cache.find(b);
        if (it == graph_cache.end()) {
            it = graph_cache.emplace(b, build_training_graph(model, b, loss)).first;
        }
        return it->second;
    };

    Rng rng(mix_seed(options.seed, "batches"));
    std::vector<std::size_t> order(rows);
    for (std::size_t i = 0; i < rows; ++i) order[i] = i;

    TrainResult result;
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        if (!full_batch) rng.shuffle(order);
        for (std::size_t lo = 0; lo < rows; lo += options.batch_size) {
            const std::size_t hi = std::min(lo + options.batch_size, rows);
            ad::Inputs bound;
            if (full_batch) {
                bound.emplace("x", inputs);
                bound.emplace("y", targets);
            } else {
                bound.emplace("x", gather_rows(inputs, order, lo, hi));
                bound.emplace("y", gather_rows(targets, order, lo, hi));
            }
            try {
                auto back = ad::backward(graph_for(hi - lo), bound, model.params);
                model.params.adam_step(back.grads_by_id, options.adam);
                result.final_loss = back.loss;
                ++result.steps;
            } catch (const std::runtime_error&) {
                result.diverged = true;
                return result;
            }
        }
    }
    return result;
}

}  // namespace kinn
