#include "kinn/param_store.hpp"

#include <cmath>
#include <stdexcept>

namespace kinn::ad {

std::uint32_t ParamStore::add(std::string name, Tensor value) {
    if (index_.contains(name)) {
        throw std::invalid_argument("param store: duplicate parameter name " + name);
    }
    Entry e;
    e.name = std::move(name);
    e.m = Tensor(value.rows, value.cols);
    e.s = Tensor(value.rows, value.cols);
    e.value = std::move(value);
    entries_.push_back(std::move(e));
    const auto id = static_cast<std::uint32_t>(entries_.size() - 1);
    index_.emplace(entries_.back().name, id);
    return id;
}

std::uint32_t ParamStore::add_uniform(std::string name, std::size_t rows, std::size_t cols,
                                      std::size_t fan_in, Rng& rng) {
    Tensor t(rows, cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
    for (double& x : t.v) x = rng.uniform(-bound, bound);
    return add(std::move(name), std::move(t));
}

Tensor& ParamStore::value(std::string_view name) {
    auto id = find(name);
    if (!id) throw std::invalid_argument("param store: unknown parameter " + std::string(name));
    return entries_[*id].value;
}

const Tensor& ParamStore::value(std::string_view name) const {
    auto id = find(name);
    if (!id) throw std::invalid_argument("param store: unknown parameter " + std::string(name));
    return entries_[*id].value;
}

std::optional<std::uint32_t> ParamStore::find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t ParamStore::total_parameters() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
}

void ParamStore::apply(Entry& e, const Tensor* grad, const AdamConfig& cfg, double bc1,
                       double bc2) {
    const std::size_t n = e.value.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad ? grad->v[i] : 0.0;
        e.m.v[i] = cfg.beta1 * e.m.v[i] + (1.0 - cfg.beta1) * g;
        e.s.v[i] = cfg.beta2 * e.s.v[i] + (1.0 - cfg.beta2) * g * g;
        const double mhat = e.m.v[i] / bc1;
        const double shat = e.s.v[i] / bc2;
        e.value.v[i] -= cfg.lr * mhat / (std::sqrt(shat) + cfg.eps);
    }
}

void ParamStore::adam_step(const std::vector<Tensor>& grads_by_id, const AdamConfig& cfg) {
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
    for (std::size_t id = 0; id < entries_.size(); ++id) {
        const Tensor* g = nullptr;
        if (id < grads_by_id.size() && !grads_by_id[id].empty()) {
            if (!grads_by_id[id].same_shape(entries_[id].value)) {
                throw std::invalid_argument("adam: gradient shape mismatch for " +
                                            entries_[id].name);
            }
            g = &grads_by_id[id];
        }
        apply(entries_[id], g, cfg, bc1, bc2);
    }
}

void ParamStore::adam_step(const std::map<std::string, Tensor>& grads, const AdamConfig& cfg) {
    std::vector<Tensor> by_id(entries_.size());
    for (const auto& [name, g] : grads) {
        auto id = find(name);
        if (!id) throw std::invalid_argument("adam: gradient for unknown parameter " + name);
        by_id[*id] = g;
    }
    adam_step(by_id, cfg);
}

}  // namespace kinn::ad
