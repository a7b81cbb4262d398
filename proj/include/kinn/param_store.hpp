#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kinn/rng.hpp"
#include "kinn/tensor.hpp"

namespace kinn::ad {

struct AdamConfig {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Named parameter tensors with adam moment state. The step counter is shared
// by all parameters: one optimizer step advances it once.
class ParamStore {
   public:
    std::uint32_t add(std::string name, Tensor value);
    std::uint32_t add_uniform(std::string name, std::size_t rows, std::size_t cols,
                              std::size_t fan_in, Rng& rng);

    std::size_t count() const { return entries_.size(); }
    std::uint64_t step_count() const { return step_; }

    const std::string& name(std::uint32_t id) const { return entries_[id].name; }
    Tensor& value(std::uint32_t id) { return entries_[id].value; }
    const Tensor& value(std::uint32_t id) const { return entries_[id].value; }
    Tensor& value(std::string_view name);
    const Tensor& value(std::string_view name) const;
    std::optional<std::uint32_t> find(std::string_view name) const;

    std::size_t total_parameters() const;

    void adam_step(const std::vector<Tensor>& grads_by_id, const AdamConfig& cfg);
    // Named variant; parameters missing from the map are treated as having
    // zero gradient.
    void adam_step(const std::map<std::string, Tensor>& grads, const AdamConfig& cfg);

   private:
    struct Entry {
        std::string name;
        Tensor value;
        Tensor m;  // first moment
        Tensor s;  // second moment
    };

    void apply(Entry& e, const Tensor* grad, const AdamConfig& cfg, double bc1, double bc2);

    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::uint64_t step_ = 0;
};

}  // namespace kinn::ad
