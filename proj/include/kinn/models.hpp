#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kinn/graph.hpp"
#include "kinn/param_store.hpp"

namespace kinn {

enum class Arch {
    linear_closed_form,
    linear_sgd,
    mlp_relu,
    mlp_sigmoid,
    mlp_tanh,
    rbf,
    kgate,
    gmdh,
    attention,
};

const char* arch_name(Arch arch);
Arch parse_arch(std::string_view name);
std::vector<Arch> all_archs();
// Saturating or scale-sensitive architectures default to per-window
// normalization; the rest train on raw levels.
bool arch_default_normalize(Arch arch);
// Architectures fitted by their own procedure rather than the adam loop.
bool arch_self_fitting(Arch arch);

struct ArchParams {
    std::size_t rbf_centers = 0;    // 0 = 2m+1
    std::size_t gmdh_select_k = 0;  // 0 = 2m+1
    std::size_t gmdh_max_layers = 4;
    std::size_t gmdh_candidate_cap = 2000;
    std::size_t gmdh_candidate_steps = 200;
    double gmdh_candidate_lr = 0.05;
    std::size_t attention_width = 8;
};

struct ModelConfig {
    Arch arch = Arch::linear_sgd;
    std::size_t input_dim = 0;   // m
    std::size_t output_dim = 0;  // n
    bool kinematic = false;
    bool normalize = false;
    std::uint64_t seed = 0;
    ArchParams params;
};

// Retained GMDH topology: layer k's neuron j squares an affine combination
// of feature pair `pairs[j]` from layer k-1 (layer 0 features = raw inputs).
struct GmdhStructure {
    struct Layer {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    };
    std::vector<Layer> layers;
};

struct ModelHandle {
    ModelConfig config;
    ad::ParamStore params;
    GmdhStructure gmdh;
    ad::Graph graph;  // single-row prediction graph: input "x" (1 x m) -> (1 x n)
};

// Builds a freshly initialized model. train_inputs (rows x m), when given,
// seeds data-dependent initialization (RBF centers and widths).
ModelHandle build_model(const ModelConfig& config, const ad::Tensor* train_inputs = nullptr);

// Prediction graph for a given batch row count. Architectures with
// row-independent math return a dynamic-row graph; attention unrolls the
// batch explicitly.
ad::Graph build_predict_graph(const ModelHandle& handle, std::size_t batch_rows);

// Ordinary least squares y = W x + b solved in closed form (stable
// factorization, ridge fallback on rank deficiency).
ModelHandle fit_linear_closed_form(const ad::Tensor& x, const ad::Tensor& y, ModelConfig config);

// Self-organizing growth: per layer, fit quadratic pair neurons against the
// current residual, keep the best select_k by validation error, refit a
// least-squares readout, and return the best-validation snapshot.
ModelHandle grow_gmdh(const ad::Tensor& train_x, const ad::Tensor& train_y,
                      const ad::Tensor& val_x, const ad::Tensor& val_y, ModelConfig config);

std::vector<double> predict(const ModelHandle& handle, std::span<const double> input);
ad::Tensor predict_batch(const ModelHandle& handle, const ad::Tensor& inputs);

// JSON snapshot: config header, gmdh topology when present, parameter dump.
void save_model(const ModelHandle& handle, const std::filesystem::path& path);
ModelHandle load_model(const std::filesystem::path& path);

}  // namespace kinn
