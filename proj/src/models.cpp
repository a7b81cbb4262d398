#include "kinn/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "kinn/linalg.hpp"
#include "kinn/rng.hpp"

namespace kinn {

using ad::Graph;
using ad::NodeId;
using ad::ParamStore;
using ad::Tensor;

const char* arch_name(Arch arch) {
    switch (arch) {
        case Arch::linear_closed_form: return "linear_closed_form";
        case Arch::linear_sgd: return "linear_sgd";
        case Arch::mlp_relu: return "mlp_relu";
        case Arch::mlp_sigmoid: return "mlp_sigmoid";
        case Arch::mlp_tanh: return "mlp_tanh";
        case Arch::rbf: return "rbf";
        case Arch::kgate: return "kgate";
        case Arch::gmdh: return "gmdh";
        case Arch::attention: return "attention";
    }
    return "?";
}

Arch parse_arch(std::string_view name) {
    for (Arch a : all_archs()) {
        if (name == arch_name(a)) return a;
    }
    throw std::invalid_argument("unknown architecture '" + std::string(name) + "'");
}

std::vector<Arch> all_archs() {
    return {Arch::linear_closed_form, Arch::linear_sgd, Arch::mlp_relu,
            Arch::mlp_sigmoid,        Arch::mlp_tanh,   Arch::rbf,
            Arch::kgate,              Arch::gmdh,       Arch::attention};
}

bool arch_default_normalize(Arch arch) {
    switch (arch) {
        case Arch::linear_closed_form:
        case Arch::linear_sgd:
        case Arch::mlp_relu:
        case Arch::kgate:
            return false;
        default:
            return true;
    }
}

bool arch_self_fitting(Arch arch) {
    return arch == Arch::linear_closed_form || arch == Arch::gmdh;
}

namespace {

void check_dims(const ModelConfig& c) {
    if (c.input_dim == 0 || c.output_dim == 0) {
        throw std::invalid_argument("model config: zero input or output dimension");
    }
}

struct MlpNames {
    std::string w1 = "mlp.W1", b1 = "mlp.b1";
    std::string w2 = "mlp.W2", b2 = "mlp.b2";
    std::string w3 = "mlp.W3", b3 = "mlp.b3";
};

void create_mlp_params(const ModelConfig& c, ParamStore& store, Rng& rng) {
    const std::size_t m = c.input_dim, h1 = m, h2 = 2 * m + 1, n = c.output_dim;
    MlpNames names;
    store.add_uniform(names.w1, m, h1, m, rng);
    store.add_uniform(names.b1, 1, h1, m, rng);
    store.add_uniform(names.w2, h1, h2, h1, rng);
    store.add_uniform(names.b2, 1, h2, h1, rng);
    store.add_uniform(names.w3, h2, n, h2, rng);
    store.add_uniform(names.b3, 1, n, h2, rng);
}

void create_kgate_params(const ModelConfig& c, ParamStore& store, Rng& rng) {
    const std::size_t m = c.input_dim, n = c.output_dim;
    const std::size_t widths[2] = {m, 2 * m + 1};
    std::size_t trunk_in = m;
    for (int layer = 0; layer < 2; ++layer) {
        const std::string p = "kgate.L" + std::to_string(layer + 1) + ".";
        const std::size_t h = widths[layer];
        store.add_uniform(p + "W", trunk_in, h, trunk_in, rng);
        store.add_uniform(p + "b", 1, h, trunk_in, rng);
        store.add_uniform(p + "Wt", m, h, m, rng);
        store.add_uniform(p + "bt", 1, h, m, rng);
        store.add_uniform(p + "Wa", m, h, m, rng);
        store.add_uniform(p + "ba", 1, h, m, rng);
        store.add_uniform(p + "Ws", m, h, m, rng);
        store.add_uniform(p + "bs", 1, h, m, rng);
        trunk_in = h;
    }
    store.add_uniform("kgate.out.W", trunk_in, n, trunk_in, rng);
    store.add_uniform("kgate.out.b", 1, n, trunk_in, rng);
}

std::size_t rbf_center_count(const ModelConfig& c) {
    return c.params.rbf_centers > 0 ? c.params.rbf_centers : 2 * c.input_dim + 1;
}

void create_rbf_params(const ModelConfig& c, ParamStore& store, Rng& rng,
                       const Tensor* train_inputs) {
    const std::size_t m = c.input_dim, n = c.output_dim, k = rbf_center_count(c);
    if (k < 1) throw std::invalid_argument("rbf: center count must be positive");

    Tensor centers(k, m);
    if (train_inputs != nullptr && train_inputs->rows > 0) {
        // centers = random training inputs, without replacement while they last
        std::vector<std::size_t> order(train_inputs->rows);
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        for (std::size_t ci = 0; ci < k; ++ci) {
            const std::size_t row = ci < order.size() ? order[ci] : rng.index(train_inputs->rows);
            for (std::size_t j = 0; j < m; ++j) centers.at(ci, j) = train_inputs->at(row, j);
        }
    } else {
        for (double& x : centers.v) x = rng.uniform(-1.0, 1.0);
    }

    // width so that the median pairwise center distance has unit exponent
    std::vector<double> dists;
    dists.reserve(k * (k - 1) / 2);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
            double d = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const double diff = centers.at(a, j) - centers.at(b, j);
                d += diff * diff;
            }
            dists.push_back(d);
        }
    }
    double width = 1.0;
    if (!dists.empty()) {
        std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
        const double med = dists[dists.size() / 2];
        if (med > 0.0) width = 1.0 / med;
    }

    store.add("rbf.centers", std::move(centers));
    store.add("rbf.log_widths", Tensor::filled(1, k, std::log(width)));
    store.add_uniform("rbf.W", k, n, k, rng);
    store.add_uniform("rbf.b", 1, n, k, rng);
}

void create_attention_params(const ModelConfig& c, ParamStore& store, Rng& rng) {
    const std::size_t len = c.input_dim, n = c.output_dim, d = c.params.attention_width;
    if (d < 1) throw std::invalid_argument("attention: width must be positive");
    store.add_uniform("attn.lift.w", d, 1, 1, rng);
    store.add_uniform("attn.lift.b", d, 1, 1, rng);
    store.add_uniform("attn.pos", d, len, 1, rng);
    for (int layer = 1; layer <= 2; ++layer) {
        const std::string p = "attn.L" + std::to_string(layer) + ".";
        for (const char* gate : {"q", "k", "v"}) {
            store.add_uniform(p + "W" + gate, d, d, d, rng);
            store.add_uniform(p + "b" + gate, d, 1, d, rng);
        }
    }
    store.add_uniform("attn.out.W", d * len, n, d * len, rng);
    store.add_uniform("attn.out.b", 1, n, d * len, rng);
}

void create_linear_params(const ModelConfig& c, ParamStore& store, Rng& rng) {
    store.add_uniform("linear.W", c.input_dim, c.output_dim, c.input_dim, rng);
    store.add_uniform("linear.b", 1, c.output_dim, c.input_dim, rng);
}

NodeId pid(const ParamStore& store, Graph& g, const std::string& name) {
    auto id = store.find(name);
    if (!id) throw std::logic_error("model graph: missing parameter " + name);
    return g.param(*id);
}

NodeId build_mlp_graph(Graph& g, const ParamStore& store, const ModelConfig& c, NodeId x) {
    auto act = [&](NodeId v) -> NodeId {
        switch (c.arch) {
            case Arch::mlp_relu: return g.relu(v);
            case Arch::mlp_sigmoid: return g.sigmoid(v);
            case Arch::mlp_tanh: return g.tanh(v);
            default: return v;  // linear_sgd: identity
        }
    };
    auto h1 = act(g.affine(x, pid(store, g, "mlp.W1"), pid(store, g, "mlp.b1")));
    auto h2 = act(g.affine(h1, pid(store, g, "mlp.W2"), pid(store, g, "mlp.b2")));
    return g.affine(h2, pid(store, g, "mlp.W3"), pid(store, g, "mlp.b3"));
}

NodeId build_kgate_graph(Graph& g, const ParamStore& store, NodeId x) {
    NodeId trunk = x;
    for (int layer = 1; layer <= 2; ++layer) {
        const std::string p = "kgate.L" + std::to_string(layer) + ".";
        auto main = g.affine(trunk, pid(store, g, p + "W"), pid(store, g, p + "b"));
        auto shift = g.hadamard(g.tanh(g.affine(x, pid(store, g, p + "Wt"), pid(store, g, p + "bt"))),
                                g.affine(x, pid(store, g, p + "Wa"), pid(store, g, p + "ba")));
        auto gate = g.sigmoid(g.affine(x, pid(store, g, p + "Ws"), pid(store, g, p + "bs")));
        trunk = g.hadamard(g.add(main, shift), gate);
    }
    return g.affine(trunk, pid(store, g, "kgate.out.W"), pid(store, g, "kgate.out.b"));
}

NodeId build_rbf_graph(Graph& g, const ParamStore& store, NodeId x) {
    auto dist = g.pairwise_sqdist(x, pid(store, g, "rbf.centers"));
    auto widths = g.exp(pid(store, g, "rbf.log_widths"));
    auto response = g.exp(g.scale(g.broadcast_mul(dist, widths), -1.0));
    return g.affine(response, pid(store, g, "rbf.W"), pid(store, g, "rbf.b"));
}

// One sample: tokens = input components lifted to width d; two dot-product
// attention layers; flatten; linear readout.
NodeId build_attention_row(Graph& g, const ParamStore& store, const ModelConfig& c,
                           NodeId x_row) {
    const std::size_t len = c.input_dim, d = c.params.attention_width;
    auto lifted = g.matmul(pid(store, g, "attn.lift.w"), x_row);       // d x L
    lifted = g.broadcast_add(lifted, pid(store, g, "attn.lift.b"));
    auto tokens = g.add(lifted, pid(store, g, "attn.pos"));
    const double inv_len = 1.0 / static_cast<double>(len);

    for (int layer = 1; layer <= 2; ++layer) {
        const std::string p = "attn.L" + std::to_string(layer) + ".";
        auto q = g.broadcast_add(g.matmul(pid(store, g, p + "Wq"), tokens),
                                 pid(store, g, p + "bq"));
        auto k = g.broadcast_add(g.matmul(pid(store, g, p + "Wk"), tokens),
                                 pid(store, g, p + "bk"));
        auto v = g.broadcast_add(g.matmul(pid(store, g, p + "Wv"), tokens),
                                 pid(store, g, p + "bv"));
        // mean squared column norm of K and Q sets the score scale
        auto dk = g.scale(g.sum_all(g.square(k)), inv_len);
        auto dq = g.scale(g.sum_all(g.square(q)), inv_len);
        auto scores = g.scalar_div(g.matmul(g.transpose(q), k), g.add(dk, dq));
        auto attn = g.softmax_cols(scores);          // L x L, columns sum to 1
        tokens = g.matmul(v, g.transpose(attn));     // d x L
    }
    auto flat = g.reshape(tokens, 1, d * len);
    return g.affine(flat, pid(store, g, "attn.out.W"), pid(store, g, "attn.out.b"));
}

NodeId build_gmdh_graph(Graph& g, const ParamStore& store, const GmdhStructure& structure,
                        NodeId x) {
    NodeId features = x;
    for (std::size_t layer = 0; layer < structure.layers.size(); ++layer) {
        const std::string p = "gmdh.L" + std::to_string(layer) + ".";
        features = g.square(
            g.affine(features, pid(store, g, p + "A"), pid(store, g, p + "b")));
    }
    return g.affine(features, pid(store, g, "gmdh.out.W"), pid(store, g, "gmdh.out.b"));
}

}  // namespace

Graph build_predict_graph(const ModelHandle& handle, std::size_t batch_rows) {
    const ModelConfig& c = handle.config;
    Graph g;
    if (c.arch == Arch::attention) {
        if (batch_rows == 0) {
            throw std::invalid_argument("attention graph needs a fixed batch row count");
        }
        auto x = g.input("x", batch_rows, c.input_dim);
        std::vector<NodeId> rows;
        rows.reserve(batch_rows);
        for (std::size_t b = 0; b < batch_rows; ++b) {
            auto x_row = g.slice(x, b, b + 1, 0, c.input_dim);
            rows.push_back(build_attention_row(g, handle.params, c, x_row));
        }
        g.set_output(rows.size() == 1 ? rows.front() : g.concat_rows(std::move(rows)));
        return g;
    }

    auto x = g.input("x", ad::kDynamicRows, c.input_dim);
    NodeId out = 0;
    switch (c.arch) {
        case Arch::linear_closed_form:
            out = g.affine(x, pid(handle.params, g, "linear.W"), pid(handle.params, g, "linear.b"));
            break;
        case Arch::linear_sgd:
        case Arch::mlp_relu:
        case Arch::mlp_sigmoid:
        case Arch::mlp_tanh:
            out = build_mlp_graph(g, handle.params, c, x);
            break;
        case Arch::rbf:
            out = build_rbf_graph(g, handle.params, x);
            break;
        case Arch::kgate:
            out = build_kgate_graph(g, handle.params, x);
            break;
        case Arch::gmdh:
            out = build_gmdh_graph(g, handle.params, handle.gmdh, x);
            break;
        case Arch::attention:
            break;  // handled above
    }
    g.set_output(out);
    return g;
}

ModelHandle build_model(const ModelConfig& config, const Tensor* train_inputs) {
    check_dims(config);
    ModelHandle handle;
    handle.config = config;
    Rng rng(mix_seed(config.seed, "init"));
    switch (config.arch) {
        case Arch::linear_closed_form:
        case Arch::linear_sgd:
            if (config.arch == Arch::linear_closed_form) {
                create_linear_params(config, handle.params, rng);
            } else {
                create_mlp_params(config, handle.params, rng);
            }
            break;
        case Arch::mlp_relu:
        case Arch::mlp_sigmoid:
        case Arch::mlp_tanh:
            create_mlp_params(config, handle.params, rng);
            break;
        case Arch::rbf:
            create_rbf_params(config, handle.params, rng, train_inputs);
            break;
        case Arch::kgate:
            create_kgate_params(config, handle.params, rng);
            break;
        case Arch::attention:
            create_attention_params(config, handle.params, rng);
            break;
        case Arch::gmdh:
            throw std::invalid_argument("gmdh models are built by grow_gmdh");
    }
    handle.graph = build_predict_graph(handle, 1);
    return handle;
}

ModelHandle fit_linear_closed_form(const Tensor& x, const Tensor& y, ModelConfig config) {
    if (x.rows == 0 || x.size() == 0) {
        throw std::invalid_argument("closed-form fit: empty design matrix");
    }
    if (x.rows != y.rows) {
        throw std::invalid_argument("closed-form fit: input/target row counts differ");
    }
    config.arch = Arch::linear_closed_form;
    config.input_dim = x.cols;
    config.output_dim = y.cols;

    // append the bias column and solve the joint system
    Tensor design(x.rows, x.cols + 1);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < x.cols; ++j) design.at(i, j) = x.at(i, j);
        design.at(i, x.cols) = 1.0;
    }
    Tensor solution = least_squares(design, y);

    ModelHandle handle;
    handle.config = config;
    Tensor w(x.cols, y.cols), b(1, y.cols);
    for (std::size_t j = 0; j < y.cols; ++j) {
        for (std::size_t i = 0; i < x.cols; ++i) w.at(i, j) = solution.at(i, j);
        b.at(0, j) = solution.at(x.cols, j);
    }
    handle.params.add("linear.W", std::move(w));
    handle.params.add("linear.b", std::move(b));
    handle.graph = build_predict_graph(handle, 1);
    return handle;
}

std::vector<double> predict(const ModelHandle& handle, std::span<const double> input) {
    if (input.size() != handle.config.input_dim) {
        throw std::invalid_argument("predict: input length " + std::to_string(input.size()) +
                                    " != model input dim " +
                                    std::to_string(handle.config.input_dim));
    }
    ad::Inputs inputs;
    inputs.emplace("x", Tensor::row(input));
    Tensor out = evaluate(handle.graph, inputs, handle.params);
    return out.v;
}

Tensor predict_batch(const ModelHandle& handle, const Tensor& inputs) {
    if (inputs.cols != handle.config.input_dim) {
        throw std::invalid_argument("predict_batch: input dim mismatch");
    }
    if (handle.config.arch == Arch::attention) {
        Tensor out(inputs.rows, handle.config.output_dim);
        for (std::size_t r = 0; r < inputs.rows; ++r) {
            const auto row = predict(handle, inputs.row_span(r));
            std::copy(row.begin(), row.end(), out.v.begin() + r * out.cols);
        }
        return out;
    }
    ad::Inputs bound;
    bound.emplace("x", inputs);
    return evaluate(handle.graph, bound, handle.params);
}

void save_model(const ModelHandle& handle, const std::filesystem::path& path) {
    nlohmann::json j;
    j["format"] = "kinn-model-v1";
    j["config"] = {
        {"arch", arch_name(handle.config.arch)},
        {"input_dim", handle.config.input_dim},
        {"output_dim", handle.config.output_dim},
        {"kinematic", handle.config.kinematic},
        {"normalize", handle.config.normalize},
        {"seed", handle.config.seed},
        {"rbf_centers", handle.config.params.rbf_centers},
        {"gmdh_select_k", handle.config.params.gmdh_select_k},
        {"gmdh_max_layers", handle.config.params.gmdh_max_layers},
        {"attention_width", handle.config.params.attention_width},
    };
    if (handle.config.arch == Arch::gmdh) {
        nlohmann::json layers = nlohmann::json::array();
        for (const auto& layer : handle.gmdh.layers) {
            nlohmann::json pairs = nlohmann::json::array();
            for (const auto& [a, b] : layer.pairs) pairs.push_back({a, b});
            layers.push_back(pairs);
        }
        j["gmdh_layers"] = layers;
    }
    nlohmann::json params = nlohmann::json::array();
    for (std::uint32_t id = 0; id < handle.params.count(); ++id) {
        const Tensor& t = handle.params.value(id);
        params.push_back({{"name", handle.params.name(id)},
                          {"rows", t.rows},
                          {"cols", t.cols},
                          {"values", t.v}});
    }
    j["params"] = params;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump();
}

ModelHandle load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.value("format", "") != "kinn-model-v1") {
        throw std::runtime_error(path.string() + ": not a model snapshot");
    }

    ModelHandle handle;
    const auto& c = j.at("config");
    handle.config.arch = parse_arch(c.at("arch").get<std::string>());
    handle.config.input_dim = c.at("input_dim").get<std::size_t>();
    handle.config.output_dim = c.at("output_dim").get<std::size_t>();
    handle.config.kinematic = c.at("kinematic").get<bool>();
    handle.config.normalize = c.at("normalize").get<bool>();
    handle.config.seed = c.at("seed").get<std::uint64_t>();
    handle.config.params.rbf_centers = c.at("rbf_centers").get<std::size_t>();
    handle.config.params.gmdh_select_k = c.at("gmdh_select_k").get<std::size_t>();
    handle.config.params.gmdh_max_layers = c.at("gmdh_max_layers").get<std::size_t>();
    handle.config.params.attention_width = c.at("attention_width").get<std::size_t>();

    if (j.contains("gmdh_layers")) {
        for (const auto& layer : j.at("gmdh_layers")) {
            GmdhStructure::Layer l;
            for (const auto& pr : layer) {
                l.pairs.emplace_back(pr.at(0).get<std::uint32_t>(), pr.at(1).get<std::uint32_t>());
            }
            handle.gmdh.layers.push_back(std::move(l));
        }
    }
    for (const auto& p : j.at("params")) {
        Tensor t(p.at("rows").get<std::size_t>(), p.at("cols").get<std::size_t>());
        t.v = p.at("values").get<std::vector<double>>();
        if (t.v.size() != t.rows * t.cols) {
            throw std::runtime_error(path.string() + ": parameter shape mismatch");
        }
        handle.params.add(p.at("name").get<std::string>(), std::move(t));
    }
    handle.graph = build_predict_graph(handle, 1);
    return handle;
}

}  // namespace kinn
