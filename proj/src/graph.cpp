#include "kinn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kinn/param_store.hpp"

namespace kinn::ad {

namespace {

[[noreturn]] void fail(NodeId id, OpKind op, const std::string& what) {
    throw std::runtime_error("graph node " + std::to_string(id) + " (" + op_name(op) +
                             "): " + what);
}

void check_finite(NodeId id, OpKind op, const Tensor& t) {
    if (!t.all_finite()) fail(id, op, "non-finite values in result");
}

}  // namespace

const char* op_name(OpKind op) {
    switch (op) {
        case OpKind::input: return "input";
        case OpKind::param: return "param";
        case OpKind::constant: return "constant";
        case OpKind::matmul: return "matmul";
        case OpKind::add: return "add";
        case OpKind::sub: return "sub";
        case OpKind::hadamard: return "hadamard";
        case OpKind::broadcast_add: return "broadcast_add";
        case OpKind::broadcast_mul: return "broadcast_mul";
        case OpKind::tanh_fn: return "tanh";
        case OpKind::sigmoid_fn: return "sigmoid";
        case OpKind::relu_fn: return "relu";
        case OpKind::exp_fn: return "exp";
        case OpKind::square_fn: return "square";
        case OpKind::softmax_rows: return "softmax_rows";
        case OpKind::softmax_cols: return "softmax_cols";
        case OpKind::sum_all: return "sum";
        case OpKind::mean_all: return "mean";
        case OpKind::scale_by: return "scale";
        case OpKind::scalar_div: return "scalar_div";
        case OpKind::transpose_fn: return "transpose";
        case OpKind::slice_block: return "slice";
        case OpKind::concat_rows: return "concat_rows";
        case OpKind::pairwise_sqdist: return "pairwise_sqdist";
        case OpKind::reshape_to: return "reshape";
    }
    return "?";
}

NodeId Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

void Graph::check_id(NodeId id) const {
    if (id >= nodes_.size()) {
        throw std::invalid_argument("graph: node id " + std::to_string(id) +
                                    " references a node that does not exist yet");
    }
}

NodeId Graph::input(std::string name, std::size_t rows, std::size_t cols) {
    Node n{.op = OpKind::input};
    n.input_name = std::move(name);
    n.out_rows = rows;
    n.out_cols = cols;
    return push(std::move(n));
}

NodeId Graph::param(std::uint32_t param_id) {
    Node n{.op = OpKind::param};
    n.param_id = param_id;
    return push(std::move(n));
}

NodeId Graph::constant(Tensor value) {
    Node n{.op = OpKind::constant};
    n.constant = std::move(value);
    return push(std::move(n));
}

NodeId Graph::unary(OpKind op, NodeId a) {
    check_id(a);
    Node n{.op = op};
    n.inputs = {a};
    return push(std::move(n));
}

NodeId Graph::binary(OpKind op, NodeId a, NodeId b) {
    check_id(a);
    check_id(b);
    Node n{.op = op};
    n.inputs = {a, b};
    return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) { return binary(OpKind::matmul, a, b); }
NodeId Graph::add(NodeId a, NodeId b) { return binary(OpKind::add, a, b); }
NodeId Graph::sub(NodeId a, NodeId b) { return binary(OpKind::sub, a, b); }
NodeId Graph::hadamard(NodeId a, NodeId b) { return binary(OpKind::hadamard, a, b); }
NodeId Graph::broadcast_add(NodeId a, NodeId bias) { return binary(OpKind::broadcast_add, a, bias); }
NodeId Graph::broadcast_mul(NodeId a, NodeId s) { return binary(OpKind::broadcast_mul, a, s); }
NodeId Graph::tanh(NodeId a) { return unary(OpKind::tanh_fn, a); }
NodeId Graph::sigmoid(NodeId a) { return unary(OpKind::sigmoid_fn, a); }
NodeId Graph::relu(NodeId a) { return unary(OpKind::relu_fn, a); }
NodeId Graph::exp(NodeId a) { return unary(OpKind::exp_fn, a); }
NodeId Graph::square(NodeId a) { return unary(OpKind::square_fn, a); }
NodeId Graph::softmax_rows(NodeId a) { return unary(OpKind::softmax_rows, a); }
NodeId Graph::softmax_cols(NodeId a) { return unary(OpKind::softmax_cols, a); }
NodeId Graph::sum_all(NodeId a) { return unary(OpKind::sum_all, a); }
NodeId Graph::mean_all(NodeId a) { return unary(OpKind::mean_all, a); }
NodeId Graph::transpose(NodeId a) { return unary(OpKind::transpose_fn, a); }
NodeId Graph::scalar_div(NodeId a, NodeId s) { return binary(OpKind::scalar_div, a, s); }
NodeId Graph::pairwise_sqdist(NodeId x, NodeId c) { return binary(OpKind::pairwise_sqdist, x, c); }

NodeId Graph::scale(NodeId a, double factor) {
    check_id(a);
    Node n{.op = OpKind::scale_by};
    n.inputs = {a};
    n.factor = factor;
    return push(std::move(n));
}

NodeId Graph::slice(NodeId a, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
    check_id(a);
    Node n{.op = OpKind::slice_block};
    n.inputs = {a};
    n.r0 = r0;
    n.r1 = r1;
    n.c0 = c0;
    n.c1 = c1;
    return push(std::move(n));
}

NodeId Graph::concat_rows(std::vector<NodeId> parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
    for (NodeId p : parts) check_id(p);
    Node n{.op = OpKind::concat_rows};
    n.inputs = std::move(parts);
    return push(std::move(n));
}

NodeId Graph::reshape(NodeId a, std::size_t rows, std::size_t cols) {
    check_id(a);
    Node n{.op = OpKind::reshape_to};
    n.inputs = {a};
    n.out_rows = rows;
    n.out_cols = cols;
    return push(std::move(n));
}

NodeId Graph::affine(NodeId x, NodeId w, NodeId b) { return broadcast_add(matmul(x, w), b); }

void Graph::set_output(NodeId id) {
    check_id(id);
    output_ = id;
    has_output_ = true;
}

NodeId Graph::output() const {
    if (!has_output_) throw std::logic_error("graph: no output node designated");
    return output_;
}

namespace {

class Evaluator {
   public:
    Evaluator(const Graph& graph, const Inputs& inputs, const ParamStore& params)
        : graph_(graph), inputs_(inputs), params_(params), values_(graph.node_count()) {}

    void forward() {
        const auto& nodes = graph_.nodes();
        for (NodeId id = 0; id < nodes.size(); ++id) {
            values_[id] = compute(id, nodes[id]);
            check_finite(id, nodes[id].op, values_[id]);
        }
    }

    const Tensor& value(NodeId id) const { return values_[id]; }

    // Backward pass from a scalar output node; accumulates parameter
    // gradients into grads_by_id (sized to the store).
    std::vector<Tensor> backprop(NodeId out) {
        const auto& nodes = graph_.nodes();
        std::vector<Tensor> adj(nodes.size());
        std::vector<char> needed(nodes.size(), 0);
        needed[out] = 1;
        for (NodeId id = static_cast<NodeId>(nodes.size()); id-- > 0;) {
            if (!needed[id]) continue;
            for (NodeId in : nodes[id].inputs) needed[in] = 1;
        }
        adj[out] = Tensor::scalar(1.0);
        std::vector<Tensor> param_grads(params_.count());
        for (NodeId id = static_cast<NodeId>(nodes.size()); id-- > 0;) {
            if (!needed[id] || adj[id].empty()) continue;
            const Node& n = nodes[id];
            if (n.op == OpKind::param) {
                accumulate(param_grads[n.param_id], adj[id], values_[id]);
                continue;
            }
            propagate(id, n, adj);
        }
        for (std::uint32_t pid = 0; pid < params_.count(); ++pid) {
            if (param_grads[pid].empty()) {
                const Tensor& v = params_.value(pid);
                param_grads[pid] = Tensor(v.rows, v.cols);
            }
        }
        return param_grads;
    }

   private:
    static void accumulate(Tensor& into, const Tensor& g, const Tensor& like) {
        if (into.empty()) into = Tensor(like.rows, like.cols);
        for (std::size_t i = 0; i < g.size(); ++i) into.v[i] += g.v[i];
    }

    void add_adj(std::vector<Tensor>& adj, NodeId id, Tensor g) {
        if (adj[id].empty()) {
            adj[id] = std::move(g);
        } else {
            for (std::size_t i = 0; i < g.size(); ++i) adj[id].v[i] += g.v[i];
        }
    }

    Tensor compute(NodeId id, const Node& n);
    void propagate(NodeId id, const Node& n, std::vector<Tensor>& adj);

    const Graph& graph_;
    const Inputs& inputs_;
    const ParamStore& params_;
    std::vector<Tensor> values_;
};

Tensor softmax_axis(const Tensor& a, bool over_rows) {
    // over_rows: each row sums to 1; otherwise each column sums to 1
    Tensor out(a.rows, a.cols);
    if (over_rows) {
        for (std::size_t i = 0; i < a.rows; ++i) {
            double mx = a.at(i, 0);
            for (std::size_t j = 1; j < a.cols; ++j) mx = std::max(mx, a.at(i, j));
            double sum = 0.0;
            for (std::size_t j = 0; j < a.cols; ++j) {
                const double e = std::exp(a.at(i, j) - mx);
                out.at(i, j) = e;
                sum += e;
            }
            for (std::size_t j = 0; j < a.cols; ++j) out.at(i, j) /= sum;
        }
    } else {
        for (std::size_t j = 0; j < a.cols; ++j) {
            double mx = a.at(0, j);
            for (std::size_t i = 1; i < a.rows; ++i) mx = std::max(mx, a.at(i, j));
            double sum = 0.0;
            for (std::size_t i = 0; i < a.rows; ++i) {
                const double e = std::exp(a.at(i, j) - mx);
                out.at(i, j) = e;
                sum += e;
            }
            for (std::size_t i = 0; i < a.rows; ++i) out.at(i, j) /= sum;
        }
    }
    return out;
}

Tensor Evaluator::compute(NodeId id, const Node& n) {
    auto in = [&](std::size_t k) -> const Tensor& { return values_[n.inputs[k]]; };
    switch (n.op) {
        case OpKind::input: {
            auto it = inputs_.find(n.input_name);
            if (it == inputs_.end()) fail(id, n.op, "input '" + n.input_name + "' not bound");
            const Tensor& t = it->second;
            if (n.out_rows != kDynamicRows && t.rows != n.out_rows) {
                fail(id, n.op, "input '" + n.input_name + "' has " + std::to_string(t.rows) +
                                   " rows, expected " + std::to_string(n.out_rows));
            }
            if (t.cols != n.out_cols) {
                fail(id, n.op, "input '" + n.input_name + "' has " + std::to_string(t.cols) +
                                   " cols, expected " + std::to_string(n.out_cols));
            }
            return t;
        }
        case OpKind::param: {
            if (n.param_id >= params_.count()) fail(id, n.op, "parameter id out of range");
            return params_.value(n.param_id);
        }
        case OpKind::constant:
            return n.constant;
        case OpKind::matmul: {
            const Tensor &a = in(0), &b = in(1);
            if (a.cols != b.rows) {
                fail(id, n.op, "inner dimensions " + std::to_string(a.cols) + " vs " +
                                   std::to_string(b.rows));
            }
            return ad::matmul(a, b);
        }
        case OpKind::add:
        case OpKind::sub:
        case OpKind::hadamard: {
            const Tensor &a = in(0), &b = in(1);
            if (!a.same_shape(b)) fail(id, n.op, "operand shapes differ");
            Tensor out(a.rows, a.cols);
            for (std::size_t i = 0; i < a.size(); ++i) {
                out.v[i] = n.op == OpKind::add   ? a.v[i] + b.v[i]
                           : n.op == OpKind::sub ? a.v[i] - b.v[i]
                                                 : a.v[i] * b.v[i];
            }
            return out;
        }
        case OpKind::broadcast_add:
        case OpKind::broadcast_mul: {
            const Tensor &a = in(0), &b = in(1);
            const bool by_row = b.rows == 1 && b.cols == a.cols;   // 1xC over rows
            const bool by_col = b.cols == 1 && b.rows == a.rows;   // Rx1 over cols
            if (!by_row && !by_col) fail(id, n.op, "broadcast operand must be 1xC or Rx1");
            Tensor out(a.rows, a.cols);
            for (std::size_t i = 0; i < a.rows; ++i) {
                for (std::size_t j = 0; j < a.cols; ++j) {
                    const double s = by_row ? b.v[j] : b.v[i];
                    out.at(i, j) = n.op == OpKind::broadcast_add ? a.at(i, j) + s
                                                                 : a.at(i, j) * s;
                }
            }
            return out;
        }
        case OpKind::tanh_fn:
        case OpKind::sigmoid_fn:
        case OpKind::relu_fn:
        case OpKind::exp_fn:
        case OpKind::square_fn: {
            const Tensor& a = in(0);
            Tensor out(a.rows, a.cols);
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double x = a.v[i];
                switch (n.op) {
                    case OpKind::tanh_fn: out.v[i] = std::tanh(x); break;
                    case OpKind::sigmoid_fn: out.v[i] = 1.0 / (1.0 + std::exp(-x)); break;
                    case OpKind::relu_fn: out.v[i] = x > 0.0 ? x : 0.0; break;
                    case OpKind::exp_fn: out.v[i] = std::exp(x); break;
                    default: out.v[i] = x * x; break;
                }
            }
            return out;
        }
        case OpKind::softmax_rows:
            return softmax_axis(in(0), true);
        case OpKind::softmax_cols:
            return softmax_axis(in(0), false);
        case OpKind::sum_all:
        case OpKind::mean_all: {
            const Tensor& a = in(0);
            double s = 0.0;
            for (double x : a.v) s += x;
            if (n.op == OpKind::mean_all) s /= static_cast<double>(a.size());
            return Tensor::scalar(s);
        }
        case OpKind::scale_by: {
            const Tensor& a = in(0);
            Tensor out(a.rows, a.cols);
            for (std::size_t i = 0; i < a.size(); ++i) out.v[i] = a.v[i] * n.factor;
            return out;
        }
        case OpKind::scalar_div: {
            const Tensor &a = in(0), &s = in(1);
            if (s.size() != 1) fail(id, n.op, "divisor must be a 1x1 tensor");
            Tensor out(a.rows, a.cols);
            for (std::size_t i = 0; i < a.size(); ++i) out.v[i] = a.v[i] / s.v[0];
            return out;
        }
        case OpKind::transpose_fn:
            return transposed(in(0));
        case OpKind::slice_block: {
            const Tensor& a = in(0);
            const std::size_t r1 = n.r1 == kAllRows ? a.rows : n.r1;
            if (n.r0 >= r1 || r1 > a.rows || n.c0 >= n.c1 || n.c1 > a.cols) {
                fail(id, n.op, "slice bounds out of range");
            }
            Tensor out(r1 - n.r0, n.c1 - n.c0);
            for (std::size_t i = 0; i < out.rows; ++i) {
                for (std::size_t j = 0; j < out.cols; ++j) {
                    out.at(i, j) = a.at(n.r0 + i, n.c0 + j);
                }
            }
            return out;
        }
        case OpKind::concat_rows: {
            std::size_t rows = 0;
            const std::size_t cols = in(0).cols;
            for (std::size_t k = 0; k < n.inputs.size(); ++k) {
                if (in(k).cols != cols) fail(id, n.op, "column counts differ");
                rows += in(k).rows;
            }
            Tensor out(rows, cols);
            std::size_t r = 0;
            for (std::size_t k = 0; k < n.inputs.size(); ++k) {
                const Tensor& p = in(k);
                std::copy(p.v.begin(), p.v.end(), out.v.begin() + r * cols);
                r += p.rows;
            }
            return out;
        }
        case OpKind::pairwise_sqdist: {
            const Tensor &x = in(0), &c = in(1);
            if (x.cols != c.cols) fail(id, n.op, "point dimensions differ");
            Tensor out(x.rows, c.rows);
            for (std::size_t i = 0; i < x.rows; ++i) {
                for (std::size_t k = 0; k < c.rows; ++k) {
                    double d = 0.0;
                    for (std::size_t j = 0; j < x.cols; ++j) {
                        const double diff = x.at(i, j) - c.at(k, j);
                        d += diff * diff;
                    }
                    out.at(i, k) = d;
                }
            }
            return out;
        }
        case OpKind::reshape_to: {
            const Tensor& a = in(0);
            if (a.size() != n.out_rows * n.out_cols) fail(id, n.op, "element count differs");
            Tensor out = a;
            out.rows = n.out_rows;
            out.cols = n.out_cols;
            return out;
        }
    }
    fail(id, n.op, "unhandled op");
}

void Evaluator::propagate(NodeId id, const Node& n, std::vector<Tensor>& adj) {
    const Tensor& g = adj[id];
    const Tensor& y = values_[id];
    auto inv = [&](std::size_t k) -> const Tensor& { return values_[n.inputs[k]]; };
    switch (n.op) {
        case OpKind::input:
        case OpKind::param:
        case OpKind::constant:
            return;
        case OpKind::matmul: {
            const Tensor &a = inv(0), &b = inv(1);
            add_adj(adj, n.inputs[0], ad::matmul(g, transposed(b)));
            add_adj(adj, n.inputs[1], ad::matmul(transposed(a), g));
            return;
        }
        case OpKind::add: {
            add_adj(adj, n.inputs[0], g);
            add_adj(adj, n.inputs[1], g);
            return;
        }
        case OpKind::sub: {
            add_adj(adj, n.inputs[0], g);
            Tensor neg(g.rows, g.cols);
            for (std::size_t i = 0; i < g.size(); ++i) neg.v[i] = -g.v[i];
            add_adj(adj, n.inputs[1], std::move(neg));
            return;
        }
        case OpKind::hadamard: {
            const Tensor &a = inv(0), &b = inv(1);
            Tensor ga(a.rows, a.cols), gb(b.rows, b.cols);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga.v[i] = g.v[i] * b.v[i];
                gb.v[i] = g.v[i] * a.v[i];
            }
            add_adj(adj, n.inputs[0], std::move(ga));
            add_adj(adj, n.inputs[1], std::move(gb));
            return;
        }
        case OpKind::broadcast_add:
        case OpKind::broadcast_mul: {
            const Tensor &a = inv(0), &b = inv(1);
            const bool by_row = b.rows == 1 && b.cols == a.cols;
            Tensor ga(a.rows, a.cols);
            Tensor gb(b.rows, b.cols);
            for (std::size_t i = 0; i < a.rows; ++i) {
                for (std::size_t j = 0; j < a.cols; ++j) {
                    const std::size_t bi = by_row ? j : i;
                    const double gij = g.at(i, j);
                    if (n.op == OpKind::broadcast_add) {
                        ga.at(i, j) = gij;
                        gb.v[bi] += gij;
                    } else {
                        ga.at(i, j) = gij * b.v[bi];
                        gb.v[bi] += gij * a.at(i, j);
                    }
                }
            }
            add_adj(adj, n.inputs[0], std::move(ga));
            add_adj(adj, n.inputs[1], std::move(gb));
            return;
        }
        case OpKind::tanh_fn:
        case OpKind::sigmoid_fn:
        case OpKind::relu_fn:
        case OpKind::exp_fn:
        case OpKind::square_fn: {
            const Tensor& a = inv(0);
            Tensor ga(a.rows, a.cols);
            for (std::size_t i = 0; i < a.size(); ++i) {
                double d = 0.0;
                switch (n.op) {
                    case OpKind::tanh_fn: d = 1.0 - y.v[i] * y.v[i]; break;
                    case OpKind::sigmoid_fn: d = y.v[i] * (1.0 - y.v[i]); break;
                    case OpKind::relu_fn: d = a.v[i] > 0.0 ? 1.0 : 0.0; break;
                    case OpKind::exp_fn: d = y.v[i]; break;
                    default: d = 2.0 * a.v[i]; break;
                }
                ga.v[i] = g.v[i] * d;
            }
            add_adj(adj, n.inputs[0], std::move(ga));
            return;
        }
        case OpKind::softmax_rows:
        case OpKind::softmax_cols: {
            const bool over_rows = n.op == OpKind::softmax_rows;
            Tensor ga(y.rows, y.cols);
            if (over_rows) {
                for (std::size_t i = 0; i < y.rows; ++i) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j < y.cols; ++j) dot += g.at(i, j) * y.at(i, j);
                    for (std::size_t j = 0; j < y.cols; ++j) {
                        ga.at(i, j) = y.at(i, j) * (g.at(i, j) - dot);
                    }
                }
            } else {
                for (std::size_t j = 0; j < y.cols; ++j) {
                    double dot = 0.0;
                    for (std::size_t i = 0; i < y.rows; ++i) dot += g.at(i, j) * y.at(i, j);
                    for (std::size_t i = 0; i < y.rows; ++i) {
                        ga.at(i, j) = y.at(i, j) * (g.at(i, j) - dot);
                    }
                }
            }
            add_adj(adj, n.inputs[0], std::move(ga));
            return;
        }
        case OpKind::sum_all:
        case OpKind::mean_all: {
            const Tensor& a = inv(0);
            const double w =
                n.op == OpKind::sum_all ? g.v[0] : g.v[0] / static_cast<double>(a.size());
            add_adj(adj, n.inputs[0], Tensor::filled(a.rows, a.cols, w));
            return;
        }
        case OpKind::scale_by: {
            Tensor ga(g.rows, g.cols);
            for (std::size_t i = 0; i < g.size(); ++i) ga.v[i] = g.v[i] * n.factor;
            add_adj(adj, n.inputs[0], std::move(ga));
            return;
        }
        case OpKind::scalar_div: {
            const Tensor &a = inv(0), &s = inv(1);
            const double sv = s.v[0];
            Tensor ga(a.rows, a.cols);
            double gs = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                ga.v[i] = g.v[i] / sv;
                gs -= g.v[i] * a.v[i];
            }
            gs /= sv * sv;
            add_adj(adj, n.inputs[0], std::move(ga));
            add_adj(adj, n.inputs[1], Tensor::scalar(gs));
            return;
        }
        case OpKind::transpose_fn: {
            add_adj(adj, n.inputs[0], transposed(g));
            return;
        }
        case OpKind::slice_block: {
            const Tensor& a = inv(0);
            Tensor ga(a.rows, a.cols);
            for (std::size_t i = 0; i < g.rows; ++i) {
                for (std::size_t j = 0; j < g.cols; ++j) {
                    ga.at(n.r0 + i, n.c0 + j) = g.at(i, j);
                }
            }
            add_adj(adj, n.inputs[0], std::move(ga));
            return;
        }
        case OpKind::concat_rows: {
            std::size_t r = 0;
            for (std::size_t k = 0; k < n.inputs.size(); ++k) {
                const Tensor& p = inv(k);
                Tensor gp(p.rows, p.cols);
                std::copy(g.v.begin() + r * g.cols, g.v.begin() + (r + p.rows) * g.cols,
                          gp.v.begin());
                add_adj(adj, n.inputs[k], std::move(gp));
                r += p.rows;
            }
            return;
        }
        case OpKind::pairwise_sqdist: {
            const Tensor &x = inv(0), &c = inv(1);
            Tensor gx(x.rows, x.cols), gc(c.rows, c.cols);
            for (std::size_t i = 0; i < x.rows; ++i) {
                for (std::size_t k = 0; k < c.rows; ++k) {
                    const double w = 2.0 * g.at(i, k);
                    if (w == 0.0) continue;
                    for (std::size_t j = 0; j < x.cols; ++j) {
                        const double diff = x.at(i, j) - c.at(k, j);
                        gx.at(i, j) += w * diff;
                        gc.at(k, j) -= w * diff;
                    }
                }
            }
            add_adj(adj, n.inputs[0], std::move(gx));
            add_adj(adj, n.inputs[1], std::move(gc));
            return;
        }
        case OpKind::reshape_to: {
            const Tensor& a = inv(0);
            Tensor ga = g;
            ga.rows = a.rows;
            ga.cols = a.cols;
            add_adj(adj, n.inputs[0], std::move(ga));
            return;
        }
    }
}

}  // namespace

Tensor evaluate(const Graph& graph, const Inputs& inputs, const ParamStore& params) {
    Evaluator ev(graph, inputs, params);
    ev.forward();
    return ev.value(graph.output());
}

BackwardResult backward(const Graph& graph, const Inputs& inputs, const ParamStore& params) {
    Evaluator ev(graph, inputs, params);
    ev.forward();
    const NodeId out = graph.output();
    const Tensor& y = ev.value(out);
    if (y.size() != 1) {
        throw std::runtime_error("gradients: output must be scalar, got " +
                                 std::to_string(y.rows) + "x" + std::to_string(y.cols));
    }
    BackwardResult res;
    res.loss = y.v[0];
    res.grads_by_id = ev.backprop(out);
    return res;
}

std::map<std::string, Tensor> gradients(const Graph& graph, const Inputs& inputs,
                                        const ParamStore& params) {
    BackwardResult res = backward(graph, inputs, params);
    std::map<std::string, Tensor> named;
    for (std::uint32_t id = 0; id < params.count(); ++id) {
        named.emplace(params.name(id), std::move(res.grads_by_id[id]));
    }
    return named;
}

}  // namespace kinn::ad
