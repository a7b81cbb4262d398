#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "kinn/tensor.hpp"

namespace kinn::ad {

class ParamStore;

using NodeId = std::uint32_t;

enum class OpKind : std::uint8_t {
    input,
    param,
    constant,
    matmul,
    add,
    sub,
    hadamard,
    broadcast_add,
    broadcast_mul,
    tanh_fn,
    sigmoid_fn,
    relu_fn,
    exp_fn,
    square_fn,
    softmax_rows,
    softmax_cols,
    sum_all,
    mean_all,
    scale_by,
    scalar_div,
    transpose_fn,
    slice_block,
    concat_rows,
    pairwise_sqdist,
    reshape_to,
};

const char* op_name(OpKind op);

// Row count 0 on an input node means "any number of rows".
constexpr std::size_t kDynamicRows = 0;
// Slice row bound meaning "all rows of the operand".
constexpr std::size_t kAllRows = std::numeric_limits<std::size_t>::max();

struct Node {
    OpKind op;
    std::vector<NodeId> inputs;
    std::string input_name;     // op == input
    std::uint32_t param_id = 0; // op == param
    Tensor constant;            // op == constant
    double factor = 0.0;        // op == scale_by
    std::size_t r0 = 0, r1 = 0, c0 = 0, c1 = 0;  // op == slice_block
    std::size_t out_rows = 0, out_cols = 0;      // op == input / reshape_to
};

// Operation list over tensors, topologically ordered by construction: a node
// may only reference previously added nodes, so cycles cannot be formed.
class Graph {
   public:
    NodeId input(std::string name, std::size_t rows, std::size_t cols);
    NodeId param(std::uint32_t param_id);
    NodeId constant(Tensor value);

    NodeId matmul(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId hadamard(NodeId a, NodeId b);
    // bias shaped 1xC broadcasts over rows, Rx1 over columns
    NodeId broadcast_add(NodeId a, NodeId bias);
    NodeId broadcast_mul(NodeId a, NodeId scalef);
    NodeId tanh(NodeId a);
    NodeId sigmoid(NodeId a);
    NodeId relu(NodeId a);
    NodeId exp(NodeId a);
    NodeId square(NodeId a);
    NodeId softmax_rows(NodeId a);
    NodeId softmax_cols(NodeId a);
    NodeId sum_all(NodeId a);
    NodeId mean_all(NodeId a);
    NodeId scale(NodeId a, double factor);
    // elementwise a / s where s is a 1x1 node
    NodeId scalar_div(NodeId a, NodeId s);
    NodeId transpose(NodeId a);
    // half-open block [r0, r1) x [c0, c1); pass kAllRows as r1 for all rows
    NodeId slice(NodeId a, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1);
    NodeId concat_rows(std::vector<NodeId> parts);
    // D[i,k] = squared euclidean distance between row i of x and row k of c
    NodeId pairwise_sqdist(NodeId x, NodeId c);
    NodeId reshape(NodeId a, std::size_t rows, std::size_t cols);

    // convenience: broadcast_add(matmul(x, w), b)
    NodeId affine(NodeId x, NodeId w, NodeId b);

    void set_output(NodeId id);
    NodeId output() const;
    const std::vector<Node>& nodes() const { return nodes_; }
    std::size_t node_count() const { return nodes_.size(); }

   private:
    NodeId push(Node n);
    NodeId unary(OpKind op, NodeId a);
    NodeId binary(OpKind op, NodeId a, NodeId b);
    void check_id(NodeId id) const;

    std::vector<Node> nodes_;
    NodeId output_ = 0;
    bool has_output_ = false;
};

using Inputs = std::map<std::string, Tensor>;

// Forward pass; throws on unbound inputs, shape mismatches (naming the node)
// and non-finite intermediates (naming the node).
Tensor evaluate(const Graph& graph, const Inputs& inputs, const ParamStore& params);

// Reverse-mode gradients of a scalar output with respect to every parameter
// in the store; parameters the output does not depend on get zero tensors.
std::map<std::string, Tensor> gradients(const Graph& graph, const Inputs& inputs,
                                        const ParamStore& params);

// Fast path used by training loops: one forward+backward pass, gradients
// indexed by parameter id.
struct BackwardResult {
    double loss = 0.0;
    std::vector<Tensor> grads_by_id;
};
BackwardResult backward(const Graph& graph, const Inputs& inputs, const ParamStore& params);

}  // namespace kinn::ad
