#ifndef TPIDM_TAPE_HPP
#define TPIDM_TAPE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "tpidm/common.hpp"

namespace tpidm {

using NodeId = std::int32_t;

// Reverse-mode tape over a small fixed primitive set: dense linear map,
// elementwise sigmoid/tanh/SiLU, add, multiply, concatenate, slice, mean and
// sum-of-squares, plus constant linear maps (elementwise affine, central
// differences) and elementwise reciprocal for the gas-law residual.
//
// Nodes are appended in topological order; backward() walks the record once
// in reverse and accumulates gradients, so duplicated subexpressions sum.
class Tape {
public:
    Tape() = default;

    // Leaves. `leaf` copies; `param_leaf` marks the node as a gradient target.
    NodeId leaf(std::span<const double> v);
    NodeId param_leaf(std::span<const double> v);
    NodeId scalar_leaf(double v);

    // y = W x + b with W a (rows x cols) row-major param/leaf node and b a
    // rows-sized node. x has length cols.
    NodeId linear(NodeId w, NodeId b, NodeId x, int rows, int cols);

    NodeId sigmoid(NodeId x);
    NodeId tanh_op(NodeId x);
    NodeId silu(NodeId x);

    NodeId add(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId concat(const std::vector<NodeId>& parts);
    NodeId slice(NodeId x, int offset, int len);
    NodeId mean(NodeId x);
    NodeId sum_sq(NodeId x);

    // y_i = a * x_i + c (constant linear map).
    NodeId affine(NodeId x, double a, double c);
    // Central differences with one-sided ends; length preserved.
    NodeId central_diff(NodeId x, double dt);
    NodeId reciprocal(NodeId x);

    const std::vector<double>& value(NodeId id) const { return nodes_[id].val; }
    std::size_t size(NodeId id) const { return nodes_[id].val.size(); }
    std::size_t node_count() const { return nodes_.size(); }

    // Gradient of a scalar loss node w.r.t. every param leaf. Throws
    // contract_error for non-scalar losses and numeric_error (naming the
    // node) when the loss is not finite.
    void backward(NodeId loss);
    const std::vector<double>& grad(NodeId id) const;

    void clear();

private:
    enum class Op : std::uint8_t {
        Leaf, Linear, Sigmoid, Tanh, Silu, Add, Mul, Concat, Slice,
        Mean, SumSq, Affine, CentralDiff, Recip
    };

    struct Node {
        Op op;
        NodeId in0 = -1, in1 = -1;     // generic inputs
        NodeId w = -1, b = -1;         // Linear
        int rows = 0, cols = 0;        // Linear / Slice(offset,len)
        double a = 0.0, c = 0.0;       // Affine consts, CentralDiff dt
        std::int32_t concat_begin = 0, concat_end = 0;  // range in concat_inputs_
        std::vector<double> val;
        bool requires_grad = false;    // param leaf
        bool needs_grad = false;       // on a path from a param leaf
    };

    NodeId push(Node&& n);
    bool needs(NodeId id) const { return id >= 0 && nodes_[id].needs_grad; }
    std::vector<double>& g(NodeId id);

    std::vector<Node> nodes_;
    std::vector<NodeId> concat_inputs_;
    std::vector<std::vector<double>> grads_;
    bool grads_valid_ = false;
};

}  // namespace tpidm

#endif
