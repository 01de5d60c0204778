#include "tpidm/tape.hpp"

#include <cmath>
#include <string>

namespace tpidm {

NodeId Tape::push(Node&& n) {
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::leaf(std::span<const double> v) {
    Node n;
    n.op = Op::Leaf;
    n.val.assign(v.begin(), v.end());
    return push(std::move(n));
}

NodeId Tape::param_leaf(std::span<const double> v) {
    Node n;
    n.op = Op::Leaf;
    n.val.assign(v.begin(), v.end());
    n.requires_grad = true;
    n.needs_grad = true;
    return push(std::move(n));
}

NodeId Tape::scalar_leaf(double v) {
    Node n;
    n.op = Op::Leaf;
    n.val.assign(1, v);
    return push(std::move(n));
}

NodeId Tape::linear(NodeId w, NodeId b, NodeId x, int rows, int cols) {
    require(static_cast<int>(size(w)) == rows * cols, "linear: weight size mismatch");
    require(static_cast<int>(size(b)) == rows, "linear: bias size mismatch");
    require(static_cast<int>(size(x)) == cols, "linear: input size mismatch");
    Node n;
    n.op = Op::Linear;
    n.w = w;
    n.b = b;
    n.in0 = x;
    n.rows = rows;
    n.cols = cols;
    n.needs_grad = needs(w) || needs(b) || needs(x);
    n.val.resize(rows);
    const double* W = nodes_[w].val.data();
    const double* xv = nodes_[x].val.data();
    const double* bv = nodes_[b].val.data();
    for (int r = 0; r < rows; ++r) {
        const double* Wr = W + static_cast<std::size_t>(r) * cols;
        double acc = bv[r];
        for (int cidx = 0; cidx < cols; ++cidx) acc += Wr[cidx] * xv[cidx];
        n.val[r] = acc;
    }
    return push(std::move(n));
}

NodeId Tape::sigmoid(NodeId x) {
    Node n;
    n.op = Op::Sigmoid;
    n.in0 = x;
    n.needs_grad = needs(x);
    n.val.resize(size(x));
    const auto& xv = nodes_[x].val;
    for (std::size_t i = 0; i < xv.size(); ++i) n.val[i] = 1.0 / (1.0 + std::exp(-xv[i]));
    return push(std::move(n));
}

NodeId Tape::tanh_op(NodeId x) {
    Node n;
    n.op = Op::Tanh;
    n.in0 = x;
    n.needs_grad = needs(x);
    n.val.resize(size(x));
    const auto& xv = nodes_[x].val;
    for (std::size_t i = 0; i < xv.size(); ++i) n.val[i] = std::tanh(xv[i]);
    return push(std::move(n));
}

NodeId Tape::silu(NodeId x) {
    Node n;
    n.op = Op::Silu;
    n.in0 = x;
    n.needs_grad = needs(x);
    n.val.resize(size(x));
    const auto& xv = nodes_[x].val;
    for (std::size_t i = 0; i < xv.size(); ++i) n.val[i] = xv[i] / (1.0 + std::exp(-xv[i]));
    return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
    require(size(a) == size(b), "add: size mismatch");
    Node n;
    n.op = Op::Add;
    n.in0 = a;
    n.in1 = b;
    n.needs_grad = needs(a) || needs(b);
    n.val.resize(size(a));
    const auto& av = nodes_[a].val;
    const auto& bv = nodes_[b].val;
    for (std::size_t i = 0; i < av.size(); ++i) n.val[i] = av[i] + bv[i];
    return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
    require(size(a) == size(b), "mul: size mismatch");
    Node n;
    n.op = Op::Mul;
    n.in0 = a;
    n.in1 = b;
    n.needs_grad = needs(a) || needs(b);
    n.val.resize(size(a));
    const auto& av = nodes_[a].val;
    const auto& bv = nodes_[b].val;
    for (std::size_t i = 0; i < av.size(); ++i) n.val[i] = av[i] * bv[i];
    return push(std::move(n));
}

NodeId Tape::concat(const std::vector<NodeId>& parts) {
    require(!parts.empty(), "concat: no inputs");
    Node n;
    n.op = Op::Concat;
    n.concat_begin = static_cast<std::int32_t>(concat_inputs_.size());
    std::size_t total = 0;
    for (NodeId p : parts) {
        total += size(p);
        n.needs_grad = n.needs_grad || needs(p);
    }
    concat_inputs_.insert(concat_inputs_.end(), parts.begin(), parts.end());
    n.concat_end = static_cast<std::int32_t>(concat_inputs_.size());
    n.val.reserve(total);
    for (NodeId p : parts) {
        const auto& pv = nodes_[p].val;
        n.val.insert(n.val.end(), pv.begin(), pv.end());
    }
    return push(std::move(n));
}

NodeId Tape::slice(NodeId x, int offset, int len) {
    require(offset >= 0 && len >= 0 && offset + len <= static_cast<int>(size(x)),
            "slice: range out of bounds");
    Node n;
    n.op = Op::Slice;
    n.in0 = x;
    n.rows = offset;
    n.cols = len;
    n.needs_grad = needs(x);
    const auto& xv = nodes_[x].val;
    n.val.assign(xv.begin() + offset, xv.begin() + offset + len);
    return push(std::move(n));
}

NodeId Tape::mean(NodeId x) {
    require(size(x) > 0, "mean: empty input");
    Node n;
    n.op = Op::Mean;
    n.in0 = x;
    n.needs_grad = needs(x);
    double acc = 0.0;
    for (double v : nodes_[x].val) acc += v;
    n.val.assign(1, acc / static_cast<double>(size(x)));
    return push(std::move(n));
}

NodeId Tape::sum_sq(NodeId x) {
    Node n;
    n.op = Op::SumSq;
    n.in0 = x;
    n.needs_grad = needs(x);
    double acc = 0.0;
    for (double v : nodes_[x].val) acc += v * v;
    n.val.assign(1, acc);
    return push(std::move(n));
}

NodeId Tape::affine(NodeId x, double a, double c) {
    Node n;
    n.op = Op::Affine;
    n.in0 = x;
    n.a = a;
    n.c = c;
    n.needs_grad = needs(x);
    n.val.resize(size(x));
    const auto& xv = nodes_[x].val;
    for (std::size_t i = 0; i < xv.size(); ++i) n.val[i] = a * xv[i] + c;
    return push(std::move(n));
}

NodeId Tape::central_diff(NodeId x, double dt) {
    const int L = static_cast<int>(size(x));
    require(L >= 3, "central_diff: need at least 3 points");
    require(dt > 0.0, "central_diff: dt must be positive");
    Node n;
    n.op = Op::CentralDiff;
    n.in0 = x;
    n.a = dt;
    n.needs_grad = needs(x);
    n.val.resize(L);
    const auto& xv = nodes_[x].val;
    n.val[0] = (xv[1] - xv[0]) / dt;
    for (int i = 1; i + 1 < L; ++i) n.val[i] = (xv[i + 1] - xv[i - 1]) / (2.0 * dt);
    n.val[L - 1] = (xv[L - 1] - xv[L - 2]) / dt;
    return push(std::move(n));
}

NodeId Tape::reciprocal(NodeId x) {
    Node n;
    n.op = Op::Recip;
    n.in0 = x;
    n.needs_grad = needs(x);
    n.val.resize(size(x));
    const auto& xv = nodes_[x].val;
    for (std::size_t i = 0; i < xv.size(); ++i) n.val[i] = 1.0 / xv[i];
    return push(std::move(n));
}

std::vector<double>& Tape::g(NodeId id) {
    auto& gv = grads_[id];
    if (gv.empty()) gv.assign(nodes_[id].val.size(), 0.0);
    return gv;
}

void Tape::backward(NodeId loss) {
    require(loss >= 0 && loss < static_cast<NodeId>(nodes_.size()), "backward: bad node id");
    require(size(loss) == 1, "backward: loss must be scalar");
    const double lv = nodes_[loss].val[0];
    if (!std::isfinite(lv))
        throw numeric_error("backward: non-finite loss at node " + std::to_string(loss));

    grads_.assign(nodes_.size(), {});
    g(loss)[0] = 1.0;
    grads_valid_ = true;

    for (NodeId id = loss; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.needs_grad || grads_[id].empty()) continue;
        const std::vector<double>& go = grads_[id];
        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::Linear: {
                const double* gov = go.data();
                const double* xv = nodes_[n.in0].val.data();
                const double* W = nodes_[n.w].val.data();
                const bool nw = needs(n.w), nb = needs(n.b), nx = needs(n.in0);
                double* gw = nw ? g(n.w).data() : nullptr;
                double* gb = nb ? g(n.b).data() : nullptr;
                double* gx = nx ? g(n.in0).data() : nullptr;
                for (int r = 0; r < n.rows; ++r) {
                    const double gr = gov[r];
                    if (gr == 0.0) continue;
                    const std::size_t base = static_cast<std::size_t>(r) * n.cols;
                    if (nw) {
                        double* gwr = gw + base;
                        for (int cidx = 0; cidx < n.cols; ++cidx) gwr[cidx] += gr * xv[cidx];
                    }
                    if (nx) {
                        const double* Wr = W + base;
                        for (int cidx = 0; cidx < n.cols; ++cidx) gx[cidx] += gr * Wr[cidx];
                    }
                    if (nb) gb[r] += gr;
                }
                break;
            }
            case Op::Sigmoid: {
                auto& gx = g(n.in0);
                for (std::size_t i = 0; i < go.size(); ++i) {
                    const double s = n.val[i];
                    gx[i] += go[i] * s * (1.0 - s);
                }
                break;
            }
            case Op::Tanh: {
                auto& gx = g(n.in0);
                for (std::size_t i = 0; i < go.size(); ++i)
                    gx[i] += go[i] * (1.0 - n.val[i] * n.val[i]);
                break;
            }
            case Op::Silu: {
                auto& gx = g(n.in0);
                const auto& xv = nodes_[n.in0].val;
                for (std::size_t i = 0; i < go.size(); ++i) {
                    const double s = 1.0 / (1.0 + std::exp(-xv[i]));
                    gx[i] += go[i] * (s + xv[i] * s * (1.0 - s));
                }
                break;
            }
            case Op::Add: {
                if (needs(n.in0)) {
                    auto& ga = g(n.in0);
                    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
                }
                if (needs(n.in1)) {
                    auto& gb = g(n.in1);
                    for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i];
                }
                break;
            }
            case Op::Mul: {
                const auto& av = nodes_[n.in0].val;
                const auto& bv = nodes_[n.in1].val;
                if (needs(n.in0)) {
                    auto& ga = g(n.in0);
                    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bv[i];
                }
                if (needs(n.in1)) {
                    auto& gb = g(n.in1);
                    for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * av[i];
                }
                break;
            }
            case Op::Concat: {
                std::size_t pos = 0;
                for (std::int32_t k = n.concat_begin; k < n.concat_end; ++k) {
                    const NodeId p = concat_inputs_[k];
                    const std::size_t len = nodes_[p].val.size();
                    if (needs(p)) {
                        auto& gp = g(p);
                        for (std::size_t i = 0; i < len; ++i) gp[i] += go[pos + i];
                    }
                    pos += len;
                }
                break;
            }
            case Op::Slice: {
                auto& gx = g(n.in0);
                for (int i = 0; i < n.cols; ++i) gx[n.rows + i] += go[i];
                break;
            }
            case Op::Mean: {
                auto& gx = g(n.in0);
                const double w = go[0] / static_cast<double>(gx.size());
                for (auto& v : gx) v += w;
                break;
            }
            case Op::SumSq: {
                auto& gx = g(n.in0);
                const auto& xv = nodes_[n.in0].val;
                const double w = 2.0 * go[0];
                for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += w * xv[i];
                break;
            }
            case Op::Affine: {
                auto& gx = g(n.in0);
                for (std::size_t i = 0; i < go.size(); ++i) gx[i] += n.a * go[i];
                break;
            }
            case Op::CentralDiff: {
                auto& gx = g(n.in0);
                const int L = static_cast<int>(go.size());
                const double dt = n.a;
                gx[0] += -go[0] / dt;
                gx[1] += go[0] / dt;
                for (int i = 1; i + 1 < L; ++i) {
                    gx[i + 1] += go[i] / (2.0 * dt);
                    gx[i - 1] -= go[i] / (2.0 * dt);
                }
                gx[L - 1] += go[L - 1] / dt;
                gx[L - 2] -= go[L - 1] / dt;
                break;
            }
            case Op::Recip: {
                auto& gx = g(n.in0);
                const auto& yv = n.val;
                for (std::size_t i = 0; i < go.size(); ++i) gx[i] -= go[i] * yv[i] * yv[i];
                break;
            }
        }
    }
}

const std::vector<double>& Tape::grad(NodeId id) const {
    require(grads_valid_, "grad: backward has not run");
    static const std::vector<double> empty;
    if (grads_[id].empty()) {
        // never touched by backward: gradient is identically zero
        return empty;
    }
    return grads_[id];
}

void Tape::clear() {
    nodes_.clear();
    concat_inputs_.clear();
    grads_.clear();
    grads_valid_ = false;
}

}  // namespace tpidm
