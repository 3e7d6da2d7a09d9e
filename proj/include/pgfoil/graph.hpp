// Reverse-mode autodiff over dense tensors.
//
// Nodes live in an append-only arena; forward values are computed eagerly at
// construction. backward() emits *graph nodes* for every gradient, so an
// expression built from gradients (the WGAN gradient penalty) can itself be
// differentiated by a second backward() call over the same arena.
//
// Design constraints (kept deliberately tight for double-backprop safety):
//   - no broadcasting beyond scalar-node-times-tensor; explicit reshape only
//   - gradient accumulation order is fixed by node index, so backward is
//     deterministic: identical graphs give bit-identical gradients
//   - piecewise-linear ops (leaky-relu, clamp) differentiate via constant
//     masks captured from the forward value; their second derivative is zero
//     almost everywhere, which the constant mask represents exactly

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pgfoil/errors.hpp"
#include "pgfoil/tensor.hpp"

namespace pgfoil::ad {

enum class Op : std::uint8_t {
    Const,
    Add,
    Sub,
    Mul,
    Div,
    SMul,   // scalar node * tensor
    CMul,   // compile-time constant * tensor
    MatMul, // [m,k]x[k,n] -> [m,n] or [m,k]x[k] -> [m]
    Transpose,
    Reshape,
    Concat, // rank-1 concatenation
    Slice,  // rank-1 contiguous slice
    Embed,  // adjoint of Slice: place a rank-1 tensor into zeros
    Roll,   // rank-1 circular shift
    LeakyRelu,
    Tanh,
    Square,
    Sum,
    Mean,
    SqrtEps,
    L2NormEps,
    Clamp,
    Acos,
};

inline const char* op_name(Op op) {
    switch (op) {
        case Op::Const: return "const";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Div: return "div";
        case Op::SMul: return "smul";
        case Op::CMul: return "cmul";
        case Op::MatMul: return "matmul";
        case Op::Transpose: return "transpose";
        case Op::Reshape: return "reshape";
        case Op::Concat: return "concat";
        case Op::Slice: return "slice";
        case Op::Embed: return "embed";
        case Op::Roll: return "roll";
        case Op::LeakyRelu: return "leaky-relu";
        case Op::Tanh: return "tanh";
        case Op::Square: return "square";
        case Op::Sum: return "sum";
        case Op::Mean: return "mean";
        case Op::SqrtEps: return "sqrt-eps";
        case Op::L2NormEps: return "l2norm-eps";
        case Op::Clamp: return "clamp";
        case Op::Acos: return "acos";
    }
    return "?";
}

using NodeId = int;

struct Node {
    Op op = Op::Const;
    NodeId a = -1;
    NodeId b = -1;
    Tensor value;
    double x0 = 0.0;  // slope / eps / constant factor / clamp lo
    double x1 = 0.0;  // clamp hi
    long i0 = 0;      // slice start / roll shift
    long i1 = 0;      // slice length / embed total
    bool requires_grad = false;
};

// eps guard used inside the acos derivative 1/sqrt(1-x^2)
inline constexpr double kAcosDerivEps = 1e-12;

class Graph {
public:
    Graph() { nodes_.reserve(1024); }

    std::size_t size() const { return nodes_.size(); }
    const Tensor& value(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }
    const Node& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }

    NodeId constant(Tensor t, bool requires_grad = false) {
        Node n;
        n.op = Op::Const;
        n.value = std::move(t);
        n.requires_grad = requires_grad;
        return push(std::move(n));
    }

    NodeId scalar(double v) { return constant(Tensor::scalar(v)); }

    NodeId add(NodeId a, NodeId b) { return binary_same(Op::Add, a, b); }
    NodeId sub(NodeId a, NodeId b) { return binary_same(Op::Sub, a, b); }
    NodeId mul(NodeId a, NodeId b) { return binary_same(Op::Mul, a, b); }
    NodeId div(NodeId a, NodeId b) { return binary_same(Op::Div, a, b); }

    NodeId smul(NodeId s, NodeId a) {
        if (val(s).size() != 1)
            throw ShapeError(std::string("smul: scalar operand has shape ") + shape_str(val(s).shape()) +
                             ", expected a single element");
        Node n = make(Op::SMul, s, a);
        n.value = val(a);
        const double sv = val(s)[0];
        for (auto& v : n.value.data()) v *= sv;
        return push(std::move(n));
    }

    NodeId cmul(double c, NodeId a) {
        Node n = make(Op::CMul, a, -1);
        n.x0 = c;
        n.value = val(a);
        for (auto& v : n.value.data()) v *= c;
        return push(std::move(n));
    }

    NodeId neg(NodeId a) { return cmul(-1.0, a); }

    NodeId matmul(NodeId a, NodeId b) {
        const Tensor& A = val(a);
        const Tensor& B = val(b);
        if (A.rank() != 2 || (B.rank() != 2 && B.rank() != 1) || A.dim(1) != B.dim(0))
            throw ShapeError(std::string("matmul: incompatible shapes ") + shape_str(A.shape()) + " x " +
                             shape_str(B.shape()));
        Node n = make(Op::MatMul, a, b);
        const std::size_t m = A.dim(0), k = A.dim(1);
        if (B.rank() == 1) {
            n.value = Tensor({m});
            for (std::size_t i = 0; i < m; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < k; ++j) acc += A.at2(i, j) * B[j];
                n.value[i] = acc;
            }
        } else {
            const std::size_t p = B.dim(1);
            n.value = Tensor({m, p});
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < k; ++j) {
                    const double aij = A.at2(i, j);
                    for (std::size_t c = 0; c < p; ++c) n.value.at2(i, c) += aij * B.at2(j, c);
                }
        }
        return push(std::move(n));
    }

    NodeId transpose(NodeId a) {
        const Tensor& A = val(a);
        if (A.rank() != 2)
            throw ShapeError(std::string("transpose: rank-2 required, got ") + shape_str(A.shape()));
        Node n = make(Op::Transpose, a, -1);
        n.value = Tensor({A.dim(1), A.dim(0)});
        for (std::size_t i = 0; i < A.dim(0); ++i)
            for (std::size_t j = 0; j < A.dim(1); ++j) n.value.at2(j, i) = A.at2(i, j);
        return push(std::move(n));
    }

    NodeId reshape(NodeId a, Shape s) {
        const Tensor& A = val(a);
        if (shape_numel(s) != A.size())
            throw ShapeError(std::string("reshape: ") + shape_str(A.shape()) + " -> " + shape_str(s) +
                             " changes element count");
        Node n = make(Op::Reshape, a, -1);
        n.value = Tensor(std::move(s), A.data());
        return push(std::move(n));
    }

    NodeId concat(NodeId a, NodeId b) {
        const Tensor& A = val(a);
        const Tensor& B = val(b);
        if (A.rank() != 1 || B.rank() != 1)
            throw ShapeError(std::string("concat: rank-1 required, got ") + shape_str(A.shape()) + " and " +
                             shape_str(B.shape()));
        Node n = make(Op::Concat, a, b);
        std::vector<double> d;
        d.reserve(A.size() + B.size());
        d.insert(d.end(), A.data().begin(), A.data().end());
        d.insert(d.end(), B.data().begin(), B.data().end());
        n.value = Tensor::vector(std::move(d));
        return push(std::move(n));
    }

    NodeId slice(NodeId a, std::size_t start, std::size_t len) {
        const Tensor& A = val(a);
        if (A.rank() != 1 || start + len > A.size())
            throw ShapeError(std::string("slice: [") + std::to_string(start) + "," +
                             std::to_string(start + len) + ") out of " + shape_str(A.shape()));
        Node n = make(Op::Slice, a, -1);
        n.i0 = static_cast<long>(start);
        n.i1 = static_cast<long>(len);
        n.value = Tensor({len});
        for (std::size_t i = 0; i < len; ++i) n.value[i] = A[start + i];
        return push(std::move(n));
    }

    NodeId embed(NodeId a, std::size_t start, std::size_t total) {
        const Tensor& A = val(a);
        if (A.rank() != 1 || start + A.size() > total)
            throw ShapeError(std::string("embed: ") + shape_str(A.shape()) + " at " + std::to_string(start) +
                             " exceeds length " + std::to_string(total));
        Node n = make(Op::Embed, a, -1);
        n.i0 = static_cast<long>(start);
        n.i1 = static_cast<long>(total);
        n.value = Tensor({total});
        for (std::size_t i = 0; i < A.size(); ++i) n.value[start + i] = A[i];
        return push(std::move(n));
    }

    NodeId roll(NodeId a, long shift) {
        const Tensor& A = val(a);
        if (A.rank() != 1)
            throw ShapeError(std::string("roll: rank-1 required, got ") + shape_str(A.shape()));
        Node n = make(Op::Roll, a, -1);
        n.i0 = shift;
        const long len = static_cast<long>(A.size());
        n.value = Tensor({A.size()});
        for (long i = 0; i < len; ++i) n.value[static_cast<std::size_t>(i)] = A[idx_mod(i + shift, len)];
        return push(std::move(n));
    }

    NodeId leaky_relu(NodeId a, double slope) {
        Node n = make(Op::LeakyRelu, a, -1);
        n.x0 = slope;
        n.value = val(a);
        for (auto& v : n.value.data())
            if (v < 0.0) v *= slope;
        return push(std::move(n));
    }

    NodeId relu(NodeId a) { return leaky_relu(a, 0.0); }

    NodeId tanh_(NodeId a) {
        Node n = make(Op::Tanh, a, -1);
        n.value = val(a);
        for (auto& v : n.value.data()) v = std::tanh(v);
        return push(std::move(n));
    }

    NodeId square(NodeId a) {
        Node n = make(Op::Square, a, -1);
        n.value = val(a);
        for (auto& v : n.value.data()) v *= v;
        return push(std::move(n));
    }

    NodeId sum(NodeId a) {
        Node n = make(Op::Sum, a, -1);
        double acc = 0.0;
        for (double v : val(a).data()) acc += v;
        n.value = Tensor::scalar(acc);
        return push(std::move(n));
    }

    NodeId mean(NodeId a) {
        if (val(a).size() == 0) throw ShapeError("mean: empty tensor");
        Node n = make(Op::Mean, a, -1);
        double acc = 0.0;
        for (double v : val(a).data()) acc += v;
        n.value = Tensor::scalar(acc / static_cast<double>(val(a).size()));
        return push(std::move(n));
    }

    NodeId sqrt_eps(NodeId a, double eps) {
        if (eps < 0.0) throw DomainError("sqrt-eps: eps must be >= 0");
        Node n = make(Op::SqrtEps, a, -1);
        n.x0 = eps;
        n.value = val(a);
        for (auto& v : n.value.data()) v = std::sqrt(v + eps);
        return push(std::move(n));
    }

    /// sqrt(sum(x^2) + eps). Default eps keeps the derivative finite at x = 0.
    NodeId l2norm_eps(NodeId a, double eps = 1e-12) {
        if (eps < 0.0) throw DomainError("l2norm-eps: eps must be >= 0");
        Node n = make(Op::L2NormEps, a, -1);
        n.x0 = eps;
        double acc = eps;
        for (double v : val(a).data()) acc += v * v;
        n.value = Tensor::scalar(std::sqrt(acc));
        return push(std::move(n));
    }

    NodeId clamp(NodeId a, double lo, double hi) {
        Node n = make(Op::Clamp, a, -1);
        n.x0 = lo;
        n.x1 = hi;
        n.value = val(a);
        for (auto& v : n.value.data()) v = std::min(hi, std::max(lo, v));
        return push(std::move(n));
    }

    NodeId acos_(NodeId a) {
        Node n = make(Op::Acos, a, -1);
        n.value = val(a);
        for (auto& v : n.value.data()) v = std::acos(v);
        return push(std::move(n));
    }

    /// Reverse-mode differentiation of a scalar output node.
    ///
    /// Returns one gradient node per wrt entry, appended to this graph (zeros
    /// when the wrt node is not an ancestor of output). The returned nodes are
    /// ordinary graph nodes: calling backward again on an expression built
    /// from them yields second-order derivatives.
    std::vector<NodeId> backward(NodeId output, std::span<const NodeId> wrt) {
        if (val(output).size() != 1)
            throw DomainError(std::string("backward: output must be scalar, got shape ") +
                              shape_str(val(output).shape()));

        const std::size_t frontier = static_cast<std::size_t>(output) + 1;

        // reachable: ancestors of output (parents always have lower index)
        std::vector<char> reachable(frontier, 0);
        reachable[static_cast<std::size_t>(output)] = 1;
        for (std::size_t i = frontier; i-- > 0;) {
            if (!reachable[i]) continue;
            const Node& n = nodes_[i];
            if (n.a >= 0) reachable[static_cast<std::size_t>(n.a)] = 1;
            if (n.b >= 0) reachable[static_cast<std::size_t>(n.b)] = 1;
        }

        // needs: nodes on a path from output down to some wrt node
        std::vector<char> needs(frontier, 0);
        for (NodeId w : wrt)
            if (w >= 0 && static_cast<std::size_t>(w) < frontier) needs[static_cast<std::size_t>(w)] = 1;
        for (std::size_t i = 0; i < frontier; ++i) {
            const Node& n = nodes_[i];
            if ((n.a >= 0 && needs[static_cast<std::size_t>(n.a)]) ||
                (n.b >= 0 && needs[static_cast<std::size_t>(n.b)]))
                needs[i] = 1;
        }

        std::vector<NodeId> grad(frontier, -1);
        grad[static_cast<std::size_t>(output)] = constant(Tensor::scalar(1.0));

        auto accumulate = [&](NodeId parent, NodeId contrib) {
            const auto p = static_cast<std::size_t>(parent);
            check_grad_finite(contrib);
            grad[p] = (grad[p] < 0) ? contrib : add(grad[p], contrib);
        };

        struct Meta {
            Op op;
            NodeId a, b;
            double x0, x1;
            long i0;
        };
        for (std::size_t i = frontier; i-- > 0;) {
            if (!reachable[i] || grad[i] < 0 || !needs[i]) continue;
            const NodeId self = static_cast<NodeId>(i);
            const NodeId g = grad[i];
            // metadata snapshot: emitting nodes below may reallocate the arena
            const Meta n{nodes_[i].op, nodes_[i].a, nodes_[i].b, nodes_[i].x0, nodes_[i].x1, nodes_[i].i0};
            const bool need_a = n.a >= 0 && needs[static_cast<std::size_t>(n.a)];
            const bool need_b = n.b >= 0 && needs[static_cast<std::size_t>(n.b)];
            if (!need_a && !need_b) continue;

            switch (n.op) {
                case Op::Const:
                    break;
                case Op::Add:
                    if (need_a) accumulate(n.a, g);
                    if (need_b) accumulate(n.b, g);
                    break;
                case Op::Sub:
                    if (need_a) accumulate(n.a, g);
                    if (need_b) accumulate(n.b, neg(g));
                    break;
                case Op::Mul:
                    if (need_a) accumulate(n.a, mul(g, n.b));
                    if (need_b) accumulate(n.b, mul(g, n.a));
                    break;
                case Op::Div:
                    if (need_a) accumulate(n.a, div(g, n.b));
                    if (need_b) accumulate(n.b, neg(div(mul(g, self), n.b)));
                    break;
                case Op::SMul:
                    if (need_a) accumulate(n.a, sum(mul(g, n.b)));
                    if (need_b) accumulate(n.b, smul(n.a, g));
                    break;
                case Op::CMul:
                    if (need_a) accumulate(n.a, cmul(n.x0, g));
                    break;
                case Op::MatMul: {
                    const bool vec = val(n.b).rank() == 1;
                    if (vec) {
                        const std::size_t m = val(n.a).dim(0), k = val(n.a).dim(1);
                        if (need_a) accumulate(n.a, matmul(reshape(g, {m, 1}), reshape(n.b, {1, k})));
                        if (need_b) accumulate(n.b, matmul(transpose(n.a), g));
                    } else {
                        if (need_a) accumulate(n.a, matmul(g, transpose(n.b)));
                        if (need_b) accumulate(n.b, matmul(transpose(n.a), g));
                    }
                    break;
                }
                case Op::Transpose:
                    if (need_a) accumulate(n.a, transpose(g));
                    break;
                case Op::Reshape:
                    if (need_a) accumulate(n.a, reshape(g, val(n.a).shape()));
                    break;
                case Op::Concat:
                    if (need_a) accumulate(n.a, slice(g, 0, val(n.a).size()));
                    if (need_b) accumulate(n.b, slice(g, val(n.a).size(), val(n.b).size()));
                    break;
                case Op::Slice:
                    if (need_a)
                        accumulate(n.a, embed(g, static_cast<std::size_t>(n.i0), val(n.a).size()));
                    break;
                case Op::Embed:
                    if (need_a)
                        accumulate(n.a, slice(g, static_cast<std::size_t>(n.i0), val(n.a).size()));
                    break;
                case Op::Roll:
                    if (need_a) accumulate(n.a, roll(g, -n.i0));
                    break;
                case Op::LeakyRelu: {
                    if (!need_a) break;
                    Tensor mask = val(n.a);
                    for (auto& v : mask.data()) v = v > 0.0 ? 1.0 : n.x0;
                    accumulate(n.a, mul(g, constant(std::move(mask))));
                    break;
                }
                case Op::Tanh: {
                    if (!need_a) break;
                    accumulate(n.a, mul(g, sub(ones_like(self), square(self))));
                    break;
                }
                case Op::Square:
                    if (need_a) accumulate(n.a, mul(g, cmul(2.0, n.a)));
                    break;
                case Op::Sum:
                    if (need_a) accumulate(n.a, smul(g, ones_like(n.a)));
                    break;
                case Op::Mean:
                    if (need_a)
                        accumulate(n.a, cmul(1.0 / static_cast<double>(val(n.a).size()),
                                             smul(g, ones_like(n.a))));
                    break;
                case Op::SqrtEps:
                    if (need_a) accumulate(n.a, cmul(0.5, div(g, self)));
                    break;
                case Op::L2NormEps:
                    if (need_a) accumulate(n.a, smul(div(g, self), n.a));
                    break;
                case Op::Clamp: {
                    if (!need_a) break;
                    Tensor mask = val(n.a);
                    for (auto& v : mask.data()) v = (v > n.x0 && v < n.x1) ? 1.0 : 0.0;
                    accumulate(n.a, mul(g, constant(std::move(mask))));
                    break;
                }
                case Op::Acos: {
                    if (!need_a) break;
                    const NodeId one = ones_like(n.a);
                    const NodeId denom = sqrt_eps(sub(one, square(n.a)), kAcosDerivEps);
                    accumulate(n.a, neg(div(g, denom)));
                    break;
                }
            }
        }

        std::vector<NodeId> out;
        out.reserve(wrt.size());
        for (NodeId w : wrt) {
            const auto wi = static_cast<std::size_t>(w);
            if (w >= 0 && wi < frontier && grad[wi] >= 0)
                out.push_back(grad[wi]);
            else
                out.push_back(constant(Tensor::zeros(val(w).shape())));
        }
        return out;
    }

    std::vector<NodeId> backward(NodeId output, std::initializer_list<NodeId> wrt) {
        std::vector<NodeId> v(wrt);
        return backward(output, std::span<const NodeId>(v));
    }

private:
    NodeId ones_like(NodeId a) { return constant(Tensor::ones(val(a).shape())); }

    static long idx_mod(long i, long n) {
        long r = i % n;
        return r < 0 ? r + n : r;
    }

    const Tensor& val(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }

    Node make(Op op, NodeId a, NodeId b) const {
        Node n;
        n.op = op;
        n.a = a;
        n.b = b;
        n.requires_grad = (a >= 0 && nodes_[static_cast<std::size_t>(a)].requires_grad) ||
                          (b >= 0 && nodes_[static_cast<std::size_t>(b)].requires_grad);
        return n;
    }

    NodeId binary_same(Op op, NodeId a, NodeId b) {
        const Tensor& A = val(a);
        const Tensor& B = val(b);
        if (!A.same_shape(B))
            throw ShapeError(std::string(op_name(op)) + ": shape mismatch " + shape_str(A.shape()) +
                             " vs " + shape_str(B.shape()));
        Node n = make(op, a, b);
        n.value = A;
        auto& d = n.value.data();
        const auto& e = B.data();
        switch (op) {
            case Op::Add:
                for (std::size_t i = 0; i < d.size(); ++i) d[i] += e[i];
                break;
            case Op::Sub:
                for (std::size_t i = 0; i < d.size(); ++i) d[i] -= e[i];
                break;
            case Op::Mul:
                for (std::size_t i = 0; i < d.size(); ++i) d[i] *= e[i];
                break;
            case Op::Div:
                for (std::size_t i = 0; i < d.size(); ++i) d[i] /= e[i];
                break;
            default:
                throw DomainError("binary_same: not a binary op");
        }
        return push(std::move(n));
    }

    void check_grad_finite(NodeId id) const {
        const Node& n = nodes_.at(static_cast<std::size_t>(id));
        if (!n.value.all_finite())
            throw NumericError(std::string("backward: non-finite gradient at op '") + op_name(n.op) + "'");
    }

    NodeId push(Node n) {
        nodes_.push_back(std::move(n));
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    std::vector<Node> nodes_;
};

/// Builds a scalar node from a single input node.
using GraphFn = std::function<NodeId(Graph&, NodeId)>;

inline double eval_scalar(const GraphFn& f, const Tensor& point) {
    Graph g;
    const NodeId x = g.constant(point, true);
    return g.value(f(g, x))[0];
}

/// Max relative error between autodiff and central finite differences.
///
/// order 1 compares the gradient; order 2 compares the full Hessian obtained
/// by differentiating each gradient component again.
inline double grad_check(const GraphFn& f, const Tensor& point, int order, double h = 1e-4) {
    if (order != 1 && order != 2) throw DomainError("grad_check: order must be 1 or 2");
    const std::size_t n = point.size();
    const auto rel = [](double ad, double fd) { return std::fabs(ad - fd) / (std::fabs(fd) + 1e-8); };
    double worst = 0.0;

    if (order == 1) {
        Graph g;
        const NodeId x = g.constant(point, true);
        const NodeId out = f(g, x);
        const Tensor grad = g.value(g.backward(out, {x})[0]);
        for (std::size_t i = 0; i < n; ++i) {
            Tensor hi = point, lo = point;
            hi[i] += h;
            lo[i] -= h;
            const double fd = (eval_scalar(f, hi) - eval_scalar(f, lo)) / (2.0 * h);
            worst = std::max(worst, rel(grad[i], fd));
        }
        return worst;
    }

    for (std::size_t i = 0; i < n; ++i) {
        Graph g;
        const NodeId x = g.constant(point, true);
        const NodeId out = f(g, x);
        const NodeId gx = g.backward(out, {x})[0];
        const NodeId gi = g.slice(gx, i, 1);
        const Tensor hess_row = g.value(g.backward(gi, {x})[0]);
        for (std::size_t j = 0; j < n; ++j) {
            Tensor pp = point, pm = point, mp = point, mm = point;
            pp[i] += h; pp[j] += h;
            pm[i] += h; pm[j] -= h;
            mp[i] -= h; mp[j] += h;
            mm[i] -= h; mm[j] -= h;
            const double fd = (eval_scalar(f, pp) - eval_scalar(f, pm) - eval_scalar(f, mp) +
                               eval_scalar(f, mm)) /
                              (4.0 * h * h);
            worst = std::max(worst, rel(hess_row[j], fd));
        }
    }
    return worst;
}

}  // namespace pgfoil::ad
