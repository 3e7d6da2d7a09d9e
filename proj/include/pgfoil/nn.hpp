// Generator/critic MLPs and the Adam optimizer.
//
// Both networks are plain fully connected stacks over the autodiff graph.
// Conditioning is the simplest cGAN form: the scalar label is concatenated to
// the input vector of both networks.

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "pgfoil/errors.hpp"
#include "pgfoil/graph.hpp"
#include "pgfoil/rng.hpp"
#include "pgfoil/tensor.hpp"

namespace pgfoil::nn {

using ad::Graph;
using ad::NodeId;
using ad::Tensor;

enum class Activation { Linear, LeakyRelu, Tanh };

inline std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Linear: return "linear";
        case Activation::LeakyRelu: return "leaky-relu";
        case Activation::Tanh: return "tanh";
    }
    return "?";
}

struct MlpParams {
    std::vector<Tensor> weights;       // weights[l] has shape [out_l, in_l]
    std::vector<Tensor> biases;        // biases[l] has shape [out_l]
    std::vector<Activation> acts;      // activation applied after layer l
    double leaky_slope = 0.2;

    std::size_t layers() const { return weights.size(); }
    std::size_t input_dim() const { return weights.front().dim(1); }
    std::size_t output_dim() const { return weights.back().dim(0); }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& w : weights) n += w.size();
        for (const auto& b : biases) n += b.size();
        return n;
    }
};

/// Xavier-uniform weights, zero biases; hidden layers use `hidden_act`,
/// the output layer is linear.
inline MlpParams init_mlp(const std::vector<std::size_t>& layer_dims, Activation hidden_act,
                          std::uint64_t seed, double leaky_slope = 0.2) {
    if (layer_dims.size() < 2) throw DomainError("init_mlp: need at least input and output dims");
    for (std::size_t d : layer_dims)
        if (d == 0) throw DomainError("init_mlp: layer dims must be positive");

    Rng rng(seed);
    MlpParams p;
    p.leaky_slope = leaky_slope;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const std::size_t fan_in = layer_dims[l];
        const std::size_t fan_out = layer_dims[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Tensor w({fan_out, fan_in});
        for (auto& v : w.data()) v = rng.uniform(-limit, limit);
        p.weights.push_back(std::move(w));
        p.biases.push_back(Tensor({fan_out}));
        const bool last = l + 2 == layer_dims.size();
        p.acts.push_back(last ? Activation::Linear : hidden_act);
    }
    return p;
}

/// Graph handles for one network's parameters.
struct MlpNodes {
    std::vector<NodeId> weights;
    std::vector<NodeId> biases;
    const MlpParams* params = nullptr;

    /// Flattened [w0, b0, w1, b1, ...] order; matches grad/Adam layout.
    std::vector<NodeId> all() const {
        std::vector<NodeId> out;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            out.push_back(weights[l]);
            out.push_back(biases[l]);
        }
        return out;
    }
};

inline MlpNodes lift(Graph& g, const MlpParams& p, bool requires_grad) {
    MlpNodes n;
    n.params = &p;
    for (std::size_t l = 0; l < p.layers(); ++l) {
        n.weights.push_back(g.constant(p.weights[l], requires_grad));
        n.biases.push_back(g.constant(p.biases[l], requires_grad));
    }
    return n;
}

inline NodeId mlp_forward(Graph& g, const MlpNodes& net, NodeId input) {
    const MlpParams& p = *net.params;
    NodeId h = input;
    for (std::size_t l = 0; l < p.layers(); ++l) {
        h = g.add(g.matmul(net.weights[l], h), net.biases[l]);
        switch (p.acts[l]) {
            case Activation::Linear: break;
            case Activation::LeakyRelu: h = g.leaky_relu(h, p.leaky_slope); break;
            case Activation::Tanh: h = g.tanh_(h); break;
        }
    }
    return h;
}

/// Graph-free forward pass. Loop structure matches the graph ops exactly so
/// both paths produce bit-identical values.
inline Tensor mlp_eval(const MlpParams& p, const Tensor& input) {
    if (input.rank() != 1 || input.size() != p.input_dim())
        throw ShapeError("mlp_eval: input shape " + ad::shape_str(input.shape()) + " does not match first layer [" +
                         std::to_string(p.input_dim()) + "]");
    Tensor h = input;
    for (std::size_t l = 0; l < p.layers(); ++l) {
        const Tensor& w = p.weights[l];
        const std::size_t m = w.dim(0), k = w.dim(1);
        Tensor out({m});
        for (std::size_t i = 0; i < m; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < k; ++j) acc += w.at2(i, j) * h[j];
            out[i] = acc + p.biases[l][i];
        }
        switch (p.acts[l]) {
            case Activation::Linear: break;
            case Activation::LeakyRelu:
                for (auto& v : out.data())
                    if (v < 0.0) v *= p.leaky_slope;
                break;
            case Activation::Tanh:
                for (auto& v : out.data()) v = std::tanh(v);
                break;
        }
        h = std::move(out);
    }
    return h;
}

/// G(z | label): label concatenated to the latent vector.
inline NodeId generator_forward(Graph& g, const MlpNodes& gen, NodeId z, NodeId label) {
    const NodeId in = g.concat(z, label);
    if (g.value(in).size() != gen.params->input_dim())
        throw ShapeError("generator_forward: z+label length " + std::to_string(g.value(in).size()) +
                         " does not match generator input [" + std::to_string(gen.params->input_dim()) + "]");
    return mlp_forward(g, gen, in);
}

inline NodeId generator_forward(Graph& g, const MlpParams& gen, const Tensor& z, const Tensor& label) {
    const MlpNodes nodes = lift(g, gen, false);
    return generator_forward(g, nodes, g.constant(z), g.constant(label));
}

/// D(x | label): scalar Wasserstein critic score, no output squashing.
inline NodeId critic_forward(Graph& g, const MlpNodes& critic, NodeId x, NodeId label) {
    const NodeId in = g.concat(x, label);
    if (g.value(in).size() != critic.params->input_dim())
        throw ShapeError("critic_forward: x+label length " + std::to_string(g.value(in).size()) +
                         " does not match critic input [" + std::to_string(critic.params->input_dim()) + "]");
    return mlp_forward(g, critic, in);
}

inline NodeId critic_forward(Graph& g, const MlpParams& critic, const Tensor& x, const Tensor& label) {
    const MlpNodes nodes = lift(g, critic, false);
    return critic_forward(g, nodes, g.constant(x), g.constant(label));
}

struct LatentSpec {
    enum class Dist { Uniform, Normal };
    std::size_t dim = 10;
    Dist dist = Dist::Uniform;

    Tensor sample(Rng& rng) const {
        Tensor z({dim});
        for (auto& v : z.data()) v = dist == Dist::Uniform ? rng.uniform(-1.0, 1.0) : rng.normal();
        return z;
    }
};

struct AdamState {
    std::vector<Tensor> m;  // first moments, [w0, b0, w1, b1, ...]
    std::vector<Tensor> v;  // second moments
    long t = 0;
    double alpha = 1e-4;
    double beta1 = 0.0;
    double beta2 = 0.9;
    double eps = 1e-8;

    static AdamState init(const MlpParams& p, double alpha, double beta1, double beta2) {
        AdamState s;
        s.alpha = alpha;
        s.beta1 = beta1;
        s.beta2 = beta2;
        for (std::size_t l = 0; l < p.layers(); ++l) {
            s.m.push_back(Tensor::zeros(p.weights[l].shape()));
            s.m.push_back(Tensor::zeros(p.biases[l].shape()));
            s.v.push_back(Tensor::zeros(p.weights[l].shape()));
            s.v.push_back(Tensor::zeros(p.biases[l].shape()));
        }
        return s;
    }
};

/// One bias-corrected Adam update. `grads` follows the [w0, b0, w1, b1, ...]
/// layout of MlpNodes::all(). Throws NumericError on non-finite gradients.
inline void adam_step(MlpParams& p, const std::vector<Tensor>& grads, AdamState& s) {
    const std::size_t n_tensors = 2 * p.layers();
    if (grads.size() != n_tensors || s.m.size() != n_tensors)
        throw ShapeError("adam_step: gradient/state tensor count mismatch");
    for (std::size_t i = 0; i < n_tensors; ++i)
        if (!grads[i].all_finite()) throw NumericError("adam_step: non-finite gradient (tensor " + std::to_string(i) + ")");

    s.t += 1;
    const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
    const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));

    for (std::size_t i = 0; i < n_tensors; ++i) {
        Tensor& param = (i % 2 == 0) ? p.weights[i / 2] : p.biases[i / 2];
        const Tensor& grad = grads[i];
        if (!param.same_shape(grad))
            throw ShapeError("adam_step: gradient shape " + ad::shape_str(grad.shape()) +
                             " does not match parameter " + ad::shape_str(param.shape()));
        for (std::size_t j = 0; j < param.size(); ++j) {
            const double gj = grad[j];
            s.m[i][j] = s.beta1 * s.m[i][j] + (1.0 - s.beta1) * gj;
            s.v[i][j] = s.beta2 * s.v[i][j] + (1.0 - s.beta2) * gj * gj;
            const double mhat = s.m[i][j] / bc1;
            const double vhat = s.v[i][j] / bc2;
            param[j] -= s.alpha * mhat / (std::sqrt(vhat) + s.eps);
        }
    }
}

}  // namespace pgfoil::nn
