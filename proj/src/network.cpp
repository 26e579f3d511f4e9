#include "stkd/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "stkd/hash.hpp"

namespace stkd {

Layer Layer::affine(Tensor weight, Tensor bias) {
    if (weight.rank() != 2) throw std::invalid_argument("affine layer: weight must be 2-D");
    if (bias.rank() != 1 || bias.shape[0] != weight.shape[0])
        throw std::invalid_argument("affine layer: bias length must equal weight rows");
    Layer l;
    l.kind = LayerKind::affine;
    l.weight = std::move(weight);
    l.bias = std::move(bias);
    return l;
}

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw std::invalid_argument("Network: no layers");
    std::size_t width = 0;  // unknown until the first affine
    bool seen_affine = false;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& l = layers_[i];
        if (l.kind != LayerKind::affine) continue;
        const std::size_t in = l.weight.shape[1], out = l.weight.shape[0];
        if (seen_affine && in != width)
            throw std::invalid_argument("Network: layer " + std::to_string(i) + " expects input width " +
                                        std::to_string(in) + " but receives " + std::to_string(width));
        if (!seen_affine) {
            input_dim_ = in;
            seen_affine = true;
        }
        width = out;
    }
    if (!seen_affine) throw std::invalid_argument("Network: at least one affine layer required");
    output_dim_ = width;
}

Network Network::mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                     std::size_t classes, Rng& rng) {
    if (input_dim == 0 || classes == 0) throw std::invalid_argument("Network::mlp: zero dimension");
    std::vector<Layer> layers;
    std::size_t in = input_dim;
    auto push_affine = [&](std::size_t out) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        Tensor w = Tensor::zeros({out, in});
        for (double& v : w.data) v = rng.uniform(-bound, bound);
        Tensor b = Tensor::zeros({out});
        for (double& v : b.data) v = rng.uniform(-bound, bound);
        layers.push_back(Layer::affine(std::move(w), std::move(b)));
        in = out;
    };
    for (std::size_t h : hidden) {
        push_affine(h);
        layers.push_back(Layer::relu());
    }
    push_affine(classes);
    return Network(std::move(layers));
}

ForwardTrace Network::forward(const Tensor& batch) const {
    if (batch.rank() != 2)
        throw std::invalid_argument("Network::forward: batch must be 2-D [B x d]");
    if (batch.cols() != input_dim_)
        throw std::invalid_argument("Network::forward: layer 0 expects input width " +
                                    std::to_string(input_dim_) + ", got " +
                                    std::to_string(batch.cols()));
    ForwardTrace trace;
    trace.layer_inputs.reserve(layers_.size());
    Tensor x = batch;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& l = layers_[i];
        trace.layer_inputs.push_back(x);
        if (l.kind == LayerKind::affine) {
            if (x.cols() != l.weight.shape[1])
                throw std::invalid_argument("Network::forward: layer " + std::to_string(i) +
                                            " expects input width " + std::to_string(l.weight.shape[1]) +
                                            ", got " + std::to_string(x.cols()));
            Tensor out = matmul_transpose_b(x, l.weight);  // [B,in] x [out,in]^T
            const std::size_t b = out.rows(), o = out.cols();
            for (std::size_t r = 0; r < b; ++r)
                for (std::size_t c = 0; c < o; ++c) out.data[r * o + c] += l.bias.data[c];
            x = std::move(out);
        } else {
            Tensor out = x;
            for (double& v : out.data) v = v > 0.0 ? v : 0.0;
            x = std::move(out);
        }
    }
    trace.logits = std::move(x);
    return trace;
}

Tensor Network::logits(const Tensor& batch) const { return forward(batch).logits; }

Gradients Network::backward(const ForwardTrace& trace, const Tensor& grad_logits) const {
    if (!trace.valid())
        throw std::logic_error("Network::backward: no evaluation record; call forward first");
    if (trace.layer_inputs.size() != layers_.size())
        throw std::invalid_argument("Network::backward: trace does not match this network");
    if (!grad_logits.same_shape(trace.logits))
        throw std::invalid_argument("Network::backward: grad shape does not match logits");

    Gradients grads;
    grads.layers.resize(layers_.size());
    Tensor g = grad_logits;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        const Layer& l = layers_[i];
        const Tensor& in = trace.layer_inputs[i];
        if (l.kind == LayerKind::affine) {
            LayerGrads& lg = grads.layers[i];
            lg.weight = matmul_transpose_a(g, in);  // [B,out]^T x [B,in] = [out,in]
            lg.bias = Tensor::zeros({l.weight.shape[0]});
            const std::size_t b = g.rows(), o = g.cols();
            for (std::size_t r = 0; r < b; ++r)
                for (std::size_t c = 0; c < o; ++c) lg.bias.data[c] += g.data[r * o + c];
            g = matmul(g, l.weight);  // [B,out] x [out,in]
        } else {
            Tensor gg = g;
            for (std::size_t k = 0; k < gg.data.size(); ++k)
                if (in.data[k] <= 0.0) gg.data[k] = 0.0;
            g = std::move(gg);
        }
    }
    grads.input = std::move(g);
    return grads;
}

std::uint64_t Network::param_checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const Layer& l : layers_) {
        if (!l.has_params()) continue;
        h = fnv1a64(l.weight.data.data(), l.weight.data.size() * sizeof(double), h);
        h = fnv1a64(l.bias.data.data(), l.bias.data.size() * sizeof(double), h);
    }
    return h;
}

}  // namespace stkd
