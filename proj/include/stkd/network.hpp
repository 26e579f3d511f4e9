#pragma once

#include <cstdint>
#include <vector>

#include "stkd/rng.hpp"
#include "stkd/tensor.hpp"

namespace stkd {

enum class LayerKind { affine, relu };

/// One layer of an MLP stack. Affine layers own weight [out x in] and
/// bias [out]; relu layers have no parameters.
struct Layer {
    LayerKind kind = LayerKind::relu;
    Tensor weight;
    Tensor bias;

    static Layer affine(Tensor weight, Tensor bias);
    static Layer relu() { return Layer{}; }
    bool has_params() const { return kind == LayerKind::affine; }
};

/// Parameter-shaped gradient (or velocity) buffers for one layer.
struct LayerGrads {
    Tensor weight;
    Tensor bias;
};

/// Evaluation record of one forward pass: the input seen by each layer plus
/// the final logits. Backward consumes this instead of any state stored on
/// the network, so independent passes never interfere.
struct ForwardTrace {
    std::vector<Tensor> layer_inputs;
    Tensor logits;

    bool valid() const { return !layer_inputs.empty(); }
};

struct Gradients {
    Tensor input;                    // d(loss)/d(batch)
    std::vector<LayerGrads> layers;  // aligned one-to-one with Network::layers()
};

/// An ordered affine/relu stack. Forward is a pure function of
/// (input, parameters); evaluation state lives in the returned trace.
class Network {
public:
    Network() = default;
    explicit Network(std::vector<Layer> layers);

    /// affine(d,h1) relu affine(h1,h2) relu ... affine(hk,classes), weights
    /// uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)] drawn from rng.
    static Network mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                       std::size_t classes, Rng& rng);

    ForwardTrace forward(const Tensor& batch) const;
    /// Forward pass that keeps no trace; for inference (e.g. a frozen teacher).
    Tensor logits(const Tensor& batch) const;

    /// Backpropagates grad_logits through the pass recorded in trace.
    /// Throws std::logic_error if trace is empty (backward before forward).
    Gradients backward(const ForwardTrace& trace, const Tensor& grad_logits) const;

    std::size_t input_dim() const { return input_dim_; }
    std::size_t output_dim() const { return output_dim_; }
    std::size_t layer_count() const { return layers_.size(); }
    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }

    /// FNV-1a over all parameter bytes, in layer order.
    std::uint64_t param_checksum() const;

private:
    std::vector<Layer> layers_;
    std::size_t input_dim_ = 0;
    std::size_t output_dim_ = 0;
};

}  // namespace stkd
