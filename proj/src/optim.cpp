#include "stkd/optim.hpp"

#include <stdexcept>

namespace stkd {

void SgdConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("SgdConfig: learning rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw std::invalid_argument("SgdConfig: momentum must lie in [0,1)");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("SgdConfig: weight decay must be nonnegative");
}

SgdState::SgdState(const Network& net, SgdConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    velocity_.reserve(net.layer_count());
    for (const Layer& l : net.layers()) {
        LayerGrads v;
        if (l.has_params()) {
            v.weight = Tensor::zeros(l.weight.shape);
            v.bias = Tensor::zeros(l.bias.shape);
        }
        velocity_.push_back(std::move(v));
    }
}

void SgdState::set_learning_rate(double lr) {
    if (!(lr > 0.0)) throw std::invalid_argument("SgdState: learning rate must be positive");
    cfg_.learning_rate = lr;
}

void SgdState::step(Network& net, const Gradients& grads) {
    if (grads.layers.size() != velocity_.size())
        throw std::invalid_argument("SgdState::step: gradient count does not match network");

    auto update = [&](Tensor& param, const Tensor& grad, Tensor& vel) {
        if (!param.same_shape(grad) || !param.same_shape(vel))
            throw std::invalid_argument("SgdState::step: shape mismatch between param and grad");
        for (std::size_t i = 0; i < param.data.size(); ++i) {
            const double g = grad.data[i] + cfg_.weight_decay * param.data[i];
            vel.data[i] = cfg_.momentum * vel.data[i] + g;
            const double d = cfg_.nesterov ? g + cfg_.momentum * vel.data[i] : vel.data[i];
            param.data[i] -= cfg_.learning_rate * d;
        }
    };

    auto& layers = net.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (!layers[i].has_params()) continue;
        update(layers[i].weight, grads.layers[i].weight, velocity_[i].weight);
        update(layers[i].bias, grads.layers[i].bias, velocity_[i].bias);
    }
}

void StepSchedule::validate() const {
    if (!(initial_lr > 0.0)) throw std::invalid_argument("StepSchedule: initial lr must be positive");
    if (!(factor > 0.0 && factor < 1.0))
        throw std::invalid_argument("StepSchedule: factor must lie in (0,1)");
    for (std::size_t i = 1; i < milestones.size(); ++i)
        if (milestones[i] <= milestones[i - 1])
            throw std::invalid_argument("StepSchedule: milestones must be strictly increasing");
}

double StepSchedule::lr_at_epoch(int epoch) const {
    double lr = initial_lr;
    for (int m : milestones)
        if (m <= epoch) lr *= factor;
    return lr;
}

}  // namespace stkd
