#pragma once

#include <vector>

#include "stkd/network.hpp"

namespace stkd {

struct SgdConfig {
    double learning_rate = 0.1;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    bool nesterov = false;

    void validate() const;
};

/// SGD with momentum and coupled weight decay. The velocity buffers mirror
/// the parameters of the network the state was built for.
///
/// Per parameter: v <- momentum*v + grad + weight_decay*param,
/// then param <- param - lr*v (nesterov applies the lookahead form).
class SgdState {
public:
    SgdState(const Network& net, SgdConfig cfg);

    void set_learning_rate(double lr);
    const SgdConfig& config() const { return cfg_; }

    /// One update step; grads must come from the same network.
    void step(Network& net, const Gradients& grads);

private:
    SgdConfig cfg_;
    std::vector<LayerGrads> velocity_;
};

struct StepSchedule {
    double initial_lr = 0.1;
    std::vector<int> milestones{80, 100, 150};
    double factor = 0.1;

    void validate() const;
    /// initial_lr * factor^(number of milestones <= epoch); the decay takes
    /// effect at the milestone epoch itself.
    double lr_at_epoch(int epoch) const;
};

}  // namespace stkd
