#include "stkd/mixup.hpp"

#include <stdexcept>

namespace stkd {

void MixPolicy::validate() const {
    if (mode == MixMode::sampled_beta && !(alpha > 0.0))
        throw std::invalid_argument("MixPolicy: alpha must be positive");
    if (mode == MixMode::fixed && !(fixed_lambda >= 0.0 && fixed_lambda <= 1.0))
        throw std::invalid_argument("MixPolicy: fixed lambda must lie in [0,1]");
}

bool is_one_hot(const Tensor& labels) {
    if (labels.rank() != 2) return false;
    const std::size_t b = labels.rows(), c = labels.cols();
    for (std::size_t i = 0; i < b; ++i) {
        std::size_t ones = 0;
        for (std::size_t j = 0; j < c; ++j) {
            const double v = labels.data[i * c + j];
            if (v == 1.0)
                ++ones;
            else if (v != 0.0)
                return false;
        }
        if (ones != 1) return false;
    }
    return true;
}

VirtualBatch make_virtual_batch(const LabeledBatch& batch, const MixPolicy& policy, Rng& rng) {
    policy.validate();
    if (batch.inputs.rank() != 2 || batch.labels.rank() != 2)
        throw std::invalid_argument("make_virtual_batch: inputs and labels must be 2-D");
    const std::size_t b = batch.inputs.rows();
    if (b < 2) throw std::invalid_argument("make_virtual_batch: batch size must be at least 2");
    if (batch.labels.rows() != b)
        throw std::invalid_argument("make_virtual_batch: inputs and labels row counts differ");
    if (!is_one_hot(batch.labels))
        throw std::invalid_argument("make_virtual_batch: labels must be one-hot");

    const std::size_t d = batch.inputs.cols(), c = batch.labels.cols();

    VirtualBatch vb;
    vb.pair_index = rng.permutation(b);
    if (policy.per_batch) {
        vb.lambdas.assign(1, policy.mode == MixMode::fixed ? policy.fixed_lambda
                                                           : rng.beta(policy.alpha, policy.alpha));
    } else {
        vb.lambdas.resize(b);
        for (std::size_t i = 0; i < b; ++i)
            vb.lambdas[i] = policy.mode == MixMode::fixed ? policy.fixed_lambda
                                                          : rng.beta(policy.alpha, policy.alpha);
    }

    vb.inputs = Tensor::zeros({b, d});
    vb.labels_a = batch.labels;
    vb.labels_b = Tensor::zeros({b, c});
    for (std::size_t i = 0; i < b; ++i) {
        const std::size_t j = vb.pair_index[i];
        const double lam = vb.lambda_for_row(i);
        for (std::size_t k = 0; k < d; ++k)
            vb.inputs.data[i * d + k] =
                lam * batch.inputs.data[i * d + k] + (1.0 - lam) * batch.inputs.data[j * d + k];
        for (std::size_t k = 0; k < c; ++k)
            vb.labels_b.data[i * c + k] = batch.labels.data[j * c + k];
    }
    return vb;
}

Tensor mixed_label(const VirtualBatch& vb) {
    if (!vb.labels_a.same_shape(vb.labels_b))
        throw std::invalid_argument("mixed_label: label tensors differ in shape");
    const std::size_t b = vb.labels_a.rows(), c = vb.labels_a.cols();
    Tensor out = Tensor::zeros({b, c});
    for (std::size_t i = 0; i < b; ++i) {
        const double lam = vb.lambda_for_row(i);
        for (std::size_t j = 0; j < c; ++j)
            out.data[i * c + j] =
                lam * vb.labels_a.data[i * c + j] + (1.0 - lam) * vb.labels_b.data[i * c + j];
    }
    return out;
}

}  // namespace stkd
