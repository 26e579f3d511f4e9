#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "stkd/rng.hpp"
#include "stkd/tensor.hpp"

namespace stkd {

struct ImageShape {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
};

/// A minibatch of inputs [B x d] with one-hot labels [B x C].
struct LabeledBatch {
    Tensor inputs;
    Tensor labels;
    std::optional<ImageShape> image_shape;  // carried when d = h*w*c

    std::size_t size() const { return inputs.shape.empty() ? 0 : inputs.shape[0]; }
};

/// Mixup output: inputs are the convex blend of each row with its partner,
/// the two unmixed label sets are kept alongside the mixing coefficients.
///
/// lambdas has one entry when a single coefficient covers the whole batch
/// and B entries in per-pair mode; pair_index records the partner row.
struct VirtualBatch {
    Tensor inputs;
    Tensor labels_a;
    Tensor labels_b;
    std::vector<double> lambdas;
    std::vector<std::size_t> pair_index;

    bool per_batch() const { return lambdas.size() == 1; }
    double lambda_for_row(std::size_t row) const {
        return per_batch() ? lambdas[0] : lambdas[row];
    }
    std::size_t size() const { return inputs.shape.empty() ? 0 : inputs.shape[0]; }
};

enum class MixMode { sampled_beta, fixed };

struct MixPolicy {
    MixMode mode = MixMode::sampled_beta;
    double alpha = 1.0;         // Beta(alpha, alpha), sampled_beta mode
    double fixed_lambda = 0.5;  // fixed mode
    bool per_batch = true;      // one coefficient per batch vs per pair

    void validate() const;
};

/// True when every row has exactly one entry equal to 1 and the rest 0.
bool is_one_hot(const Tensor& labels);

/// Pairs each row i with row sigma(i) for a seeded uniform permutation sigma
/// of the batch, then blends inputs row-wise: lambda*x_i + (1-lambda)*x_sigma(i).
/// Labels are kept unmixed on both sides with the coefficients recorded.
/// Requires B >= 2 and one-hot labels.
VirtualBatch make_virtual_batch(const LabeledBatch& batch, const MixPolicy& policy, Rng& rng);

/// The blended label lambda*labels_a + (1-lambda)*labels_b, row-wise.
Tensor mixed_label(const VirtualBatch& vb);

}  // namespace stkd
