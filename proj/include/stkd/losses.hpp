#pragma once

#include "stkd/mixup.hpp"
#include "stkd/tensor.hpp"

namespace stkd {

/// Scalar objective value plus its gradient with respect to student logits.
struct LossBundle {
    double value = 0.0;
    Tensor grad_logits;
};

/// Hyperparameters of the temperature-softened baseline objective.
struct KDHyper {
    double temperature = 4.0;
    double balance = 1.0;
    /// The softened-KL objective is implemented literally, without the
    /// classical t^2 gradient-scale compensation; this opt-in restores it.
    bool t_squared_scaling = false;

    void validate() const;
};

/// Which distillation term the similarity-transfer total loss uses between
/// the un-tempered teacher and student distributions.
enum class DistillTerm { kl, cross_entropy, mse };

/// Mean cross-entropy against a target distribution (rows must sum to 1):
///   value = -(1/B) sum_b sum_c target * log softmax(logits)
///   grad  = (softmax(logits) - target) / B
LossBundle cross_entropy(const Tensor& student_logits, const Tensor& target);

/// Batch-mean KL between temperature-softened softmaxes,
///   (1/B) sum_b KL(softmax(teacher/t) || softmax(student/t)),
/// teacher treated as a constant. Gradient flows to student logits only.
LossBundle kd_softened_kl(const Tensor& student_logits, const Tensor& teacher_logits,
                          double temperature, bool t_squared_scaling = false);

/// Softened KL plus balance-weighted cross-entropy against the hard labels.
LossBundle vanilla_kd_loss(const Tensor& student_logits, const Tensor& teacher_logits,
                           const Tensor& one_hot, const KDHyper& h);

/// Row-wise lambda-weighted cross-entropy against the two unmixed label sets:
///   (1/B) sum_b [ lambda_b * H_b(labels_a) + (1-lambda_b) * H_b(labels_b) ]
LossBundle mix_loss(const Tensor& student_logits, const VirtualBatch& vb);

/// Total similarity-transfer objective: mix_loss plus the distillation term
/// between plain (un-tempered) softmax outputs on the same virtual inputs.
LossBundle stkd_total_loss(const Tensor& student_logits, const Tensor& teacher_logits,
                           const VirtualBatch& vb, DistillTerm term = DistillTerm::kl);

}  // namespace stkd
