#include "stkd/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace stkd {

namespace {

void require_distribution(const Tensor& target) {
    const std::size_t b = target.rows(), c = target.cols();
    for (std::size_t i = 0; i < b; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double v = target.data[i * c + j];
            if (!(v >= 0.0))  // also rejects NaN
                throw std::invalid_argument("cross_entropy: negative or NaN target entry");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("cross_entropy: target row does not sum to 1");
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

void require_finite_value(double v, const char* what) {
    if (!std::isfinite(v)) throw std::runtime_error(std::string(what) + ": non-finite loss value");
}

Tensor scale_logits(const Tensor& logits, double inv_t) {
    Tensor out = logits;
    for (double& v : out.data) v *= inv_t;
    return out;
}

}  // namespace

void KDHyper::validate() const {
    if (!(temperature > 0.0)) throw std::invalid_argument("KDHyper: temperature must be positive");
    if (!(balance >= 0.0)) throw std::invalid_argument("KDHyper: balance must be nonnegative");
}

LossBundle cross_entropy(const Tensor& student_logits, const Tensor& target) {
    require_same_shape(student_logits, target, "cross_entropy");
    require_distribution(target);
    const std::size_t b = student_logits.rows(), c = student_logits.cols();
    const Tensor log_p = log_softmax(student_logits);
    const Tensor p = softmax(student_logits);

    double value = 0.0;
    for (std::size_t i = 0; i < b * c; ++i) value -= target.data[i] * log_p.data[i];
    value /= static_cast<double>(b);

    LossBundle out;
    out.value = value;
    out.grad_logits = Tensor::zeros({b, c});
    for (std::size_t i = 0; i < b * c; ++i)
        out.grad_logits.data[i] = (p.data[i] - target.data[i]) / static_cast<double>(b);
    require_finite_value(out.value, "cross_entropy");
    return out;
}

LossBundle kd_softened_kl(const Tensor& student_logits, const Tensor& teacher_logits,
                          double temperature, bool t_squared_scaling) {
    if (!(temperature > 0.0))
        throw std::invalid_argument("kd_softened_kl: temperature must be positive");
    require_same_shape(student_logits, teacher_logits, "kd_softened_kl");
    const std::size_t b = student_logits.rows(), c = student_logits.cols();
    const double inv_t = 1.0 / temperature;

    const Tensor log_pt = log_softmax(scale_logits(teacher_logits, inv_t));
    const Tensor log_ps = log_softmax(scale_logits(student_logits, inv_t));

    double value = 0.0;
    for (std::size_t i = 0; i < b * c; ++i) {
        const double pt = std::exp(log_pt.data[i]);
        value += pt * (log_pt.data[i] - log_ps.data[i]);
    }
    value /= static_cast<double>(b);

    LossBundle out;
    out.grad_logits = Tensor::zeros({b, c});
    const double scale = t_squared_scaling ? temperature * temperature : 1.0;
    const double gscale = scale / (static_cast<double>(b) * temperature);
    for (std::size_t i = 0; i < b * c; ++i)
        out.grad_logits.data[i] = gscale * (std::exp(log_ps.data[i]) - std::exp(log_pt.data[i]));
    out.value = scale * value;
    require_finite_value(out.value, "kd_softened_kl");
    return out;
}

LossBundle vanilla_kd_loss(const Tensor& student_logits, const Tensor& teacher_logits,
                           const Tensor& one_hot, const KDHyper& h) {
    h.validate();
    LossBundle kd = kd_softened_kl(student_logits, teacher_logits, h.temperature,
                                   h.t_squared_scaling);
    const LossBundle ce = cross_entropy(student_logits, one_hot);
    kd.value += h.balance * ce.value;
    for (std::size_t i = 0; i < kd.grad_logits.data.size(); ++i)
        kd.grad_logits.data[i] += h.balance * ce.grad_logits.data[i];
    return kd;
}

LossBundle mix_loss(const Tensor& student_logits, const VirtualBatch& vb) {
    require_same_shape(student_logits, vb.labels_a, "mix_loss");
    require_same_shape(student_logits, vb.labels_b, "mix_loss");
    const std::size_t b = student_logits.rows(), c = student_logits.cols();
    const Tensor log_p = log_softmax(student_logits);
    const Tensor p = softmax(student_logits);

    double value = 0.0;
    LossBundle out;
    out.grad_logits = Tensor::zeros({b, c});
    for (std::size_t i = 0; i < b; ++i) {
        const double lam = vb.lambda_for_row(i);
        double ce_a = 0.0, ce_b = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const std::size_t k = i * c + j;
            ce_a -= vb.labels_a.data[k] * log_p.data[k];
            ce_b -= vb.labels_b.data[k] * log_p.data[k];
            const double mixed = lam * vb.labels_a.data[k] + (1.0 - lam) * vb.labels_b.data[k];
            out.grad_logits.data[k] = (p.data[k] - mixed) / static_cast<double>(b);
        }
        value += lam * ce_a + (1.0 - lam) * ce_b;
    }
    out.value = value / static_cast<double>(b);
    require_finite_value(out.value, "mix_loss");
    return out;
}

LossBundle stkd_total_loss(const Tensor& student_logits, const Tensor& teacher_logits,
                           const VirtualBatch& vb, DistillTerm term) {
    require_same_shape(student_logits, teacher_logits, "stkd_total_loss");
    LossBundle out = mix_loss(student_logits, vb);
    const std::size_t b = student_logits.rows(), c = student_logits.cols();
    const double inv_b = 1.0 / static_cast<double>(b);

    if (term == DistillTerm::mse) {
        double value = 0.0;
        for (std::size_t i = 0; i < b * c; ++i) {
            const double diff = student_logits.data[i] - teacher_logits.data[i];
            value += diff * diff;
            out.grad_logits.data[i] += 2.0 * diff * inv_b;
        }
        out.value += value * inv_b;
    } else {
        const Tensor log_pt = log_softmax(teacher_logits);
        const Tensor log_ps = log_softmax(student_logits);
        double value = 0.0;
        for (std::size_t i = 0; i < b * c; ++i) {
            const double pt = std::exp(log_pt.data[i]);
            // KL keeps the teacher-entropy term; CE-against-teacher drops it.
            // Both share the (p_s - p_t)/B gradient.
            value += term == DistillTerm::kl ? pt * (log_pt.data[i] - log_ps.data[i])
                                             : -pt * log_ps.data[i];
            out.grad_logits.data[i] += inv_b * (std::exp(log_ps.data[i]) - pt);
        }
        out.value += value * inv_b;
    }
    require_finite_value(out.value, "stkd_total_loss");
    return out;
}

}  // namespace stkd
