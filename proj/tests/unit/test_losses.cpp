#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "../support/oracles.hpp"
#include "stkd/losses.hpp"
#include "stkd/network.hpp"
#include "stkd/rng.hpp"

using namespace stkd;

namespace {

Tensor random_logits(Rng& rng, std::size_t b, std::size_t c, double scale = 2.0) {
    Tensor t = Tensor::zeros({b, c});
    for (double& v : t.data) v = rng.uniform(-scale, scale);
    return t;
}

Tensor random_one_hot(Rng& rng, std::size_t b, std::size_t c) {
    Tensor t = Tensor::zeros({b, c});
    for (std::size_t i = 0; i < b; ++i) t.at(i, rng.bounded(c)) = 1.0;
    return t;
}

VirtualBatch random_virtual(Rng& rng, std::size_t b, std::size_t c, double lambda) {
    VirtualBatch vb;
    vb.labels_a = random_one_hot(rng, b, c);
    vb.labels_b = random_one_hot(rng, b, c);
    vb.lambdas = {lambda};
    return vb;
}

}  // namespace

TEST_CASE("cross entropy of a uniform prediction is ln C") {
    for (std::size_t c : {2, 5, 9}) {
        Rng rng(c);
        const Tensor logits = Tensor::zeros({3, c});  // all equal
        const Tensor target = random_one_hot(rng, 3, c);
        const LossBundle lb = cross_entropy(logits, target);
        CHECK(lb.value == doctest::Approx(std::log(static_cast<double>(c))).epsilon(1e-12));
    }
}

TEST_CASE("cross entropy gradient vanishes at the matching distribution") {
    Rng rng(41);
    const Tensor logits = random_logits(rng, 4, 5);
    const Tensor target = softmax(logits);
    const LossBundle lb = cross_entropy(logits, target);
    for (double v : lb.grad_logits.data) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("cross entropy rejects non-distribution targets") {
    const Tensor logits = Tensor::matrix({{0.0, 1.0}});
    CHECK_THROWS_AS(cross_entropy(logits, Tensor::matrix({{0.4, 0.4}})), std::invalid_argument);
    CHECK_THROWS_AS(cross_entropy(logits, Tensor::matrix({{1.5, -0.5}})), std::invalid_argument);
}

TEST_CASE("cross entropy value: frozen high-precision case and random oracle sweep") {
    // frozen: logits [1,2,3], target [0.2,0.3,0.5], computed with 50-digit arithmetic
    const LossBundle fixed = cross_entropy(Tensor::matrix({{1.0, 2.0, 3.0}}),
                                           Tensor::matrix({{0.2, 0.3, 0.5}}));
    CHECK(std::abs(fixed.value - 1.1076059644443803044829) < 1e-12);

    Rng rng(42);
    for (int trial = 0; trial < 100; ++trial) {
        const Tensor logits = random_logits(rng, 4, 5);
        const Tensor target = random_one_hot(rng, 4, 5);
        const LossBundle lb = cross_entropy(logits, target);
        CHECK(std::abs(lb.value - oracle::ce_oracle(logits, target)) < 1e-12);
        // gradient identity (softmax - target)/B
        const Tensor p = softmax(logits);
        for (std::size_t i = 0; i < lb.grad_logits.data.size(); ++i)
            CHECK(lb.grad_logits.data[i] ==
                  doctest::Approx((p.data[i] - target.data[i]) / 4.0).epsilon(1e-14));
    }
}

TEST_CASE("softened KL is zero for identical logits at any temperature") {
    Rng rng(43);
    const Tensor logits = random_logits(rng, 3, 4);
    for (double t : {1.0, 4.0, 1000.0}) {
        const LossBundle lb = kd_softened_kl(logits, logits, t);
        CHECK(std::abs(lb.value) <= 1e-12);
        for (double v : lb.grad_logits.data) CHECK(std::abs(v) <= 1e-12);
    }
}

TEST_CASE("softened KL: frozen case, oracle sweep, rejection of bad temperature") {
    // frozen: B=1, C=3, student [1,0,0], teacher [0,0,1], t=4 (50-digit value)
    const LossBundle fixed = kd_softened_kl(Tensor::matrix({{1.0, 0.0, 0.0}}),
                                            Tensor::matrix({{0.0, 0.0, 1.0}}), 4.0);
    CHECK(std::abs(fixed.value - 0.021621743184786972206611) < 1e-12);

    Rng rng(44);
    for (int trial = 0; trial < 100; ++trial) {
        const Tensor s = random_logits(rng, 3, 6);
        const Tensor t = random_logits(rng, 3, 6);
        const double temp = 0.5 + rng.uniform() * 7.5;
        const LossBundle lb = kd_softened_kl(s, t, temp);
        CHECK(std::abs(lb.value - oracle::kd_kl_oracle(s, t, temp)) < 1e-12);
        CHECK(lb.value >= 0.0);
    }
    CHECK_THROWS_AS(kd_softened_kl(Tensor::matrix({{0.0}}), Tensor::matrix({{0.0}}), 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(kd_softened_kl(Tensor::matrix({{0.0}}), Tensor::matrix({{0.0}}), -1.0),
                    std::invalid_argument);
}

TEST_CASE("softened KL fades to zero as temperature grows (no t^2 compensation)") {
    Rng rng(45);
    const Tensor s = random_logits(rng, 4, 5, 1.0);  // unit-scale logits
    const Tensor t = random_logits(rng, 4, 5, 1.0);
    double prev = 1e300;
    for (double temp : {1.0, 4.0, 16.0, 64.0, 256.0}) {
        const double v = kd_softened_kl(s, t, temp).value;
        CHECK(v < prev);
        prev = v;
    }
    CHECK(kd_softened_kl(s, t, 1000.0).value <= 1e-6);
    // numerically confirmed against the high-precision oracle
    CHECK(std::abs(kd_softened_kl(s, t, 1000.0).value - oracle::kd_kl_oracle(s, t, 1000.0)) <
          1e-15);
}

TEST_CASE("t^2 compensation scales value and gradient") {
    Rng rng(46);
    const Tensor s = random_logits(rng, 2, 3);
    const Tensor t = random_logits(rng, 2, 3);
    const LossBundle plain = kd_softened_kl(s, t, 4.0, false);
    const LossBundle scaled = kd_softened_kl(s, t, 4.0, true);
    CHECK(scaled.value == doctest::Approx(16.0 * plain.value).epsilon(1e-12));
    for (std::size_t i = 0; i < plain.grad_logits.data.size(); ++i)
        CHECK(scaled.grad_logits.data[i] ==
              doctest::Approx(16.0 * plain.grad_logits.data[i]).epsilon(1e-12));
}

TEST_CASE("vanilla KD composite equals the sum of its component oracles") {
    Rng rng(47);
    KDHyper h;
    h.temperature = 4.0;

    SUBCASE("zero balance reduces to the softened KL alone") {
        h.balance = 0.0;
        const Tensor s = random_logits(rng, 3, 4);
        const Tensor t = random_logits(rng, 3, 4);
        const Tensor y = random_one_hot(rng, 3, 4);
        const LossBundle lb = vanilla_kd_loss(s, t, y, h);
        const LossBundle kd = kd_softened_kl(s, t, h.temperature);
        CHECK(lb.value == doctest::Approx(kd.value).epsilon(1e-14));
    }

    SUBCASE("identical logits leave only the cross-entropy term") {
        h.balance = 1.0;
        // near-saturated logits whose argmax matches the one-hot target
        const Tensor s = Tensor::matrix({{9.0, -9.0, -9.0}, {-9.0, 9.0, -9.0}});
        const Tensor y = Tensor::matrix({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}});
        const LossBundle lb = vanilla_kd_loss(s, s, y, h);
        const LossBundle ce = cross_entropy(s, y);
        CHECK(lb.value == doctest::Approx(ce.value).epsilon(1e-12));
    }

    SUBCASE("random instances match ce + kl oracles") {
        for (int trial = 0; trial < 100; ++trial) {
            h.balance = rng.uniform() * 2.0;
            const Tensor s = random_logits(rng, 4, 5);
            const Tensor t = random_logits(rng, 4, 5);
            const Tensor y = random_one_hot(rng, 4, 5);
            const LossBundle lb = vanilla_kd_loss(s, t, y, h);
            const double expect = oracle::kd_kl_oracle(s, t, h.temperature) +
                                  h.balance * oracle::ce_oracle(s, y);
            CHECK(std::abs(lb.value - expect) < 1e-12);
        }
    }

    SUBCASE("invalid hyperparameters are rejected") {
        KDHyper bad;
        bad.temperature = -2.0;
        const Tensor one = Tensor::matrix({{0.0, 0.0}});
        CHECK_THROWS_AS(vanilla_kd_loss(one, one, Tensor::matrix({{1.0, 0.0}}), bad),
                        std::invalid_argument);
    }
}

TEST_CASE("mix loss degenerate cases") {
    Rng rng(48);
    const Tensor logits = random_logits(rng, 3, 4);
    VirtualBatch vb = random_virtual(rng, 3, 4, 1.0);

    SUBCASE("lambda=1 is plain cross entropy against labels_a") {
        const LossBundle lb = mix_loss(logits, vb);
        const LossBundle ce = cross_entropy(logits, vb.labels_a);
        CHECK(lb.value == doctest::Approx(ce.value).epsilon(1e-14));
    }

    SUBCASE("equal label sets collapse to one cross entropy for any lambda") {
        vb.labels_b = vb.labels_a;
        for (double lam : {0.0, 0.3, 0.7}) {
            vb.lambdas = {lam};
            const LossBundle lb = mix_loss(logits, vb);
            const LossBundle ce = cross_entropy(logits, vb.labels_a);
            CHECK(lb.value == doctest::Approx(ce.value).epsilon(1e-14));
        }
    }
}

TEST_CASE("mix loss matches the scalar-loop oracle on random instances") {
    Rng rng(49);
    for (int trial = 0; trial < 100; ++trial) {
        const Tensor logits = random_logits(rng, 2, 3);
        const VirtualBatch vb = random_virtual(rng, 2, 3, 0.5);
        const LossBundle lb = mix_loss(logits, vb);
        CHECK(std::abs(lb.value - oracle::mix_oracle(logits, vb)) < 1e-12);
        CHECK(lb.value >= 0.0);
    }
}

TEST_CASE("mix loss handles per-pair coefficients") {
    Rng rng(50);
    const Tensor logits = random_logits(rng, 4, 3);
    VirtualBatch vb = random_virtual(rng, 4, 3, 0.5);
    vb.lambdas = {0.1, 0.9, 0.4, 0.6};
    const LossBundle lb = mix_loss(logits, vb);
    CHECK(std::abs(lb.value - oracle::mix_oracle(logits, vb)) < 1e-12);
}

TEST_CASE("total loss: KL term vanishes for identical networks") {
    Rng rng(51);
    const Tensor logits = random_logits(rng, 3, 4);
    const VirtualBatch vb = random_virtual(rng, 3, 4, 1.0);
    const LossBundle total = stkd_total_loss(logits, logits, vb);
    const LossBundle mix = mix_loss(logits, vb);
    CHECK(total.value == doctest::Approx(mix.value).epsilon(1e-12));
}

TEST_CASE("total loss equals mix oracle + KL oracle on random instances") {
    Rng rng(52);
    for (int trial = 0; trial < 100; ++trial) {
        const Tensor s = random_logits(rng, 3, 5);
        const Tensor t = random_logits(rng, 3, 5);
        const VirtualBatch vb = random_virtual(rng, 3, 5, 0.46);
        const LossBundle lb = stkd_total_loss(s, t, vb);
        CHECK(std::abs(lb.value - oracle::stkd_total_oracle(s, t, vb)) < 1e-12);
        CHECK(lb.value >= 0.0);
    }
}

TEST_CASE("total loss distillation term variants") {
    Rng rng(53);
    const Tensor s = random_logits(rng, 2, 4);
    const Tensor t = random_logits(rng, 2, 4);
    const VirtualBatch vb = random_virtual(rng, 2, 4, 0.5);

    const double mix = mix_loss(s, vb).value;
    // cross_entropy variant = KL variant + teacher entropy (constant shift)
    const double kl = stkd_total_loss(s, t, vb, DistillTerm::kl).value - mix;
    const double ce = stkd_total_loss(s, t, vb, DistillTerm::cross_entropy).value - mix;
    const Tensor pt = softmax(t);
    double teacher_entropy = 0.0;
    for (std::size_t i = 0; i < pt.data.size(); ++i)
        teacher_entropy -= pt.data[i] * std::log(pt.data[i]);
    teacher_entropy /= 2.0;  // batch mean
    CHECK(ce == doctest::Approx(kl + teacher_entropy).epsilon(1e-12));

    // mse variant: (1/B) sum of squared logit differences
    const double mse = stkd_total_loss(s, t, vb, DistillTerm::mse).value - mix;
    double expect = 0.0;
    for (std::size_t i = 0; i < s.data.size(); ++i) {
        const double diff = s.data[i] - t.data[i];
        expect += diff * diff;
    }
    CHECK(mse == doctest::Approx(expect / 2.0).epsilon(1e-12));
}

TEST_CASE("gradients of every composite loss match finite differences") {
    Rng rng(54);
    for (int trial = 0; trial < 3; ++trial) {
        const std::size_t d = 3, c = 2 + rng.bounded(4), b = 2 + rng.bounded(7);
        std::vector<std::size_t> hidden;
        for (std::size_t i = 0, n = rng.bounded(3); i < n; ++i) hidden.push_back(2 + rng.bounded(14));
        Network net = Network::mlp(d, hidden, c, rng);

        Tensor batch = Tensor::zeros({b, d});
        for (double& v : batch.data) v = rng.uniform(-1.0, 1.0);
        const Tensor teacher = random_logits(rng, b, c);
        const Tensor one_hot = random_one_hot(rng, b, c);
        VirtualBatch vb = random_virtual(rng, b, c, 0.46);

        KDHyper h;
        h.temperature = 1.0 + rng.uniform() * 7.0;
        h.balance = rng.uniform();

        struct Case {
            const char* name;
            std::function<LossBundle(const Tensor&)> loss;
        };
        const std::vector<Case> cases = {
            {"cross_entropy", [&](const Tensor& lg) { return cross_entropy(lg, one_hot); }},
            {"kd_softened_kl", [&](const Tensor& lg) { return kd_softened_kl(lg, teacher, h.temperature); }},
            {"vanilla_kd", [&](const Tensor& lg) { return vanilla_kd_loss(lg, teacher, one_hot, h); }},
            {"mix_loss", [&](const Tensor& lg) { return mix_loss(lg, vb); }},
            {"stkd_total", [&](const Tensor& lg) { return stkd_total_loss(lg, teacher, vb); }},
        };
        for (const Case& kase : cases) {
            CAPTURE(kase.name);
            const ForwardTrace trace = net.forward(batch);
            const LossBundle lb = kase.loss(trace.logits);
            const Gradients analytic = net.backward(trace, lb.grad_logits);
            const auto value = [&] { return kase.loss(net.logits(batch)).value; };
            CHECK(oracle::max_grad_rel_error(net, analytic, value) <= 1e-5);
        }
    }
}
