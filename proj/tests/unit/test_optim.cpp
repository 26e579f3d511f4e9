#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "stkd/network.hpp"
#include "stkd/optim.hpp"

using namespace stkd;

namespace {

Network scalar_net(double w0) {
    return Network({Layer::affine(Tensor::matrix({{w0}}), Tensor::zeros({1}))});
}

Gradients scalar_grads(const Network& net, double gw, double gb) {
    Gradients g;
    g.layers.resize(net.layer_count());
    g.layers[0].weight = Tensor::matrix({{gw}});
    g.layers[0].bias = Tensor({1}, {gb});
    return g;
}

}  // namespace

TEST_CASE("plain gradient step without momentum or decay") {
    Network net = scalar_net(1.0);
    SgdConfig cfg;
    cfg.learning_rate = 0.25;
    cfg.momentum = 0.0;
    cfg.weight_decay = 0.0;
    SgdState sgd(net, cfg);
    sgd.step(net, scalar_grads(net, 0.5, 0.0));
    CHECK(net.layers()[0].weight.data[0] == doctest::Approx(1.0 - 0.25 * 0.5).epsilon(1e-15));
}

TEST_CASE("zero gradient moves by pure inertia") {
    Network net = scalar_net(1.0);
    SgdConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.momentum = 0.5;
    cfg.weight_decay = 0.0;
    SgdState sgd(net, cfg);
    sgd.step(net, scalar_grads(net, 1.0, 0.0));  // builds velocity v=1
    const double w_after_first = net.layers()[0].weight.data[0];
    sgd.step(net, scalar_grads(net, 0.0, 0.0));  // v = 0.5*1 + 0
    CHECK(net.layers()[0].weight.data[0] ==
          doctest::Approx(w_after_first - 0.1 * 0.5).epsilon(1e-15));
}

TEST_CASE("three steps reproduce the hand-computed recurrence") {
    // v <- m v + g + wd w ; w <- w - lr v, with lr=0.1 m=0.9 wd=0.01,
    // constant gradient 1, starting at w=1.
    Network net = scalar_net(1.0);
    SgdConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.momentum = 0.9;
    cfg.weight_decay = 0.01;
    SgdState sgd(net, cfg);

    double w = 1.0, v = 0.0;
    for (int i = 0; i < 3; ++i) {
        v = 0.9 * v + 1.0 + 0.01 * w;
        w = w - 0.1 * v;
        sgd.step(net, scalar_grads(net, 1.0, 0.0));
        CHECK(std::abs(net.layers()[0].weight.data[0] - w) < 1e-15);
    }
}

TEST_CASE("nesterov applies the lookahead update") {
    Network net = scalar_net(2.0);
    SgdConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.momentum = 0.9;
    cfg.weight_decay = 0.0;
    cfg.nesterov = true;
    SgdState sgd(net, cfg);
    sgd.step(net, scalar_grads(net, 1.0, 0.0));
    // v = 1; update = g + m v = 1.9
    CHECK(net.layers()[0].weight.data[0] == doctest::Approx(2.0 - 0.1 * 1.9).epsilon(1e-15));
}

TEST_CASE("momentum SGD converges on the scalar quadratic") {
    // f(w) = w^2/2, gradient w
    Network net = scalar_net(1.0);
    SgdConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.momentum = 0.9;
    cfg.weight_decay = 0.0;
    SgdState sgd(net, cfg);
    for (int i = 0; i < 200; ++i)
        sgd.step(net, scalar_grads(net, net.layers()[0].weight.data[0], 0.0));
    CHECK(std::abs(net.layers()[0].weight.data[0]) < 1e-3);
}

TEST_CASE("updates are bit-deterministic") {
    auto run = [] {
        Network net = scalar_net(0.5);
        SgdState sgd(net, SgdConfig{});
        for (int i = 0; i < 10; ++i) sgd.step(net, scalar_grads(net, 0.3, -0.2));
        return net.layers()[0].weight.data[0];
    };
    CHECK(run() == run());
}

TEST_CASE("config validation") {
    SgdConfig cfg;
    cfg.momentum = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = SgdConfig{};
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = SgdConfig{};
    cfg.weight_decay = -1e-4;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("step schedule follows the milestone arithmetic") {
    StepSchedule sched{0.1, {80, 100, 150}, 0.1};
    CHECK(sched.lr_at_epoch(0) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(sched.lr_at_epoch(79) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(sched.lr_at_epoch(80) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(sched.lr_at_epoch(120) == doctest::Approx(0.001).epsilon(1e-12));
    CHECK(sched.lr_at_epoch(150) == doctest::Approx(0.0001).epsilon(1e-12));

    // non-increasing in epoch
    double prev = 1e300;
    for (int e = 0; e < 400; ++e) {
        const double lr = sched.lr_at_epoch(e);
        CHECK(lr <= prev);
        prev = lr;
    }

    StepSchedule bad{0.1, {10, 10}, 0.5};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("shape mismatches are rejected") {
    Network net = scalar_net(1.0);
    SgdState sgd(net, SgdConfig{});
    Gradients g;
    g.layers.resize(1);
    g.layers[0].weight = Tensor::matrix({{1.0, 2.0}});
    g.layers[0].bias = Tensor({1}, {0.0});
    CHECK_THROWS_AS(sgd.step(net, g), std::invalid_argument);
}
