#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dislab/operators.hpp"
#include "testutil.hpp"

using namespace dislab;
using namespace dislab::testutil;

namespace {

const GaussianMixture kToy = toy_five_gmm();

MlpNetwork trained_net(std::uint64_t seed, std::size_t hidden = 16, std::size_t samples = 1500,
                       std::size_t epochs = 25) {
    TrainingParams params;
    params.seed = seed;
    params.hidden = hidden;
    params.samples = samples;
    params.epochs = epochs;
    return train_mlp(kToy, params);
}

Mat projection_matrix() {
    Mat a(1, 2);
    a(0, 0) = 1.0;
    return a;
}

double rel_err(const Vec& got, const Vec& want) {
    return norm2(got - want) / (1.0 + norm2(want));
}

std::size_t argmax_of(const Vec& v) {
    return std::max_element(v.begin(), v.end()) - v.begin();
}

}  // namespace

TEST_CASE("linear apply: projection and smoothing determinism contract") {
    auto op = make_linear_operator(projection_matrix());
    RngStream rng = make_stream(kTestSeed, 0, "apply");
    const Vec y = apply(op, {1.0, 0.4}, rng);
    CHECK(y.size() == 1);
    CHECK(y[0] == 1.0);
    CHECK(apply(op, {1.0, 0.4}, rng) == Vec{1.0});  // tau = 0: repeated calls identical

    op.smoothing_tau = 0.2;
    const Vec n1 = apply(op, {1.0, 0.4}, rng);
    const Vec n2 = apply(op, {1.0, 0.4}, rng);
    CHECK(n1 != n2);
}

TEST_CASE("loss: exact match gives zero loss and zero gradient") {
    auto op = make_linear_operator(projection_matrix());
    RngStream rng = make_stream(kTestSeed, 1, "loss");
    Target target;
    target.y = {0.7};
    const auto lr = loss_and_grad(op, {0.7, 9.0}, target, rng);
    CHECK(lr.loss == 0.0);
    CHECK(norm2(lr.grad_x) == 0.0);
}

TEST_CASE("cross entropy with uniform logits is ln(num classes)") {
    MlpNetwork net;
    net.sizes = {2, 5};
    net.w.push_back(Mat(5, 2));  // zero weights -> all-zero logits
    net.b.emplace_back(5, 0.0);
    auto op = make_mlp_operator(net);
    RngStream rng = make_stream(kTestSeed, 2, "ce");
    Target target;
    target.label = 3;
    CHECK(loss(op, {0.4, -0.2}, target, rng) == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("invalid targets are target errors") {
    RngStream rng = make_stream(kTestSeed, 3, "target-err");
    auto lin = make_linear_operator(projection_matrix());
    Target bad;
    bad.y = {1.0, 2.0};
    CHECK_THROWS_AS(loss(lin, {0.0, 0.0}, bad, rng), TargetError);

    auto mlp_op = make_mlp_operator(trained_net(11));
    Target bad_class;
    bad_class.label = 9;
    CHECK_THROWS_AS(loss(mlp_op, {0.0, 0.0}, bad_class, rng), TargetError);
    CHECK_THROWS_AS(make_linear_operator(projection_matrix(), DistanceKind::cross_entropy),
                    ConfigError);
}

TEST_CASE("gradients match finite differences at 100 random points") {
    RngStream rng = make_stream(kTestSeed, 4, "fd");
    auto lin = make_linear_operator(Mat::identity(2));
    auto net_ce = make_mlp_operator(trained_net(12));
    auto net_mse = make_mlp_operator(trained_net(13), DistanceKind::mse);
    Target t_lin;
    t_lin.y = {0.3, -0.8};
    Target t_ce;
    t_ce.label = 2;
    Target t_mse;
    t_mse.y = {1.0, 0.0, 0.0, 0.0, 0.0};

    for (int i = 0; i < 100; ++i) {
        const Vec x{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        for (int which = 0; which < 3; ++which) {
            const MeasurementOperator& op = which == 0 ? lin : (which == 1 ? net_ce : net_mse);
            const Target& target = which == 0 ? t_lin : (which == 1 ? t_ce : t_mse);
            RngStream r0 = make_stream(kTestSeed, 5, "fd-eval");
            const Vec grad = loss_grad_x(op, x, target, r0);
            const Vec fd = fd_gradient(
                [&](const Vec& p) {
                    RngStream r1 = make_stream(kTestSeed, 5, "fd-eval");
                    return loss(op, p, target, r1);
                },
                x);
            CHECK(rel_err(grad, fd) <= 1e-5);
        }
    }
}

TEST_CASE("training is deterministic and accurate") {
    const MlpNetwork a = trained_net(21);
    const MlpNetwork b = trained_net(21);
    for (std::size_t l = 0; l < a.w.size(); ++l) {
        CHECK(a.w[l].data == b.w[l].data);  // bitwise
        CHECK(a.b[l] == b.b[l]);
    }
    RngStream rng = make_stream(kTestSeed, 6, "holdout");
    CHECK(classifier_accuracy(a, kToy, 4000, rng) >= 0.95);
}

TEST_CASE("training rejects undersized sample budgets and divergent rates") {
    TrainingParams params;
    params.samples = 20;
    CHECK_THROWS_AS(train_mlp(kToy, params), std::invalid_argument);
    TrainingParams hot;
    hot.seed = 5;
    hot.samples = 400;
    hot.epochs = 30;
    hot.lr = 1e308;
    hot.batch = 1;  // single-sample steps at this rate overflow the logits
    CHECK_THROWS_AS(train_mlp(kToy, hot), TrainingError);
}

TEST_CASE("models A and B disagree on under 5% of held-out points") {
    // the benchmark operator pair
    TrainingParams ta;
    ta.seed = 308;
    ta.hidden = 24;
    ta.samples = 450;
    ta.epochs = 8;
    TrainingParams tb;
    tb.seed = 303;
    tb.hidden = 16;
    tb.samples = 450;
    tb.epochs = 8;
    const MlpNetwork model_a = train_mlp(kToy, ta);
    const MlpNetwork model_b = train_mlp(kToy, tb);
    RngStream acc_a_rng = make_stream(kTestSeed, 7, "holdout");
    RngStream acc_b_rng = make_stream(kTestSeed, 8, "holdout");
    CHECK(classifier_accuracy(model_a, kToy, 4000, acc_a_rng) >= 0.95);
    CHECK(classifier_accuracy(model_b, kToy, 4000, acc_b_rng) >= 0.95);

    RngStream rng = make_stream(kTestSeed, 9, "holdout-disagree");
    std::size_t disagree = 0;
    bool identical = true;
    for (int i = 0; i < 4000; ++i) {
        const Vec x = sample_prior(kToy, rng);
        const Vec la = model_a.forward(x);
        const Vec lb = model_b.forward(x);
        if (argmax_of(la) != argmax_of(lb)) ++disagree;
        if (la != lb) identical = false;
    }
    CHECK(disagree > 0);
    CHECK(disagree < 0.05 * 4000);
    CHECK_FALSE(identical);
}

TEST_CASE("smoothing is unbiased at small tau away from decision boundaries") {
    auto op = make_mlp_operator(trained_net(12));
    Target target;
    target.label = 2;
    const Vec x{0.8, 0.85};  // inside the (1,1) basin, away from boundaries
    RngStream clean_rng = make_stream(kTestSeed, 10, "smooth");
    const double clean = loss(op, x, target, clean_rng);

    op.smoothing_tau = 0.01;
    RngStream rng = make_stream(kTestSeed, 11, "smooth-draws");
    double acc = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) acc += loss(op, x, target, rng);
    CHECK(acc / n == doctest::Approx(clean).epsilon(0.01));
}

TEST_CASE("loss and gradient share one smoothing draw per call") {
    auto op = make_linear_operator(projection_matrix());
    op.smoothing_tau = 0.3;
    Target target;
    target.y = {0.0};
    RngStream rng = make_stream(kTestSeed, 12, "shared-draw");
    const auto lr = loss_and_grad(op, {1.0, 0.0}, target, rng);
    // gradient must be A^T (A x_noised - y) for the same draw as the loss
    const double fx = std::sqrt(2.0 * lr.loss);
    CHECK(std::abs(lr.grad_x[0]) == doctest::Approx(fx).epsilon(1e-12));
    CHECK(lr.grad_x[1] == 0.0);
}

TEST_CASE("mlp serialization round-trips") {
    const MlpNetwork net = trained_net(31, 12, 500, 10);
    const std::string path = "mlp_roundtrip_test.json";
    save_mlp(net, path);
    const MlpNetwork back = load_mlp(path);
    std::remove(path.c_str());
    CHECK(back.sizes == net.sizes);
    RngStream rng = make_stream(kTestSeed, 13, "roundtrip");
    for (int i = 0; i < 50; ++i) {
        const Vec x{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        CHECK(net.forward(x) == back.forward(x));  // bitwise
    }
}

TEST_CASE("input-gradient backprop matches finite differences per logit") {
    const MlpNetwork net = trained_net(41);
    RngStream rng = make_stream(kTestSeed, 14, "vjp");
    for (int i = 0; i < 20; ++i) {
        const Vec x{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
        Vec u(net.output_dim());
        for (double& v : u) v = rng.normal();
        MlpNetwork::Tape tape;
        net.forward(x, tape);
        const Vec vjp = net.input_grad(tape, u);
        const Vec fd = fd_gradient([&](const Vec& p) { return dot(u, net.forward(p)); }, x);
        CHECK(rel_err(vjp, fd) <= 1e-5);
    }
}
