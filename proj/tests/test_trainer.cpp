#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "pscope/datagen.hpp"
#include "pscope/trainer.hpp"

using namespace pscope;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

double naive_bce(double z, double y) {
    double s = 1.0 / (1.0 + std::exp(-z));
    return -(y * std::log(s) + (1.0 - y) * std::log(1.0 - s));
}

// smallest |hidden preactivation| over a batch
double boundary_margin(const ReluNetwork& net, const TrainingSet& set) {
    double margin = 1e300;
    for (std::size_t s = 0; s < set.size(); ++s) {
        Vec x(set.inputs.data.begin() + s * set.inputs.cols,
              set.inputs.data.begin() + (s + 1) * set.inputs.cols);
        for (double g : hidden_preactivations(net, x)) margin = std::min(margin, std::fabs(g));
    }
    return margin;
}

void check_grad_against_fd(const ReluNetwork& net, const TrainingSet& set, LossKind kind,
                           const LossAux& aux) {
    auto [loss, grads] = backprop(net, set, kind, aux);
    CHECK(std::isfinite(loss));
    auto loss_of = [&](const ReluNetwork& n) { return backprop(n, set, kind, aux).first; };
    auto fd = oracles::fd_gradient(net, loss_of, 1e-5);
    std::size_t k = 0;
    for (std::size_t l = 0; l < grads.weight.size(); ++l) {
        for (double g : grads.weight[l].data) CHECK(oracles::rel_err(g, fd[k++]) < 1e-4);
        for (double g : grads.bias[l]) CHECK(oracles::rel_err(g, fd[k++]) < 1e-4);
    }
}

TrainingSet random_set(std::uint64_t seed, std::size_t n, std::size_t out_dim) {
    Rng rng(seed);
    TrainingSet set;
    set.inputs = Matrix(n, 2);
    set.targets = Matrix(n, out_dim);
    for (double& v : set.inputs.data) v = rng.uniform(-1, 1);
    for (double& v : set.targets.data) v = rng.uniform(-1, 1);
    return set;
}

}  // namespace

TEST_CASE("bce_with_logits: pinned values and stability") {
    CHECK(bce_with_logits({0.0}, {0.0}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bce_with_logits({50.0}, {1.0}) < 1e-20);
    CHECK(bce_with_logits({-1000.0}, {0.0}) == 0.0);  // no overflow
    Rng rng(17);
    for (int i = 0; i < 200; ++i) {
        double z = rng.uniform(-8, 8), y = rng.uniform() < 0.5 ? 0.0 : 1.0;
        CHECK(std::fabs(bce_with_logits({z}, {y}) - naive_bce(z, y)) < 1e-12);
    }
}

TEST_CASE("mse: pinned values and summation oracle") {
    CHECK(mse({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
    CHECK(mse({3.0, 5.0, -1.0}, {1.0, 3.0, -3.0}) == 4.0);
    Rng rng(18);
    Vec a(37), b(37);
    for (auto& v : a) v = rng.uniform(-2, 2);
    for (auto& v : b) v = rng.uniform(-2, 2);
    double direct = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) direct += (a[i] - b[i]) * (a[i] - b[i]);
    direct /= a.size();
    CHECK(mse(a, b) == doctest::Approx(direct).epsilon(1e-15));
}

TEST_CASE("pinn_loss: constant network closed form") {
    const double c = 0.3;
    // hidden neurons all off, output bias c
    auto net = oracles::make_net({2, 2, 1}, {Vec(4, 0.0), Vec(2, 0.0)}, {Vec(2, -1.0), {c}});
    DuffingParams p;  // delta = gamma = 0, alpha = -1, beta = 1
    PinnPairs pairs;
    pairs.dt = 0.1;
    pairs.inputs = {{0.0, 0.1}, {0.1, 0.2}};
    pairs.targets = {c, c};
    auto v = pinn_loss(net, pairs, p, 0.1);
    double expected_r = p.alpha * c + p.beta * c * c * c;
    CHECK(v.data_part == doctest::Approx(0.0));
    CHECK(v.physics_part == doctest::Approx(expected_r * expected_r).epsilon(1e-12));
    CHECK(v.total == doctest::Approx(v.data_part + v.physics_part));
}

TEST_CASE("pinn_loss: the zero network sits at an equilibrium") {
    auto net = oracles::make_net({2, 2, 1}, {Vec(4, 0.0), Vec(2, 0.0)}, {Vec(2, -1.0), {0.0}});
    DuffingParams p;
    PinnPairs pairs;
    pairs.dt = 0.1;
    pairs.inputs = {{0.0, 0.0}, {0.1, 0.0}};
    pairs.targets = {0.0, 0.0};
    auto v = pinn_loss(net, pairs, p, 0.1);
    CHECK(v.physics_part == 0.0);
    CHECK(v.total == 0.0);
    CHECK_THROWS_AS(pinn_loss(net, pairs, p, 0.0), std::invalid_argument);
}

TEST_CASE("pinn physics matches a finite-difference time derivative") {
    auto traj = duffing_trajectory(DuffingParams{}, 30, 0.1);
    auto pairs = pinn_pairs(traj);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        auto net = oracles::random_box_net({2, 4, 3, 1}, seed, 0.8);
        DuffingParams p;
        const double h = 1e-6;
        for (std::size_t i = 0; i < pairs.inputs.size(); i += 7) {
            Vec x = {pairs.inputs[i][0], pairs.inputs[i][1]};
            Vec g = hidden_preactivations(net, x);
            bool safe = true;
            for (double v : g)
                if (std::fabs(v) < 1e-3) safe = false;
            if (!safe) continue;
            double pred = forward(net, x).output[0];
            double fd = (forward(net, {x[0] + h, x[1]}).output[0] -
                         forward(net, {x[0] - h, x[1]}).output[0]) /
                        (2.0 * h);
            double exact = input_jacobian(net, binary_state_vector(net, x)).matrix(0, 0);
            CHECK(oracles::rel_err(fd, exact) < 1e-5);
            double vhat = (pred - x[1]) / pairs.dt;
            double r_fd = fd - (-p.delta * vhat - p.alpha * pred - p.beta * pred * pred * pred);
            double r_exact =
                exact - (-p.delta * vhat - p.alpha * pred - p.beta * pred * pred * pred);
            if (std::fabs(r_exact) > 1e-6) CHECK(oracles::rel_err(r_fd, r_exact) < 1e-5);
        }
    }
}

TEST_CASE("backprop: perfect MSE predictions give zero gradients") {
    auto net = oracles::make_net({2, 2, 1}, {{1, 0, 0, 1}, {1, 1}}, {{0.5, 0.5}, {0.0}});
    TrainingSet set;
    set.inputs = Matrix(2, 2);
    set.inputs.data = {0.3, 0.1, 0.2, 0.4};
    set.targets = Matrix(2, 1);
    set.targets(0, 0) = forward(net, {0.3, 0.1}).output[0];
    set.targets(1, 0) = forward(net, {0.2, 0.4}).output[0];
    auto [loss, g] = backprop(net, set, LossKind::Mse, {});
    CHECK(loss == 0.0);
    for (const auto& w : g.weight)
        for (double v : w.data) CHECK(v == 0.0);
    for (const auto& b : g.bias)
        for (double v : b) CHECK(v == 0.0);
}

TEST_CASE("backprop: near-linear single path has the textbook closed form") {
    // one active hidden unit: pred = w2 * (w1 x + b1) + b2 while the unit stays on
    const double w1 = 1.0, b1 = 1.0, w2 = 0.7, b2 = 0.0, x = 0.5, y = 2.0;
    auto net = oracles::make_net({1, 1, 1}, {{w1}, {w2}}, {{b1}, {b2}});
    TrainingSet set;
    set.inputs = Matrix(1, 1);
    set.inputs(0, 0) = x;
    set.targets = Matrix(1, 1);
    set.targets(0, 0) = y;
    auto [loss, g] = backprop(net, set, LossKind::Mse, {});
    double pred = w2 * (w1 * x + b1) + b2;
    double a_hidden = w1 * x + b1;
    CHECK(loss == doctest::Approx((pred - y) * (pred - y)));
    CHECK(g.weight[1](0, 0) == doctest::Approx(2.0 * (pred - y) * a_hidden).epsilon(1e-12));
    CHECK(g.bias[1][0] == doctest::Approx(2.0 * (pred - y)).epsilon(1e-12));
    CHECK(g.weight[0](0, 0) == doctest::Approx(2.0 * (pred - y) * w2 * x).epsilon(1e-12));
    CHECK(g.bias[0][0] == doctest::Approx(2.0 * (pred - y) * w2).epsilon(1e-12));
}

TEST_CASE("backprop matches finite differences for every loss kind") {
    int done_mse = 0, done_bce = 0, done_pinn = 0;
    for (std::uint64_t seed = 0; seed < 200 && (done_mse < 3 || done_bce < 3); ++seed) {
        auto net = oracles::random_box_net({2, 4, 3, 2}, seed, 0.7);
        auto set = random_set(seed + 1000, 5, 2);
        if (boundary_margin(net, set) < 1e-3) continue;
        if (done_mse < 3) {
            check_grad_against_fd(net, set, LossKind::Mse, {});
            ++done_mse;
        }
        if (done_bce < 3) {
            for (std::size_t i = 0; i < set.targets.data.size(); ++i)
                set.targets.data[i] = set.targets.data[i] > 0 ? 1.0 : 0.0;
            check_grad_against_fd(net, set, LossKind::BceWithLogits, {});
            ++done_bce;
        }
    }
    CHECK(done_mse == 3);
    CHECK(done_bce == 3);

    auto traj = duffing_trajectory(DuffingParams{}, 12, 0.1);
    auto pairs = pinn_pairs(traj);
    auto set = pinn_set(pairs);
    LossAux aux;
    aux.dt = pairs.dt;
    for (std::uint64_t seed = 0; seed < 400 && done_pinn < 3; ++seed) {
        auto net = oracles::random_box_net({2, 4, 3, 1}, seed, 0.8);
        if (boundary_margin(net, set) < 1e-3) continue;
        check_grad_against_fd(net, set, LossKind::PinnDuffing, aux);
        ++done_pinn;
    }
    CHECK(done_pinn == 3);
}

TEST_CASE("adam: zero gradients leave parameters untouched") {
    auto net = init_network(ArchitectureSpec{{2, 3, 1}}, 55);
    auto before = oracles::flatten_params(net);
    AdamState st = make_adam_state(net);
    Gradients g;
    for (const auto& l : net.layers()) {
        g.weight.emplace_back(l.weight.rows, l.weight.cols);
        g.bias.emplace_back(l.bias.size(), 0.0);
    }
    for (int i = 0; i < 5; ++i) adam_step(net, g, st, 0.01, AdamParams{});
    CHECK(oracles::flatten_params(net) == before);
}

TEST_CASE("train: one epoch at zero learning rate changes nothing") {
    auto ds = gen_two_circles(40, 0.5, 1.0, 0.05, 4);
    auto net = init_network(ArchitectureSpec{{2, 4, 2}}, 4);
    auto before = oracles::flatten_params(net);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.learning_rate = 0.0;
    cfg.loss_kind = LossKind::BceWithLogits;
    auto res = train(std::move(net), classification_set(ds, ds.train_index),
                     classification_set(ds, ds.test_index), cfg);
    CHECK(oracles::flatten_params(res.net) == before);
    CHECK(res.logs.size() == 2);  // epoch 0 and epoch 1
    CHECK(res.checkpoint_epochs == std::vector<int>{0, 1});
}

TEST_CASE("train: deterministic checkpoint bytes") {
    auto dir1 = fs::temp_directory_path() / "pscope_train_a";
    auto dir2 = fs::temp_directory_path() / "pscope_train_b";
    fs::remove_all(dir1);
    fs::remove_all(dir2);
    auto ds = gen_two_circles(60, 0.5, 1.0, 0.05, 8);
    for (const auto& dir : {dir1, dir2}) {
        TrainConfig cfg;
        cfg.epochs = 30;
        cfg.checkpoint_every = 10;
        cfg.loss_kind = LossKind::BceWithLogits;
        cfg.seed = 8;
        cfg.run_dir = dir;
        train(init_network(ArchitectureSpec{{2, 4, 2}}, 8),
              classification_set(ds, ds.train_index), classification_set(ds, ds.test_index), cfg);
    }
    for (const char* name : {"ckpt_0.json", "ckpt_10.json", "ckpt_20.json", "ckpt_30.json",
                             "log.csv"})
        CHECK(slurp(dir1 / name) == slurp(dir2 / name));
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("train: loss trends down on the default classification tasks") {
    auto median_tail_below_head = [](const TrainResult& res) {
        auto median_of = [&](std::size_t from, std::size_t to) {
            Vec v;
            for (std::size_t i = from; i < to; ++i) v.push_back(res.logs[i].train_loss);
            std::sort(v.begin(), v.end());
            return v[v.size() / 2];
        };
        std::size_t n = res.logs.size();
        return median_of(n - n / 10, n) < median_of(0, n / 10);
    };

    auto circles = gen_two_circles(200, 0.5, 1.0, 0.05, 1);
    TrainConfig cfg;
    cfg.epochs = 4000;
    cfg.learning_rate = 0.01;
    cfg.loss_kind = LossKind::BceWithLogits;
    cfg.seed = 1;
    auto res = train(init_network(ArchitectureSpec{{2, 6, 6, 2}}, 1),
                     classification_set(circles, circles.train_index),
                     classification_set(circles, circles.test_index), cfg);
    CHECK(median_tail_below_head(res));
    CHECK(res.logs.back().train_loss < 1e-3);
    CHECK(res.logs.back().test_acc == 1.0);

    auto moons = gen_two_moons(200, 0.05, 1);
    cfg.epochs = 2000;
    auto mres = train(init_network(ArchitectureSpec{{2, 5, 5, 5, 2}}, 1),
                      classification_set(moons, moons.train_index),
                      classification_set(moons, moons.test_index), cfg);
    CHECK(median_tail_below_head(mres));
    CHECK(mres.logs.back().train_loss < 1e-2);
}

TEST_CASE("train: diverging loss aborts with a diagnostic") {
    TrainingSet set;
    set.inputs = Matrix(1, 2);
    set.inputs.data = {0.5, 0.5};
    set.targets = Matrix(1, 1);
    set.targets(0, 0) = 1e200;  // squared error overflows
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.loss_kind = LossKind::Mse;
    CHECK_THROWS_WITH_AS(train(init_network(ArchitectureSpec{{2, 3, 1}}, 2), set, std::nullopt, cfg),
                         doctest::Contains("non-finite"), std::runtime_error);
}

TEST_CASE("config validation") {
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.epochs = 10;
    cfg.checkpoint_every = 11;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.checkpoint_every = 5;
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("classification adapter builds one-hot targets") {
    auto ds = gen_two_moons(10, 0.0, 3);
    auto set = classification_set(ds, ds.train_index);
    REQUIRE(set.size() == 8);
    for (std::size_t r = 0; r < set.size(); ++r) {
        CHECK(set.targets(r, set.labels[r]) == 1.0);
        CHECK(set.targets(r, 1 - set.labels[r]) == 0.0);
    }
}
