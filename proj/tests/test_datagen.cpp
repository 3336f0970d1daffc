#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "pscope/datagen.hpp"

using namespace pscope;
namespace fs = std::filesystem;

TEST_CASE("two circles: exact radii without noise, balanced classes") {
    auto ds = gen_two_circles(4, 1.0, 2.0, 0.0, 3);
    REQUIRE(ds.points.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        double r = std::hypot(ds.points[i][0], ds.points[i][1]);
        CHECK(r == doctest::Approx(ds.labels[i] == 0 ? 1.0 : 2.0).epsilon(1e-12));
    }
    auto big = gen_two_circles(200, 0.5, 1.0, 0.05, 11);
    long inner = std::count(big.labels.begin(), big.labels.end(), 0);
    CHECK(inner == 100);
    CHECK(big.points.size() == 200);
}

TEST_CASE("two circles rejects bad radii") {
    CHECK_THROWS_AS(gen_two_circles(10, 1.0, 0.5, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(gen_two_circles(11, 0.5, 1.0, 0.0, 1), std::invalid_argument);
}

TEST_CASE("two moons: arcs are exact without noise") {
    auto ds = gen_two_moons(40, 0.0, 5);
    for (std::size_t i = 0; i < ds.points.size(); ++i) {
        double x = ds.points[i][0], y = ds.points[i][1];
        if (ds.labels[i] == 0) {
            CHECK(std::hypot(x, y) == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(y >= -1e-12);
        } else {
            CHECK(std::hypot(x - 1.0, y - 0.5) == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(y <= 0.5 + 1e-12);
        }
    }
    CHECK(std::count(ds.labels.begin(), ds.labels.end(), 0) == 20);
}

TEST_CASE("split covers all indices at an 80/20 ratio, disjointly") {
    for (auto [n, seed] : std::vector<std::pair<int, int>>{{200, 1}, {50, 2}, {10, 3}}) {
        auto ds = gen_two_circles(n, 0.5, 1.0, 0.05, seed);
        CHECK(static_cast<int>(ds.train_index.size()) == std::lround(0.8 * n));
        std::set<int> all(ds.train_index.begin(), ds.train_index.end());
        for (int i : ds.test_index) CHECK(all.insert(i).second);
        CHECK(static_cast<int>(all.size()) == n);
    }
}

TEST_CASE("datasets are deterministic per seed") {
    auto a = gen_two_moons(100, 0.05, 9);
    auto b = gen_two_moons(100, 0.05, 9);
    CHECK(a.points == b.points);
    CHECK(a.train_index == b.train_index);
    auto c = gen_two_moons(100, 0.05, 10);
    CHECK(a.points != c.points);
}

TEST_CASE("duffing: energy conserved by RK4 at the default parameters") {
    DuffingParams p;
    for (double dt : {0.01, 0.001}) {
        auto traj = duffing_trajectory(p, static_cast<int>(20.0 / dt), dt);
        double h0 = duffing_energy(p, traj.positions[0], traj.velocities[0]);
        CHECK(h0 == doctest::Approx(0.5).epsilon(1e-15));
        double worst = 0.0;
        for (std::size_t i = 0; i < traj.times.size(); ++i)
            worst = std::max(worst, std::fabs(duffing_energy(p, traj.positions[i],
                                                             traj.velocities[i]) -
                                              h0));
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("duffing: harmonic limit reproduces sin(t)") {
    DuffingParams p{0.0, 1.0, 0.0, 0.0, 1.2};
    auto traj = duffing_trajectory(p, 2000, 0.01);
    for (std::size_t i = 0; i < traj.times.size(); i += 100)
        CHECK(std::fabs(traj.positions[i] - std::sin(traj.times[i])) < 1e-6);
}

TEST_CASE("duffing: RK4 fourth-order convergence") {
    DuffingParams p;
    auto final_x = [&](double dt) {
        auto traj = duffing_trajectory(p, static_cast<int>(std::lround(8.0 / dt)) + 1, dt);
        return traj.positions.back();
    };
    double ref = final_x(0.005);
    double err_coarse = std::fabs(final_x(0.05) - ref);
    double err_fine = std::fabs(final_x(0.025) - ref);
    double ratio = err_coarse / err_fine;
    CHECK(ratio > 10.0);
    CHECK(ratio < 24.0);
}

TEST_CASE("duffing rejects grids leaving [0, 20]") {
    CHECK_THROWS_AS(duffing_trajectory(DuffingParams{}, 300, 0.1), std::invalid_argument);
}

TEST_CASE("pinn pairs: counts and alignment") {
    auto traj = duffing_trajectory(DuffingParams{}, 200, 0.1);
    REQUIRE(traj.times.size() == 200);
    CHECK(traj.times.back() == doctest::Approx(19.9));
    auto pairs = pinn_pairs(traj);
    CHECK(pairs.inputs.size() == 199);
    CHECK(pairs.dt == 0.1);
    CHECK(pairs.inputs[0][0] == 0.0);
    CHECK(pairs.inputs[0][1] == traj.positions[0]);
    CHECK(pairs.targets[0] == traj.positions[1]);
    CHECK(pairs.inputs.back()[0] == doctest::Approx(19.8));
    CHECK(pairs.targets.back() == traj.positions.back());

    DuffingTrajectory tiny;
    tiny.times = {0.0, 0.1};
    tiny.positions = {0.0, 0.099};
    tiny.velocities = {1.0, 0.99};
    tiny.dt = 0.1;
    CHECK(pinn_pairs(tiny).inputs.size() == 1);
    tiny.times = {0.0};
    tiny.positions = {0.0};
    tiny.velocities = {1.0};
    CHECK_THROWS_AS(pinn_pairs(tiny), std::invalid_argument);
}

TEST_CASE("dataset and trajectory CSV round trips") {
    auto dir = fs::temp_directory_path() / "pscope_test_datagen";
    fs::create_directories(dir);
    auto ds = gen_two_circles(60, 0.5, 1.0, 0.05, 21);
    save_dataset_csv(ds, dir / "dataset.csv");
    auto ds2 = load_dataset_csv(dir / "dataset.csv");
    CHECK(ds.points == ds2.points);
    CHECK(ds.labels == ds2.labels);
    std::set<int> train(ds.train_index.begin(), ds.train_index.end());
    std::set<int> train2(ds2.train_index.begin(), ds2.train_index.end());
    CHECK(train == train2);

    auto traj = duffing_trajectory(DuffingParams{}, 50, 0.1);
    save_trajectory_csv(traj, dir / "traj.csv");
    auto traj2 = load_trajectory_csv(dir / "traj.csv");
    CHECK(traj.times == traj2.times);
    CHECK(traj.positions == traj2.positions);
    CHECK(traj.velocities == traj2.velocities);
    fs::remove_all(dir);
}
