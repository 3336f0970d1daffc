#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "pscope/linalg.hpp"

namespace pscope {

struct LabeledDataset2D {
    std::vector<std::array<double, 2>> points;
    std::vector<int> labels;       // 0 or 1
    std::vector<int> train_index;  // 80% split
    std::vector<int> test_index;
};

struct DuffingParams {
    double delta = 0.0;
    double alpha = -1.0;
    double beta = 1.0;
    double gamma = 0.0;
    double omega = 1.2;
};

struct DuffingTrajectory {
    Vec times;
    Vec positions;
    Vec velocities;
    double dt = 0.0;
};

/// One supervised sample for the next-step regression: input (t, x(t)),
/// target x(t + dt).
struct PinnPairs {
    std::vector<std::array<double, 2>> inputs;
    Vec targets;
    double dt = 0.0;
};

LabeledDataset2D gen_two_circles(int n, double r_inner, double r_outer, double noise_sd,
                                 std::uint64_t seed);

LabeledDataset2D gen_two_moons(int n, double noise_sd, std::uint64_t seed);

/// Classic RK4 on dx/dt = v, dv/dt = -delta v - alpha x - beta x^3 + gamma cos(omega t),
/// from x(0)=0, v(0)=1. Returns n_steps samples at t = 0, dt, ..., (n_steps-1) dt.
DuffingTrajectory duffing_trajectory(const DuffingParams& params, int n_steps, double dt);

PinnPairs pinn_pairs(const DuffingTrajectory& traj);

/// First integral of the undamped, unforced oscillator: v^2/2 + alpha x^2/2 + beta x^4/4.
double duffing_energy(const DuffingParams& params, double x, double v);

void save_dataset_csv(const LabeledDataset2D& ds, const std::filesystem::path& path);
LabeledDataset2D load_dataset_csv(const std::filesystem::path& path);
void save_trajectory_csv(const DuffingTrajectory& traj, const std::filesystem::path& path);
DuffingTrajectory load_trajectory_csv(const std::filesystem::path& path);

}  // namespace pscope
