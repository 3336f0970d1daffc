#include "pscope/datagen.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "pscope/nn.hpp"

namespace pscope {

static void split_indices(LabeledDataset2D& ds, Rng& rng) {
    int n = static_cast<int>(ds.points.size());
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    rng.shuffle(idx);
    int n_train = static_cast<int>(std::lround(0.8 * n));
    ds.train_index.assign(idx.begin(), idx.begin() + n_train);
    ds.test_index.assign(idx.begin() + n_train, idx.end());
}

LabeledDataset2D gen_two_circles(int n, double r_inner, double r_outer, double noise_sd,
                                 std::uint64_t seed) {
    if (n <= 0 || n % 2 != 0) throw std::invalid_argument("gen_two_circles: n must be even and > 0");
    if (!(0.0 < r_inner && r_inner < r_outer))
        throw std::invalid_argument("gen_two_circles: need 0 < r_inner < r_outer");
    Rng rng(seed);
    LabeledDataset2D ds;
    int per_class = n / 2;
    for (int cls = 0; cls < 2; ++cls) {
        double r = cls == 0 ? r_inner : r_outer;
        for (int k = 0; k < per_class; ++k) {
            double theta = 2.0 * M_PI * k / per_class;
            double radius = r + noise_sd * rng.gaussian();
            ds.points.push_back({radius * std::cos(theta), radius * std::sin(theta)});
            ds.labels.push_back(cls);
        }
    }
    split_indices(ds, rng);
    return ds;
}

LabeledDataset2D gen_two_moons(int n, double noise_sd, std::uint64_t seed) {
    if (n <= 0 || n % 2 != 0) throw std::invalid_argument("gen_two_moons: n must be even and > 0");
    Rng rng(seed);
    LabeledDataset2D ds;
    int per_class = n / 2;
    for (int cls = 0; cls < 2; ++cls) {
        for (int k = 0; k < per_class; ++k) {
            double t = per_class > 1 ? M_PI * k / (per_class - 1) : 0.0;
            double x, y;
            if (cls == 0) {
                x = std::cos(t);
                y = std::sin(t);
            } else {
                // second arc: reflected, shifted to interleave with the first
                x = 1.0 - std::cos(t);
                y = 0.5 - std::sin(t);
            }
            x += noise_sd * rng.gaussian();
            y += noise_sd * rng.gaussian();
            ds.points.push_back({x, y});
            ds.labels.push_back(cls);
        }
    }
    split_indices(ds, rng);
    return ds;
}

DuffingTrajectory duffing_trajectory(const DuffingParams& p, int n_steps, double dt) {
    if (n_steps < 1 || dt <= 0.0) throw std::invalid_argument("duffing_trajectory: bad grid");
    if (n_steps * dt > 20.0 + 1e-12)
        throw std::invalid_argument("duffing_trajectory: n_steps*dt must stay within [0, 20]");
    auto f = [&p](double t, double x, double v, double& dx, double& dv) {
        dx = v;
        dv = -p.delta * v - p.alpha * x - p.beta * x * x * x + p.gamma * std::cos(p.omega * t);
    };
    DuffingTrajectory traj;
    traj.dt = dt;
    double x = 0.0, v = 1.0;
    for (int i = 0; i < n_steps; ++i) {
        double t = i * dt;
        if (!std::isfinite(x) || !std::isfinite(v))
            throw std::runtime_error("duffing_trajectory: state diverged at t=" + std::to_string(t));
        traj.times.push_back(t);
        traj.positions.push_back(x);
        traj.velocities.push_back(v);
        double k1x, k1v, k2x, k2v, k3x, k3v, k4x, k4v;
        f(t, x, v, k1x, k1v);
        f(t + 0.5 * dt, x + 0.5 * dt * k1x, v + 0.5 * dt * k1v, k2x, k2v);
        f(t + 0.5 * dt, x + 0.5 * dt * k2x, v + 0.5 * dt * k2v, k3x, k3v);
        f(t + dt, x + dt * k3x, v + dt * k3v, k4x, k4v);
        x += dt / 6.0 * (k1x + 2.0 * (k2x + k3x) + k4x);
        v += dt / 6.0 * (k1v + 2.0 * (k2v + k3v) + k4v);
    }
    return traj;
}

PinnPairs pinn_pairs(const DuffingTrajectory& traj) {
    if (traj.times.size() < 2) throw std::invalid_argument("pinn_pairs: trajectory too short");
    PinnPairs pairs;
    pairs.dt = traj.dt;
    for (std::size_t i = 0; i + 1 < traj.times.size(); ++i) {
        pairs.inputs.push_back({traj.times[i], traj.positions[i]});
        pairs.targets.push_back(traj.positions[i + 1]);
    }
    return pairs;
}

double duffing_energy(const DuffingParams& p, double x, double v) {
    return 0.5 * v * v + 0.5 * p.alpha * x * x + 0.25 * p.beta * x * x * x * x;
}

void save_dataset_csv(const LabeledDataset2D& ds, const std::filesystem::path& path) {
    std::vector<char> split(ds.points.size(), '?');
    for (int i : ds.train_index) split[i] = 'r';
    for (int i : ds.test_index) split[i] = 'e';
    std::string out = "x1,x2,label,split\n";
    for (std::size_t i = 0; i < ds.points.size(); ++i) {
        out += format_double(ds.points[i][0]) + "," + format_double(ds.points[i][1]) + "," +
               std::to_string(ds.labels[i]) + "," + (split[i] == 'r' ? "train" : "test") + "\n";
    }
    atomic_write_file(path, out);
}

LabeledDataset2D load_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "x1,x2,label,split")
        throw std::runtime_error("bad dataset header in " + path.string());
    LabeledDataset2D ds;
    int i = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f0, f1, f2, f3;
        if (!std::getline(ss, f0, ',') || !std::getline(ss, f1, ',') ||
            !std::getline(ss, f2, ',') || !std::getline(ss, f3))
            throw std::runtime_error("bad dataset row: " + line);
        ds.points.push_back({std::stod(f0), std::stod(f1)});
        ds.labels.push_back(std::stoi(f2));
        if (f3 == "train")
            ds.train_index.push_back(i);
        else if (f3 == "test")
            ds.test_index.push_back(i);
        else
            throw std::runtime_error("bad split value: " + f3);
        ++i;
    }
    return ds;
}

void save_trajectory_csv(const DuffingTrajectory& traj, const std::filesystem::path& path) {
    std::string out = "t,x,v\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        out += format_double(traj.times[i]) + "," + format_double(traj.positions[i]) + "," +
               format_double(traj.velocities[i]) + "\n";
    atomic_write_file(path, out);
}

DuffingTrajectory load_trajectory_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trajectory: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "t,x,v")
        throw std::runtime_error("bad trajectory header in " + path.string());
    DuffingTrajectory traj;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f0, f1, f2;
        if (!std::getline(ss, f0, ',') || !std::getline(ss, f1, ',') || !std::getline(ss, f2))
            throw std::runtime_error("bad trajectory row: " + line);
        traj.times.push_back(std::stod(f0));
        traj.positions.push_back(std::stod(f1));
        traj.velocities.push_back(std::stod(f2));
    }
    if (traj.times.size() >= 2) traj.dt = traj.times[1] - traj.times[0];
    return traj;
}

}  // namespace pscope
