#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "pscope/datagen.hpp"
#include "pscope/dualgraph.hpp"
#include "pscope/homology.hpp"
#include "pscope/report.hpp"
#include "pscope/trainer.hpp"

namespace pscope {

/// One experiment configuration; every field has a task-dependent default and
/// the effective values are echoed to run.json.
struct RunConfig {
    std::string task;  // "circles" | "moons" | "pinn-duffing"
    std::uint64_t seed = 1;
    std::filesystem::path out_dir = "run";

    // data
    int n = 200;
    double noise_sd = 0.05;
    double r_inner = 0.5, r_outer = 1.0;
    int n_steps = 200;
    double dt = 0.1;
    DuffingParams duffing;

    // model + trainer
    std::vector<int> architecture;
    int epochs = 0;
    double learning_rate = 0.01;
    int checkpoint_every = 0;
    AdamParams adam;

    // decomposition
    double box_inflate = 0.0;
    std::optional<BoundingBox2D> box_override;
    std::optional<BoundingBox2D> zoom;
    double tol = 1e-9;

    // homology
    int n_trials = 10;
    std::uint64_t homology_seed = 7;
    int bins = 200;

    int threads = 0;  // 0: hardware concurrency

    bool is_classification() const { return task == "circles" || task == "moons"; }
    LossKind loss_kind() const {
        return is_classification() ? LossKind::BceWithLogits : LossKind::PinnDuffing;
    }
    void validate() const;
};

RunConfig default_config(const std::string& task);
RunConfig load_run_config(const std::filesystem::path& path);
std::string config_echo_json(const RunConfig& cfg);

// ---- commands (each writes its outputs under cfg.out_dir and records them
// in manifest.json; missing upstream artifacts raise std::runtime_error) ----

void cmd_gen_data(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_decompose(const RunConfig& cfg, int epoch = -1);  // -1: final epoch
void cmd_fiedler(const RunConfig& cfg);
void cmd_homology(const RunConfig& cfg, int epoch = -1);
void cmd_sweep(const RunConfig& cfg);
void cmd_plot(const RunConfig& cfg);

// ---- in-process experiment drivers shared by the commands and tests ----

struct ClassificationOutcome {
    TrainResult training;
    double test_accuracy = 0.0;
    CellComplex2D complex;
    ReluNetwork net;  // effective (possibly bias-jittered) network of the complex
    DualGraph graph;
    PartitionReport unweighted;
    PartitionReport weighted;
    ExperimentSummary summary;
};

/// gen data -> train -> decompose final net -> both Fiedler partitions.
ClassificationOutcome run_classification(const RunConfig& cfg);

struct SweepCheckpoint {
    int epoch = 0;
    double loss = 0.0;
    CellComplex2D complex;
    FVector fv;
    AveragedCurves curves;
};

struct SweepOutcome {
    std::vector<SweepCheckpoint> checkpoints;
    std::array<HeatMapGrid, 2> grids;
    double corr_beta0 = 0.0;  // Pearson r of (delta loss, delta critical filtration)
    double corr_beta1 = 0.0;
};

/// Decompose + averaged Betti curves for every checkpoint of a finished
/// training run, in parallel across checkpoints.
SweepOutcome run_sweep_analysis(const RunConfig& cfg, const std::vector<ReluNetwork>& nets,
                                const std::vector<int>& epochs, const Vec& losses,
                                const BoundingBox2D& box);

/// Deterministic analysis box for the task (data bounding box + inflation for
/// classification; [0,20] x displacement range for the oscillator).
BoundingBox2D analysis_box(const RunConfig& cfg, const LabeledDataset2D* ds,
                           const DuffingTrajectory* traj);

/// Run `fn(i)` for i in [0, n) on up to `threads` workers (0 = hardware).
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace pscope
