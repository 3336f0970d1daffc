#include "pscope/pipeline.hpp"

#include <atomic>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

#include "json.hpp"

namespace pscope {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void RunConfig::validate() const {
    if (task != "circles" && task != "moons" && task != "pinn-duffing")
        throw std::invalid_argument("config: task must be circles, moons or pinn-duffing");
    if (out_dir.empty()) throw std::invalid_argument("config: out_dir must be set");
    if (n <= 0 || n % 2 != 0) throw std::invalid_argument("config: n must be even and > 0");
    if (task == "circles" && !(0.0 < r_inner && r_inner < r_outer))
        throw std::invalid_argument("config: need 0 < r_inner < r_outer");
    if (n_steps < 2) throw std::invalid_argument("config: n_steps must be >= 2");
    if (dt <= 0.0) throw std::invalid_argument("config: dt must be > 0");
    ArchitectureSpec{architecture}.validate();
    if (architecture.front() != 2)
        throw std::invalid_argument("config: decomposition needs a 2D input layer");
    if (is_classification() && architecture.back() != 2)
        throw std::invalid_argument("config: classification head has 2 logits");
    if (!is_classification() && architecture.back() != 1)
        throw std::invalid_argument("config: regression head has 1 output");
    if (epochs <= 0) throw std::invalid_argument("config: epochs must be > 0");
    if (learning_rate < 0.0) throw std::invalid_argument("config: negative learning rate");
    if (checkpoint_every < 0 || checkpoint_every > epochs)
        throw std::invalid_argument("config: checkpoint_every out of range");
    if (box_inflate < 0.0) throw std::invalid_argument("config: negative box_inflate");
    if (tol <= 0.0) throw std::invalid_argument("config: tol must be > 0");
    if (n_trials < 1) throw std::invalid_argument("config: n_trials must be >= 1");
    if (bins < 1) throw std::invalid_argument("config: bins must be >= 1");
    if (threads < 0) throw std::invalid_argument("config: threads must be >= 0");
    if (box_override) box_override->validate();
    if (zoom) zoom->validate();
}

RunConfig default_config(const std::string& task) {
    RunConfig cfg;
    cfg.task = task;
    if (task == "circles") {
        cfg.architecture = {2, 6, 6, 2};
        cfg.epochs = 4000;
        cfg.checkpoint_every = 500;
        cfg.box_inflate = 0.2;
    } else if (task == "moons") {
        cfg.architecture = {2, 5, 5, 5, 2};
        cfg.epochs = 2000;
        cfg.checkpoint_every = 250;
        cfg.box_inflate = 0.2;
    } else if (task == "pinn-duffing") {
        cfg.architecture = {2, 16, 16, 16, 16, 1};
        cfg.epochs = 10000;
        cfg.checkpoint_every = 250;
        cfg.box_inflate = 0.1;
    } else {
        throw std::invalid_argument("unknown task: " + task);
    }
    return cfg;
}

namespace {

BoundingBox2D box_from_json(const nlohmann::json& j) {
    BoundingBox2D b{j.at("x_min").get<double>(), j.at("x_max").get<double>(),
                    j.at("y_min").get<double>(), j.at("y_max").get<double>()};
    b.validate();
    return b;
}

ordered_json box_to_json(const BoundingBox2D& b) {
    return ordered_json{{"x_min", b.x_min}, {"x_max", b.x_max}, {"y_min", b.y_min}, {"y_max", b.y_max}};
}

void reject_unknown_keys(const nlohmann::json& j, const std::vector<std::string>& known,
                         const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
}

}  // namespace

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path.string());
    nlohmann::json j = nlohmann::json::parse(in);
    reject_unknown_keys(j, {"task", "seed", "out_dir", "data", "architecture", "trainer", "box",
                            "homology", "tol", "threads"},
                        "top level");
    RunConfig cfg = default_config(j.at("task").get<std::string>());
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("tol")) cfg.tol = j.at("tol").get<double>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("architecture")) cfg.architecture = j.at("architecture").get<std::vector<int>>();
    if (j.contains("data")) {
        const auto& d = j.at("data");
        reject_unknown_keys(d, {"n", "noise_sd", "r_inner", "r_outer", "n_steps", "dt", "duffing"},
                            "data");
        if (d.contains("n")) cfg.n = d.at("n").get<int>();
        if (d.contains("noise_sd")) cfg.noise_sd = d.at("noise_sd").get<double>();
        if (d.contains("r_inner")) cfg.r_inner = d.at("r_inner").get<double>();
        if (d.contains("r_outer")) cfg.r_outer = d.at("r_outer").get<double>();
        if (d.contains("n_steps")) cfg.n_steps = d.at("n_steps").get<int>();
        if (d.contains("dt")) cfg.dt = d.at("dt").get<double>();
        if (d.contains("duffing")) {
            const auto& p = d.at("duffing");
            reject_unknown_keys(p, {"delta", "alpha", "beta", "gamma", "omega"}, "duffing");
            if (p.contains("delta")) cfg.duffing.delta = p.at("delta").get<double>();
            if (p.contains("alpha")) cfg.duffing.alpha = p.at("alpha").get<double>();
            if (p.contains("beta")) cfg.duffing.beta = p.at("beta").get<double>();
            if (p.contains("gamma")) cfg.duffing.gamma = p.at("gamma").get<double>();
            if (p.contains("omega")) cfg.duffing.omega = p.at("omega").get<double>();
        }
    }
    if (j.contains("trainer")) {
        const auto& t = j.at("trainer");
        reject_unknown_keys(t, {"epochs", "learning_rate", "checkpoint_every", "adam"}, "trainer");
        if (t.contains("epochs")) {
            cfg.epochs = t.at("epochs").get<int>();
            // keep the task-default cadence valid for shorter runs
            cfg.checkpoint_every = std::min(cfg.checkpoint_every, std::max(1, cfg.epochs));
        }
        if (t.contains("learning_rate")) cfg.learning_rate = t.at("learning_rate").get<double>();
        if (t.contains("checkpoint_every")) cfg.checkpoint_every = t.at("checkpoint_every").get<int>();
        if (t.contains("adam")) {
            const auto& a = t.at("adam");
            reject_unknown_keys(a, {"beta1", "beta2", "epsilon"}, "adam");
            if (a.contains("beta1")) cfg.adam.beta1 = a.at("beta1").get<double>();
            if (a.contains("beta2")) cfg.adam.beta2 = a.at("beta2").get<double>();
            if (a.contains("epsilon")) cfg.adam.epsilon = a.at("epsilon").get<double>();
        }
    }
    if (j.contains("box")) {
        const auto& b = j.at("box");
        reject_unknown_keys(b, {"inflate", "override", "zoom"}, "box");
        if (b.contains("inflate")) cfg.box_inflate = b.at("inflate").get<double>();
        if (b.contains("override")) cfg.box_override = box_from_json(b.at("override"));
        if (b.contains("zoom")) cfg.zoom = box_from_json(b.at("zoom"));
    }
    if (j.contains("homology")) {
        const auto& h = j.at("homology");
        reject_unknown_keys(h, {"n_trials", "seed", "bins"}, "homology");
        if (h.contains("n_trials")) cfg.n_trials = h.at("n_trials").get<int>();
        if (h.contains("seed")) cfg.homology_seed = h.at("seed").get<std::uint64_t>();
        if (h.contains("bins")) cfg.bins = h.at("bins").get<int>();
    }
    cfg.validate();
    return cfg;
}

std::string config_echo_json(const RunConfig& cfg) {
    ordered_json j;
    j["task"] = cfg.task;
    j["seed"] = cfg.seed;
    j["out_dir"] = cfg.out_dir.string();
    j["data"] = ordered_json{{"n", cfg.n},
                             {"noise_sd", cfg.noise_sd},
                             {"r_inner", cfg.r_inner},
                             {"r_outer", cfg.r_outer},
                             {"n_steps", cfg.n_steps},
                             {"dt", cfg.dt},
                             {"duffing",
                              ordered_json{{"delta", cfg.duffing.delta},
                                           {"alpha", cfg.duffing.alpha},
                                           {"beta", cfg.duffing.beta},
                                           {"gamma", cfg.duffing.gamma},
                                           {"omega", cfg.duffing.omega}}}};
    j["architecture"] = cfg.architecture;
    j["trainer"] = ordered_json{{"epochs", cfg.epochs},
                                {"learning_rate", cfg.learning_rate},
                                {"checkpoint_every", cfg.checkpoint_every},
                                {"adam",
                                 ordered_json{{"beta1", cfg.adam.beta1},
                                              {"beta2", cfg.adam.beta2},
                                              {"epsilon", cfg.adam.epsilon}}}};
    j["box"] = ordered_json{{"inflate", cfg.box_inflate}};
    if (cfg.box_override) j["box"]["override"] = box_to_json(*cfg.box_override);
    if (cfg.zoom) j["box"]["zoom"] = box_to_json(*cfg.zoom);
    j["homology"] = ordered_json{
        {"n_trials", cfg.n_trials}, {"seed", cfg.homology_seed}, {"bins", cfg.bins}};
    j["tol"] = cfg.tol;
    j["threads"] = cfg.threads;
    return j.dump(2) + "\n";
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    unsigned n_workers = threads > 0 ? static_cast<unsigned>(threads)
                                     : std::max(1u, std::thread::hardware_concurrency());
    n_workers = std::min<unsigned>(n_workers, n == 0 ? 1 : static_cast<unsigned>(n));
    if (n_workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::mutex error_mutex;
    std::exception_ptr error;
    for (unsigned w = 0; w < n_workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// ---- run-dir helpers ----

namespace {

void write_manifest(const fs::path& dir, const std::string& command,
                    const std::vector<std::string>& files) {
    fs::path path = dir / "manifest.json";
    ordered_json manifest = ordered_json::object();
    if (fs::exists(path)) {
        std::ifstream in(path);
        manifest = ordered_json::parse(in);
    }
    manifest[command] = files;
    atomic_write_file(path, manifest.dump(2) + "\n");
}

void write_run_json(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    atomic_write_file(cfg.out_dir / "run.json", config_echo_json(cfg));
}

void require_file(const fs::path& p, const std::string& hint) {
    if (!fs::exists(p))
        throw std::runtime_error("missing input " + p.string() + " (run `polytope-scope " + hint +
                                 "` first)");
}

LabeledDataset2D dataset_for(const RunConfig& cfg) {
    require_file(cfg.out_dir / "dataset.csv", "gen-data");
    return load_dataset_csv(cfg.out_dir / "dataset.csv");
}

DuffingTrajectory trajectory_for(const RunConfig& cfg) {
    require_file(cfg.out_dir / "trajectory.csv", "gen-data");
    return load_trajectory_csv(cfg.out_dir / "trajectory.csv");
}

std::vector<std::array<double, 2>> subset(const LabeledDataset2D& ds, const std::vector<int>& idx) {
    std::vector<std::array<double, 2>> pts;
    for (int i : idx) pts.push_back(ds.points[i]);
    return pts;
}

std::vector<int> label_subset(const LabeledDataset2D& ds, const std::vector<int>& idx) {
    std::vector<int> out;
    for (int i : idx) out.push_back(ds.labels[i]);
    return out;
}

}  // namespace

BoundingBox2D analysis_box(const RunConfig& cfg, const LabeledDataset2D* ds,
                           const DuffingTrajectory* traj) {
    if (cfg.box_override) return *cfg.box_override;
    if (cfg.is_classification()) {
        if (!ds) throw std::invalid_argument("analysis_box: dataset required");
        return inflate(bounding_box_of(ds->points), cfg.box_inflate);
    }
    if (!traj) throw std::invalid_argument("analysis_box: trajectory required");
    double x_lo = traj->positions[0], x_hi = traj->positions[0];
    for (double x : traj->positions) {
        x_lo = std::min(x_lo, x);
        x_hi = std::max(x_hi, x);
    }
    return inflate(BoundingBox2D{0.0, 20.0, x_lo, x_hi}, cfg.box_inflate);
}

void cmd_gen_data(const RunConfig& cfg) {
    cfg.validate();
    write_run_json(cfg);
    std::vector<std::string> files{"run.json"};
    if (cfg.task == "circles") {
        save_dataset_csv(gen_two_circles(cfg.n, cfg.r_inner, cfg.r_outer, cfg.noise_sd, cfg.seed),
                         cfg.out_dir / "dataset.csv");
        files.push_back("dataset.csv");
    } else if (cfg.task == "moons") {
        save_dataset_csv(gen_two_moons(cfg.n, cfg.noise_sd, cfg.seed), cfg.out_dir / "dataset.csv");
        files.push_back("dataset.csv");
    } else {
        save_trajectory_csv(duffing_trajectory(cfg.duffing, cfg.n_steps, cfg.dt),
                            cfg.out_dir / "trajectory.csv");
        files.push_back("trajectory.csv");
    }
    write_manifest(cfg.out_dir, "gen-data", files);
}

namespace {

TrainConfig trainer_config(const RunConfig& cfg) {
    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.learning_rate = cfg.learning_rate;
    tc.loss_kind = cfg.loss_kind();
    tc.checkpoint_every = cfg.checkpoint_every;
    tc.seed = cfg.seed;
    tc.adam = cfg.adam;
    tc.duffing = cfg.duffing;
    tc.dt = cfg.dt;
    return tc;
}

TrainResult train_from_files(const RunConfig& cfg, bool to_disk) {
    TrainConfig tc = trainer_config(cfg);
    if (to_disk) tc.run_dir = cfg.out_dir;
    ReluNetwork net = init_network(ArchitectureSpec{cfg.architecture}, cfg.seed);
    if (cfg.is_classification()) {
        auto ds = dataset_for(cfg);
        return train(std::move(net), classification_set(ds, ds.train_index),
                     classification_set(ds, ds.test_index), tc);
    }
    auto pairs = pinn_pairs(trajectory_for(cfg));
    tc.dt = pairs.dt;
    return train(std::move(net), pinn_set(pairs), std::nullopt, tc);
}

}  // namespace

void cmd_train(const RunConfig& cfg) {
    cfg.validate();
    write_run_json(cfg);
    TrainResult res = train_from_files(cfg, true);
    std::vector<std::string> files{"run.json", "log.csv"};
    for (const auto& p : res.checkpoints) files.push_back(p.filename().string());
    write_manifest(cfg.out_dir, "train", files);
}

namespace {

Checkpoint checkpoint_for(const RunConfig& cfg, int epoch) {
    if (epoch < 0) epoch = cfg.epochs;
    auto path = cfg.out_dir / ("ckpt_" + std::to_string(epoch) + ".json");
    require_file(path, "train");
    return load_checkpoint(path);
}

BoundingBox2D box_from_files(const RunConfig& cfg) {
    if (cfg.box_override) return *cfg.box_override;
    if (cfg.is_classification()) {
        auto ds = dataset_for(cfg);
        return analysis_box(cfg, &ds, nullptr);
    }
    auto traj = trajectory_for(cfg);
    return analysis_box(cfg, nullptr, &traj);
}

}  // namespace

void cmd_decompose(const RunConfig& cfg, int epoch) {
    cfg.validate();
    write_run_json(cfg);
    if (epoch < 0) epoch = cfg.epochs;
    Checkpoint ckpt = checkpoint_for(cfg, epoch);
    auto result = decompose_ex(ckpt.net, box_from_files(cfg), cfg.tol);
    std::string stem = "complex_" + std::to_string(epoch);
    save_complex(result.complex, cfg.out_dir / (stem + ".txt"));
    SvgOptions opts;
    opts.zoom = cfg.zoom;
    atomic_write_file(cfg.out_dir / ("decomposition_" + std::to_string(epoch) + ".svg"),
                      render_decomposition_svg(result.complex, opts));
    FVector fv = f_vector(result.complex);
    save_fvector_csv({epoch}, {fv}, cfg.out_dir / ("fvector_" + std::to_string(epoch) + ".csv"));
    write_manifest(cfg.out_dir, "decompose",
                   {"run.json", stem + ".txt", "decomposition_" + std::to_string(epoch) + ".svg",
                    "fvector_" + std::to_string(epoch) + ".csv"});
}

namespace {

struct FiedlerArtifacts {
    DualGraph graph;
    PartitionReport unweighted;
    PartitionReport weighted;
};

FiedlerArtifacts fiedler_partitions(DualGraph graph, const CellComplex2D& complex,
                                    const ReluNetwork& net,
                                    const std::vector<std::array<double, 2>>& train_points,
                                    const std::vector<int>& train_labels) {
    FiedlerArtifacts out;
    out.graph = std::move(graph);
    auto uw = fiedler(out.graph, unit_weights(out.graph));
    out.unweighted = score_partition(out.graph, uw.lambda, uw.vector, complex, net, train_points,
                                     train_labels);
    auto weights = vertex_weights_from_data(complex, net, train_points);
    auto w = fiedler(out.graph, weights);
    out.weighted =
        score_partition(out.graph, w.lambda, w.vector, complex, net, train_points, train_labels);
    return out;
}

FiedlerArtifacts fiedler_partitions(const CellComplex2D& complex, const ReluNetwork& net,
                                    const std::vector<std::array<double, 2>>& train_points,
                                    const std::vector<int>& train_labels) {
    return fiedler_partitions(build_dual_graph(complex), complex, net, train_points, train_labels);
}

}  // namespace

ClassificationOutcome run_classification(const RunConfig& cfg) {
    cfg.validate();
    if (!cfg.is_classification())
        throw std::invalid_argument("run_classification: classification task required");
    LabeledDataset2D ds = cfg.task == "circles"
                              ? gen_two_circles(cfg.n, cfg.r_inner, cfg.r_outer, cfg.noise_sd, cfg.seed)
                              : gen_two_moons(cfg.n, cfg.noise_sd, cfg.seed);
    TrainConfig tc = trainer_config(cfg);
    TrainResult training = train(init_network(ArchitectureSpec{cfg.architecture}, cfg.seed),
                                 classification_set(ds, ds.train_index),
                                 classification_set(ds, ds.test_index), tc);
    auto dec = decompose_ex(training.net, analysis_box(cfg, &ds, nullptr), cfg.tol);
    auto train_points = subset(ds, ds.train_index);
    auto train_labels = label_subset(ds, ds.train_index);
    auto parts = fiedler_partitions(dec.complex, dec.net, train_points, train_labels);
    const EpochLog& last = training.logs.back();
    ExperimentSummary summary{cfg.task,
                              ArchitectureSpec{cfg.architecture}.to_string(),
                              last.train_loss,
                              last.test_loss,
                              100.0 * parts.unweighted.misclassified_fraction,
                              parts.unweighted.l2_error,
                              100.0 * parts.weighted.misclassified_fraction,
                              parts.weighted.l2_error,
                              cfg.seed};
    double test_acc = last.test_acc;
    return ClassificationOutcome{std::move(training),        test_acc,
                                 std::move(dec.complex),     std::move(dec.net),
                                 std::move(parts.graph),     std::move(parts.unweighted),
                                 std::move(parts.weighted),  std::move(summary)};
}

void cmd_fiedler(const RunConfig& cfg) {
    cfg.validate();
    if (!cfg.is_classification())
        throw std::runtime_error("fiedler: only classification tasks have a labeled dual graph");
    write_run_json(cfg);
    auto ds = dataset_for(cfg);
    Checkpoint ckpt = checkpoint_for(cfg, cfg.epochs);
    auto complex_path = cfg.out_dir / ("complex_" + std::to_string(cfg.epochs) + ".txt");
    require_file(complex_path, "decompose");
    CellComplex2D complex = load_complex(complex_path);

    auto train_points = subset(ds, ds.train_index);
    auto train_labels = label_subset(ds, ds.train_index);
    auto parts = fiedler_partitions(complex, ckpt.net, train_points, train_labels);

    save_dual_graph_csv(parts.graph, cfg.out_dir / "dual_graph.csv");
    save_partition_json(parts.unweighted, parts.graph, cfg.out_dir / "partition_unweighted.json");
    save_partition_json(parts.weighted, parts.graph, cfg.out_dir / "partition_weighted.json");
    atomic_write_file(cfg.out_dir / "partition_unweighted.svg",
                      render_partition_svg(complex, parts.unweighted));
    atomic_write_file(cfg.out_dir / "partition_weighted.svg",
                      render_partition_svg(complex, parts.weighted));

    require_file(cfg.out_dir / "log.csv", "train");
    EpochLog last{};
    // final row of the training log carries the Table-1 loss columns
    for (const auto& l : load_log_csv(cfg.out_dir / "log.csv"))
        if (l.epoch >= last.epoch) last = l;
    ExperimentSummary summary{cfg.task,
                              ArchitectureSpec{cfg.architecture}.to_string(),
                              last.train_loss,
                              last.test_loss,
                              100.0 * parts.unweighted.misclassified_fraction,
                              parts.unweighted.l2_error,
                              100.0 * parts.weighted.misclassified_fraction,
                              parts.weighted.l2_error,
                              cfg.seed};
    atomic_write_file(cfg.out_dir / "summary.csv", summary_table_csv({summary}));
    write_manifest(cfg.out_dir, "fiedler",
                   {"run.json", "dual_graph.csv", "partition_unweighted.json",
                    "partition_weighted.json", "partition_unweighted.svg", "partition_weighted.svg",
                    "summary.csv"});
}

void cmd_homology(const RunConfig& cfg, int epoch) {
    cfg.validate();
    write_run_json(cfg);
    if (epoch < 0) epoch = cfg.epochs;
    auto complex_path = cfg.out_dir / ("complex_" + std::to_string(epoch) + ".txt");
    require_file(complex_path, "decompose");
    CellComplex2D complex = load_complex(complex_path);
    AveragedCurves avg = averaged_curves(complex, cfg.n_trials, cfg.homology_seed);
    atomic_write_file(cfg.out_dir / ("curves_" + std::to_string(epoch) + ".csv"),
                      "epoch,trial,dim,t,percent,beta\n" + curves_csv_rows(epoch, avg));
    Vec t0(avg.beta0.size()), t1(avg.beta1.size());
    for (std::size_t i = 0; i < t0.size(); ++i) t0[i] = static_cast<double>(i);
    t1 = t0;
    atomic_write_file(
        cfg.out_dir / ("betti_curves_" + std::to_string(epoch) + ".svg"),
        render_curves_svg({{"beta0", t0, avg.beta0, ""}, {"beta1", t1, avg.beta1, ""}},
                          "cells added", "averaged Betti value"));
    write_manifest(cfg.out_dir, "homology",
                   {"run.json", "curves_" + std::to_string(epoch) + ".csv",
                    "betti_curves_" + std::to_string(epoch) + ".svg"});
}

SweepOutcome run_sweep_analysis(const RunConfig& cfg, const std::vector<ReluNetwork>& nets,
                                const std::vector<int>& epochs, const Vec& losses,
                                const BoundingBox2D& box) {
    if (nets.size() != epochs.size() || nets.size() != losses.size() || nets.size() < 2)
        throw std::invalid_argument("run_sweep_analysis: need >= 2 aligned checkpoints");
    SweepOutcome out;
    out.checkpoints.resize(nets.size());
    parallel_for(nets.size(), cfg.threads, [&](std::size_t i) {
        SweepCheckpoint& ck = out.checkpoints[i];
        ck.epoch = epochs[i];
        ck.loss = losses[i];
        ck.complex = decompose(nets[i], box, cfg.tol);
        ck.fv = f_vector(ck.complex);
        ck.curves = averaged_curves(ck.complex, cfg.n_trials, cfg.homology_seed);
    });
    std::vector<AveragedCurves> curves;
    Vec loss_series;
    for (const auto& ck : out.checkpoints) {
        curves.push_back(ck.curves);
        loss_series.push_back(ck.loss);
    }
    out.grids = heat_map_from_curves(epochs, curves, loss_series, cfg.bins);
    out.corr_beta0 = delta_correlation(loss_series, out.grids[0].critical);
    out.corr_beta1 = delta_correlation(loss_series, out.grids[1].critical);
    return out;
}

void cmd_sweep(const RunConfig& cfg) {
    cfg.validate();
    write_run_json(cfg);
    std::vector<int> epochs;
    for (int e = 0; e <= cfg.epochs; ++e)
        if (e == 0 || e == cfg.epochs || (cfg.checkpoint_every > 0 && e % cfg.checkpoint_every == 0))
            epochs.push_back(e);
    std::vector<ReluNetwork> nets;
    Vec losses;
    for (int e : epochs) {
        Checkpoint ckpt = checkpoint_for(cfg, e);
        nets.push_back(std::move(ckpt.net));
        losses.push_back(ckpt.loss);
    }
    BoundingBox2D box = box_from_files(cfg);
    SweepOutcome sweep = run_sweep_analysis(cfg, nets, epochs, losses, box);

    std::vector<std::string> files{"run.json"};
    std::vector<FVector> fvs;
    std::string curves_csv = "epoch,trial,dim,t,percent,beta\n";
    for (const auto& ck : sweep.checkpoints) {
        std::string stem = "complex_" + std::to_string(ck.epoch);
        save_complex(ck.complex, cfg.out_dir / (stem + ".txt"));
        files.push_back(stem + ".txt");
        fvs.push_back(ck.fv);
        curves_csv += curves_csv_rows(ck.epoch, ck.curves);
    }
    save_fvector_csv(epochs, fvs, cfg.out_dir / "fvector.csv");
    atomic_write_file(cfg.out_dir / "curves.csv", curves_csv);
    for (int dim = 0; dim < 2; ++dim) {
        const auto& grid = sweep.grids[dim];
        save_heatmap_csv(grid, cfg.out_dir / ("heatmap_beta" + std::to_string(dim) + ".csv"));
        atomic_write_file(cfg.out_dir / ("heatmap_beta" + std::to_string(dim) + ".svg"),
                          render_heatmap_svg(grid));
    }
    {
        std::string crit = "epoch,loss,critical_beta0,critical_beta1\n";
        for (std::size_t i = 0; i < epochs.size(); ++i)
            crit += std::to_string(epochs[i]) + "," + format_double(losses[i]) + "," +
                    format_double(sweep.grids[0].critical[i]) + "," +
                    format_double(sweep.grids[1].critical[i]) + "\n";
        atomic_write_file(cfg.out_dir / "critical_filtration.csv", crit);
        std::string corr = "dim,pearson_r,n_points\n";
        corr += "0," + format_double(sweep.corr_beta0) + "," + std::to_string(epochs.size()) + "\n";
        corr += "1," + format_double(sweep.corr_beta1) + "," + std::to_string(epochs.size()) + "\n";
        atomic_write_file(cfg.out_dir / "loss_correlation.csv", corr);
    }
    {
        Vec ep(epochs.begin(), epochs.end());
        Vec f0, f1, f2;
        for (const auto& fv : fvs) {
            f0.push_back(static_cast<double>(fv.f0));
            f1.push_back(static_cast<double>(fv.f1));
            f2.push_back(static_cast<double>(fv.f2));
        }
        atomic_write_file(cfg.out_dir / "fvector.svg",
                          render_curves_svg({{"f0", ep, f0, ""}, {"f1", ep, f1, ""},
                                             {"f2", ep, f2, ""}},
                                            "epoch", "cell count",
                                            Series{"loss", ep, losses, "#d62728"}));
    }
    files.insert(files.end(),
                 {"fvector.csv", "fvector.svg", "curves.csv", "heatmap_beta0.csv",
                  "heatmap_beta0.svg", "heatmap_beta1.csv", "heatmap_beta1.svg",
                  "critical_filtration.csv", "loss_correlation.csv"});

    if (cfg.is_classification()) {
        auto ds = dataset_for(cfg);
        auto train_points = subset(ds, ds.train_index);
        auto train_labels = label_subset(ds, ds.train_index);
        std::string rows =
            "epoch,lambda_unweighted,unweighted_misclass_pct,unweighted_l2,lambda_weighted,"
            "weighted_misclass_pct,weighted_l2\n";
        std::vector<std::string> row_values(sweep.checkpoints.size());
        parallel_for(sweep.checkpoints.size(), cfg.threads, [&](std::size_t i) {
            const auto& ck = sweep.checkpoints[i];
            auto graph = build_dual_graph(ck.complex);
            if (graph.edges.empty()) {
                // an untrained checkpoint can decompose into a single face
                row_values[i] = std::to_string(ck.epoch) + ",nan,nan,nan,nan,nan,nan\n";
                return;
            }
            auto parts = fiedler_partitions(std::move(graph), ck.complex, nets[i], train_points,
                                            train_labels);
            row_values[i] =
                std::to_string(ck.epoch) + "," + format_double(parts.unweighted.fiedler_value) +
                "," + format_double(100.0 * parts.unweighted.misclassified_fraction) + "," +
                format_double(parts.unweighted.l2_error) + "," +
                format_double(parts.weighted.fiedler_value) + "," +
                format_double(100.0 * parts.weighted.misclassified_fraction) + "," +
                format_double(parts.weighted.l2_error) + "\n";
        });
        for (const auto& r : row_values) rows += r;
        atomic_write_file(cfg.out_dir / "sweep_partitions.csv", rows);
        files.push_back("sweep_partitions.csv");
    }
    write_manifest(cfg.out_dir, "sweep", files);
}

void cmd_plot(const RunConfig& cfg) {
    cfg.validate();
    write_run_json(cfg);
    std::vector<std::string> files{"run.json"};
    for (const auto& entry : fs::directory_iterator(cfg.out_dir)) {
        auto name = entry.path().filename().string();
        if (name.rfind("complex_", 0) == 0 && entry.path().extension() == ".txt") {
            CellComplex2D complex = load_complex(entry.path());
            std::string epoch = name.substr(8, name.size() - 12);
            SvgOptions opts;
            opts.zoom = cfg.zoom;
            std::string svg_name = "decomposition_" + epoch + ".svg";
            atomic_write_file(cfg.out_dir / svg_name, render_decomposition_svg(complex, opts));
            files.push_back(svg_name);
        }
    }
    std::sort(files.begin(), files.end());
    write_manifest(cfg.out_dir, "plot", files);
}

}  // namespace pscope
