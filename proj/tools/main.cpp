#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "pscope/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::int64_t seed = -1;
    int epoch = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_epoch = false) {
    cmd->add_option("--config", args.config_path, "Run configuration JSON")->required();
    cmd->add_option("--out", args.out_dir, "Override the configured output directory");
    cmd->add_option("--seed", args.seed, "Override the configured seed");
    if (with_epoch) cmd->add_option("--epoch", args.epoch, "Checkpoint epoch (default: final)");
}

pscope::RunConfig resolve(const CommonArgs& args) {
    pscope::RunConfig cfg = pscope::load_run_config(args.config_path);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"polytope-scope: polyhedral decompositions, Fiedler partitions and Betti "
                 "telemetry for small ReLU networks"};
    app.require_subcommand(1);

    CommonArgs args;
    auto* gen = app.add_subcommand("gen-data", "Generate the configured dataset or trajectory");
    add_common(gen, args);
    auto* train = app.add_subcommand("train", "Train and checkpoint the configured network");
    add_common(train, args);
    auto* dec = app.add_subcommand("decompose", "Extract the cell complex of a checkpoint");
    add_common(dec, args, true);
    auto* fied = app.add_subcommand("fiedler", "Dual graph and Fiedler partitions (classification)");
    add_common(fied, args);
    auto* hom = app.add_subcommand("homology", "Averaged Betti curves of a stored complex");
    add_common(hom, args, true);
    auto* sweep = app.add_subcommand("sweep", "Full per-checkpoint topology sweep");
    add_common(sweep, args);
    auto* plot = app.add_subcommand("plot", "Re-render SVG figures from stored artifacts");
    add_common(plot, args);

    CLI11_PARSE(app, argc, argv);

    try {
        pscope::RunConfig cfg = resolve(args);
        if (gen->parsed()) pscope::cmd_gen_data(cfg);
        if (train->parsed()) pscope::cmd_train(cfg);
        if (dec->parsed()) pscope::cmd_decompose(cfg, args.epoch);
        if (fied->parsed()) pscope::cmd_fiedler(cfg);
        if (hom->parsed()) pscope::cmd_homology(cfg, args.epoch);
        if (sweep->parsed()) pscope::cmd_sweep(cfg);
        if (plot->parsed()) pscope::cmd_plot(cfg);
    } catch (const std::exception& e) {
        nlohmann::json err{{"error", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}
