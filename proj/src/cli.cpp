#include "stkd/cli.hpp"

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stkd/checkpoint.hpp"
#include "stkd/config.hpp"
#include "stkd/trainer.hpp"

namespace stkd {

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_config = 2;
constexpr int exit_runtime = 3;

/// Dataset selection shared by eval and export-activations: either a
/// delimited file, an IDX pair, or a config's derived split.
struct DatasetArgs {
    std::string csv_path;
    std::size_t label_column = 0;
    std::string delimiter = ",";
    bool has_header = false;
    std::vector<std::string> idx;
    std::string config_path;
    std::string split = "test";
};

void add_dataset_options(CLI::App* cmd, DatasetArgs& args) {
    cmd->add_option("data", args.csv_path, "Delimited text dataset");
    cmd->add_option("--label-column", args.label_column, "Label column index (default 0)");
    cmd->add_option("--delimiter", args.delimiter, "Field delimiter (default ',')");
    cmd->add_flag("--has-header", args.has_header, "Skip the first row");
    cmd->add_option("--idx", args.idx, "IDX image and label files")->expected(2);
    cmd->add_option("--config", args.config_path, "Take the dataset from an experiment config");
    cmd->add_option("--split", args.split, "With --config: test, train or all (default test)");
}

Dataset resolve_dataset(const DatasetArgs& args) {
    const int sources =
        (!args.csv_path.empty() ? 1 : 0) + (!args.idx.empty() ? 1 : 0) +
        (!args.config_path.empty() ? 1 : 0);
    if (sources != 1)
        throw CLI::ValidationError("dataset",
                                   "give exactly one of: a data file, --idx, or --config");
    if (!args.csv_path.empty()) {
        if (args.delimiter.size() != 1)
            throw CLI::ValidationError("--delimiter", "must be a single character");
        DelimitedSchema schema;
        schema.label_column = args.label_column;
        schema.delimiter = args.delimiter[0];
        schema.has_header = args.has_header;
        return load_delimited(args.csv_path, schema);
    }
    if (!args.idx.empty()) return load_idx(args.idx[0], args.idx[1]);

    const ExperimentConfig cfg = load_config_file(args.config_path);
    if (args.split == "all") return build_full_dataset(cfg.dataset);
    auto [train, test] = build_split_dataset(cfg.dataset);
    if (args.split == "train") return train;
    if (args.split == "test") return test;
    throw CLI::ValidationError("--split", "must be test, train or all");
}

int cmd_run(const std::string& config_path, const std::string& output_dir, unsigned workers) {
    ExperimentConfig cfg = load_config_file(config_path);
    if (workers > 0) cfg.workers = workers;
    const ExperimentOutcome outcome = run_experiment(cfg, output_dir);
    for (const AggregateReport& a : outcome.aggregates)
        std::printf("%-24s median %.4f%%  mean %.4f%%  (%zu runs)\n", a.method.c_str(),
                    a.median_accuracy, a.mean_accuracy, a.per_seed_accuracies.size());
    if (!outcome.ok) {
        std::fprintf(stderr, "experiment failed: %s\n", outcome.failure_reason.c_str());
        return exit_runtime;
    }
    return exit_ok;
}

int cmd_eval(const std::string& checkpoint_path, const DatasetArgs& data) {
    const Network net = load_checkpoint(checkpoint_path);
    const Dataset ds = resolve_dataset(data);
    std::printf("%.17g\n", evaluate_accuracy(net, ds));
    return exit_ok;
}

int cmd_export(const std::string& checkpoint_path, const std::string& out_path,
               const DatasetArgs& data) {
    const Network net = load_checkpoint(checkpoint_path);
    export_penultimate(net, resolve_dataset(data), out_path);
    return exit_ok;
}

int cmd_make_synthetic(const SyntheticSpec& spec, const std::string& out_path,
                       bool header) {
    const Dataset ds = generate_synthetic(spec);
    DelimitedSchema schema;
    schema.has_header = header;
    save_delimited(ds, out_path, schema);
    std::printf("wrote %zu samples (%zu classes, dim %zu) to %s\n", ds.size(), ds.class_count,
                ds.feature_dim(), out_path.c_str());
    return exit_ok;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Knowledge-distillation experiment toolkit: mixup-based similarity "
                 "transfer, vanilla temperature-softened distillation, and plain "
                 "baseline training over seeded, reproducible runs"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
    std::string config_path, output_dir;
    unsigned workers = 0;
    run->add_option("config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--output-dir", output_dir, "Override the config's output directory");
    run->add_option("--workers", workers, "Seed-parallel worker count (default: STKD_WORKERS or 1)");

    // eval
    auto* eval = app.add_subcommand("eval", "Print test accuracy of a checkpoint on a dataset");
    std::string eval_ckpt;
    DatasetArgs eval_data;
    eval->add_option("checkpoint", eval_ckpt, "Checkpoint file")->required();
    add_dataset_options(eval, eval_data);

    // export-activations
    auto* exp = app.add_subcommand("export-activations",
                                   "Write per-sample penultimate activations as delimited text");
    std::string exp_ckpt, exp_out;
    DatasetArgs exp_data;
    exp->add_option("checkpoint", exp_ckpt, "Checkpoint file")->required();
    exp->add_option("output", exp_out, "Output file")->required();
    add_dataset_options(exp, exp_data);

    // make-synthetic
    auto* mk = app.add_subcommand("make-synthetic", "Generate a synthetic dataset as delimited text");
    std::string mk_out, mk_kind = "gaussian_blobs";
    SyntheticSpec mk_spec;
    bool mk_header = false;
    mk->add_option("output", mk_out, "Output file")->required();
    mk->add_option("--kind", mk_kind, "gaussian_blobs or concentric_rings");
    mk->add_option("--classes", mk_spec.class_count, "Class count (default 3)");
    mk->add_option("--samples-per-class", mk_spec.samples_per_class, "Samples per class (default 100)");
    mk->add_option("--input-dim", mk_spec.input_dim, "Feature dimension (default 2)");
    mk->add_option("--noise-sigma", mk_spec.noise_sigma, "Noise level (default 0.1)");
    mk->add_option("--seed", mk_spec.seed, "Generator seed (default 0)");
    mk->add_flag("--header", mk_header, "Write a header row");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, returns 0
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return exit_usage;
    }

    try {
        if (*run) return cmd_run(config_path, output_dir, workers);
        if (*eval) return cmd_eval(eval_ckpt, eval_data);
        if (*exp) return cmd_export(exp_ckpt, exp_out, exp_data);
        if (*mk) {
            if (mk_kind == "gaussian_blobs")
                mk_spec.kind = SyntheticKind::gaussian_blobs;
            else if (mk_kind == "concentric_rings")
                mk_spec.kind = SyntheticKind::concentric_rings;
            else
                throw ConfigError("--kind must be gaussian_blobs or concentric_rings");
            return cmd_make_synthetic(mk_spec, mk_out, mk_header);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return exit_usage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime;
    }
    return exit_usage;
}

}  // namespace stkd
