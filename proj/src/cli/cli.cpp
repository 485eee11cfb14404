#include "facefuse/cli/cli.hpp"

#include <CLI11.hpp>

#include <array>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>

#include "facefuse/cli/config.hpp"
#include "facefuse/engine/gradcheck.hpp"
#include "facefuse/error.hpp"
#include "facefuse/expt/report.hpp"
#include "facefuse/format.hpp"
#include "facefuse/rng.hpp"
#include "facefuse/train/checkpoint.hpp"

namespace facefuse {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

/// Flags are recorded during parsing and applied after the config file, so
/// the precedence is flags > file > defaults.
class Overrides {
public:
    template <class T>
    CLI::Option* add(CLI::App& app, const std::string& name, const std::string& help,
                     std::function<void(RunConfig&, const T&)> apply) {
        auto value = std::make_shared<T>();
        CLI::Option* option = app.add_option(name, *value, help);
        appliers_.push_back([option, value, apply](RunConfig& c) {
            if (option->count() > 0) apply(c, *value);
        });
        return option;
    }

    CLI::Option* add_flag(CLI::App& app, const std::string& name, const std::string& help,
                          std::function<void(RunConfig&)> apply) {
        CLI::Option* option = app.add_flag(name, help);
        appliers_.push_back([option, apply](RunConfig& c) {
            if (option->count() > 0) apply(c);
        });
        return option;
    }

    void apply(RunConfig& config) const {
        for (const auto& f : appliers_) f(config);
    }

private:
    std::vector<std::function<void(RunConfig&)>> appliers_;
};

struct Command {
    CLI::App* app = nullptr;
    Overrides overrides;
    std::string config_path;
    std::string out;

    RunConfig resolve() const {
        RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
        overrides.apply(config);
        return config;
    }
};

void add_common(Command& cmd, bool needs_out) {
    cmd.app->add_option("--config", cmd.config_path, "JSON config file (flags take precedence)");
    if (needs_out) cmd.app->add_option("--out", cmd.out, "output directory")->required();
}

void add_train_flags(Command& cmd, const std::string& prefix, bool head) {
    auto cfg = [head](RunConfig& c) -> TrainConfig& { return head ? c.head.train : c.train; };
    Overrides& o = cmd.overrides;
    CLI::App& app = *cmd.app;
    o.add<std::size_t>(app, "--" + prefix + "iterations", "SGD iterations",
                       [cfg](RunConfig& c, const std::size_t& v) { cfg(c).iterations = v; });
    o.add<std::size_t>(app, "--" + prefix + "batch", "examples per iteration",
                       [cfg](RunConfig& c, const std::size_t& v) { cfg(c).batch_size = v; });
    o.add<double>(app, "--" + prefix + "lr", "initial learning rate",
                  [cfg](RunConfig& c, const double& v) { cfg(c).lr.initial = v; });
    o.add<double>(app, "--" + prefix + "lr-decay", "step decay factor",
                  [cfg](RunConfig& c, const double& v) { cfg(c).lr.factor = v; });
    o.add<std::size_t>(app, "--" + prefix + "lr-interval", "iterations between decays (0: a quarter of the run)",
                       [cfg](RunConfig& c, const std::size_t& v) { cfg(c).lr.interval = v; });
    o.add<std::size_t>(app, "--" + prefix + "eval-every", "iterations between test evaluations",
                       [cfg](RunConfig& c, const std::size_t& v) { cfg(c).eval_every = v; });
    o.add<std::string>(app, "--" + prefix + "precision", "f32 or f64",
                       [cfg](RunConfig& c, const std::string& v) { cfg(c).precision = parse_precision(v); });
}

void add_data_flags(Command& cmd) {
    Overrides& o = cmd.overrides;
    CLI::App& app = *cmd.app;
    o.add<std::string>(app, "--manifest", "manifest.jsonl",
                       [](RunConfig& c, const std::string& v) { c.data.manifest = v; });
    o.add<std::size_t>(app, "--augment", "augmentation factor (variants per image, original included)",
                       [](RunConfig& c, const std::size_t& v) { c.data.augment.factor = v; });
    o.add<std::uint64_t>(app, "--augment-seed", "augmentation seed",
                         [](RunConfig& c, const std::uint64_t& v) { c.data.augment.seed = v; });
    o.add<double>(app, "--train-fraction", "fraction of samples (or sources) used for training",
                  [](RunConfig& c, const double& v) { c.data.train_fraction = v; });
    o.add<std::uint64_t>(app, "--split-seed", "train/test split seed",
                         [](RunConfig& c, const std::uint64_t& v) { c.data.split_seed = v; });
    o.add_flag(app, "--paper-faithful", "split augmented samples individually instead of by source image",
               [](RunConfig& c) { c.data.group_by_source = false; });
}

void add_head_flags(Command& cmd) {
    add_train_flags(cmd, "head-", true);
    Overrides& o = cmd.overrides;
    CLI::App& app = *cmd.app;
    o.add<std::uint64_t>(app, "--seed", "experiment seed (per-head seeds derive from it)",
                         [](RunConfig& c, const std::uint64_t& v) { c.head.seed = v; });
    o.add<std::size_t>(app, "--hidden1", "first hidden layer width",
                       [](RunConfig& c, const std::size_t& v) { c.head.layers.hidden1 = v; });
    o.add<std::size_t>(app, "--hidden2", "second hidden layer width",
                       [](RunConfig& c, const std::size_t& v) { c.head.layers.hidden2 = v; });
    o.add_flag(app, "--normalize", "standardize each feature dimension before concatenation",
               [](RunConfig& c) { c.head.normalize = true; });
}

void make_dirs(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void echo_config(const fs::path& dir, const nlohmann::ordered_json& config) {
    write_text(dir / "config.json", config.dump(2) + "\n");
}

// ---- synth ----

int run_synth(const Command& cmd) {
    const RunConfig config = cmd.resolve();
    make_dirs(cmd.out);
    const Manifest manifest = synth_generate(config.synth, cmd.out);
    nlohmann::ordered_json echo;
    echo["synth"] = to_json(config)["synth"];
    echo_config(cmd.out, echo);
    std::cerr << "synth: " << manifest.records.size() << " images of " << manifest.id_count() << " identities -> "
              << (fs::path(cmd.out) / "manifest.jsonl").string() << "\n";
    return 0;
}

// ---- train ----

nlohmann::ordered_json train_echo(const RunConfig& config) {
    const nlohmann::ordered_json full = to_json(config);
    nlohmann::ordered_json echo;
    echo["data"] = full["data"];
    echo["train"] = full["train"];
    return echo;
}

template <class Real>
void write_predictions(const Network<Real>& network, std::span<const Example<Real>> examples, Task task,
                       const fs::path& path) {
    const std::vector<std::size_t> predicted = predict_all(network, examples);
    std::string out = "ref,label,prediction\n";
    for (std::size_t i = 0; i < examples.size(); ++i) {
        out += examples[i].ref + "," + std::to_string(examples[i].labels.get(task)) + "," +
               std::to_string(predicted[i]) + "\n";
    }
    write_text(path, out);
}

template <class Real>
int train_with(const RunConfig& config, const Dataset& data, const fs::path& out) {
    const std::vector<Example<Real>> train_set = to_examples<Real>(data.split.train);
    const std::vector<Example<Real>> test_set = to_examples<Real>(data.split.test);
    const TaskDescriptor task = TaskDescriptor::defaults(config.task, data.manifest.id_count());
    Network<Real> network = build_backbone<Real>(task, data.image_shape, config.train.seed);
    const nlohmann::ordered_json echo = train_echo(config);
    TrainResult<Real> result = train(std::move(network), std::span<const Example<Real>>(train_set),
                                     std::span<const Example<Real>>(test_set), config.task, config.train, echo.dump());
    save_checkpoint(result.checkpoint, out / "checkpoint.ffck");
    write_metrics_csv(result.metrics, out / "metrics.csv");
    write_predictions(result.checkpoint.network, std::span<const Example<Real>>(test_set), config.task,
                      out / "predictions.csv");
    const double accuracy = result.metrics.empty() || !result.metrics.back().test_acc
                                ? evaluate(result.checkpoint.network, std::span<const Example<Real>>(test_set),
                                           config.task)
                                : *result.metrics.back().test_acc;
    std::cerr << "train " << to_string(config.task) << ": test accuracy " << format_fixed(100 * accuracy, 2)
              << "%\n";
    return 0;
}

int run_train(const Command& cmd, bool dry_run) {
    const RunConfig config = cmd.resolve();
    config.train.validate();
    if (config.data.manifest.empty()) throw ConfigError("train: --manifest is required");
    make_dirs(cmd.out);
    echo_config(cmd.out, train_echo(config));
    const Dataset data = load_dataset(config.data);
    std::cerr << "train " << to_string(config.task) << ": " << data.split.train.size() << " train / "
              << data.split.test.size() << " test samples, " << data.manifest.id_count() << " identities, "
              << (config.data.group_by_source ? "grouped" : "per-sample") << " split\n";
    if (dry_run) return 0;
    return config.train.precision == Precision::f64 ? train_with<double>(config, data, cmd.out)
                                                    : train_with<float>(config, data, cmd.out);
}

// ---- backbones ----

RunConfig config_from_echo(const std::string& echo, const fs::path& source) {
    RunConfig config;
    try {
        apply_json(config, Json::parse(echo));
    } catch (const Json::exception& e) {
        throw CheckpointError("checkpoint " + source.string() + " has an unreadable config echo: " + e.what());
    }
    return config;
}

template <class Real>
struct Backbone {
    Network<Real> network;
    RunConfig config;
};

template <class Real>
Backbone<Real> load_backbone(const fs::path& path) {
    Checkpoint<Real> checkpoint = load_checkpoint<Real>(path);
    RunConfig config = config_from_echo(checkpoint.config_echo, path);
    return {std::move(checkpoint.network), std::move(config)};
}

Dataset dataset_for(const RunConfig& config, const std::string& manifest_override) {
    DataConfig data = config.data;
    if (!manifest_override.empty()) data.manifest = manifest_override;
    return load_dataset(data);
}

void write_features(const FeatureSet& set, const fs::path& dir) {
    write_feature_set(set, dir / (set.task_tag() + "_" + set.split + ".tsv"));
}

// ---- extract ----

template <class Real>
int extract_with(const fs::path& checkpoint, const std::string& manifest, const fs::path& out) {
    Backbone<Real> backbone = load_backbone<Real>(checkpoint);
    const Dataset data = dataset_for(backbone.config, manifest);
    const std::vector<Example<Real>> train_set = to_examples<Real>(data.split.train);
    const std::vector<Example<Real>> test_set = to_examples<Real>(data.split.test);
    const Task task = backbone.config.task;
    make_dirs(out);
    const FeatureSet train = extract_features(backbone.network, std::span<const Example<Real>>(train_set), task,
                                              "train");
    const FeatureSet test = extract_features(backbone.network, std::span<const Example<Real>>(test_set), task,
                                             "test");
    write_features(train, out);
    write_features(test, out);
    nlohmann::ordered_json echo = train_echo(backbone.config);
    echo["checkpoint"] = checkpoint.generic_string();
    if (!manifest.empty()) echo["data"]["manifest"] = manifest;
    echo_config(out, echo);
    std::cerr << "extract " << to_string(task) << ": " << train.rows.size() << " train / " << test.rows.size()
              << " test rows of width " << train.dim << "\n";
    return 0;
}

// ---- cross / fuse ----

struct ExperimentInputs {
    std::array<std::string, 4> checkpoints;
    std::string manifest;
};

void add_backbone_flags(Command& cmd, ExperimentInputs& inputs) {
    for (Task t : kAllTasks) {
        const std::string name(to_string(t));
        cmd.app->add_option("--" + name, inputs.checkpoints[static_cast<std::size_t>(t)],
                            name + " backbone checkpoint")
            ->required();
    }
    cmd.app->add_option("--manifest", inputs.manifest, "manifest override (default: the one the backbones used)");
}

template <class Real>
int experiment_with(const Command& cmd, const ExperimentInputs& inputs, bool fusion) {
    RunConfig head_config = cmd.resolve();
    head_config.head.train.validate();
    std::vector<Network<Real>> networks;
    std::optional<RunConfig> shared;
    for (Task t : kAllTasks) {
        const fs::path path = inputs.checkpoints[static_cast<std::size_t>(t)];
        Backbone<Real> b = load_backbone<Real>(path);
        if (b.config.task != t) {
            throw ConfigError("--" + std::string(to_string(t)) + " checkpoint " + path.string() +
                              " was trained for task " + std::string(to_string(b.config.task)));
        }
        if (!shared) {
            shared = b.config;
        } else if (to_json(*shared)["data"] != to_json(b.config)["data"]) {
            throw AlignmentError("backbones were trained on different data configurations (" + path.string() +
                                 " differs from " + inputs.checkpoints[0] + ")");
        }
        networks.push_back(std::move(b.network));
    }
    const Dataset data = dataset_for(*shared, inputs.manifest);
    const std::vector<Example<Real>> train_set = to_examples<Real>(data.split.train);
    const std::vector<Example<Real>> test_set = to_examples<Real>(data.split.test);
    const TaskFeatures features = extract_all<Real>(std::span<const Network<Real>, 4>(networks.data(), 4),
                                                    std::span<const Example<Real>>(train_set),
                                                    std::span<const Example<Real>>(test_set),
                                                    data.manifest.id_count());
    const fs::path out = cmd.out;
    make_dirs(out / "features");
    for (std::size_t k = 0; k < 4; ++k) {
        write_features(features.train[k], out / "features");
        write_features(features.test[k], out / "features");
    }

    nlohmann::ordered_json echo;
    echo["data"] = to_json(*shared)["data"];
    if (!inputs.manifest.empty()) echo["data"]["manifest"] = inputs.manifest;
    echo["head"] = to_json(head_config)["head"];
    for (Task t : kAllTasks) {
        echo["backbones"][std::string(to_string(t))] = inputs.checkpoints[static_cast<std::size_t>(t)];
    }
    echo_config(out, echo);

    if (fusion) {
        const FusionReport report = run_fusion_study(features, head_config.head);
        emit_report(report, out);
        for (Task t : kAllTasks) {
            std::cerr << "fuse " << to_string(t) << ": own " << format_fixed(100 * report.accuracy(FusionKind::own, t), 2)
                      << "  other three " << format_fixed(100 * report.accuracy(FusionKind::other_three, t), 2)
                      << "  all " << format_fixed(100 * report.accuracy(FusionKind::all, t), 2) << "\n";
        }
    } else {
        const CrossTaskMatrix matrix = run_cross_task_matrix(features, head_config.head);
        emit_report(matrix, out);
        std::cerr << read_text(out / "table1.txt");
    }
    return 0;
}

int run_experiment(const Command& cmd, const ExperimentInputs& inputs, bool fusion) {
    const Precision precision = checkpoint_precision(inputs.checkpoints[0]);
    for (const std::string& path : inputs.checkpoints) {
        if (checkpoint_precision(path) != precision) {
            throw CheckpointError("backbone checkpoints mix f32 and f64 parameters");
        }
    }
    return precision == Precision::f64 ? experiment_with<double>(cmd, inputs, fusion)
                                       : experiment_with<float>(cmd, inputs, fusion);
}

// ---- report ----

int run_report(const std::vector<std::string>& runs, const fs::path& out) {
    std::vector<AccuracyTable> cross_tables, fusion_tables;
    std::vector<FusionReport> fusions;
    for (const std::string& run : runs) {
        const fs::path dir(run);
        if (!fs::exists(dir)) throw IoError("report: no such run directory " + run);
        auto parse = [](const fs::path& path) {
            try {
                return Json::parse(read_text(path));
            } catch (const Json::exception& e) {
                throw IngestionError(path.string() + ": " + e.what());
            }
        };
        if (fs::exists(dir / "cross.json")) cross_tables.push_back(table1(cross_from_json(parse(dir / "cross.json"))));
        if (fs::exists(dir / "fusion.json")) {
            fusions.push_back(fusion_from_json(parse(dir / "fusion.json")));
            fusion_tables.push_back(table2(fusions.back()));
        }
    }
    if (cross_tables.empty() && fusion_tables.empty()) {
        throw IngestionError("report: no cross.json or fusion.json in the given run directories");
    }
    make_dirs(out);
    auto suffix = [](std::size_t n) { return n > 1 ? " mean of " + std::to_string(n) + " runs" : std::string(); };
    if (!cross_tables.empty()) {
        const AccuracyTable t = mean_table(cross_tables);
        write_text(out / "table1.csv", table_csv(t));
        write_text(out / "table1.txt", table_text(t, "Cross-task feature recognition accuracy (%)" + suffix(cross_tables.size())));
        std::cerr << read_text(out / "table1.txt");
    }
    if (!fusion_tables.empty()) {
        const AccuracyTable t = mean_table(fusion_tables);
        write_text(out / "table2.csv", table_csv(t));
        write_text(out / "table2.txt", table_text(t, "Fusion feature recognition accuracy (%)" + suffix(fusion_tables.size())));
        std::cerr << read_text(out / "table2.txt");

        std::string csv = "task";
        for (std::size_t r = 0; r < fusions.size(); ++r) csv += ",margin_run" + std::to_string(r + 1);
        csv += ",mean_margin,min_margin,reference_margin\n";
        for (Task t : kAllTasks) {
            csv += std::string(display_name(t));
            double sum = 0, low = 0;
            for (std::size_t r = 0; r < fusions.size(); ++r) {
                const double m = fusions[r].margin(t);
                csv += "," + format_fixed(100 * m, 2);
                sum += m;
                low = r == 0 ? m : std::min(low, m);
            }
            csv += "," + format_fixed(100 * sum / static_cast<double>(fusions.size()), 2) + "," +
                   format_fixed(100 * low, 2) + "," + format_fixed(kReferenceMargins[static_cast<std::size_t>(t)], 1) +
                   "\n";
        }
        write_text(out / "fusion_margins.csv", csv);
    }
    nlohmann::ordered_json echo;
    echo["runs"] = runs;
    echo_config(out, echo);
    return 0;
}

// ---- gradcheck ----

int run_gradcheck(std::uint64_t seed, std::size_t cases, double eps, double tolerance) {
    bool ok = true;
    for (const LayerKindReport& r : run_gradient_suite(seed, cases, eps)) {
        const bool pass = r.max_rel_error < tolerance;
        ok = ok && pass;
        std::cout << r.kind << " cases=" << r.cases << " max_rel_error=" << format_shortest(r.max_rel_error)
                  << (pass ? " ok" : " FAIL") << "\n";
    }
    // Whole-network check on a small backbone.
    BackboneOptions tiny;
    tiny.filters = {2, 3, 4};
    tiny.same_padding = true;
    const TaskDescriptor task{Task::age, 3, 6};
    Network<double> net = build_backbone<double>(task, Shape{1, 8, 8}, seed, tiny);
    Rng rng(mix_seed(seed, hash_string("gradcheck/backbone")));
    Tensor<double> input(Shape{1, 8, 8});
    for (double& v : input.data()) v = rng.uniform(-1, 1);
    const double err = grad_check(net, input, rng.below(3), eps);
    const bool pass = err < tolerance;
    ok = ok && pass;
    std::cout << "backbone cases=1 max_rel_error=" << format_shortest(err) << (pass ? " ok" : " FAIL") << "\n";
    return ok ? 0 : 2;
}

int dispatch(CLI::App& app, int argc, const char* const* argv) {
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "help for every subcommand");

    Command synth{app.add_subcommand("synth", "generate the synthetic face dataset"), {}, {}, {}};
    add_common(synth, true);
    {
        Overrides& o = synth.overrides;
        CLI::App& s = *synth.app;
        o.add<std::size_t>(s, "--ids-per-subgroup", "identities per (gender, age, race) subgroup",
                           [](RunConfig& c, const std::size_t& v) { c.synth.ids_per_subgroup = v; });
        o.add<std::size_t>(s, "--images-per-id", "images per identity",
                           [](RunConfig& c, const std::size_t& v) { c.synth.images_per_id = v; });
        o.add<std::size_t>(s, "--resolution", "image side in pixels",
                           [](RunConfig& c, const std::size_t& v) { c.synth.resolution = v; });
        o.add<double>(s, "--noise", "additive Gaussian noise std",
                      [](RunConfig& c, const double& v) { c.synth.noise = v; });
        o.add<std::uint64_t>(s, "--seed", "generator seed",
                             [](RunConfig& c, const std::uint64_t& v) { c.synth.seed = v; });
    }

    Command train_cmd{app.add_subcommand("train", "train one backbone"), {}, {}, {}};
    add_common(train_cmd, true);
    add_data_flags(train_cmd);
    add_train_flags(train_cmd, "", false);
    train_cmd.overrides.add<std::string>(*train_cmd.app, "--task", "id, age, race or gender",
                                         [](RunConfig& c, const std::string& v) { c.task = parse_task(v); });
    train_cmd.overrides.add<std::uint64_t>(*train_cmd.app, "--seed", "initialization and batch-sampling seed",
                                           [](RunConfig& c, const std::uint64_t& v) { c.train.seed = v; });
    bool dry_run = false;
    train_cmd.app->add_flag("--dry-run", dry_run, "resolve the configuration and load the data, then stop");

    Command extract{app.add_subcommand("extract", "dump a backbone's features for both splits"), {}, {}, {}};
    std::string extract_checkpoint, extract_manifest;
    extract.app->add_option("--checkpoint", extract_checkpoint, "backbone checkpoint")->required();
    extract.app->add_option("--manifest", extract_manifest, "manifest override");
    extract.app->add_option("--out", extract.out, "output directory")->required();

    Command cross{app.add_subcommand("cross", "cross-task feature matrix"), {}, {}, {}};
    add_common(cross, true);
    add_head_flags(cross);
    ExperimentInputs cross_inputs;
    add_backbone_flags(cross, cross_inputs);

    Command fuse{app.add_subcommand("fuse", "own / other three / all fusion study"), {}, {}, {}};
    add_common(fuse, true);
    add_head_flags(fuse);
    ExperimentInputs fuse_inputs;
    add_backbone_flags(fuse, fuse_inputs);

    Command report{app.add_subcommand("report", "tables from one or more cross/fuse output directories"), {}, {}, {}};
    std::vector<std::string> runs;
    report.app->add_option("--runs", runs, "cross/fuse output directories")->required();
    report.app->add_option("--out", report.out, "output directory")->required();

    CLI::App* grad = app.add_subcommand("gradcheck", "finite-difference check of every layer kind");
    std::uint64_t grad_seed = 1;
    std::size_t grad_cases = 50;
    double grad_eps = 1e-5;
    double grad_tolerance = 1e-4;
    grad->add_option("--seed", grad_seed, "case generator seed");
    grad->add_option("--cases", grad_cases, "random cases per layer kind");
    grad->add_option("--eps", grad_eps, "central-difference step");
    grad->add_option("--tolerance", grad_tolerance, "maximum accepted relative error");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    if (synth.app->parsed()) return run_synth(synth);
    if (train_cmd.app->parsed()) return run_train(train_cmd, dry_run);
    if (extract.app->parsed()) {
        const Precision precision = checkpoint_precision(extract_checkpoint);
        return precision == Precision::f64 ? extract_with<double>(extract_checkpoint, extract_manifest, extract.out)
                                           : extract_with<float>(extract_checkpoint, extract_manifest, extract.out);
    }
    if (cross.app->parsed()) return run_experiment(cross, cross_inputs, false);
    if (fuse.app->parsed()) return run_experiment(fuse, fuse_inputs, true);
    if (report.app->parsed()) return run_report(runs, report.out);
    if (grad->parsed()) return run_gradcheck(grad_seed, grad_cases, grad_eps, grad_tolerance);
    return 1;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv) {
    CLI::App app{"facefuse: multi-task facial attribute features and fusion"};
    app.name("facefuse");
    try {
        return dispatch(app, argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}

int cli_dispatch(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"facefuse"};
    for (const std::string& a : args) argv.push_back(a.c_str());
    return cli_dispatch(static_cast<int>(argv.size()), argv.data());
}

}  // namespace facefuse
