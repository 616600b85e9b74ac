#include "splmll/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <unistd.h>

#include "splmll/checkpoint.hpp"
#include "splmll/dataset_io.hpp"
#include "splmll/errors.hpp"
#include "splmll/gradcheck.hpp"
#include "splmll/landmarks.hpp"
#include "splmll/metrics.hpp"
#include "splmll/trainer.hpp"

namespace splmll::cli {

namespace {

struct Options {
    std::string data;
    std::string labels_xml;
    std::string checkpoint;
    std::string out;
    std::string log;
    std::string save_config;
    std::string format = "json";

    std::string variant = "mlp";
    double lambda1 = 0.1;
    double lambda2 = 0.1;
    double lr_theta = TrainConfig{}.lr_theta;
    double lr_b = TrainConfig{}.lr_B;
    double lr_a = TrainConfig{}.lr_A;
    long batch_size = 64;
    std::size_t max_iters = 500;
    double tol = 1e-5;
    std::uint64_t seed = kDefaultSeed;
    double threshold = kDefaultThreshold;
    int folds = 10;
    std::string hard_diagonal = "on";
    std::string standardize = "on";
    std::string hidden = "512,64";
    double leaky_slope = kDefaultLeakySlope;
    int workers = 1;

    long top_k = 0;
    double landmark_threshold = 0.0;
    std::vector<std::string> pairs;
    std::string diag_csv;
    std::string recovery_csv;

    bool binary = false;

    long n_instances = 200;
    long n_features = 10;
    long n_labels = 6;
    long n_landmarks = 2;
    double noise = 0.0;
    std::uint64_t synth_seed = SynthesisConfig{}.seed;

    std::uint64_t gradcheck_seed = GradCheckOptions{}.seed;
    int instances = 20;
    std::string corrupt;
    bool strict = false;
};

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void emit(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
    } else {
        write_atomic(path, content);
    }
}

std::string join(const std::vector<std::string>& items, char sep) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : std::string(1, sep)) + s;
    return out;
}

std::vector<Eigen::Index> parse_widths(const std::string& text) {
    std::vector<Eigen::Index> widths;
    std::istringstream in(text);
    for (std::string token; std::getline(in, token, ',');) {
        Eigen::Index w = 0;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), w);
        if (ec != std::errc() || ptr != token.data() + token.size() || w < 1) {
            throw ArgumentError("bad hidden width '" + token + "' in '" + text + "'");
        }
        widths.push_back(w);
    }
    return widths;
}

TrainConfig train_config(const Options& o) {
    TrainConfig cfg;
    cfg.hp.lambda1 = o.lambda1;
    cfg.hp.lambda2 = o.lambda2;
    cfg.lr_theta = o.lr_theta;
    cfg.lr_B = o.lr_b;
    cfg.lr_A = o.lr_a;
    cfg.batch_size = o.batch_size;
    cfg.max_outer_iters = o.max_iters;
    cfg.rel_tol = o.tol;
    cfg.seed = o.seed;
    cfg.variant = parse_variant(o.variant);
    cfg.hidden_widths = parse_widths(o.hidden);
    cfg.leaky_slope = o.leaky_slope;
    cfg.hard_diagonal = o.hard_diagonal == "on";
    cfg.standardize = o.standardize == "on";
    cfg.validate();
    return cfg;
}

MultiLabelDataset load_dataset(const Options& o) {
    if (o.data.empty() || o.labels_xml.empty()) throw ArgumentError("--data and --labels-xml are required");
    return load_mulan(o.data, o.labels_xml);
}

ModelState load_checkpoint(const Options& o) {
    if (o.checkpoint.empty()) throw ArgumentError("--checkpoint is required");
    return checkpoint_from_text(read_text(o.checkpoint));
}

void check_compatible(const ModelState& state, const MultiLabelDataset& ds) {
    if (state.theta.input_dim() != ds.num_features()) {
        throw SchemaError(fmt::format("checkpoint expects D={} features but dataset has D={}", state.theta.input_dim(),
                                      ds.num_features()));
    }
    if (state.theta.output_dim() != ds.num_labels()) {
        throw SchemaError(fmt::format("checkpoint has C={} labels but dataset has C={}", state.theta.output_dim(),
                                      ds.num_labels()));
    }
}

Eigen::Index resolve_label(const std::string& token, const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == token) return static_cast<Eigen::Index>(i);
    Eigen::Index idx = -1;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), idx);
    if (ec != std::errc() || ptr != token.data() + token.size() || idx < 0 ||
        idx >= static_cast<Eigen::Index>(names.size())) {
        throw ArgumentError("unknown label '" + token + "'");
    }
    return idx;
}

int cmd_train(const Options& o) {
    const auto cfg = train_config(o);
    if (o.checkpoint.empty()) throw ArgumentError("--checkpoint is required");
    const auto ds = load_dataset(o);
    const auto result = train(ds, cfg);
    const auto lm = select_landmarks(result.state.B, RelativeThreshold{}, ds.label_names);

    std::vector<std::string> selected;
    for (auto i : lm.selected) selected.push_back(ds.label_names[static_cast<std::size_t>(i)]);
    nlohmann::ordered_json summary;
    summary["initial_loss"] = result.report.initial_loss;
    summary["final_loss"] = result.report.loss_per_outer_iter.back();
    summary["iterations"] = result.report.iters_run;
    summary["converged"] = result.report.converged;
    summary["wall_time_seconds"] = result.report.wall_time;
    summary["num_selected_landmarks"] = selected.size();
    summary["selected_landmarks"] = join(selected, ';');

    write_atomic(o.checkpoint, checkpoint_to_text(result.state));
    write_atomic(o.log.empty() ? o.checkpoint + ".log.csv" : o.log, training_log_csv(result.report));
    emit(o.out, summary.dump(2) + "\n");
    return kSuccess;
}

int cmd_evaluate(const Options& o) {
    const auto state = load_checkpoint(o);
    const auto ds = load_dataset(o);
    check_compatible(state, ds);
    const auto report = evaluate(predict_scores(state, ds.features), ds.labels, o.threshold);
    if (o.format == "csv") {
        std::string csv = "key,value\n";
        const auto flat = nlohmann::ordered_json::parse(to_flat_json(report));
        for (const auto& [key, value] : flat.items()) {
            csv += key + "," + value.dump() + "\n";
        }
        emit(o.out, csv);
    } else {
        emit(o.out, to_flat_json(report));
    }
    return kSuccess;
}

int cmd_cv(const Options& o) {
    const auto cfg = train_config(o);
    const auto ds = load_dataset(o);
    emit(o.out, cross_validation_csv(cross_validate(ds, cfg, o.folds, o.threshold, o.workers)));
    return kSuccess;
}

int cmd_predict(const Options& o) {
    const auto state = load_checkpoint(o);
    const auto ds = load_dataset(o);
    check_compatible(state, ds);
    Matrix scores = predict_scores(state, ds.features);
    if (o.binary) scores = threshold_scores(scores, o.threshold);
    std::string csv = join(ds.label_names, ',') + "\n";
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        for (Eigen::Index j = 0; j < scores.cols(); ++j) {
            csv += o.binary ? fmt::format("{}{}", j ? "," : "", static_cast<int>(scores(i, j)))
                            : fmt::format("{}{:.17g}", j ? "," : "", scores(i, j));
        }
        csv += '\n';
    }
    emit(o.out, csv);
    return kSuccess;
}

int cmd_landmarks(const Options& o) {
    const auto state = load_checkpoint(o);
    std::vector<std::string> names;
    std::optional<MultiLabelDataset> ds;
    if (!o.data.empty()) {
        ds = load_dataset(o);
        check_compatible(state, *ds);
        names = ds->label_names;
    } else if (!o.labels_xml.empty()) {
        names = parse_label_header(read_text(o.labels_xml));
        if (static_cast<Eigen::Index>(names.size()) != state.B.rows()) {
            throw SchemaError(fmt::format("checkpoint has C={} labels but header lists C={}", state.B.rows(), names.size()));
        }
    }
    SelectionRule rule = RelativeThreshold{};
    if (o.top_k > 0) {
        rule = TopK{o.top_k};
    } else if (o.landmark_threshold > 0.0) {
        rule = Threshold{o.landmark_threshold};
    }
    const auto report = select_landmarks(state.B, rule, names);
    auto doc = nlohmann::ordered_json::parse(landmark_report_json(report));

    std::vector<std::string> pairs;
    std::copy_if(o.pairs.begin(), o.pairs.end(), std::back_inserter(pairs), [](const auto& p) { return !p.empty(); });
    if (!pairs.empty()) {
        if (!ds) throw ArgumentError("--pair needs --data and --labels-xml");
        for (const auto& pair : pairs) {
            const auto comma = pair.find(',');
            if (comma == std::string::npos) throw ArgumentError("--pair expects LABEL_I,LABEL_J");
            const auto i = resolve_label(pair.substr(0, comma), names);
            const auto j = resolve_label(pair.substr(comma + 1), names);
            const auto co = cooccurrence(ds->labels, i, j);
            const auto key = fmt::format("cooccurrence.{}.{}", names[static_cast<std::size_t>(i)],
                                         names[static_cast<std::size_t>(j)]);
            doc[key + ".count_both"] = co.count_both;
            doc[key + ".count_given"] = co.count_given;
            doc[key + ".probability"] = co.probability;
        }
    }
    if (!o.diag_csv.empty()) write_atomic(o.diag_csv, diagonal_csv(state.B, names));
    if (!o.recovery_csv.empty()) write_atomic(o.recovery_csv, matrix_csv(recovery_weights(state.B, state.A), names));
    emit(o.out, doc.dump(2) + "\n");
    return kSuccess;
}

int cmd_synth(const Options& o) {
    if (o.out.empty()) throw ArgumentError("--out PREFIX is required (writes PREFIX.arff and PREFIX.xml)");
    SynthesisConfig cfg;
    cfg.n_instances = o.n_instances;
    cfg.n_features = o.n_features;
    cfg.n_labels = o.n_labels;
    cfg.n_landmarks = o.n_landmarks;
    cfg.noise_rate = o.noise;
    cfg.seed = o.synth_seed;
    const auto syn = synthesize(cfg);
    write_atomic(o.out + ".arff", to_dense_arff(syn.dataset));
    write_atomic(o.out + ".xml", to_label_header(syn.dataset.label_names));
    std::vector<std::string> planted;
    for (auto i : syn.landmarks) planted.push_back(syn.dataset.label_names[static_cast<std::size_t>(i)]);
    nlohmann::ordered_json j;
    j["arff"] = o.out + ".arff";
    j["labels_xml"] = o.out + ".xml";
    j["num_instances"] = syn.dataset.num_instances();
    j["num_features"] = syn.dataset.num_features();
    j["num_labels"] = syn.dataset.num_labels();
    j["planted_landmarks"] = join(planted, ';');
    j["label_cardinality"] = label_cardinality(syn.dataset);
    std::cout << j.dump(2) << "\n";
    return kSuccess;
}

int cmd_gradcheck(const Options& o) {
    GradCheckOptions opts;
    opts.seed = o.gradcheck_seed;
    opts.instances = o.instances;
    if (!o.corrupt.empty()) opts.corrupt = parse_gradient_kind(o.corrupt);
    const auto report = run_gradcheck(opts);
    emit(o.out, report.to_json());
    return (o.strict && !report.all_passed()) ? kFailure : kSuccess;
}

void add_data(CLI::App* sub, Options& o) {
    sub->add_option("--data", o.data, "ARFF dataset");
    sub->add_option("--labels-xml", o.labels_xml, "Mulan XML label header");
}

void add_training(CLI::App* sub, Options& o) {
    sub->add_option("--variant", o.variant, "Embedding variant")->check(CLI::IsMember({"linear", "mlp"}));
    sub->add_option("--lambda1", o.lambda1, "Weight of ||B - I||_F^2");
    sub->add_option("--lambda2", o.lambda2, "Weight of ||B||_{2,1}");
    sub->add_option("--lr-theta", o.lr_theta, "Network learning rate");
    sub->add_option("--lr-b", o.lr_b, "Learning rate for B");
    sub->add_option("--lr-a", o.lr_a, "Learning rate for A");
    sub->add_option("--batch-size", o.batch_size, "Minibatch size for network updates");
    sub->add_option("--max-iters", o.max_iters, "Maximum outer iterations");
    sub->add_option("--tol", o.tol, "Relative loss change that stops training");
    sub->add_option("--hard-diagonal", o.hard_diagonal, "Zero off-diagonal B entries every iteration")
        ->check(CLI::IsMember({"on", "off"}));
    sub->add_option("--standardize", o.standardize, "Standardize features on the training data")
        ->check(CLI::IsMember({"on", "off"}));
    sub->add_option("--hidden", o.hidden, "Comma-separated hidden layer widths (mlp)");
    sub->add_option("--leaky-slope", o.leaky_slope, "Negative-region slope of the leaky ReLU");
}

// Every subcommand binds into the same Options, so only the active section is
// persisted; replaying it with `--config FILE` selects that subcommand again.
std::string saved_config(const CLI::App& app) {
    const auto* active = app.get_subcommands().front();
    return "[" + active->get_name() + "]\n" + active->config_to_str(true, false);
}

int dispatch(CLI::App& app, const Options& o) {
    if (app.got_subcommand("train")) return cmd_train(o);
    if (app.got_subcommand("evaluate")) return cmd_evaluate(o);
    if (app.got_subcommand("cv")) return cmd_cv(o);
    if (app.got_subcommand("predict")) return cmd_predict(o);
    if (app.got_subcommand("landmarks")) return cmd_landmarks(o);
    if (app.got_subcommand("synth")) return cmd_synth(o);
    if (app.got_subcommand("gradcheck")) return cmd_gradcheck(o);
    throw ArgumentError("no command given");
}

}  // namespace

void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += fmt::format(".tmp.{}", ::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw IoError("failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move output into '" + path + "'");
    }
}

int run(int argc, const char* const* argv) {
    Options o;
    CLI::App app{"Landmark-based multi-label learning: train, evaluate and analyse"};
    app.require_subcommand(1);
    app.fallthrough();
    app.option_defaults()->always_capture_default();
    app.set_config("--config", "", "Replay options from a saved TOML config");
    app.add_option("--save-config", o.save_config, "Write the effective options to this file");

    auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
    add_data(train, o);
    add_training(train, o);
    train->add_option("--seed", o.seed, "Random seed");
    train->add_option("--checkpoint", o.checkpoint, "Checkpoint output path");
    train->add_option("--log", o.log, "Training log CSV (default: <checkpoint>.log.csv)");
    train->add_option("--out", o.out, "Summary report path (default: stdout)");

    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset");
    add_data(evaluate, o);
    evaluate->add_option("--checkpoint", o.checkpoint, "Checkpoint to evaluate");
    evaluate->add_option("--threshold", o.threshold, "Score threshold for binarized metrics");
    evaluate->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
    evaluate->add_option("--out", o.out, "Metric report path (default: stdout)");

    auto* cv = app.add_subcommand("cv", "k-fold cross-validation");
    add_data(cv, o);
    add_training(cv, o);
    cv->add_option("--seed", o.seed, "Random seed");
    cv->add_option("--folds", o.folds, "Number of folds");
    cv->add_option("--threshold", o.threshold, "Score threshold for binarized metrics");
    cv->add_option("--workers", o.workers, "Folds trained concurrently");
    cv->add_option("--out", o.out, "CSV table path (default: stdout)");

    auto* predict = app.add_subcommand("predict", "Score a dataset with a checkpoint");
    add_data(predict, o);
    predict->add_option("--checkpoint", o.checkpoint, "Checkpoint to apply");
    predict->add_option("--threshold", o.threshold, "Threshold used with --binary");
    predict->add_flag("--binary", o.binary, "Emit thresholded 0/1 predictions");
    predict->add_option("--out", o.out, "CSV path (default: stdout)");

    auto* landmarks = app.add_subcommand("landmarks", "Inspect the learned selection matrix");
    add_data(landmarks, o);
    landmarks->add_option("--checkpoint", o.checkpoint, "Checkpoint to inspect");
    landmarks->add_option("--top-k", o.top_k, "Select the k largest diagonal magnitudes");
    landmarks->add_option("--landmark-threshold", o.landmark_threshold, "Select magnitudes above this value");
    landmarks->add_option("--pair", o.pairs, "Co-occurrence P(J | I) for LABEL_I,LABEL_J (repeatable)")->default_str("");
    landmarks->add_option("--diag-csv", o.diag_csv, "Write diag(B) as CSV");
    landmarks->add_option("--recovery-csv", o.recovery_csv, "Write B*A as CSV");
    landmarks->add_option("--out", o.out, "Report path (default: stdout)");

    auto* synth = app.add_subcommand("synth", "Generate a dataset with planted landmarks");
    synth->add_option("--instances", o.n_instances, "Number of instances");
    synth->add_option("--features", o.n_features, "Number of features");
    synth->add_option("--labels", o.n_labels, "Number of labels");
    synth->add_option("--landmarks", o.n_landmarks, "Number of planted landmarks");
    synth->add_option("--noise", o.noise, "Label flip probability");
    synth->add_option("--seed", o.synth_seed, "Random seed");
    synth->add_option("--out", o.out, "Output prefix");

    auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic gradients with finite differences");
    gradcheck->add_option("--seed", o.gradcheck_seed, "Random seed");
    gradcheck->add_option("--instances", o.instances, "Random instances to check");
    gradcheck->add_option("--corrupt", o.corrupt, "Perturb one analytic gradient (B, A, F, theta)");
    gradcheck->add_flag("--strict", o.strict, "Exit non-zero when any check fails");
    gradcheck->add_option("--out", o.out, "Report path (default: stdout)");

    for (auto* sub : app.get_subcommands({})) sub->configurable();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kArgument;
    }

    try {
        if (!o.save_config.empty()) write_atomic(o.save_config, saved_config(app));
        return dispatch(app, o);
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDivergence;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumeric;
    } catch (const ArgumentError& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return kArgument;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kParse;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kSchema;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kValidation;
    } catch (const UndefinedMetricError& e) {
        std::cerr << "undefined metric: " << e.what() << "\n";
        return kUndefinedMetric;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace splmll::cli
