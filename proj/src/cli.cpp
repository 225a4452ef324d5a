#include "msdensity/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <memory>
#include <optional>

#include "msdensity/digest.hpp"
#include "msdensity/error.hpp"
#include "msdensity/evaluation.hpp"
#include "msdensity/transfer.hpp"

namespace msd {

namespace {

constexpr const char* kVersion = "0.1.0";

namespace fs = std::filesystem;

// Run record. The digest covers everything that determines the outputs;
// output paths and wall time are listed but not hashed.
class RunManifest {
public:
    explicit RunManifest(std::string command) : command_(std::move(command)) {}

    void collect_options(const CLI::App& app) {
        for (const CLI::Option* opt : app.get_options()) {
            const auto& names = opt->get_lnames();
            if (names.empty()) continue;
            const std::string& name = names.front();
            if (name == "help" || name == "manifest" || name == "config" || name == "timing") continue;
            std::string value;
            if (opt->get_expected_min() == 0)
                value = opt->count() > 0 ? "true" : "false";
            else if (opt->count() > 0)
                value = join(opt->results(), ",");
            else
                value = opt->get_default_str();
            config_.emplace_back(name, value);
        }
        std::sort(config_.begin(), config_.end());
    }
    void add_input(const fs::path& path) { inputs_.emplace_back(path.generic_string(), file_digest(path)); }
    void add_output(const fs::path& path) { outputs_.push_back(path); }
    void set_seed(std::uint64_t seed) { seed_ = seed; }
    void add_result(const std::string& key, const std::string& value) { results_.emplace_back(key, value); }

    std::string digest() const {
        Sha256 h;
        h.update("manifest-v1\n").update(kVersion).update("\n").update(command_).update("\n");
        for (const auto& [k, v] : config_) h.update(k).update("=").update(v).update("\n");
        for (const auto& [p, d] : inputs_) h.update(p).update(":").update(d).update("\n");
        if (seed_) h.update(static_cast<unsigned long long>(*seed_));
        return h.finish();
    }

    KeyedText document(std::optional<double> wall_seconds) const {
        KeyedText doc("msdensity-manifest", 1);
        doc.set("version", std::string(kVersion));
        doc.set("command", command_);
        doc.set("seed", seed_ ? std::to_string(*seed_) : std::string("none"));
        for (const auto& [k, v] : config_) doc.set("config." + k, v);
        for (std::size_t i = 0; i < inputs_.size(); ++i) {
            doc.set("input." + std::to_string(i) + ".path", inputs_[i].first);
            doc.set("input." + std::to_string(i) + ".sha256", inputs_[i].second);
        }
        for (std::size_t i = 0; i < outputs_.size(); ++i) {
            doc.set("output." + std::to_string(i) + ".path", outputs_[i].generic_string());
            doc.set("output." + std::to_string(i) + ".sha256", file_digest(outputs_[i]));
        }
        for (const auto& [k, v] : results_) doc.set("result." + k, v);
        if (wall_seconds) doc.set("wall_seconds", *wall_seconds);
        doc.set("manifest_digest", digest());
        return doc;
    }

private:
    std::string command_;
    std::vector<std::pair<std::string, std::string>> config_;
    std::vector<std::pair<std::string, std::string>> inputs_;
    std::vector<fs::path> outputs_;
    std::vector<std::pair<std::string, std::string>> results_;
    std::optional<std::uint64_t> seed_;
};

fs::path with_suffix(const fs::path& path, const std::string& tag) {
    fs::path out = path;
    out.replace_extension(tag + path.extension().string());
    return out;
}

struct Common {
    std::size_t threads = 1;
    bool timing = false;
    std::string manifest;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--threads", c.threads, "Worker threads for inference")->check(CLI::PositiveNumber);
    sub->add_flag("--timing", c.timing, "Record wall time in the manifest");
    sub->add_option("--manifest", c.manifest, "Manifest path");
    sub->add_option("--config", "Config file of key = value lines naming long flags (flags win)");
}

struct DbPaths {
    std::string correlations;
    std::string components;
};

void add_db(CLI::App* sub, DbPaths& p, bool required) {
    auto* a = sub->add_option("--correlations", p.correlations, "Density correlations CSV");
    auto* b = sub->add_option("--component-table", p.components, "Compound molar masses CSV");
    if (required) {
        a->required();
        b->required();
    }
}

CorrelationDatabase load_db(const DbPaths& p, RunManifest& m) {
    auto db = parse_correlations(p.correlations, p.components);
    m.add_input(p.correlations);
    m.add_input(p.components);
    return db;
}

struct TrainFlags {
    double lr = 1e-3;
    double l2 = 1e-5;
    std::size_t batch = 256;
    std::size_t epochs = 500;
    std::size_t patience = 25;
    double val_fraction = 0.2;
};

void add_train_flags(CLI::App* sub, TrainFlags& f, const std::string& prefix, const std::string& what) {
    sub->add_option("--" + prefix + "lr", f.lr, what + " learning rate");
    sub->add_option("--" + prefix + "epochs", f.epochs, what + " epoch budget");
    sub->add_option("--" + prefix + "patience", f.patience, what + " early-stop patience");
}

TrainConfig to_config(const TrainFlags& f, std::size_t batch, double l2, double val_fraction) {
    TrainConfig c;
    c.learning_rate = f.lr;
    c.l2_lambda = l2;
    c.batch_size = batch;
    c.max_epochs = f.epochs;
    c.patience = f.patience;
    c.validation_fraction = val_fraction;
    return c;
}

struct Shared {
    std::size_t batch = 256;
    double l2 = 1e-5;
    double val_fraction = 0.2;
};

void add_shared(CLI::App* sub, Shared& s) {
    sub->add_option("--batch", s.batch, "Mini-batch size");
    sub->add_option("--l2", s.l2, "L2 penalty on weights");
    sub->add_option("--val-fraction", s.val_fraction, "Validation fraction of the training groups");
}

void write_manifest(const RunManifest& m, const Common& c, const fs::path& fallback, double wall, std::ostream& err) {
    fs::path path = c.manifest.empty() ? fallback : fs::path(c.manifest);
    m.document(c.timing ? std::optional<double>(wall) : std::nullopt).save(path);
    err << "manifest " << path.generic_string() << " " << m.digest() << "\n";
}

void print_warnings(const Warnings& w, std::ostream& err) {
    for (const auto& line : w) err << "warning: " << line << "\n";
}

Featurizer load_featurizer(const std::string& path, RunManifest& m) {
    auto fz = Featurizer::load(path);
    m.add_input(path);
    return fz;
}

Dataset load_dataset(const std::string& path, RunManifest& m) {
    auto ds = read_dataset(path);
    m.add_input(path);
    m.add_input(path + ".meta");
    return ds;
}

MlpModel load_model(const std::string& path, RunManifest& m) {
    auto model = load_checkpoint(path);
    m.add_input(path);
    return model;
}

void require_featurizer(const MlpModel& model, const Featurizer& fz, const std::string& what) {
    if (model.feature_digest != fz.digest())
        throw IncompatibilityError(what + " was trained with a different featurization than the one supplied");
    require_compatible(model, fz.digest(), fz.feature_dim());
}

std::vector<std::string> parse_ids(const std::string& text) {
    auto ids = split(text, ',');
    if (ids.empty() || ids.size() > kMaxComponents) throw ValidationError("expected 1 to 4 comma-separated compounds");
    return ids;
}

std::vector<double> parse_fractions(const std::string& text, std::size_t expected) {
    std::vector<double> out;
    for (const auto& tok : split(text, ',')) {
        auto v = parse_double(tok);
        if (!v) throw ValidationError("bad mole fraction '" + tok + "'");
        out.push_back(*v);
    }
    if (out.size() != expected) throw ValidationError("number of fractions does not match number of compounds");
    return out;
}

// Evaluators shared by evaluate / predict / sweep.
struct ModelSet {
    std::optional<CorrelationDatabase> db;
    std::optional<RkCoefficientSet> coeffs;
    std::optional<Featurizer> featurizer;
    std::vector<std::unique_ptr<MlpModel>> models;
    std::vector<std::unique_ptr<DensityEvaluator>> evaluators;

    std::vector<const DensityEvaluator*> pointers() const {
        std::vector<const DensityEvaluator*> out;
        for (const auto& e : evaluators) out.push_back(e.get());
        return out;
    }
};

struct ModelFlags {
    DbPaths db;
    std::string rk;
    std::string featurization;
    std::string model;
    std::string direct;
    std::string missing_pairs = "strict";
    bool raw = false;
};

void add_model_flags(CLI::App* sub, ModelFlags& f) {
    add_db(sub, f.db, false);
    sub->add_option("--rk-coefficients", f.rk, "Pair expansion coefficients CSV");
    sub->add_option("--featurization", f.featurization, "Featurization file from ingest");
    sub->add_option("--model", f.model, "Network checkpoint (labeled dnn)");
    sub->add_option("--direct", f.direct, "Directly trained checkpoint (labeled direct)");
    sub->add_option("--missing-pairs", f.missing_pairs, "Missing pair coefficients: strict or zero")
        ->check(CLI::IsMember({"strict", "zero"}));
    sub->add_flag("--raw", f.raw, "Evaluate networks on the given component ordering only");
}

ModelSet build_models(const ModelFlags& f, RunManifest& m) {
    ModelSet set;
    if (!f.db.correlations.empty() || !f.db.components.empty()) {
        if (f.db.correlations.empty() || f.db.components.empty())
            throw ConfigurationError("--correlations and --component-table must be given together");
        set.db = load_db(f.db, m);
        set.evaluators.push_back(std::make_unique<IdealEvaluator>(*set.db));
        if (!f.rk.empty()) {
            set.coeffs = parse_rk_coefficients(f.rk);
            m.add_input(f.rk);
            auto policy = f.missing_pairs == "zero" ? MissingPairPolicy::ZeroExcess : MissingPairPolicy::Strict;
            set.evaluators.push_back(std::make_unique<RkEvaluator>(*set.db, *set.coeffs, policy));
        }
    } else if (!f.rk.empty()) {
        throw ConfigurationError("--rk-coefficients needs --correlations and --component-table");
    }
    auto add_net = [&](const std::string& path, const std::string& label) {
        if (path.empty()) return;
        if (!set.featurizer) {
            if (f.featurization.empty()) throw ConfigurationError("network evaluation needs --featurization");
            set.featurizer = load_featurizer(f.featurization, m);
        }
        set.models.push_back(std::make_unique<MlpModel>(load_model(path, m)));
        require_featurizer(*set.models.back(), *set.featurizer, path);
        set.evaluators.push_back(std::make_unique<DnnEvaluator>(*set.models.back(), *set.featurizer, !f.raw, label));
    };
    add_net(f.model, "dnn");
    add_net(f.direct, "direct");
    if (set.evaluators.empty()) throw ConfigurationError("no model to evaluate (give --model and/or --correlations)");
    return set;
}

// Appends "--key value" for every config-file line whose flag is not already
// on the command line. "true" / "false" values switch flags on / off.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;
    auto given = [&](const std::string& flag) {
        for (std::size_t i = 1; i < args.size(); ++i)
            if (args[i] == flag || args[i].rfind(flag + "=", 0) == 0) return true;
        return false;
    };
    const auto text = read_file(path);
    std::vector<std::string> extra;
    std::size_t line_no = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(path + ": expected key = value", line_no);
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty() || key == "config") throw ParseError(path + ": bad key '" + key + "'", line_no);
        const std::string flag = "--" + key;
        if (given(flag)) continue;
        if (value == "false") continue;
        extra.push_back(flag);
        if (value != "true") extra.push_back(value);
    }
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Molten-salt mixture density models", "msdensity"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    app.set_version_flag("--version", kVersion);

    Common common;

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Down-select descriptors and freeze the featurization");
    std::string desc_path, ingest_out;
    DbPaths ingest_db;
    DownselectConfig ds_cfg;
    ingest->add_option("--descriptors", desc_path, "Raw descriptor table")->required();
    add_db(ingest, ingest_db, true);
    ingest->add_option("--variance-floor", ds_cfg.variance_floor, "Drop descriptors with variance <= floor");
    ingest->add_option("--corr-threshold", ds_cfg.corr_threshold, "Absolute Pearson correlation cutoff");
    ingest->add_option("--target-count", ds_cfg.target_count, "Descriptors to keep");
    ingest->add_option("--out", ingest_out, "Featurization file")->required();
    add_common(ingest, common);

    // build-dataset
    auto* build = app.add_subcommand("build-dataset", "Generate an experimental or expansion-based dataset");
    std::string kind, build_fz, build_rk, build_systems, build_out;
    DbPaths build_db;
    std::uint64_t build_seed = 0;
    double test_fraction = 0.2;
    RkDatasetOptions rk_opts;
    bool no_boundary = false;
    build->add_option("--kind", kind, "experimental or rk")->required()->check(CLI::IsMember({"experimental", "rk"}));
    add_db(build, build_db, true);
    build->add_option("--featurization", build_fz, "Featurization file from ingest")->required();
    build->add_option("--rk-coefficients", build_rk, "Pair expansion coefficients CSV (kind rk)");
    build->add_option("--systems", build_systems, "Systems to synthesize (kind rk)");
    build->add_option("--composition-step", rk_opts.composition_step, "Composition grid spacing (kind rk)");
    build->add_option("--t-step", rk_opts.t_step, "Temperature sampling step in K");
    build->add_flag("--no-boundary", no_boundary, "Drop grid points with a zero fraction (kind rk)");
    build->add_option("--test-fraction", test_fraction, "Fraction of groups held out")->check(CLI::Range(0.0, 1.0));
    build->add_option("--seed", build_seed, "Split seed")->required();
    build->add_option("--out", build_out, "Dataset CSV (splits go next to it)")->required();
    add_common(build, common);

    // pretrain
    auto* pre = app.add_subcommand("pretrain", "Train a fresh network (stage a)");
    std::string pre_ds, pre_out;
    std::vector<std::size_t> pre_hidden{128, 128, 128, 128};
    std::uint64_t pre_seed = 0;
    TrainFlags pre_flags;
    Shared pre_shared;
    pre->add_option("--dataset", pre_ds, "Training dataset CSV")->required();
    pre->add_option("--hidden", pre_hidden, "Hidden layer widths")->delimiter(',');
    add_train_flags(pre, pre_flags, "", "Training");
    add_shared(pre, pre_shared);
    pre->add_option("--seed", pre_seed, "Initialization and batching seed")->required();
    pre->add_option("--out", pre_out, "Checkpoint path")->required();
    add_common(pre, common);

    // transfer
    auto* tl = app.add_subcommand("transfer", "Surgery, frozen-stage training and fine-tuning (stages b-d)");
    std::string tl_pretrained, tl_rk_ds, tl_ds, tl_out;
    std::uint64_t tl_seed = 0;
    TlConfig tl_defaults;
    std::vector<std::size_t> tl_hidden = tl_defaults.pretrain_hidden_dims, tl_new = tl_defaults.new_hidden_dims;
    std::size_t tl_retain = tl_defaults.retain_layers;
    TrainFlags tl_pre_flags, tl_frozen_flags, tl_fine_flags{1e-6, 1e-5, 256, 50, 10, 0.2};
    Shared tl_shared;
    auto* pre_opt = tl->add_option("--pretrained", tl_pretrained, "Stage-a checkpoint");
    auto* rk_opt = tl->add_option("--rk-dataset", tl_rk_ds, "Pretraining dataset (runs stage a first)");
    pre_opt->excludes(rk_opt);
    tl->add_option("--dataset", tl_ds, "Experimental training dataset CSV")->required();
    tl->add_option("--hidden", tl_hidden, "Stage-a hidden widths (with --rk-dataset)")->delimiter(',');
    tl->add_option("--retain", tl_retain, "Hidden layers kept from the pretrained network");
    tl->add_option("--new-hidden", tl_new, "Widths of the grafted hidden layers")->delimiter(',');
    add_train_flags(tl, tl_pre_flags, "pretrain-", "Stage-a");
    add_train_flags(tl, tl_frozen_flags, "", "Frozen-stage");
    add_train_flags(tl, tl_fine_flags, "finetune-", "Fine-tune");
    add_shared(tl, tl_shared);
    tl->add_option("--seed", tl_seed, "Pipeline seed")->required();
    tl->add_option("--out-dir", tl_out, "Directory for stage checkpoints and the report")->required();
    add_common(tl, common);

    // train-direct
    auto* direct = app.add_subcommand("train-direct", "Baseline: post-surgery shape trained once on experimental data");
    std::string dir_ds, dir_out;
    std::vector<std::size_t> dir_hidden{128, 128, 128, 128, 128};
    std::uint64_t dir_seed = 0;
    TrainFlags dir_flags;
    Shared dir_shared;
    direct->add_option("--dataset", dir_ds, "Experimental training dataset CSV")->required();
    direct->add_option("--hidden", dir_hidden, "Hidden layer widths")->delimiter(',');
    add_train_flags(direct, dir_flags, "", "Training");
    add_shared(direct, dir_shared);
    direct->add_option("--seed", dir_seed, "Initialization and batching seed")->required();
    direct->add_option("--out", dir_out, "Checkpoint path")->required();
    add_common(direct, common);

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Parity tables and sliced metrics on a dataset");
    ModelFlags eval_models;
    std::string eval_ds, eval_out;
    add_model_flags(eval, eval_models);
    eval->add_option("--dataset", eval_ds, "Dataset CSV to score")->required();
    eval->add_option("--out-dir", eval_out, "Directory for parity.csv and metrics.csv")->required();
    add_common(eval, common);

    // predict
    auto* predict = app.add_subcommand("predict", "Density of one mixture state");
    ModelFlags pred_models;
    std::string pred_ids, pred_x;
    double pred_t = 0.0;
    add_model_flags(predict, pred_models);
    predict->add_option("--components", pred_ids, "Comma-separated compound ids")->required();
    predict->add_option("--fractions", pred_x, "Comma-separated mole fractions")->required();
    predict->add_option("--temp", pred_t, "Temperature in K")->required();
    add_common(predict, common);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Temperature or composition sweep of every model");
    ModelFlags sw_models;
    std::string sw_mode, sw_ids, sw_x, sw_out, sw_path = "vary", sw_weights;
    std::optional<double> sw_tmin, sw_tmax;
    double sw_temp = 0.0, sw_from = 0.0, sw_to = 1.0, sw_fixed_fraction = 0.0;
    std::size_t sw_n = 100, sw_vary = 0, sw_fixed = 0, sw_num = 1, sw_den = 2;
    sweep->add_option("--mode", sw_mode, "temperature or composition")
        ->required()
        ->check(CLI::IsMember({"temperature", "composition"}));
    add_model_flags(sweep, sw_models);
    sweep->add_option("--components", sw_ids, "Comma-separated compound ids")->required();
    sweep->add_option("--fractions", sw_x, "Mole fractions (temperature mode)");
    sweep->add_option("--t-min", sw_tmin, "Lower temperature (default: common pure-salt range)");
    sweep->add_option("--t-max", sw_tmax, "Upper temperature (default: common pure-salt range)");
    sweep->add_option("--temp", sw_temp, "Temperature in K (composition mode)");
    sweep->add_option("--path", sw_path, "vary (one fraction varies) or ratio (fixed fraction, varying ratio)")
        ->check(CLI::IsMember({"vary", "ratio"}));
    sweep->add_option("--vary-index", sw_vary, "Component index that varies (path vary)");
    sweep->add_option("--weights", sw_weights, "Ratio weights of the other components (path vary)");
    sweep->add_option("--fixed-index", sw_fixed, "Component held at a fixed fraction (path ratio)");
    sweep->add_option("--fixed-fraction", sw_fixed_fraction, "Its fraction (path ratio)");
    sweep->add_option("--ratio-indices", [&](const CLI::results_t& r) {
        auto parts = split(join(r, ","), ',');
        if (parts.size() != 2) return false;
        auto a = parse_int(parts[0]), b = parse_int(parts[1]);
        if (!a || !b || *a < 0 || *b < 0) return false;
        sw_num = static_cast<std::size_t>(*a);
        sw_den = static_cast<std::size_t>(*b);
        return true;
    }, "Numerator,denominator component indices (path ratio)");
    sweep->add_option("--from", sw_from, "Path parameter start");
    sweep->add_option("--to", sw_to, "Path parameter end");
    sweep->add_option("--n", sw_n, "Number of points")->check(CLI::PositiveNumber);
    sweep->add_option("--out", sw_out, "Sweep CSV")->required();
    add_common(sweep, common);

    std::vector<std::string> args(argv, argv + argc);
    try {
        args = expand_config(std::move(args));
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    std::vector<const char*> expanded;
    for (const auto& a : args) expanded.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(expanded.size()), expanded.data());
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return e.get_exit_code() == 0 ? 0 : 1;
    }

    const auto start = Clock::now();
    try {
        if (ingest->parsed()) {
            RunManifest m("ingest");
            m.collect_options(*ingest);
            auto table = parse_descriptors(desc_path);
            m.add_input(desc_path);
            auto db = load_db(ingest_db, m);
            Warnings w;
            auto sel = downselect_descriptors(table, ds_cfg, &w);
            for (const auto& [id, _] : db.components)
                if (!table.values.count(id)) throw FeaturizationError("no descriptors for compound '" + id + "'");
            auto [t_lo, t_hi] = db.temperature_span();
            Featurizer fz(table, sel, t_lo, t_hi);
            auto doc = fz.to_keyed_text();
            doc.set("provenance", m.digest());
            doc.save(ingest_out);
            m.add_output(ingest_out);
            m.add_result("descriptor_count", std::to_string(sel.size()));
            m.add_result("feature_dim", std::to_string(fz.feature_dim()));
            m.add_result("feature_digest", fz.digest());
            print_warnings(w, err);
            out << "selected " << sel.size() << " of " << table.raw_dim() << " descriptors; feature width "
                << fz.feature_dim() << "\n";
            write_manifest(m, common, ingest_out + ".manifest", seconds_since(start), err);
        } else if (build->parsed()) {
            RunManifest m("build-dataset");
            m.collect_options(*build);
            m.set_seed(build_seed);
            auto db = load_db(build_db, m);
            auto fz = load_featurizer(build_fz, m);
            Warnings w;
            Dataset ds;
            if (kind == "rk") {
                if (build_rk.empty() || build_systems.empty())
                    throw ConfigurationError("--kind rk needs --rk-coefficients and --systems");
                auto coeffs = parse_rk_coefficients(build_rk, &w);
                m.add_input(build_rk);
                auto systems = parse_systems(build_systems);
                m.add_input(build_systems);
                rk_opts.include_boundary = !no_boundary;
                ds = build_rk_dataset(db, coeffs, systems, fz, rk_opts, &w);
            } else {
                ds = build_experimental_dataset(db, fz, rk_opts.t_step);
            }
            auto parts = split(ds, test_fraction, build_seed);
            DatasetFileInfo info{kind, build_seed, m.digest()};
            const fs::path base(build_out);
            const fs::path train_path = with_suffix(base, ".train"), test_path = with_suffix(base, ".test");
            write_dataset(ds, base, info);
            write_dataset(parts.train, train_path, info);
            write_dataset(parts.test, test_path, info);
            for (const auto& p : {base, train_path, test_path}) {
                m.add_output(p);
                m.add_output(p.string() + ".meta");
            }
            m.add_result("rows", std::to_string(ds.rows()));
            m.add_result("groups", std::to_string(ds.group_ids().size()));
            m.add_result("train_rows", std::to_string(parts.train.rows()));
            m.add_result("test_rows", std::to_string(parts.test.rows()));
            print_warnings(w, err);
            out << ds.rows() << " rows (" << parts.train.rows() << " train, " << parts.test.rows() << " test)\n";
            write_manifest(m, common, build_out + ".manifest", seconds_since(start), err);
        } else if (pre->parsed()) {
            RunManifest m("pretrain");
            m.collect_options(*pre);
            m.set_seed(pre_seed);
            auto ds = load_dataset(pre_ds, m);
            TlConfig cfg;
            cfg.seed = pre_seed;
            cfg.pretrain_hidden_dims = pre_hidden;
            cfg.pretrain = to_config(pre_flags, pre_shared.batch, pre_shared.l2, pre_shared.val_fraction);
            cfg.pretrain.validate();
            TrainReport report;
            auto stage = pretrain_stage(ds, cfg, &report);
            stage.model.provenance = m.digest();
            save_checkpoint(stage.model, pre_out);
            m.add_output(pre_out);
            m.add_result("epochs_run", std::to_string(report.epochs_run));
            m.add_result("best_epoch", std::to_string(report.best_epoch));
            m.add_result("parameter_digest", stage.model.parameter_digest());
            out << "trained " << report.epochs_run << " epochs (best " << report.best_epoch << ")\n";
            write_manifest(m, common, pre_out + ".manifest", seconds_since(start), err);
        } else if (tl->parsed()) {
            RunManifest m("transfer");
            m.collect_options(*tl);
            m.set_seed(tl_seed);
            if (tl_pretrained.empty() == tl_rk_ds.empty())
                throw ConfigurationError("give exactly one of --pretrained or --rk-dataset");
            TlConfig cfg;
            cfg.seed = tl_seed;
            cfg.pretrain_hidden_dims = tl_hidden;
            cfg.retain_layers = tl_retain;
            cfg.new_hidden_dims = tl_new;
            cfg.pretrain = to_config(tl_pre_flags, tl_shared.batch, tl_shared.l2, tl_shared.val_fraction);
            cfg.frozen = to_config(tl_frozen_flags, tl_shared.batch, tl_shared.l2, tl_shared.val_fraction);
            cfg.finetune = to_config(tl_fine_flags, tl_shared.batch, tl_shared.l2, tl_shared.val_fraction);
            auto exp = load_dataset(tl_ds, m);
            TlResult result;
            if (!tl_pretrained.empty()) {
                auto pretrained = load_model(tl_pretrained, m);
                cfg.pretrain_hidden_dims.clear();
                for (std::size_t i = 0; i < pretrained.hidden_count(); ++i)
                    cfg.pretrain_hidden_dims.push_back(pretrained.layers[i].outputs());
                cfg.validate();
                result = run_transfer_stages(pretrained, exp, cfg);
            } else {
                cfg.validate();
                auto rk = load_dataset(tl_rk_ds, m);
                result = run_tl_pipeline(rk, exp, cfg);
            }
            const fs::path dir(tl_out);
            const char* names[4] = {"stage_a.ckpt", "stage_b.ckpt", "stage_c.ckpt", "stage_d.ckpt"};
            for (int i = 0; i < 4; ++i) {
                auto& model = result.stage_models[i];
                if (i > 0 || !tl_rk_ds.empty()) model.provenance = m.digest();
                save_checkpoint(model, dir / names[i]);
                m.add_output(dir / names[i]);
            }
            std::string report = "# manifest " + m.digest() + "\n" + result.report.to_text();
            write_file(dir / "tl_report.txt", report);
            m.add_output(dir / "tl_report.txt");
            m.add_result("frozen_unchanged", result.report.frozen_unchanged ? "true" : "false");
            m.add_result("final_digest", result.model.parameter_digest());
            out << "stages a-d written to " << dir.generic_string() << "\n";
            write_manifest(m, common, dir / "manifest.txt", seconds_since(start), err);
        } else if (direct->parsed()) {
            RunManifest m("train-direct");
            m.collect_options(*direct);
            m.set_seed(dir_seed);
            auto exp = load_dataset(dir_ds, m);
            auto res = train_direct(exp, dir_hidden,
                                    to_config(dir_flags, dir_shared.batch, dir_shared.l2, dir_shared.val_fraction),
                                    dir_seed);
            res.model.provenance = m.digest();
            save_checkpoint(res.model, dir_out);
            m.add_output(dir_out);
            m.add_result("epochs_run", std::to_string(res.report.epochs_run));
            m.add_result("best_epoch", std::to_string(res.report.best_epoch));
            m.add_result("parameter_digest", res.model.parameter_digest());
            out << "trained " << res.report.epochs_run << " epochs (best " << res.report.best_epoch << ")\n";
            write_manifest(m, common, dir_out + ".manifest", seconds_since(start), err);
        } else if (eval->parsed()) {
            RunManifest m("evaluate");
            m.collect_options(*eval);
            auto ds = load_dataset(eval_ds, m);
            auto models = build_models(eval_models, m);
            if (models.featurizer && models.featurizer->digest() != ds.feature_digest)
                throw IncompatibilityError("dataset " + eval_ds + " was built with a different featurization");
            for (const auto* e : models.pointers()) e->check_compatible(ds);
            std::vector<ParityTable> tables;
            for (const auto* e : models.pointers()) tables.push_back(parity_export(*e, ds, common.threads));
            auto metrics = compare_models(models.pointers(), ds, common.threads);
            const fs::path dir(eval_out);
            const std::string header = "# manifest " + m.digest() + "\n";
            write_file(dir / "parity.csv", header + parity_csv(tables));
            write_file(dir / "metrics.csv", header + metrics.to_csv());
            m.add_output(dir / "parity.csv");
            m.add_output(dir / "metrics.csv");
            for (const auto& t : tables)
                out << t.model << ": MAE " << format_double(t.metrics.mae) << " kg/m^3, MAPE "
                    << format_double(t.metrics.mape) << " %, r^2 " << format_double(t.metrics.r_squared) << "\n";
            write_manifest(m, common, dir / "manifest.txt", seconds_since(start), err);
        } else if (predict->parsed()) {
            RunManifest m("predict");
            m.collect_options(*predict);
            auto models = build_models(pred_models, m);
            auto ids = parse_ids(pred_ids);
            auto x = parse_fractions(pred_x, ids.size());
            out << "# manifest " << m.digest() << "\n";
            out << "model,rho_kg_m3\n";
            for (const auto* e : models.pointers()) {
                try {
                    out << e->name() << "," << format_double(e->predict(ids, x, pred_t)) << "\n";
                } catch (const MissingCoefficientError& ex) {
                    out << e->name() << ",nan\n";
                    err << "warning: " << e->name() << ": " << ex.what() << "\n";
                }
            }
            if (!common.manifest.empty()) write_manifest(m, common, common.manifest, seconds_since(start), err);
        } else if (sweep->parsed()) {
            RunManifest m("sweep");
            m.collect_options(*sweep);
            auto models = build_models(sw_models, m);
            auto ids = parse_ids(sw_ids);
            SweepResult result;
            if (sw_mode == "temperature") {
                if (sw_x.empty()) throw ConfigurationError("temperature sweeps need --fractions");
                auto x = parse_fractions(sw_x, ids.size());
                double lo = 0.0, hi = 0.0;
                if (!sw_tmin || !sw_tmax) {
                    if (!models.db) throw ConfigurationError("give --t-min/--t-max or the correlation database");
                    lo = 0.0;
                    hi = 1e300;
                    for (const auto& id : ids) {
                        const auto& c = models.db->component(id).pure_correlation;
                        lo = std::max(lo, c.t_min);
                        hi = std::min(hi, c.t_max);
                    }
                }
                if (sw_tmin) lo = *sw_tmin;
                if (sw_tmax) hi = *sw_tmax;
                if (!(lo < hi)) throw DomainError("empty temperature range for the sweep");
                result = sweep_temperature(models.pointers(), ids, x, lo, hi, sw_n);
            } else {
                if (!(sw_temp > 0.0)) throw ConfigurationError("composition sweeps need --temp");
                CompositionPath path;
                if (sw_path == "vary") {
                    std::vector<double> w(ids.size(), 1.0);
                    if (!sw_weights.empty()) w = parse_fractions(sw_weights, ids.size());
                    path = CompositionPath::vary_one(ids.size(), sw_vary, w);
                } else {
                    if (ids.size() != 3) throw ConfigurationError("ratio paths need exactly three components");
                    path = CompositionPath::fixed_ratio(sw_fixed, sw_fixed_fraction, sw_num, sw_den);
                }
                result = sweep_composition(models.pointers(), ids, path, sw_temp, sw_from, sw_to, sw_n);
            }
            write_file(sw_out, "# manifest " + m.digest() + "\n" + result.to_csv());
            m.add_output(sw_out);
            for (const auto& s : result.series) out << s.model << " roughness " << format_double(s.roughness) << "\n";
            write_manifest(m, common, sw_out + ".manifest", seconds_since(start), err);
        }
    } catch (const DivergenceError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"msdensity"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace msd
