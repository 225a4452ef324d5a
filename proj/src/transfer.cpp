#include "msdensity/transfer.hpp"

#include "msdensity/error.hpp"

namespace msd {

namespace {

// Distinct seeds per stage, all derived from the pipeline seed.
std::uint64_t stage_seed(std::uint64_t seed, std::uint64_t stage) { return seed * 0x9E3779B97F4A7C15ULL + stage; }

TrainConfig with_seed(TrainConfig config, std::uint64_t seed) {
    config.seed = seed;
    return config;
}

std::vector<std::string> layer_digests(const MlpModel& model, std::size_t count) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < count && i < model.layers.size(); ++i) out.push_back(model.layers[i].digest());
    return out;
}

void require_same_featurization(const Dataset& a, const Dataset& b) {
    if (a.feature_digest != b.feature_digest || a.feature_dim() != b.feature_dim())
        throw IncompatibilityError("pretraining and experimental datasets use different featurizations");
}

std::string report_lines(const std::string& prefix, const TrainReport& r) {
    std::string out;
    out += prefix + ".epochs_run = " + std::to_string(r.epochs_run) + "\n";
    out += prefix + ".best_epoch = " + std::to_string(r.best_epoch) + "\n";
    if (r.best_epoch > 0)
        out += prefix + ".best_validation_mse = " + format_double(r.validation_loss[r.best_epoch - 1]) + "\n";
    out += prefix + ".final_digest = " + (r.final_digest.empty() ? std::string("none") : r.final_digest) + "\n";
    out += prefix + ".report_digest = " + r.digest() + "\n";
    return out;
}

}  // namespace

void TlConfig::validate() const {
    if (pretrain_hidden_dims.empty()) throw ConfigurationError("pretraining network needs hidden layers");
    if (retain_layers < 1 || retain_layers >= pretrain_hidden_dims.size())
        throw ConfigurationError("retain_layers must be >= 1 and below the pretrained hidden-layer count");
    if (new_hidden_dims.empty()) throw ConfigurationError("surgery must add at least one new hidden layer");
    if (finetune.learning_rate > frozen.learning_rate)
        throw ConfigurationError("fine-tune learning rate must not exceed the frozen-stage rate");
    pretrain.validate();
    frozen.validate();
    finetune.validate();
}

MlpModel surgery(const MlpModel& pretrained, std::size_t retain_layers, const std::vector<std::size_t>& new_hidden_dims,
                 std::uint64_t seed, SurgeryManifest* manifest) {
    pretrained.validate();
    if (retain_layers < 1 || retain_layers + 1 > pretrained.hidden_count())
        throw ConfigurationError("surgery needs more than " + std::to_string(retain_layers) +
                                 " hidden layers in the pretrained model (has " +
                                 std::to_string(pretrained.hidden_count()) + ")");
    if (new_hidden_dims.empty()) throw ConfigurationError("surgery must add at least one new hidden layer");

    const std::size_t retained_width = pretrained.layers[retain_layers - 1].outputs();
    auto fresh = init_mlp(retained_width, new_hidden_dims, seed);
    if (fresh.layers.front().inputs() != retained_width)
        throw ConfigurationError("first new layer does not accept the retained output width");

    MlpModel out;
    out.input_dim = pretrained.input_dim;
    out.output_scale = pretrained.output_scale;
    out.output_offset = pretrained.output_offset;
    out.seed = seed;
    out.seed_provenance = pretrained.seed_provenance + " surgery:" + std::to_string(seed);
    out.feature_digest = pretrained.feature_digest;
    out.history = pretrained.history;
    for (std::size_t i = 0; i < retain_layers; ++i) {
        out.layers.push_back(pretrained.layers[i]);
        out.layers.back().trainable = false;
    }
    for (auto& l : fresh.layers) out.layers.push_back(std::move(l));
    out.validate();
    if (manifest) *manifest = {retain_layers, layer_digests(out, retain_layers)};
    return out;
}

PretrainedModel pretrain_stage(const Dataset& rk_dataset, const TlConfig& config, TrainReport* report) {
    if (config.pretrain_hidden_dims.empty()) throw ConfigurationError("pretraining network needs hidden layers");
    config.pretrain.validate();
    if (rk_dataset.empty()) throw ValidationError("pretraining dataset is empty");
    auto model = init_mlp(rk_dataset.feature_dim(), config.pretrain_hidden_dims, stage_seed(config.seed, 1));
    model.feature_digest = rk_dataset.feature_digest;
    fit_output_scaling(model, rk_dataset.targets);
    auto r = train(model, rk_dataset, with_seed(config.pretrain, stage_seed(config.seed, 2)));
    if (report) *report = r;
    return {std::move(model)};
}

GraftedModel surgery_stage(const PretrainedModel& pretrained, const TlConfig& config) {
    GraftedModel out;
    out.model = surgery(pretrained.model, config.retain_layers, config.new_hidden_dims, stage_seed(config.seed, 3),
                        &out.manifest);
    return out;
}

FrozenStageModel frozen_stage(GraftedModel grafted, const Dataset& exp_dataset, const TlConfig& config,
                              TrainReport* report) {
    if (exp_dataset.empty()) throw ValidationError("experimental dataset is empty");
    auto r = train(grafted.model, exp_dataset, with_seed(config.frozen, stage_seed(config.seed, 4)));
    if (report) *report = r;
    if (layer_digests(grafted.model, grafted.manifest.retained_layers) != grafted.manifest.retained_digests)
        throw Error("frozen layers changed during stage c");
    return {std::move(grafted.model), std::move(grafted.manifest)};
}

MlpModel finetune_stage(FrozenStageModel stage_c, const Dataset& exp_dataset, const TlConfig& config,
                        TrainReport* report) {
    auto model = std::move(stage_c.model);
    model.set_trainable(true);
    auto r = train(model, exp_dataset, with_seed(config.finetune, stage_seed(config.seed, 5)));
    if (report) *report = r;
    return model;
}

namespace {

TlResult run_from_pretrained(PretrainedModel pretrained, const Dataset& exp_dataset, const TlConfig& config,
                             TrainReport pretrain_report) {
    auto tag = [](const char* stage, DivergenceError& e) {
        return DivergenceError(std::string("stage ") + stage + ": " + e.what());
    };
    TlResult result;
    result.report.pretrain = std::move(pretrain_report);
    result.stage_models[0] = pretrained.model;
    result.report.stage_digests[0] = pretrained.model.parameter_digest();

    auto grafted = surgery_stage(pretrained, config);
    result.report.surgery = grafted.manifest;
    result.report.retained_match_pretrained =
        layer_digests(pretrained.model, config.retain_layers) == grafted.manifest.retained_digests;
    result.stage_models[1] = grafted.model;
    result.report.stage_digests[1] = grafted.model.parameter_digest();

    FrozenStageModel stage_c;
    try {
        stage_c = frozen_stage(std::move(grafted), exp_dataset, config, &result.report.frozen);
    } catch (DivergenceError& e) {
        throw tag("c", e);
    }
    result.report.frozen_digests_after_stage_c = layer_digests(stage_c.model, config.retain_layers);
    result.report.frozen_unchanged = result.report.frozen_digests_after_stage_c == result.report.surgery.retained_digests;
    result.stage_models[2] = stage_c.model;
    result.report.stage_digests[2] = stage_c.model.parameter_digest();

    try {
        result.model = finetune_stage(std::move(stage_c), exp_dataset, config, &result.report.finetune);
    } catch (DivergenceError& e) {
        throw tag("d", e);
    }
    result.stage_models[3] = result.model;
    result.report.stage_digests[3] = result.model.parameter_digest();
    return result;
}

}  // namespace

TlResult run_tl_pipeline(const Dataset& rk_dataset, const Dataset& exp_dataset, const TlConfig& config) {
    config.validate();
    if (exp_dataset.empty()) throw ValidationError("experimental dataset is empty");
    require_same_featurization(rk_dataset, exp_dataset);
    TrainReport pre;
    PretrainedModel pretrained;
    try {
        pretrained = pretrain_stage(rk_dataset, config, &pre);
    } catch (DivergenceError& e) {
        throw DivergenceError(std::string("stage a: ") + e.what());
    }
    return run_from_pretrained(std::move(pretrained), exp_dataset, config, std::move(pre));
}

TlResult run_transfer_stages(const MlpModel& pretrained, const Dataset& exp_dataset, const TlConfig& config) {
    config.validate();
    require_compatible(pretrained, exp_dataset.feature_digest, exp_dataset.feature_dim());
    return run_from_pretrained({pretrained}, exp_dataset, config, {});
}

DirectResult train_direct(const Dataset& exp_dataset, const TlConfig& config) {
    config.validate();
    std::vector<std::size_t> dims(config.pretrain_hidden_dims.begin(),
                                  config.pretrain_hidden_dims.begin() + static_cast<std::ptrdiff_t>(config.retain_layers));
    dims.insert(dims.end(), config.new_hidden_dims.begin(), config.new_hidden_dims.end());
    return train_direct(exp_dataset, dims, config.frozen, config.seed);
}

DirectResult train_direct(const Dataset& exp_dataset, const std::vector<std::size_t>& hidden_dims,
                          const TrainConfig& train_config, std::uint64_t seed) {
    train_config.validate();
    if (hidden_dims.empty()) throw ConfigurationError("direct training needs hidden layers");
    if (exp_dataset.empty()) throw ValidationError("experimental dataset is empty");
    DirectResult out;
    out.model = init_mlp(exp_dataset.feature_dim(), hidden_dims, stage_seed(seed, 6));
    out.model.feature_digest = exp_dataset.feature_digest;
    fit_output_scaling(out.model, exp_dataset.targets);
    out.report = train(out.model, exp_dataset, with_seed(train_config, stage_seed(seed, 7)));
    return out;
}

std::string TlReport::to_text() const {
    std::string out = "msdensity-tl-report 1\n";
    out += report_lines("stage_a", pretrain);
    out += "surgery.retained_layers = " + std::to_string(surgery.retained_layers) + "\n";
    for (std::size_t i = 0; i < surgery.retained_digests.size(); ++i)
        out += "surgery.retained." + std::to_string(i) + " = " + surgery.retained_digests[i] + "\n";
    out += report_lines("stage_c", frozen);
    for (std::size_t i = 0; i < frozen_digests_after_stage_c.size(); ++i)
        out += "stage_c.frozen." + std::to_string(i) + " = " + frozen_digests_after_stage_c[i] + "\n";
    out += report_lines("stage_d", finetune);
    const char* names[4] = {"a", "b", "c", "d"};
    for (int i = 0; i < 4; ++i) out += std::string("model_digest.") + names[i] + " = " + stage_digests[i] + "\n";
    out += std::string("attest.retained_match_pretrained = ") + (retained_match_pretrained ? "1" : "0") + "\n";
    out += std::string("attest.frozen_unchanged = ") + (frozen_unchanged ? "1" : "0") + "\n";
    return out;
}

}  // namespace msd
