#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "msdensity/mlp.hpp"

namespace msd {

struct TlConfig {
    std::vector<std::size_t> pretrain_hidden_dims{128, 128, 128, 128};
    std::size_t retain_layers = 2;
    std::vector<std::size_t> new_hidden_dims{128, 128, 128};
    TrainConfig pretrain{1e-3, 1e-5, 256, 500, 25, 0.2, 0};
    TrainConfig frozen{1e-3, 1e-5, 256, 500, 25, 0.2, 0};
    TrainConfig finetune{1e-6, 1e-5, 256, 50, 10, 0.2, 0};
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigurationError
};

// Record of the layer surgery: digests of the tensors copied from the
// pretrained model, in layer order.
struct SurgeryManifest {
    std::size_t retained_layers = 0;
    std::vector<std::string> retained_digests;
};

struct TlReport {
    TrainReport pretrain;  // empty when the pipeline started from a given pretrained model
    TrainReport frozen;
    TrainReport finetune;
    SurgeryManifest surgery;
    std::vector<std::string> frozen_digests_after_stage_c;
    bool retained_match_pretrained = false;  // stage-b copy is byte-equal
    bool frozen_unchanged = false;           // stage c left retained tensors byte-equal
    std::string stage_digests[4];            // parameter digests after a, b, c, d

    std::string to_text() const;
};

// Keeps the first `retain_layers` hidden layers (copied verbatim, frozen) and
// appends freshly initialized hidden layers plus a new output neuron.
MlpModel surgery(const MlpModel& pretrained, std::size_t retain_layers, const std::vector<std::size_t>& new_hidden_dims,
                 std::uint64_t seed, SurgeryManifest* manifest = nullptr);

// Stage artifacts; each stage function only accepts the previous stage's type.
struct PretrainedModel {
    MlpModel model;
};
struct GraftedModel {
    MlpModel model;
    SurgeryManifest manifest;
};
struct FrozenStageModel {
    MlpModel model;
    SurgeryManifest manifest;
};

PretrainedModel pretrain_stage(const Dataset& rk_dataset, const TlConfig& config, TrainReport* report = nullptr);
GraftedModel surgery_stage(const PretrainedModel& pretrained, const TlConfig& config);
FrozenStageModel frozen_stage(GraftedModel grafted, const Dataset& exp_dataset, const TlConfig& config,
                              TrainReport* report = nullptr);
MlpModel finetune_stage(FrozenStageModel stage_c, const Dataset& exp_dataset, const TlConfig& config,
                        TrainReport* report = nullptr);

struct TlResult {
    MlpModel model;
    TlReport report;
    MlpModel stage_models[4];  // a, b, c, d
};

// Full workflow: (a) pretrain on expansion-generated data, (b) surgery,
// (c) train with retained layers frozen, (d) unfreeze and fine-tune.
TlResult run_tl_pipeline(const Dataset& rk_dataset, const Dataset& exp_dataset, const TlConfig& config);

// Stages (b)-(d) starting from an existing stage-(a) model.
TlResult run_transfer_stages(const MlpModel& pretrained, const Dataset& exp_dataset, const TlConfig& config);

// Baseline without transfer: a fresh network with the post-surgery shape
// trained once on the experimental data.
struct DirectResult {
    MlpModel model;
    TrainReport report;
};
DirectResult train_direct(const Dataset& exp_dataset, const TlConfig& config);
DirectResult train_direct(const Dataset& exp_dataset, const std::vector<std::size_t>& hidden_dims,
                          const TrainConfig& train_config, std::uint64_t seed);

}  // namespace msd
