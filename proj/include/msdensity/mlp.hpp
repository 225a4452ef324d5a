#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "msdensity/dataset.hpp"

namespace msd {

enum class Activation { Softplus, Identity };
std::string to_string(Activation activation);
Activation activation_from_string(std::string_view text);

struct DenseLayer {
    Eigen::MatrixXd weights;  // out x in
    Eigen::VectorXd bias;     // out
    Activation activation = Activation::Softplus;
    bool trainable = true;

    std::size_t inputs() const { return static_cast<std::size_t>(weights.cols()); }
    std::size_t outputs() const { return static_cast<std::size_t>(weights.rows()); }
    // Digest of the raw parameter bits; equal digests mean byte-equal tensors.
    std::string digest() const;
};

// Fully connected regression network. Hidden layers use softplus, the single
// output neuron is linear. Predictions are output_scale * net(x) + output_offset,
// so the network itself works on standardized targets while every public
// quantity (predictions, loss) is in kg/m^3.
struct MlpModel {
    std::size_t input_dim = 0;
    std::vector<DenseLayer> layers;
    double output_scale = 1.0;
    double output_offset = 0.0;
    std::uint64_t seed = 0;
    std::string seed_provenance;
    std::string feature_digest;
    std::string provenance;
    std::string history;

    std::size_t hidden_count() const { return layers.empty() ? 0 : layers.size() - 1; }
    std::size_t parameter_count() const;
    std::string parameter_digest() const;
    void set_trainable(bool trainable);
    void validate() const;  // throws ValidationError
};

// Glorot-uniform weights (bound sqrt(6 / (fan_in + fan_out))), zero biases.
MlpModel init_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden_dims, std::uint64_t seed);

// Sets the output affine map to the mean / standard deviation of `targets`.
void fit_output_scaling(MlpModel& model, const Eigen::VectorXd& targets);

// Row i of the result depends only on row i of the batch (rows are evaluated
// one at a time with identical arithmetic).
Eigen::VectorXd forward(const MlpModel& model, const FeatureMatrix& batch);
double predict_one(const MlpModel& model, std::span<const double> features);

// Mean squared error in kg/m^3 plus l2_lambda * sum of squared weights
// (biases are not penalized).
double loss(const MlpModel& model, const FeatureMatrix& batch, const Eigen::VectorXd& targets, double l2_lambda);

struct LayerGradient {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
};

struct LossGradient {
    double loss = 0.0;
    std::vector<LayerGradient> layers;  // empty entries for layers below the lowest trainable one
};

LossGradient loss_gradient(const MlpModel& model, const FeatureMatrix& batch, const Eigen::VectorXd& targets,
                           double l2_lambda, bool all_layers = true);

struct TrainConfig {
    double learning_rate = 1e-3;
    double l2_lambda = 1e-5;
    std::size_t batch_size = 256;
    std::size_t max_epochs = 500;
    std::size_t patience = 25;
    double validation_fraction = 0.2;
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigurationError
};

struct TrainReport {
    std::vector<double> train_loss;       // per epoch, data term only
    std::vector<double> validation_loss;  // per epoch
    std::size_t best_epoch = 0;           // 1-based
    std::size_t epochs_run = 0;
    std::string final_digest;
    double wall_seconds = 0.0;  // informational, not part of digest()

    std::string digest() const;
};

// Adam (beta1 0.9, beta2 0.999, eps 1e-8) on mini-batches. A validation subset
// of whole groups is drawn once from config.seed; training stops after
// `patience` epochs without improvement and restores the best parameters.
// Layers with trainable == false are never touched.
TrainReport train(MlpModel& model, const FeatureMatrix& features, const Eigen::VectorXd& targets,
                  const TrainConfig& config, std::span<const std::size_t> groups = {});
TrainReport train(MlpModel& model, const Dataset& dataset, const TrainConfig& config);

// Max over parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1),
// numeric from central differences of loss().
double gradient_check(const MlpModel& model, const FeatureMatrix& batch, const Eigen::VectorXd& targets,
                      double l2_lambda, double epsilon = 1e-5);

// Trains one model per candidate width (depth fixed) and returns the width with
// the lowest best-validation loss.
std::size_t select_width(const Dataset& dataset, const std::vector<std::size_t>& widths, std::size_t depth,
                         const TrainConfig& config);

void save_checkpoint(const MlpModel& model, const std::filesystem::path& path);
std::string checkpoint_text(const MlpModel& model);
MlpModel load_checkpoint(const std::filesystem::path& path);
MlpModel parse_checkpoint(std::string_view text, const std::string& source = "checkpoint");

// Throws IncompatibilityError if the model was trained on a different featurization.
void require_compatible(const MlpModel& model, const std::string& feature_digest, std::size_t feature_dim);

}  // namespace msd
