#include "msdensity/mlp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include "msdensity/digest.hpp"
#include "msdensity/error.hpp"
#include "msdensity/random.hpp"

namespace msd {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

template <typename Derived>
void activate_in_place(Eigen::MatrixBase<Derived>& z, Activation act) {
    if (act == Activation::Softplus) z = z.unaryExpr([](double v) { return softplus(v); });
}

// Intermediate values of a batched forward pass.
struct Trace {
    std::vector<Eigen::MatrixXd> pre;   // Z_l, batch x out
    std::vector<Eigen::MatrixXd> post;  // A_l, batch x out
};

Eigen::VectorXd forward_batch(const MlpModel& model, const Eigen::Ref<const FeatureMatrix>& batch, Trace* trace) {
    Eigen::MatrixXd a = batch;
    for (const auto& layer : model.layers) {
        Eigen::MatrixXd z = a * layer.weights.transpose();
        z.rowwise() += layer.bias.transpose();
        if (trace) trace->pre.push_back(z);
        activate_in_place(z, layer.activation);
        a = std::move(z);
        if (trace) trace->post.push_back(a);
    }
    return (a.col(0).array() * model.output_scale + model.output_offset).matrix();
}

double weight_penalty(const MlpModel& model) {
    double sum = 0.0;
    for (const auto& layer : model.layers) sum += layer.weights.squaredNorm();
    return sum;
}

std::size_t lowest_trainable(const MlpModel& model) {
    for (std::size_t l = 0; l < model.layers.size(); ++l)
        if (model.layers[l].trainable) return l;
    return model.layers.size();
}

}  // namespace

std::string to_string(Activation activation) {
    return activation == Activation::Softplus ? "softplus" : "identity";
}

Activation activation_from_string(std::string_view text) {
    if (text == "softplus") return Activation::Softplus;
    if (text == "identity") return Activation::Identity;
    throw ParseError("unknown activation '" + std::string(text) + "'");
}

std::string DenseLayer::digest() const {
    Sha256 h;
    h.update(static_cast<unsigned long long>(weights.rows())).update(static_cast<unsigned long long>(weights.cols()));
    h.update(std::span<const double>(weights.data(), static_cast<std::size_t>(weights.size())));
    h.update(std::span<const double>(bias.data(), static_cast<std::size_t>(bias.size())));
    h.update(to_string(activation));
    return h.finish();
}

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
}

std::string MlpModel::parameter_digest() const {
    Sha256 h;
    h.update(static_cast<unsigned long long>(input_dim)).update(output_scale).update(output_offset);
    for (const auto& l : layers) h.update(l.digest()).update(l.trainable ? "T" : "F");
    return h.finish();
}

void MlpModel::set_trainable(bool trainable) {
    for (auto& l : layers) l.trainable = trainable;
}

void MlpModel::validate() const {
    if (layers.empty()) throw ValidationError("model has no layers");
    std::size_t width = input_dim;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.inputs() != width) throw ValidationError("layer " + std::to_string(i) + " input width breaks the chain");
        if (static_cast<std::size_t>(l.bias.size()) != l.outputs())
            throw ValidationError("layer " + std::to_string(i) + " bias has the wrong size");
        if (!l.weights.allFinite() || !l.bias.allFinite())
            throw ValidationError("layer " + std::to_string(i) + " has non-finite parameters");
        width = l.outputs();
    }
    if (width != 1 || layers.back().activation != Activation::Identity)
        throw ValidationError("final layer must be a single linear neuron");
    if (!std::isfinite(output_scale) || !std::isfinite(output_offset) || output_scale == 0.0)
        throw ValidationError("output scaling must be finite and non-zero");
}

MlpModel init_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden_dims, std::uint64_t seed) {
    if (input_dim == 0 || hidden_dims.empty()) throw ConfigurationError("init_mlp needs input_dim > 0 and hidden layers");
    MlpModel model;
    model.input_dim = input_dim;
    model.seed = seed;
    model.seed_provenance = "init:" + std::to_string(seed);
    Rng rng(seed);
    std::size_t fan_in = input_dim;
    auto dims = hidden_dims;
    dims.push_back(1);
    for (std::size_t i = 0; i < dims.size(); ++i) {
        const std::size_t fan_out = dims[i];
        if (fan_out == 0) throw ConfigurationError("hidden layer width must be positive");
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        DenseLayer layer;
        layer.weights.resize(static_cast<Eigen::Index>(fan_out), static_cast<Eigen::Index>(fan_in));
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = uniform(rng, -bound, bound);
        layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fan_out));
        layer.activation = i + 1 == dims.size() ? Activation::Identity : Activation::Softplus;
        model.layers.push_back(std::move(layer));
        fan_in = fan_out;
    }
    return model;
}

void fit_output_scaling(MlpModel& model, const Eigen::VectorXd& targets) {
    if (targets.size() == 0) throw ValidationError("cannot fit output scaling without targets");
    const double mean = targets.mean();
    const double var = (targets.array() - mean).square().mean();
    model.output_offset = mean;
    model.output_scale = var > 0.0 ? std::sqrt(var) : 1.0;
}

double predict_one(const MlpModel& model, std::span<const double> features) {
    if (features.size() != model.input_dim)
        throw ShapeError("feature width " + std::to_string(features.size()) + " does not match model input " +
                         std::to_string(model.input_dim));
    Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(features.data(), static_cast<Eigen::Index>(features.size()));
    for (const auto& layer : model.layers) {
        Eigen::VectorXd z = layer.weights * a + layer.bias;
        activate_in_place(z, layer.activation);
        a = std::move(z);
    }
    return a[0] * model.output_scale + model.output_offset;
}

Eigen::VectorXd forward(const MlpModel& model, const FeatureMatrix& batch) {
    if (static_cast<std::size_t>(batch.cols()) != model.input_dim)
        throw ShapeError("feature width " + std::to_string(batch.cols()) + " does not match model input " +
                         std::to_string(model.input_dim));
    Eigen::VectorXd out(batch.rows());
    const auto width = static_cast<std::size_t>(batch.cols());
    for (Eigen::Index i = 0; i < batch.rows(); ++i)
        out[i] = predict_one(model, std::span<const double>(batch.row(i).data(), width));
    return out;
}

double loss(const MlpModel& model, const FeatureMatrix& batch, const Eigen::VectorXd& targets, double l2_lambda) {
    if (batch.rows() != targets.size()) throw ShapeError("batch and targets differ in length");
    if (batch.rows() == 0) throw ShapeError("empty batch");
    const Eigen::VectorXd pred = forward(model, batch);
    return (pred - targets).squaredNorm() / static_cast<double>(targets.size()) + l2_lambda * weight_penalty(model);
}

LossGradient loss_gradient(const MlpModel& model, const FeatureMatrix& batch, const Eigen::VectorXd& targets,
                           double l2_lambda, bool all_layers) {
    if (static_cast<std::size_t>(batch.cols()) != model.input_dim) throw ShapeError("feature width mismatch");
    if (batch.rows() != targets.size() || batch.rows() == 0) throw ShapeError("batch and targets differ in length");
    Trace trace;
    const Eigen::VectorXd pred = forward_batch(model, batch, &trace);
    const Eigen::VectorXd resid = pred - targets;
    const double n = static_cast<double>(targets.size());

    LossGradient out;
    out.loss = resid.squaredNorm() / n + l2_lambda * weight_penalty(model);
    out.layers.resize(model.layers.size());
    const std::size_t stop = all_layers ? 0 : lowest_trainable(model);

    Eigen::MatrixXd delta = resid * (2.0 * model.output_scale / n);  // dL/dZ of the output layer
    for (std::size_t l = model.layers.size(); l-- > stop;) {
        const auto& layer = model.layers[l];
        auto& g = out.layers[l];
        if (l == 0)
            g.weights = delta.transpose() * batch;
        else
            g.weights = delta.transpose() * trace.post[l - 1];
        g.weights += (2.0 * l2_lambda) * layer.weights;
        g.bias = delta.colwise().sum().transpose();
        if (l == stop) break;
        Eigen::MatrixXd back = delta * layer.weights;
        const auto& z = trace.pre[l - 1];
        if (model.layers[l - 1].activation == Activation::Softplus)
            back.array() *= z.unaryExpr([](double v) { return sigmoid(v); }).array();
        delta = std::move(back);
    }
    return out;
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigurationError("learning rate must be >= 0");
    if (!(l2_lambda >= 0.0)) throw ConfigurationError("l2 lambda must be >= 0");
    if (batch_size == 0 || max_epochs == 0 || patience == 0)
        throw ConfigurationError("batch size, epochs and patience must be positive");
    if (!(validation_fraction > 0.0 && validation_fraction <= 0.5))
        throw ConfigurationError("validation fraction must lie in (0, 0.5]");
}

std::string TrainReport::digest() const {
    Sha256 h;
    h.update(std::span<const double>(train_loss)).update(std::span<const double>(validation_loss));
    h.update(static_cast<unsigned long long>(best_epoch)).update(static_cast<unsigned long long>(epochs_run));
    h.update(final_digest);
    return h.finish();
}

TrainReport train(MlpModel& model, const FeatureMatrix& features, const Eigen::VectorXd& targets,
                  const TrainConfig& config, std::span<const std::size_t> groups) {
    const auto start = std::chrono::steady_clock::now();
    config.validate();
    model.validate();
    const auto rows = static_cast<std::size_t>(features.rows());
    if (rows == 0) throw ValidationError("cannot train on an empty dataset");
    if (static_cast<std::size_t>(targets.size()) != rows) throw ShapeError("features and targets differ in length");
    if (!groups.empty() && groups.size() != rows) throw ShapeError("group ids differ in length from features");
    if (static_cast<std::size_t>(features.cols()) != model.input_dim) throw ShapeError("feature width mismatch");

    Rng rng(config.seed);

    // Validation split over whole groups, drawn once.
    std::vector<std::size_t> group_of(rows);
    if (groups.empty())
        std::iota(group_of.begin(), group_of.end(), std::size_t{0});
    else
        std::copy(groups.begin(), groups.end(), group_of.begin());
    std::vector<std::size_t> unique_groups(group_of);
    std::sort(unique_groups.begin(), unique_groups.end());
    unique_groups.erase(std::unique(unique_groups.begin(), unique_groups.end()), unique_groups.end());
    shuffle(unique_groups, rng);
    std::size_t n_val = 0;
    if (unique_groups.size() >= 2)
        n_val = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(unique_groups.size()))),
            1, unique_groups.size() - 1);
    std::set<std::size_t> val_groups(unique_groups.begin(), unique_groups.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train_rows, val_rows;
    for (std::size_t i = 0; i < rows; ++i) (val_groups.count(group_of[i]) ? val_rows : train_rows).push_back(i);

    auto gather = [&](const std::vector<std::size_t>& idx, FeatureMatrix& x, Eigen::VectorXd& y) {
        x.resize(static_cast<Eigen::Index>(idx.size()), features.cols());
        y.resize(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            x.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(idx[i]));
            y[static_cast<Eigen::Index>(i)] = targets[static_cast<Eigen::Index>(idx[i])];
        }
    };
    FeatureMatrix x_val;
    Eigen::VectorXd y_val;
    gather(val_rows, x_val, y_val);
    FeatureMatrix x_train;
    Eigen::VectorXd y_train;
    gather(train_rows, x_train, y_train);

    auto data_loss = [&](const FeatureMatrix& x, const Eigen::VectorXd& y) {
        const Eigen::VectorXd pred = forward_batch(model, x, nullptr);
        return (pred - y).squaredNorm() / static_cast<double>(y.size());
    };

    struct Moments {
        Eigen::MatrixXd mw, vw;
        Eigen::VectorXd mb, vb;
    };
    std::vector<Moments> moments;
    for (const auto& l : model.layers)
        moments.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                           Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                           Eigen::VectorXd::Zero(l.bias.size()), Eigen::VectorXd::Zero(l.bias.size())});

    TrainReport report;
    std::vector<DenseLayer> best_layers = model.layers;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    std::size_t step = 0;
    std::vector<std::size_t> order(train_rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const bool any_trainable = lowest_trainable(model) < model.layers.size();

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        shuffle(order, rng);
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const std::size_t end = std::min(order.size(), begin + config.batch_size);
            FeatureMatrix xb(static_cast<Eigen::Index>(end - begin), features.cols());
            Eigen::VectorXd yb(static_cast<Eigen::Index>(end - begin));
            for (std::size_t i = begin; i < end; ++i) {
                xb.row(static_cast<Eigen::Index>(i - begin)) = x_train.row(static_cast<Eigen::Index>(order[i]));
                yb[static_cast<Eigen::Index>(i - begin)] = y_train[static_cast<Eigen::Index>(order[i])];
            }
            if (!any_trainable) {
                epoch_loss += data_loss(xb, yb) * static_cast<double>(end - begin);
                continue;
            }
            auto grad = loss_gradient(model, xb, yb, config.l2_lambda, false);
            if (!std::isfinite(grad.loss))
                throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                      std::to_string(begin / config.batch_size + 1));
            epoch_loss += (grad.loss - config.l2_lambda * weight_penalty(model)) * static_cast<double>(end - begin);
            ++step;
            const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                auto& layer = model.layers[l];
                if (!layer.trainable) continue;
                auto& m = moments[l];
                const auto& g = grad.layers[l];
                m.mw = kBeta1 * m.mw + (1.0 - kBeta1) * g.weights;
                m.vw = kBeta2 * m.vw + (1.0 - kBeta2) * g.weights.cwiseAbs2();
                m.mb = kBeta1 * m.mb + (1.0 - kBeta1) * g.bias;
                m.vb = kBeta2 * m.vb + (1.0 - kBeta2) * g.bias.cwiseAbs2();
                layer.weights.array() -=
                    config.learning_rate * (m.mw.array() / c1) / ((m.vw.array() / c2).sqrt() + kAdamEps);
                layer.bias.array() -=
                    config.learning_rate * (m.mb.array() / c1) / ((m.vb.array() / c2).sqrt() + kAdamEps);
            }
        }
        epoch_loss /= static_cast<double>(std::max<std::size_t>(order.size(), 1));
        const double val_loss = val_rows.empty() ? data_loss(x_train, y_train) : data_loss(x_val, y_val);
        if (!std::isfinite(epoch_loss) || !std::isfinite(val_loss))
            throw DivergenceError("non-finite loss at end of epoch " + std::to_string(epoch));
        report.train_loss.push_back(epoch_loss);
        report.validation_loss.push_back(val_loss);
        report.epochs_run = epoch;
        if (val_loss < best_val) {
            best_val = val_loss;
            report.best_epoch = epoch;
            best_layers = model.layers;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            break;
        }
    }
    model.layers = std::move(best_layers);
    report.final_digest = model.parameter_digest();
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!model.history.empty()) model.history += "; ";
    model.history += "epochs=" + std::to_string(report.epochs_run) + " best=" + std::to_string(report.best_epoch) +
                     " val_mse=" + format_double(best_val);
    return report;
}

TrainReport train(MlpModel& model, const Dataset& dataset, const TrainConfig& config) {
    require_compatible(model, dataset.feature_digest, dataset.feature_dim());
    std::vector<std::size_t> groups;
    groups.reserve(dataset.rows());
    for (const auto& m : dataset.meta) groups.push_back(m.group_id);
    return train(model, dataset.features, dataset.targets, config, groups);
}

double gradient_check(const MlpModel& model, const FeatureMatrix& batch, const Eigen::VectorXd& targets,
                      double l2_lambda, double epsilon) {
    const auto analytic = loss_gradient(model, batch, targets, l2_lambda, true);
    MlpModel probe = model;
    double worst = 0.0;
    auto compare = [&](double& param, double exact) {
        const double saved = param;
        param = saved + epsilon;
        const double up = loss(probe, batch, targets, l2_lambda);
        param = saved - epsilon;
        const double down = loss(probe, batch, targets, l2_lambda);
        param = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double denom = std::max({std::abs(exact), std::abs(numeric), 1.0});
        worst = std::max(worst, std::abs(exact - numeric) / denom);
    };
    for (std::size_t l = 0; l < probe.layers.size(); ++l) {
        auto& layer = probe.layers[l];
        const auto& g = analytic.layers[l];
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) compare(layer.weights(r, c), g.weights(r, c));
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) compare(layer.bias[r], g.bias[r]);
    }
    return worst;
}

std::size_t select_width(const Dataset& dataset, const std::vector<std::size_t>& widths, std::size_t depth,
                         const TrainConfig& config) {
    if (widths.empty() || depth == 0) throw ConfigurationError("width search needs candidates and depth > 0");
    std::size_t best_width = widths.front();
    double best = std::numeric_limits<double>::infinity();
    for (auto w : widths) {
        auto model = init_mlp(dataset.feature_dim(), std::vector<std::size_t>(depth, w), config.seed);
        model.feature_digest = dataset.feature_digest;
        fit_output_scaling(model, dataset.targets);
        auto report = train(model, dataset, config);
        const double v = report.validation_loss[report.best_epoch - 1];
        if (v < best) {
            best = v;
            best_width = w;
        }
    }
    return best_width;
}

void require_compatible(const MlpModel& model, const std::string& feature_digest, std::size_t feature_dim) {
    if (model.input_dim != feature_dim)
        throw IncompatibilityError("model expects " + std::to_string(model.input_dim) + " features, data has " +
                                   std::to_string(feature_dim));
    if (!model.feature_digest.empty() && model.feature_digest != feature_digest)
        throw IncompatibilityError("model and data were built with different featurizations");
}

// ---------------------------------------------------------------- checkpoints

std::string checkpoint_text(const MlpModel& model) {
    model.validate();
    KeyedText doc("msdensity-checkpoint", 1);
    doc.set_int("input_dim", static_cast<long long>(model.input_dim));
    doc.set_int("layer_count", static_cast<long long>(model.layers.size()));
    doc.set("output_scale", model.output_scale);
    doc.set("output_offset", model.output_offset);
    doc.set("seed", std::to_string(model.seed));
    doc.set("seed_provenance", model.seed_provenance.empty() ? std::string("none") : model.seed_provenance);
    doc.set("feature_digest", model.feature_digest.empty() ? std::string("none") : model.feature_digest);
    doc.set("provenance", model.provenance.empty() ? std::string("none") : model.provenance);
    doc.set("history", model.history.empty() ? std::string("none") : model.history);
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& l = model.layers[i];
        const std::string p = "layer." + std::to_string(i) + ".";
        doc.set_int(p + "outputs", static_cast<long long>(l.outputs()));
        doc.set_int(p + "inputs", static_cast<long long>(l.inputs()));
        doc.set(p + "activation", to_string(l.activation));
        doc.set_int(p + "trainable", l.trainable ? 1 : 0);
        // Row-major weights.
        std::vector<double> w;
        w.reserve(static_cast<std::size_t>(l.weights.size()));
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
        doc.set(p + "weights", join_doubles(w, ' '));
        doc.set(p + "bias", join_doubles(std::span<const double>(l.bias.data(), static_cast<std::size_t>(l.bias.size())), ' '));
    }
    doc.set("parameter_digest", model.parameter_digest());
    doc.set("end", std::string("checkpoint"));
    return doc.serialize();
}

void save_checkpoint(const MlpModel& model, const std::filesystem::path& path) {
    write_file(path, checkpoint_text(model));
}

MlpModel parse_checkpoint(std::string_view text, const std::string& source) {
    const auto doc = KeyedText::parse(text, source);
    if (doc.kind() != "msdensity-checkpoint" || doc.version() != 1)
        throw ParseError(source + ": not a version-1 checkpoint");
    if (!doc.contains("end")) throw ParseError(source + ": truncated checkpoint (no end marker)");
    auto optional_field = [&](const std::string& key) {
        const auto& v = doc.get(key);
        return v == "none" ? std::string() : v;
    };
    MlpModel model;
    model.input_dim = static_cast<std::size_t>(doc.get_int("input_dim"));
    model.output_scale = doc.get_double("output_scale");
    model.output_offset = doc.get_double("output_offset");
    model.seed = std::stoull(doc.get("seed"));
    model.seed_provenance = optional_field("seed_provenance");
    model.feature_digest = optional_field("feature_digest");
    model.provenance = optional_field("provenance");
    model.history = optional_field("history");
    const auto count = doc.get_int("layer_count");
    if (count < 1) throw ParseError(source + ": layer_count must be positive");
    for (long long i = 0; i < count; ++i) {
        const std::string p = "layer." + std::to_string(i) + ".";
        const auto outs = doc.get_int(p + "outputs");
        const auto ins = doc.get_int(p + "inputs");
        if (outs < 1 || ins < 1) throw ParseError(source + ": bad dimensions for " + p);
        DenseLayer l;
        l.activation = activation_from_string(doc.get(p + "activation"));
        l.trainable = doc.get_int(p + "trainable") != 0;
        const auto w = doc.get_doubles(p + "weights");
        const auto b = doc.get_doubles(p + "bias");
        if (w.size() != static_cast<std::size_t>(outs * ins) || b.size() != static_cast<std::size_t>(outs))
            throw ParseError(source + ": parameter count mismatch for " + p);
        l.weights.resize(outs, ins);
        for (Eigen::Index r = 0; r < outs; ++r)
            for (Eigen::Index c = 0; c < ins; ++c) l.weights(r, c) = w[static_cast<std::size_t>(r * ins + c)];
        l.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), outs);
        model.layers.push_back(std::move(l));
    }
    try {
        model.validate();
    } catch (const ValidationError& e) {
        throw ParseError(source + ": " + e.what());
    }
    if (model.parameter_digest() != doc.get("parameter_digest"))
        throw ParseError(source + ": parameter digest mismatch (corrupted checkpoint)");
    return model;
}

MlpModel load_checkpoint(const std::filesystem::path& path) {
    return parse_checkpoint(read_file(path), path.string());
}

}  // namespace msd
