#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msdensity/dataset.hpp"
#include "msdensity/ingestion.hpp"
#include "msdensity/mlp.hpp"

namespace msd {

struct MetricSet {
    double mae = 0.0;        // kg/m^3
    double mape = 0.0;       // percent
    double r_squared = 0.0;
    std::size_t n_points = 0;
};

// Throws MetricError on empty/mismatched input, a zero reference (MAPE
// undefined) or constant references (r^2 undefined).
MetricSet compute_metrics(std::span<const double> predictions, std::span<const double> references);

// Anything that maps (components, fractions, T) to a density.
class DensityEvaluator {
public:
    virtual ~DensityEvaluator() = default;
    virtual std::string name() const = 0;
    virtual double predict(std::span<const std::string> component_ids, std::span<const double> fractions,
                           double temperature) const = 0;
    // Throws IncompatibilityError if the evaluator cannot consume `dataset`.
    virtual void check_compatible(const Dataset& dataset) const { (void)dataset; }
};

class IdealEvaluator : public DensityEvaluator {
public:
    explicit IdealEvaluator(const CorrelationDatabase& db) : db_(db) {}
    std::string name() const override { return "ideal"; }
    double predict(std::span<const std::string> ids, std::span<const double> x, double t) const override;

private:
    const CorrelationDatabase& db_;
};

// Pairwise expansion only (no ternary terms); labeled "rk-binary".
class RkEvaluator : public DensityEvaluator {
public:
    RkEvaluator(const CorrelationDatabase& db, const RkCoefficientSet& coeffs,
                MissingPairPolicy policy = MissingPairPolicy::Strict)
        : db_(db), coeffs_(coeffs), policy_(policy) {}
    std::string name() const override { return "rk-binary"; }
    double predict(std::span<const std::string> ids, std::span<const double> x, double t) const override;

private:
    const CorrelationDatabase& db_;
    const RkCoefficientSet& coeffs_;
    MissingPairPolicy policy_;
};

// Network evaluator. In symmetrized mode (default) the prediction is the mean
// over all S! orderings of the components, enumerated from the id-sorted
// ordering and summed in a fixed order, so the result is bitwise invariant
// under input permutation. Raw mode evaluates the given ordering only.
class DnnEvaluator : public DensityEvaluator {
public:
    DnnEvaluator(const MlpModel& model, const Featurizer& featurizer, bool symmetrize = true,
                 std::string label = "dnn");
    std::string name() const override { return label_; }
    double predict(std::span<const std::string> ids, std::span<const double> x, double t) const override;
    void check_compatible(const Dataset& dataset) const override;

private:
    const MlpModel& model_;
    const Featurizer& featurizer_;
    bool symmetrize_;
    std::string label_;
};

class FunctionEvaluator : public DensityEvaluator {
public:
    using Fn = std::function<double(std::span<const std::string>, std::span<const double>, double)>;
    FunctionEvaluator(std::string label, Fn fn) : label_(std::move(label)), fn_(std::move(fn)) {}
    std::string name() const override { return label_; }
    double predict(std::span<const std::string> ids, std::span<const double> x, double t) const override {
        return fn_(ids, x, t);
    }

private:
    std::string label_;
    Fn fn_;
};

// Predictions of `evaluator` for every dataset row (rows evaluated in
// parallel when threads > 1; results are identical either way).
std::vector<double> predict_rows(const DensityEvaluator& evaluator, const Dataset& dataset, std::size_t threads = 1);

struct ParityRow {
    double reference = 0.0;
    double predicted = 0.0;
    std::string system_id;
    Origin origin = Origin::Experimental;
};

struct ParityTable {
    std::string model;
    std::vector<ParityRow> rows;
    MetricSet metrics;
};

ParityTable parity_export(const DensityEvaluator& evaluator, const Dataset& dataset, std::size_t threads = 1);
std::string parity_csv(const std::vector<ParityTable>& tables);

struct SweepSeries {
    std::string model;
    std::vector<double> values;
    double roughness = 0.0;  // NaN for fewer than 3 points
};

struct SweepResult {
    std::string axis_label;
    std::vector<double> axis;
    std::vector<std::string> component_ids;
    std::vector<std::vector<double>> compositions;  // per axis point
    std::vector<double> temperatures;               // per axis point
    std::vector<SweepSeries> series;
    std::vector<double> reference;  // empty when no reference evaluator was given

    const SweepSeries& find(const std::string& model) const;
    std::string to_csv() const;
};

SweepResult sweep_temperature(const std::vector<const DensityEvaluator*>& evaluators,
                              const std::vector<std::string>& component_ids, const std::vector<double>& fractions,
                              double t_lo, double t_hi, std::size_t n = 100,
                              const DensityEvaluator* reference = nullptr);

// Composition path through a mixture. Two parametrizations:
//  - vary one component: x_k = v, the rest split (1 - v) in fixed ratio weights;
//  - fixed fraction c for one component, ratio r = x_p / x_q between two others:
//    x_p = (1 - c) r / (1 + r), x_q = (1 - c) / (1 + r).
struct CompositionPath {
    enum class Kind { VaryOne, FixedRatio };
    Kind kind = Kind::VaryOne;
    std::size_t component_count = 3;
    std::size_t vary_index = 0;
    std::vector<double> weights;  // VaryOne: weight per component (entry at vary_index ignored)
    std::size_t fixed_index = 0;
    double fixed_fraction = 0.0;
    std::size_t numerator_index = 1;
    std::size_t denominator_index = 2;

    static CompositionPath vary_one(std::size_t count, std::size_t index, std::vector<double> weights);
    static CompositionPath fixed_ratio(std::size_t fixed, double fraction, std::size_t numerator,
                                       std::size_t denominator);

    // Throws DomainError when the point leaves the simplex.
    std::vector<double> fractions_at(double parameter) const;
    std::string axis_label() const;
};

SweepResult sweep_composition(const std::vector<const DensityEvaluator*>& evaluators,
                              const std::vector<std::string>& component_ids, const CompositionPath& path,
                              double temperature, double from, double to, std::size_t n,
                              const DensityEvaluator* reference = nullptr);

// Mean absolute second difference divided by the mean absolute value.
double roughness(std::span<const double> series);

// Long-format metric table: slice, model, metric, value.
struct MetricRow {
    std::string slice;
    std::string model;
    std::string metric;
    double value = 0.0;
};

struct MetricTable {
    std::vector<MetricRow> rows;
    std::optional<double> find(const std::string& slice, const std::string& model, const std::string& metric) const;
    std::string to_csv() const;
};

// "fluoride", "chloride", "bromide", "iodide" or "other" from the formula's anion.
std::string anion_class(const std::string& formula);
// Common class of all components, or "mixed".
std::string mixture_anion_class(std::span<const std::string> component_ids);

// Metrics per evaluator over slices: overall, origin=..., components=S, anion=...
MetricTable compare_models(const std::vector<const DensityEvaluator*>& evaluators, const Dataset& dataset,
                           std::size_t threads = 1);

}  // namespace msd
