#include "msdensity/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <regex>
#include <thread>

#include "msdensity/error.hpp"

namespace msd {

namespace {

struct RawMetrics {
    double mae = 0.0;
    double mape = 0.0;
    std::optional<double> r_squared;
    bool mape_defined = true;
};

RawMetrics raw_metrics(std::span<const double> p, std::span<const double> r) {
    RawMetrics m;
    const double n = static_cast<double>(r.size());
    double abs_sum = 0.0, pct_sum = 0.0, ref_sum = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double e = std::abs(p[i] - r[i]);
        abs_sum += e;
        if (r[i] == 0.0)
            m.mape_defined = false;
        else
            pct_sum += e / std::abs(r[i]);
        ref_sum += r[i];
    }
    m.mae = abs_sum / n;
    m.mape = 100.0 * pct_sum / n;
    const double mean = ref_sum / n;
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        ss_tot += (r[i] - mean) * (r[i] - mean);
        ss_res += (p[i] - r[i]) * (p[i] - r[i]);
    }
    if (ss_tot > 0.0) m.r_squared = 1.0 - ss_res / ss_tot;
    return m;
}

MixtureSpec make_mixture(const CorrelationDatabase& db, std::span<const std::string> ids, std::span<const double> x,
                         double t) {
    if (ids.size() != x.size()) throw ValidationError("component and fraction counts differ");
    MixtureSpec mix;
    mix.temperature = t;
    for (std::size_t i = 0; i < ids.size(); ++i) mix.components.push_back({db.component(ids[i]), x[i]});
    return mix;
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t * chunk; i < std::min(n, (t + 1) * chunk); ++i) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::string csv_number(double v) { return std::isnan(v) ? std::string("nan") : format_double(v); }

}  // namespace

MetricSet compute_metrics(std::span<const double> predictions, std::span<const double> references) {
    if (predictions.size() != references.size()) throw MetricError("prediction and reference counts differ");
    if (references.empty()) throw MetricError("metrics need at least one point");
    auto m = raw_metrics(predictions, references);
    if (!m.mape_defined) throw MetricError("MAPE undefined: a reference value is zero");
    if (!m.r_squared) throw MetricError("r^2 undefined: references are constant");
    return {m.mae, m.mape, *m.r_squared, references.size()};
}

double IdealEvaluator::predict(std::span<const std::string> ids, std::span<const double> x, double t) const {
    return ideal_density(make_mixture(db_, ids, x, t));
}

double RkEvaluator::predict(std::span<const std::string> ids, std::span<const double> x, double t) const {
    return mixture_density(make_mixture(db_, ids, x, t), coeffs_, {policy_, false}).rho_mix;
}

DnnEvaluator::DnnEvaluator(const MlpModel& model, const Featurizer& featurizer, bool symmetrize, std::string label)
    : model_(model), featurizer_(featurizer), symmetrize_(symmetrize), label_(std::move(label)) {
    require_compatible(model, featurizer.digest(), featurizer.feature_dim());
}

void DnnEvaluator::check_compatible(const Dataset& dataset) const {
    if (dataset.feature_digest != featurizer_.digest())
        throw IncompatibilityError("dataset was built with a different featurization than the model");
}

double DnnEvaluator::predict(std::span<const std::string> ids, std::span<const double> x, double t) const {
    if (ids.size() != x.size() || ids.empty()) throw ValidationError("component and fraction counts differ");
    std::vector<double> buffer(featurizer_.feature_dim());
    if (!symmetrize_) {
        featurizer_.featurize_into(ids, x, t, buffer);
        return predict_one(model_, buffer);
    }
    std::vector<std::size_t> order(ids.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return ids[l] < ids[r]; });
    std::vector<std::size_t> perm(ids.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::vector<std::string> pids(ids.size());
    std::vector<double> px(ids.size());
    double sum = 0.0;
    std::size_t count = 0;
    do {
        for (std::size_t i = 0; i < perm.size(); ++i) {
            pids[i] = ids[order[perm[i]]];
            px[i] = x[order[perm[i]]];
        }
        featurizer_.featurize_into(pids, px, t, buffer);
        sum += predict_one(model_, buffer);
        ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return sum / static_cast<double>(count);
}

std::vector<double> predict_rows(const DensityEvaluator& evaluator, const Dataset& dataset, std::size_t threads) {
    evaluator.check_compatible(dataset);
    std::vector<double> out(dataset.rows());
    parallel_for(dataset.rows(), threads, [&](std::size_t i) {
        const auto& m = dataset.meta[i];
        out[i] = evaluator.predict(m.component_ids, m.mole_fractions, m.temperature);
    });
    return out;
}

ParityTable parity_export(const DensityEvaluator& evaluator, const Dataset& dataset, std::size_t threads) {
    if (dataset.empty()) throw MetricError("parity export needs a non-empty dataset");
    ParityTable table;
    table.model = evaluator.name();
    const auto predicted = predict_rows(evaluator, dataset, threads);
    std::vector<double> refs(dataset.targets.data(), dataset.targets.data() + dataset.targets.size());
    for (std::size_t i = 0; i < dataset.rows(); ++i)
        table.rows.push_back({refs[i], predicted[i], dataset.meta[i].system_id, dataset.meta[i].origin});
    table.metrics = compute_metrics(predicted, refs);
    return table;
}

std::string parity_csv(const std::vector<ParityTable>& tables) {
    std::string out = "model,system_id,origin,reference_kg_m3,predicted_kg_m3\n";
    for (const auto& t : tables)
        for (const auto& r : t.rows)
            out += t.model + "," + r.system_id + "," + to_string(r.origin) + "," + format_double(r.reference) + "," +
                   format_double(r.predicted) + "\n";
    return out;
}

const SweepSeries& SweepResult::find(const std::string& model) const {
    for (const auto& s : series)
        if (s.model == model) return s;
    throw Error("sweep has no series for model '" + model + "'");
}

std::string SweepResult::to_csv() const {
    std::string out = axis_label + ",T_K";
    for (std::size_t i = 0; i < component_ids.size(); ++i) out += ",x_" + component_ids[i];
    for (const auto& s : series) out += "," + s.model;
    if (!reference.empty()) out += ",reference";
    out += "\n";
    for (std::size_t k = 0; k < axis.size(); ++k) {
        out += format_double(axis[k]) + "," + format_double(temperatures[k]);
        for (double x : compositions[k]) out += "," + format_double(x);
        for (const auto& s : series) out += "," + format_double(s.values[k]);
        if (!reference.empty()) out += "," + format_double(reference[k]);
        out += "\n";
    }
    out += "# roughness";
    for (const auto& s : series) out += " " + s.model + "=" + csv_number(s.roughness);
    out += "\n";
    return out;
}

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n < 2) throw ValidationError("a sweep needs at least 2 points");
    if (!(lo < hi)) throw ValidationError("sweep range must be increasing");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    out.back() = hi;
    return out;
}

void fill_series(SweepResult& result, const std::vector<const DensityEvaluator*>& evaluators,
                 const DensityEvaluator* reference) {
    const std::size_t n = result.axis.size();
    for (const auto* ev : evaluators) {
        SweepSeries s;
        s.model = ev->name();
        for (std::size_t k = 0; k < n; ++k)
            s.values.push_back(ev->predict(result.component_ids, result.compositions[k], result.temperatures[k]));
        s.roughness = n >= 3 ? roughness(s.values) : std::numeric_limits<double>::quiet_NaN();
        result.series.push_back(std::move(s));
    }
    if (reference)
        for (std::size_t k = 0; k < n; ++k)
            result.reference.push_back(
                reference->predict(result.component_ids, result.compositions[k], result.temperatures[k]));
}

}  // namespace

SweepResult sweep_temperature(const std::vector<const DensityEvaluator*>& evaluators,
                              const std::vector<std::string>& component_ids, const std::vector<double>& fractions,
                              double t_lo, double t_hi, std::size_t n, const DensityEvaluator* reference) {
    SweepResult r;
    r.axis_label = "axis_T_K";
    r.axis = linspace(t_lo, t_hi, n);
    r.component_ids = component_ids;
    r.temperatures = r.axis;
    r.compositions.assign(n, fractions);
    fill_series(r, evaluators, reference);
    return r;
}

CompositionPath CompositionPath::vary_one(std::size_t count, std::size_t index, std::vector<double> weights) {
    CompositionPath p;
    p.kind = Kind::VaryOne;
    p.component_count = count;
    p.vary_index = index;
    p.weights = std::move(weights);
    if (index >= count || p.weights.size() != count) throw DomainError("path indices do not match the mixture");
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        if (i == index) continue;
        if (!(p.weights[i] >= 0.0)) throw DomainError("ratio weights must be non-negative");
        total += p.weights[i];
    }
    if (!(total > 0.0)) throw DomainError("ratio weights of the fixed-ratio components sum to zero");
    return p;
}

CompositionPath CompositionPath::fixed_ratio(std::size_t fixed, double fraction, std::size_t numerator,
                                             std::size_t denominator) {
    CompositionPath p;
    p.kind = Kind::FixedRatio;
    p.component_count = 3;
    p.fixed_index = fixed;
    p.fixed_fraction = fraction;
    p.numerator_index = numerator;
    p.denominator_index = denominator;
    if (fixed > 2 || numerator > 2 || denominator > 2 || fixed == numerator || fixed == denominator ||
        numerator == denominator)
        throw DomainError("ratio path needs three distinct component indices");
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw DomainError("fixed fraction outside [0, 1]");
    return p;
}

std::vector<double> CompositionPath::fractions_at(double parameter) const {
    std::vector<double> x(component_count, 0.0);
    if (kind == Kind::VaryOne) {
        if (!(parameter >= 0.0 && parameter <= 1.0))
            throw DomainError("varied fraction " + format_double(parameter) + " leaves [0, 1]");
        double total = 0.0;
        for (std::size_t i = 0; i < component_count; ++i)
            if (i != vary_index) total += weights[i];
        for (std::size_t i = 0; i < component_count; ++i)
            x[i] = i == vary_index ? parameter : (1.0 - parameter) * weights[i] / total;
    } else {
        if (!(parameter >= 0.0) || !std::isfinite(parameter))
            throw DomainError("composition ratio " + format_double(parameter) + " must be finite and >= 0");
        const double rest = 1.0 - fixed_fraction;
        x[fixed_index] = fixed_fraction;
        x[numerator_index] = rest * parameter / (1.0 + parameter);
        x[denominator_index] = rest / (1.0 + parameter);
    }
    for (double v : x)
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("composition path leaves the simplex");
    return x;
}

std::string CompositionPath::axis_label() const {
    if (kind == Kind::VaryOne) return "x_slot" + std::to_string(vary_index + 1);
    return "ratio_slot" + std::to_string(numerator_index + 1) + "_over_slot" + std::to_string(denominator_index + 1);
}

SweepResult sweep_composition(const std::vector<const DensityEvaluator*>& evaluators,
                              const std::vector<std::string>& component_ids, const CompositionPath& path,
                              double temperature, double from, double to, std::size_t n,
                              const DensityEvaluator* reference) {
    if (component_ids.size() != path.component_count)
        throw DomainError("composition path expects " + std::to_string(path.component_count) + " components");
    SweepResult r;
    r.axis_label = path.axis_label();
    r.axis = linspace(from, to, n);
    r.component_ids = component_ids;
    for (double p : r.axis) r.compositions.push_back(path.fractions_at(p));
    r.temperatures.assign(n, temperature);
    fill_series(r, evaluators, reference);
    return r;
}

double roughness(std::span<const double> series) {
    if (series.size() < 3) throw ValidationError("roughness needs at least 3 points");
    double second = 0.0, level = 0.0;
    for (std::size_t i = 1; i + 1 < series.size(); ++i)
        second += std::abs((series[i + 1] - series[i]) - (series[i] - series[i - 1]));
    for (double v : series) level += std::abs(v);
    second /= static_cast<double>(series.size() - 2);
    level /= static_cast<double>(series.size());
    if (!(level > 0.0)) throw ValidationError("roughness undefined for an all-zero series");
    return second / level;
}

std::optional<double> MetricTable::find(const std::string& slice, const std::string& model,
                                        const std::string& metric) const {
    for (const auto& r : rows)
        if (r.slice == slice && r.model == model && r.metric == metric) return r.value;
    return std::nullopt;
}

std::string MetricTable::to_csv() const {
    std::string out = "slice,model,metric,value\n";
    for (const auto& r : rows) out += r.slice + "," + r.model + "," + r.metric + "," + csv_number(r.value) + "\n";
    return out;
}

std::string anion_class(const std::string& formula) {
    static const std::regex element("([A-Z][a-z]?)[0-9]*");
    std::string last;
    for (auto it = std::sregex_iterator(formula.begin(), formula.end(), element); it != std::sregex_iterator(); ++it)
        last = (*it)[1];
    if (last == "F") return "fluoride";
    if (last == "Cl") return "chloride";
    if (last == "Br") return "bromide";
    if (last == "I") return "iodide";
    return "other";
}

std::string mixture_anion_class(std::span<const std::string> component_ids) {
    std::string cls;
    for (const auto& id : component_ids) {
        auto c = anion_class(id);
        if (cls.empty())
            cls = c;
        else if (cls != c)
            return "mixed";
    }
    return cls;
}

MetricTable compare_models(const std::vector<const DensityEvaluator*>& evaluators, const Dataset& dataset,
                           std::size_t threads) {
    if (dataset.empty()) throw MetricError("model comparison needs a non-empty dataset");
    // slice name -> row indices, in a fixed order
    std::map<std::string, std::vector<std::size_t>> slices;
    for (std::size_t i = 0; i < dataset.rows(); ++i) {
        const auto& m = dataset.meta[i];
        slices["overall"].push_back(i);
        slices["origin=" + to_string(m.origin)].push_back(i);
        slices["components=" + std::to_string(m.component_ids.size())].push_back(i);
        slices["anion=" + mixture_anion_class(m.component_ids)].push_back(i);
    }
    MetricTable table;
    for (const auto* ev : evaluators) {
        const auto pred = predict_rows(*ev, dataset, threads);
        for (const auto& [slice, idx] : slices) {
            std::vector<double> p, r;
            for (auto i : idx) {
                p.push_back(pred[i]);
                r.push_back(dataset.targets[static_cast<Eigen::Index>(i)]);
            }
            const auto m = raw_metrics(p, r);
            table.rows.push_back({slice, ev->name(), "n_points", static_cast<double>(idx.size())});
            table.rows.push_back({slice, ev->name(), "mae", m.mae});
            if (m.mape_defined) table.rows.push_back({slice, ev->name(), "mape", m.mape});
            if (m.r_squared) table.rows.push_back({slice, ev->name(), "r_squared", *m.r_squared});
        }
    }
    return table;
}

}  // namespace msd
