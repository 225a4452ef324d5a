#include "msdensity/mixture_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "msdensity/error.hpp"

namespace msd {

namespace {

constexpr double kFractionTolerance = 1e-9;

void check_fractions(const std::vector<double>& fractions, const std::string& what) {
    double sum = 0.0;
    for (double x : fractions) {
        if (!std::isfinite(x) || x < 0.0 || x > 1.0)
            throw ValidationError(what + ": mole fraction outside [0, 1]");
        sum += x;
    }
    if (std::abs(sum - 1.0) > kFractionTolerance)
        throw ValidationError(what + ": mole fractions sum to " + std::to_string(sum) + ", not 1");
}

// Component indices sorted by compound id. Every sum below runs in this
// order, which makes the results exactly independent of input ordering.
std::vector<std::size_t> canonical_order(const MixtureSpec& mix) {
    std::vector<std::size_t> idx(mix.components.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t l, std::size_t r) {
        return mix.components[l].properties.compound_id < mix.components[r].properties.compound_id;
    });
    return idx;
}

}  // namespace

void DensityCorrelation::validate() const {
    const std::string what = "correlation '" + system_id + "'";
    if (component_ids.empty() || component_ids.size() > 4)
        throw ValidationError(what + ": needs 1 to 4 components");
    std::set<std::string> unique(component_ids.begin(), component_ids.end());
    if (unique.size() != component_ids.size()) throw ValidationError(what + ": duplicate component");
    if (mole_fractions.size() != component_ids.size())
        throw ValidationError(what + ": fraction count does not match component count");
    check_fractions(mole_fractions, what);
    if (!std::isfinite(coeff_a) || !std::isfinite(coeff_b))
        throw ValidationError(what + ": non-finite coefficient");
    if (!(t_min > 0.0) || !(t_min < t_max) || !std::isfinite(t_max))
        throw ValidationError(what + ": invalid temperature range");
}

PureDensity eval_pure_density(const DensityCorrelation& corr, double t) {
    return {corr.coeff_a - corr.coeff_b * t, t < corr.t_min || t > corr.t_max};
}

void ComponentProperties::validate() const {
    if (!(molar_mass > 0.0) || !std::isfinite(molar_mass))
        throw ValidationError("component '" + compound_id + "': molar mass must be positive");
    pure_correlation.validate();
}

RkPairCoefficients canonicalize(RkPairCoefficients coeffs) {
    if (coeffs.comp_a == coeffs.comp_b)
        throw ValidationError("pair coefficients need two distinct components: " + coeffs.comp_a);
    if (coeffs.terms.empty())
        throw ValidationError("pair " + coeffs.comp_a + "-" + coeffs.comp_b + " has no terms");
    if (coeffs.comp_b < coeffs.comp_a) {
        std::swap(coeffs.comp_a, coeffs.comp_b);
        // (x_b - x_a)^(j-1) = (-1)^(j-1) (x_a - x_b)^(j-1)
        for (std::size_t j = 1; j < coeffs.terms.size(); j += 2) {
            coeffs.terms[j].a = -coeffs.terms[j].a;
            coeffs.terms[j].b = -coeffs.terms[j].b;
        }
    }
    return coeffs;
}

void RkCoefficientSet::add(RkPairCoefficients coeffs) {
    coeffs = canonicalize(std::move(coeffs));
    auto key = std::make_pair(coeffs.comp_a, coeffs.comp_b);
    auto it = pairs_.find(key);
    if (it != pairs_.end()) {
        if (it->second == coeffs) return;
        throw ConflictError("conflicting coefficients for pair " + key.first + "-" + key.second);
    }
    pairs_.emplace(std::move(key), std::move(coeffs));
}

const RkPairCoefficients* RkCoefficientSet::find(const std::string& a, const std::string& b) const {
    auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    auto it = pairs_.find(key);
    return it == pairs_.end() ? nullptr : &it->second;
}

std::vector<RkPairCoefficients> RkCoefficientSet::pairs() const {
    std::vector<RkPairCoefficients> out;
    out.reserve(pairs_.size());
    for (const auto& [_, p] : pairs_) out.push_back(p);
    return out;
}

void MixtureSpec::validate() const {
    if (components.empty() || components.size() > 4)
        throw ValidationError("mixture needs 1 to 4 components");
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        throw ValidationError("mixture temperature must be positive");
    std::set<std::string> ids;
    std::vector<double> fractions;
    for (const auto& c : components) {
        if (!ids.insert(c.properties.compound_id).second)
            throw ValidationError("duplicate mixture component " + c.properties.compound_id);
        if (!(c.properties.molar_mass > 0.0))
            throw ValidationError("component '" + c.properties.compound_id + "': molar mass must be positive");
        fractions.push_back(c.fraction);
    }
    check_fractions(fractions, "mixture");
}

double ideal_density(const MixtureSpec& mix) {
    mix.validate();
    double mass = 0.0;
    double volume = 0.0;
    for (std::size_t i : canonical_order(mix)) {
        const auto& c = mix.components[i];
        double rho = eval_pure_density(c.properties.pure_correlation, mix.temperature).value;
        if (!(rho > 0.0))
            throw DegenerateCorrelationError("component '" + c.properties.compound_id +
                                             "' has non-positive density at T = " +
                                             std::to_string(mix.temperature) + " K");
        double xm = c.fraction * c.properties.molar_mass;
        mass += xm;
        volume += xm / rho;
    }
    return mass / volume;
}

double rk_excess(const MixtureSpec& mix, const RkCoefficientSet& coeffs, MissingPairPolicy policy) {
    mix.validate();
    const auto order = canonical_order(mix);
    double total = 0.0;
    for (std::size_t p = 0; p < order.size(); ++p) {
        for (std::size_t q = p + 1; q < order.size(); ++q) {
            const auto& ca = mix.components[order[p]];
            const auto& cb = mix.components[order[q]];
            const double xa = ca.fraction;
            const double xb = cb.fraction;
            if (xa * xb == 0.0) continue;
            const auto* pair = coeffs.find(ca.properties.compound_id, cb.properties.compound_id);
            if (!pair) {
                if (policy == MissingPairPolicy::ZeroExcess) continue;
                throw MissingCoefficientError("no interaction coefficients for pair " +
                                              ca.properties.compound_id + "-" + cb.properties.compound_id);
            }
            const double diff = xa - xb;
            double series = 0.0;
            double power = 1.0;
            for (const auto& term : pair->terms) {
                series += rk_interaction(term, mix.temperature) * power;
                power *= diff;
            }
            total += xa * xb * series;
        }
    }
    return total;
}

DensityBreakdown mixture_density(const MixtureSpec& mix, const RkCoefficientSet& coeffs,
                                 const MixtureOptions& options) {
    DensityBreakdown out;
    out.rho_id = ideal_density(mix);
    out.rho_ex = options.ideal_only ? 0.0 : rk_excess(mix, coeffs, options.missing_pairs);
    out.rho_mix = out.rho_id + out.rho_ex;
    for (const auto& c : mix.components)
        out.extrapolated |= eval_pure_density(c.properties.pure_correlation, mix.temperature).extrapolated;
    return out;
}

}  // namespace msd
