#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace msd {

// Linear density correlation rho(T) = A - B*T for one salt composition,
// valid over [t_min, t_max]. Units: kg/m^3, kg/(m^3 K), K.
struct DensityCorrelation {
    std::string system_id;
    std::vector<std::string> component_ids;
    std::vector<double> mole_fractions;
    double coeff_a = 0.0;
    double coeff_b = 0.0;
    double t_min = 0.0;
    double t_max = 0.0;
    std::string source_tag;

    // Throws ValidationError when an invariant is violated.
    void validate() const;
    bool is_pure() const { return component_ids.size() == 1; }

    bool operator==(const DensityCorrelation&) const = default;
};

struct PureDensity {
    double value = 0.0;
    bool extrapolated = false;  // t outside [t_min, t_max]
};

PureDensity eval_pure_density(const DensityCorrelation& corr, double t);

struct ComponentProperties {
    std::string compound_id;
    double molar_mass = 0.0;  // kg/mol
    DensityCorrelation pure_correlation;

    void validate() const;
    bool operator==(const ComponentProperties&) const = default;
};

// One term L_j = A_j + B_j*T of the excess expansion.
struct RkTerm {
    double a = 0.0;  // kg/m^3
    double b = 0.0;  // kg/(m^3 K)
    bool operator==(const RkTerm&) const = default;
};

// Pairwise expansion coefficients. comp_a < comp_b lexicographically; the
// powers (x_a - x_b)^(j-1) are always taken in that order.
struct RkPairCoefficients {
    std::string comp_a;
    std::string comp_b;
    std::vector<RkTerm> terms;  // terms[j-1]

    bool operator==(const RkPairCoefficients&) const = default;
};

// Order-insensitive lookup of pair coefficients.
class RkCoefficientSet {
public:
    // Stores the record under its canonical key. Records stated in reverse
    // order are converted (odd powers change sign). Throws ConflictError
    // when a different record already exists for the pair.
    void add(RkPairCoefficients coeffs);
    const RkPairCoefficients* find(const std::string& a, const std::string& b) const;
    std::size_t size() const { return pairs_.size(); }
    bool empty() const { return pairs_.empty(); }

    std::vector<RkPairCoefficients> pairs() const;  // canonical order
    bool operator==(const RkCoefficientSet&) const = default;

private:
    std::map<std::pair<std::string, std::string>, RkPairCoefficients> pairs_;
};

// Rewrites coefficients stated for (b, a) into the canonical (a, b) form.
RkPairCoefficients canonicalize(RkPairCoefficients coeffs);

struct MixtureComponent {
    ComponentProperties properties;
    double fraction = 0.0;
};

struct MixtureSpec {
    std::vector<MixtureComponent> components;  // 1..4 entries
    double temperature = 0.0;                  // K

    void validate() const;
};

enum class MissingPairPolicy { Strict, ZeroExcess };

struct MixtureOptions {
    MissingPairPolicy missing_pairs = MissingPairPolicy::Strict;
    bool ideal_only = false;
};

struct DensityBreakdown {
    double rho_id = 0.0;
    double rho_ex = 0.0;
    double rho_mix = 0.0;
    bool extrapolated = false;  // any pure correlation evaluated outside its range
};

// Additive molar volumes: (sum x_i M_i) / (sum x_i M_i / rho_i(T)).
double ideal_density(const MixtureSpec& mix);

inline double rk_interaction(const RkTerm& term, double t) { return term.a + term.b * t; }

double rk_excess(const MixtureSpec& mix, const RkCoefficientSet& coeffs,
                 MissingPairPolicy policy = MissingPairPolicy::Strict);

DensityBreakdown mixture_density(const MixtureSpec& mix, const RkCoefficientSet& coeffs,
                                 const MixtureOptions& options = {});

}  // namespace msd
