#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msdensity/mixture_models.hpp"

namespace msd {

using Warnings = std::vector<std::string>;

// Density correlations plus per-compound properties.
struct CorrelationDatabase {
    std::vector<DensityCorrelation> correlations;
    std::map<std::string, ComponentProperties> components;

    const ComponentProperties& component(const std::string& id) const;  // throws DataError
    bool has_component(const std::string& id) const { return components.count(id) != 0; }

    // Correlations whose component set equals `ids` (any order).
    std::vector<const DensityCorrelation*> systems_with(std::vector<std::string> ids) const;

    // Global temperature span covered by all correlations.
    std::pair<double, double> temperature_span() const;

    void validate() const;
    bool operator==(const CorrelationDatabase&) const = default;
};

// correlations.csv:
//   system_id,components,mole_fractions,A_kg_m3,B_kg_m3K,T_min_K,T_max_K,source
// components.csv:
//   compound_id,molar_mass_g_mol
CorrelationDatabase parse_correlations(const std::filesystem::path& correlations_csv,
                                       const std::filesystem::path& components_csv);
CorrelationDatabase parse_correlations_text(const std::string& correlations_csv,
                                            const std::string& components_csv);
std::string correlations_to_csv(const CorrelationDatabase& db);
std::string components_to_csv(const CorrelationDatabase& db);

// rk_coefficients.csv: comp_a,comp_b,j,A_j,B_j
RkCoefficientSet parse_rk_coefficients(const std::filesystem::path& path, Warnings* warnings = nullptr);
RkCoefficientSet parse_rk_coefficients_text(const std::string& text, Warnings* warnings = nullptr);
std::string rk_coefficients_to_csv(const RkCoefficientSet& coeffs);

// Ternary (or other) systems to synthesize from the expansion.
// systems.csv: system_id,components
struct SystemSpec {
    std::string system_id;
    std::vector<std::string> component_ids;
};
std::vector<SystemSpec> parse_systems(const std::filesystem::path& path);
std::vector<SystemSpec> parse_systems_text(const std::string& text);
std::string systems_to_csv(const std::vector<SystemSpec>& systems);

// Raw per-compound descriptor vectors. File layout:
//   @names  name_1 name_2 ... name_D
//   LiF     v_1 v_2 ... v_D
// Tokens are separated by whitespace and/or commas; '#' starts a comment line.
struct DescriptorTable {
    std::vector<std::string> names;
    std::map<std::string, std::vector<double>> values;

    std::size_t raw_dim() const { return names.size(); }
    std::size_t compound_count() const { return values.size(); }
    bool operator==(const DescriptorTable&) const = default;
};

DescriptorTable parse_descriptors(const std::filesystem::path& path);
DescriptorTable parse_descriptors_text(const std::string& text);
std::string descriptors_to_text(const DescriptorTable& table);

struct DownselectConfig {
    double variance_floor = 0.0;
    double corr_threshold = 0.95;
    std::size_t target_count = 134;
};

// Selected descriptor columns plus the standardization statistics (population
// mean and standard deviation over the compound library) for each of them.
struct DescriptorSelection {
    std::vector<std::size_t> selected_indices;  // strictly increasing
    std::vector<std::string> names;
    std::vector<double> means;
    std::vector<double> stddevs;
    DownselectConfig config;
    std::string input_digest;
    bool shortfall = false;

    std::size_t size() const { return selected_indices.size(); }
    // Covers config, input digest, indices and statistics.
    std::string provenance_digest() const;
};

// Variance filter -> greedy correlation prune (ascending index) -> top-k by
// variance (ties to the lower index). Output is ascending.
DescriptorSelection downselect_descriptors(const DescriptorTable& table, const DownselectConfig& config = {},
                                           Warnings* warnings = nullptr);

std::string table_digest(const DescriptorTable& table);

}  // namespace msd
