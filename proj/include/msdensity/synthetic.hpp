#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msdensity/evaluation.hpp"
#include "msdensity/ingestion.hpp"

namespace msd {

// Seeded stand-in for a licensed property database: six fluoride salts with
// linear pure-salt correlations, nine pairwise expansion sets (up to three
// terms), four pseudo-ternary systems and random descriptor vectors.
//
// The hidden "true" density of a mixture is
//   ideal + pairwise excess + x_a x_b x_c (C0 + C1 T)
// where the last (three-body) term is unknown to the pairwise model. Mixture
// correlations are least-squares linear fits of the truth over the system's
// temperature range, scaled by (1 + noise * N(0, 1)) per correlation.
struct SyntheticConfig {
    std::uint64_t seed = 1;
    std::size_t descriptor_count = 40;
    double noise = 0.003;
    std::size_t compositions_per_ternary = 10;
    std::vector<double> binary_compositions{0.25, 0.5, 0.75};
    bool sparse_system = true;            // last ternary only has data along one path
    std::vector<double> sparse_points{0.1, 0.3, 0.5};
    double ternary_strength_min = 1500.0;  // |C0| range, kg/m^3
    double ternary_strength_max = 2500.0;
};

struct TernaryTerm {
    double c0 = 0.0;
    double c1 = 0.0;
};

struct SparsePath {
    std::string system_id;
    std::vector<std::string> component_ids;
    CompositionPath path;
    std::vector<double> data_points;  // path parameters that carry data
};

struct SyntheticCorpus {
    CorrelationDatabase db;             // pure + mixture correlations
    RkCoefficientSet coeffs;            // pairwise truth
    std::vector<SystemSpec> ternaries;  // systems for expansion-generated data
    DescriptorTable descriptors;
    std::map<std::vector<std::string>, TernaryTerm> ternary_terms;  // sorted ids -> term
    std::optional<SparsePath> sparse;

    // Noise-free truth at (x, T).
    double truth(std::span<const std::string> ids, std::span<const double> x, double t) const;
    // Writes correlations.csv, components.csv, rk_coefficients.csv,
    // systems.csv and descriptors.txt into `dir`.
    void write(const std::filesystem::path& dir) const;
};

SyntheticCorpus make_synthetic_corpus(const SyntheticConfig& config = {});

}  // namespace msd
