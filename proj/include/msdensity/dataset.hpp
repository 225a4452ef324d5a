#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msdensity/ingestion.hpp"
#include "msdensity/text.hpp"

namespace msd {

constexpr std::size_t kMaxComponents = 4;

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Origin { Experimental, RkSynthetic };
std::string to_string(Origin origin);
Origin origin_from_string(std::string_view text);

struct DataRecord {
    std::string system_id;
    std::vector<std::string> component_ids;
    std::vector<double> mole_fractions;
    double temperature = 0.0;  // K
    double target = 0.0;       // kg/m^3
    Origin origin = Origin::Experimental;

    void validate() const;
};

// Frozen featurization: selected, standardized descriptor blocks per compound
// and the affine temperature map. Feature layout (width 1 + 4 + 4d):
//   [T_scaled, x_1..x_4, block_1 .. block_4]
// Absent component slots have x = 0 and an all-zero block.
class Featurizer {
public:
    Featurizer() = default;
    Featurizer(const DescriptorTable& table, const DescriptorSelection& selection, double t_lo, double t_hi);

    std::size_t descriptor_dim() const { return selection_.size(); }
    std::size_t feature_dim() const { return 1 + kMaxComponents + kMaxComponents * descriptor_dim(); }
    double t_lo() const { return t_lo_; }
    double t_hi() const { return t_hi_; }
    double scale_temperature(double t) const { return (t - t_lo_) / (t_hi_ - t_lo_); }
    const DescriptorSelection& selection() const { return selection_; }
    bool has_compound(const std::string& id) const { return blocks_.count(id) != 0; }
    const std::string& digest() const { return digest_; }

    // Throws FeaturizationError on unknown compounds.
    void featurize_into(std::span<const std::string> component_ids, std::span<const double> fractions,
                        double temperature, std::span<double> out) const;
    std::vector<double> featurize(const DataRecord& record) const;

    KeyedText to_keyed_text() const;
    static Featurizer from_keyed_text(const KeyedText& doc);
    void save(const std::filesystem::path& path) const { to_keyed_text().save(path); }
    static Featurizer load(const std::filesystem::path& path) { return from_keyed_text(KeyedText::load(path)); }

private:
    void compute_digest();

    DescriptorSelection selection_;
    std::map<std::string, std::vector<double>> blocks_;
    double t_lo_ = 0.0;
    double t_hi_ = 1.0;
    std::string digest_;
};

// Metadata of one dataset row. Rows sharing group_id are permutation clones of
// one (system, composition, temperature) point.
struct RowMeta {
    std::string system_id;
    std::size_t group_id = 0;
    std::size_t perm_idx = 0;
    Origin origin = Origin::Experimental;
    std::vector<std::string> component_ids;
    std::vector<double> mole_fractions;
    double temperature = 0.0;
};

struct Dataset {
    FeatureMatrix features;
    Eigen::VectorXd targets;
    std::vector<RowMeta> meta;
    std::string feature_digest;
    double t_lo = 0.0;  // temperature scaling, copied from the featurizer
    double t_hi = 1.0;

    std::size_t rows() const { return meta.size(); }
    std::size_t feature_dim() const { return static_cast<std::size_t>(features.cols()); }
    bool empty() const { return meta.empty(); }
    std::vector<std::size_t> group_ids() const;  // sorted, unique
    Dataset subset(const std::vector<std::size_t>& rows) const;
    void validate() const;
};

// Accumulates rows in order; group ids are assigned by begin_group().
class DatasetBuilder {
public:
    explicit DatasetBuilder(const Featurizer& featurizer) : featurizer_(featurizer) {}
    void add_group(const DataRecord& record);  // record plus all its permutations
    Dataset finish();

private:
    const Featurizer& featurizer_;
    std::vector<double> features_;
    std::vector<double> targets_;
    std::vector<RowMeta> meta_;
    std::size_t next_group_ = 0;
};

// t_min, t_min + step, ... up to the largest value <= t_max.
std::vector<double> sample_temperatures(double t_min, double t_max, double step = 50.0);

// Simplex lattice with spacing `step`, boundary included, lexicographically
// descending in the leading fraction: (1, 0), (0.9, 0.1), ..., (0, 1).
std::vector<std::vector<double>> composition_grid(std::size_t components, double step = 0.1);

// One record per ordering of the real components (S! in total, the input
// ordering first). Returns (perm_idx, record) in lexicographic permutation order.
std::vector<DataRecord> permute_augment(const DataRecord& record);

Dataset build_experimental_dataset(const CorrelationDatabase& db, const Featurizer& featurizer,
                                   double t_step = 50.0);

struct RkDatasetOptions {
    double composition_step = 0.1;
    double t_step = 50.0;
    bool include_boundary = true;
};

Dataset build_rk_dataset(const CorrelationDatabase& db, const RkCoefficientSet& coeffs,
                         const std::vector<SystemSpec>& systems, const Featurizer& featurizer,
                         const RkDatasetOptions& options = {}, Warnings* warnings = nullptr);

struct SplitResult {
    Dataset train;
    Dataset test;
};

// Group-wise seeded split: permutation clones never straddle the two sides.
SplitResult split(const Dataset& dataset, double test_fraction, std::uint64_t seed);

// CSV interchange:
//   system_id,group_id,perm_idx,origin,c1..c4,T_K,x1..x4,f1..fN,rho_kg_m3
// plus a "<path>.meta" sidecar holding the scaling parameters and digests.
struct DatasetFileInfo {
    std::string kind;
    std::uint64_t seed = 0;
    std::string provenance;
};
void write_dataset(const Dataset& dataset, const std::filesystem::path& path, const DatasetFileInfo& info = {});
Dataset read_dataset(const std::filesystem::path& path, DatasetFileInfo* info = nullptr);

}  // namespace msd
