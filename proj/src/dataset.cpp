#include "msdensity/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "msdensity/digest.hpp"
#include "msdensity/error.hpp"
#include "msdensity/random.hpp"

namespace msd {

std::string to_string(Origin origin) {
    return origin == Origin::Experimental ? "experimental" : "rk-synthetic";
}

Origin origin_from_string(std::string_view text) {
    if (text == "experimental") return Origin::Experimental;
    if (text == "rk-synthetic") return Origin::RkSynthetic;
    throw ParseError("unknown origin '" + std::string(text) + "'");
}

void DataRecord::validate() const {
    if (component_ids.empty() || component_ids.size() > kMaxComponents)
        throw ValidationError("record needs 1 to 4 components");
    if (component_ids.size() != mole_fractions.size())
        throw ValidationError("record fraction count does not match component count");
    double sum = 0.0;
    for (double x : mole_fractions) {
        if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("record mole fraction outside [0, 1]");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("record mole fractions do not sum to 1");
    if (!std::isfinite(target) || !(target > 0.0))
        throw ValidationError("record target density must be finite and positive");
    if (!(temperature > 0.0)) throw ValidationError("record temperature must be positive");
}

// ---------------------------------------------------------------- Featurizer

Featurizer::Featurizer(const DescriptorTable& table, const DescriptorSelection& selection, double t_lo, double t_hi)
    : selection_(selection), t_lo_(t_lo), t_hi_(t_hi) {
    if (!(t_lo < t_hi)) throw ValidationError("temperature scaling range must be increasing");
    for (const auto& [id, raw] : table.values) {
        std::vector<double> block(selection.size());
        for (std::size_t k = 0; k < selection.size(); ++k) {
            const auto idx = selection.selected_indices[k];
            if (idx >= raw.size()) throw SchemaError("selected descriptor index out of range");
            block[k] = (raw[idx] - selection.means[k]) / selection.stddevs[k];
        }
        blocks_.emplace(id, std::move(block));
    }
    compute_digest();
}

void Featurizer::compute_digest() {
    Sha256 h;
    h.update("featurizer-v1\n").update(selection_.provenance_digest()).update(t_lo_).update(t_hi_);
    for (const auto& [id, block] : blocks_) h.update(id).update("\n").update(std::span<const double>(block));
    digest_ = h.finish();
}

void Featurizer::featurize_into(std::span<const std::string> component_ids, std::span<const double> fractions,
                                double temperature, std::span<double> out) const {
    const std::size_t d = descriptor_dim();
    if (out.size() != feature_dim()) throw ShapeError("feature buffer has the wrong width");
    if (component_ids.size() > kMaxComponents || component_ids.size() != fractions.size())
        throw FeaturizationError("record needs 1 to 4 components with matching fractions");
    std::fill(out.begin(), out.end(), 0.0);
    out[0] = scale_temperature(temperature);
    for (std::size_t slot = 0; slot < component_ids.size(); ++slot) {
        auto it = blocks_.find(component_ids[slot]);
        if (it == blocks_.end())
            throw FeaturizationError("no descriptors for compound '" + component_ids[slot] + "'");
        out[1 + slot] = fractions[slot];
        std::copy(it->second.begin(), it->second.end(), out.begin() + 1 + kMaxComponents + slot * d);
    }
}

std::vector<double> Featurizer::featurize(const DataRecord& record) const {
    std::vector<double> out(feature_dim());
    featurize_into(record.component_ids, record.mole_fractions, record.temperature, out);
    return out;
}

KeyedText Featurizer::to_keyed_text() const {
    KeyedText doc("msdensity-featurization", 1);
    doc.set("t_scale_min", t_lo_);
    doc.set("t_scale_max", t_hi_);
    doc.set("selection.variance_floor", selection_.config.variance_floor);
    doc.set("selection.corr_threshold", selection_.config.corr_threshold);
    doc.set_int("selection.target_count", static_cast<long long>(selection_.config.target_count));
    doc.set("selection.input_digest", selection_.input_digest);
    doc.set_int("selection.shortfall", selection_.shortfall ? 1 : 0);
    doc.set_int("selection.count", static_cast<long long>(selection_.size()));
    std::string idx;
    for (std::size_t i = 0; i < selection_.size(); ++i)
        idx += (i ? " " : "") + std::to_string(selection_.selected_indices[i]);
    doc.set("selection.indices", idx);
    doc.set("selection.names", join(selection_.names, " "));
    doc.set("selection.means", join_doubles(selection_.means, ' '));
    doc.set("selection.stddevs", join_doubles(selection_.stddevs, ' '));
    doc.set("selection.digest", selection_.provenance_digest());
    std::vector<std::string> ids;
    for (const auto& [id, _] : blocks_) ids.push_back(id);
    doc.set("compounds", join(ids, " "));
    for (const auto& [id, block] : blocks_) doc.set("block." + id, join_doubles(block, ' '));
    doc.set("digest", digest_);
    return doc;
}

Featurizer Featurizer::from_keyed_text(const KeyedText& doc) {
    if (doc.kind() != "msdensity-featurization" || doc.version() != 1)
        throw ParseError("not a version-1 featurization file");
    Featurizer f;
    f.t_lo_ = doc.get_double("t_scale_min");
    f.t_hi_ = doc.get_double("t_scale_max");
    auto& sel = f.selection_;
    sel.config.variance_floor = doc.get_double("selection.variance_floor");
    sel.config.corr_threshold = doc.get_double("selection.corr_threshold");
    sel.config.target_count = static_cast<std::size_t>(doc.get_int("selection.target_count"));
    sel.input_digest = doc.get("selection.input_digest");
    sel.shortfall = doc.get_int("selection.shortfall") != 0;
    const auto count = static_cast<std::size_t>(doc.get_int("selection.count"));
    for (const auto& tok : split_fields(doc.get("selection.indices"))) {
        auto v = parse_int(tok);
        if (!v || *v < 0) throw ParseError("bad selection index '" + tok + "'");
        sel.selected_indices.push_back(static_cast<std::size_t>(*v));
    }
    sel.names = split_fields(doc.get("selection.names"));
    sel.means = doc.get_doubles("selection.means");
    sel.stddevs = doc.get_doubles("selection.stddevs");
    if (sel.selected_indices.size() != count || sel.names.size() != count || sel.means.size() != count ||
        sel.stddevs.size() != count)
        throw ParseError("featurization selection lists disagree with selection.count");
    if (sel.provenance_digest() != doc.get("selection.digest"))
        throw ParseError("featurization selection digest mismatch");
    for (const auto& id : split_fields(doc.get("compounds"))) {
        auto block = doc.get_doubles("block." + id);
        if (block.size() != count) throw ParseError("descriptor block of '" + id + "' has the wrong width");
        f.blocks_.emplace(id, std::move(block));
    }
    f.compute_digest();
    if (f.digest_ != doc.get("digest")) throw ParseError("featurization digest mismatch (file corrupted?)");
    return f;
}

// ------------------------------------------------------------------ Dataset

std::vector<std::size_t> Dataset::group_ids() const {
    std::vector<std::size_t> ids;
    ids.reserve(meta.size());
    for (const auto& m : meta) ids.push_back(m.group_id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
    Dataset out;
    out.feature_digest = feature_digest;
    out.t_lo = t_lo;
    out.t_hi = t_hi;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    out.targets.resize(static_cast<Eigen::Index>(rows.size()));
    out.meta.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(rows[i]);
        out.features.row(static_cast<Eigen::Index>(i)) = features.row(r);
        out.targets[static_cast<Eigen::Index>(i)] = targets[r];
        out.meta.push_back(meta[rows[i]]);
    }
    return out;
}

void Dataset::validate() const {
    if (static_cast<std::size_t>(features.rows()) != meta.size() ||
        static_cast<std::size_t>(targets.size()) != meta.size())
        throw ValidationError("dataset rows, targets and metadata disagree in count");
    if (!features.allFinite() || !targets.allFinite()) throw ValidationError("dataset contains non-finite values");
}

void DatasetBuilder::add_group(const DataRecord& record) {
    record.validate();
    const std::size_t width = featurizer_.feature_dim();
    const auto perms = permute_augment(record);
    for (std::size_t p = 0; p < perms.size(); ++p) {
        const auto& r = perms[p];
        const std::size_t offset = features_.size();
        features_.resize(offset + width);
        featurizer_.featurize_into(r.component_ids, r.mole_fractions, r.temperature,
                                   std::span<double>(features_.data() + offset, width));
        targets_.push_back(r.target);
        meta_.push_back({r.system_id, next_group_, p, r.origin, r.component_ids, r.mole_fractions, r.temperature});
    }
    ++next_group_;
}

Dataset DatasetBuilder::finish() {
    Dataset ds;
    const auto width = static_cast<Eigen::Index>(featurizer_.feature_dim());
    const auto rows = static_cast<Eigen::Index>(meta_.size());
    ds.features = Eigen::Map<const FeatureMatrix>(features_.data(), rows, width);
    ds.targets = Eigen::Map<const Eigen::VectorXd>(targets_.data(), rows);
    ds.meta = std::move(meta_);
    ds.feature_digest = featurizer_.digest();
    ds.t_lo = featurizer_.t_lo();
    ds.t_hi = featurizer_.t_hi();
    features_.clear();
    targets_.clear();
    meta_.clear();
    next_group_ = 0;
    return ds;
}

// --------------------------------------------------------------- Operations

std::vector<double> sample_temperatures(double t_min, double t_max, double step) {
    if (!(t_min < t_max) || !(step > 0.0)) throw ValidationError("sample_temperatures needs t_min < t_max, step > 0");
    // Relative slack absorbs representation error in (t_max - t_min) / step.
    const auto count = static_cast<std::size_t>(std::floor((t_max - t_min) / step + 1e-9)) + 1;
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k) out[k] = t_min + static_cast<double>(k) * step;
    return out;
}

std::vector<std::vector<double>> composition_grid(std::size_t components, double step) {
    if (components < 2 || components > kMaxComponents) throw ValidationError("composition_grid needs 2 to 4 components");
    const double inv = 1.0 / step;
    const auto divisions = static_cast<int>(std::lround(inv));
    if (divisions < 1 || std::abs(inv - divisions) > 1e-9) throw ValidationError("1/step must be an integer");

    std::vector<std::vector<double>> out;
    std::vector<int> counts(components, 0);
    // Recursive enumeration, leading count descending.
    auto fill = [&](auto&& self, std::size_t slot, int remaining) -> void {
        if (slot + 1 == components) {
            counts[slot] = remaining;
            std::vector<double> x(components);
            for (std::size_t i = 0; i < components; ++i) x[i] = static_cast<double>(counts[i]) / divisions;
            out.push_back(std::move(x));
            return;
        }
        for (int k = remaining; k >= 0; --k) {
            counts[slot] = k;
            self(self, slot + 1, remaining - k);
        }
    };
    fill(fill, 0, divisions);
    return out;
}

std::vector<DataRecord> permute_augment(const DataRecord& record) {
    std::vector<std::size_t> order(record.component_ids.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<DataRecord> out;
    do {
        DataRecord r = record;
        for (std::size_t i = 0; i < order.size(); ++i) {
            r.component_ids[i] = record.component_ids[order[i]];
            r.mole_fractions[i] = record.mole_fractions[order[i]];
        }
        out.push_back(std::move(r));
    } while (std::next_permutation(order.begin(), order.end()));
    return out;
}

Dataset build_experimental_dataset(const CorrelationDatabase& db, const Featurizer& featurizer, double t_step) {
    std::vector<const DensityCorrelation*> order;
    for (const auto& c : db.correlations) order.push_back(&c);
    std::stable_sort(order.begin(), order.end(), [](const DensityCorrelation* l, const DensityCorrelation* r) {
        if (l->system_id != r->system_id) return l->system_id < r->system_id;
        if (l->component_ids != r->component_ids) return l->component_ids < r->component_ids;
        return l->mole_fractions < r->mole_fractions;
    });

    DatasetBuilder builder(featurizer);
    for (const auto* c : order) {
        for (double t : sample_temperatures(c->t_min, c->t_max, t_step)) {
            DataRecord r{c->system_id, c->component_ids, c->mole_fractions, t, eval_pure_density(*c, t).value,
                         Origin::Experimental};
            builder.add_group(r);
        }
    }
    auto ds = builder.finish();
    ds.feature_digest = featurizer.digest();
    return ds;
}

Dataset build_rk_dataset(const CorrelationDatabase& db, const RkCoefficientSet& coeffs,
                         const std::vector<SystemSpec>& systems, const Featurizer& featurizer,
                         const RkDatasetOptions& options, Warnings* warnings) {
    std::vector<const SystemSpec*> order;
    for (const auto& s : systems) order.push_back(&s);
    std::stable_sort(order.begin(), order.end(),
                     [](const SystemSpec* l, const SystemSpec* r) { return l->system_id < r->system_id; });

    DatasetBuilder builder(featurizer);
    for (const auto* sys : order) {
        const auto& ids = sys->component_ids;
        std::vector<const ComponentProperties*> props;
        for (const auto& id : ids) {
            if (!db.has_component(id))
                throw DataError("system '" + sys->system_id + "' references unknown compound '" + id + "'");
            props.push_back(&db.component(id));
        }
        for (std::size_t p = 0; p < ids.size(); ++p)
            for (std::size_t q = p + 1; q < ids.size(); ++q)
                if (!coeffs.find(ids[p], ids[q]))
                    throw MissingCoefficientError("system '" + sys->system_id + "' lacks coefficients for pair " +
                                                  ids[p] + "-" + ids[q]);

        double lo = 0.0, hi = 1e300;
        for (const auto* p : props) {
            lo = std::max(lo, p->pure_correlation.t_min);
            hi = std::min(hi, p->pure_correlation.t_max);
        }
        std::vector<double> temps;
        if (lo < hi)
            temps = sample_temperatures(lo, hi, options.t_step);
        else if (lo == hi)
            temps = {lo};
        if (temps.empty()) {
            if (warnings)
                warnings->push_back("system '" + sys->system_id + "': pure-salt temperature ranges do not overlap");
            continue;
        }

        for (const auto& x : composition_grid(ids.size(), options.composition_step)) {
            if (!options.include_boundary && std::any_of(x.begin(), x.end(), [](double v) { return v == 0.0; }))
                continue;
            for (double t : temps) {
                MixtureSpec mix;
                mix.temperature = t;
                for (std::size_t i = 0; i < ids.size(); ++i) mix.components.push_back({*props[i], x[i]});
                const double target = mixture_density(mix, coeffs).rho_mix;
                builder.add_group({sys->system_id, ids, x, t, target, Origin::RkSynthetic});
            }
        }
    }
    auto ds = builder.finish();
    ds.feature_digest = featurizer.digest();
    return ds;
}

SplitResult split(const Dataset& dataset, double test_fraction, std::uint64_t seed) {
    if (dataset.empty()) throw ValidationError("cannot split an empty dataset");
    if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw ValidationError("test fraction must lie in [0, 1)");
    auto groups = dataset.group_ids();
    Rng rng(seed);
    shuffle(groups, rng);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(groups.size())));
    std::set<std::size_t> test_groups(groups.begin(), groups.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < dataset.rows(); ++i)
        (test_groups.count(dataset.meta[i].group_id) ? test_rows : train_rows).push_back(i);
    return {dataset.subset(train_rows), dataset.subset(test_rows)};
}

// ---------------------------------------------------------------------- I/O

void write_dataset(const Dataset& dataset, const std::filesystem::path& path, const DatasetFileInfo& info) {
    dataset.validate();
    const std::size_t width = dataset.feature_dim();
    std::string csv;
    if (!info.provenance.empty()) csv += "# manifest " + info.provenance + "\n";
    csv += "system_id,group_id,perm_idx,origin,c1,c2,c3,c4,T_K,x1,x2,x3,x4";
    for (std::size_t f = 1; f <= width; ++f) csv += ",f" + std::to_string(f);
    csv += ",rho_kg_m3\n";
    for (std::size_t i = 0; i < dataset.rows(); ++i) {
        const auto& m = dataset.meta[i];
        csv += m.system_id + "," + std::to_string(m.group_id) + "," + std::to_string(m.perm_idx) + "," +
               to_string(m.origin);
        for (std::size_t s = 0; s < kMaxComponents; ++s) csv += "," + (s < m.component_ids.size() ? m.component_ids[s] : "");
        csv += "," + format_double(m.temperature);
        for (std::size_t s = 0; s < kMaxComponents; ++s)
            csv += "," + format_double(s < m.mole_fractions.size() ? m.mole_fractions[s] : 0.0);
        const auto row = static_cast<Eigen::Index>(i);
        for (std::size_t f = 0; f < width; ++f) {
            csv += ',';
            csv += format_double(dataset.features(row, static_cast<Eigen::Index>(f)));
        }
        csv += "," + format_double(dataset.targets[row]) + "\n";
    }
    write_file(path, csv);

    KeyedText meta("msdensity-dataset", 1);
    meta.set("kind", info.kind.empty() ? std::string("unspecified") : info.kind);
    meta.set_int("rows", static_cast<long long>(dataset.rows()));
    meta.set_int("groups", static_cast<long long>(dataset.group_ids().size()));
    meta.set_int("feature_dim", static_cast<long long>(width));
    meta.set("feature_digest", dataset.feature_digest);
    meta.set("t_scale_min", dataset.t_lo);
    meta.set("t_scale_max", dataset.t_hi);
    meta.set("seed", std::to_string(info.seed));
    meta.set("provenance", info.provenance.empty() ? std::string("none") : info.provenance);
    meta.set("csv_digest", sha256_hex(csv));
    meta.save(path.string() + ".meta");
}

Dataset read_dataset(const std::filesystem::path& path, DatasetFileInfo* info) {
    const auto text = read_file(path);
    const auto meta_doc = KeyedText::load(path.string() + ".meta");
    if (meta_doc.kind() != "msdensity-dataset" || meta_doc.version() != 1)
        throw ParseError(path.string() + ".meta: not a version-1 dataset sidecar");
    if (meta_doc.get("csv_digest") != sha256_hex(text))
        throw IncompatibilityError(path.string() + ": CSV does not match its .meta sidecar");

    auto table = parse_csv(text, path.string());
    const auto width = static_cast<std::size_t>(meta_doc.get_int("feature_dim"));
    const std::size_t fixed = 13;
    if (table.header.size() != fixed + width + 1) throw SchemaError(path.string() + ": unexpected column count");

    Dataset ds;
    ds.feature_digest = meta_doc.get("feature_digest");
    ds.t_lo = meta_doc.get_double("t_scale_min");
    ds.t_hi = meta_doc.get_double("t_scale_max");
    const auto rows = static_cast<Eigen::Index>(table.rows.size());
    ds.features.resize(rows, static_cast<Eigen::Index>(width));
    ds.targets.resize(rows);
    auto num = [&](const CsvRow& row, std::size_t col) {
        auto v = parse_double(row.fields[col]);
        if (!v) throw ParseError(path.string() + ": bad number '" + row.fields[col] + "'", row.line);
        return *v;
    };
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        RowMeta m;
        m.system_id = row.fields[0];
        auto g = parse_int(row.fields[1]);
        auto p = parse_int(row.fields[2]);
        if (!g || !p || *g < 0 || *p < 0) throw ParseError(path.string() + ": bad group/perm index", row.line);
        m.group_id = static_cast<std::size_t>(*g);
        m.perm_idx = static_cast<std::size_t>(*p);
        m.origin = origin_from_string(row.fields[3]);
        for (std::size_t s = 0; s < kMaxComponents; ++s)
            if (!row.fields[4 + s].empty()) {
                m.component_ids.push_back(row.fields[4 + s]);
                m.mole_fractions.push_back(num(row, 9 + s));
            }
        m.temperature = num(row, 8);
        for (std::size_t f = 0; f < width; ++f) ds.features(i, static_cast<Eigen::Index>(f)) = num(row, fixed + f);
        ds.targets[i] = num(row, fixed + width);
        ds.meta.push_back(std::move(m));
    }
    if (static_cast<long long>(ds.rows()) != meta_doc.get_int("rows"))
        throw ParseError(path.string() + ": row count disagrees with sidecar");
    ds.validate();
    if (info) {
        info->kind = meta_doc.get("kind");
        info->seed = std::stoull(meta_doc.get("seed"));
        info->provenance = meta_doc.get("provenance");
    }
    return ds;
}

}  // namespace msd
