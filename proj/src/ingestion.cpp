#include "msdensity/ingestion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "msdensity/digest.hpp"
#include "msdensity/error.hpp"
#include "msdensity/text.hpp"

namespace msd {

namespace {

double number_field(const CsvRow& row, std::size_t col, const std::string& name) {
    auto v = parse_double(row.fields[col]);
    if (!v || !std::isfinite(*v))
        throw ParseError("unparseable number in column '" + name + "': '" + row.fields[col] + "'", row.line);
    return *v;
}

using CompositionKey = std::vector<std::pair<std::string, double>>;

CompositionKey composition_key(const DensityCorrelation& c) {
    CompositionKey key;
    for (std::size_t i = 0; i < c.component_ids.size(); ++i)
        key.emplace_back(c.component_ids[i], c.mole_fractions[i]);
    std::sort(key.begin(), key.end());
    return key;
}

bool same_composition(const CompositionKey& l, const CompositionKey& r) {
    if (l.size() != r.size()) return false;
    for (std::size_t i = 0; i < l.size(); ++i)
        if (l[i].first != r[i].first || std::abs(l[i].second - r[i].second) > 1e-9) return false;
    return true;
}

}  // namespace

const ComponentProperties& CorrelationDatabase::component(const std::string& id) const {
    auto it = components.find(id);
    if (it == components.end()) throw DataError("unknown compound '" + id + "'");
    return it->second;
}

std::vector<const DensityCorrelation*> CorrelationDatabase::systems_with(std::vector<std::string> ids) const {
    std::sort(ids.begin(), ids.end());
    std::vector<const DensityCorrelation*> out;
    for (const auto& c : correlations) {
        auto cids = c.component_ids;
        std::sort(cids.begin(), cids.end());
        if (cids == ids) out.push_back(&c);
    }
    return out;
}

std::pair<double, double> CorrelationDatabase::temperature_span() const {
    if (correlations.empty()) throw DataError("correlation database is empty");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& c : correlations) {
        lo = std::min(lo, c.t_min);
        hi = std::max(hi, c.t_max);
    }
    return {lo, hi};
}

void CorrelationDatabase::validate() const {
    for (const auto& [id, props] : components) {
        if (props.compound_id != id) throw ValidationError("component key mismatch for " + id);
        props.validate();
    }
    for (const auto& c : correlations) {
        c.validate();
        for (const auto& id : c.component_ids)
            if (!has_component(id))
                throw ValidationError("correlation '" + c.system_id + "' references unknown compound '" + id + "'");
    }
}

CorrelationDatabase parse_correlations_text(const std::string& correlations_csv,
                                            const std::string& components_csv) {
    CorrelationDatabase db;

    auto comp_table = parse_csv(components_csv, "components.csv");
    const auto c_id = comp_table.column("compound_id");
    const auto c_mm = comp_table.column("molar_mass_g_mol");
    std::map<std::string, double> molar_masses;
    for (const auto& row : comp_table.rows) {
        const auto& id = row.fields[c_id];
        if (id.empty()) throw ParseError("empty compound_id", row.line);
        double mm = number_field(row, c_mm, "molar_mass_g_mol");
        if (!(mm > 0.0)) throw ParseError("molar mass of '" + id + "' must be positive", row.line);
        if (!molar_masses.emplace(id, mm / 1000.0).second)
            throw DuplicateError("duplicate compound '" + id + "'", row.line);
    }

    auto table = parse_csv(correlations_csv, "correlations.csv");
    const auto col_sys = table.column("system_id");
    const auto col_comp = table.column("components");
    const auto col_frac = table.column("mole_fractions");
    const auto col_a = table.column("A_kg_m3");
    const auto col_b = table.column("B_kg_m3K");
    const auto col_tmin = table.column("T_min_K");
    const auto col_tmax = table.column("T_max_K");
    const auto col_src = table.column("source");

    std::vector<CompositionKey> keys;
    for (const auto& row : table.rows) {
        DensityCorrelation c;
        c.system_id = row.fields[col_sys];
        c.component_ids = split(row.fields[col_comp], ';');
        for (const auto& tok : split(row.fields[col_frac], ';')) {
            auto v = parse_double(tok);
            if (!v || !std::isfinite(*v)) throw ParseError("unparseable mole fraction '" + tok + "'", row.line);
            c.mole_fractions.push_back(*v);
        }
        if (c.component_ids.size() != c.mole_fractions.size())
            throw ParseError("component and fraction counts differ", row.line);
        double sum = std::accumulate(c.mole_fractions.begin(), c.mole_fractions.end(), 0.0);
        if (std::abs(sum - 1.0) > 1e-6)
            throw ParseError("mole fractions of '" + c.system_id + "' sum to " + format_double(sum), row.line);
        if (std::abs(sum - 1.0) > 1e-9)
            for (auto& x : c.mole_fractions) x /= sum;
        c.coeff_a = number_field(row, col_a, "A_kg_m3");
        c.coeff_b = number_field(row, col_b, "B_kg_m3K");
        c.t_min = number_field(row, col_tmin, "T_min_K");
        c.t_max = number_field(row, col_tmax, "T_max_K");
        c.source_tag = row.fields[col_src];
        if (c.t_min >= c.t_max) throw ParseError("T_min_K must be below T_max_K", row.line);
        try {
            c.validate();
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), row.line);
        }
        for (const auto& id : c.component_ids)
            if (!molar_masses.count(id)) throw ParseError("compound '" + id + "' missing from components.csv", row.line);
        auto key = composition_key(c);
        for (const auto& k : keys)
            if (same_composition(k, key))
                throw DuplicateError("duplicate correlation for composition of '" + c.system_id + "'", row.line);
        keys.push_back(std::move(key));
        db.correlations.push_back(std::move(c));
    }

    for (const auto& [id, mm] : molar_masses) {
        const DensityCorrelation* pure = nullptr;
        for (const auto& c : db.correlations)
            if (c.is_pure() && c.component_ids.front() == id) pure = &c;
        if (!pure) throw ValidationError("compound '" + id + "' has no pure-salt correlation");
        db.components.emplace(id, ComponentProperties{id, mm, *pure});
    }
    db.validate();
    return db;
}

CorrelationDatabase parse_correlations(const std::filesystem::path& correlations_csv,
                                       const std::filesystem::path& components_csv) {
    const auto correlations = read_file(correlations_csv);
    return parse_correlations_text(correlations, read_file(components_csv));
}

std::string correlations_to_csv(const CorrelationDatabase& db) {
    std::string out = "system_id,components,mole_fractions,A_kg_m3,B_kg_m3K,T_min_K,T_max_K,source\n";
    for (const auto& c : db.correlations) {
        out += c.system_id + "," + join(c.component_ids, ";") + "," + join_doubles(c.mole_fractions, ';') + "," +
               format_double(c.coeff_a) + "," + format_double(c.coeff_b) + "," + format_double(c.t_min) + "," +
               format_double(c.t_max) + "," + c.source_tag + "\n";
    }
    return out;
}

std::string components_to_csv(const CorrelationDatabase& db) {
    std::string out = "compound_id,molar_mass_g_mol\n";
    for (const auto& [id, props] : db.components) out += id + "," + format_double(props.molar_mass * 1000.0) + "\n";
    return out;
}

RkCoefficientSet parse_rk_coefficients_text(const std::string& text, Warnings* warnings) {
    auto table = parse_csv(text, "rk_coefficients.csv");
    const auto col_a = table.column("comp_a");
    const auto col_b = table.column("comp_b");
    const auto col_j = table.column("j");
    const auto col_aj = table.column("A_j");
    const auto col_bj = table.column("B_j");

    // (canonical pair) -> j -> (term, source line)
    std::map<std::pair<std::string, std::string>, std::map<long long, std::pair<RkTerm, std::size_t>>> grouped;
    std::set<std::pair<std::string, std::string>> reported;
    for (const auto& row : table.rows) {
        std::string a = row.fields[col_a];
        std::string b = row.fields[col_b];
        if (a.empty() || b.empty() || a == b) throw ParseError("pair needs two distinct compounds", row.line);
        auto j = parse_int(row.fields[col_j]);
        if (!j || *j < 1) throw ParseError("j must be a positive integer", row.line);
        RkTerm term{number_field(row, col_aj, "A_j"), number_field(row, col_bj, "B_j")};
        if (b < a) {
            std::swap(a, b);
            if (*j % 2 == 0) term = {-term.a, -term.b};
            if (warnings && reported.insert({a, b}).second)
                warnings->push_back("pair " + b + "-" + a + " restated as " + a + "-" + b +
                                    "; even-j terms negated so powers use (x_" + a + " - x_" + b + ")");
        }
        auto& slot = grouped[{a, b}];
        auto [it, inserted] = slot.emplace(*j, std::make_pair(term, row.line));
        if (!inserted && !(it->second.first == term))
            throw ConflictError("conflicting coefficients for pair " + a + "-" + b + ", j=" + std::to_string(*j),
                                row.line);
    }

    RkCoefficientSet out;
    for (auto& [key, terms] : grouped) {
        RkPairCoefficients p{key.first, key.second, {}};
        long long expect = 1;
        for (const auto& [j, entry] : terms) {
            if (j != expect)
                throw ParseError("pair " + key.first + "-" + key.second + " skips j=" + std::to_string(expect),
                                 entry.second);
            p.terms.push_back(entry.first);
            ++expect;
        }
        out.add(std::move(p));
    }
    return out;
}

RkCoefficientSet parse_rk_coefficients(const std::filesystem::path& path, Warnings* warnings) {
    return parse_rk_coefficients_text(read_file(path), warnings);
}

std::string rk_coefficients_to_csv(const RkCoefficientSet& coeffs) {
    std::string out = "comp_a,comp_b,j,A_j,B_j\n";
    for (const auto& p : coeffs.pairs())
        for (std::size_t j = 0; j < p.terms.size(); ++j)
            out += p.comp_a + "," + p.comp_b + "," + std::to_string(j + 1) + "," + format_double(p.terms[j].a) + "," +
                   format_double(p.terms[j].b) + "\n";
    return out;
}

std::vector<SystemSpec> parse_systems_text(const std::string& text) {
    auto table = parse_csv(text, "systems.csv");
    const auto col_id = table.column("system_id");
    const auto col_comp = table.column("components");
    std::vector<SystemSpec> out;
    std::set<std::string> seen;
    for (const auto& row : table.rows) {
        SystemSpec s{row.fields[col_id], split(row.fields[col_comp], ';')};
        std::set<std::string> unique(s.component_ids.begin(), s.component_ids.end());
        if (s.component_ids.size() < 2 || s.component_ids.size() > 4 || unique.size() != s.component_ids.size() ||
            unique.count(""))
            throw ParseError("system '" + s.system_id + "' needs 2 to 4 distinct compounds", row.line);
        if (!seen.insert(s.system_id).second) throw DuplicateError("duplicate system '" + s.system_id + "'", row.line);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<SystemSpec> parse_systems(const std::filesystem::path& path) {
    return parse_systems_text(read_file(path));
}

std::string systems_to_csv(const std::vector<SystemSpec>& systems) {
    std::string out = "system_id,components\n";
    for (const auto& s : systems) out += s.system_id + "," + join(s.component_ids, ";") + "\n";
    return out;
}

DescriptorTable parse_descriptors_text(const std::string& text) {
    DescriptorTable table;
    bool have_names = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        std::string_view line(text.data() + pos, (end == std::string::npos ? text.size() : end) - pos);
        pos = end == std::string::npos ? text.size() : end + 1;
        ++line_no;
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = split_fields(t);
        if (fields.front() == "@names") {
            if (have_names) throw DuplicateError("second @names record", line_no);
            table.names.assign(fields.begin() + 1, fields.end());
            have_names = true;
            continue;
        }
        const std::string id = fields.front();
        std::vector<double> values;
        values.reserve(fields.size() - 1);
        for (std::size_t i = 1; i < fields.size(); ++i) {
            auto v = parse_double(fields[i]);
            if (!v) throw ParseError("compound '" + id + "': unparseable value '" + fields[i] + "'", line_no);
            if (!std::isfinite(*v))
                throw DataError("compound '" + id + "': non-finite descriptor at index " + std::to_string(i - 1));
            values.push_back(*v);
        }
        if (!table.values.empty() && values.size() != table.values.begin()->second.size())
            throw SchemaError("compound '" + id + "' has " + std::to_string(values.size()) + " descriptors, expected " +
                              std::to_string(table.values.begin()->second.size()));
        if (!table.values.emplace(id, std::move(values)).second)
            throw DuplicateError("duplicate compound '" + id + "'", line_no);
    }
    if (!have_names) throw SchemaError("descriptor file lacks an @names record");
    for (const auto& [id, v] : table.values)
        if (v.size() != table.names.size())
            throw SchemaError("compound '" + id + "' has " + std::to_string(v.size()) + " descriptors but " +
                              std::to_string(table.names.size()) + " names are declared");
    return table;
}

DescriptorTable parse_descriptors(const std::filesystem::path& path) {
    return parse_descriptors_text(read_file(path));
}

std::string descriptors_to_text(const DescriptorTable& table) {
    std::string out = "@names " + join(table.names, " ") + "\n";
    for (const auto& [id, v] : table.values) out += id + " " + join_doubles(v, ' ') + "\n";
    return out;
}

std::string table_digest(const DescriptorTable& table) {
    Sha256 h;
    for (const auto& n : table.names) h.update(n).update("\n");
    for (const auto& [id, v] : table.values) h.update(id).update("\n").update(std::span<const double>(v));
    return h.finish();
}

std::string DescriptorSelection::provenance_digest() const {
    Sha256 h;
    h.update("downselect-v1\n").update(config.variance_floor).update(config.corr_threshold);
    h.update(static_cast<unsigned long long>(config.target_count)).update(input_digest);
    for (auto i : selected_indices) h.update(static_cast<unsigned long long>(i));
    h.update(std::span<const double>(means)).update(std::span<const double>(stddevs));
    return h.finish();
}

DescriptorSelection downselect_descriptors(const DescriptorTable& table, const DownselectConfig& config,
                                           Warnings* warnings) {
    const std::size_t n = table.compound_count();
    const std::size_t dim = table.raw_dim();
    if (n < 2) throw ValidationError("descriptor down-selection needs at least 2 compounds");

    // Column statistics; compounds are visited in sorted-id order.
    std::vector<double> mean(dim, 0.0), var(dim, 0.0);
    for (const auto& [_, v] : table.values)
        for (std::size_t k = 0; k < dim; ++k) mean[k] += v[k];
    for (auto& m : mean) m /= static_cast<double>(n);
    for (const auto& [_, v] : table.values)
        for (std::size_t k = 0; k < dim; ++k) var[k] += (v[k] - mean[k]) * (v[k] - mean[k]);
    for (auto& s : var) s /= static_cast<double>(n);
    // A constant column can pick up rounding noise through the mean; pin it to 0.
    const auto& first = table.values.begin()->second;
    for (std::size_t k = 0; k < dim; ++k) {
        bool constant = std::all_of(table.values.begin(), table.values.end(),
                                    [&](const auto& entry) { return entry.second[k] == first[k]; });
        if (constant) var[k] = 0.0;
    }

    auto pearson = [&](std::size_t p, std::size_t q) {
        double cov = 0.0;
        for (const auto& [_, v] : table.values) cov += (v[p] - mean[p]) * (v[q] - mean[q]);
        cov /= static_cast<double>(n);
        return cov / std::sqrt(var[p] * var[q]);
    };

    std::vector<std::size_t> kept;
    for (std::size_t k = 0; k < dim; ++k) {
        if (!(var[k] > config.variance_floor)) continue;
        bool redundant = std::any_of(kept.begin(), kept.end(),
                                     [&](std::size_t j) { return std::abs(pearson(j, k)) > config.corr_threshold; });
        if (!redundant) kept.push_back(k);
    }

    DescriptorSelection sel;
    sel.config = config;
    sel.input_digest = table_digest(table);
    if (kept.size() > config.target_count) {
        std::stable_sort(kept.begin(), kept.end(), [&](std::size_t l, std::size_t r) {
            if (var[l] != var[r]) return var[l] > var[r];
            return l < r;
        });
        kept.resize(config.target_count);
        std::sort(kept.begin(), kept.end());
    } else if (kept.size() < config.target_count) {
        sel.shortfall = true;
        if (warnings)
            warnings->push_back("descriptor down-selection kept " + std::to_string(kept.size()) + " of " +
                                std::to_string(config.target_count) + " requested descriptors");
    }
    sel.selected_indices = kept;
    for (auto k : kept) {
        sel.names.push_back(table.names[k]);
        sel.means.push_back(mean[k]);
        sel.stddevs.push_back(std::sqrt(var[k]));
    }
    return sel;
}

}  // namespace msd
