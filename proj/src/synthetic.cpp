#include "msdensity/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "msdensity/error.hpp"
#include "msdensity/random.hpp"
#include "msdensity/text.hpp"

namespace msd {

namespace {

struct SaltSeed {
    const char* id;
    double molar_mass;  // g/mol
    double a;
    double b;
    double cation_charge;
};

constexpr SaltSeed kSalts[] = {
    {"LiF", 25.939, 2358.0, 0.490, 1.0},   {"NaF", 41.988, 2755.0, 0.636, 1.0},
    {"KF", 58.097, 2640.0, 0.650, 1.0},    {"BeF2", 47.009, 1972.0, 0.100, 2.0},
    {"ZrF4", 167.218, 3790.0, 0.930, 4.0}, {"ThF4", 308.032, 7108.0, 0.759, 4.0},
};

constexpr std::size_t kTernaries[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 4}, {1, 2, 5}};

double round_to(double v, double step) { return std::round(v / step) * step; }

// Least-squares line through rho(T) sampled every 10 K.
std::pair<double, double> fit_line(const std::function<double(double)>& rho, double t_min, double t_max) {
    std::vector<double> ts;
    for (double t = t_min; t <= t_max + 1e-9; t += 10.0) ts.push_back(t);
    double n = static_cast<double>(ts.size());
    double st = 0, sr = 0, stt = 0, str = 0;
    for (double t : ts) {
        double r = rho(t);
        st += t;
        sr += r;
        stt += t * t;
        str += t * r;
    }
    double slope = (n * str - st * sr) / (n * stt - st * st);
    double intercept = (sr - slope * st) / n;
    return {intercept, -slope};
}

std::string system_name(const std::vector<std::string>& ids) { return join(ids, "-"); }

}  // namespace

double SyntheticCorpus::truth(std::span<const std::string> ids, std::span<const double> x, double t) const {
    MixtureSpec mix;
    mix.temperature = t;
    for (std::size_t i = 0; i < ids.size(); ++i) mix.components.push_back({db.component(ids[i]), x[i]});
    double rho = mixture_density(mix, coeffs, {MissingPairPolicy::ZeroExcess, false}).rho_mix;
    for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = i + 1; j < ids.size(); ++j)
            for (std::size_t k = j + 1; k < ids.size(); ++k) {
                std::vector<std::string> key{ids[i], ids[j], ids[k]};
                std::sort(key.begin(), key.end());
                auto it = ternary_terms.find(key);
                if (it == ternary_terms.end()) continue;
                rho += x[i] * x[j] * x[k] * (it->second.c0 + it->second.c1 * t);
            }
    return rho;
}

void SyntheticCorpus::write(const std::filesystem::path& dir) const {
    write_file(dir / "correlations.csv", correlations_to_csv(db));
    write_file(dir / "components.csv", components_to_csv(db));
    write_file(dir / "rk_coefficients.csv", rk_coefficients_to_csv(coeffs));
    write_file(dir / "systems.csv", systems_to_csv(ternaries));
    write_file(dir / "descriptors.txt", descriptors_to_text(descriptors));
}

SyntheticCorpus make_synthetic_corpus(const SyntheticConfig& config) {
    if (config.descriptor_count < 6) throw ConfigurationError("synthetic corpus needs at least 6 descriptors");
    Rng rng(config.seed);
    SyntheticCorpus corpus;

    for (const auto& s : kSalts) {
        ComponentProperties p;
        p.compound_id = s.id;
        p.molar_mass = s.molar_mass / 1000.0;
        auto& c = p.pure_correlation;
        c.system_id = s.id;
        c.component_ids = {s.id};
        c.mole_fractions = {1.0};
        c.coeff_a = round_to(s.a * uniform(rng, 0.98, 1.02), 0.01);
        c.coeff_b = round_to(s.b * uniform(rng, 0.9, 1.1), 1e-4);
        c.t_min = round_to(uniform(rng, 700.0, 800.0), 10.0);
        c.t_max = round_to(uniform(rng, 1050.0, 1150.0), 10.0);
        c.source_tag = "synthetic";
        corpus.db.components[p.compound_id] = p;
        corpus.db.correlations.push_back(c);
    }

    // Pair expansions; the leading term has one common sign across pairs.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& t : kTernaries)
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) {
                auto p = std::minmax(t[i], t[j]);
                if (std::find(pairs.begin(), pairs.end(), std::pair{p.first, p.second}) == pairs.end())
                    pairs.emplace_back(p.first, p.second);
            }
    for (auto [i, j] : pairs) {
        RkPairCoefficients rk;
        rk.comp_a = kSalts[i].id;
        rk.comp_b = kSalts[j].id;
        std::size_t n = 1 + uniform_index(rng, 3);
        rk.terms.push_back({round_to(-uniform(rng, 250.0, 600.0), 0.01), round_to(uniform(rng, -0.1, 0.1), 1e-4)});
        if (n > 1) rk.terms.push_back({round_to(uniform(rng, -150.0, 150.0), 0.01), round_to(uniform(rng, -0.05, 0.05), 1e-4)});
        if (n > 2) rk.terms.push_back({round_to(uniform(rng, -80.0, 80.0), 0.01), 0.0});
        corpus.coeffs.add(rk);
    }

    for (const auto& t : kTernaries) {
        std::vector<std::string> key{kSalts[t[0]].id, kSalts[t[1]].id, kSalts[t[2]].id};
        std::sort(key.begin(), key.end());
        double sign = uniform01(rng) < 0.5 ? -1.0 : 1.0;
        TernaryTerm term{sign * uniform(rng, config.ternary_strength_min, config.ternary_strength_max),
                         uniform(rng, -0.5, 0.5)};
        corpus.ternary_terms[key] = term;
        corpus.ternaries.push_back({system_name({kSalts[t[0]].id, kSalts[t[1]].id, kSalts[t[2]].id}),
                                    {kSalts[t[0]].id, kSalts[t[1]].id, kSalts[t[2]].id}});
    }

    auto range_of = [&](const std::vector<std::string>& ids) {
        double lo = 0.0, hi = 1e300;
        for (const auto& id : ids) {
            const auto& c = corpus.db.component(id).pure_correlation;
            lo = std::max(lo, c.t_min);
            hi = std::min(hi, c.t_max);
        }
        return std::pair{lo, hi};
    };
    auto add_mixture = [&](const std::vector<std::string>& ids, const std::vector<double>& x, std::size_t serial) {
        auto [lo, hi] = range_of(ids);
        auto [a, b] = fit_line([&](double t) { return corpus.truth(ids, x, t); }, lo, hi);
        double factor = 1.0 + config.noise * standard_normal(rng);
        DensityCorrelation c;
        c.system_id = system_name(ids) + "/" + std::to_string(serial);
        c.component_ids = ids;
        c.mole_fractions = x;
        c.coeff_a = a * factor;
        c.coeff_b = b * factor;
        c.t_min = lo;
        c.t_max = hi;
        c.source_tag = "synthetic";
        corpus.db.correlations.push_back(c);
    };

    for (auto [i, j] : pairs) {
        std::vector<std::string> ids{kSalts[i].id, kSalts[j].id};
        std::size_t serial = 0;
        for (double v : config.binary_compositions) add_mixture(ids, {v, 1.0 - v}, ++serial);
    }

    // Interior lattice points (step 0.05, every fraction >= 0.1).
    std::vector<std::vector<double>> interior;
    for (int i = 2; i <= 16; ++i)
        for (int j = 2; i + j <= 18; ++j) interior.push_back({i / 20.0, j / 20.0, (20 - i - j) / 20.0});

    for (std::size_t s = 0; s < corpus.ternaries.size(); ++s) {
        const auto& ids = corpus.ternaries[s].component_ids;
        bool sparse = config.sparse_system && s + 1 == corpus.ternaries.size();
        if (sparse) {
            // vary the third component, the other two held at 3:2
            SparsePath sp;
            sp.system_id = corpus.ternaries[s].system_id;
            sp.component_ids = ids;
            sp.path = CompositionPath::vary_one(3, 2, {3.0, 2.0, 0.0});
            sp.data_points = config.sparse_points;
            std::size_t serial = 0;
            for (double v : config.sparse_points) add_mixture(ids, sp.path.fractions_at(v), ++serial);
            corpus.sparse = sp;
            continue;
        }
        auto points = interior;
        shuffle(points, rng);
        std::size_t count = std::min(config.compositions_per_ternary, points.size());
        for (std::size_t k = 0; k < count; ++k) add_mixture(ids, points[k], k + 1);
    }

    // Descriptor columns 0-5 carry physical values (2 is constant, 3 duplicates 0).
    auto& table = corpus.descriptors;
    for (std::size_t k = 0; k < config.descriptor_count; ++k) {
        char name[16];
        std::snprintf(name, sizeof name, "d%03zu", k);
        table.names.emplace_back(name);
    }
    std::vector<double> scale(config.descriptor_count), offset(config.descriptor_count);
    for (std::size_t k = 0; k < config.descriptor_count; ++k) {
        scale[k] = std::pow(10.0, uniform(rng, -1.0, 2.0));
        offset[k] = uniform(rng, -5.0, 5.0);
    }
    for (const auto& s : kSalts) {
        const auto& c = corpus.db.component(s.id).pure_correlation;
        std::vector<double> v(config.descriptor_count);
        v[0] = s.molar_mass;
        v[1] = c.coeff_a - c.coeff_b * 1000.0;
        v[2] = 1.0;
        v[3] = 2.0 * s.molar_mass;
        v[4] = s.cation_charge;
        v[5] = c.coeff_b;
        for (std::size_t k = 6; k < config.descriptor_count; ++k)
            v[k] = round_to(offset[k] + scale[k] * standard_normal(rng), 1e-6);
        table.values[s.id] = v;
    }
    corpus.db.validate();
    return corpus;
}

}  // namespace msd
