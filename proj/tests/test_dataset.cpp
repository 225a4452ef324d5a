#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "msdensity/dataset.hpp"
#include "msdensity/error.hpp"
#include "msdensity/random.hpp"

using namespace msd;
using msd::test::component;

namespace {

DescriptorTable toy_table(const std::vector<std::string>& ids, std::size_t dims, std::uint64_t seed = 1) {
    Rng rng(seed);
    DescriptorTable t;
    for (std::size_t k = 0; k < dims; ++k) t.names.push_back("d" + std::to_string(k));
    for (const auto& id : ids) {
        std::vector<double> v(dims);
        for (auto& x : v) x = standard_normal(rng);
        t.values[id] = v;
    }
    return t;
}

Featurizer toy_featurizer(const std::vector<std::string>& ids, std::size_t dims = 6, double t_lo = 700,
                          double t_hi = 1300) {
    auto table = toy_table(ids, dims);
    auto sel = downselect_descriptors(table, {0.0, 1.0, dims});
    return Featurizer(table, sel, t_lo, t_hi);
}

// A: ATR [800, 1000]; B: [800, 1000]; C: [750, 1000]; D: [1100, 1200]
CorrelationDatabase toy_db() {
    CorrelationDatabase db;
    db.components["A"] = component("A", 0.03, 2300, 0.5, 800, 1000);
    db.components["B"] = component("B", 0.05, 2700, 0.6, 800, 1000);
    db.components["C"] = component("C", 0.1, 3500, 0.8, 750, 1000);
    db.components["D"] = component("D", 0.2, 5000, 0.7, 1100, 1200);
    return db;
}

DensityCorrelation binary_corr(double t_min, double t_max) {
    DensityCorrelation c;
    c.system_id = "A-B/1";
    c.component_ids = {"A", "B"};
    c.mole_fractions = {0.4, 0.6};
    c.coeff_a = 2600;
    c.coeff_b = 0.55;
    c.t_min = t_min;
    c.t_max = t_max;
    return c;
}

RkCoefficientSet abc_coeffs() {
    RkCoefficientSet set;
    set.add({"A", "B", {{-300, 0.05}, {40, 0.01}}});
    set.add({"A", "C", {{-250, 0.0}}});
    set.add({"B", "C", {{-100, 0.02}, {10, 0}, {5, 0}}});
    return set;
}

}  // namespace

TEST(SampleTemperatures, Examples) {
    EXPECT_EQ(sample_temperatures(800, 1000, 50), (std::vector<double>{800, 850, 900, 950, 1000}));
    EXPECT_EQ(sample_temperatures(700, 820, 50), (std::vector<double>{700, 750, 800}));
    EXPECT_EQ(sample_temperatures(900, 905, 50), (std::vector<double>{900}));
}

TEST(SampleTemperatures, CountMatchesClosedForm) {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        double lo = std::round(uniform(rng, 300, 1000));
        double hi = lo + std::round(uniform(rng, 1, 800));
        auto ts = sample_temperatures(lo, hi, 50);
        EXPECT_EQ(ts.size(), static_cast<std::size_t>(std::floor((hi - lo) / 50.0)) + 1);
        EXPECT_LE(ts.back(), hi);
        EXPECT_EQ(ts.front(), lo);
    }
}

TEST(CompositionGrid, Counts) {
    EXPECT_EQ(composition_grid(2, 0.1).size(), 11u);
    EXPECT_EQ(composition_grid(3, 0.1).size(), 66u);
    EXPECT_EQ(composition_grid(3, 0.5).size(), 6u);
    EXPECT_EQ(composition_grid(4, 0.1).size(), 286u);
}

TEST(CompositionGrid, MatchesBruteForceEnumeration) {
    for (std::size_t s : {2u, 3u, 4u}) {
        for (int div : {2, 4, 10}) {
            std::set<std::vector<int>> expected;
            std::vector<int> c(s, 0);
            // odometer over {0..div}^s, keep the ones that sum to div
            while (true) {
                int sum = 0;
                for (int v : c) sum += v;
                if (sum == div) expected.insert(c);
                std::size_t k = 0;
                while (k < s && ++c[k] > div) c[k++] = 0;
                if (k == s) break;
            }
            auto grid = composition_grid(s, 1.0 / div);
            ASSERT_EQ(grid.size(), expected.size());
            std::set<std::vector<int>> got;
            for (const auto& x : grid) {
                std::vector<int> k;
                double sum = 0;
                for (double v : x) {
                    k.push_back(static_cast<int>(std::lround(v * div)));
                    EXPECT_EQ(v, k.back() / static_cast<double>(div));
                    sum += v;
                }
                EXPECT_NEAR(sum, 1.0, 1e-12);
                got.insert(k);
            }
            EXPECT_EQ(got, expected);
        }
    }
}

TEST(CompositionGrid, DescendingLexicographicOrder) {
    auto grid = composition_grid(2, 0.1);
    EXPECT_EQ(grid.front(), (std::vector<double>{1.0, 0.0}));
    EXPECT_EQ(grid.back(), (std::vector<double>{0.0, 1.0}));
    auto g3 = composition_grid(3, 0.1);
    EXPECT_TRUE(std::is_sorted(g3.begin(), g3.end(), std::greater<>()));
}

TEST(CompositionGrid, InvalidArguments) {
    EXPECT_THROW(composition_grid(1, 0.1), ValidationError);
    EXPECT_THROW(composition_grid(5, 0.1), ValidationError);
    EXPECT_THROW(composition_grid(3, 0.3), ValidationError);
}

TEST(PermuteAugment, FactorialCounts) {
    DataRecord r{"s", {"A"}, {1.0}, 900, 2000, Origin::Experimental};
    EXPECT_EQ(permute_augment(r).size(), 1u);
    r.component_ids = {"A", "B"};
    r.mole_fractions = {0.3, 0.7};
    auto two = permute_augment(r);
    ASSERT_EQ(two.size(), 2u);
    EXPECT_EQ(two[0].component_ids, (std::vector<std::string>{"A", "B"}));
    EXPECT_EQ(two[1].component_ids, (std::vector<std::string>{"B", "A"}));
    EXPECT_EQ(two[1].mole_fractions, (std::vector<double>{0.7, 0.3}));
    r.component_ids = {"C", "A", "B"};
    r.mole_fractions = {0.2, 0.3, 0.5};
    auto six = permute_augment(r);
    ASSERT_EQ(six.size(), 6u);
    EXPECT_EQ(six[0].component_ids, r.component_ids);
    r.component_ids = {"A", "B", "C", "D"};
    r.mole_fractions = {0.1, 0.2, 0.3, 0.4};
    auto all = permute_augment(r);
    EXPECT_EQ(all.size(), 24u);
    std::set<std::vector<std::string>> distinct;
    for (const auto& p : all) {
        distinct.insert(p.component_ids);
        EXPECT_EQ(p.target, r.target);
        for (std::size_t i = 0; i < 4; ++i) {
            auto pos = std::find(r.component_ids.begin(), r.component_ids.end(), p.component_ids[i]) -
                       r.component_ids.begin();
            EXPECT_EQ(p.mole_fractions[i], r.mole_fractions[static_cast<std::size_t>(pos)]);
        }
    }
    EXPECT_EQ(distinct.size(), 24u);
}

TEST(Featurize, WidthFormula) {
    std::vector<std::string> ids{"A", "B", "C", "D"};
    auto table = toy_table(ids, 200, 5);
    // 4 compounds cannot give 134 uncorrelated columns; disable the prune
    auto sel = downselect_descriptors(table, {0.0, 1.0, 134});
    ASSERT_EQ(sel.size(), 134u);
    Featurizer f(table, sel, 700, 1300);
    EXPECT_EQ(f.feature_dim(), 541u);
    DataRecord r{"s", {"A", "B", "C", "D"}, {0.1, 0.2, 0.3, 0.4}, 900, 3000, Origin::Experimental};
    auto v = f.featurize(r);
    ASSERT_EQ(v.size(), 541u);
    for (std::size_t slot = 0; slot < 4; ++slot) {
        bool nonzero = false;
        for (std::size_t k = 0; k < 134; ++k) nonzero |= v[5 + slot * 134 + k] != 0.0;
        EXPECT_TRUE(nonzero);
    }
}

TEST(Featurize, PaddingIsExactlyZero) {
    auto f = toy_featurizer({"A", "B"});
    DataRecord r{"s", {"A"}, {1.0}, 1000, 2000, Origin::Experimental};
    auto v = f.featurize(r);
    const std::size_t d = f.descriptor_dim();
    EXPECT_EQ(v[0], (1000.0 - 700.0) / 600.0);
    EXPECT_EQ(v[1], 1.0);
    for (std::size_t i = 2; i < 5; ++i) EXPECT_EQ(v[i], 0.0);
    for (std::size_t i = 5 + d; i < v.size(); ++i) EXPECT_EQ(v[i], 0.0);
}

TEST(Featurize, OrderSwapPermutesBlocks) {
    auto f = toy_featurizer({"A", "B"});
    const std::size_t d = f.descriptor_dim();
    auto v1 = f.featurize({"s", {"A", "B"}, {0.3, 0.7}, 900, 1, Origin::Experimental});
    auto v2 = f.featurize({"s", {"B", "A"}, {0.7, 0.3}, 900, 1, Origin::Experimental});
    EXPECT_EQ(v1[0], v2[0]);
    EXPECT_EQ(v1[1], v2[2]);
    EXPECT_EQ(v1[2], v2[1]);
    for (std::size_t k = 0; k < d; ++k) {
        EXPECT_EQ(v1[5 + k], v2[5 + d + k]);
        EXPECT_EQ(v1[5 + d + k], v2[5 + k]);
    }
}

TEST(Featurize, StandardizedBlocks) {
    std::vector<std::string> ids{"A", "B", "C"};
    auto table = toy_table(ids, 4);
    auto sel = downselect_descriptors(table, {0.0, 1.0, 4});
    Featurizer f(table, sel, 700, 1300);
    for (std::size_t k = 0; k < sel.size(); ++k) {
        double sum = 0, sq = 0;
        for (const auto& id : ids) {
            double z = f.featurize({"s", {id}, {1.0}, 900, 1, Origin::Experimental})[5 + k];
            sum += z;
            sq += z * z;
        }
        EXPECT_NEAR(sum / 3, 0.0, 1e-12);
        EXPECT_NEAR(sq / 3, 1.0, 1e-12);
    }
}

TEST(Featurize, UnknownCompoundNamed) {
    auto f = toy_featurizer({"A", "B"});
    try {
        f.featurize({"s", {"A", "Xe"}, {0.5, 0.5}, 900, 1, Origin::Experimental});
        FAIL();
    } catch (const FeaturizationError& e) {
        EXPECT_NE(std::string(e.what()).find("Xe"), std::string::npos);
    }
}

TEST(Featurize, SaveLoadRoundTrip) {
    auto f = toy_featurizer({"A", "B", "C"});
    auto dir = msd::test::scratch_dir("featurizer");
    f.save(dir / "f.txt");
    auto g = Featurizer::load(dir / "f.txt");
    EXPECT_EQ(g.digest(), f.digest());
    DataRecord r{"s", {"C", "A"}, {0.25, 0.75}, 1111, 1, Origin::Experimental};
    EXPECT_EQ(g.featurize(r), f.featurize(r));
    auto text = read_file(dir / "f.txt");
    auto pos = text.find("t_scale_max = ");
    text.replace(pos, 14, "t_scale_max = 9");
    write_file(dir / "bad.txt", text);
    EXPECT_THROW(Featurizer::load(dir / "bad.txt"), ParseError);
}

TEST(ExperimentalDataset, BinaryCorrelationCount) {
    auto db = toy_db();
    db.correlations = {binary_corr(800, 1000)};
    auto f = toy_featurizer({"A", "B", "C", "D"});
    auto ds = build_experimental_dataset(db, f);
    EXPECT_EQ(ds.rows(), 10u);
    EXPECT_EQ(ds.group_ids().size(), 5u);
    for (std::size_t i = 0; i < ds.rows(); ++i)
        EXPECT_EQ(ds.targets[static_cast<Eigen::Index>(i)], eval_pure_density(db.correlations[0], ds.meta[i].temperature).value);
}

TEST(ExperimentalDataset, PureSaltCount) {
    auto db = toy_db();
    db.correlations = {db.components["A"].pure_correlation};
    db.correlations[0].t_min = 800;
    db.correlations[0].t_max = 900;
    auto f = toy_featurizer({"A", "B", "C", "D"});
    EXPECT_EQ(build_experimental_dataset(db, f).rows(), 3u);
}

TEST(ExperimentalDataset, EmptyDatabase) {
    CorrelationDatabase db;
    auto f = toy_featurizer({"A", "B"});
    auto ds = build_experimental_dataset(db, f);
    EXPECT_TRUE(ds.empty());
    EXPECT_EQ(ds.feature_dim(), f.feature_dim());
}

TEST(ExperimentalDataset, TargetsAndOrdering) {
    auto db = toy_db();
    for (const auto& id : {"D", "A", "B", "C"}) db.correlations.push_back(db.components[id].pure_correlation);
    db.correlations.push_back(binary_corr(850, 950));
    auto f = toy_featurizer({"A", "B", "C", "D"});
    auto ds = build_experimental_dataset(db, f);
    ds.validate();
    EXPECT_EQ(ds.rows(), 5u + 5u + 6u + 3u * 2u + 3u);
    std::vector<std::string> systems;
    for (const auto& m : ds.meta) {
        if (systems.empty() || systems.back() != m.system_id) systems.push_back(m.system_id);
        EXPECT_EQ(m.origin, Origin::Experimental);
    }
    EXPECT_TRUE(std::is_sorted(systems.begin(), systems.end()));
}

TEST(RkDataset, TernaryCount) {
    auto db = toy_db();
    auto f = toy_featurizer({"A", "B", "C", "D"});
    Warnings w;
    // common ATR of A, B, C is [800, 1000] -> 5 temperatures
    auto ds = build_rk_dataset(db, abc_coeffs(), {{"ABC", {"A", "B", "C"}}}, f, {0.1, 50, true}, &w);
    EXPECT_EQ(ds.rows(), 66u * 5u * 6u);
    EXPECT_TRUE(w.empty());
    // four temperatures
    db.components["C"].pure_correlation.t_max = 950;
    auto four = build_rk_dataset(db, abc_coeffs(), {{"ABC", {"A", "B", "C"}}}, f);
    EXPECT_EQ(four.rows(), 1584u);
    for (const auto& m : four.meta) EXPECT_EQ(m.component_ids.size(), 3u);
}

TEST(RkDataset, TargetsMatchMixtureModelAndOracle) {
    auto db = toy_db();
    auto coeffs = abc_coeffs();
    auto f = toy_featurizer({"A", "B", "C", "D"});
    auto ds = build_rk_dataset(db, coeffs, {{"ABC", {"A", "B", "C"}}}, f);
    Rng rng(12);
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        const auto& m = ds.meta[i];
        MixtureSpec mix;
        mix.temperature = m.temperature;
        for (std::size_t k = 0; k < m.component_ids.size(); ++k)
            mix.components.push_back({db.component(m.component_ids[k]), m.mole_fractions[k]});
        EXPECT_EQ(ds.targets[static_cast<Eigen::Index>(i)], mixture_density(mix, coeffs).rho_mix);
    }
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t i = uniform_index(rng, ds.rows());
        const auto& m = ds.meta[i];
        double t = m.temperature, num = 0, den = 0, ex = 0, scale = 0;
        for (std::size_t k = 0; k < 3; ++k) {
            const auto& p = db.component(m.component_ids[k]);
            double rho = p.pure_correlation.coeff_a - p.pure_correlation.coeff_b * t;
            num += m.mole_fractions[k] * p.molar_mass;
            den += m.mole_fractions[k] * p.molar_mass / rho;
        }
        for (std::size_t a = 0; a < 3; ++a)
            for (std::size_t b = 0; b < 3; ++b) {
                if (!(m.component_ids[a] < m.component_ids[b])) continue;
                const auto* pc = coeffs.find(m.component_ids[a], m.component_ids[b]);
                double xa = m.mole_fractions[a], xb = m.mole_fractions[b];
                for (std::size_t j = 0; j < pc->terms.size(); ++j) {
                    double term = xa * xb * (pc->terms[j].a + pc->terms[j].b * t) * std::pow(xa - xb, double(j));
                    ex += term;
                    scale += std::abs(term);
                }
            }
        double oracle = num / den + ex;
        EXPECT_NEAR(ds.targets[static_cast<Eigen::Index>(i)], oracle, 1e-12 * (oracle + scale));
    }
}

TEST(RkDataset, NonOverlappingRangesWarn) {
    auto db = toy_db();
    auto coeffs = abc_coeffs();
    coeffs.add({"A", "D", {{1, 0}}});
    coeffs.add({"B", "D", {{1, 0}}});
    auto f = toy_featurizer({"A", "B", "C", "D"});
    Warnings w;
    auto ds = build_rk_dataset(db, coeffs, {{"ABD", {"A", "B", "D"}}}, f, {}, &w);
    EXPECT_EQ(ds.rows(), 0u);
    ASSERT_EQ(w.size(), 1u);
    EXPECT_NE(w[0].find("ABD"), std::string::npos);
}

TEST(RkDataset, ZeroCoefficientsGiveIdeal) {
    auto db = toy_db();
    RkCoefficientSet zero;
    zero.add({"A", "B", {{0, 0}}});
    zero.add({"A", "C", {{0, 0}}});
    zero.add({"B", "C", {{0, 0}}});
    auto f = toy_featurizer({"A", "B", "C", "D"});
    auto ds = build_rk_dataset(db, zero, {{"ABC", {"A", "B", "C"}}}, f);
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        const auto& m = ds.meta[i];
        MixtureSpec mix;
        mix.temperature = m.temperature;
        for (std::size_t k = 0; k < 3; ++k) mix.components.push_back({db.component(m.component_ids[k]), m.mole_fractions[k]});
        EXPECT_EQ(ds.targets[static_cast<Eigen::Index>(i)], ideal_density(mix));
    }
}

TEST(RkDataset, MissingPairNamesSystemAndPair) {
    auto db = toy_db();
    RkCoefficientSet coeffs;
    coeffs.add({"A", "B", {{1, 0}}});
    coeffs.add({"A", "C", {{1, 0}}});
    auto f = toy_featurizer({"A", "B", "C", "D"});
    try {
        build_rk_dataset(db, coeffs, {{"ABC", {"A", "B", "C"}}}, f);
        FAIL();
    } catch (const MissingCoefficientError& e) {
        std::string what = e.what();
        EXPECT_NE(what.find("ABC"), std::string::npos);
        EXPECT_NE(what.find("B-C"), std::string::npos);
    }
}

TEST(Split, GroupCountsAndDeterminism) {
    auto db = toy_db();
    db.correlations = {binary_corr(800, 1250)};  // 10 temperatures -> 10 groups of 2
    auto f = toy_featurizer({"A", "B", "C", "D"});
    auto ds = build_experimental_dataset(db, f);
    ASSERT_EQ(ds.group_ids().size(), 10u);
    auto a = split(ds, 0.2, 5);
    EXPECT_EQ(a.test.group_ids().size(), 2u);
    EXPECT_EQ(a.train.group_ids().size(), 8u);
    auto b = split(ds, 0.2, 5);
    EXPECT_EQ(a.test.group_ids(), b.test.group_ids());
    auto none = split(ds, 0.0, 5);
    EXPECT_TRUE(none.test.empty());
    EXPECT_EQ(none.train.rows(), ds.rows());
    EXPECT_THROW(split(Dataset{}, 0.2, 1), ValidationError);
}

TEST(Split, NoGroupLeaksAcrossSides) {
    auto db = toy_db();
    auto f = toy_featurizer({"A", "B", "C", "D"});
    auto ds = build_rk_dataset(db, abc_coeffs(), {{"ABC", {"A", "B", "C"}}}, f);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto parts = split(ds, 0.2, seed);
        auto train = parts.train.group_ids(), test = parts.test.group_ids();
        std::vector<std::size_t> both;
        std::set_intersection(train.begin(), train.end(), test.begin(), test.end(), std::back_inserter(both));
        EXPECT_TRUE(both.empty());
        EXPECT_EQ(parts.train.rows() + parts.test.rows(), ds.rows());
        // each group keeps all 3! members and a single target
        std::map<std::size_t, std::pair<std::size_t, double>> seen;
        for (std::size_t i = 0; i < parts.test.rows(); ++i) {
            auto& [count, target] = seen[parts.test.meta[i].group_id];
            if (count > 0) EXPECT_EQ(target, parts.test.targets[static_cast<Eigen::Index>(i)]);
            target = parts.test.targets[static_cast<Eigen::Index>(i)];
            ++count;
        }
        for (const auto& [g, ct] : seen) EXPECT_EQ(ct.first, 6u);
    }
}

TEST(DatasetFile, RoundTripIsExact) {
    auto db = toy_db();
    auto f = toy_featurizer({"A", "B", "C", "D"});
    auto ds = build_rk_dataset(db, abc_coeffs(), {{"ABC", {"A", "B", "C"}}}, f, {0.25, 100, true});
    auto dir = msd::test::scratch_dir("dataset_file");
    write_dataset(ds, dir / "rk.csv", {"rk", 3, "abc"});
    DatasetFileInfo info;
    auto back = read_dataset(dir / "rk.csv", &info);
    EXPECT_EQ(info.kind, "rk");
    EXPECT_EQ(info.seed, 3u);
    EXPECT_EQ(info.provenance, "abc");
    ASSERT_EQ(back.rows(), ds.rows());
    EXPECT_TRUE(back.features == ds.features);
    EXPECT_TRUE(back.targets == ds.targets);
    EXPECT_EQ(back.feature_digest, ds.feature_digest);
    EXPECT_EQ(back.t_lo, ds.t_lo);
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        EXPECT_EQ(back.meta[i].group_id, ds.meta[i].group_id);
        EXPECT_EQ(back.meta[i].perm_idx, ds.meta[i].perm_idx);
        EXPECT_EQ(back.meta[i].component_ids, ds.meta[i].component_ids);
        EXPECT_EQ(back.meta[i].mole_fractions, ds.meta[i].mole_fractions);
        EXPECT_EQ(back.meta[i].origin, Origin::RkSynthetic);
    }
    // writing again reproduces the same bytes
    write_dataset(back, dir / "again.csv", {"rk", 3, "abc"});
    EXPECT_EQ(read_file(dir / "again.csv"), read_file(dir / "rk.csv"));
    // edits to the CSV are detected through the sidecar digest
    auto text = read_file(dir / "rk.csv");
    text.back() = ' ';
    write_file(dir / "rk.csv", text + "\n");
    EXPECT_THROW(read_dataset(dir / "rk.csv"), IncompatibilityError);
}
