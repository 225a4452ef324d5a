#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "msdensity/error.hpp"
#include "msdensity/ingestion.hpp"
#include "msdensity/random.hpp"
#include "msdensity/text.hpp"

using namespace msd;

namespace {

const char* kHeader = "system_id,components,mole_fractions,A_kg_m3,B_kg_m3K,T_min_K,T_max_K,source\n";
const char* kComponents = "compound_id,molar_mass_g_mol\nLiF,25.939\nNaF,41.988\nKF,58.097\n";

std::string five_rows() {
    return std::string(kHeader) +
           "LiF,LiF,1,2358,0.4902,1121,1300,fixture\n"
           "NaF,NaF,1,2755,0.636,1268,1400,fixture\n"
           "KF,KF,1,2640,0.6515,1131,1300,fixture\n"
           "LiF-NaF/1,LiF;NaF,0.6;0.4,2530.2,0.55,1000,1250,fixture\n"
           "LiF-KF/1,LiF;KF,0.5;0.5,2480,0.58,900,1200,fixture\n";
}

template <typename E>
std::string error_of(auto&& fn) {
    try {
        fn();
    } catch (const E& e) {
        return e.what();
    }
    return "";
}

DescriptorTable random_table(Rng& rng, std::size_t compounds, std::size_t dims) {
    DescriptorTable t;
    for (std::size_t k = 0; k < dims; ++k) t.names.push_back("n" + std::to_string(k));
    for (std::size_t c = 0; c < compounds; ++c) {
        std::vector<double> v(dims);
        for (auto& x : v) x = standard_normal(rng) * 3.0;
        t.values["C" + std::to_string(c)] = v;
    }
    return t;
}

// Independent re-implementation of the three selection steps in long double.
std::vector<std::size_t> brute_force_selection(const DescriptorTable& t, const DownselectConfig& cfg) {
    std::vector<std::vector<long double>> cols(t.raw_dim());
    for (const auto& [id, v] : t.values)
        for (std::size_t k = 0; k < v.size(); ++k) cols[k].push_back(v[k]);
    auto mean = [](const std::vector<long double>& c) {
        long double s = 0;
        for (auto x : c) s += x;
        return s / c.size();
    };
    auto var = [&](const std::vector<long double>& c) {
        long double m = mean(c), s = 0;
        for (auto x : c) s += (x - m) * (x - m);
        return s / c.size();
    };
    auto corr = [&](const std::vector<long double>& a, const std::vector<long double>& b) {
        long double ma = mean(a), mb = mean(b), sab = 0, saa = 0, sbb = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            sab += (a[i] - ma) * (b[i] - mb);
            saa += (a[i] - ma) * (a[i] - ma);
            sbb += (b[i] - mb) * (b[i] - mb);
        }
        return sab / std::sqrt(saa * sbb);
    };
    std::vector<std::size_t> kept;
    for (std::size_t k = 0; k < cols.size(); ++k) {
        if (var(cols[k]) <= cfg.variance_floor) continue;
        bool redundant = false;
        for (auto j : kept)
            if (std::fabs(corr(cols[k], cols[j])) > cfg.corr_threshold) redundant = true;
        if (!redundant) kept.push_back(k);
    }
    if (kept.size() > cfg.target_count) {
        std::stable_sort(kept.begin(), kept.end(),
                         [&](std::size_t a, std::size_t b) { return var(cols[a]) > var(cols[b]); });
        kept.resize(cfg.target_count);
        std::sort(kept.begin(), kept.end());
    }
    return kept;
}

}  // namespace

TEST(ParseCorrelations, HeaderOnlyGivesEmptyDatabase) {
    auto db = parse_correlations_text(kHeader, "compound_id,molar_mass_g_mol\n");
    EXPECT_EQ(db.correlations.size(), 0u);
    EXPECT_EQ(db.components.size(), 0u);
}

TEST(ParseCorrelations, CountsCorrelationsAndComponents) {
    auto db = parse_correlations_text(five_rows(), kComponents);
    EXPECT_EQ(db.correlations.size(), 5u);
    EXPECT_EQ(db.components.size(), 3u);
    EXPECT_DOUBLE_EQ(db.component("LiF").molar_mass, 0.025939);
    EXPECT_EQ(db.component("NaF").pure_correlation.coeff_a, 2755.0);
    EXPECT_EQ(db.systems_with({"NaF", "LiF"}).size(), 1u);
    auto span = db.temperature_span();
    EXPECT_EQ(span.first, 900.0);
    EXPECT_EQ(span.second, 1400.0);
}

TEST(ParseCorrelations, FractionsNotSummingToOneNameTheRow) {
    auto text = std::string(kHeader) + "LiF,LiF,1,2358,0.49,800,1300,f\nNaF,NaF,1,2755,0.6,900,1400,f\n"
                                       "bad,LiF;NaF,0.6;0.5,2500,0.5,900,1200,f\n";
    auto comps = "compound_id,molar_mass_g_mol\nLiF,25.9\nNaF,42\n";
    try {
        parse_correlations_text(text, comps);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 4u);
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
    }
}

TEST(ParseCorrelations, SmallRoundingIsRenormalized) {
    auto text = std::string(kHeader) + "LiF,LiF,1,2358,0.49,800,1300,f\nNaF,NaF,1,2755,0.6,900,1400,f\n"
                                       "m,LiF;NaF,0.3333333;0.6666666,2500,0.5,900,1200,f\n";
    auto db = parse_correlations_text(text, "compound_id,molar_mass_g_mol\nLiF,25.9\nNaF,42\n");
    const auto& x = db.correlations[2].mole_fractions;
    EXPECT_NEAR(x[0] + x[1], 1.0, 1e-15);
}

TEST(ParseCorrelations, MalformedRows) {
    auto comps = "compound_id,molar_mass_g_mol\nLiF,25.9\n";
    EXPECT_THROW(parse_correlations_text(std::string(kHeader) + "LiF,LiF,1,2358,0.49,1300,800,f\n", comps), ParseError);
    EXPECT_THROW(parse_correlations_text(std::string(kHeader) + "LiF,LiF,1,23x8,0.49,800,1300,f\n", comps), ParseError);
    EXPECT_THROW(parse_correlations_text(std::string(kHeader) + "LiF,LiF,1,2358,0.49,800\n", comps), ParseError);
    EXPECT_THROW(parse_correlations_text(std::string(kHeader) + "X,XF,1,2358,0.49,800,1300,f\n", comps), ParseError);
    EXPECT_THROW(parse_correlations_text("system_id,components\n", comps), SchemaError);
}

TEST(ParseCorrelations, DuplicateCompositionRejected) {
    auto text = std::string(kHeader) + "LiF,LiF,1,2358,0.49,800,1300,f\nNaF,NaF,1,2755,0.6,900,1400,f\n"
                                       "a,LiF;NaF,0.5;0.5,2500,0.5,900,1200,f\nb,NaF;LiF,0.5;0.5,2501,0.5,900,1200,f\n";
    EXPECT_THROW(parse_correlations_text(text, "compound_id,molar_mass_g_mol\nLiF,25.9\nNaF,42\n"), DuplicateError);
}

TEST(ParseCorrelations, CompoundWithoutPureCorrelation) {
    auto text = std::string(kHeader) + "LiF,LiF,1,2358,0.49,800,1300,f\n";
    EXPECT_THROW(parse_correlations_text(text, "compound_id,molar_mass_g_mol\nLiF,25.9\nNaF,42\n"), ValidationError);
}

TEST(ParseCorrelations, RoundTripIsIdentical) {
    auto db = parse_correlations_text(five_rows(), kComponents);
    auto again = parse_correlations_text(correlations_to_csv(db), components_to_csv(db));
    EXPECT_TRUE(db == again);
    EXPECT_EQ(correlations_to_csv(again), correlations_to_csv(db));
    EXPECT_EQ(components_to_csv(again), components_to_csv(db));
}

TEST(ParseCorrelations, MissingFileNamesPath) {
    auto what = error_of<DataError>([] { parse_correlations("/no/such/correlations.csv", "/no/such/c.csv"); });
    EXPECT_NE(what.find("/no/such/correlations.csv"), std::string::npos);
}

TEST(ParseRk, SingleRow) {
    auto set = parse_rk_coefficients_text("comp_a,comp_b,j,A_j,B_j\nLiF,NaF,1,5,0.001\n");
    ASSERT_EQ(set.size(), 1u);
    const auto* p = set.find("NaF", "LiF");
    ASSERT_NE(p, nullptr);
    EXPECT_EQ(p->terms.size(), 1u);
    EXPECT_EQ(p->terms[0].a, 5.0);
    EXPECT_EQ(p->terms[0].b, 0.001);
}

TEST(ParseRk, GapInTermsRejected) {
    EXPECT_THROW(parse_rk_coefficients_text("comp_a,comp_b,j,A_j,B_j\nLiF,NaF,1,5,0\nLiF,NaF,3,1,0\n"), ParseError);
    EXPECT_THROW(parse_rk_coefficients_text("comp_a,comp_b,j,A_j,B_j\nLiF,NaF,0,5,0\n"), ParseError);
    EXPECT_THROW(parse_rk_coefficients_text("comp_a,comp_b,j,A_j,B_j\nLiF,LiF,1,5,0\n"), ParseError);
}

TEST(ParseRk, TermsSortedByJ) {
    auto set = parse_rk_coefficients_text("comp_a,comp_b,j,A_j,B_j\nLiF,NaF,2,7,0\nLiF,NaF,1,5,0\n");
    const auto* p = set.find("LiF", "NaF");
    EXPECT_EQ(p->terms[0].a, 5.0);
    EXPECT_EQ(p->terms[1].a, 7.0);
}

TEST(ParseRk, ReversedPairNormalizedWithWarning) {
    Warnings w;
    auto set = parse_rk_coefficients_text("comp_a,comp_b,j,A_j,B_j\nNaF,LiF,1,5,0.1\nNaF,LiF,2,7,0.2\nNaF,LiF,3,9,0.3\n", &w);
    ASSERT_EQ(w.size(), 1u);
    EXPECT_NE(w[0].find("LiF-NaF"), std::string::npos);
    const auto* p = set.find("LiF", "NaF");
    EXPECT_EQ(p->comp_a, "LiF");
    EXPECT_EQ(p->terms[0].a, 5.0);
    EXPECT_EQ(p->terms[1].a, -7.0);
    EXPECT_EQ(p->terms[1].b, -0.2);
    EXPECT_EQ(p->terms[2].a, 9.0);
    // writing and re-reading the normalized set is a fixed point
    auto text = rk_coefficients_to_csv(set);
    Warnings w2;
    auto again = parse_rk_coefficients_text(text, &w2);
    EXPECT_TRUE(again == set);
    EXPECT_TRUE(w2.empty());
    EXPECT_EQ(rk_coefficients_to_csv(again), text);
}

TEST(ParseRk, ConflictingOrdersRejected) {
    EXPECT_THROW(parse_rk_coefficients_text("comp_a,comp_b,j,A_j,B_j\nLiF,NaF,1,5,0\nNaF,LiF,1,6,0\n"), ConflictError);
    EXPECT_THROW(parse_rk_coefficients_text("comp_a,comp_b,j,A_j,B_j\nLiF,NaF,2,5,0\nNaF,LiF,2,5,0\nLiF,NaF,1,1,0\n"),
                 ConflictError);
    // consistent restatement (odd power negated) is accepted
    EXPECT_NO_THROW(
        parse_rk_coefficients_text("comp_a,comp_b,j,A_j,B_j\nLiF,NaF,1,1,0\nLiF,NaF,2,5,0\nNaF,LiF,2,-5,0\n"));
}

TEST(ParseSystems, Basics) {
    auto s = parse_systems_text("system_id,components\nFLiNaK,LiF;NaF;KF\n");
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].component_ids.size(), 3u);
    EXPECT_THROW(parse_systems_text("system_id,components\nX,LiF\n"), ParseError);
    EXPECT_THROW(parse_systems_text("system_id,components\nX,LiF;LiF\n"), ParseError);
    EXPECT_THROW(parse_systems_text("system_id,components\nX,LiF;NaF\nX,LiF;KF\n"), DuplicateError);
}

TEST(ParseDescriptors, ToyTable) {
    auto t = parse_descriptors_text("@names a b c d e f g h\nLiF 1 2 3 4 5 6 7 8\nNaF,1,2,3,4,5,6,7,9\n");
    EXPECT_EQ(t.raw_dim(), 8u);
    EXPECT_EQ(t.compound_count(), 2u);
    EXPECT_EQ(t.values.at("NaF")[7], 9.0);
    auto again = parse_descriptors_text(descriptors_to_text(t));
    EXPECT_TRUE(again == t);
}

TEST(ParseDescriptors, LengthMismatchIsSchemaError) {
    EXPECT_THROW(parse_descriptors_text("@names a b c d e f g h\nLiF 1 2 3 4 5 6 7 8\nNaF 1 2 3 4 5 6 7\n"),
                 SchemaError);
    EXPECT_THROW(parse_descriptors_text("LiF 1 2\n"), SchemaError);
}

TEST(ParseDescriptors, NonFiniteNamesCompoundAndIndex) {
    auto what = error_of<DataError>([] { parse_descriptors_text("@names a b c\nLiF 1 nan 3\n"); });
    EXPECT_NE(what.find("LiF"), std::string::npos);
    EXPECT_NE(what.find("index 1"), std::string::npos);
    EXPECT_THROW(parse_descriptors_text("@names a b c\nLiF 1 inf 3\n"), DataError);
    EXPECT_THROW(parse_descriptors_text("@names a b c\nLiF 1 x 3\n"), ParseError);
    EXPECT_THROW(parse_descriptors_text("@names a b\nLiF 1 2\nLiF 1 2\n"), DuplicateError);
}

TEST(ParseDescriptors, FullScaleWidth) {
    Rng rng(4);
    auto t = random_table(rng, 3, 1557);
    auto parsed = parse_descriptors_text(descriptors_to_text(t));
    EXPECT_EQ(parsed.raw_dim(), 1557u);
}

TEST(Downselect, ConstantColumnDropped) {
    auto t = parse_descriptors_text("@names a b c\nA 1 5 0.1\nB 2 5 0.7\nC 4 5 0.2\n");
    auto sel = downselect_descriptors(t, {0.0, 0.95, 134});
    EXPECT_EQ(std::count(sel.selected_indices.begin(), sel.selected_indices.end(), 1u), 0);
}

TEST(Downselect, ConstantColumnWithInexactMeanDropped) {
    auto t = parse_descriptors_text("@names a b\nA 1 0.1\nB 2 0.1\nC 4 0.1\nD 3 0.1\nE 9 0.1\n");
    auto sel = downselect_descriptors(t, {0.0, 0.95, 134});
    EXPECT_EQ(sel.selected_indices, std::vector<std::size_t>{0});
}

TEST(Downselect, DuplicatedColumnsKeepOne) {
    auto t = parse_descriptors_text("@names a b c\nA 1 1 3\nB 2 2 1\nC 4 4 2\n");
    auto sel = downselect_descriptors(t, {0.0, 0.95, 134});
    EXPECT_EQ(sel.selected_indices, (std::vector<std::size_t>{0, 2}));
}

TEST(Downselect, MatchesBruteForceOnToyTable) {
    Rng rng(2024);
    auto t = random_table(rng, 4, 10);
    DownselectConfig cfg{0.0, 0.95, 6};
    auto sel = downselect_descriptors(t, cfg);
    EXPECT_EQ(sel.selected_indices, brute_force_selection(t, cfg));
}

TEST(Downselect, MatchesBruteForceOnRandomTables) {
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 2 + uniform_index(rng, 8), d = 1 + uniform_index(rng, 30);
        auto t = random_table(rng, n, d);
        // add some exact duplicates and constants
        for (auto& [id, v] : t.values) {
            if (d > 3) v[3] = v[0] * 2.0 + 1.0;
            if (d > 5) v[5] = 7.0;
        }
        DownselectConfig cfg{uniform(rng, 0.0, 2.0), uniform(rng, 0.5, 0.99), 1 + uniform_index(rng, 12)};
        EXPECT_EQ(downselect_descriptors(t, cfg).selected_indices, brute_force_selection(t, cfg)) << trial;
    }
}

TEST(Downselect, ShortfallWarns) {
    auto t = parse_descriptors_text("@names a b c\nA 1 5 0.1\nB 2 5 0.7\nC 4 5 0.2\n");
    Warnings w;
    auto sel = downselect_descriptors(t, {0.0, 0.95, 134}, &w);
    EXPECT_TRUE(sel.shortfall);
    EXPECT_EQ(w.size(), 1u);
}

TEST(Downselect, StatisticsAreStored) {
    auto t = parse_descriptors_text("@names a\nA 1\nB 3\n");
    auto sel = downselect_descriptors(t);
    ASSERT_EQ(sel.size(), 1u);
    EXPECT_EQ(sel.means[0], 2.0);
    EXPECT_EQ(sel.stddevs[0], 1.0);
    EXPECT_EQ(sel.names[0], "a");
}

TEST(Downselect, NeedsTwoCompounds) {
    auto t = parse_descriptors_text("@names a b\nA 1 2\n");
    EXPECT_THROW(downselect_descriptors(t), ValidationError);
}

TEST(Downselect, DeterministicDigest) {
    Rng rng(7);
    auto t = random_table(rng, 6, 40);
    auto a = downselect_descriptors(t, {0.0, 0.9, 10});
    auto b = downselect_descriptors(t, {0.0, 0.9, 10});
    EXPECT_EQ(a.provenance_digest(), b.provenance_digest());
    EXPECT_NE(a.provenance_digest(), downselect_descriptors(t, {0.0, 0.9, 11}).provenance_digest());
}

TEST(Downselect, InvariantToCompoundOrdering) {
    Rng rng(8);
    auto t = random_table(rng, 6, 40);
    // relabel compounds so that the table iterates them in a different order
    DescriptorTable relabeled;
    relabeled.names = t.names;
    std::vector<std::string> labels{"Z", "Y", "X", "W", "V", "U"};
    std::size_t i = 0;
    for (const auto& [id, v] : t.values) relabeled.values[labels[i++]] = v;
    auto a = downselect_descriptors(t, {0.0, 0.9, 10});
    auto b = downselect_descriptors(relabeled, {0.0, 0.9, 10});
    EXPECT_EQ(a.selected_indices, b.selected_indices);
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_NEAR(a.means[k], b.means[k], 1e-12 * (1 + std::abs(a.means[k])));
        EXPECT_NEAR(a.stddevs[k], b.stddevs[k], 1e-12 * a.stddevs[k]);
    }
}
