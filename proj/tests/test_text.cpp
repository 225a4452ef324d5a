#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "msdensity/digest.hpp"
#include "msdensity/error.hpp"
#include "msdensity/random.hpp"
#include "msdensity/text.hpp"

using namespace msd;

TEST(Text, FormatDoubleRoundTrips) {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        double v = (uniform01(rng) - 0.5) * std::pow(10.0, uniform(rng, -20, 20));
        EXPECT_EQ(*parse_double(format_double(v)), v);
    }
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(3000.0), "3000");
}

TEST(Text, StrictNumberParsing) {
    EXPECT_EQ(*parse_double("+1.5"), 1.5);
    EXPECT_EQ(*parse_double(" 2e3 "), 2000.0);
    EXPECT_FALSE(parse_double("1.5x"));
    EXPECT_FALSE(parse_double(""));
    EXPECT_FALSE(parse_double("1,5"));
    EXPECT_EQ(*parse_int("42"), 42);
    EXPECT_FALSE(parse_int("4.2"));
}

TEST(Text, SplitFields) {
    auto f = split_fields("LiF  1.0,2.5 ,\t3");
    ASSERT_EQ(f.size(), 4u);
    EXPECT_EQ(f[0], "LiF");
    EXPECT_EQ(f[3], "3");
    auto s = split("a; b ;c", ';');
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[1], "b");
}

TEST(Csv, SkipsCommentsAndReportsLines) {
    auto t = parse_csv("# note\na,b\n\n1,2\n3,4\n", "mem");
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[1].line, 5u);
    EXPECT_EQ(t.column("b"), 1u);
    EXPECT_THROW(t.column("c"), SchemaError);
    try {
        parse_csv("a,b\n1,2\n3\n", "mem");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(KeyedText, RoundTrip) {
    KeyedText doc("thing", 2);
    doc.set("alpha", 0.1);
    doc.set("name", std::string("LiF NaF"));
    doc.set_int("count", 7);
    auto back = KeyedText::parse(doc.serialize(), "mem");
    EXPECT_EQ(back.kind(), "thing");
    EXPECT_EQ(back.version(), 2);
    EXPECT_EQ(back.get_double("alpha"), 0.1);
    EXPECT_EQ(back.get("name"), "LiF NaF");
    EXPECT_EQ(back.get_int("count"), 7);
    EXPECT_EQ(back.serialize(), doc.serialize());
    EXPECT_THROW(back.get("missing"), ParseError);
    EXPECT_THROW(KeyedText::parse("thing 1\na = 1\na = 2\n", "mem"), ParseError);
}

TEST(Files, MissingFileIsDataErrorNamingPath) {
    try {
        read_file("/nonexistent/dir/file.csv");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/file.csv"), std::string::npos);
    }
}

TEST(Digest, KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    Sha256 h;
    h.update("a").update("bc");
    EXPECT_EQ(h.finish(), sha256_hex("abc"));
}

TEST(Random, SequenceIsFixedBySeed) {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(uniform01(a), uniform01(b));
    // mt19937_64 with the default seed: the 10000th output is fixed by the standard
    std::mt19937_64 ref;
    ref.discard(9999);
    EXPECT_EQ(ref(), 9981545732273789042ULL);
}

TEST(Random, HelpersStayInRange) {
    Rng rng(9);
    for (int i = 0; i < 10000; ++i) {
        double u = uniform01(rng);
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        EXPECT_LT(uniform_index(rng, 7), 7u);
        EXPECT_TRUE(std::isfinite(standard_normal(rng)));
    }
}

TEST(Random, ShuffleIsPermutation) {
    Rng rng(1);
    std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    shuffle(v, rng);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 10; ++i) EXPECT_EQ(sorted[i], i);
}
