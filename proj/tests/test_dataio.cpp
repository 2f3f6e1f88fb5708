#include <gtest/gtest.h>

#include "lmfcc/dataio.hpp"
#include "support/test_support.hpp"

using namespace lmfcc;
using namespace lmfcc::dataio;
using lmfcc::testing::TempDir;
using lmfcc::testing::write_file;

namespace {

RawTable table_from(const std::string& text, const std::string& label = "label") {
    TempDir dir;
    write_file(dir.file("t.csv"), text);
    return load_table(dir.file("t.csv"), ',', label);
}

Dataset dataset_with_counts(std::size_t n_neg, std::size_t n_pos) {
    Dataset d;
    d.features = Matrix(n_neg + n_pos, 2);
    d.feature_names = {"a", "b"};
    for (std::size_t i = 0; i < n_neg + n_pos; ++i) {
        d.features(i, 0) = static_cast<double>(i);
        d.features(i, 1) = static_cast<double>(i * i) * 0.5;
        d.labels.push_back(i < n_neg ? 0 : 1);
        d.row_ids.push_back(i);
    }
    return d;
}

}  // namespace

TEST(LoadTable, ParsesHeaderAndRows) {
    auto t = table_from("a,b,label\n1,2,normal\n3,4,attack\n");
    EXPECT_EQ(t.n_rows, 2u);
    EXPECT_EQ(t.n_cols(), 3u);
    EXPECT_EQ(t.label().name, "label");
    EXPECT_EQ(t.label().text[1], "attack");
    EXPECT_DOUBLE_EQ(t.columns[1].numbers[1], 4.0);
}

TEST(LoadTable, RaggedRowNamesTheRow) {
    try {
        table_from("a,b,label\n1,2\n");
        FAIL() << "expected a ragged-row error";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
    }
}

TEST(LoadTable, MissingLabelColumnIsConfigError) {
    EXPECT_THROW(table_from("a,b,class\n1,2,normal\n"), ConfigError);
}

TEST(LoadTable, MissingFile) {
    EXPECT_THROW(load_table("/nonexistent/lmfcc.csv", ',', "label"), DataError);
}

TEST(LoadTable, HeaderlessWithColumnNames) {
    TempDir dir;
    write_file(dir.file("t.txt"), "0,tcp,normal,20\n1,udp,neptune,15\n");
    auto t = load_table(dir.file("t.txt"), ',', "label", {"duration", "proto", "label", "difficulty"});
    EXPECT_EQ(t.n_rows, 2u);
    EXPECT_TRUE(t.columns[1].is_text);
    EXPECT_EQ(t.label_index, 2u);
}

TEST(LoadTable, NonFiniteSpellingsAreNumeric) {
    auto t = table_from("a,b,label\ninf,NaN,normal\nInfinity,,attack\n");
    EXPECT_FALSE(t.columns[0].is_text);
    EXPECT_TRUE(std::isinf(t.columns[0].numbers[1]));
    EXPECT_TRUE(std::isnan(t.columns[1].numbers[1]));
}

TEST(CleanColumns, DropsNanColumn) {
    auto t = table_from("x,y,label\n1,1,normal\nnan,2,attack\n3,3,normal\n");
    std::vector<DroppedColumn> audit;
    auto c = clean_columns(t, 0.5, &audit);
    ASSERT_EQ(c.n_cols(), 2u);
    EXPECT_EQ(c.columns[0].name, "y");
    ASSERT_EQ(audit.size(), 1u);
    EXPECT_EQ(audit[0].reason, "nan/inf");
}

TEST(CleanColumns, ZeroFractionIsStrictlyGreater) {
    auto t = table_from("z,k,label\n0,0,normal\n0,1,attack\n5,2,normal\n");
    std::vector<DroppedColumn> audit;
    auto c = clean_columns(t, 0.5, &audit);
    // z has 2/3 zeros (dropped), k has 1/3 (kept)
    ASSERT_EQ(audit.size(), 1u);
    EXPECT_EQ(audit[0].name, "z");
    EXPECT_EQ(audit[0].reason, "zero-fraction");
    EXPECT_EQ(c.columns[0].name, "k");

    auto half = table_from("h,label\n0,normal\n1,attack\n");
    EXPECT_NO_THROW(clean_columns(half, 0.5));  // exactly 0.5 is kept
}

TEST(CleanColumns, AllFeaturesDroppedIsError) {
    auto t = table_from("z,label\n0,normal\n0,attack\n");
    EXPECT_THROW(clean_columns(t, 0.5), DataError);
}

TEST(CleanColumns, Idempotent) {
    auto t = table_from("a,b,c,d,label\n0,1,nan,2,normal\n0,0,1,3,attack\n1,2,3,0,normal\n0,5,1,1,attack\n");
    auto once = clean_columns(t, 0.5);
    auto twice = clean_columns(once, 0.5);
    EXPECT_EQ(once.column_names(), twice.column_names());
    EXPECT_EQ(once.label_index, twice.label_index);
}

TEST(EncodeLabels, MapsLabels) {
    auto t = table_from("a,label\n1,normal\n2,attack\n3,normal\n");
    auto d = encode_labels(t, LabelMap{{"attack"}, {"normal"}});
    EXPECT_EQ(d.labels, (std::vector<int>{0, 1, 0}));
    EXPECT_EQ(d.row_ids, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(EncodeLabels, CategoryListedPositive) {
    auto t = table_from("a,label\n1,Mirai\n2,Normal\n");
    auto d = encode_labels(t, LabelMap{{"Mirai", "DDoS"}, {"Normal"}});
    EXPECT_EQ(d.labels[0], 1);
}

TEST(EncodeLabels, UnknownLabelNamesValue) {
    auto t = table_from("a,label\n1,normal\n2,unknown\n");
    try {
        encode_labels(t, LabelMap{{"attack"}, {"normal"}});
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("unknown"), std::string::npos);
    }
}

TEST(EncodeLabels, TextColumnsAreIntegerEncodedByFirstAppearance) {
    auto t = table_from("proto,x,label\nudp,1,normal\ntcp,2,attack\nudp,3,normal\nicmp,4,attack\n");
    auto d = encode_labels(t, LabelMap{{"attack"}, {"normal"}});
    EXPECT_EQ(d.features(0, 0), 0.0);
    EXPECT_EQ(d.features(1, 0), 1.0);
    EXPECT_EQ(d.features(2, 0), 0.0);
    EXPECT_EQ(d.features(3, 0), 2.0);
}

TEST(EncodeLabels, MixedColumnNamesColumnAndRow) {
    auto t = table_from("x,label\n1,normal\nabc,attack\n");
    try {
        encode_labels(t, LabelMap{{"attack"}, {"normal"}});
        FAIL();
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("'x'"), std::string::npos) << msg;
        EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
    }
}

TEST(LabelMap, OverlapRejected) {
    EXPECT_THROW((LabelMap{{"a", "b"}, {"b"}}.validate()), ConfigError);
}

TEST(MinMax, ScalesColumnsAndHandlesConstants) {
    Dataset d;
    d.features = Matrix(3, 2);
    d.features.data = {2, 7, 4, 7, 6, 7};
    d.labels = {0, 1, 0};
    d.row_ids = {0, 1, 2};
    d.feature_names = {"a", "c"};
    auto n = minmax_normalize(d);
    EXPECT_DOUBLE_EQ(n.features(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(n.features(1, 0), 0.5);
    EXPECT_DOUBLE_EQ(n.features(2, 0), 1.0);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(n.features(i, 1), 0.0);
    ASSERT_TRUE(n.normalizer.has_value());
    EXPECT_EQ((*n.normalizer)[0].min, 2.0);
    EXPECT_EQ((*n.normalizer)[0].max, 6.0);
}

TEST(MinMax, HeldOutValuesAreNotClipped) {
    Dataset held;
    held.features = Matrix(1, 1);
    held.features(0, 0) = 8.0;
    held.labels = {1};
    held.row_ids = {0};
    auto n = apply_normalizer(held, {{"a", 2.0, 6.0}});
    EXPECT_DOUBLE_EQ(n.features(0, 0), 1.5);
}

TEST(Rebalance, Undersample) {
    auto d = dataset_with_counts(10, 2);
    auto r = rebalance(d, Resample::undersample_majority, 7);
    EXPECT_EQ(r.count(0), 2u);
    EXPECT_EQ(r.count(1), 2u);
}

TEST(Rebalance, OversampleRepeatsMinority) {
    auto d = dataset_with_counts(10, 2);
    auto r = rebalance(d, Resample::oversample_minority, 7);
    EXPECT_EQ(r.count(0), 10u);
    EXPECT_EQ(r.count(1), 10u);
    for (std::size_t i = 0; i < r.size(); ++i)
        if (r.labels[i] == 1) {
            EXPECT_TRUE(r.row_ids[i] == 10 || r.row_ids[i] == 11);
        }
}

TEST(Rebalance, DeterministicAndPreservesVectors) {
    auto d = dataset_with_counts(30, 7);
    for (auto s : {Resample::undersample_majority, Resample::oversample_minority}) {
        auto a = rebalance(d, s, 11), b = rebalance(d, s, 11);
        EXPECT_EQ(a.row_ids, b.row_ids);
        EXPECT_EQ(a.features, b.features);
        for (std::size_t i = 0; i < a.size(); ++i) {
            auto src = d.features.row(a.row_ids[i]);
            auto got = a.features.row(i);
            EXPECT_TRUE(std::equal(src.begin(), src.end(), got.begin()));
            EXPECT_EQ(a.labels[i], d.labels[a.row_ids[i]]);
        }
    }
}

TEST(Rebalance, SingleClassIsError) {
    auto d = dataset_with_counts(5, 0);
    EXPECT_THROW(rebalance(d, Resample::undersample_majority, 1), DataError);
}

TEST(StratifiedSplit, ProportionsAndDisjointness) {
    auto d = dataset_with_counts(50, 50);
    auto [train, test] = stratified_split(d, 0.2, 3);
    EXPECT_EQ(test.count(0), 10u);
    EXPECT_EQ(test.count(1), 10u);
    std::vector<std::size_t> all = train.row_ids;
    all.insert(all.end(), test.row_ids.begin(), test.row_ids.end());
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, d.row_ids);
}

TEST(StratifiedSplit, DeterministicUnderSeed) {
    auto d = dataset_with_counts(40, 13);
    auto a = stratified_split(d, 0.3, 99), b = stratified_split(d, 0.3, 99);
    EXPECT_EQ(a.second.row_ids, b.second.row_ids);
    auto c = stratified_split(d, 0.3, 100);
    // different seed, same per-class counts
    EXPECT_EQ(a.second.count(0), c.second.count(0));
    EXPECT_EQ(a.second.count(1), c.second.count(1));
}

TEST(StratifiedSplit, ProportionsWithinOneRowAcrossSeeds) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto d = dataset_with_counts(37 + seed, 11 + 2 * seed);
        auto [train, test] = stratified_split(d, 0.25, seed);
        const double whole = static_cast<double>(d.count(1)) / static_cast<double>(d.size());
        const double in_test = static_cast<double>(test.count(1));
        EXPECT_LE(std::abs(in_test - whole * static_cast<double>(test.size())), 1.0);
    }
}

TEST(StratifiedSplit, TooSmallToStratify) {
    auto d = dataset_with_counts(5, 5);
    EXPECT_THROW(stratified_split(d, 0.999, 1), DataError);
}

TEST(StratifiedSubsample, KeepsClassProportion) {
    auto d = dataset_with_counts(800, 200);
    auto s = stratified_subsample(d, 100, 5);
    EXPECT_EQ(s.size(), 100u);
    EXPECT_EQ(s.count(1), 20u);
}

TEST(Pipeline, CleanEncodeNormalizeInvariants) {
    auto t = table_from(
        "a,b,c,proto,label\n"
        "1,5,nan,tcp,normal\n"
        "2,0,1,udp,attack\n"
        "9,7,2,tcp,normal\n"
        "4,3,3,icmp,attack\n");
    auto d = minmax_normalize(encode_labels(clean_columns(t, 0.5), LabelMap{{"attack"}, {"normal"}}));
    EXPECT_EQ(d.width(), 3u);
    for (double v : d.features.data) {
        EXPECT_TRUE(std::isfinite(v));
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    for (int l : d.labels) EXPECT_TRUE(l == 0 || l == 1);
}

TEST(Persistence, DatasetAndNormalizerRoundTrip) {
    TempDir dir;
    auto d = minmax_normalize(dataset_with_counts(6, 4));
    write_dataset(d, dir.file("d.csv"));
    write_normalizer(*d.normalizer, dir.file("n.csv"));
    auto back = load_dataset(dir.file("d.csv"));
    EXPECT_EQ(back.features, d.features);
    EXPECT_EQ(back.labels, d.labels);
    EXPECT_EQ(back.feature_names, d.feature_names);
    auto n = read_normalizer(dir.file("n.csv"));
    ASSERT_EQ(n.size(), 2u);
    EXPECT_EQ(n[1].max, (*d.normalizer)[1].max);
}
