#include <doctest.h>

#include <cstdlib>
#include <set>

#include "cart_oracle.hpp"
#include "koos/error.hpp"
#include "koos/forest.hpp"
#include "koos/gzip.hpp"
#include "koos/rng.hpp"

using namespace koos;
using features::CaseRecord;
using features::FeatureVector;
using forest::ForestModel;
using forest::ForestParams;

namespace {

CaseRecord record(const std::string& id, const std::array<double, 9>& x, int grade) {
    CaseRecord r;
    r.case_id = id;
    r.features = FeatureVector::from_array(x);
    r.grade = grade;
    return r;
}

std::vector<CaseRecord> random_records(SplitMix64& rng, std::size_t n, int classes = 4) {
    std::vector<CaseRecord> records;
    for (std::size_t i = 0; i < n; ++i) {
        std::array<double, 9> x{};
        for (auto& v : x) v = rng.uniform(-5.0, 5.0);
        char id[16];
        std::snprintf(id, sizeof(id), "r%03zu", i);
        records.push_back(record(id, x, 1 + static_cast<int>(rng.bounded(
                                              static_cast<std::uint64_t>(classes)))));
    }
    // Guarantee at least two classes.
    if (records.size() >= 2) {
        records[0].grade = 1;
        records[1].grade = 2;
    }
    return records;
}

ForestModel leaf_vote_model(const std::vector<int>& votes) {
    ForestModel m;
    m.params.n_trees = static_cast<int>(votes.size());
    for (int f = 0; f < features::kFeatureCount; ++f)
        m.feature_names[static_cast<std::size_t>(f)] =
            std::string(features::kFeatureNames[static_cast<std::size_t>(f)]);
    for (int v : votes) {
        forest::Tree t;
        forest::TreeNode leaf;
        leaf.class_counts[static_cast<std::size_t>(v - 1)] = 5;
        t.nodes.push_back(leaf);
        m.trees.push_back(t);
    }
    return m;
}

} // namespace

TEST_CASE("default hyperparameters") {
    ForestParams defaults;
    CHECK(defaults.n_trees == 100000);
    CHECK(defaults.max_depth == 5);
    CHECK(defaults.min_samples_leaf == 2);
    CHECK(defaults.mtry == 3); // floor(sqrt(9 features))
    CHECK(defaults.bootstrap);
}

TEST_CASE("best_split worked example: f=(1,2,3,4), y=(1,1,2,2)") {
    std::vector<std::array<double, 9>> rows(4);
    for (std::size_t i = 0; i < 4; ++i) {
        rows[i].fill(7.0); // constant elsewhere: no other feature can split
        rows[i][2] = static_cast<double>(i + 1);
    }
    std::vector<int> grades = {1, 1, 2, 2};
    std::vector<std::size_t> members = {0, 1, 2, 3};
    std::array<int, 9> all{};
    for (int f = 0; f < 9; ++f) all[static_cast<std::size_t>(f)] = f;

    for (int min_leaf : {1, 2}) {
        auto split = forest::best_split(rows, grades, members, all, min_leaf);
        REQUIRE(split.has_value());
        CHECK(split->feature == 2);
        CHECK(split->threshold == 2.5);
        CHECK(split->impurity_decrease == doctest::Approx(0.5).epsilon(1e-15));
    }
}

TEST_CASE("best_split tie-breaks to the lowest feature then lowest threshold") {
    // Feature 1 and feature 4 are identical copies; both split perfectly.
    std::vector<std::array<double, 9>> rows(4);
    for (std::size_t i = 0; i < 4; ++i) {
        rows[i].fill(0.0);
        rows[i][1] = static_cast<double>(i);
        rows[i][4] = static_cast<double>(i);
    }
    std::vector<int> grades = {1, 1, 3, 3};
    std::vector<std::size_t> members = {0, 1, 2, 3};
    std::array<int, 9> all{};
    for (int f = 0; f < 9; ++f) all[static_cast<std::size_t>(f)] = f;

    auto split = forest::best_split(rows, grades, members, all, 1);
    REQUIRE(split.has_value());
    CHECK(split->feature == 1);
    CHECK(split->threshold == 1.5);

    // Two equally good thresholds on one feature: 4 samples (1,2,3,4) with
    // classes (1,2,1,2) - thresholds 1.5 and 3.5 both give decrease 1/6;
    // the lower one wins.
    for (std::size_t i = 0; i < 4; ++i) {
        rows[i].fill(0.0);
        rows[i][0] = static_cast<double>(i + 1);
    }
    grades = {1, 2, 1, 2};
    split = forest::best_split(rows, grades, members, all, 1);
    REQUIRE(split.has_value());
    CHECK(split->feature == 0);
    CHECK(split->threshold == 1.5);
}

TEST_CASE("best_split respects min_samples_leaf and degenerate columns") {
    std::vector<std::array<double, 9>> rows(4);
    for (std::size_t i = 0; i < 4; ++i) {
        rows[i].fill(1.0);
        rows[i][0] = i < 3 ? 0.0 : 1.0; // only split puts 3|1
    }
    std::vector<int> grades = {1, 1, 1, 2};
    std::vector<std::size_t> members = {0, 1, 2, 3};
    std::array<int, 9> all{};
    for (int f = 0; f < 9; ++f) all[static_cast<std::size_t>(f)] = f;

    CHECK(forest::best_split(rows, grades, members, all, 1).has_value());
    CHECK_FALSE(forest::best_split(rows, grades, members, all, 2).has_value());

    // All-constant features: nothing to split on.
    for (auto& r : rows) r.fill(3.0);
    CHECK_FALSE(forest::best_split(rows, grades, members, all, 1).has_value());
}

TEST_CASE("train: separable data is learned by every tree") {
    // Feature 0 separates the grades with a wide margin; everything else is
    // constant noise-free filler, mtry=9 so every root sees feature 0.
    std::vector<CaseRecord> records;
    for (int i = 0; i < 8; ++i) {
        std::array<double, 9> x{};
        x.fill(1.0);
        x[0] = i < 4 ? static_cast<double>(i) : 10.0 + i;
        records.push_back(record("c" + std::to_string(i), x, i < 4 ? 1 : 2));
    }
    ForestParams params;
    params.n_trees = 25;
    params.max_depth = 5;
    params.min_samples_leaf = 2;
    params.mtry = 9;
    params.seed = 7;

    ForestModel model = forest::train(records, params);
    REQUIRE(model.trees.size() == 25);
    for (const auto& tree : model.trees) {
        REQUIRE_FALSE(tree.nodes[0].is_leaf());
        CHECK(tree.nodes[0].feature == 0);
    }
    for (const auto& r : records) CHECK(forest::predict(model, r.features) == *r.grade);

    // The no-bootstrap single tree must equal the exhaustive oracle.
    params.n_trees = 1;
    params.bootstrap = false;
    ForestModel single = forest::train(records, params);
    auto oracle = testing::cart_oracle_tree(records, params.max_depth, params.min_samples_leaf);
    CHECK(testing::same_tree(oracle.get(), single.trees[0]));
}

TEST_CASE("train determinism: identical calls and thread counts") {
    SplitMix64 rng(55);
    std::vector<CaseRecord> records = random_records(rng, 40);
    ForestParams params;
    params.n_trees = 30;
    params.seed = 99;

    auto bytes_a = forest::save_model(forest::train(records, params));
    auto bytes_b = forest::save_model(forest::train(records, params));
    CHECK(bytes_a == bytes_b);

    setenv("KOOS_THREADS", "4", 1);
    auto bytes_threaded = forest::save_model(forest::train(records, params));
    setenv("KOOS_THREADS", "1", 1);
    auto bytes_serial = forest::save_model(forest::train(records, params));
    unsetenv("KOOS_THREADS");
    CHECK(bytes_threaded == bytes_a);
    CHECK(bytes_serial == bytes_a);

    // Record order must not matter: train sorts by case_id.
    std::vector<CaseRecord> shuffled(records.rbegin(), records.rend());
    CHECK(forest::save_model(forest::train(shuffled, params)) == bytes_a);
}

TEST_CASE("train input validation") {
    ForestParams params;
    params.n_trees = 3;

    std::vector<CaseRecord> one = {record("a", {}, 1)};
    CHECK_THROWS_AS(forest::train(one, params), Error);

    std::vector<CaseRecord> same_class = {record("a", {1}, 2), record("b", {2}, 2),
                                          record("c", {3}, 2)};
    try {
        forest::train(same_class, params);
        FAIL("expected SingleClass");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::single_class);
    }

    std::vector<CaseRecord> unlabeled = {record("a", {1}, 1), record("b", {2}, 2)};
    unlabeled[1].grade.reset();
    CHECK_THROWS_AS(forest::train(unlabeled, params), Error);
}

TEST_CASE("predict vote aggregation and tie rules") {
    FeatureVector fv;
    CHECK(forest::predict(leaf_vote_model({2, 2, 3}), fv) == 2);
    CHECK(forest::predict(leaf_vote_model({1, 1, 4, 4}), fv) == 1); // tie -> lowest grade
    CHECK(forest::predict(leaf_vote_model({3}), fv) == 3);          // degenerate ensemble

    // Leaf tie resolves to the lowest grade before voting.
    ForestModel m = leaf_vote_model({1});
    m.trees[0].nodes[0].class_counts = {0, 3, 3, 0};
    CHECK(forest::predict(m, fv) == 2);
}

TEST_CASE("predict_distribution matches votes and predict") {
    FeatureVector fv;
    auto dist = forest::predict_distribution(leaf_vote_model({2, 2, 3}), fv);
    CHECK(dist == std::array<double, 4>{0.0, 2.0 / 3.0, 1.0 / 3.0, 0.0});
    CHECK(forest::predict_distribution(leaf_vote_model({4, 4, 4}), fv) ==
          std::array<double, 4>{0.0, 0.0, 0.0, 1.0});

    SplitMix64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<CaseRecord> records = random_records(rng, 12 + rng.bounded(20));
        ForestParams params;
        params.n_trees = 5 + static_cast<int>(rng.bounded(10));
        params.seed = rng.next();
        ForestModel model = forest::train(records, params);

        std::array<double, 9> probe{};
        for (auto& v : probe) v = rng.uniform(-5.0, 5.0);
        FeatureVector q = FeatureVector::from_array(probe);
        auto d = forest::predict_distribution(model, q);
        double sum = d[0] + d[1] + d[2] + d[3];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        int argmax = 0;
        for (int c = 1; c < 4; ++c)
            if (d[static_cast<std::size_t>(c)] > d[static_cast<std::size_t>(argmax)]) argmax = c;
        CHECK(forest::predict(model, q) == argmax + 1);
    }
}

TEST_CASE("model persistence") {
    SplitMix64 rng(7777);
    std::vector<CaseRecord> records = random_records(rng, 30);
    ForestParams params;
    params.n_trees = 2;
    params.seed = 5;
    ForestModel model = forest::train(records, params);

    SUBCASE("round trip predicts identically on random vectors") {
        auto bytes = forest::save_model(model);
        ForestModel back = forest::load_model(bytes);
        for (int i = 0; i < 1000; ++i) {
            std::array<double, 9> x{};
            for (auto& v : x) v = rng.uniform(-10.0, 10.0);
            FeatureVector q = FeatureVector::from_array(x);
            CHECK(forest::predict(back, q) == forest::predict(model, q));
        }
    }
    SUBCASE("save is byte-deterministic and gzip round-trips") {
        CHECK(forest::save_model(model) == forest::save_model(model));
        auto zipped = forest::save_model(model, true);
        REQUIRE(gz::is_gzip(zipped));
        ForestModel back = forest::load_model(zipped);
        CHECK(forest::save_model(back) == forest::save_model(model));
    }
    SUBCASE("malformed documents are rejected") {
        auto expect_malformed = [](const std::string& text) {
            try {
                forest::load_model(std::vector<std::uint8_t>(text.begin(), text.end()));
                FAIL("expected MalformedModel for: " << text);
            } catch (const Error& e) {
                CHECK(e.code() == Errc::malformed_model);
            }
        };
        expect_malformed("not json at all");
        expect_malformed("{}");
        expect_malformed(R"({"class_labels":[1,2,3],"feature_names":[],"format_version":1,)"
                         R"("params":{},"trees":[]})");

        std::string good(reinterpret_cast<const char*>(forest::save_model(model).data()),
                         forest::save_model(model).size());
        // feature index out of range
        auto broken = good;
        std::size_t pos = broken.find("\"f\":");
        REQUIRE(pos != std::string::npos);
        broken.replace(pos, 6, "\"f\":12");
        expect_malformed(broken);
        // trees length no longer matches params.n_trees
        auto truncated = good;
        pos = truncated.find("\"n_trees\":2");
        REQUIRE(pos != std::string::npos);
        truncated.replace(pos, 11, "\"n_trees\":3");
        expect_malformed(truncated);
    }
}

TEST_CASE("single no-bootstrap tree equals the exhaustive CART oracle") {
    SplitMix64 rng(2718);
    for (int trial = 0; trial < 10; ++trial) {
        std::size_t n = 10 + rng.bounded(41); // <= 50 samples
        std::vector<CaseRecord> records = random_records(rng, n);
        // Inject duplicate feature values so threshold enumeration and ties
        // actually get exercised.
        for (auto& r : records) {
            auto x = r.features.as_array();
            for (auto& v : x) v = std::round(v * 2.0) / 2.0;
            r.features = FeatureVector::from_array(x);
        }

        ForestParams params;
        params.n_trees = 1;
        params.bootstrap = false;
        params.mtry = 9;
        params.max_depth = 4 + static_cast<int>(rng.bounded(3));
        params.min_samples_leaf = 1 + static_cast<int>(rng.bounded(3));
        params.seed = rng.next();

        ForestModel model = forest::train(records, params);
        auto oracle = testing::cart_oracle_tree(records, params.max_depth, params.min_samples_leaf);
        CHECK(testing::same_tree(oracle.get(), model.trees[0]));
    }
}

TEST_CASE("strictly increasing transforms of one feature leave predictions unchanged") {
    SplitMix64 rng(31415);
    std::vector<CaseRecord> train_records = random_records(rng, 50);
    std::vector<FeatureVector> probes;
    for (int i = 0; i < 40; ++i) {
        std::array<double, 9> x{};
        for (auto& v : x) v = rng.uniform(-5.0, 5.0);
        probes.push_back(FeatureVector::from_array(x));
    }

    ForestParams params;
    params.n_trees = 60;
    params.seed = 4;
    ForestModel base = forest::train(train_records, params);

    const int column = 3;
    auto cube = [&](FeatureVector fv) {
        auto x = fv.as_array();
        x[column] = x[column] * x[column] * x[column];
        return FeatureVector::from_array(x);
    };
    std::vector<CaseRecord> transformed = train_records;
    for (auto& r : transformed) r.features = cube(r.features);
    ForestModel warped = forest::train(transformed, params);

    for (const auto& r : train_records)
        CHECK(forest::predict(base, r.features) == forest::predict(warped, cube(r.features)));
    for (const auto& q : probes)
        CHECK(forest::predict(base, q) == forest::predict(warped, cube(q)));
}

TEST_CASE("no leaf from a real split is smaller than min_samples_leaf") {
    SplitMix64 rng(909);
    std::vector<CaseRecord> records = random_records(rng, 60);
    ForestParams params;
    params.n_trees = 20;
    params.min_samples_leaf = 3;
    params.seed = 11;
    ForestModel model = forest::train(records, params);

    for (const auto& tree : model.trees)
        for (const auto& node : tree.nodes) {
            if (node.is_leaf()) continue;
            for (std::int32_t child : {node.left, node.right}) {
                const auto& counts =
                    tree.nodes[static_cast<std::size_t>(child)].class_counts;
                std::uint64_t total = 0;
                for (auto c : counts) total += c;
                CHECK(total >= 3);
            }
        }
}
