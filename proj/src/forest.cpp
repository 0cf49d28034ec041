#include "koos/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "koos/error.hpp"
#include "koos/gzip.hpp"
#include "koos/parallel.hpp"
#include "koos/rng.hpp"

namespace koos::forest {

namespace {

using FeatureRow = std::array<double, features::kFeatureCount>;

// Split quality is compared as the exact rational
//   sum_c count_L[c]^2 / n_L  +  sum_c count_R[c]^2 / n_R
// (maximizing it is equivalent to maximizing Gini decrease for a fixed
// parent). Keeping the comparison in integers makes the documented
// tie-breaks exact instead of float-order accidents.
struct SplitKey {
    std::uint64_t numerator = 0;   // sqL * nR + sqR * nL
    std::uint64_t denominator = 1; // nL * nR

    bool better_than(const SplitKey& other) const {
        return static_cast<unsigned __int128>(numerator) * other.denominator >
               static_cast<unsigned __int128>(other.numerator) * denominator;
    }
};

std::uint64_t sum_of_squares(const std::array<std::uint32_t, kClassCount>& counts) {
    std::uint64_t s = 0;
    for (std::uint32_t c : counts) s += static_cast<std::uint64_t>(c) * c;
    return s;
}

double gini(const std::array<std::uint32_t, kClassCount>& counts, std::uint64_t n) {
    if (n == 0) return 0.0;
    double g = 1.0;
    for (std::uint32_t c : counts) {
        double p = static_cast<double>(c) / static_cast<double>(n);
        g -= p * p;
    }
    return g;
}

struct ValueClass {
    double value;
    int cls;
};

void validate_params(const ForestParams& p) {
    if (p.n_trees < 1 || p.max_depth < 1 || p.min_samples_leaf < 1)
        fail(Errc::insufficient_data, "forest parameters must be positive");
    if (p.mtry < 1 || p.mtry > features::kFeatureCount)
        fail(Errc::insufficient_data, "mtry must be in 1..9");
}

class TreeBuilder {
public:
    TreeBuilder(std::span<const FeatureRow> rows, std::span<const int> grades,
                const ForestParams& params, SplitMix64 rng)
        : rows_(rows), grades_(grades), params_(params), rng_(rng) {}

    Tree build() {
        std::vector<std::size_t> indices(rows_.size());
        if (params_.bootstrap) {
            for (auto& i : indices) i = rng_.bounded(rows_.size());
        } else {
            for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
        }
        Tree tree;
        grow(tree, std::move(indices), 0);
        return tree;
    }

private:
    // Appends the subtree for the given samples, returns its root index.
    std::int32_t grow(Tree& tree, std::vector<std::size_t> indices, int depth) {
        std::array<std::uint32_t, kClassCount> counts{};
        for (std::size_t i : indices) ++counts[static_cast<std::size_t>(grades_[i] - 1)];

        std::int32_t node_index = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.back().class_counts = counts;

        int present = 0;
        for (std::uint32_t c : counts) present += c > 0;
        bool force_leaf = present <= 1 || depth >= params_.max_depth ||
                          indices.size() < 2 * static_cast<std::size_t>(params_.min_samples_leaf);
        if (force_leaf) return node_index;

        std::array<int, features::kFeatureCount> pool;
        for (int f = 0; f < features::kFeatureCount; ++f) pool[static_cast<std::size_t>(f)] = f;
        // Partial Fisher-Yates; the chosen subset is sorted so evaluation
        // order (and therefore tie-breaking) never depends on draw order.
        for (int k = 0; k < params_.mtry; ++k) {
            std::size_t j = static_cast<std::size_t>(k) +
                            rng_.bounded(static_cast<std::uint64_t>(features::kFeatureCount - k));
            std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
        }
        std::array<int, features::kFeatureCount> subset_storage{};
        std::span<int> subset(subset_storage.data(), static_cast<std::size_t>(params_.mtry));
        std::copy_n(pool.begin(), params_.mtry, subset.begin());
        std::sort(subset.begin(), subset.end());

        std::optional<Split> split =
            best_split(rows_, grades_, indices, subset, params_.min_samples_leaf);
        if (!split) return node_index;

        std::vector<std::size_t> left_idx, right_idx;
        left_idx.reserve(indices.size());
        right_idx.reserve(indices.size());
        for (std::size_t i : indices)
            (rows_[i][static_cast<std::size_t>(split->feature)] <= split->threshold ? left_idx
                                                                                    : right_idx)
                .push_back(i);
        indices.clear();
        indices.shrink_to_fit();

        tree.nodes[static_cast<std::size_t>(node_index)].feature =
            static_cast<std::int16_t>(split->feature);
        tree.nodes[static_cast<std::size_t>(node_index)].threshold = split->threshold;
        std::int32_t left = grow(tree, std::move(left_idx), depth + 1);
        tree.nodes[static_cast<std::size_t>(node_index)].left = left;
        std::int32_t right = grow(tree, std::move(right_idx), depth + 1);
        tree.nodes[static_cast<std::size_t>(node_index)].right = right;
        return node_index;
    }

    std::span<const FeatureRow> rows_;
    std::span<const int> grades_;
    const ForestParams& params_;
    SplitMix64 rng_;
};

const TreeNode& leaf_for(const Tree& tree, const FeatureRow& row) {
    const TreeNode* node = &tree.nodes[0];
    while (!node->is_leaf()) {
        bool go_left = row[static_cast<std::size_t>(node->feature)] <= node->threshold;
        node = &tree.nodes[static_cast<std::size_t>(go_left ? node->left : node->right)];
    }
    return *node;
}

int majority_class(const std::array<std::uint32_t, kClassCount>& counts) {
    int best = 0;
    for (int c = 1; c < kClassCount; ++c)
        if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(best)]) best = c;
    return best; // lowest index wins ties by construction
}

} // namespace

std::optional<Split> best_split(std::span<const FeatureRow> rows, std::span<const int> grades,
                                std::span<const std::size_t> sample_indices,
                                std::span<const int> feature_subset, int min_samples_leaf) {
    const std::uint64_t n = sample_indices.size();
    if (n < 2) return std::nullopt;

    std::array<std::uint32_t, kClassCount> total_counts{};
    for (std::size_t i : sample_indices) ++total_counts[static_cast<std::size_t>(grades[i] - 1)];

    std::optional<Split> best;
    SplitKey best_key;
    std::vector<ValueClass> column(n);

    for (int feature : feature_subset) {
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t i = sample_indices[k];
            column[k] = {rows[i][static_cast<std::size_t>(feature)], grades[i] - 1};
        }
        std::sort(column.begin(), column.end(), [](const ValueClass& a, const ValueClass& b) {
            if (a.value != b.value) return a.value < b.value;
            return a.cls < b.cls;
        });

        std::array<std::uint32_t, kClassCount> left_counts{};
        std::uint64_t n_left = 0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            ++left_counts[static_cast<std::size_t>(column[k].cls)];
            ++n_left;
            if (column[k].value == column[k + 1].value) continue; // not a boundary

            std::uint64_t n_right = n - n_left;
            if (n_left < static_cast<std::uint64_t>(min_samples_leaf) ||
                n_right < static_cast<std::uint64_t>(min_samples_leaf))
                continue;

            std::array<std::uint32_t, kClassCount> right_counts{};
            for (int c = 0; c < kClassCount; ++c)
                right_counts[static_cast<std::size_t>(c)] =
                    total_counts[static_cast<std::size_t>(c)] -
                    left_counts[static_cast<std::size_t>(c)];

            SplitKey key{sum_of_squares(left_counts) * n_right +
                             sum_of_squares(right_counts) * n_left,
                         n_left * n_right};
            if (best && !key.better_than(best_key)) continue;

            double threshold = (column[k].value + column[k + 1].value) / 2.0;
            // Guard against the midpoint rounding up onto the upper value,
            // which would leave the right child empty under `<= threshold`.
            if (!(threshold < column[k + 1].value)) threshold = column[k].value;

            double parent = gini(total_counts, n);
            double child = (static_cast<double>(n_left) / static_cast<double>(n)) *
                               gini(left_counts, n_left) +
                           (static_cast<double>(n_right) / static_cast<double>(n)) *
                               gini(right_counts, n_right);
            best = Split{feature, threshold, parent - child};
            best_key = key;
        }
    }
    return best;
}

ForestModel train(const std::vector<features::CaseRecord>& records, const ForestParams& params) {
    validate_params(params);
    if (records.size() < 2) fail(Errc::insufficient_data, "need at least 2 records");

    std::vector<const features::CaseRecord*> sorted;
    sorted.reserve(records.size());
    for (const auto& r : records) {
        if (!r.grade) fail(Errc::insufficient_data, "unlabeled record " + r.case_id);
        if (*r.grade < 1 || *r.grade > kClassCount)
            fail(Errc::grade_out_of_range, "grade of " + r.case_id);
        sorted.push_back(&r);
    }
    std::sort(sorted.begin(), sorted.end(), [](const features::CaseRecord* a,
                                               const features::CaseRecord* b) {
        return a->case_id < b->case_id;
    });

    std::vector<FeatureRow> rows(sorted.size());
    std::vector<int> grades(sorted.size());
    std::set<int> distinct;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        rows[i] = sorted[i]->features.as_array();
        grades[i] = *sorted[i]->grade;
        distinct.insert(grades[i]);
    }
    if (distinct.size() < 2) fail(Errc::single_class, "all records share one grade");

    ForestModel model;
    model.params = params;
    for (int f = 0; f < features::kFeatureCount; ++f)
        model.feature_names[static_cast<std::size_t>(f)] =
            std::string(features::kFeatureNames[static_cast<std::size_t>(f)]);
    model.trees.resize(static_cast<std::size_t>(params.n_trees));

    parallel_for(static_cast<std::size_t>(params.n_trees), [&](std::size_t t) {
        SplitMix64 rng(mix_seed(params.seed, t));
        TreeBuilder builder(rows, grades, params, rng);
        model.trees[t] = builder.build();
    });
    return model;
}

int predict(const ForestModel& model, const features::FeatureVector& fv) {
    std::array<std::uint64_t, kClassCount> votes{};
    FeatureRow row = fv.as_array();
    for (const Tree& tree : model.trees)
        ++votes[static_cast<std::size_t>(majority_class(leaf_for(tree, row).class_counts))];
    int best = 0;
    for (int c = 1; c < kClassCount; ++c)
        if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) best = c;
    return model.class_labels[static_cast<std::size_t>(best)];
}

std::array<double, kClassCount> predict_distribution(const ForestModel& model,
                                                     const features::FeatureVector& fv) {
    std::array<std::uint64_t, kClassCount> votes{};
    FeatureRow row = fv.as_array();
    for (const Tree& tree : model.trees)
        ++votes[static_cast<std::size_t>(majority_class(leaf_for(tree, row).class_counts))];
    std::array<double, kClassCount> out{};
    for (int c = 0; c < kClassCount; ++c)
        out[static_cast<std::size_t>(c)] = static_cast<double>(votes[static_cast<std::size_t>(c)]) /
                                           static_cast<double>(model.trees.size());
    return out;
}

namespace {

void emit_node(std::string& out, const Tree& tree, std::size_t index) {
    const TreeNode& node = tree.nodes[index];
    if (node.is_leaf()) {
        out += "{\"c\":[";
        for (int c = 0; c < kClassCount; ++c) {
            if (c) out += ',';
            out += std::to_string(node.class_counts[static_cast<std::size_t>(c)]);
        }
        out += "]}";
    } else {
        out += "{\"f\":";
        out += std::to_string(node.feature);
        out += ",\"l\":";
        out += std::to_string(node.left);
        out += ",\"r\":";
        out += std::to_string(node.right);
        out += ",\"t\":";
        out += features::format_real(node.threshold);
        out += '}';
    }
}

// Validates one flat tree: every node reachable from the root exactly once,
// children strictly after parents, depth within bound.
void validate_tree(const Tree& tree, int max_depth) {
    if (tree.nodes.empty()) fail(Errc::malformed_model, "empty tree");
    std::vector<int> depth(tree.nodes.size(), -1);
    depth[0] = 0;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const TreeNode& node = tree.nodes[i];
        if (depth[i] < 0) fail(Errc::malformed_model, "unreachable tree node");
        if (node.is_leaf()) {
            std::uint64_t total = 0;
            for (std::uint32_t c : node.class_counts) total += c;
            if (total == 0) fail(Errc::malformed_model, "leaf with zero samples");
            continue;
        }
        if (node.feature >= features::kFeatureCount)
            fail(Errc::malformed_model, "feature index out of range");
        if (!std::isfinite(node.threshold)) fail(Errc::malformed_model, "non-finite threshold");
        if (depth[i] >= max_depth) fail(Errc::malformed_model, "node deeper than max_depth");
        for (std::int32_t child : {node.left, node.right}) {
            if (child <= static_cast<std::int32_t>(i) ||
                child >= static_cast<std::int32_t>(tree.nodes.size()))
                fail(Errc::malformed_model, "bad child index");
            if (depth[static_cast<std::size_t>(child)] != -1)
                fail(Errc::malformed_model, "node referenced twice");
            depth[static_cast<std::size_t>(child)] = depth[i] + 1;
        }
    }
}

} // namespace

std::vector<std::uint8_t> save_model(const ForestModel& model, bool compress) {
    // Hand-emitted canonical form: keys sorted at every level, fixed number
    // formatting. nlohmann would not give byte-stable 17-digit thresholds.
    std::string out;
    out.reserve(model.trees.size() * 256 + 1024);
    out += "{\"class_labels\":[1,2,3,4],\"feature_names\":[";
    for (int f = 0; f < features::kFeatureCount; ++f) {
        if (f) out += ',';
        out += '"';
        out += model.feature_names[static_cast<std::size_t>(f)];
        out += '"';
    }
    out += "],\"format_version\":1,\"params\":{\"bootstrap\":";
    out += model.params.bootstrap ? "true" : "false";
    out += ",\"max_depth\":";
    out += std::to_string(model.params.max_depth);
    out += ",\"min_samples_leaf\":";
    out += std::to_string(model.params.min_samples_leaf);
    out += ",\"mtry\":";
    out += std::to_string(model.params.mtry);
    out += ",\"n_trees\":";
    out += std::to_string(model.params.n_trees);
    out += ",\"seed\":";
    out += std::to_string(model.params.seed);
    out += "},\"trees\":[";
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        if (t) out += ',';
        out += '[';
        for (std::size_t i = 0; i < model.trees[t].nodes.size(); ++i) {
            if (i) out += ',';
            emit_node(out, model.trees[t], i);
        }
        out += ']';
    }
    out += "]}";

    std::vector<std::uint8_t> bytes(out.begin(), out.end());
    if (compress) return gz::compress(bytes);
    return bytes;
}

ForestModel load_model(std::span<const std::uint8_t> bytes) {
    std::vector<std::uint8_t> inflated;
    if (gz::is_gzip(bytes)) {
        inflated = gz::decompress(bytes);
        bytes = inflated;
    }

    nlohmann::json doc = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) fail(Errc::malformed_model, "not a JSON object");

    try {
        if (doc.at("format_version").get<int>() != 1)
            fail(Errc::malformed_model, "unsupported format_version");

        ForestModel model;
        const auto& params = doc.at("params");
        model.params.n_trees = params.at("n_trees").get<int>();
        model.params.max_depth = params.at("max_depth").get<int>();
        model.params.min_samples_leaf = params.at("min_samples_leaf").get<int>();
        model.params.mtry = params.at("mtry").get<int>();
        model.params.seed = params.at("seed").get<std::uint64_t>();
        model.params.bootstrap = params.at("bootstrap").get<bool>();
        validate_params(model.params);

        const auto& labels = doc.at("class_labels");
        if (labels != nlohmann::json::array({1, 2, 3, 4}))
            fail(Errc::malformed_model, "class_labels must be [1,2,3,4]");

        const auto& names = doc.at("feature_names");
        if (!names.is_array() || names.size() != features::kFeatureCount)
            fail(Errc::malformed_model, "feature_names must list 9 features");
        for (int f = 0; f < features::kFeatureCount; ++f) {
            std::string name = names.at(static_cast<std::size_t>(f)).get<std::string>();
            if (name != features::kFeatureNames[static_cast<std::size_t>(f)])
                fail(Errc::malformed_model, "unexpected feature name \"" + name + "\"");
            model.feature_names[static_cast<std::size_t>(f)] = std::move(name);
        }

        const auto& trees = doc.at("trees");
        if (!trees.is_array() || trees.size() != static_cast<std::size_t>(model.params.n_trees))
            fail(Errc::malformed_model, "trees length differs from params.n_trees");
        model.trees.reserve(trees.size());
        for (const auto& tree_json : trees) {
            if (!tree_json.is_array()) fail(Errc::malformed_model, "tree is not an array");
            Tree tree;
            tree.nodes.reserve(tree_json.size());
            for (const auto& node_json : tree_json) {
                if (!node_json.is_object()) fail(Errc::malformed_model, "node is not an object");
                TreeNode node;
                if (node_json.contains("c")) {
                    const auto& counts = node_json.at("c");
                    if (!counts.is_array() || counts.size() != kClassCount)
                        fail(Errc::malformed_model, "leaf counts must have 4 entries");
                    for (int c = 0; c < kClassCount; ++c)
                        node.class_counts[static_cast<std::size_t>(c)] =
                            counts.at(static_cast<std::size_t>(c)).get<std::uint32_t>();
                } else {
                    node.feature = node_json.at("f").get<std::int16_t>();
                    if (node.feature < 0) fail(Errc::malformed_model, "negative feature index");
                    node.threshold = node_json.at("t").get<double>();
                    node.left = node_json.at("l").get<std::int32_t>();
                    node.right = node_json.at("r").get<std::int32_t>();
                }
                tree.nodes.push_back(node);
            }
            validate_tree(tree, model.params.max_depth);
            model.trees.push_back(std::move(tree));
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::malformed_model, e.what());
    }
}

void save_model_file(const ForestModel& model, const std::filesystem::path& path, bool compress) {
    std::vector<std::uint8_t> bytes = save_model(model, compress);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::io_error, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(Errc::io_error, "write failure on " + path.string());
}

ForestModel load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_error, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return load_model(bytes);
}

} // namespace koos::forest
