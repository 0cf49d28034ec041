#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "koos/features.hpp"

namespace koos::forest {

inline constexpr int kClassCount = 4; // Koos grades 1..4

struct ForestParams {
    int n_trees = 100000;
    int max_depth = 5;
    int min_samples_leaf = 2;
    int mtry = 3; // floor(sqrt(9 features))
    std::uint64_t seed = 0;
    // Test hook: trains every tree on the full sample instead of a bootstrap
    // draw. Not reachable from the CLI.
    bool bootstrap = true;
};

// Flat tree storage, root at index 0, children always after their parent.
// feature < 0 marks a leaf.
struct TreeNode {
    std::int16_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::array<std::uint32_t, kClassCount> class_counts{};

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;
};

struct ForestModel {
    ForestParams params;
    std::vector<Tree> trees;
    std::array<std::string, features::kFeatureCount> feature_names;
    std::array<int, kClassCount> class_labels = {1, 2, 3, 4};
};

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity_decrease = 0.0; // Gini decrease, for reporting
};

// Best Gini split over the given feature subset, thresholds at midpoints of
// consecutive distinct values, both children >= min_samples_leaf. Tie-break:
// lowest feature index, then lowest threshold; the comparison is exact
// (integer cross-multiplication), so ties are well-defined. nullopt when no
// valid split exists.
std::optional<Split> best_split(std::span<const std::array<double, features::kFeatureCount>> rows,
                                std::span<const int> grades,
                                std::span<const std::size_t> sample_indices,
                                std::span<const int> feature_subset, int min_samples_leaf);

// Grows params.n_trees CART trees on bootstrap draws. Per-tree randomness
// derives solely from mix_seed(params.seed, tree_index), so parallel and
// sequential training produce identical models. Records are taken in
// case_id-sorted order.
ForestModel train(const std::vector<features::CaseRecord>& records, const ForestParams& params);

// Majority vote over tree leaf classes; all ties resolve to the lowest grade.
int predict(const ForestModel& model, const features::FeatureVector& fv);

// Fraction of tree votes per class; sums to 1.
std::array<double, kClassCount> predict_distribution(const ForestModel& model,
                                                     const features::FeatureVector& fv);

// Canonical JSON persistence: sorted keys, 17-significant-digit thresholds,
// byte-deterministic. The compress flag gzip-wraps the document. load rejects
// any schema or tree-shape violation with MalformedModel.
std::vector<std::uint8_t> save_model(const ForestModel& model, bool compress = false);
ForestModel load_model(std::span<const std::uint8_t> bytes);
void save_model_file(const ForestModel& model, const std::filesystem::path& path,
                     bool compress = false);
ForestModel load_model_file(const std::filesystem::path& path);

} // namespace koos::forest
