#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace koos::cli {

// Exit statuses shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kUsageError = 1;
inline constexpr int kDataError = 2;
inline constexpr int kInternalError = 3;

struct InspectOptions {
    std::filesystem::path path;
};

struct ExtractOptions {
    std::filesystem::path masks_dir;
    std::filesystem::path atlas_path;
    std::filesystem::path out_csv;
    std::optional<std::filesystem::path> labels_csv;
};

struct TrainOptions {
    std::filesystem::path data_csv;
    std::filesystem::path out_model;
    int trees = 100000;
    int max_depth = 5;
    int min_leaf = 2;
    int mtry = 3;
    std::uint64_t seed = 0;
};

struct PredictOptions {
    std::filesystem::path model_path;
    std::filesystem::path data_csv;
    std::filesystem::path out_csv;
};

struct EvaluateOptions {
    std::filesystem::path pred_csv;
    std::filesystem::path truth_csv;
    std::optional<std::filesystem::path> json_out;
    bool strict = false;
};

struct PhantomOptions {
    std::filesystem::path out_dir;
    int per_grade = 1;
    std::uint64_t seed = 0;
};

// Each command returns its exit status and reports through the given
// streams; koos::Error maps to kDataError, anything else to kInternalError.
int cmd_inspect(const InspectOptions& opt, std::ostream& out, std::ostream& err);
int cmd_extract(const ExtractOptions& opt, std::ostream& out, std::ostream& err);
int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err);
int cmd_predict(const PredictOptions& opt, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateOptions& opt, std::ostream& out, std::ostream& err);
int cmd_phantom(const PhantomOptions& opt, std::ostream& out, std::ostream& err);

} // namespace koos::cli
