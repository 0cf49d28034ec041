#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace koos::metrics {

inline constexpr int kGradeCount = 4;

struct GradePair {
    int predicted = 0;
    int truth = 0;
};

struct EvalReport {
    // MAE per true class; absent when the class never occurs in the truth.
    std::array<std::optional<double>, kGradeCount> per_class_mae{};
    double ma_mae = 0.0;
    // Rows = true grade, columns = predicted grade.
    std::array<std::array<std::uint64_t, kGradeCount>, kGradeCount> confusion{};
    std::uint64_t n_cases = 0;
};

// Macro-averaged MAE: the unweighted mean of per-class MAEs over the classes
// present in the truth, which is what makes the metric robust to imbalance.
// strict mode divides by a fixed 4 instead and errors with ClassAbsent when
// any grade is missing from the truth.
EvalReport evaluate(const std::vector<GradePair>& pairs, bool strict = false);

std::string render_text(const EvalReport& report);
std::string render_json(const EvalReport& report); // canonical: sorted keys

} // namespace koos::metrics
