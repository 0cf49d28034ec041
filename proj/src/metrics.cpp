#include "koos/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <sstream>

#include "koos/error.hpp"
#include "koos/features.hpp"

namespace koos::metrics {

EvalReport evaluate(const std::vector<GradePair>& pairs, bool strict) {
    if (pairs.empty()) fail(Errc::empty_input, "no prediction/truth pairs");

    std::array<std::uint64_t, kGradeCount> class_n{};
    std::array<std::uint64_t, kGradeCount> class_abs_err{};
    EvalReport report;
    report.n_cases = pairs.size();

    for (const GradePair& p : pairs) {
        if (p.predicted < 1 || p.predicted > kGradeCount || p.truth < 1 || p.truth > kGradeCount)
            fail(Errc::grade_out_of_range,
                 "pair (" + std::to_string(p.predicted) + ", " + std::to_string(p.truth) + ")");
        std::size_t t = static_cast<std::size_t>(p.truth - 1);
        ++class_n[t];
        class_abs_err[t] += static_cast<std::uint64_t>(std::abs(p.predicted - p.truth));
        ++report.confusion[t][static_cast<std::size_t>(p.predicted - 1)];
    }

    double sum = 0.0;
    int present = 0;
    for (int g = 0; g < kGradeCount; ++g) {
        std::size_t i = static_cast<std::size_t>(g);
        if (class_n[i] == 0) {
            if (strict)
                fail(Errc::class_absent,
                     "grade " + std::to_string(g + 1) + " absent from the truth");
            continue;
        }
        double mae = static_cast<double>(class_abs_err[i]) / static_cast<double>(class_n[i]);
        report.per_class_mae[i] = mae;
        sum += mae;
        ++present;
    }
    report.ma_mae = sum / static_cast<double>(strict ? kGradeCount : present);
    return report;
}

std::string render_text(const EvalReport& report) {
    std::ostringstream out;
    out << "MA-MAE: " << features::format_real(report.ma_mae) << "  (n=" << report.n_cases
        << ")\n";
    out << "Per-class MAE:\n";
    for (int g = 0; g < kGradeCount; ++g) {
        out << "  grade " << (g + 1) << ": ";
        const auto& mae = report.per_class_mae[static_cast<std::size_t>(g)];
        if (mae)
            out << features::format_real(*mae);
        else
            out << "absent";
        out << '\n';
    }
    out << "Confusion (rows = truth, columns = predicted):\n";
    out << "         pred1   pred2   pred3   pred4\n";
    for (int t = 0; t < kGradeCount; ++t) {
        out << "  true" << (t + 1);
        for (int p = 0; p < kGradeCount; ++p) {
            std::string cell =
                std::to_string(report.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]);
            out << std::string(8 - std::min<std::size_t>(cell.size(), 7), ' ') << cell;
        }
        out << '\n';
    }
    return out.str();
}

std::string render_json(const EvalReport& report) {
    std::string out = "{\"confusion\":[";
    for (int t = 0; t < kGradeCount; ++t) {
        if (t) out += ',';
        out += '[';
        for (int p = 0; p < kGradeCount; ++p) {
            if (p) out += ',';
            out += std::to_string(
                report.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]);
        }
        out += ']';
    }
    out += "],\"ma_mae\":";
    out += features::format_real(report.ma_mae);
    out += ",\"n_cases\":";
    out += std::to_string(report.n_cases);
    out += ",\"per_class_mae\":[";
    for (int g = 0; g < kGradeCount; ++g) {
        if (g) out += ',';
        const auto& mae = report.per_class_mae[static_cast<std::size_t>(g)];
        out += mae ? features::format_real(*mae) : "null";
    }
    out += "]}";
    return out;
}

} // namespace koos::metrics
