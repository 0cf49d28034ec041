#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "koos/atlas.hpp"
#include "koos/nifti.hpp"

namespace koos::features {

inline constexpr int kFeatureCount = 9;

// The per-case feature vector: VS volume (mm^3), shortest center-to-center
// distances to the VS (mm, -1 when the structure mask is empty) and the VS
// contact surface with the background (mm^2). Column order is fixed and
// mirrored by the dataset CSV header.
struct FeatureVector {
    double vs_volume = 0.0;
    double dist_pons = -1.0;
    double dist_brainstem = -1.0;
    double dist_vermal_1_5 = -1.0;
    double dist_vermal_6_7 = -1.0;
    double dist_vermal_8_10 = -1.0;
    double dist_ipsi_cerebellum = -1.0;
    double dist_contra_cerebellum = -1.0;
    double surf_background = 0.0;

    std::array<double, kFeatureCount> as_array() const {
        return {vs_volume,       dist_pons,           dist_brainstem,
                dist_vermal_1_5, dist_vermal_6_7,     dist_vermal_8_10,
                dist_ipsi_cerebellum, dist_contra_cerebellum, surf_background};
    }
    static FeatureVector from_array(const std::array<double, kFeatureCount>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8]};
    }
    bool operator==(const FeatureVector&) const = default;
};

extern const std::array<std::string_view, kFeatureCount> kFeatureNames;

// Exact dataset CSV header; readers reject anything else.
extern const std::string_view kDatasetHeader;

struct CaseRecord {
    std::string case_id;
    FeatureVector features;
    std::optional<int> grade; // 1..4 when labeled

    bool operator==(const CaseRecord&) const = default;
};

// Computes the 9 features for one labeled volume. Builds the VS distance
// field once and reuses it for all 7 distance features; cerebellum sides are
// resolved to ipsi/contra relative to the VS position first.
FeatureVector extract_case(const nifti::LabelVolume& volume, const atlas::AtlasConfig& atlas);

// Dataset CSV round trip. Rows are written sorted by case_id, reals with 17
// significant digits (bit-exact double round trip), empty grade column for
// unlabeled records.
std::string write_dataset(const std::vector<CaseRecord>& records);
void write_dataset_file(const std::vector<CaseRecord>& records,
                        const std::filesystem::path& path);
std::vector<CaseRecord> read_dataset(std::string_view text);
std::vector<CaseRecord> read_dataset_file(const std::filesystem::path& path);

// Canonical float formatting shared by every text format in the pipeline:
// 17 significant digits via to_chars, locale-independent, round-trip exact.
std::string format_real(double value);
double parse_real(std::string_view text); // throws MalformedRow

} // namespace koos::features
