#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "koos/atlas.hpp"
#include "koos/features.hpp"
#include "koos/nifti.hpp"

namespace koos::phantom {

// Grade regime boundaries (mm). A grade-1 tumor is small and far from the
// brainstem, grade 2 is large but clear of it, grade 3 touches it without
// deforming it, grade 4 indents it.
inline constexpr double kSmallRadiusMax = 4.0; // grade-1 radius ceiling
inline constexpr double kFarGapMin = 6.0;      // grade-1 gap floor
inline constexpr double kNearGapMin = 1.0;     // grade-2 gap floor
// Nominal surface overlap used to realize grade-3 contact; the brainstem
// keeps the shared voxels, so the masks touch but nothing is carved.
inline constexpr double kTouchOverlap = 0.6;

// Template anatomy (mm offsets from the grid center). Schematic on purpose:
// the generator needs controllable geometry with known answers, not realism.
inline constexpr double kBrainstemRadius = 2.5;
inline constexpr double kBrainstemHalfHeight = 10.0;

struct PhantomSpec {
    std::array<int, 3> dims = {64, 64, 40};
    std::array<double, 3> spacing = {0.5, 0.5, 1.0};
    int grade = 1;
    geometry::Side side = geometry::Side::Right;
    double tumor_radius_mm = 3.0;
    // Surface gap to the brainstem: >= 6 for grade 1, in [1, 6) for grade 2,
    // exactly 0 for grade 3 (contact construction), negative indentation
    // depth for grade 4.
    double brainstem_gap_mm = 6.0;
    std::uint64_t seed = 0;
};

struct PhantomCase {
    nifti::LabelVolume volume;
    // Analytic expectation for the measured features. Volume is the exact
    // sphere (minus brainstem intersection) volume; distances are exact
    // shape-surface distances, which lower-bound the measured
    // center-to-center values. surf_background is the generator's own face
    // count and must match the pipeline exactly.
    features::FeatureVector expected;
    double volume_tolerance = 0.0; // surface-voxel count x voxel volume
    double distance_slack = 0.0;   // measured dist in [expected, expected + slack]
    int grade = 0;
};

// Rasterizes the template anatomy plus a graded VS sphere. Deterministic in
// (spec, spec.seed); the seed drives only sub-voxel center offsets.
PhantomCase generate_phantom(const PhantomSpec& spec);

struct GeneratedCase {
    features::CaseRecord record; // features = analytic expectation
    nifti::LabelVolume volume;
};

// Balanced dataset, grade-major order (1,1,...,2,2,...), per-case radius /
// gap / side / sub-voxel offsets jittered from mix_seed(seed, index).
std::vector<GeneratedCase> generate_dataset(int per_grade, std::uint64_t seed);

// The label schema the generator paints (VS=1 ... RightCerebellum white
// matter=10), as an atlas config document and preloaded.
std::string phantom_atlas_text();
const atlas::AtlasConfig& phantom_atlas();

// Threshold rules that recover the grade from measured features with 100%
// accuracy on generate_dataset output; they certify that the learning task
// is well-posed. Valid for the generator's jitter regimes.
int grade_from_features(const features::FeatureVector& fv);

} // namespace koos::phantom
