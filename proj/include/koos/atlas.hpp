#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>

#include "koos/geometry.hpp"
#include "koos/nifti.hpp"

namespace koos::atlas {

// The fixed structure schema. Order matters: feature-vector columns, mask
// iteration and the config file all follow it. Background is the implicit
// complement (label 0 plus anything unmapped).
enum class StructureId : int {
    VS = 0,
    Pons,
    Brainstem,
    VermalLobulesI_V,
    VermalLobulesVI_VII,
    VermalLobulesVIII_X,
    LeftCerebellum,
    RightCerebellum,
    Background,
};

inline constexpr int kStructureCount = 9;
inline constexpr int kMappedStructureCount = 8; // all but Background

std::string_view structure_name(StructureId id);

// Maps each anatomical structure to a disjoint, non-empty set of label IDs.
// Cerebellum entries typically list two IDs (exterior + white matter).
class AtlasConfig {
public:
    AtlasConfig(std::map<StructureId, std::set<std::uint16_t>> mapping);

    const std::set<std::uint16_t>& labels_of(StructureId id) const;

    // Background for unmapped labels (including 0).
    StructureId structure_of(std::uint16_t label) const;

private:
    std::map<StructureId, std::set<std::uint16_t>> mapping_;
    std::array<StructureId, 65536> lookup_;
};

// Parses the line-oriented `Name = id[,id...]` format with '#' comments.
// All 8 mapped structures must appear exactly once with pairwise disjoint,
// positive label IDs.
AtlasConfig load_atlas(std::string_view text);
AtlasConfig load_atlas_file(const std::filesystem::path& path);

// Voxel is set iff its label belongs to the structure under the atlas.
geometry::BinaryMask mask_of(const nifti::LabelVolume& volume, const AtlasConfig& atlas,
                             StructureId structure);

} // namespace koos::atlas
