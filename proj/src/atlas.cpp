#include "koos/atlas.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "koos/error.hpp"

namespace koos::atlas {

namespace {

constexpr std::array<std::string_view, kStructureCount> kNames = {
    "VS",
    "Pons",
    "Brainstem",
    "VermalLobulesI_V",
    "VermalLobulesVI_VII",
    "VermalLobulesVIII_X",
    "LeftCerebellum",
    "RightCerebellum",
    "Background",
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

} // namespace

std::string_view structure_name(StructureId id) {
    return kNames[static_cast<std::size_t>(id)];
}

AtlasConfig::AtlasConfig(std::map<StructureId, std::set<std::uint16_t>> mapping)
    : mapping_(std::move(mapping)) {
    lookup_.fill(StructureId::Background);
    for (const auto& [structure, ids] : mapping_)
        for (std::uint16_t id : ids) lookup_[id] = structure;
}

const std::set<std::uint16_t>& AtlasConfig::labels_of(StructureId id) const {
    static const std::set<std::uint16_t> kEmpty;
    if (id == StructureId::Background) return kEmpty; // implicit complement
    return mapping_.at(id);
}

StructureId AtlasConfig::structure_of(std::uint16_t label) const {
    return lookup_[label];
}

AtlasConfig load_atlas(std::string_view text) {
    std::map<StructureId, std::set<std::uint16_t>> mapping;
    std::set<std::uint16_t> seen_ids;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                               : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        if (std::size_t hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            fail(Errc::malformed_atlas, "line " + std::to_string(line_no) + ": expected Name = ids");
        std::string_view name = trim(line.substr(0, eq));
        std::string_view rest = trim(line.substr(eq + 1));

        StructureId structure = StructureId::Background;
        bool known = false;
        for (int i = 0; i < kMappedStructureCount; ++i)
            if (name == kNames[static_cast<std::size_t>(i)]) {
                structure = static_cast<StructureId>(i);
                known = true;
                break;
            }
        if (!known)
            fail(Errc::unknown_structure, "line " + std::to_string(line_no) + ": \"" +
                                              std::string(name) + "\"");
        if (mapping.count(structure))
            fail(Errc::malformed_atlas, std::string(name) + " is defined twice");

        std::set<std::uint16_t> ids;
        std::size_t item_start = 0;
        while (item_start <= rest.size()) {
            std::size_t comma = rest.find(',', item_start);
            std::string_view item = trim(rest.substr(
                item_start, comma == std::string_view::npos ? rest.size() - item_start
                                                            : comma - item_start));
            item_start = comma == std::string_view::npos ? rest.size() + 1 : comma + 1;

            if (item.empty())
                fail(Errc::malformed_atlas,
                     "line " + std::to_string(line_no) + ": empty label id");
            long value = 0;
            auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
            if (ec != std::errc() || end != item.data() + item.size())
                fail(Errc::malformed_atlas, "line " + std::to_string(line_no) +
                                                ": bad label id \"" + std::string(item) + "\"");
            if (value < 1 || value > 65535)
                fail(Errc::malformed_atlas, "line " + std::to_string(line_no) +
                                                ": label id out of range: " + std::to_string(value));
            std::uint16_t id = static_cast<std::uint16_t>(value);
            if (seen_ids.count(id))
                fail(Errc::duplicate_label_id, "label id " + std::to_string(id) +
                                                   " mapped to more than one structure");
            seen_ids.insert(id);
            ids.insert(id);
        }
        mapping.emplace(structure, std::move(ids));
    }

    for (int i = 0; i < kMappedStructureCount; ++i) {
        auto structure = static_cast<StructureId>(i);
        if (!mapping.count(structure))
            fail(Errc::missing_structure, std::string(structure_name(structure)) + " is not mapped");
    }
    return AtlasConfig(std::move(mapping));
}

AtlasConfig load_atlas_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::io_error, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return load_atlas(buffer.str());
}

geometry::BinaryMask mask_of(const nifti::LabelVolume& volume, const AtlasConfig& atlas,
                             StructureId structure) {
    geometry::BinaryMask mask = geometry::BinaryMask::zeros(volume.dims, volume.spacing);
    const std::size_t total = volume.voxel_count();
    for (std::size_t i = 0; i < total; ++i)
        if (atlas.structure_of(volume.labels[i]) == structure) mask.bits[i] = 1;
    return mask;
}

} // namespace koos::atlas
