#include "koos/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "koos/error.hpp"
#include "koos/geometry.hpp"

namespace koos::features {

using atlas::StructureId;
using geometry::BinaryMask;
using geometry::Side;

const std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "vs_volume",
    "dist_pons",
    "dist_brainstem",
    "dist_vermal_1_5",
    "dist_vermal_6_7",
    "dist_vermal_8_10",
    "dist_ipsi_cerebellum",
    "dist_contra_cerebellum",
    "surf_background",
};

const std::string_view kDatasetHeader =
    "case_id,vs_volume,dist_pons,dist_brainstem,dist_vermal_1_5,dist_vermal_6_7,"
    "dist_vermal_8_10,dist_ipsi_cerebellum,dist_contra_cerebellum,surf_background,grade";

std::string format_real(double value) {
    char buf[40];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value,
                                   std::chars_format::general, 17);
    return std::string(buf, end);
}

double parse_real(std::string_view text) {
    double value = 0.0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(value))
        fail(Errc::malformed_row, "bad number \"" + std::string(text) + "\"");
    return value;
}

FeatureVector extract_case(const nifti::LabelVolume& volume, const atlas::AtlasConfig& cfg) {
    BinaryMask vs = atlas::mask_of(volume, cfg, StructureId::VS);
    if (vs.popcount() == 0) fail(Errc::missing_vs, "VS mask is empty");

    FeatureVector fv;
    fv.vs_volume = geometry::structure_volume(vs);

    geometry::DistanceField vs_field = geometry::edt(vs);
    auto distance_to = [&](StructureId s) {
        return geometry::dist_vs(atlas::mask_of(volume, cfg, s), vs_field);
    };
    fv.dist_pons = distance_to(StructureId::Pons);
    BinaryMask brainstem = atlas::mask_of(volume, cfg, StructureId::Brainstem);
    fv.dist_brainstem = geometry::dist_vs(brainstem, vs_field);
    fv.dist_vermal_1_5 = distance_to(StructureId::VermalLobulesI_V);
    fv.dist_vermal_6_7 = distance_to(StructureId::VermalLobulesVI_VII);
    fv.dist_vermal_8_10 = distance_to(StructureId::VermalLobulesVIII_X);

    Side side = geometry::resolve_laterality(vs, brainstem, volume.affine);
    StructureId ipsi = side == Side::Right ? StructureId::RightCerebellum
                                           : StructureId::LeftCerebellum;
    StructureId contra = side == Side::Right ? StructureId::LeftCerebellum
                                             : StructureId::RightCerebellum;
    fv.dist_ipsi_cerebellum = distance_to(ipsi);
    fv.dist_contra_cerebellum = distance_to(contra);

    fv.surf_background = geometry::surf_vs(vs, atlas::mask_of(volume, cfg, StructureId::Background));
    return fv;
}

namespace {

void check_case_id(const std::string& id) {
    if (id.empty()) fail(Errc::malformed_row, "empty case_id");
    if (id.find_first_of(",\"\r\n") != std::string::npos)
        fail(Errc::malformed_row, "case_id \"" + id + "\" contains CSV metacharacters");
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

} // namespace

std::string write_dataset(const std::vector<CaseRecord>& records) {
    std::vector<const CaseRecord*> sorted;
    sorted.reserve(records.size());
    for (const auto& r : records) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(),
              [](const CaseRecord* a, const CaseRecord* b) { return a->case_id < b->case_id; });

    std::set<std::string_view> ids;
    std::string out;
    out += kDatasetHeader;
    out += '\n';
    for (const CaseRecord* r : sorted) {
        check_case_id(r->case_id);
        if (!ids.insert(r->case_id).second)
            fail(Errc::duplicate_case_id, r->case_id);
        if (r->grade && (*r->grade < 1 || *r->grade > 4))
            fail(Errc::malformed_row, "grade out of range for " + r->case_id);
        out += r->case_id;
        for (double v : r->features.as_array()) {
            out += ',';
            out += format_real(v);
        }
        out += ',';
        if (r->grade) out += std::to_string(*r->grade);
        out += '\n';
    }
    return out;
}

void write_dataset_file(const std::vector<CaseRecord>& records,
                        const std::filesystem::path& path) {
    std::string text = write_dataset(records);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::io_error, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) fail(Errc::io_error, "write failure on " + path.string());
}

std::vector<CaseRecord> read_dataset(std::string_view text) {
    std::vector<CaseRecord> records;
    std::set<std::string> ids;

    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                               : eol - pos);
        pos = eol == std::string_view::npos ? text.size() : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        if (!saw_header) {
            if (line != kDatasetHeader)
                fail(Errc::malformed_row, "line 1: header does not match the dataset schema");
            saw_header = true;
            continue;
        }

        std::vector<std::string_view> fields = split_fields(line);
        if (fields.size() != kFeatureCount + 2)
            fail(Errc::malformed_row, "line " + std::to_string(line_no) + ": expected " +
                                          std::to_string(kFeatureCount + 2) + " columns, got " +
                                          std::to_string(fields.size()));

        CaseRecord record;
        record.case_id = std::string(fields[0]);
        check_case_id(record.case_id);
        if (!ids.insert(record.case_id).second) fail(Errc::duplicate_case_id, record.case_id);

        std::array<double, kFeatureCount> values{};
        for (int i = 0; i < kFeatureCount; ++i)
            values[static_cast<std::size_t>(i)] = parse_real(fields[static_cast<std::size_t>(i) + 1]);
        record.features = FeatureVector::from_array(values);

        std::string_view grade_field = fields.back();
        if (!grade_field.empty()) {
            int grade = 0;
            auto [end, ec] =
                std::from_chars(grade_field.data(), grade_field.data() + grade_field.size(), grade);
            if (ec != std::errc() || end != grade_field.data() + grade_field.size())
                fail(Errc::malformed_row, "line " + std::to_string(line_no) + ": bad grade \"" +
                                              std::string(grade_field) + "\"");
            if (grade < 1 || grade > 4)
                fail(Errc::malformed_row,
                     "line " + std::to_string(line_no) + ": grade " + std::to_string(grade) +
                         " outside 1..4");
            record.grade = grade;
        }
        records.push_back(std::move(record));
    }
    if (!saw_header) fail(Errc::malformed_row, "missing dataset header");
    return records;
}

std::vector<CaseRecord> read_dataset_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_error, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return read_dataset(buffer.str());
}

} // namespace koos::features
