#include "koos/error.hpp"

namespace koos {

const char* errc_name(Errc code) {
    switch (code) {
    case Errc::malformed_header: return "MalformedHeader";
    case Errc::unsupported_datatype: return "UnsupportedDatatype";
    case Errc::non_integral_label: return "NonIntegralLabel";
    case Errc::negative_label: return "NegativeLabel";
    case Errc::label_out_of_range: return "LabelOutOfRange";
    case Errc::truncated_data: return "TruncatedData";
    case Errc::unknown_structure: return "UnknownStructureName";
    case Errc::duplicate_label_id: return "DuplicateLabelId";
    case Errc::missing_structure: return "MissingStructure";
    case Errc::malformed_atlas: return "MalformedAtlas";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::overlapping_masks: return "OverlappingMasks";
    case Errc::empty_foreground: return "EmptyForeground";
    case Errc::missing_vs: return "MissingVS";
    case Errc::duplicate_case_id: return "DuplicateCaseId";
    case Errc::malformed_row: return "MalformedRow";
    case Errc::insufficient_data: return "InsufficientData";
    case Errc::single_class: return "SingleClass";
    case Errc::malformed_model: return "MalformedModel";
    case Errc::empty_input: return "EmptyInput";
    case Errc::grade_out_of_range: return "GradeOutOfRange";
    case Errc::class_absent: return "ClassAbsent";
    case Errc::invalid_spec: return "InvalidSpec";
    case Errc::io_error: return "IoError";
    }
    return "UnknownError";
}

} // namespace koos
