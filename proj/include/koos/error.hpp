#pragma once

#include <stdexcept>
#include <string>

namespace koos {

// Every recoverable failure in the pipeline carries one of these codes so
// callers (and the CLI exit-status mapping) can dispatch without string
// matching.
enum class Errc {
    // nifti-io
    malformed_header,
    unsupported_datatype,
    non_integral_label,
    negative_label,
    label_out_of_range,
    truncated_data,
    // label-atlas
    unknown_structure,
    duplicate_label_id,
    missing_structure,
    malformed_atlas,
    // mask-geometry
    shape_mismatch,
    overlapping_masks,
    empty_foreground,
    // feature-pipeline
    missing_vs,
    duplicate_case_id,
    malformed_row,
    // random-forest
    insufficient_data,
    single_class,
    malformed_model,
    // metrics
    empty_input,
    grade_out_of_range,
    class_absent,
    // phantom
    invalid_spec,
    // shared
    io_error,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
    throw Error(code, message);
}

} // namespace koos
