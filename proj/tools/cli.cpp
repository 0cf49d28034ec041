#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <vector>

#include "koos/atlas.hpp"
#include "koos/error.hpp"
#include "koos/features.hpp"
#include "koos/forest.hpp"
#include "koos/metrics.hpp"
#include "koos/nifti.hpp"
#include "koos/parallel.hpp"
#include "koos/phantom.hpp"

namespace koos::cli {

namespace fs = std::filesystem;

namespace {

int run_guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternalError;
    }
}

// The two-column `case_id,grade` format shared by extract --labels, predict
// output, evaluate inputs and the phantom truth file.
constexpr std::string_view kLabelsHeader = "case_id,grade";

std::map<std::string, int> read_labels_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_error, "cannot open " + path.string());
    std::map<std::string, int> labels;
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != kLabelsHeader)
                fail(Errc::malformed_row, path.string() + ": header must be \"case_id,grade\"");
            saw_header = true;
            continue;
        }
        std::size_t comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            fail(Errc::malformed_row, path.string() + " line " + std::to_string(line_no));
        std::string id = line.substr(0, comma);
        std::string_view grade_text = std::string_view(line).substr(comma + 1);
        int grade = 0;
        auto [end, ec] = std::from_chars(grade_text.data(), grade_text.data() + grade_text.size(), grade);
        if (ec != std::errc() || end != grade_text.data() + grade_text.size() || grade < 1 || grade > 4)
            fail(Errc::malformed_row,
                 path.string() + " line " + std::to_string(line_no) + ": bad grade");
        if (!labels.emplace(std::move(id), grade).second)
            fail(Errc::duplicate_case_id, path.string() + " line " + std::to_string(line_no));
    }
    if (!saw_header) fail(Errc::malformed_row, path.string() + ": missing header");
    return labels;
}

void write_labels_csv(const fs::path& path, const std::map<std::string, int>& labels) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::io_error, "cannot open " + path.string() + " for writing");
    out << kLabelsHeader << '\n';
    for (const auto& [id, grade] : labels) out << id << ',' << grade << '\n';
    if (!out) fail(Errc::io_error, "write failure on " + path.string());
}

std::optional<std::string> case_id_of(const fs::path& path) {
    std::string name = path.filename().string();
    if (name.size() > 7 && name.ends_with(".nii.gz")) return name.substr(0, name.size() - 7);
    if (name.size() > 4 && name.ends_with(".nii")) return name.substr(0, name.size() - 4);
    return std::nullopt;
}

} // namespace

int cmd_inspect(const InspectOptions& opt, std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&] {
        nifti::LabelVolume vol = nifti::read_volume_file(opt.path);

        out << "file:     " << opt.path.string() << '\n';
        out << "dims:     " << vol.dims[0] << " x " << vol.dims[1] << " x " << vol.dims[2] << '\n';
        out << "spacing:  " << features::format_real(vol.spacing[0]) << " x "
            << features::format_real(vol.spacing[1]) << " x "
            << features::format_real(vol.spacing[2]) << " mm\n";
        std::uint16_t max_label = 0;
        for (std::uint16_t v : vol.labels) max_label = std::max(max_label, v);
        out << "datatype: " << (max_label > 255 ? "uint16 (512)" : "uint8 (2)")
            << " after decoding\n";
        out << "affine:\n";
        for (int r = 0; r < 4; ++r) {
            out << " ";
            for (int c = 0; c < 4; ++c) out << "  " << features::format_real(vol.affine.m[r][c]);
            out << '\n';
        }
        std::map<std::uint16_t, std::uint64_t> histogram;
        for (std::uint16_t v : vol.labels) ++histogram[v];
        out << "labels (" << histogram.size() << " distinct):\n";
        for (const auto& [label, count] : histogram)
            out << "  " << label << ": " << count << " voxels\n";
        return kOk;
    });
}

int cmd_extract(const ExtractOptions& opt, std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&] {
        atlas::AtlasConfig cfg = atlas::load_atlas_file(opt.atlas_path);

        std::map<std::string, int> labels;
        if (opt.labels_csv) labels = read_labels_csv(*opt.labels_csv);

        std::vector<fs::path> files;
        if (!fs::is_directory(opt.masks_dir))
            fail(Errc::io_error, opt.masks_dir.string() + " is not a directory");
        for (const auto& entry : fs::directory_iterator(opt.masks_dir))
            if (entry.is_regular_file() && case_id_of(entry.path())) files.push_back(entry.path());
        if (files.empty()) fail(Errc::io_error, "no .nii/.nii.gz files in " + opt.masks_dir.string());
        std::sort(files.begin(), files.end());

        struct Slot {
            std::string case_id;
            std::optional<features::FeatureVector> fv;
        };
        std::vector<Slot> slots(files.size());
        parallel_for(files.size(), [&](std::size_t i) {
            slots[i].case_id = *case_id_of(files[i]);
            nifti::LabelVolume vol = nifti::read_volume_file(files[i]);
            try {
                slots[i].fv = features::extract_case(vol, cfg);
            } catch (const Error& e) {
                if (e.code() != Errc::missing_vs) throw;
            }
        });

        std::vector<features::CaseRecord> records;
        std::size_t skipped = 0;
        for (Slot& slot : slots) {
            if (!slot.fv) {
                ++skipped;
                err << "warning: " << slot.case_id << ": empty VS mask, case skipped\n";
                continue;
            }
            features::CaseRecord record;
            record.case_id = slot.case_id;
            record.features = *slot.fv;
            if (auto it = labels.find(record.case_id); it != labels.end())
                record.grade = it->second;
            records.push_back(std::move(record));
        }
        for (const auto& [id, grade] : labels) {
            (void)grade;
            if (std::none_of(slots.begin(), slots.end(),
                             [&](const Slot& s) { return s.case_id == id; }))
                err << "warning: label for unknown case \"" << id << "\" ignored\n";
        }
        if (records.empty()) fail(Errc::missing_vs, "every case had an empty VS mask");

        features::write_dataset_file(records, opt.out_csv);
        out << "extracted " << records.size() << " case(s)";
        if (skipped) out << ", skipped " << skipped;
        out << " -> " << opt.out_csv.string() << '\n';
        return kOk;
    });
}

int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&] {
        std::vector<features::CaseRecord> records = features::read_dataset_file(opt.data_csv);
        for (const auto& r : records)
            if (!r.grade) fail(Errc::insufficient_data, "record " + r.case_id + " has no grade");

        forest::ForestParams params;
        params.n_trees = opt.trees;
        params.max_depth = opt.max_depth;
        params.min_samples_leaf = opt.min_leaf;
        params.mtry = opt.mtry;
        params.seed = opt.seed;

        forest::ForestModel model = forest::train(records, params);
        bool compress = opt.out_model.extension() == ".gz";
        forest::save_model_file(model, opt.out_model, compress);

        out << "trained " << params.n_trees << " trees (max_depth " << params.max_depth
            << ", min_samples_leaf " << params.min_samples_leaf << ", mtry " << params.mtry
            << ", seed " << params.seed << ") on " << records.size() << " cases\n";
        out << "model -> " << opt.out_model.string() << '\n';

        std::vector<metrics::GradePair> pairs;
        pairs.reserve(records.size());
        for (const auto& r : records)
            pairs.push_back({forest::predict(model, r.features), *r.grade});
        out << "training-set fit:\n" << metrics::render_text(metrics::evaluate(pairs));
        return kOk;
    });
}

int cmd_predict(const PredictOptions& opt, std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&] {
        forest::ForestModel model = forest::load_model_file(opt.model_path);
        std::vector<features::CaseRecord> records = features::read_dataset_file(opt.data_csv);
        if (records.empty()) fail(Errc::empty_input, "no cases in " + opt.data_csv.string());

        std::map<std::string, int> predictions;
        for (const auto& r : records)
            predictions[r.case_id] = forest::predict(model, r.features);
        write_labels_csv(opt.out_csv, predictions);
        out << "predicted " << predictions.size() << " case(s) -> " << opt.out_csv.string() << '\n';
        return kOk;
    });
}

int cmd_evaluate(const EvaluateOptions& opt, std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&] {
        std::map<std::string, int> pred = read_labels_csv(opt.pred_csv);
        std::map<std::string, int> truth = read_labels_csv(opt.truth_csv);
        if (pred.size() != truth.size())
            fail(Errc::malformed_row, "prediction and truth case_id sets differ");
        std::vector<metrics::GradePair> pairs;
        pairs.reserve(truth.size());
        for (const auto& [id, true_grade] : truth) {
            auto it = pred.find(id);
            if (it == pred.end())
                fail(Errc::malformed_row, "case \"" + id + "\" missing from predictions");
            pairs.push_back({it->second, true_grade});
        }

        metrics::EvalReport report = metrics::evaluate(pairs, opt.strict);
        out << metrics::render_text(report);
        if (opt.json_out) {
            std::ofstream json(*opt.json_out, std::ios::binary | std::ios::trunc);
            if (!json) fail(Errc::io_error, "cannot open " + opt.json_out->string());
            json << metrics::render_json(report) << '\n';
        }
        return kOk;
    });
}

int cmd_phantom(const PhantomOptions& opt, std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&] {
        fs::create_directories(opt.out_dir);
        std::vector<phantom::GeneratedCase> cases =
            phantom::generate_dataset(opt.per_grade, opt.seed);

        std::map<std::string, int> truth;
        for (const auto& c : cases) {
            nifti::write_volume_file(c.volume, opt.out_dir / (c.record.case_id + ".nii.gz"),
                                     /*compress=*/true);
            truth[c.record.case_id] = *c.record.grade;
        }
        write_labels_csv(opt.out_dir / "truth.csv", truth);

        std::ofstream atlas_out(opt.out_dir / "phantom_atlas.cfg", std::ios::binary | std::ios::trunc);
        if (!atlas_out) fail(Errc::io_error, "cannot write phantom_atlas.cfg");
        atlas_out << phantom::phantom_atlas_text();

        out << "wrote " << cases.size() << " volumes, truth.csv and phantom_atlas.cfg -> "
            << opt.out_dir.string() << '\n';
        return kOk;
    });
}

} // namespace koos::cli
