#include <iostream>

#include <CLI11.hpp>

#include "cli.hpp"

int main(int argc, char** argv) {
    using namespace koos::cli;

    CLI::App app{"Koos-grade pipeline: geometric features from brain-structure label volumes, "
                 "random-forest grading, MA-MAE evaluation and phantom generation"};
    app.require_subcommand(1);

    InspectOptions inspect;
    auto* cmd_inspect_p = app.add_subcommand("inspect", "Dump header fields and label histogram");
    cmd_inspect_p->add_option("path", inspect.path, "NIfTI-1 file (.nii or .nii.gz)")->required();

    ExtractOptions extract;
    auto* cmd_extract_p = app.add_subcommand("extract", "Extract feature vectors from a mask directory");
    cmd_extract_p->add_option("--masks", extract.masks_dir, "Directory of .nii/.nii.gz label volumes")->required();
    cmd_extract_p->add_option("--atlas", extract.atlas_path, "Atlas config mapping structures to label IDs")->required();
    cmd_extract_p->add_option("--out", extract.out_csv, "Output dataset CSV")->required();
    std::string labels_path;
    cmd_extract_p->add_option("--labels", labels_path, "Optional case_id,grade CSV to join in");

    TrainOptions train;
    auto* cmd_train_p = app.add_subcommand("train", "Train the random-forest classifier");
    cmd_train_p->add_option("--data", train.data_csv, "Labeled dataset CSV")->required();
    cmd_train_p->add_option("--out", train.out_model, "Output model file (.json or .json.gz)")->required();
    cmd_train_p->add_option("--trees", train.trees, "Number of trees (default 100000)");
    cmd_train_p->add_option("--max-depth", train.max_depth, "Maximum tree depth (default 5)");
    cmd_train_p->add_option("--min-leaf", train.min_leaf, "Minimum samples per leaf (default 2)");
    cmd_train_p->add_option("--mtry", train.mtry, "Features sampled per node (default 3)");
    cmd_train_p->add_option("--seed", train.seed, "Training seed (default 0)");

    PredictOptions predict;
    auto* cmd_predict_p = app.add_subcommand("predict", "Predict grades for a feature CSV");
    cmd_predict_p->add_option("--model", predict.model_path, "Model file")->required();
    cmd_predict_p->add_option("--data", predict.data_csv, "Dataset CSV")->required();
    cmd_predict_p->add_option("--out", predict.out_csv, "Output case_id,grade CSV")->required();

    EvaluateOptions evaluate;
    auto* cmd_evaluate_p = app.add_subcommand("evaluate", "Macro-averaged MAE between predictions and truth");
    cmd_evaluate_p->add_option("--pred", evaluate.pred_csv, "Predictions CSV (case_id,grade)")->required();
    cmd_evaluate_p->add_option("--truth", evaluate.truth_csv, "Truth CSV (case_id,grade)")->required();
    std::string json_path;
    cmd_evaluate_p->add_option("--json", json_path, "Also write the report as canonical JSON");
    cmd_evaluate_p->add_flag("--strict", evaluate.strict,
                             "Divide by a fixed 4 classes; error when a grade is absent");

    PhantomOptions phantom;
    auto* cmd_phantom_p = app.add_subcommand("phantom", "Generate a synthetic graded dataset");
    cmd_phantom_p->add_option("--out", phantom.out_dir, "Output directory")->required();
    cmd_phantom_p->add_option("--per-grade", phantom.per_grade, "Cases per grade")->required();
    cmd_phantom_p->add_option("--seed", phantom.seed, "Dataset seed (default 0)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    if (!labels_path.empty()) extract.labels_csv = labels_path;
    if (!json_path.empty()) evaluate.json_out = json_path;

    if (cmd_inspect_p->parsed()) return cmd_inspect(inspect, std::cout, std::cerr);
    if (cmd_extract_p->parsed()) return cmd_extract(extract, std::cout, std::cerr);
    if (cmd_train_p->parsed()) return cmd_train(train, std::cout, std::cerr);
    if (cmd_predict_p->parsed()) return cmd_predict(predict, std::cout, std::cerr);
    if (cmd_evaluate_p->parsed()) return cmd_evaluate(evaluate, std::cout, std::cerr);
    if (cmd_phantom_p->parsed()) return cmd_phantom(phantom, std::cout, std::cerr);
    return kUsageError;
}
