// wildvision: video-informed ensemble classification from the command line.
//
//   wildvision sample        --manifest seg/manifest.json --count 19 --crop 0.6 --out batch/
//   wildvision classify      --config pipeline.json [overrides]
//   wildvision evaluate      pairs.csv|pairs.jsonl [--csv table.csv]
//   wildvision complexity    dataset_dir [other_dir] [--size 300 --radius 10 --pca-k 3]
//   wildvision validate-wire records.detjsonl...

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wildvision/commands.hpp"

namespace cli = wildvision::cli;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app{"Video-informed ensemble image classification"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "wildvision 1.0.0");

    // sample
    cli::SampleOptions sample;
    std::optional<std::int64_t> sample_count;
    auto* sample_cmd = app.add_subcommand("sample", "Sample and attention-crop frames of a segment");
    sample_cmd->add_option("--manifest", sample.manifest, "Segment manifest JSON")->required();
    sample_cmd->add_option("--count", sample_count, "Frames to sample (default: one per second)");
    sample_cmd->add_option("--crop", sample.crop_fraction, "Centered crop side fraction in (0,1]");
    sample_cmd->add_option("--out", sample.out_dir, "Output directory for frames and batch.json")->required();

    // classify
    fs::path config_path;
    std::optional<std::string> manifest;
    std::optional<std::int64_t> count;
    std::optional<double> crop, tau;
    std::optional<std::int64_t> min_count;
    std::vector<std::string> replay;
    std::optional<std::string> output;
    bool no_dedupe = false, no_timestamp = false;
    auto* classify_cmd = app.add_subcommand("classify", "Run the sampling, ensemble and consensus pipeline");
    classify_cmd->add_option("--config", config_path, "Pipeline config JSON");
    classify_cmd->add_option("--manifest", manifest, "Segment manifest JSON");
    classify_cmd->add_option("--count", count, "Frames to sample");
    classify_cmd->add_option("--crop", crop, "Centered crop side fraction in (0,1]");
    classify_cmd->add_option("--replay", replay, "Replay wire file (.detjsonl); repeatable");
    classify_cmd->add_option("--tau", tau, "Confidence threshold in [0,1]");
    classify_cmd->add_option("--min-count", min_count, "Minimum tally count for selection");
    classify_cmd->add_flag("--no-dedupe", no_dedupe, "Count every box, not one vote per (detector, frame)");
    classify_cmd->add_option("--out", output, "Report path (default: stdout)");
    classify_cmd->add_flag("--no-timestamp", no_timestamp, "Omit generated_at from the report");

    // evaluate
    cli::EvaluateOptions eval;
    bool eval_no_ts = false;
    auto* eval_cmd = app.add_subcommand("evaluate", "Recall, precision and f-measure of prediction sets");
    eval_cmd->add_option("pairs", eval.pairs, "CSV or JSON Lines of (image_id, truth, predicted)")->required();
    eval_cmd->add_option("--out", eval.output, "JSON report path (default: stdout)");
    eval_cmd->add_option("--csv", eval.csv, "Also write a CSV table");
    eval_cmd->add_flag("--no-timestamp", eval_no_ts, "Omit generated_at from the report");

    // complexity
    cli::ComplexityCommandOptions cx;
    bool cx_no_local = false, cx_no_ts = false;
    auto* cx_cmd = app.add_subcommand("complexity", "Entropy and PCA complexity report for image datasets");
    cx_cmd->add_option("datasets", cx.datasets, "Dataset directory, or two to compare")->required()->expected(1, 2);
    cx_cmd->add_option("--size", cx.measures.size, "Subsample side in pixels; 0 keeps native size");
    cx_cmd->add_option("--radius", cx.measures.radius_px, "Local entropy disk radius in pixels");
    cx_cmd->add_flag("--no-local", cx_no_local, "Skip local entropy");
    cx_cmd->add_option("--pca-k", cx.measures.pca_k, "Top-k components for explained variance; 0 disables");
    cx_cmd->add_option("--pca-side", cx.measures.pca_side, "PCA thumbnail side in pixels");
    cx_cmd->add_option("--out", cx.output, "JSON report path (default: stdout)");
    cx_cmd->add_option("--csv", cx.csv, "Also write a CSV table");
    cx_cmd->add_flag("--no-timestamp", cx_no_ts, "Omit generated_at from the report");

    // validate-wire
    std::vector<fs::path> wire_files;
    auto* wire_cmd = app.add_subcommand("validate-wire", "Check .detjsonl files against the wire schema");
    wire_cmd->add_option("files", wire_files, "Wire files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kValidation;
    }

    if (*sample_cmd) {
        sample.count = sample_count;
        return cli::cmd_sample(sample, std::cout, std::cerr);
    }
    if (*classify_cmd) {
        return cli::guarded(std::cerr, [&] {
            cli::PipelineConfig c = config_path.empty() ? cli::PipelineConfig{} : cli::load_pipeline_config(config_path);
            if (manifest) c.manifest = fs::path(*manifest);
            if (count) c.count = count;
            if (crop) c.crop_fraction = *crop;
            for (const auto& r : replay) c.replay.emplace_back(r);
            if (tau) c.tau = *tau;
            if (min_count) c.min_count = *min_count;
            if (no_dedupe) c.dedupe = false;
            if (output) c.output = *output;
            if (no_timestamp) c.timestamp = false;
            return cli::cmd_classify(c, std::cout, std::cerr);
        });
    }
    if (*eval_cmd) {
        eval.timestamp = !eval_no_ts;
        return cli::cmd_evaluate(eval, std::cout, std::cerr);
    }
    if (*cx_cmd) {
        cx.measures.local = !cx_no_local;
        cx.timestamp = !cx_no_ts;
        return cli::cmd_complexity(cx, std::cout, std::cerr);
    }
    if (*wire_cmd) return cli::cmd_validate_wire(wire_files, std::cout, std::cerr);
    return cli::kInternal;
}
