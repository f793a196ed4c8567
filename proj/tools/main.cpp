#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ml2r/bench.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ml2r::ExperimentConfig resolve_config(const std::string& config_path,
                                      const std::vector<std::string>& overrides) {
    std::string text = config_path.empty() ? ml2r::config_to_json_text(ml2r::ExperimentConfig{})
                                           : read_file(config_path);
    if (!overrides.empty()) text = ml2r::apply_overrides(text, overrides);
    return ml2r::config_from_json_text(text);
}

void print_written(const std::vector<std::string>& paths) {
    for (const auto& p : paths) std::cout << "wrote " << p << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ML2R / AISML2R option-pricing benchmark"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config,-c", config_path, "experiment config (JSON)");
        cmd->add_option("--set", overrides,
                        "override any config key, e.g. --set grid.refinement=8");
        cmd->add_option("--out,-o", out_dir, "output directory (default $ML2R_OUTPUT_DIR)");
    };

    auto* cmd_calibrate =
        app.add_subcommand("calibrate", "run the pilots and print the resolved parameters");
    add_common(cmd_calibrate);

    auto* cmd_run = app.add_subcommand("run", "run the full experiment grid");
    add_common(cmd_run);

    std::string results_path;
    std::vector<std::string> report_formats = {"csv", "plot"};
    auto* cmd_report = app.add_subcommand("report", "re-emit outputs from a results file");
    cmd_report->add_option("--results", results_path, "results.json from a previous run")
        ->required();
    cmd_report->add_option("--formats", report_formats, "formats to emit (csv, json, plot)")
        ->delimiter(',');
    cmd_report->add_option("--out,-o", out_dir, "output directory");

    std::string manifest_path;
    auto* cmd_replay =
        app.add_subcommand("replay", "re-run an experiment bit-identically from its manifest");
    cmd_replay->add_option("manifest", manifest_path, "manifest.json of a previous run")
        ->required();
    cmd_replay->add_option("--out,-o", out_dir, "output directory");
    cmd_replay->add_option("--set", overrides, "override run.threads or output keys");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_calibrate) {
            const auto config = resolve_config(config_path, overrides);
            const auto manifest = ml2r::calibrate(config);
            std::cout << ml2r::manifest_to_json_text(manifest);
            if (!out_dir.empty() || !config.output_dir.empty()) {
                ml2r::ExperimentOutput out;
                out.manifest = manifest;
                print_written(ml2r::emit_outputs(
                    out, {}, out_dir.empty() ? config.output_dir : out_dir));
            }
        } else if (*cmd_run) {
            const auto config = resolve_config(config_path, overrides);
            const auto output = ml2r::run_experiment(config);
            std::cout << ml2r::rows_to_csv(output.rows);
            print_written(ml2r::emit_outputs(
                output, config.formats, out_dir.empty() ? config.output_dir : out_dir));
        } else if (*cmd_report) {
            const auto output = ml2r::output_from_json_text(read_file(results_path));
            print_written(ml2r::emit_outputs(output, report_formats, out_dir));
        } else if (*cmd_replay) {
            auto manifest = ml2r::load_manifest(manifest_path);
            if (!overrides.empty()) {
                const std::string text =
                    ml2r::apply_overrides(ml2r::config_to_json_text(manifest.config), overrides);
                manifest.config = ml2r::config_from_json_text(text);
            }
            const auto output = ml2r::replay(manifest);
            std::cout << ml2r::rows_to_csv(output.rows);
            print_written(ml2r::emit_outputs(output, manifest.config.formats,
                                             out_dir.empty() ? manifest.config.output_dir
                                                             : out_dir));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
