#include "revdetect/evalstats.hpp"
#include "revdetect/pipeline.hpp"
#include "revdetect/util.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

// one label per line
std::vector<std::string> read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open label file: " + path);
    }
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        std::string t = revdetect::util::trim(line);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Toolkit for measuring AI involvement in peer reviews"};
    app.require_subcommand(1);

    std::string config_path;
    std::string report_format = "markdown";

    const std::vector<std::string> pipeline_commands = {
        "ingest",   "generate", "refs",     "features", "score",
        "train",    "calibrate", "evaluate", "report"};
    const char* descriptions[] = {
        "Validate the corpus manifests and report counts",
        "Generate leveled reviews over the configured model/level/variant grid",
        "Build AI-generated reference reviews for every paper",
        "Export the stylometric feature CSV",
        "Run all configured detectors and export score CSVs",
        "Train the level classifier and report held-out accuracy",
        "Fix detector thresholds at 0% FPR on the calibration split",
        "Full evaluation: thresholds, per-level rates, confusions, McNemar tests",
        "Render a previously computed evaluation report"};

    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < pipeline_commands.size(); i++) {
        CLI::App* sub = app.add_subcommand(pipeline_commands[i], descriptions[i]);
        sub->add_option("-c,--config", config_path, "Run configuration file")->required();
        if (pipeline_commands[i] == "report") {
            sub->add_option("-f,--format", report_format, "markdown or csv");
        }
        subs.push_back(sub);
    }

    // agreement between two annotation files (one label per line)
    std::string kappa_a, kappa_b;
    std::uint64_t kappa_seed = 0;
    CLI::App* kappa = app.add_subcommand("kappa", "Cohen's kappa between two label files");
    kappa->add_option("a", kappa_a, "First label file")->required();
    kappa->add_option("b", kappa_b, "Second label file")->required();
    kappa->add_option("--seed", kappa_seed, "Bootstrap seed");

    CLI11_PARSE(app, argc, argv);

    if (kappa->parsed()) {
        try {
            revdetect::evalstats::KappaOptions opts;
            opts.seed = kappa_seed;
            auto result = revdetect::evalstats::cohens_kappa(read_labels(kappa_a),
                                                             read_labels(kappa_b), opts);
            std::cout << "kappa: " << revdetect::util::format_fixed(result.kappa, 4) << "\n";
            std::cout << "95% CI: [" << revdetect::util::format_fixed(result.ci_low, 4) << ", "
                      << revdetect::util::format_fixed(result.ci_high, 4) << "]\n";
            std::cout << "n: " << result.n << "\n";
            if (result.degenerate) {
                std::cout << "note: expected agreement is 1; kappa is degenerate\n";
            }
            return 0;
        } catch (const std::exception& e) {
            std::cerr << "{\"error\":\"" << e.what() << "\",\"command\":\"kappa\"}\n";
            return 1;
        }
    }

    for (std::size_t i = 0; i < subs.size(); i++) {
        if (subs[i]->parsed()) {
            return revdetect::pipeline::run_command(pipeline_commands[i], config_path, std::cout,
                                                    std::cerr, report_format);
        }
    }
    return 1;
}
