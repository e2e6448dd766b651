#ifndef REVDETECT_PIPELINE_HPP
#define REVDETECT_PIPELINE_HPP

#include "revdetect/backends.hpp"
#include "revdetect/config.hpp"
#include "revdetect/corpus.hpp"
#include "revdetect/evalstats.hpp"
#include "revdetect/extdetect.hpp"
#include "revdetect/genpipeline.hpp"
#include "revdetect/simdetect.hpp"
#include "revdetect/stylometry.hpp"

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace revdetect::pipeline {

// Shared state for one run: corpus, backend stack, templates, lexicons.
class Runtime {
public:
    explicit Runtime(config::RunConfig cfg);

    const config::RunConfig& cfg() const { return cfg_; }
    backends::Backend& backend() { return *backend_; }
    const genpipeline::TemplateLibrary& templates() const { return templates_; }
    const stylometry::LexiconBundle& lexicons() const { return lexicons_; }
    const std::string& guidelines() const { return guidelines_; }

    const corpus::ReviewSet& review_set(); // loaded lazily, cached

    // References for one paper, built through the cached backend.
    const simdetect::ReferenceSet& references(const corpus::PaperDoc& paper);

    extdetect::ExternalDetector& external_detector(const std::string& name);

private:
    config::RunConfig cfg_;
    std::shared_ptr<backends::Backend> backend_;
    genpipeline::TemplateLibrary templates_;
    stylometry::LexiconBundle lexicons_;
    std::string guidelines_;
    std::optional<corpus::ReviewSet> review_set_;
    std::map<std::string, simdetect::ReferenceSet> reference_sets_;
    std::map<std::string, std::unique_ptr<extdetect::ExternalDetector>> externals_;
};

// ---------------------------------------------------------------------------
// Evaluation report
// ---------------------------------------------------------------------------

struct DetectorEval {
    std::string name;
    bool scalar = true;
    std::optional<evalstats::Threshold> threshold; // scalar detectors only
    evalstats::RateTable rates;
    std::optional<evalstats::Confusion3> confusion; // 3-class detectors only
};

struct McNemarCell {
    std::string detector_a;
    std::string detector_b;
    corpus::AssistanceLevel level;
    evalstats::McNemarResult result;
};

struct EvalReport {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::size_t calibration_reviews = 0;
    std::size_t calibration_papers = 0;
    std::size_t evaluation_reviews = 0;
    std::size_t evaluation_papers = 0;
    std::vector<DetectorEval> detectors;
    std::vector<McNemarCell> mcnemar;
};

// Percentages rendered to one decimal; output is deterministic for a given
// report.
std::string render_report_markdown(const EvalReport& report);
std::string render_report_csv(const EvalReport& report);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& json_text);

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

// ingest | generate | refs | features | score | train | calibrate | evaluate
// | report. Returns the process exit status; failures print one
// machine-readable JSON error line to `err`.
int run_command(const std::string& command, const std::filesystem::path& config_path,
                std::ostream& out, std::ostream& err,
                const std::string& report_format = "markdown");

} // namespace revdetect::pipeline

#endif
