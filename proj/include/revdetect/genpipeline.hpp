#ifndef REVDETECT_GENPIPELINE_HPP
#define REVDETECT_GENPIPELINE_HPP

#include "revdetect/backends.hpp"
#include "revdetect/corpus.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace revdetect::genpipeline {

// Placeholders a template body may carry. Which ones are required or
// forbidden depends on the level: polish templates never see the paper, and
// only key-point elaboration sees a summarized review.
struct PromptTemplate {
    corpus::Level level = corpus::Level::AI_BP;
    int variant = 0;
    std::string body;
};

struct RenderInputs {
    std::string guidelines;
    std::string paper_content;
    std::string human_review;
    std::string summarized_human_review;
    std::string conference;
};

// Pure string substitution; a placeholder with no input is an error.
std::string render(const PromptTemplate& tmpl, const RenderInputs& inputs);

// Validates a template body against its level's placeholder contract.
void validate_template(const PromptTemplate& tmpl);

// Prompt files keyed by (level, variant), plus the key-point extraction and
// new-content judge prompts.
class TemplateLibrary {
public:
    static TemplateLibrary load(const std::filesystem::path& dir);

    const PromptTemplate& get(corpus::Level level, int variant) const;
    std::vector<int> variants(corpus::Level level) const;
    const PromptTemplate& keypoints() const { return keypoints_; }
    const PromptTemplate& judge() const { return judge_; }

private:
    std::map<std::pair<int, int>, PromptTemplate> templates_;
    PromptTemplate keypoints_;
    PromptTemplate judge_;
};

struct GenContext {
    std::string conference; // display name substituted for {CONFERENCE}
    std::string venue;
    int year = 0;
    backends::Sampling sampling;
};

// Generates one review at the requested level. AI_HI first extracts key
// points from the human review and elaborates on them; H_AI polishes the
// human review. The returned review id is deterministic in the inputs.
corpus::Review generate_leveled_review(backends::Backend& backend, const TemplateLibrary& templates,
                                       const corpus::PaperDoc& paper,
                                       const std::string& guidelines,
                                       const std::optional<corpus::Review>& human_review,
                                       corpus::Level level, const PromptTemplate& tmpl,
                                       const std::string& model, const GenContext& ctx);

// Key assessment points of a review, as returned by the extraction prompt.
std::string extract_keypoints(backends::Backend& backend, const TemplateLibrary& templates,
                              const corpus::Review& review, const std::string& model,
                              const backends::Sampling& sampling = {});

// Length guard for polished reviews: keep iff the polished word count does
// not exceed cap times the original ("exceeds" is strict, the boundary is
// kept).
bool filter_polish_length(const corpus::Review& original, const corpus::Review& polished,
                          double cap = 1.25);

// Asks the judge model whether the polished review introduces technical
// content absent from the original (expanded summaries are exempted by the
// prompt). Returns true when new content was introduced.
bool judge_new_content(backends::Backend& backend, const TemplateLibrary& templates,
                       const corpus::Review& original, const corpus::Review& polished,
                       const std::string& judge_model, const backends::Sampling& sampling = {});

// Controls for the polishing prompt, covering the safeguard ablation:
// attaching the manuscript, explicit content preservation, and a word limit.
struct PolishSafeguards {
    bool explicit_preservation = true;
    bool attach_paper = false;
    std::optional<int> word_limit;
    double length_ratio_cap = 1.25;

    // presets 0..3, loosest to strictest: 0 = paper attached, no
    // preservation instruction, word limit; each later preset removes one
    // hazard; 3 is the fully safeguarded configuration.
    static PolishSafeguards preset(int index);
};

// Assembles a polishing prompt for the given safeguards. Requires paper when
// attach_paper is set; the output never contains paper text otherwise.
std::string render_polish_prompt(const corpus::Review& human_review,
                                 const corpus::PaperDoc* paper, const PolishSafeguards& safeguards);

// Polishes a human review under the given safeguards.
corpus::Review polish_review(backends::Backend& backend, const corpus::Review& human_review,
                             const corpus::PaperDoc* paper, const PolishSafeguards& safeguards,
                             const std::string& model, const GenContext& ctx);

} // namespace revdetect::genpipeline

#endif
