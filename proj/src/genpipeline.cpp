#include "revdetect/genpipeline.hpp"

#include "revdetect/errors.hpp"
#include "revdetect/util.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

namespace revdetect::genpipeline {

namespace {

constexpr std::array<std::string_view, 5> kPlaceholders = {
    "{GUIDELINES}", "{PAPER_CONTENT}", "{HUMAN_REVIEW}", "{SUMMARIZED_HUMAN_REVIEW}",
    "{CONFERENCE}"};

bool contains(std::string_view body, std::string_view needle) {
    return body.find(needle) != std::string_view::npos;
}

std::string replace_all(std::string body, std::string_view placeholder,
                        const std::string& value) {
    std::size_t pos = 0;
    while ((pos = body.find(placeholder, pos)) != std::string::npos) {
        body.replace(pos, placeholder.size(), value);
        pos += value.size();
    }
    return body;
}

const char* level_dir(corpus::Level level) {
    switch (level) {
        case corpus::Level::AI_BP: return "ai_bp";
        case corpus::Level::AI_EP: return "ai_ep";
        case corpus::Level::AI_HI: return "ai_hi";
        case corpus::Level::H_AI: return "h_ai";
        case corpus::Level::H: break;
    }
    throw PreconditionError("no prompt templates exist for level H");
}

} // namespace

void validate_template(const PromptTemplate& tmpl) {
    const std::string& b = tmpl.body;
    auto fail = [&](const std::string& what) {
        throw ValidationError("template " + std::string(corpus::to_string(tmpl.level)) +
                              "/variant " + std::to_string(tmpl.variant) + ": " + what);
    };
    if (b.empty()) fail("empty body");

    bool has_guidelines = contains(b, "{GUIDELINES}");
    bool has_paper = contains(b, "{PAPER_CONTENT}");
    bool has_review = contains(b, "{HUMAN_REVIEW}");
    bool has_keypoints = contains(b, "{SUMMARIZED_HUMAN_REVIEW}");

    switch (tmpl.level) {
        case corpus::Level::AI_BP:
        case corpus::Level::AI_EP:
            if (!has_guidelines || !has_paper) fail("requires {GUIDELINES} and {PAPER_CONTENT}");
            if (has_review || has_keypoints) fail("must not reference a human review");
            break;
        case corpus::Level::AI_HI:
            if (!has_guidelines || !has_paper || !has_keypoints) {
                fail("requires {GUIDELINES}, {PAPER_CONTENT} and {SUMMARIZED_HUMAN_REVIEW}");
            }
            break;
        case corpus::Level::H_AI:
            if (!has_review) fail("requires {HUMAN_REVIEW}");
            if (has_paper) fail("polish templates must not contain {PAPER_CONTENT}");
            if (has_guidelines || has_keypoints) fail("polish templates take only the review");
            break;
        case corpus::Level::H:
            fail("level H has no templates");
    }
}

std::string render(const PromptTemplate& tmpl, const RenderInputs& inputs) {
    const std::array<const std::string*, 5> values = {
        &inputs.guidelines, &inputs.paper_content, &inputs.human_review,
        &inputs.summarized_human_review, &inputs.conference};
    std::string out = tmpl.body;
    for (std::size_t i = 0; i < kPlaceholders.size(); i++) {
        if (!contains(out, kPlaceholders[i])) continue;
        if (values[i]->empty()) {
            throw PreconditionError("template " + std::string(corpus::to_string(tmpl.level)) +
                                    "/variant " + std::to_string(tmpl.variant) +
                                    ": no input for placeholder " +
                                    std::string(kPlaceholders[i]));
        }
        out = replace_all(std::move(out), kPlaceholders[i], *values[i]);
    }
    return out;
}

TemplateLibrary TemplateLibrary::load(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    TemplateLibrary lib;
    const corpus::Level levels[] = {corpus::Level::AI_BP, corpus::Level::AI_EP,
                                    corpus::Level::AI_HI, corpus::Level::H_AI};
    for (corpus::Level level : levels) {
        fs::path subdir = dir / level_dir(level);
        if (!fs::is_directory(subdir)) {
            throw ValidationError("missing template directory: " + subdir.string());
        }
        for (const auto& entry : fs::directory_iterator(subdir)) {
            std::string name = entry.path().filename().string();
            if (!util::starts_with(name, "variant_") || !util::ends_with(name, ".txt")) {
                continue;
            }
            int variant = std::stoi(name.substr(8, name.size() - 12));
            PromptTemplate t;
            t.level = level;
            t.variant = variant;
            t.body = util::read_file(entry.path());
            validate_template(t);
            lib.templates_[{static_cast<int>(level), variant}] = std::move(t);
        }
    }
    lib.keypoints_.level = corpus::Level::AI_HI;
    lib.keypoints_.variant = -1;
    lib.keypoints_.body = util::read_file(dir / "ai_hi" / "keypoints.txt");
    if (!contains(lib.keypoints_.body, "{HUMAN_REVIEW}")) {
        throw ValidationError("keypoints template requires {HUMAN_REVIEW}");
    }
    lib.judge_.variant = -1;
    lib.judge_.body = util::read_file(dir / "judge" / "new_content.txt");
    if (!contains(lib.judge_.body, "{REVIEW_A}") || !contains(lib.judge_.body, "{REVIEW_B}")) {
        throw ValidationError("judge template requires {REVIEW_A} and {REVIEW_B}");
    }
    if (lib.templates_.empty()) {
        throw ValidationError("no prompt templates found under " + dir.string());
    }
    return lib;
}

const PromptTemplate& TemplateLibrary::get(corpus::Level level, int variant) const {
    auto it = templates_.find({static_cast<int>(level), variant});
    if (it == templates_.end()) {
        throw PreconditionError("no template for level " +
                                std::string(corpus::to_string(level)) + " variant " +
                                std::to_string(variant));
    }
    return it->second;
}

std::vector<int> TemplateLibrary::variants(corpus::Level level) const {
    std::vector<int> out;
    for (const auto& [key, tmpl] : templates_) {
        if (key.first == static_cast<int>(level)) {
            out.push_back(key.second);
        }
    }
    return out;
}

std::string extract_keypoints(backends::Backend& backend, const TemplateLibrary& templates,
                              const corpus::Review& review, const std::string& model,
                              const backends::Sampling& sampling) {
    if (review.text.empty()) {
        throw PreconditionError("extract_keypoints: review text is empty");
    }
    RenderInputs inputs;
    inputs.human_review = review.text;
    std::string prompt = render(templates.keypoints(), inputs);
    return backend.chat(prompt, model, sampling);
}

corpus::Review generate_leveled_review(backends::Backend& backend,
                                       const TemplateLibrary& templates,
                                       const corpus::PaperDoc& paper,
                                       const std::string& guidelines,
                                       const std::optional<corpus::Review>& human_review,
                                       corpus::Level level, const PromptTemplate& tmpl,
                                       const std::string& model, const GenContext& ctx) {
    bool needs_human = level == corpus::Level::AI_HI || level == corpus::Level::H_AI;
    if (needs_human && !human_review) {
        throw PreconditionError("level " + std::string(corpus::to_string(level)) +
                                " requires a human review");
    }
    if (!needs_human && human_review) {
        throw PreconditionError("level " + std::string(corpus::to_string(level)) +
                                " takes no human review");
    }
    if (tmpl.level != level) {
        throw PreconditionError("template level " + std::string(corpus::to_string(tmpl.level)) +
                                " does not match requested level " +
                                std::string(corpus::to_string(level)));
    }

    RenderInputs inputs;
    inputs.guidelines = guidelines;
    inputs.paper_content = paper.full_text;
    inputs.conference = ctx.conference;
    if (level == corpus::Level::H_AI) {
        inputs.human_review = human_review->text;
    } else if (level == corpus::Level::AI_HI) {
        inputs.summarized_human_review =
            extract_keypoints(backend, templates, *human_review, model, ctx.sampling);
    }

    std::string prompt = render(tmpl, inputs);
    std::string completion = backend.chat(prompt, model, ctx.sampling);
    if (util::trim(completion).empty()) {
        throw ProtocolError("generation returned an empty completion");
    }

    std::string id = paper.paper_id + ":" + std::string(corpus::to_string(level)) + ":v" +
                     std::to_string(tmpl.variant) + ":" + model;
    if (ctx.sampling.seed) {
        id += ":r" + std::to_string(*ctx.sampling.seed);
    }
    return corpus::make_review(id, paper.paper_id, ctx.venue, ctx.year,
                               corpus::AssistanceLevel{level, false}, model, tmpl.variant,
                               std::move(completion));
}

bool filter_polish_length(const corpus::Review& original, const corpus::Review& polished,
                          double cap) {
    if (original.text.empty() || polished.text.empty()) {
        throw PreconditionError("filter_polish_length: both texts must be non-empty");
    }
    if (cap <= 1.0) {
        throw PreconditionError("filter_polish_length: cap must exceed 1");
    }
    double limit = cap * static_cast<double>(original.word_count);
    return static_cast<double>(polished.word_count) <= limit;
}

bool judge_new_content(backends::Backend& backend, const TemplateLibrary& templates,
                       const corpus::Review& original, const corpus::Review& polished,
                       const std::string& judge_model, const backends::Sampling& sampling) {
    if (original.text.empty() || polished.text.empty()) {
        throw PreconditionError("judge_new_content: both texts must be non-empty");
    }
    std::string prompt = replace_all(templates.judge().body, "{REVIEW_A}", original.text);
    prompt = replace_all(std::move(prompt), "{REVIEW_B}", polished.text);
    std::string completion = backend.chat(prompt, judge_model, sampling);

    std::string first;
    for (char c : util::trim(completion)) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            first += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else {
            break;
        }
    }
    if (first == "yes") return true;
    if (first == "no") return false;
    throw ProtocolError("judge verdict is neither yes nor no", completion);
}

PolishSafeguards PolishSafeguards::preset(int index) {
    PolishSafeguards s;
    switch (index) {
        case 0: // all three hazards present
            s.attach_paper = true;
            s.explicit_preservation = false;
            s.word_limit = 1000;
            break;
        case 1: // paper removed
            s.attach_paper = false;
            s.explicit_preservation = false;
            s.word_limit = 1000;
            break;
        case 2: // preservation instruction added back
            s.attach_paper = false;
            s.explicit_preservation = true;
            s.word_limit = 1000;
            break;
        case 3: // fully safeguarded
            s.attach_paper = false;
            s.explicit_preservation = true;
            s.word_limit.reset();
            break;
        default:
            throw PreconditionError("polish safeguard presets are 0..3");
    }
    return s;
}

std::string render_polish_prompt(const corpus::Review& human_review,
                                 const corpus::PaperDoc* paper,
                                 const PolishSafeguards& safeguards) {
    if (human_review.text.empty()) {
        throw PreconditionError("render_polish_prompt: review text is empty");
    }
    if (safeguards.attach_paper && paper == nullptr) {
        throw PreconditionError("render_polish_prompt: attach_paper set but no paper supplied");
    }
    std::string prompt =
        "I am a reviewer for a scientific conference. The following is a draft review written "
        "by me. Help me paraphrase it to improve grammar, flow and clarity.";
    if (safeguards.explicit_preservation) {
        prompt += " You must preserve all technical arguments, criticisms and core meaning "
                  "without alteration; do not add any new content.";
    }
    if (safeguards.word_limit) {
        prompt += " The review should not exceed " + std::to_string(*safeguards.word_limit) +
                  " words.";
    }
    prompt += "\nDraft review:\n" + human_review.text + "\n";
    if (safeguards.attach_paper) {
        prompt += "Paper-\n" + paper->full_text + "\n";
    }
    prompt += "Start your response directly with the review text. Do not include any "
              "introductory phrases or disclaimers (e.g., 'Sure, here is the review').";
    return prompt;
}

corpus::Review polish_review(backends::Backend& backend, const corpus::Review& human_review,
                             const corpus::PaperDoc* paper, const PolishSafeguards& safeguards,
                             const std::string& model, const GenContext& ctx) {
    std::string prompt = render_polish_prompt(human_review, paper, safeguards);
    std::string completion = backend.chat(prompt, model, ctx.sampling);
    if (util::trim(completion).empty()) {
        throw ProtocolError("polishing returned an empty completion");
    }
    std::string id = human_review.id + ":H-AI:" + model;
    if (ctx.sampling.seed) {
        id += ":r" + std::to_string(*ctx.sampling.seed);
    }
    return corpus::make_review(id, human_review.paper_id, human_review.venue, human_review.year,
                               corpus::AssistanceLevel{corpus::Level::H_AI, false}, model,
                               std::nullopt, std::move(completion));
}

} // namespace revdetect::genpipeline
