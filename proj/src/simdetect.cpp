#include "revdetect/simdetect.hpp"

#include "revdetect/errors.hpp"
#include "revdetect/stylometry.hpp"
#include "revdetect/util.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace revdetect::simdetect {

std::string_view to_string(Metric metric) {
    switch (metric) {
        case Metric::cosine: return "cosine";
        case Metric::soft_ngram: return "soft_ngram";
        case Metric::soft_keypoint: return "soft_keypoint";
    }
    return "cosine";
}

Metric metric_from_string(std::string_view s) {
    if (s == "cosine") return Metric::cosine;
    if (s == "soft_ngram") return Metric::soft_ngram;
    if (s == "soft_keypoint") return Metric::soft_keypoint;
    throw ValidationError("unknown similarity metric: '" + std::string(s) + "'");
}

ReferenceSet build_references(backends::Backend& backend,
                              const genpipeline::TemplateLibrary& templates,
                              const corpus::PaperDoc& paper, const std::string& guidelines,
                              const genpipeline::GenContext& ctx, const BuildConfig& config) {
    if (paper.full_text.empty()) {
        throw PreconditionError("build_references: paper full_text is empty");
    }
    if (config.models.empty() || config.prompt_variants.empty() || config.rollouts < 1) {
        throw PreconditionError("build_references: need >= 1 model, prompt and rollout");
    }
    ReferenceSet set;
    set.paper_id = paper.paper_id;
    set.provenance.models = config.models;
    set.provenance.prompt_variants = config.prompt_variants;
    set.provenance.rollouts = config.rollouts;

    for (const std::string& model : config.models) {
        for (int variant : config.prompt_variants) {
            const auto& tmpl = templates.get(corpus::Level::AI_BP, variant);
            for (int rollout = 0; rollout < config.rollouts; rollout++) {
                genpipeline::GenContext job_ctx = ctx;
                job_ctx.sampling.seed =
                    config.base_seed * 7919 + static_cast<std::uint64_t>(rollout);
                try {
                    corpus::Review r = genpipeline::generate_leveled_review(
                        backend, templates, paper, guidelines, std::nullopt,
                        corpus::Level::AI_BP, tmpl, model, job_ctx);
                    set.references.push_back(std::move(r));
                } catch (const Error& e) {
                    set.gaps.push_back({model, variant, rollout, e.what()});
                }
            }
        }
    }
    return set;
}

double cosine_similarity(const backends::EmbeddingVector& a, const backends::EmbeddingVector& b) {
    if (a.values.size() != b.values.size()) {
        throw PreconditionError("cosine_similarity: dimension mismatch (" +
                                std::to_string(a.values.size()) + " vs " +
                                std::to_string(b.values.size()) + ")");
    }
    if (a.values.empty()) {
        throw PreconditionError("cosine_similarity: empty vectors");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.values.size(); i++) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw PreconditionError("cosine_similarity: zero vector");
    }
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double soft_unit_match(const std::vector<backends::EmbeddingVector>& candidate_units,
                       const std::vector<backends::EmbeddingVector>& reference_units,
                       double tau) {
    if (candidate_units.empty()) {
        throw PreconditionError("soft_unit_match: candidate has no units");
    }
    if (tau <= 0.0 || tau >= 1.0) {
        throw PreconditionError("soft_unit_match: tau must lie in (0, 1)");
    }
    if (reference_units.empty()) {
        return 0.0;
    }
    std::size_t matched = 0;
    for (const auto& cu : candidate_units) {
        double best = -1.0;
        for (const auto& ru : reference_units) {
            best = std::max(best, cosine_similarity(cu, ru));
        }
        if (best > tau) {
            matched++;
        }
    }
    return static_cast<double>(matched) / static_cast<double>(candidate_units.size());
}

std::vector<std::string> ngram_units(const std::string& text, int n) {
    if (n < 1) {
        throw PreconditionError("ngram_units: n must be >= 1");
    }
    std::vector<std::string> words;
    for (const auto& t : stylometry::tokenize_words(text)) {
        if (!t.is_punct) {
            words.push_back(t.text);
        }
    }
    if (words.empty()) {
        throw PreconditionError("ngram_units: text has no words");
    }
    std::vector<std::string> units;
    if (words.size() < static_cast<std::size_t>(n)) {
        // whole-text fallback for short texts
        std::string all = words[0];
        for (std::size_t i = 1; i < words.size(); i++) {
            all += ' ';
            all += words[i];
        }
        units.push_back(std::move(all));
        return units;
    }
    for (std::size_t i = 0; i + n <= words.size(); i++) {
        std::string g = words[i];
        for (std::size_t j = 1; j < static_cast<std::size_t>(n); j++) {
            g += ' ';
            g += words[i + j];
        }
        units.push_back(std::move(g));
    }
    return units;
}

std::vector<std::string> keypoint_units(const std::string& extraction) {
    std::vector<std::string> units;
    std::istringstream ss(extraction);
    std::string line;
    while (std::getline(ss, line)) {
        std::string t = util::trim(line);
        // strip bullet markers and list numbering
        std::size_t i = 0;
        while (i < t.size() &&
               (t[i] == '-' || t[i] == '*' || t[i] == '.' || t[i] == ')' || t[i] == ' ' ||
                std::isdigit(static_cast<unsigned char>(t[i])))) {
            i++;
        }
        t = util::trim(t.substr(i));
        if (!t.empty()) {
            units.push_back(std::move(t));
        }
    }
    return units;
}

namespace {

std::vector<backends::EmbeddingVector> embed_units(backends::Backend& backend,
                                                   const std::vector<std::string>& units,
                                                   const std::string& model) {
    std::vector<backends::EmbeddingVector> out;
    out.reserve(units.size());
    for (const auto& u : units) {
        out.push_back(backend.embed(u, model));
    }
    return out;
}

// units of one review under the configured metric
std::vector<std::string> extract_units(backends::Backend& backend,
                                       const genpipeline::TemplateLibrary* templates,
                                       const corpus::Review& review,
                                       const SimilarityConfig& config) {
    if (config.metric == Metric::soft_ngram) {
        return ngram_units(review.text, config.n);
    }
    if (templates == nullptr) {
        throw PreconditionError("keypoint matching requires a template library");
    }
    std::string extraction = genpipeline::extract_keypoints(backend, *templates, review,
                                                            config.keypoint_model.empty()
                                                                ? config.embed_model
                                                                : config.keypoint_model);
    auto units = keypoint_units(extraction);
    if (units.empty()) {
        throw ProtocolError("keypoint extraction produced no units", extraction);
    }
    return units;
}

double unit_match_score(backends::Backend& backend,
                        const genpipeline::TemplateLibrary* templates,
                        const corpus::Review& candidate,
                        const std::vector<const corpus::Review*>& references,
                        const SimilarityConfig& config) {
    auto cand_units =
        embed_units(backend, extract_units(backend, templates, candidate, config),
                    config.embed_model);
    std::vector<backends::EmbeddingVector> ref_units;
    for (const corpus::Review* ref : references) {
        for (auto& e :
             embed_units(backend, extract_units(backend, templates, *ref, config),
                         config.embed_model)) {
            ref_units.push_back(std::move(e));
        }
    }
    return soft_unit_match(cand_units, ref_units, config.tau);
}

} // namespace

double soft_ngram_score(backends::Backend& backend, const corpus::Review& candidate,
                        const ReferenceSet& refs, const SimilarityConfig& config) {
    SimilarityConfig c = config;
    c.metric = Metric::soft_ngram;
    std::vector<const corpus::Review*> all;
    for (const auto& r : refs.references) all.push_back(&r);
    return unit_match_score(backend, nullptr, candidate, all, c);
}

double soft_keypoint_score(backends::Backend& backend,
                           const genpipeline::TemplateLibrary& templates,
                           const corpus::Review& candidate, const ReferenceSet& refs,
                           const SimilarityConfig& config) {
    SimilarityConfig c = config;
    c.metric = Metric::soft_keypoint;
    std::vector<const corpus::Review*> all;
    for (const auto& r : refs.references) all.push_back(&r);
    return unit_match_score(backend, &templates, candidate, all, c);
}

std::vector<double> similarity_features(backends::Backend& backend,
                                        const genpipeline::TemplateLibrary* templates,
                                        const corpus::Review& candidate, const ReferenceSet& refs,
                                        const SimilarityConfig& config) {
    if (refs.references.empty()) {
        throw PreconditionError("similarity_features: reference set is empty");
    }
    std::vector<double> scores;
    scores.reserve(refs.references.size());
    if (config.metric == Metric::cosine) {
        auto cand = backend.embed(candidate.text, config.embed_model);
        for (const auto& ref : refs.references) {
            scores.push_back(cosine_similarity(cand, backend.embed(ref.text, config.embed_model)));
        }
    } else {
        // per-reference soft score: candidate units against that reference only
        for (const auto& ref : refs.references) {
            scores.push_back(unit_match_score(backend, templates, candidate, {&ref}, config));
        }
    }
    std::sort(scores.begin(), scores.end(), std::greater<double>());
    return scores;
}

double max_similarity(backends::Backend& backend, const genpipeline::TemplateLibrary* templates,
                      const corpus::Review& candidate, const ReferenceSet& refs,
                      const SimilarityConfig& config) {
    return similarity_features(backend, templates, candidate, refs, config).front();
}

} // namespace revdetect::simdetect
