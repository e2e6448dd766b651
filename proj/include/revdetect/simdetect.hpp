#ifndef REVDETECT_SIMDETECT_HPP
#define REVDETECT_SIMDETECT_HPP

#include "revdetect/backends.hpp"
#include "revdetect/corpus.hpp"
#include "revdetect/genpipeline.hpp"

#include <string>
#include <vector>

namespace revdetect::simdetect {

enum class Metric { cosine, soft_ngram, soft_keypoint };

std::string_view to_string(Metric metric);
Metric metric_from_string(std::string_view s);

struct SimilarityConfig {
    Metric metric = Metric::cosine;
    int n = 40;            // word n-gram length for soft_ngram
    double tau = 0.80;     // close-match cosine threshold, strict >
    std::string embed_model = "embed";
    std::string keypoint_model; // extractor model for soft_keypoint
};

// AI-written reference reviews for one paper, one per
// (model, prompt variant, rollout).
struct ReferenceSet {
    struct Provenance {
        std::vector<std::string> models;
        std::vector<int> prompt_variants;
        int rollouts = 0;
    };
    struct Gap {
        std::string model;
        int variant = 0;
        int rollout = 0;
        std::string error;
    };

    std::string paper_id;
    std::vector<corpus::Review> references;
    Provenance provenance;
    std::vector<Gap> gaps; // jobs that failed; set is partial when non-empty

    bool complete() const { return gaps.empty(); }
    std::size_t expected_size() const {
        return provenance.models.size() * provenance.prompt_variants.size() *
               static_cast<std::size_t>(provenance.rollouts);
    }
};

struct BuildConfig {
    std::vector<std::string> models;
    std::vector<int> prompt_variants;
    int rollouts = 5;
    std::uint64_t base_seed = 0;
};

// Prompts each (model, variant) pair `rollouts` times over the paper; every
// job is keyed by its rollout seed so reruns hit the backend cache. Failed
// jobs are recorded as gaps instead of aborting the set.
ReferenceSet build_references(backends::Backend& backend,
                              const genpipeline::TemplateLibrary& templates,
                              const corpus::PaperDoc& paper, const std::string& guidelines,
                              const genpipeline::GenContext& ctx, const BuildConfig& config);

double cosine_similarity(const backends::EmbeddingVector& a, const backends::EmbeddingVector& b);

// Fraction of candidate units whose best cosine against any reference unit
// strictly exceeds tau.
double soft_unit_match(const std::vector<backends::EmbeddingVector>& candidate_units,
                       const std::vector<backends::EmbeddingVector>& reference_units, double tau);

// Overlapping word n-grams of length n (stride 1); a text shorter than n
// words becomes a single whole-text unit.
std::vector<std::string> ngram_units(const std::string& text, int n);

// One unit per non-empty line of the key-point extraction, bullets stripped.
std::vector<std::string> keypoint_units(const std::string& extraction);

// Scalar detection scores: candidate units matched against the union of all
// references' units.
double soft_ngram_score(backends::Backend& backend, const corpus::Review& candidate,
                        const ReferenceSet& refs, const SimilarityConfig& config);
double soft_keypoint_score(backends::Backend& backend,
                           const genpipeline::TemplateLibrary& templates,
                           const corpus::Review& candidate, const ReferenceSet& refs,
                           const SimilarityConfig& config);

// Per-reference scores under the chosen metric, sorted descending so the
// vector is invariant to reference ordering.
std::vector<double> similarity_features(backends::Backend& backend,
                                        const genpipeline::TemplateLibrary* templates,
                                        const corpus::Review& candidate, const ReferenceSet& refs,
                                        const SimilarityConfig& config);

// Maximum per-reference score; equals the first entry of similarity_features.
double max_similarity(backends::Backend& backend, const genpipeline::TemplateLibrary* templates,
                      const corpus::Review& candidate, const ReferenceSet& refs,
                      const SimilarityConfig& config);

} // namespace revdetect::simdetect

#endif
