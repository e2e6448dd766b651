#ifndef REVDETECT_ZEROSHOT_HPP
#define REVDETECT_ZEROSHOT_HPP

#include "revdetect/backends.hpp"
#include "revdetect/corpus.hpp"

#include <string>
#include <string_view>

namespace revdetect::zeroshot {

enum class DetectorKind { loglikelihood, fastdetect, binoculars };

std::string_view to_string(DetectorKind kind);
DetectorKind detector_kind_from_string(std::string_view s);

// Score direction is fixed per formula: mean log-likelihood and the
// normalized discrepancy rise for AI text, the observer/performer ratio falls.
bool higher_is_ai(DetectorKind kind);

struct DetectorSpec {
    DetectorKind kind = DetectorKind::loglikelihood;
    bool conditioned = false;

    bool higher_is_ai() const { return zeroshot::higher_is_ai(kind); }
    std::string name() const;
};

// Mean logp_observed over the records after prefix_len.
double loglikelihood_score(const backends::TokenScoreSeq& seq);

// (sum logp_observed - sum mean_logp) / sqrt(sum var_logp) over the same
// region.
double fastdetect_score(const backends::TokenScoreSeq& seq);

// mean(-logp_observed) / mean(cross_nll); requires cross_nll on every scored
// record.
double binoculars_score(const backends::TokenScoreSeq& seq);

double apply(DetectorKind kind, const backends::TokenScoreSeq& seq);

struct ScoringModels {
    std::string observer;
    std::string sampler;
    std::string performer; // used by binoculars only
};

// Conditioning prefix assembled from the paper's abstract, introduction and
// conclusion, with section headers, sections joined by blank lines.
std::string conditioning_prefix(const corpus::PaperDoc& paper);

// Runs the named formula over backend token scores, conditioning on the paper
// when spec.conditioned is set.
double conditioned_score(const corpus::Review& review, const corpus::PaperDoc& paper,
                         const DetectorSpec& spec, const ScoringModels& models,
                         backends::Backend& backend);

} // namespace revdetect::zeroshot

#endif
