#include "revdetect/zeroshot.hpp"

#include "revdetect/errors.hpp"

#include <cmath>

namespace revdetect::zeroshot {

std::string_view to_string(DetectorKind kind) {
    switch (kind) {
        case DetectorKind::loglikelihood: return "loglikelihood";
        case DetectorKind::fastdetect: return "fastdetect";
        case DetectorKind::binoculars: return "binoculars";
    }
    return "loglikelihood";
}

DetectorKind detector_kind_from_string(std::string_view s) {
    if (s == "loglikelihood") return DetectorKind::loglikelihood;
    if (s == "fastdetect") return DetectorKind::fastdetect;
    if (s == "binoculars") return DetectorKind::binoculars;
    throw ValidationError("unknown detector kind: '" + std::string(s) + "'");
}

bool higher_is_ai(DetectorKind kind) {
    return kind != DetectorKind::binoculars;
}

std::string DetectorSpec::name() const {
    std::string n(to_string(kind));
    if (conditioned) n += "+ctx";
    return n;
}

namespace {

void require_scored_region(const backends::TokenScoreSeq& seq, const char* op) {
    if (seq.scored_size() == 0) {
        throw PreconditionError(std::string(op) + ": no records after the conditioning prefix");
    }
}

} // namespace

double loglikelihood_score(const backends::TokenScoreSeq& seq) {
    require_scored_region(seq, "loglikelihood_score");
    double sum = 0.0;
    for (std::size_t i = seq.prefix_len; i < seq.records.size(); i++) {
        sum += seq.records[i].logp_observed;
    }
    return sum / static_cast<double>(seq.scored_size());
}

double fastdetect_score(const backends::TokenScoreSeq& seq) {
    require_scored_region(seq, "fastdetect_score");
    double sum_logp = 0.0, sum_mean = 0.0, sum_var = 0.0;
    for (std::size_t i = seq.prefix_len; i < seq.records.size(); i++) {
        sum_logp += seq.records[i].logp_observed;
        sum_mean += seq.records[i].mean_logp;
        sum_var += seq.records[i].var_logp;
    }
    if (sum_var <= 0.0) {
        throw PreconditionError("fastdetect_score: total sampling variance is zero");
    }
    return (sum_logp - sum_mean) / std::sqrt(sum_var);
}

double binoculars_score(const backends::TokenScoreSeq& seq) {
    require_scored_region(seq, "binoculars_score");
    double sum_nll = 0.0, sum_cross = 0.0;
    for (std::size_t i = seq.prefix_len; i < seq.records.size(); i++) {
        const auto& r = seq.records[i];
        if (!r.cross_nll) {
            throw PreconditionError("binoculars_score: record " + std::to_string(i) +
                                    " is missing cross_nll");
        }
        sum_nll += -r.logp_observed;
        sum_cross += *r.cross_nll;
    }
    if (sum_cross <= 0.0) {
        throw PreconditionError("binoculars_score: mean cross_nll is zero");
    }
    return sum_nll / sum_cross;
}

double apply(DetectorKind kind, const backends::TokenScoreSeq& seq) {
    switch (kind) {
        case DetectorKind::loglikelihood: return loglikelihood_score(seq);
        case DetectorKind::fastdetect: return fastdetect_score(seq);
        case DetectorKind::binoculars: return binoculars_score(seq);
    }
    throw PreconditionError("unreachable detector kind");
}

std::string conditioning_prefix(const corpus::PaperDoc& paper) {
    return "Abstract\n" + paper.abstract + "\n\nIntroduction\n" + paper.introduction +
           "\n\nConclusion\n" + paper.conclusion;
}

double conditioned_score(const corpus::Review& review, const corpus::PaperDoc& paper,
                         const DetectorSpec& spec, const ScoringModels& models,
                         backends::Backend& backend) {
    std::optional<std::string> prefix;
    if (spec.conditioned) {
        if (!paper.conditioning_eligible()) {
            throw PreconditionError("paper '" + paper.paper_id +
                                    "' lacks the abstract/introduction/conclusion sections "
                                    "needed for conditioning");
        }
        prefix = conditioning_prefix(paper);
    }
    std::optional<std::string> performer;
    if (spec.kind == DetectorKind::binoculars) {
        if (models.performer.empty()) {
            throw PreconditionError("binoculars requires a performer model");
        }
        performer = models.performer;
    }
    auto seq = backend.token_scores(review.text, prefix, models.observer, models.sampler,
                                    performer);
    return apply(spec.kind, seq);
}

} // namespace revdetect::zeroshot
