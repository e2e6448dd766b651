#ifndef REVDETECT_EVALSTATS_HPP
#define REVDETECT_EVALSTATS_HPP

#include "revdetect/corpus.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace revdetect::evalstats {

// Detection threshold fixed on a calibration set. The rule is strict on both
// sides, so every calibration score itself classifies negative.
struct Threshold {
    double value = 0.0;
    bool higher_is_ai = true;

    struct Source {
        std::string detector;
        std::size_t calibration_count = 0;
        double min_score = 0.0;
        double max_score = 0.0;
    };
    Source source;

    bool classify_positive(double score) const {
        return higher_is_ai ? score > value : score < value;
    }
};

// value = max(cal_scores) when higher_is_ai, else min(cal_scores): the
// extremum is the smallest threshold with zero positives on the set.
Threshold calibrate_threshold(const std::vector<double>& cal_scores, bool higher_is_ai,
                              const std::string& detector = {});

struct RateRow {
    corpus::AssistanceLevel level;
    std::size_t count = 0;
    std::size_t positives = 0;
    double rate = 0.0; // positives / count, in [0, 1]
    bool is_tpr = false; // true for policy-positive levels, false -> FPR row
};

struct RateTable {
    std::vector<RateRow> rows; // ordered by (base level, humanized)
    std::size_t total = 0;
};

RateTable level_rates(const std::vector<std::pair<const corpus::Review*, bool>>& outcomes);

enum class Label3 { AI, Mixed, Human };

std::string_view to_string(Label3 label);
Label3 label3_from_string(std::string_view s);

struct Confusion3 {
    struct Row {
        corpus::AssistanceLevel level;
        std::size_t count = 0;
        double ai_pct = 0.0;    // row-normalized percentages, sum to 100
        double mixed_pct = 0.0;
        double human_pct = 0.0;
    };
    std::vector<Row> rows;

    // Collapsed binary rates under the convention that only "AI" counts as
    // positive and "Mixed" groups with "Human".
    RateTable collapsed;
};

Confusion3 confusion_3class(const std::vector<std::pair<const corpus::Review*, Label3>>& outcomes);

struct McNemarResult {
    std::size_t b = 0; // A wrong, B right
    std::size_t c = 0; // A right, B wrong
    enum class Variant { continuity, exact, degenerate } variant = Variant::degenerate;
    std::optional<double> statistic; // chi-square, continuity variant only
    double p = 1.0;
};

// Paired test over per-item correctness of two detectors. Continuity-corrected
// chi-square when b + c >= 25, exact binomial otherwise, p = 1 when b = c = 0.
McNemarResult mcnemar(const std::vector<std::pair<bool, bool>>& paired);

// Survival function of the chi-square distribution with one degree of freedom.
double chi2_sf_df1(double x);

struct KappaResult {
    double kappa = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n = 0;
    bool degenerate = false; // expected agreement is 1, kappa undefined
    double analytic_se = 0.0;
};

struct KappaOptions {
    enum class CiMethod { bootstrap, analytic } method = CiMethod::bootstrap;
    std::size_t resamples = 10000;
    std::uint64_t seed = 0;
    double confidence = 0.95;
};

KappaResult cohens_kappa(const std::vector<std::string>& labels_a,
                         const std::vector<std::string>& labels_b,
                         const KappaOptions& options = {});

} // namespace revdetect::evalstats

#endif
