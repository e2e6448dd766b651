#include "revdetect/evalstats.hpp"

#include "revdetect/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

namespace revdetect::evalstats {

Threshold calibrate_threshold(const std::vector<double>& cal_scores, bool higher_is_ai,
                              const std::string& detector) {
    if (cal_scores.empty()) {
        throw PreconditionError("calibrate_threshold: no calibration scores");
    }
    for (double s : cal_scores) {
        if (!std::isfinite(s)) {
            throw PreconditionError("calibrate_threshold: non-finite calibration score");
        }
    }
    auto [min_it, max_it] = std::minmax_element(cal_scores.begin(), cal_scores.end());
    Threshold t;
    t.higher_is_ai = higher_is_ai;
    t.value = higher_is_ai ? *max_it : *min_it;
    t.source.detector = detector;
    t.source.calibration_count = cal_scores.size();
    t.source.min_score = *min_it;
    t.source.max_score = *max_it;
    return t;
}

namespace {

// deterministic row order: base level, plain before humanized
std::map<std::pair<int, bool>, std::pair<std::size_t, std::size_t>> group_counts(
    const std::vector<std::pair<const corpus::Review*, bool>>& outcomes) {
    std::map<std::pair<int, bool>, std::pair<std::size_t, std::size_t>> groups;
    for (const auto& [review, positive] : outcomes) {
        auto key = std::make_pair(static_cast<int>(review->level.base), review->level.humanized);
        auto& [count, positives] = groups[key];
        count++;
        if (positive) positives++;
    }
    return groups;
}

} // namespace

RateTable level_rates(const std::vector<std::pair<const corpus::Review*, bool>>& outcomes) {
    if (outcomes.empty()) {
        throw PreconditionError("level_rates: empty outcome list");
    }
    RateTable table;
    table.total = outcomes.size();
    for (const auto& [key, counts] : group_counts(outcomes)) {
        RateRow row;
        row.level = corpus::AssistanceLevel{static_cast<corpus::Level>(key.first), key.second};
        row.count = counts.first;
        row.positives = counts.second;
        row.rate = static_cast<double>(row.positives) / static_cast<double>(row.count);
        row.is_tpr = corpus::policy_positive(row.level);
        table.rows.push_back(row);
    }
    return table;
}

std::string_view to_string(Label3 label) {
    switch (label) {
        case Label3::AI: return "AI";
        case Label3::Mixed: return "Mixed";
        case Label3::Human: return "Human";
    }
    return "Human";
}

Label3 label3_from_string(std::string_view s) {
    if (s == "AI" || s == "ai") return Label3::AI;
    if (s == "Mixed" || s == "mixed") return Label3::Mixed;
    if (s == "Human" || s == "human") return Label3::Human;
    throw ValidationError("unknown 3-class label: '" + std::string(s) + "'");
}

Confusion3 confusion_3class(
    const std::vector<std::pair<const corpus::Review*, Label3>>& outcomes) {
    if (outcomes.empty()) {
        throw PreconditionError("confusion_3class: empty outcome list");
    }
    struct Cell {
        std::size_t n = 0, ai = 0, mixed = 0, human = 0;
    };
    std::map<std::pair<int, bool>, Cell> groups;
    std::vector<std::pair<const corpus::Review*, bool>> collapsed;
    collapsed.reserve(outcomes.size());
    for (const auto& [review, label] : outcomes) {
        auto& cell =
            groups[{static_cast<int>(review->level.base), review->level.humanized}];
        cell.n++;
        switch (label) {
            case Label3::AI: cell.ai++; break;
            case Label3::Mixed: cell.mixed++; break;
            case Label3::Human: cell.human++; break;
        }
        collapsed.emplace_back(review, label == Label3::AI);
    }
    Confusion3 out;
    for (const auto& [key, cell] : groups) {
        Confusion3::Row row;
        row.level = corpus::AssistanceLevel{static_cast<corpus::Level>(key.first), key.second};
        row.count = cell.n;
        double n = static_cast<double>(cell.n);
        row.ai_pct = 100.0 * static_cast<double>(cell.ai) / n;
        row.mixed_pct = 100.0 * static_cast<double>(cell.mixed) / n;
        row.human_pct = 100.0 * static_cast<double>(cell.human) / n;
        out.rows.push_back(row);
    }
    out.collapsed = level_rates(collapsed);
    return out;
}

double chi2_sf_df1(double x) {
    if (x <= 0.0) return 1.0;
    // For X ~ chi2(1), P(X >= x) = erfc(sqrt(x / 2)).
    return std::erfc(std::sqrt(x / 2.0));
}

namespace {

// log C(n, k) via lgamma, stable for the binomial tail sums
double log_choose(std::size_t n, std::size_t k) {
    return std::lgamma(static_cast<double>(n) + 1.0) -
           std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0);
}

double binom_cdf_half(std::size_t n, std::size_t k) {
    // P(B <= k) for B ~ Binomial(n, 1/2)
    double p = 0.0;
    for (std::size_t i = 0; i <= k && i <= n; i++) {
        p += std::exp(log_choose(n, i) - static_cast<double>(n) * std::log(2.0));
    }
    return std::min(p, 1.0);
}

} // namespace

McNemarResult mcnemar(const std::vector<std::pair<bool, bool>>& paired) {
    if (paired.empty()) {
        throw PreconditionError("mcnemar: empty pair list");
    }
    McNemarResult r;
    for (const auto& [correct_a, correct_b] : paired) {
        if (!correct_a && correct_b) r.b++;
        if (correct_a && !correct_b) r.c++;
    }
    std::size_t n = r.b + r.c;
    if (n == 0) {
        r.variant = McNemarResult::Variant::degenerate;
        r.p = 1.0;
        return r;
    }
    if (n >= 25) {
        r.variant = McNemarResult::Variant::continuity;
        double diff = std::abs(static_cast<double>(r.b) - static_cast<double>(r.c));
        double stat = (diff - 1.0) * (diff - 1.0) / static_cast<double>(n);
        r.statistic = stat;
        r.p = chi2_sf_df1(stat);
        return r;
    }
    r.variant = McNemarResult::Variant::exact;
    double lower = binom_cdf_half(n, r.b);
    double upper = r.b == 0 ? 1.0 : 1.0 - binom_cdf_half(n, r.b - 1); // P(B >= b)
    r.p = std::min(1.0, 2.0 * std::min(lower, upper));
    return r;
}

KappaResult cohens_kappa(const std::vector<std::string>& labels_a,
                         const std::vector<std::string>& labels_b,
                         const KappaOptions& options) {
    if (labels_a.size() != labels_b.size()) {
        throw PreconditionError("cohens_kappa: label lists differ in length");
    }
    if (labels_a.size() < 2) {
        throw PreconditionError("cohens_kappa: need at least 2 paired labels");
    }
    const std::size_t n = labels_a.size();

    auto point_kappa = [](const std::vector<std::string>& a, const std::vector<std::string>& b,
                          double* po_out, double* pe_out) {
        std::map<std::string, double> marg_a, marg_b;
        std::size_t agree = 0;
        for (std::size_t i = 0; i < a.size(); i++) {
            marg_a[a[i]] += 1.0;
            marg_b[b[i]] += 1.0;
            if (a[i] == b[i]) agree++;
        }
        double nn = static_cast<double>(a.size());
        double po = static_cast<double>(agree) / nn;
        double pe = 0.0;
        for (const auto& [label, ca] : marg_a) {
            auto it = marg_b.find(label);
            if (it != marg_b.end()) {
                pe += (ca / nn) * (it->second / nn);
            }
        }
        if (po_out) *po_out = po;
        if (pe_out) *pe_out = pe;
        if (pe >= 1.0) return 1.0; // both raters constant and identical
        return (po - pe) / (1.0 - pe);
    };

    double po = 0.0, pe = 0.0;
    KappaResult result;
    result.n = n;
    result.kappa = point_kappa(labels_a, labels_b, &po, &pe);
    if (pe >= 1.0) {
        result.degenerate = true;
        result.ci_low = result.ci_high = result.kappa;
        return result;
    }

    result.analytic_se = std::sqrt(po * (1.0 - po) /
                                   (static_cast<double>(n) * (1.0 - pe) * (1.0 - pe)));
    double z = 1.959963984540054; // two-sided 95%
    if (options.confidence != 0.95) {
        // inverse normal via Newton on erfc; adequate for report CIs
        double target = (1.0 - options.confidence) / 2.0;
        double guess = 1.96;
        for (int i = 0; i < 60; i++) {
            double f = 0.5 * std::erfc(guess / std::sqrt(2.0)) - target;
            double fp = -std::exp(-guess * guess / 2.0) / std::sqrt(2.0 * M_PI);
            guess -= f / fp;
        }
        z = guess;
    }

    if (options.method == KappaOptions::CiMethod::analytic) {
        result.ci_low = result.kappa - z * result.analytic_se;
        result.ci_high = result.kappa + z * result.analytic_se;
    } else {
        std::mt19937_64 rng(options.seed);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<double> estimates;
        estimates.reserve(options.resamples);
        std::vector<std::string> ra(n), rb(n);
        for (std::size_t it = 0; it < options.resamples; it++) {
            for (std::size_t i = 0; i < n; i++) {
                std::size_t idx = pick(rng);
                ra[i] = labels_a[idx];
                rb[i] = labels_b[idx];
            }
            estimates.push_back(point_kappa(ra, rb, nullptr, nullptr));
        }
        std::sort(estimates.begin(), estimates.end());
        double alpha = (1.0 - options.confidence) / 2.0;
        auto quantile = [&](double q) {
            double pos = q * static_cast<double>(estimates.size() - 1);
            std::size_t lo = static_cast<std::size_t>(pos);
            std::size_t hi = std::min(lo + 1, estimates.size() - 1);
            double frac = pos - static_cast<double>(lo);
            return estimates[lo] * (1.0 - frac) + estimates[hi] * frac;
        };
        result.ci_low = quantile(alpha);
        result.ci_high = quantile(1.0 - alpha);
        // a percentile interval can exclude the point estimate on tiny
        // samples; widen so the invariant ci_low <= kappa <= ci_high holds
        result.ci_low = std::min(result.ci_low, result.kappa);
        result.ci_high = std::max(result.ci_high, result.kappa);
    }
    return result;
}

} // namespace revdetect::evalstats
