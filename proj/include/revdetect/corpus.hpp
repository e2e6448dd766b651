#ifndef REVDETECT_CORPUS_HPP
#define REVDETECT_CORPUS_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace revdetect::corpus {

// The five involvement levels, ordered canonically. This order is also the
// deterministic tie-break for classifier argmax.
enum class Level : std::uint8_t { AI_BP = 0, AI_EP = 1, AI_HI = 2, H_AI = 3, H = 4 };

inline constexpr std::size_t kLevelCount = 5;

std::string_view to_string(Level level);
Level level_from_string(std::string_view s);

struct AssistanceLevel {
    Level base = Level::H;
    bool humanized = false;

    // humanized reviews exist only for AI_BP and H_AI populations
    static AssistanceLevel make(Level base, bool humanized);

    friend bool operator==(const AssistanceLevel&, const AssistanceLevel&) = default;
    friend auto operator<=>(const AssistanceLevel&, const AssistanceLevel&) = default;
};

std::string to_string(const AssistanceLevel& level);

struct Review {
    std::string id;
    std::string paper_id;
    std::string venue;
    int year = 0;
    AssistanceLevel level;
    std::optional<std::string> generator_model;
    std::optional<int> prompt_variant;
    std::string text;
    std::size_t word_count = 0; // derived at construction from the word tokenizer

    friend bool operator==(const Review&, const Review&) = default;
};

// Recomputes word_count and checks the level/provenance invariants.
Review make_review(std::string id, std::string paper_id, std::string venue, int year,
                   AssistanceLevel level, std::optional<std::string> generator_model,
                   std::optional<int> prompt_variant, std::string text);

struct PaperDoc {
    std::string paper_id;
    std::string title;
    std::string abstract;
    std::string introduction;
    std::string conclusion;
    std::string full_text;

    bool conditioning_eligible() const {
        return !abstract.empty() && !introduction.empty() && !conclusion.empty();
    }

    friend bool operator==(const PaperDoc&, const PaperDoc&) = default;
};

enum class SplitTag { easy, hard, mixed };

std::string_view to_string(SplitTag tag);
SplitTag split_tag_from_string(std::string_view s);

// Immutable after load; safe to share across threads read-only.
struct ReviewSet {
    std::vector<Review> reviews;
    std::map<std::string, PaperDoc> papers;
    SplitTag split_tag = SplitTag::mixed;

    std::size_t human_review_count() const;
};

// Loads the line-delimited JSON review manifest plus its paper file and
// validates every record. Reported errors carry the 1-based line number.
ReviewSet load_manifest(const std::filesystem::path& reviews_path,
                        const std::filesystem::path& papers_path,
                        SplitTag split_tag = SplitTag::mixed);

// Single-path convenience: papers are expected at <dir>/papers.jsonl next to
// the review manifest.
ReviewSet load_manifest(const std::filesystem::path& reviews_path);

void save_manifest(const ReviewSet& set, const std::filesystem::path& reviews_path,
                   const std::filesystem::path& papers_path);

// Venue/year predicate used to pick the calibration population.
struct CalibrationFilter {
    std::string venue;             // exact match; empty matches any venue
    std::optional<int> min_year;
    std::optional<int> max_year;

    bool matches(const Review& r) const;
};

struct SplitResult {
    ReviewSet calibration;
    ReviewSet evaluation;
    std::vector<std::string> discarded_review_ids; // overlap with calibration papers
};

// Splits at paper granularity: a seeded half of the papers whose human
// reviews match the filter become the calibration set; every review of those
// papers is excluded from evaluation, so the two sides never share a paper.
SplitResult split_calibration_eval(const ReviewSet& set, const CalibrationFilter& filter,
                                   std::uint64_t seed, double calibration_fraction = 0.5);

// Positive class under a polishing-only policy: fully or mostly AI-written
// levels. The humanized flag does not change the mapping.
bool policy_positive(const AssistanceLevel& level);
bool policy_positive(Level base);

} // namespace revdetect::corpus

#endif
