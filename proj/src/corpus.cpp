#include "revdetect/corpus.hpp"

#include "revdetect/errors.hpp"
#include "revdetect/stylometry.hpp"
#include "revdetect/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

namespace revdetect::corpus {

using nlohmann::json;

std::string_view to_string(Level level) {
    switch (level) {
        case Level::AI_BP: return "AI-BP";
        case Level::AI_EP: return "AI-EP";
        case Level::AI_HI: return "AI-HI";
        case Level::H_AI: return "H-AI";
        case Level::H: return "H";
    }
    return "H";
}

Level level_from_string(std::string_view s) {
    if (s == "AI-BP") return Level::AI_BP;
    if (s == "AI-EP") return Level::AI_EP;
    if (s == "AI-HI") return Level::AI_HI;
    if (s == "H-AI") return Level::H_AI;
    if (s == "H") return Level::H;
    throw ValidationError("unknown assistance level: '" + std::string(s) + "'");
}

AssistanceLevel AssistanceLevel::make(Level base, bool humanized) {
    if (humanized && base != Level::AI_BP && base != Level::H_AI) {
        throw ValidationError("humanized flag is only valid for AI-BP and H-AI, got " +
                              std::string(to_string(base)));
    }
    return AssistanceLevel{base, humanized};
}

std::string to_string(const AssistanceLevel& level) {
    std::string s(to_string(level.base));
    if (level.humanized) {
        s += "+humanized";
    }
    return s;
}

std::string_view to_string(SplitTag tag) {
    switch (tag) {
        case SplitTag::easy: return "easy";
        case SplitTag::hard: return "hard";
        case SplitTag::mixed: return "mixed";
    }
    return "mixed";
}

SplitTag split_tag_from_string(std::string_view s) {
    if (s == "easy") return SplitTag::easy;
    if (s == "hard") return SplitTag::hard;
    if (s == "mixed") return SplitTag::mixed;
    throw ValidationError("unknown split tag: '" + std::string(s) + "'");
}

namespace {

std::size_t count_words(std::string_view text) {
    std::size_t n = 0;
    for (const auto& t : stylometry::tokenize_words(text)) {
        if (!t.is_punct) n++;
    }
    return n;
}

} // namespace

Review make_review(std::string id, std::string paper_id, std::string venue, int year,
                   AssistanceLevel level, std::optional<std::string> generator_model,
                   std::optional<int> prompt_variant, std::string text) {
    if (level.base == Level::H && (generator_model || prompt_variant)) {
        throw ValidationError("review '" + id +
                              "': H-level reviews cannot carry generator provenance");
    }
    Review r;
    r.id = std::move(id);
    r.paper_id = std::move(paper_id);
    r.venue = std::move(venue);
    r.year = year;
    r.level = AssistanceLevel::make(level.base, level.humanized);
    r.generator_model = std::move(generator_model);
    r.prompt_variant = prompt_variant;
    r.word_count = count_words(text);
    r.text = std::move(text);
    return r;
}

std::size_t ReviewSet::human_review_count() const {
    return static_cast<std::size_t>(
        std::count_if(reviews.begin(), reviews.end(), [](const Review& r) {
            return r.level.base == Level::H && !r.level.humanized;
        }));
}

namespace {

Review review_from_json(const json& j, std::size_t line_no) {
    auto context = [&](const std::string& what) {
        return "reviews line " + std::to_string(line_no) + ": " + what;
    };
    try {
        AssistanceLevel level = AssistanceLevel::make(
            level_from_string(j.at("level").get<std::string>()), j.value("humanized", false));
        std::optional<std::string> model;
        if (j.contains("generator_model") && !j["generator_model"].is_null()) {
            model = j["generator_model"].get<std::string>();
        }
        std::optional<int> variant;
        if (j.contains("prompt_variant") && !j["prompt_variant"].is_null()) {
            variant = j["prompt_variant"].get<int>();
        }
        return make_review(j.at("id").get<std::string>(), j.at("paper_id").get<std::string>(),
                           j.at("venue").get<std::string>(), j.at("year").get<int>(), level,
                           std::move(model), variant, j.at("text").get<std::string>());
    } catch (const json::exception& e) {
        throw ValidationError(context(e.what()));
    } catch (const ValidationError& e) {
        throw ValidationError(context(e.what()));
    }
}

PaperDoc paper_from_json(const json& j, std::size_t line_no) {
    try {
        PaperDoc p;
        p.paper_id = j.at("paper_id").get<std::string>();
        p.title = j.value("title", "");
        p.abstract = j.value("abstract", "");
        p.introduction = j.value("introduction", "");
        p.conclusion = j.value("conclusion", "");
        p.full_text = j.value("full_text", "");
        return p;
    } catch (const json::exception& e) {
        throw ValidationError("papers line " + std::to_string(line_no) + ": " + e.what());
    }
}

template <typename Fn>
void for_each_jsonl_line(const std::filesystem::path& path, const char* what, Fn&& fn) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError(std::string("cannot open ") + what + " file: " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        std::string t = util::trim(line);
        if (t.empty()) continue;
        json j = json::parse(t, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw ValidationError(std::string(what) + " line " + std::to_string(line_no) +
                                  ": malformed JSON record");
        }
        fn(j, line_no);
    }
}

} // namespace

ReviewSet load_manifest(const std::filesystem::path& reviews_path,
                        const std::filesystem::path& papers_path, SplitTag split_tag) {
    ReviewSet set;
    set.split_tag = split_tag;

    for_each_jsonl_line(papers_path, "papers", [&](const json& j, std::size_t line_no) {
        PaperDoc p = paper_from_json(j, line_no);
        if (set.papers.count(p.paper_id)) {
            throw ValidationError("papers line " + std::to_string(line_no) +
                                  ": duplicate paper id '" + p.paper_id + "'");
        }
        set.papers.emplace(p.paper_id, std::move(p));
    });

    std::unordered_set<std::string> seen_ids;
    for_each_jsonl_line(reviews_path, "reviews", [&](const json& j, std::size_t line_no) {
        Review r = review_from_json(j, line_no);
        if (!seen_ids.insert(r.id).second) {
            throw ValidationError("reviews line " + std::to_string(line_no) +
                                  ": duplicate review id '" + r.id + "'");
        }
        if (set.papers.find(r.paper_id) == set.papers.end()) {
            throw ValidationError("reviews line " + std::to_string(line_no) + ": review '" +
                                  r.id + "' references unknown paper '" + r.paper_id + "'");
        }
        set.reviews.push_back(std::move(r));
    });

    return set;
}

ReviewSet load_manifest(const std::filesystem::path& reviews_path) {
    return load_manifest(reviews_path, reviews_path.parent_path() / "papers.jsonl");
}

void save_manifest(const ReviewSet& set, const std::filesystem::path& reviews_path,
                   const std::filesystem::path& papers_path) {
    std::ostringstream reviews;
    for (const Review& r : set.reviews) {
        json j;
        j["id"] = r.id;
        j["paper_id"] = r.paper_id;
        j["venue"] = r.venue;
        j["year"] = r.year;
        j["level"] = std::string(to_string(r.level.base));
        j["humanized"] = r.level.humanized;
        if (r.generator_model) j["generator_model"] = *r.generator_model;
        if (r.prompt_variant) j["prompt_variant"] = *r.prompt_variant;
        j["text"] = r.text;
        reviews << j.dump() << '\n';
    }
    util::write_file_atomic(reviews_path, reviews.str());

    std::ostringstream papers;
    for (const auto& [id, p] : set.papers) {
        json j;
        j["paper_id"] = p.paper_id;
        j["title"] = p.title;
        j["abstract"] = p.abstract;
        j["introduction"] = p.introduction;
        j["conclusion"] = p.conclusion;
        j["full_text"] = p.full_text;
        papers << j.dump() << '\n';
    }
    util::write_file_atomic(papers_path, papers.str());
}

bool CalibrationFilter::matches(const Review& r) const {
    if (!venue.empty() && r.venue != venue) return false;
    if (min_year && r.year < *min_year) return false;
    if (max_year && r.year > *max_year) return false;
    return true;
}

SplitResult split_calibration_eval(const ReviewSet& set, const CalibrationFilter& filter,
                                   std::uint64_t seed, double calibration_fraction) {
    if (calibration_fraction <= 0.0 || calibration_fraction >= 1.0) {
        throw PreconditionError("calibration_fraction must lie in (0, 1)");
    }

    // candidate pool: purely human reviews matching the venue/year filter
    std::vector<const Review*> candidates;
    for (const Review& r : set.reviews) {
        if (r.level.base == Level::H && !r.level.humanized && filter.matches(r)) {
            candidates.push_back(&r);
        }
    }
    if (candidates.empty()) {
        throw PreconditionError("calibration filter selected zero human reviews");
    }

    std::set<std::string> candidate_papers;
    for (const Review* r : candidates) {
        candidate_papers.insert(r->paper_id);
    }
    std::vector<std::string> papers(candidate_papers.begin(), candidate_papers.end());
    std::mt19937_64 rng(seed);
    std::shuffle(papers.begin(), papers.end(), rng);

    std::size_t take = static_cast<std::size_t>(
        std::max(1.0, std::ceil(calibration_fraction * static_cast<double>(papers.size()))));
    take = std::min(take, papers.size());
    std::unordered_set<std::string> calibration_papers(papers.begin(), papers.begin() + take);

    SplitResult out;
    out.calibration.split_tag = set.split_tag;
    out.evaluation.split_tag = set.split_tag;
    for (const Review& r : set.reviews) {
        bool cal_paper = calibration_papers.count(r.paper_id) > 0;
        bool is_candidate = r.level.base == Level::H && !r.level.humanized && filter.matches(r);
        if (cal_paper && is_candidate) {
            out.calibration.reviews.push_back(r);
        } else if (!cal_paper) {
            out.evaluation.reviews.push_back(r);
        } else {
            // same paper as a calibration review: kept out of both sides
            out.discarded_review_ids.push_back(r.id);
        }
    }
    for (const auto& [id, p] : set.papers) {
        if (calibration_papers.count(id)) {
            out.calibration.papers.emplace(id, p);
        } else {
            out.evaluation.papers.emplace(id, p);
        }
    }
    return out;
}

bool policy_positive(Level base) {
    return base == Level::AI_BP || base == Level::AI_EP || base == Level::AI_HI;
}

bool policy_positive(const AssistanceLevel& level) {
    return policy_positive(level.base);
}

} // namespace revdetect::corpus
