#include <doctest.h>

#include "revdetect/corpus.hpp"
#include "revdetect/errors.hpp"
#include "revdetect/util.hpp"

#include <filesystem>
#include <random>
#include <set>

using namespace revdetect;
using namespace revdetect::corpus;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir() {
    fs::path dir = fs::temp_directory_path() / "revdetect_corpus_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write(const fs::path& p, const std::string& content) {
    util::write_file_atomic(p, content);
}

const char* kPaperLine =
    R"({"paper_id":"p1","title":"T","abstract":"A","introduction":"I","conclusion":"C","full_text":"A I C"})";

} // namespace

TEST_CASE("level string round-trip and canonical order") {
    CHECK(level_from_string("AI-BP") == Level::AI_BP);
    CHECK(level_from_string("H") == Level::H);
    CHECK(to_string(Level::AI_EP) == "AI-EP");
    CHECK_THROWS_AS(level_from_string("nope"), ValidationError);
    // canonical tie-break order
    CHECK(static_cast<int>(Level::AI_BP) < static_cast<int>(Level::AI_EP));
    CHECK(static_cast<int>(Level::AI_HI) < static_cast<int>(Level::H_AI));
    CHECK(static_cast<int>(Level::H_AI) < static_cast<int>(Level::H));
}

TEST_CASE("humanized flag only for AI-BP and H-AI") {
    CHECK_NOTHROW(AssistanceLevel::make(Level::AI_BP, true));
    CHECK_NOTHROW(AssistanceLevel::make(Level::H_AI, true));
    CHECK_NOTHROW(AssistanceLevel::make(Level::H, false));
    CHECK_THROWS_AS(AssistanceLevel::make(Level::H, true), ValidationError);
    CHECK_THROWS_AS(AssistanceLevel::make(Level::AI_EP, true), ValidationError);
    CHECK_THROWS_AS(AssistanceLevel::make(Level::AI_HI, true), ValidationError);
}

TEST_CASE("make_review computes word_count and checks provenance") {
    auto r = make_review("r1", "p1", "ICLR", 2017, {Level::H, false}, std::nullopt, std::nullopt,
                         "The cat sat.");
    CHECK(r.word_count == 3);
    // H reviews carry no generator provenance
    CHECK_THROWS_AS(make_review("r2", "p1", "ICLR", 2017, {Level::H, false}, "gpt", std::nullopt,
                                "text"),
                    ValidationError);
    CHECK_NOTHROW(make_review("r3", "p1", "ICLR", 2017, {Level::AI_BP, false}, "gpt", 0, "text"));
}

TEST_CASE("policy_positive partitions the levels") {
    CHECK(policy_positive(Level::AI_BP));
    CHECK(policy_positive(Level::AI_EP));
    CHECK(policy_positive(Level::AI_HI));
    CHECK_FALSE(policy_positive(Level::H_AI));
    CHECK_FALSE(policy_positive(Level::H));
    // humanized flag does not change the mapping
    CHECK(policy_positive(AssistanceLevel{Level::AI_BP, true}));
    CHECK_FALSE(policy_positive(AssistanceLevel{Level::H_AI, true}));
    // exactly three positives over the 5 base levels
    int positives = 0;
    for (int i = 0; i < 5; i++) {
        if (policy_positive(static_cast<Level>(i))) positives++;
    }
    CHECK(positives == 3);
}

TEST_CASE("load_manifest happy path") {
    auto dir = temp_dir();
    write(dir / "papers.jsonl", std::string(kPaperLine) + "\n");
    write(dir / "reviews.jsonl",
          R"({"id":"r1","paper_id":"p1","venue":"ICLR","year":2017,"level":"H","humanized":false,"text":"The cat sat."})"
          "\n"
          R"({"id":"r2","paper_id":"p1","venue":"ICLR","year":2017,"level":"AI-BP","humanized":false,"generator_model":"m","prompt_variant":0,"text":"a b"})"
          "\n");
    auto set = load_manifest(dir / "reviews.jsonl");
    CHECK(set.reviews.size() == 2);
    CHECK(set.papers.size() == 1);
    CHECK(set.human_review_count() == 1);
    CHECK(set.reviews[0].word_count == 3);
    CHECK(set.reviews[1].level.base == Level::AI_BP);
    CHECK(*set.reviews[1].generator_model == "m");
}

TEST_CASE("load_manifest empty file") {
    auto dir = temp_dir();
    write(dir / "papers.jsonl", "");
    write(dir / "reviews.jsonl", "");
    auto set = load_manifest(dir / "reviews.jsonl");
    CHECK(set.reviews.empty());
    CHECK(set.papers.empty());
}

TEST_CASE("load_manifest error cases carry line numbers and ids") {
    auto dir = temp_dir();
    write(dir / "papers.jsonl", std::string(kPaperLine) + "\n");

    SUBCASE("malformed line") {
        write(dir / "reviews.jsonl", "{not json\n");
        try {
            load_manifest(dir / "reviews.jsonl");
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("line 1") != std::string::npos);
        }
    }
    SUBCASE("dangling paper reference names the ids") {
        write(dir / "reviews.jsonl",
              R"({"id":"r9","paper_id":"missing","venue":"V","year":2017,"level":"H","text":"t"})"
              "\n");
        try {
            load_manifest(dir / "reviews.jsonl");
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            std::string msg = e.what();
            CHECK(msg.find("r9") != std::string::npos);
            CHECK(msg.find("missing") != std::string::npos);
        }
    }
    SUBCASE("duplicate review id") {
        std::string line =
            R"({"id":"dup","paper_id":"p1","venue":"V","year":2017,"level":"H","text":"t"})";
        write(dir / "reviews.jsonl", line + "\n" + line + "\n");
        try {
            load_manifest(dir / "reviews.jsonl");
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            std::string msg = e.what();
            CHECK(msg.find("dup") != std::string::npos);
            CHECK(msg.find("line 2") != std::string::npos);
        }
    }
}

TEST_CASE("manifest round-trip is field-for-field equal") {
    auto dir = temp_dir();
    write(dir / "papers.jsonl", std::string(kPaperLine) + "\n");
    write(dir / "reviews.jsonl",
          R"({"id":"r1","paper_id":"p1","venue":"ICLR","year":2017,"level":"H","humanized":false,"text":"The cat sat."})"
          "\n"
          R"({"id":"r2","paper_id":"p1","venue":"NeurIPS","year":2015,"level":"H-AI","humanized":true,"generator_model":"m","prompt_variant":2,"text":"a b c"})"
          "\n");
    auto set = load_manifest(dir / "reviews.jsonl");
    save_manifest(set, dir / "out_reviews.jsonl", dir / "out_papers.jsonl");
    auto again = load_manifest(dir / "out_reviews.jsonl", dir / "out_papers.jsonl");
    REQUIRE(again.reviews.size() == set.reviews.size());
    for (std::size_t i = 0; i < set.reviews.size(); i++) {
        CHECK(again.reviews[i] == set.reviews[i]);
    }
    CHECK(again.papers == set.papers);
}

namespace {

ReviewSet synthetic_set(std::size_t n_reviews, std::size_t n_papers, std::uint64_t seed) {
    ReviewSet set;
    std::mt19937_64 rng(seed);
    for (std::size_t p = 0; p < n_papers; p++) {
        PaperDoc doc;
        doc.paper_id = "p" + std::to_string(p);
        doc.title = "t";
        doc.abstract = "a";
        doc.introduction = "i";
        doc.conclusion = "c";
        doc.full_text = "a i c";
        set.papers.emplace(doc.paper_id, doc);
    }
    const char* venues[] = {"NeurIPS", "ICLR"};
    for (std::size_t i = 0; i < n_reviews; i++) {
        Level level = static_cast<Level>(rng() % 5);
        bool ai = level != Level::H;
        set.reviews.push_back(make_review(
            "r" + std::to_string(i), "p" + std::to_string(rng() % n_papers),
            venues[rng() % 2], 2013 + static_cast<int>(rng() % 5), {level, false},
            ai ? std::optional<std::string>("m") : std::nullopt,
            ai ? std::optional<int>(0) : std::nullopt, "w" + std::to_string(i) + " x y"));
    }
    return set;
}

} // namespace

TEST_CASE("split_calibration_eval basic contract") {
    ReviewSet set;
    PaperDoc p1, p2;
    p1.paper_id = "P1";
    p2.paper_id = "P2";
    set.papers = {{"P1", p1}, {"P2", p2}};
    set.reviews.push_back(
        make_review("a", "P1", "NeurIPS", 2014, {Level::H, false}, std::nullopt, std::nullopt, "x"));
    set.reviews.push_back(
        make_review("b", "P1", "NeurIPS", 2014, {Level::H, false}, std::nullopt, std::nullopt, "y"));
    set.reviews.push_back(
        make_review("c", "P2", "NeurIPS", 2015, {Level::H, false}, std::nullopt, std::nullopt, "z"));

    CalibrationFilter filter;
    filter.venue = "NeurIPS";
    filter.max_year = 2015;
    auto result = split_calibration_eval(set, filter, 7, 0.5);

    // calibration only holds filter-matching human reviews
    for (const auto& r : result.calibration.reviews) {
        CHECK(r.level.base == Level::H);
        CHECK(r.venue == "NeurIPS");
    }
    // no paper appears on both sides
    std::set<std::string> cal_papers, eval_papers;
    for (const auto& r : result.calibration.reviews) cal_papers.insert(r.paper_id);
    for (const auto& r : result.evaluation.reviews) eval_papers.insert(r.paper_id);
    for (const auto& p : cal_papers) {
        CHECK(eval_papers.count(p) == 0);
    }
    // both P1 reviews stay together
    bool p1_cal = cal_papers.count("P1") > 0;
    bool p1_eval = eval_papers.count("P1") > 0;
    CHECK(p1_cal != p1_eval);
}

TEST_CASE("split_calibration_eval errors when the filter matches nothing") {
    auto set = synthetic_set(20, 5, 1);
    CalibrationFilter filter;
    filter.venue = "nonexistent-venue";
    CHECK_THROWS_AS(split_calibration_eval(set, filter, 1), PreconditionError);
}

TEST_CASE("split_calibration_eval property: disjoint papers, humans only, determinism") {
    for (std::uint64_t seed = 0; seed < 20; seed++) {
        auto set = synthetic_set(100, 40, seed);
        CalibrationFilter filter;
        filter.venue = "NeurIPS";
        auto result = split_calibration_eval(set, filter, seed);

        std::set<std::string> cal_papers;
        for (const auto& r : result.calibration.reviews) {
            CHECK(r.level.base == Level::H);
            CHECK_FALSE(r.level.humanized);
            cal_papers.insert(r.paper_id);
        }
        for (const auto& r : result.evaluation.reviews) {
            CHECK(cal_papers.count(r.paper_id) == 0);
        }
        // union covers input minus discarded
        CHECK(result.calibration.reviews.size() + result.evaluation.reviews.size() +
                  result.discarded_review_ids.size() ==
              set.reviews.size());
        // deterministic under the same seed
        auto again = split_calibration_eval(set, filter, seed);
        REQUIRE(again.calibration.reviews.size() == result.calibration.reviews.size());
        for (std::size_t i = 0; i < again.calibration.reviews.size(); i++) {
            CHECK(again.calibration.reviews[i].id == result.calibration.reviews[i].id);
        }
    }
}

TEST_CASE("manifest scale check mirrors the reference corpus shape") {
    // synthetic manifest with the reference distribution: 1086 papers, 3499
    // human reviews
    auto dir = temp_dir();
    std::string papers, reviews;
    std::size_t review_id = 0;
    for (int p = 0; p < 1086; p++) {
        papers += R"({"paper_id":"p)" + std::to_string(p) +
                  R"(","title":"t","abstract":"a","introduction":"i","conclusion":"c","full_text":"f"})"
                  "\n";
    }
    for (int i = 0; i < 3499; i++) {
        reviews += R"({"id":"r)" + std::to_string(review_id++) + R"(","paper_id":"p)" +
                   std::to_string(i % 1086) +
                   R"(","venue":"NeurIPS","year":2015,"level":"H","text":"a b c"})"
                   "\n";
    }
    write(dir / "papers.jsonl", papers);
    write(dir / "reviews.jsonl", reviews);
    auto set = load_manifest(dir / "reviews.jsonl");
    CHECK(set.papers.size() == 1086);
    CHECK(set.human_review_count() == 3499);
}
