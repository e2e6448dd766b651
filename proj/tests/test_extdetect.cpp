#include <doctest.h>

#include "revdetect/errors.hpp"
#include "revdetect/extdetect.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <filesystem>
#include <thread>

using namespace revdetect;
using namespace revdetect::extdetect;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

fs::path temp_archive() {
    fs::path dir = fs::temp_directory_path() / "revdetect_ext_test";
    fs::remove_all(dir);
    return dir;
}

corpus::Review sample_review(const std::string& id = "r1", const std::string& text = "a review") {
    return corpus::make_review(id, "p1", "V", 2020, {corpus::Level::H, false}, std::nullopt,
                               std::nullopt, text);
}

} // namespace

TEST_CASE("scripted transport: label parsed from the configured field") {
    DetectorEndpointConfig cfg;
    cfg.name = "scripted";
    auto dir = temp_archive();
    std::atomic<int> calls{0};
    ExternalDetector det(cfg,
                         [&](const std::string&) {
                             calls++;
                             return std::string(R"({"prediction_short":"AI"})");
                         },
                         dir);
    auto verdict = det.classify(sample_review());
    CHECK(verdict.label == evalstats::Label3::AI);
    CHECK(verdict.detector == "scripted");
    CHECK(verdict.review_id == "r1");
    CHECK(verdict.raw_payload.find("prediction_short") != std::string::npos);
    CHECK(calls.load() == 1);

    // repeat call served from the archive cache
    auto again = det.classify(sample_review());
    CHECK(calls.load() == 1);
    CHECK(again.label == verdict.label);
    fs::remove_all(dir);
}

TEST_CASE("unmapped label is a parse error, payload archived first") {
    DetectorEndpointConfig cfg;
    cfg.name = "odd";
    auto dir = temp_archive();
    ExternalDetector det(cfg, [](const std::string&) {
        return std::string(R"({"prediction_short":"robot"})");
    }, dir);
    try {
        det.classify(sample_review());
        FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
        CHECK(std::string(e.what()).find("robot") != std::string::npos);
        CHECK(e.raw_payload.find("robot") != std::string::npos);
    }
    // payload was archived before parsing failed
    bool archived = false;
    for (auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file()) archived = true;
    }
    CHECK(archived);
    fs::remove_all(dir);
}

TEST_CASE("request template substitutes review fields into the body") {
    DetectorEndpointConfig cfg;
    cfg.name = "templated";
    cfg.request_template = R"({"document":{"content":"{TEXT}"},"meta":{"id":"{REVIEW_ID}"}})";
    auto dir = temp_archive();
    std::string seen_body;
    ExternalDetector det(cfg,
                         [&](const std::string& body) {
                             seen_body = body;
                             return std::string(R"({"prediction_short":"human"})");
                         },
                         dir);
    det.classify(sample_review("rev-7", "the text payload"));
    json body = json::parse(seen_body);
    CHECK(body.at("document").at("content") == "the text payload");
    CHECK(body.at("meta").at("id") == "rev-7");
    fs::remove_all(dir);
}

TEST_CASE("argmax over probability fields when no label is present") {
    DetectorEndpointConfig cfg;
    cfg.name = "probs";
    cfg.label_field = "absent_field";
    cfg.probability_fields = {{"AI", "scores.ai"}, {"Mixed", "scores.mixed"},
                              {"Human", "scores.human"}};
    auto dir = temp_archive();
    ExternalDetector det(cfg, [](const std::string&) {
        return std::string(R"({"scores":{"ai":0.2,"mixed":0.7,"human":0.1}})");
    }, dir);
    auto verdict = det.classify(sample_review());
    CHECK(verdict.label == evalstats::Label3::Mixed);
    fs::remove_all(dir);
}

TEST_CASE("non-JSON payload is a protocol error") {
    DetectorEndpointConfig cfg;
    cfg.name = "broken";
    auto dir = temp_archive();
    ExternalDetector det(cfg, [](const std::string&) { return std::string("<html>oops"); }, dir);
    CHECK_THROWS_AS(det.classify(sample_review()), ProtocolError);
    fs::remove_all(dir);
}

TEST_CASE("mock transport is deterministic") {
    auto transport = mock_transport();
    json req;
    req["review_id"] = "x";
    req["text"] = "some fixed text";
    std::string a = transport(req.dump());
    std::string b = transport(req.dump());
    CHECK(a == b);
    json parsed = json::parse(a);
    std::string label = parsed.at("prediction_short").get<std::string>();
    CHECK((label == "ai" || label == "mixed" || label == "human"));
}

TEST_CASE("http transport against a local detector endpoint") {
    httplib::Server server;
    server.Post("/v1/classify", [](const httplib::Request& req, httplib::Response& res) {
        auto body = json::parse(req.body);
        // echoes a label depending on the text
        std::string text = body.at("text").get<std::string>();
        std::string label = text.find("machine") != std::string::npos ? "ai" : "human";
        json out;
        out["prediction_short"] = label;
        res.set_content(out.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    DetectorEndpointConfig cfg;
    cfg.name = "local";
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    cfg.retry.attempts = 2;
    cfg.retry.initial_backoff_ms = 1;
    auto dir = temp_archive();
    ExternalDetector det(cfg, http_transport(cfg), dir);

    CHECK(det.classify(sample_review("a", "obviously machine written")).label ==
          evalstats::Label3::AI);
    CHECK(det.classify(sample_review("b", "clearly organic prose")).label ==
          evalstats::Label3::Human);

    server.stop();
    server_thread.join();
    fs::remove_all(dir);
}
