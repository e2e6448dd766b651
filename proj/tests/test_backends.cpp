#include <doctest.h>

#include "revdetect/backends.hpp"
#include "revdetect/errors.hpp"

#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <thread>

using namespace revdetect;
using namespace revdetect::backends;

namespace {

namespace fs = std::filesystem;

fs::path temp_cache() {
    fs::path dir = fs::temp_directory_path() / "revdetect_backend_test";
    fs::remove_all(dir);
    return dir;
}

} // namespace

TEST_CASE("mock chat: scripted and deterministic") {
    auto mock = std::make_shared<MockBackend>();
    mock->script_chat("ping", "pong");
    CHECK(mock->chat("ping", "m", {}) == "pong");

    // unscripted completions are synthesized deterministically
    std::string a = mock->chat("something else", "m", {});
    std::string b = mock->chat("something else", "m", {});
    CHECK(a == b);
    CHECK_FALSE(a.empty());
    // distinct seeds give distinct rollouts
    Sampling s1, s2;
    s1.seed = 1;
    s2.seed = 2;
    CHECK(mock->chat("roll", "m", s1) != mock->chat("roll", "m", s2));
}

TEST_CASE("mock token_scores: scripted records and prefix contract") {
    MockBackend mock;
    mock.script_scores("two tokens", {{"two", -1.0, -1.0, 1.0, std::nullopt},
                                      {"tokens", -1.0, -1.0, 1.0, std::nullopt}});
    auto seq = mock.token_scores("two tokens", std::nullopt, "obs", "samp", std::nullopt);
    CHECK(seq.records.size() == 2);
    CHECK(seq.prefix_len == 0);
    CHECK(seq.records[0].logp_observed == -1.0);

    // a 3-token prefix adds 3 records and sets prefix_len
    auto cond = mock.token_scores("two tokens", std::string("a b c"), "obs", "samp", std::nullopt);
    CHECK(cond.records.size() == 5);
    CHECK(cond.prefix_len == 3);

    // cross_nll appears iff a performer is supplied
    auto with_perf = mock.token_scores("two tokens", std::nullopt, "obs", "samp",
                                       std::string("perf"));
    for (const auto& r : with_perf.records) {
        CHECK(r.cross_nll.has_value());
    }
    auto without = mock.token_scores("other text here", std::nullopt, "obs", "samp", std::nullopt);
    for (const auto& r : without.records) {
        CHECK_FALSE(r.cross_nll.has_value());
    }

    CHECK_THROWS_AS(mock.token_scores("", std::nullopt, "o", "s", std::nullopt),
                    PreconditionError);
}

TEST_CASE("mock embed: scripted, deterministic, nonzero") {
    MockBackend mock;
    mock.script_embedding("a", {1.0, 0.0});
    auto e = mock.embed("a", "emb");
    CHECK(e.values == std::vector<double>{1.0, 0.0});

    auto x = mock.embed("some text", "emb");
    auto y = mock.embed("some text", "emb");
    CHECK(x.values == y.values);
    double norm = 0.0;
    for (double v : x.values) norm += v * v;
    CHECK(norm > 0.0);

    CHECK_THROWS_AS(mock.embed("", "emb"), PreconditionError);
}

TEST_CASE("token score validation rejects bad records") {
    TokenScoreSeq seq;
    seq.records.push_back({"t", 0.5, -1.0, 1.0, std::nullopt}); // logp > 0
    CHECK_THROWS_AS(validate(seq), ProtocolError);
    seq.records[0] = {"t", -1.0, -1.0, -0.1, std::nullopt}; // negative variance
    CHECK_THROWS_AS(validate(seq), ProtocolError);
    seq.records[0] = {"t", -1.0, -1.0, 1.0, -0.5}; // negative cross_nll
    CHECK_THROWS_AS(validate(seq), ProtocolError);
    seq.records[0] = {"t", -1.0, -1.0, 1.0, 0.5};
    seq.prefix_len = 2; // prefix longer than records
    CHECK_THROWS_AS(validate(seq), ProtocolError);
    seq.prefix_len = 0;
    CHECK_NOTHROW(validate(seq));
}

TEST_CASE("caching backend: second identical call hits the cache") {
    auto mock = std::make_shared<MockBackend>();
    auto dir = temp_cache();
    CachingBackend cached(mock, dir);

    std::string first = cached.chat("prompt", "m", {});
    CHECK(mock->chat_calls() == 1);
    std::string second = cached.chat("prompt", "m", {});
    CHECK(mock->chat_calls() == 1); // zero new backend calls
    CHECK(first == second);         // byte-identical

    // different request -> new call
    cached.chat("prompt2", "m", {});
    CHECK(mock->chat_calls() == 2);

    // embeddings and scores cache too
    auto e1 = cached.embed("text", "emb");
    auto e2 = cached.embed("text", "emb");
    CHECK(mock->embed_calls() == 1);
    CHECK(e1.values == e2.values);

    auto s1 = cached.token_scores("hello world", std::nullopt, "o", "s", std::string("p"));
    auto s2 = cached.token_scores("hello world", std::nullopt, "o", "s", std::string("p"));
    CHECK(mock->score_calls() == 1);
    REQUIRE(s1.records.size() == s2.records.size());
    for (std::size_t i = 0; i < s1.records.size(); i++) {
        CHECK(s1.records[i].logp_observed == s2.records[i].logp_observed);
        CHECK(s1.records[i].cross_nll == s2.records[i].cross_nll);
    }
    fs::remove_all(dir);
}

TEST_CASE("tracing archives request bodies alongside responses") {
    auto dir = temp_cache();
    auto mock = std::make_shared<MockBackend>();
    CachingBackend cached(mock, dir, /*trace=*/true);
    cached.chat("traced prompt", "m", {});
    std::size_t requests = 0, responses = 0;
    for (auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        if (name.find(".request.json") != std::string::npos) {
            requests++;
        } else {
            responses++;
        }
    }
    CHECK(requests == 1);
    CHECK(responses == 1);
    fs::remove_all(dir);
}

TEST_CASE("cache persists across backend instances") {
    auto dir = temp_cache();
    auto mock1 = std::make_shared<MockBackend>();
    {
        CachingBackend cached(mock1, dir);
        cached.chat("persisted", "m", {});
    }
    auto mock2 = std::make_shared<MockBackend>();
    CachingBackend cached(mock2, dir);
    std::string hit = cached.chat("persisted", "m", {});
    CHECK(mock2->chat_calls() == 0); // served from disk
    CHECK(hit == mock1->chat("persisted", "m", {}));
    fs::remove_all(dir);
}

TEST_CASE("concurrency limiter bounds in-flight requests") {
    // a slow backend that records its own concurrency
    class SlowMock : public MockBackend {
    public:
        std::string chat(const std::string& prompt, const std::string& model,
                         const Sampling& sampling) override {
            int cur = ++inflight;
            int prev = peak.load();
            while (cur > prev && !peak.compare_exchange_weak(prev, cur)) {
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
            --inflight;
            return MockBackend::chat(prompt, model, sampling);
        }
        std::atomic<int> inflight{0};
        std::atomic<int> peak{0};
    };

    auto slow = std::make_shared<SlowMock>();
    ConcurrencyLimitedBackend limited(slow, 2);
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; i++) {
        threads.emplace_back([&, i] { limited.chat("p" + std::to_string(i), "m", {}); });
    }
    for (auto& t : threads) t.join();
    CHECK(slow->peak.load() <= 2);
    CHECK(slow->chat_calls() == 8);
    CHECK(limited.peak_inflight() <= 2);
}

TEST_CASE("http backend against a local server") {
    httplib::Server server;
    std::atomic<int> score_hits{0};
    server.Post("/v1/generate", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"text":"generated text"})", "application/json");
    });
    server.Post("/v1/score", [&](const httplib::Request&, httplib::Response& res) {
        score_hits++;
        res.set_content(
            R"({"prefix_len":0,"tokens":[{"token":"a","logp":-1.5,"mean_logp":-2.0,"var_logp":0.5}]})",
            "application/json");
    });
    server.Post("/v1/bad_score", [](const httplib::Request&, httplib::Response& res) {
        // missing var_logp
        res.set_content(R"({"prefix_len":0,"tokens":[{"token":"a","logp":-1.5,"mean_logp":-2.0}]})",
                        "application/json");
    });
    server.Post("/v1/embed", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"embedding":[0.5,0.5]})", "application/json");
    });
    server.Post("/v1/empty", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"text":""})", "application/json");
    });

    int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpBackendConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    cfg.retry.attempts = 2;
    cfg.retry.initial_backoff_ms = 1;

    SUBCASE("chat, score and embed round-trips") {
        HttpBackend backend(cfg);
        CHECK(backend.chat("p", "m", {}) == "generated text");
        auto seq = backend.token_scores("a", std::nullopt, "o", "s", std::nullopt);
        REQUIRE(seq.records.size() == 1);
        CHECK(seq.records[0].logp_observed == -1.5);
        CHECK(seq.records[0].var_logp == 0.5);
        auto emb = backend.embed("a", "m");
        CHECK(emb.values.size() == 2);
    }

    SUBCASE("missing field is a protocol error naming the field") {
        HttpBackendConfig bad = cfg;
        bad.score_path = "/v1/bad_score";
        HttpBackend backend(bad);
        try {
            backend.token_scores("a", std::nullopt, "o", "s", std::nullopt);
            FAIL("expected ProtocolError");
        } catch (const ProtocolError& e) {
            CHECK(std::string(e.what()).find("var_logp") != std::string::npos);
        }
    }

    SUBCASE("empty completion is a protocol error") {
        HttpBackendConfig empty = cfg;
        empty.generate_path = "/v1/empty";
        HttpBackend backend(empty);
        CHECK_THROWS_AS(backend.chat("p", "m", {}), ProtocolError);
    }

    server.stop();
    server_thread.join();
}

TEST_CASE("http backend surfaces transport failure after retries") {
    HttpBackendConfig cfg;
    cfg.base_url = "http://127.0.0.1:1"; // closed port
    cfg.retry.attempts = 2;
    cfg.retry.initial_backoff_ms = 1;
    cfg.timeout_ms = 500;
    HttpBackend backend(cfg);
    try {
        backend.chat("p", "m", {});
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(std::string(e.what()).find("2 attempts") != std::string::npos);
    }
}

TEST_CASE("http backend retries 5xx then succeeds") {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/v1/generate", [&](const httplib::Request&, httplib::Response& res) {
        if (hits++ == 0) {
            res.status = 500;
            res.set_content("transient", "text/plain");
        } else {
            res.set_content(R"({"text":"ok"})", "application/json");
        }
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpBackendConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    cfg.retry.attempts = 3;
    cfg.retry.initial_backoff_ms = 1;
    HttpBackend backend(cfg);
    CHECK(backend.chat("p", "m", {}) == "ok");
    CHECK(hits.load() == 2);

    server.stop();
    server_thread.join();
}

TEST_CASE("http backend does not retry 4xx") {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/v1/generate", [&](const httplib::Request&, httplib::Response& res) {
        hits++;
        res.status = 400;
        res.set_content(R"({"error":"context_overflow","token_count":9000})", "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpBackendConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    cfg.retry.attempts = 3;
    cfg.retry.initial_backoff_ms = 1;
    HttpBackend backend(cfg);
    try {
        backend.chat("p", "m", {});
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK(e.status == 400);
        CHECK(std::string(e.what()).find("context_overflow") != std::string::npos);
    }
    CHECK(hits.load() == 1);

    server.stop();
    server_thread.join();
}
