#ifndef REVDETECT_BACKENDS_HPP
#define REVDETECT_BACKENDS_HPP

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace revdetect::backends {

struct Sampling {
    double temperature = 0.0;
    int max_tokens = 1024;
    std::optional<std::uint64_t> seed;
};

// Per-position log-probability statistics, in nats throughout.
struct TokenScoreRecord {
    std::string token_text;
    double logp_observed = 0.0; // log-probability of the observed token (<= 0)
    double mean_logp = 0.0;     // E[log p] under the sampling distribution here
    double var_logp = 0.0;      // Var[log p] under the same distribution (>= 0)
    std::optional<double> cross_nll; // E_performer[-log p_observer] (>= 0)
};

struct TokenScoreSeq {
    std::vector<TokenScoreRecord> records;
    std::size_t prefix_len = 0; // leading records from the conditioning prefix

    std::size_t scored_size() const {
        return records.size() > prefix_len ? records.size() - prefix_len : 0;
    }
};

// Throws ProtocolError when a record violates the range invariants.
void validate(const TokenScoreSeq& seq);

struct EmbeddingVector {
    std::vector<double> values;
    std::string model_tag;
};

// The three LLM access contracts. Implementations are safe to share across
// threads.
class Backend {
public:
    virtual ~Backend() = default;

    virtual std::string chat(const std::string& prompt, const std::string& model,
                             const Sampling& sampling) = 0;

    // One record per token of (condition_prefix + text); prefix_len equals the
    // token count of the prefix; cross_nll present iff performer is supplied.
    virtual TokenScoreSeq token_scores(const std::string& text,
                                       const std::optional<std::string>& condition_prefix,
                                       const std::string& observer, const std::string& sampler,
                                       const std::optional<std::string>& performer) = 0;

    virtual EmbeddingVector embed(const std::string& text, const std::string& model) = 0;
};

// ---------------------------------------------------------------------------
// Scripted deterministic mock
// ---------------------------------------------------------------------------

// Fully deterministic stand-in. Exact-match scripts take precedence; anything
// unscripted is synthesized from a content hash, so full pipelines run
// offline with stable outputs.
class MockBackend : public Backend {
public:
    MockBackend() = default;

    void script_chat(const std::string& prompt, const std::string& completion);
    // substring rule: first rule whose needle occurs in the prompt wins
    void script_chat_contains(const std::string& needle, const std::string& completion);
    void script_scores(const std::string& text, std::vector<TokenScoreRecord> records);
    void script_embedding(const std::string& text, std::vector<double> values);

    // uniform shift applied to every non-prefix logp_observed when a
    // conditioning prefix is present
    void set_conditioning_boost(double boost) { conditioning_boost_ = boost; }
    void set_embedding_dim(std::size_t dim) { embedding_dim_ = dim; }

    std::string chat(const std::string& prompt, const std::string& model,
                     const Sampling& sampling) override;
    TokenScoreSeq token_scores(const std::string& text,
                               const std::optional<std::string>& condition_prefix,
                               const std::string& observer, const std::string& sampler,
                               const std::optional<std::string>& performer) override;
    EmbeddingVector embed(const std::string& text, const std::string& model) override;

    std::size_t chat_calls() const { return chat_calls_.load(); }
    std::size_t score_calls() const { return score_calls_.load(); }
    std::size_t embed_calls() const { return embed_calls_.load(); }
    std::size_t total_calls() const { return chat_calls() + score_calls() + embed_calls(); }

private:
    std::map<std::string, std::string> chat_script_;
    std::vector<std::pair<std::string, std::string>> chat_contains_script_;
    std::map<std::string, std::vector<TokenScoreRecord>> score_script_;
    std::map<std::string, std::vector<double>> embed_script_;
    double conditioning_boost_ = 0.0;
    std::size_t embedding_dim_ = 8;
    std::atomic<std::size_t> chat_calls_{0};
    std::atomic<std::size_t> score_calls_{0};
    std::atomic<std::size_t> embed_calls_{0};
    mutable std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// HTTP backend
// ---------------------------------------------------------------------------

struct RetryPolicy {
    int attempts = 3;
    int initial_backoff_ms = 100;
    double multiplier = 2.0;
};

struct HttpBackendConfig {
    std::string base_url;        // e.g. "http://localhost:8811"
    std::string api_key_env;     // env var holding the bearer token; empty = no auth
    std::string generate_path = "/v1/generate";
    std::string score_path = "/v1/score";
    std::string embed_path = "/v1/embed";
    RetryPolicy retry;
    int timeout_ms = 60000;
};

class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);

    std::string chat(const std::string& prompt, const std::string& model,
                     const Sampling& sampling) override;
    TokenScoreSeq token_scores(const std::string& text,
                               const std::optional<std::string>& condition_prefix,
                               const std::string& observer, const std::string& sampler,
                               const std::optional<std::string>& performer) override;
    EmbeddingVector embed(const std::string& text, const std::string& model) override;

private:
    std::string post_json(const std::string& path, const std::string& body);

    HttpBackendConfig config_;
};

// ---------------------------------------------------------------------------
// Decorators
// ---------------------------------------------------------------------------

// Content-addressed response cache. Keys are SHA-256 over (endpoint kind,
// model, request body); entries live under a two-level hash-prefixed
// directory and are written temp-file-then-rename, so concurrent writers and
// crashes never leave a torn entry. With tracing on, request bodies are kept
// alongside the responses.
class CachingBackend : public Backend {
public:
    CachingBackend(std::shared_ptr<Backend> inner, std::filesystem::path cache_dir,
                   bool trace = false);

    std::string chat(const std::string& prompt, const std::string& model,
                     const Sampling& sampling) override;
    TokenScoreSeq token_scores(const std::string& text,
                               const std::optional<std::string>& condition_prefix,
                               const std::string& observer, const std::string& sampler,
                               const std::optional<std::string>& performer) override;
    EmbeddingVector embed(const std::string& text, const std::string& model) override;

private:
    std::optional<std::string> lookup(const std::string& key) const;
    void store(const std::string& key, const std::string& request_body,
               const std::string& response_body);

    std::shared_ptr<Backend> inner_;
    std::filesystem::path dir_;
    bool trace_;
};

// Caps the number of in-flight requests to the wrapped backend.
class ConcurrencyLimitedBackend : public Backend {
public:
    ConcurrencyLimitedBackend(std::shared_ptr<Backend> inner, int max_inflight);

    std::string chat(const std::string& prompt, const std::string& model,
                     const Sampling& sampling) override;
    TokenScoreSeq token_scores(const std::string& text,
                               const std::optional<std::string>& condition_prefix,
                               const std::string& observer, const std::string& sampler,
                               const std::optional<std::string>& performer) override;
    EmbeddingVector embed(const std::string& text, const std::string& model) override;

    int peak_inflight() const { return peak_.load(); }

private:
    class Slot;
    std::shared_ptr<Backend> inner_;
    int limit_;
    int inflight_ = 0;
    std::atomic<int> peak_{0};
    std::mutex mutex_;
    std::condition_variable cv_;
};

// Canonical request bodies, shared by the HTTP transport and the cache key.
std::string chat_request_body(const std::string& prompt, const std::string& model,
                              const Sampling& sampling);
std::string score_request_body(const std::string& text,
                               const std::optional<std::string>& condition_prefix,
                               const std::string& observer, const std::string& sampler,
                               const std::optional<std::string>& performer);
std::string embed_request_body(const std::string& text, const std::string& model);

} // namespace revdetect::backends

#endif
