#include "revdetect/backends.hpp"

#include "revdetect/errors.hpp"
#include "revdetect/util.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

namespace revdetect::backends {

using nlohmann::json;

void validate(const TokenScoreSeq& seq) {
    if (seq.prefix_len > seq.records.size()) {
        throw ProtocolError("prefix_len " + std::to_string(seq.prefix_len) +
                            " exceeds record count " + std::to_string(seq.records.size()));
    }
    for (std::size_t i = 0; i < seq.records.size(); i++) {
        const auto& r = seq.records[i];
        auto fail = [&](const std::string& what) {
            throw ProtocolError("token record " + std::to_string(i) + ": " + what);
        };
        if (!std::isfinite(r.logp_observed) || r.logp_observed > 0.0) {
            fail("logp must be finite and <= 0");
        }
        if (!std::isfinite(r.mean_logp)) fail("mean_logp must be finite");
        if (!std::isfinite(r.var_logp) || r.var_logp < 0.0) {
            fail("var_logp must be finite and >= 0");
        }
        if (r.cross_nll && (!std::isfinite(*r.cross_nll) || *r.cross_nll < 0.0)) {
            fail("cross_nll must be finite and >= 0");
        }
    }
}

std::string chat_request_body(const std::string& prompt, const std::string& model,
                              const Sampling& sampling) {
    json j;
    j["prompt"] = prompt;
    j["model"] = model;
    j["temperature"] = sampling.temperature;
    j["max_tokens"] = sampling.max_tokens;
    if (sampling.seed) j["seed"] = *sampling.seed;
    return j.dump();
}

std::string score_request_body(const std::string& text,
                               const std::optional<std::string>& condition_prefix,
                               const std::string& observer, const std::string& sampler,
                               const std::optional<std::string>& performer) {
    json j;
    j["text"] = text;
    if (condition_prefix) j["condition_prefix"] = *condition_prefix;
    j["observer"] = observer;
    j["sampler"] = sampler;
    if (performer) j["performer"] = *performer;
    return j.dump();
}

std::string embed_request_body(const std::string& text, const std::string& model) {
    json j;
    j["text"] = text;
    j["model"] = model;
    return j.dump();
}

// ---------------------------------------------------------------------------
// MockBackend
// ---------------------------------------------------------------------------

namespace {

// deterministic uniform in [0, 1) from a content hash
double hash_unit(std::string_view payload) {
    std::uint64_t h = util::fnv1a64(payload);
    return static_cast<double>(h >> 11) / 9007199254740992.0; // 2^53
}

std::vector<std::string> whitespace_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream ss(text);
    std::string tok;
    while (ss >> tok) {
        out.push_back(tok);
    }
    return out;
}

const char* kMockWordPool[] = {"the",     "paper",    "presents", "a",        "method",
                               "results", "are",      "clear",    "but",      "limited",
                               "authors", "should",   "compare",  "against",  "baselines",
                               "writing", "is",       "sound",    "overall",  "evaluation",
                               "novel",   "approach", "to",       "review",   "analysis"};

} // namespace

void MockBackend::script_chat(const std::string& prompt, const std::string& completion) {
    std::lock_guard<std::mutex> lock(mutex_);
    chat_script_[prompt] = completion;
}

void MockBackend::script_chat_contains(const std::string& needle, const std::string& completion) {
    std::lock_guard<std::mutex> lock(mutex_);
    chat_contains_script_.emplace_back(needle, completion);
}

void MockBackend::script_scores(const std::string& text, std::vector<TokenScoreRecord> records) {
    std::lock_guard<std::mutex> lock(mutex_);
    score_script_[text] = std::move(records);
}

void MockBackend::script_embedding(const std::string& text, std::vector<double> values) {
    std::lock_guard<std::mutex> lock(mutex_);
    embed_script_[text] = std::move(values);
}

std::string MockBackend::chat(const std::string& prompt, const std::string& model,
                              const Sampling& sampling) {
    chat_calls_++;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = chat_script_.find(prompt);
        if (it != chat_script_.end()) {
            return it->second;
        }
        for (const auto& [needle, completion] : chat_contains_script_) {
            if (prompt.find(needle) != std::string::npos) {
                return completion;
            }
        }
    }
    // synthesized completion: 40-80 pool words, fixed by the request content
    std::string tag = prompt + '\x1f' + model + '\x1f' +
                      std::to_string(sampling.seed.value_or(0)) + '\x1f' +
                      util::format_fixed(sampling.temperature, 3);
    std::uint64_t h = util::fnv1a64(tag);
    std::size_t n_words = 40 + h % 41;
    std::string out;
    for (std::size_t i = 0; i < n_words; i++) {
        std::uint64_t wh = util::fnv1a64(tag + "#w" + std::to_string(i));
        if (i > 0) out += ' ';
        out += kMockWordPool[wh % std::size(kMockWordPool)];
    }
    out += '.';
    return out;
}

TokenScoreSeq MockBackend::token_scores(const std::string& text,
                                        const std::optional<std::string>& condition_prefix,
                                        const std::string& observer, const std::string& sampler,
                                        const std::optional<std::string>& performer) {
    if (text.empty()) {
        throw PreconditionError("token_scores: text must be non-empty");
    }
    score_calls_++;
    bool conditioned = condition_prefix && !condition_prefix->empty();
    std::string role_tag = observer + '\x1f' + sampler + '\x1f' + performer.value_or("");

    auto synthesize = [&](const std::string& tok, std::size_t pos,
                          const char* region) -> TokenScoreRecord {
        std::string tag =
            role_tag + '\x1f' + region + '\x1f' + tok + '\x1f' + std::to_string(pos);
        TokenScoreRecord r;
        r.token_text = tok;
        r.logp_observed = -(0.5 + 4.5 * hash_unit(tag + "/lp"));
        r.mean_logp = r.logp_observed - (hash_unit(tag + "/mu") - 0.5);
        r.var_logp = 0.05 + hash_unit(tag + "/var");
        if (performer) {
            r.cross_nll = -r.logp_observed * (0.8 + 0.4 * hash_unit(tag + "/x"));
        }
        return r;
    };

    TokenScoreSeq seq;
    if (conditioned) {
        auto prefix_tokens = whitespace_tokens(*condition_prefix);
        for (std::size_t i = 0; i < prefix_tokens.size(); i++) {
            seq.records.push_back(synthesize(prefix_tokens[i], i, "prefix"));
        }
        seq.prefix_len = prefix_tokens.size();
    }

    std::vector<TokenScoreRecord> body;
    bool scripted = false;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = score_script_.find(text);
        if (it != score_script_.end()) {
            body = it->second;
            scripted = true;
        }
    }
    if (!scripted) {
        // synthesized scores depend on the prefix, so conditioning visibly
        // moves unscripted detector outputs
        auto toks = whitespace_tokens(text);
        const char* region = conditioned ? "body+ctx" : "body";
        for (std::size_t i = 0; i < toks.size(); i++) {
            body.push_back(synthesize(toks[i], i, region));
        }
    } else if (!performer) {
        for (auto& r : body) r.cross_nll.reset();
    } else {
        for (auto& r : body) {
            if (!r.cross_nll) r.cross_nll = -r.logp_observed;
        }
    }
    if (conditioned) {
        for (auto& r : body) {
            r.logp_observed = std::min(0.0, r.logp_observed + conditioning_boost_);
        }
    }
    seq.records.insert(seq.records.end(), body.begin(), body.end());
    validate(seq);
    return seq;
}

EmbeddingVector MockBackend::embed(const std::string& text, const std::string& model) {
    if (text.empty()) {
        throw PreconditionError("embed: text must be non-empty");
    }
    embed_calls_++;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = embed_script_.find(text);
        if (it != embed_script_.end()) {
            return EmbeddingVector{it->second, model};
        }
    }
    std::vector<double> v(embedding_dim_);
    double norm = 0.0;
    for (std::size_t i = 0; i < v.size(); i++) {
        v[i] = hash_unit(model + '\x1f' + text + "#e" + std::to_string(i)) - 0.5;
        norm += v[i] * v[i];
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        v[0] = 1.0; // arbitrary unit vector; hash collapse is astronomically unlikely
    } else {
        for (double& x : v) x /= norm;
    }
    return EmbeddingVector{std::move(v), model};
}

// ---------------------------------------------------------------------------
// HttpBackend
// ---------------------------------------------------------------------------

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) {
        throw PreconditionError("http backend requires a base_url");
    }
}

std::string HttpBackend::post_json(const std::string& path, const std::string& body) {
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(0, config_.timeout_ms * 1000);
    client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
    if (!config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str())) {
            client.set_bearer_token_auth(key);
        }
    }

    int backoff = config_.retry.initial_backoff_ms;
    std::string last_error;
    for (int attempt = 1; attempt <= config_.retry.attempts; attempt++) {
        auto res = client.Post(path, body, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
        } else if (res->status == 429 || res->status >= 500) {
            last_error = "backend status " + std::to_string(res->status);
        } else if (res->status >= 400) {
            throw BackendError("backend rejected request to " + path + " (status " +
                                   std::to_string(res->status) + "): " + res->body,
                               res->status);
        } else {
            return res->body;
        }
        if (attempt < config_.retry.attempts) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff = static_cast<int>(backoff * config_.retry.multiplier);
        }
    }
    throw TransportError("request to " + config_.base_url + path + " failed after " +
                         std::to_string(config_.retry.attempts) + " attempts: " + last_error);
}

namespace {

json parse_response(const std::string& body, const std::string& what) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ProtocolError(what + ": response is not a JSON object", body);
    }
    return j;
}

double require_number(const json& j, const char* field, const std::string& context,
                      const std::string& payload) {
    auto it = j.find(field);
    if (it == j.end() || !it->is_number()) {
        throw ProtocolError(context + ": missing or non-numeric field '" + field + "'", payload);
    }
    return it->get<double>();
}

} // namespace

std::string HttpBackend::chat(const std::string& prompt, const std::string& model,
                              const Sampling& sampling) {
    std::string body = post_json(config_.generate_path, chat_request_body(prompt, model, sampling));
    json j = parse_response(body, "generate");
    auto it = j.find("text");
    if (it == j.end() || !it->is_string()) {
        throw ProtocolError("generate: missing field 'text'", body);
    }
    std::string text = it->get<std::string>();
    if (text.empty()) {
        throw ProtocolError("generate: backend returned an empty completion", body);
    }
    return text;
}

TokenScoreSeq HttpBackend::token_scores(const std::string& text,
                                        const std::optional<std::string>& condition_prefix,
                                        const std::string& observer, const std::string& sampler,
                                        const std::optional<std::string>& performer) {
    if (text.empty()) {
        throw PreconditionError("token_scores: text must be non-empty");
    }
    std::string body = post_json(
        config_.score_path, score_request_body(text, condition_prefix, observer, sampler, performer));
    json j = parse_response(body, "score");
    auto tokens = j.find("tokens");
    if (tokens == j.end() || !tokens->is_array()) {
        throw ProtocolError("score: missing field 'tokens'", body);
    }
    TokenScoreSeq seq;
    seq.prefix_len = j.value("prefix_len", 0u);
    std::size_t i = 0;
    for (const auto& t : *tokens) {
        std::string ctx = "score: token " + std::to_string(i);
        TokenScoreRecord r;
        r.token_text = t.value("token", "");
        r.logp_observed = require_number(t, "logp", ctx, body);
        r.mean_logp = require_number(t, "mean_logp", ctx, body);
        r.var_logp = require_number(t, "var_logp", ctx, body);
        if (performer) {
            r.cross_nll = require_number(t, "cross_nll", ctx, body);
        } else if (t.contains("cross_nll") && t["cross_nll"].is_number()) {
            r.cross_nll = t["cross_nll"].get<double>();
        }
        seq.records.push_back(std::move(r));
        i++;
    }
    validate(seq);
    return seq;
}

EmbeddingVector HttpBackend::embed(const std::string& text, const std::string& model) {
    if (text.empty()) {
        throw PreconditionError("embed: text must be non-empty");
    }
    std::string body = post_json(config_.embed_path, embed_request_body(text, model));
    json j = parse_response(body, "embed");
    auto it = j.find("embedding");
    if (it == j.end() || !it->is_array() || it->empty()) {
        throw ProtocolError("embed: missing or empty field 'embedding'", body);
    }
    EmbeddingVector v;
    v.model_tag = model;
    for (const auto& x : *it) {
        if (!x.is_number()) {
            throw ProtocolError("embed: non-numeric embedding entry", body);
        }
        v.values.push_back(x.get<double>());
    }
    return v;
}

// ---------------------------------------------------------------------------
// CachingBackend
// ---------------------------------------------------------------------------

namespace {

std::string cache_key(const char* kind, const std::string& model, const std::string& body) {
    return util::sha256_hex(std::string(kind) + '\x1f' + model + '\x1f' + body);
}

json seq_to_json(const TokenScoreSeq& seq) {
    json j;
    j["prefix_len"] = seq.prefix_len;
    json tokens = json::array();
    for (const auto& r : seq.records) {
        json t;
        t["token"] = r.token_text;
        t["logp"] = r.logp_observed;
        t["mean_logp"] = r.mean_logp;
        t["var_logp"] = r.var_logp;
        if (r.cross_nll) t["cross_nll"] = *r.cross_nll;
        tokens.push_back(std::move(t));
    }
    j["tokens"] = std::move(tokens);
    return j;
}

TokenScoreSeq seq_from_json(const json& j) {
    TokenScoreSeq seq;
    seq.prefix_len = j.at("prefix_len").get<std::size_t>();
    for (const auto& t : j.at("tokens")) {
        TokenScoreRecord r;
        r.token_text = t.at("token").get<std::string>();
        r.logp_observed = t.at("logp").get<double>();
        r.mean_logp = t.at("mean_logp").get<double>();
        r.var_logp = t.at("var_logp").get<double>();
        if (t.contains("cross_nll")) r.cross_nll = t["cross_nll"].get<double>();
        seq.records.push_back(std::move(r));
    }
    return seq;
}

} // namespace

CachingBackend::CachingBackend(std::shared_ptr<Backend> inner, std::filesystem::path cache_dir,
                               bool trace)
    : inner_(std::move(inner)), dir_(std::move(cache_dir)), trace_(trace) {
    std::filesystem::create_directories(dir_);
}

std::optional<std::string> CachingBackend::lookup(const std::string& key) const {
    std::filesystem::path p = dir_ / key.substr(0, 2) / key.substr(2, 2) / (key + ".json");
    if (!std::filesystem::exists(p)) {
        return std::nullopt;
    }
    return util::read_file(p);
}

void CachingBackend::store(const std::string& key, const std::string& request_body,
                           const std::string& response_body) {
    std::filesystem::path p = dir_ / key.substr(0, 2) / key.substr(2, 2) / (key + ".json");
    util::write_file_atomic(p, response_body);
    if (trace_) {
        std::filesystem::path t = p;
        t.replace_extension(".request.json");
        util::write_file_atomic(t, request_body);
    }
}

std::string CachingBackend::chat(const std::string& prompt, const std::string& model,
                                 const Sampling& sampling) {
    std::string body = chat_request_body(prompt, model, sampling);
    std::string key = cache_key("chat", model, body);
    if (auto hit = lookup(key)) {
        return json::parse(*hit).at("text").get<std::string>();
    }
    std::string completion = inner_->chat(prompt, model, sampling);
    json j;
    j["text"] = completion;
    store(key, body, j.dump());
    return completion;
}

TokenScoreSeq CachingBackend::token_scores(const std::string& text,
                                           const std::optional<std::string>& condition_prefix,
                                           const std::string& observer, const std::string& sampler,
                                           const std::optional<std::string>& performer) {
    std::string body = score_request_body(text, condition_prefix, observer, sampler, performer);
    std::string key = cache_key("score", observer + "|" + sampler + "|" + performer.value_or(""),
                                body);
    if (auto hit = lookup(key)) {
        return seq_from_json(json::parse(*hit));
    }
    TokenScoreSeq seq = inner_->token_scores(text, condition_prefix, observer, sampler, performer);
    store(key, body, seq_to_json(seq).dump());
    return seq;
}

EmbeddingVector CachingBackend::embed(const std::string& text, const std::string& model) {
    std::string body = embed_request_body(text, model);
    std::string key = cache_key("embed", model, body);
    if (auto hit = lookup(key)) {
        json j = json::parse(*hit);
        EmbeddingVector v;
        v.model_tag = j.at("model").get<std::string>();
        v.values = j.at("embedding").get<std::vector<double>>();
        return v;
    }
    EmbeddingVector v = inner_->embed(text, model);
    json j;
    j["model"] = v.model_tag;
    j["embedding"] = v.values;
    store(key, body, j.dump());
    return v;
}

// ---------------------------------------------------------------------------
// ConcurrencyLimitedBackend
// ---------------------------------------------------------------------------

class ConcurrencyLimitedBackend::Slot {
public:
    explicit Slot(ConcurrencyLimitedBackend& owner) : owner_(owner) {
        std::unique_lock<std::mutex> lock(owner_.mutex_);
        owner_.cv_.wait(lock, [&] { return owner_.inflight_ < owner_.limit_; });
        owner_.inflight_++;
        int cur = owner_.inflight_;
        int prev = owner_.peak_.load();
        while (cur > prev && !owner_.peak_.compare_exchange_weak(prev, cur)) {
        }
    }
    ~Slot() {
        {
            std::lock_guard<std::mutex> lock(owner_.mutex_);
            owner_.inflight_--;
        }
        owner_.cv_.notify_one();
    }

private:
    ConcurrencyLimitedBackend& owner_;
};

ConcurrencyLimitedBackend::ConcurrencyLimitedBackend(std::shared_ptr<Backend> inner,
                                                     int max_inflight)
    : inner_(std::move(inner)), limit_(max_inflight) {
    if (limit_ < 1) {
        throw PreconditionError("max_inflight must be >= 1");
    }
}

std::string ConcurrencyLimitedBackend::chat(const std::string& prompt, const std::string& model,
                                            const Sampling& sampling) {
    Slot slot(*this);
    return inner_->chat(prompt, model, sampling);
}

TokenScoreSeq ConcurrencyLimitedBackend::token_scores(
    const std::string& text, const std::optional<std::string>& condition_prefix,
    const std::string& observer, const std::string& sampler,
    const std::optional<std::string>& performer) {
    Slot slot(*this);
    return inner_->token_scores(text, condition_prefix, observer, sampler, performer);
}

EmbeddingVector ConcurrencyLimitedBackend::embed(const std::string& text,
                                                 const std::string& model) {
    Slot slot(*this);
    return inner_->embed(text, model);
}

} // namespace revdetect::backends
