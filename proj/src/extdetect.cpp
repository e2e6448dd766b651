#include "revdetect/extdetect.hpp"

#include "revdetect/errors.hpp"
#include "revdetect/util.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <thread>

namespace revdetect::extdetect {

using nlohmann::json;

Transport http_transport(const DetectorEndpointConfig& config) {
    return [config](const std::string& request_body) -> std::string {
        httplib::Client client(config.base_url);
        client.set_read_timeout(config.timeout_ms / 1000, (config.timeout_ms % 1000) * 1000);
        if (!config.api_key_env.empty()) {
            if (const char* key = std::getenv(config.api_key_env.c_str())) {
                client.set_bearer_token_auth(key);
            }
        }
        int backoff = config.retry.initial_backoff_ms;
        std::string last_error;
        for (int attempt = 1; attempt <= config.retry.attempts; attempt++) {
            auto res = client.Post(config.path, request_body, "application/json");
            if (!res) {
                last_error = "transport failure: " + httplib::to_string(res.error());
            } else if (res->status == 429 || res->status >= 500) {
                last_error = "detector status " + std::to_string(res->status);
            } else if (res->status >= 400) {
                throw BackendError("detector '" + config.name + "' rejected request (status " +
                                       std::to_string(res->status) + "): " + res->body,
                                   res->status);
            } else {
                return res->body;
            }
            if (attempt < config.retry.attempts) {
                std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
                backoff = static_cast<int>(backoff * config.retry.multiplier);
            }
        }
        throw TransportError("detector '" + config.name + "' unreachable after " +
                             std::to_string(config.retry.attempts) + " attempts: " + last_error);
    };
}

Transport mock_transport() {
    return [](const std::string& request_body) -> std::string {
        json req = json::parse(request_body);
        std::string text = req.value("text", "");
        const char* labels[] = {"ai", "mixed", "human"};
        json out;
        out["prediction_short"] = labels[util::fnv1a64(text) % 3];
        return out.dump();
    };
}

ExternalDetector::ExternalDetector(DetectorEndpointConfig config, Transport transport,
                                   std::filesystem::path archive_dir)
    : config_(std::move(config)), transport_(std::move(transport)),
      archive_dir_(std::move(archive_dir)) {
    std::filesystem::create_directories(archive_dir_);
}

std::filesystem::path ExternalDetector::cache_path(const corpus::Review& review) const {
    std::string key = util::sha256_hex(config_.name + '\x1f' + review.id + '\x1f' + review.text);
    return archive_dir_ / key.substr(0, 2) / (key + ".json");
}

namespace {

const json* resolve_path(const json& j, const std::string& dot_path) {
    const json* cur = &j;
    for (const std::string& part : util::split(dot_path, '.')) {
        if (!cur->is_object()) return nullptr;
        auto it = cur->find(part);
        if (it == cur->end()) return nullptr;
        cur = &*it;
    }
    return cur;
}

} // namespace

ExternalVerdict ExternalDetector::parse(const corpus::Review& review,
                                        const std::string& payload) const {
    ExternalVerdict v;
    v.review_id = review.id;
    v.detector = config_.name;
    v.raw_payload = payload;

    json j = json::parse(payload, nullptr, false);
    if (j.is_discarded()) {
        throw ProtocolError("detector '" + config_.name + "' returned non-JSON payload", payload);
    }

    if (const json* field = resolve_path(j, config_.label_field);
        field != nullptr && field->is_string()) {
        std::string raw = util::lowercase(field->get<std::string>());
        auto it = config_.label_map.find(raw);
        if (it == config_.label_map.end()) {
            throw ProtocolError("detector '" + config_.name + "' returned unmapped label '" +
                                    raw + "'",
                                payload);
        }
        v.label = evalstats::label3_from_string(it->second);
        return v;
    }

    if (!config_.probability_fields.empty()) {
        // argmax over per-class probabilities
        double best = -1.0;
        std::optional<evalstats::Label3> best_label;
        for (const auto& [label, path] : config_.probability_fields) {
            const json* p = resolve_path(j, path);
            if (p == nullptr || !p->is_number()) {
                throw ProtocolError("detector '" + config_.name +
                                        "' response missing probability field '" + path + "'",
                                    payload);
            }
            double prob = p->get<double>();
            if (prob > best) {
                best = prob;
                best_label = evalstats::label3_from_string(label);
            }
        }
        v.label = *best_label;
        return v;
    }

    throw ProtocolError("detector '" + config_.name + "' response has no label field '" +
                            config_.label_field + "'",
                        payload);
}

namespace {

void substitute_placeholders(json& node, const corpus::Review& review) {
    if (node.is_string()) {
        std::string s = node.get<std::string>();
        if (s == "{REVIEW_ID}") {
            node = review.id;
        } else if (s == "{TEXT}") {
            node = review.text;
        } else if (s.find('{') != std::string::npos) {
            auto replace = [&](const std::string& needle, const std::string& value) {
                std::size_t pos = 0;
                while ((pos = s.find(needle, pos)) != std::string::npos) {
                    s.replace(pos, needle.size(), value);
                    pos += value.size();
                }
            };
            replace("{REVIEW_ID}", review.id);
            replace("{TEXT}", review.text);
            node = s;
        }
    } else if (node.is_object() || node.is_array()) {
        for (auto& child : node) {
            substitute_placeholders(child, review);
        }
    }
}

} // namespace

void ExternalDetector::pace() {
    if (config_.min_interval_ms <= 0) return;
    std::lock_guard<std::mutex> lock(pace_mutex_);
    auto now = std::chrono::steady_clock::now();
    auto next = last_request_ + std::chrono::milliseconds(config_.min_interval_ms);
    if (now < next) {
        std::this_thread::sleep_for(next - now);
    }
    last_request_ = std::chrono::steady_clock::now();
}

ExternalVerdict ExternalDetector::classify(const corpus::Review& review) {
    std::filesystem::path cached = cache_path(review);
    if (std::filesystem::exists(cached)) {
        return parse(review, util::read_file(cached));
    }
    pace();

    json req = json::parse(config_.request_template, nullptr, false);
    if (req.is_discarded()) {
        throw ValidationError("detector '" + config_.name +
                              "': request_template is not valid JSON");
    }
    substitute_placeholders(req, review);
    std::string payload = transport_(req.dump());

    // archive before parsing so malformed payloads stay auditable
    util::write_file_atomic(cached, payload);
    return parse(review, payload);
}

} // namespace revdetect::extdetect
