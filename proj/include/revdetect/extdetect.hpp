#ifndef REVDETECT_EXTDETECT_HPP
#define REVDETECT_EXTDETECT_HPP

#include "revdetect/backends.hpp"
#include "revdetect/corpus.hpp"
#include "revdetect/evalstats.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace revdetect::extdetect {

struct ExternalVerdict {
    std::string review_id;
    std::string detector;
    evalstats::Label3 label = evalstats::Label3::Human;
    std::string raw_payload; // archived response, verbatim
};

// Wiring for one commercial detector endpoint. The label is read from
// `label_field` (dot path into the response JSON); when absent,
// `probability_fields` maps each class to a dot path and the argmax class
// wins. Unmapped label strings are a parse error; the raw payload is always
// archived before parsing.
struct DetectorEndpointConfig {
    std::string name;
    std::string base_url;
    std::string path = "/v1/classify";
    std::string api_key_env;
    // JSON request body; {REVIEW_ID} and {TEXT} inside string values are
    // substituted per review
    std::string request_template = R"({"review_id":"{REVIEW_ID}","text":"{TEXT}"})";
    std::string label_field = "prediction_short";
    std::map<std::string, std::string> label_map = {
        {"ai", "AI"}, {"mixed", "Mixed"}, {"human", "Human"}};
    std::map<std::string, std::string> probability_fields; // "AI"/"Mixed"/"Human" -> path
    backends::RetryPolicy retry;
    int timeout_ms = 60000;
    int min_interval_ms = 0; // vendor rate limit; 0 disables pacing
};

// POSTs {"review_id", "text"} and returns the raw response body. Tests and
// the mock pipeline substitute a scripted transport.
using Transport = std::function<std::string(const std::string& request_body)>;

Transport http_transport(const DetectorEndpointConfig& config);

// Deterministic scripted transport: exact text match first, then a synthetic
// label derived from the text hash.
Transport mock_transport();

class ExternalDetector {
public:
    ExternalDetector(DetectorEndpointConfig config, Transport transport,
                     std::filesystem::path archive_dir);

    // Cached by (detector, review id, text); the raw payload is archived
    // before any parsing happens.
    ExternalVerdict classify(const corpus::Review& review);

    const std::string& name() const { return config_.name; }

private:
    ExternalVerdict parse(const corpus::Review& review, const std::string& payload) const;
    std::filesystem::path cache_path(const corpus::Review& review) const;
    void pace();

    DetectorEndpointConfig config_;
    Transport transport_;
    std::filesystem::path archive_dir_;
    std::mutex pace_mutex_;
    std::chrono::steady_clock::time_point last_request_{};
};

} // namespace revdetect::extdetect

#endif
