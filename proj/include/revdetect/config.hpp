#ifndef REVDETECT_CONFIG_HPP
#define REVDETECT_CONFIG_HPP

#include "revdetect/corpus.hpp"
#include "revdetect/simdetect.hpp"
#include "revdetect/zeroshot.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace revdetect::config {

// One scalar or 3-class detector requested in the run.
struct DetectorEntry {
    enum class Kind { zeroshot, similarity, external } kind = Kind::zeroshot;
    zeroshot::DetectorSpec zeroshot;   // kind == zeroshot
    simdetect::Metric metric = simdetect::Metric::cosine; // kind == similarity
    std::string external_name;        // kind == external
    std::string name;                  // display name, unique per run
};

struct RunConfig {
    std::filesystem::path config_path;
    std::string config_hash; // sha256 of the raw config bytes

    std::filesystem::path reviews_path;
    std::filesystem::path papers_path;
    corpus::SplitTag split_tag = corpus::SplitTag::mixed;

    std::filesystem::path templates_dir = "data/templates";
    std::filesystem::path lexicons_dir = "data/lexicons";
    std::filesystem::path guidelines_file; // optional; default text when empty

    // backend
    std::string backend_kind = "mock"; // "mock" or "http"
    std::string backend_base_url;
    std::string backend_api_key_env = "REVDETECT_API_KEY";
    std::string backend_generate_path = "/v1/generate";
    std::string backend_score_path = "/v1/score";
    std::string backend_embed_path = "/v1/embed";
    bool backend_cache = true;
    bool backend_trace = false;
    int backend_max_inflight = 4;

    // model roles
    std::string observer_model = "observer";
    std::string sampler_model = "sampler";
    std::string performer_model = "performer";
    std::string judge_model = "judge";

    std::vector<DetectorEntry> detectors;

    // external detector endpoints by name
    struct ExternalEndpoint {
        std::string kind = "mock"; // "mock" or "http"
        std::string base_url;
        std::string path = "/v1/classify";
        std::string api_key_env;
        std::string request_template; // empty -> adapter default
        std::string label_field = "prediction_short";
        std::string prob_ai;    // optional probability dot-paths; when all
        std::string prob_mixed; // three are set, argmax decides the label
        std::string prob_human;
    };
    std::map<std::string, ExternalEndpoint> external_endpoints;

    simdetect::SimilarityConfig similarity;
    std::vector<std::string> ref_models;
    std::vector<int> ref_variants;
    int ref_rollouts = 5;

    // generation grid
    std::vector<corpus::Level> generate_levels;
    std::vector<std::string> generate_models;
    std::vector<int> generate_variants;
    int generate_rollouts = 1;
    std::string conference_name = "the conference";

    // classifier
    std::string classifier_feature_kind = "stylometric";
    int classifier_rounds = 200;
    double classifier_learning_rate = 0.1;
    int classifier_max_depth = 6;
    double classifier_holdout_fraction = 0.2;
    std::string classifier_holdout_model; // leave-one-model-out when set

    corpus::CalibrationFilter calibration_filter;
    double calibration_fraction = 0.5;

    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;

    // directory all artifacts of this config live under
    std::filesystem::path run_dir() const;
};

// Parses the flat key/value config format: one `key = value` per line, `#`
// comments, ${ENV_VAR} interpolation inside values, comma-separated lists.
// Relative paths resolve against the config file's directory. All validation
// problems are gathered and reported together.
RunConfig load_config(const std::filesystem::path& path);

} // namespace revdetect::config

#endif
