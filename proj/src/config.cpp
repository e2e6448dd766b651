#include "revdetect/config.hpp"

#include "revdetect/errors.hpp"
#include "revdetect/util.hpp"

#include <cstdlib>
#include <set>
#include <sstream>

namespace revdetect::config {

namespace {

std::string interpolate_env(const std::string& value, std::vector<std::string>& problems) {
    std::string out;
    std::size_t pos = 0;
    while (pos < value.size()) {
        std::size_t start = value.find("${", pos);
        if (start == std::string::npos) {
            out += value.substr(pos);
            break;
        }
        std::size_t end = value.find('}', start + 2);
        if (end == std::string::npos) {
            problems.push_back("unterminated ${...} in value: " + value);
            out += value.substr(pos);
            break;
        }
        out += value.substr(pos, start - pos);
        std::string var = value.substr(start + 2, end - start - 2);
        if (const char* env = std::getenv(var.c_str())) {
            out += env;
        } else {
            problems.push_back("environment variable not set: " + var);
        }
        pos = end + 1;
    }
    return out;
}

struct KeyValues {
    std::map<std::string, std::string> values;
    std::vector<std::string> problems;

    bool has(const std::string& key) const { return values.count(key) > 0; }

    std::string get(const std::string& key, const std::string& fallback = {}) const {
        auto it = values.find(key);
        return it == values.end() ? fallback : it->second;
    }

    int get_int(const std::string& key, int fallback) {
        auto it = values.find(key);
        if (it == values.end()) return fallback;
        try {
            return std::stoi(it->second);
        } catch (...) {
            problems.push_back("key '" + key + "': expected integer, got '" + it->second + "'");
            return fallback;
        }
    }

    double get_double(const std::string& key, double fallback) {
        auto it = values.find(key);
        if (it == values.end()) return fallback;
        try {
            return std::stod(it->second);
        } catch (...) {
            problems.push_back("key '" + key + "': expected number, got '" + it->second + "'");
            return fallback;
        }
    }

    bool get_bool(const std::string& key, bool fallback) {
        auto it = values.find(key);
        if (it == values.end()) return fallback;
        if (it->second == "true") return true;
        if (it->second == "false") return false;
        problems.push_back("key '" + key + "': expected true/false, got '" + it->second + "'");
        return fallback;
    }

    std::vector<std::string> get_list(const std::string& key) const {
        std::vector<std::string> out;
        for (const std::string& item : util::split(get(key), ',')) {
            std::string t = util::trim(item);
            if (!t.empty()) out.push_back(t);
        }
        return out;
    }
};

KeyValues parse_keyvalues(const std::string& content) {
    KeyValues kv;
    std::istringstream ss(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
        line_no++;
        std::string t = util::trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            kv.problems.push_back("line " + std::to_string(line_no) + ": expected key = value");
            continue;
        }
        std::string key = util::trim(t.substr(0, eq));
        std::string value = util::trim(t.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        value = interpolate_env(value, kv.problems);
        if (key.empty()) {
            kv.problems.push_back("line " + std::to_string(line_no) + ": empty key");
            continue;
        }
        if (kv.values.count(key)) {
            kv.problems.push_back("line " + std::to_string(line_no) + ": duplicate key '" + key +
                                  "'");
            continue;
        }
        kv.values[key] = value;
    }
    return kv;
}

DetectorEntry parse_detector(const std::string& spec, std::vector<std::string>& problems) {
    DetectorEntry e;
    e.name = spec;
    try {
        if (util::starts_with(spec, "external:")) {
            e.kind = DetectorEntry::Kind::external;
            e.external_name = spec.substr(9);
            if (e.external_name.empty()) {
                problems.push_back("detector '" + spec + "': missing external detector name");
            }
        } else if (util::starts_with(spec, "similarity:")) {
            e.kind = DetectorEntry::Kind::similarity;
            e.metric = simdetect::metric_from_string(spec.substr(11));
        } else {
            e.kind = DetectorEntry::Kind::zeroshot;
            std::string base = spec;
            if (util::ends_with(base, "+ctx")) {
                e.zeroshot.conditioned = true;
                base = base.substr(0, base.size() - 4);
            }
            e.zeroshot.kind = zeroshot::detector_kind_from_string(base);
        }
    } catch (const Error& err) {
        problems.push_back(std::string("detector '") + spec + "': " + err.what());
    }
    return e;
}

} // namespace

std::filesystem::path RunConfig::run_dir() const {
    return output_dir / config_hash.substr(0, 12);
}

RunConfig load_config(const std::filesystem::path& path) {
    std::string content = util::read_file(path);
    KeyValues kv = parse_keyvalues(content);
    std::vector<std::string>& problems = kv.problems;

    RunConfig c;
    c.config_path = path;
    c.config_hash = util::sha256_hex(content);

    auto base = path.parent_path();
    auto resolve = [&](const std::string& value) -> std::filesystem::path {
        std::filesystem::path p(value);
        return p.is_absolute() ? p : base / p;
    };

    if (kv.has("corpus.reviews")) {
        c.reviews_path = resolve(kv.get("corpus.reviews"));
    } else {
        problems.push_back("missing required key: corpus.reviews");
    }
    c.papers_path = kv.has("corpus.papers") ? resolve(kv.get("corpus.papers"))
                                            : c.reviews_path.parent_path() / "papers.jsonl";
    if (kv.has("corpus.split")) {
        try {
            c.split_tag = corpus::split_tag_from_string(kv.get("corpus.split"));
        } catch (const Error& e) {
            problems.push_back(e.what());
        }
    }

    if (kv.has("data.templates")) c.templates_dir = resolve(kv.get("data.templates"));
    if (kv.has("data.lexicons")) c.lexicons_dir = resolve(kv.get("data.lexicons"));
    if (kv.has("guidelines.file")) c.guidelines_file = resolve(kv.get("guidelines.file"));

    c.backend_kind = kv.get("backend.kind", "mock");
    if (c.backend_kind != "mock" && c.backend_kind != "http") {
        problems.push_back("backend.kind must be 'mock' or 'http', got '" + c.backend_kind +
                           "'");
    }
    c.backend_base_url = kv.get("backend.base_url");
    if (c.backend_kind == "http" && c.backend_base_url.empty()) {
        problems.push_back("backend.kind = http requires backend.base_url");
    }
    c.backend_api_key_env = kv.get("backend.api_key_env", c.backend_api_key_env);
    c.backend_generate_path = kv.get("backend.generate_path", c.backend_generate_path);
    c.backend_score_path = kv.get("backend.score_path", c.backend_score_path);
    c.backend_embed_path = kv.get("backend.embed_path", c.backend_embed_path);
    c.backend_cache = kv.get_bool("backend.cache", true);
    c.backend_trace = kv.get_bool("backend.trace", false);
    c.backend_max_inflight = kv.get_int("backend.max_inflight", 4);
    if (c.backend_max_inflight < 1) {
        problems.push_back("backend.max_inflight must be >= 1");
    }

    c.observer_model = kv.get("models.observer", c.observer_model);
    c.sampler_model = kv.get("models.sampler", c.sampler_model);
    c.performer_model = kv.get("models.performer", c.performer_model);
    c.judge_model = kv.get("models.judge", c.judge_model);

    std::set<std::string> seen_detectors;
    for (const std::string& spec : kv.get_list("detectors")) {
        if (!seen_detectors.insert(spec).second) {
            problems.push_back("duplicate detector: '" + spec + "'");
            continue;
        }
        c.detectors.push_back(parse_detector(spec, problems));
    }

    for (const auto& [key, value] : kv.values) {
        // external.<name>.<field>
        if (!util::starts_with(key, "external.")) continue;
        std::string rest = key.substr(9);
        std::size_t dot = rest.find('.');
        if (dot == std::string::npos) {
            problems.push_back("malformed external detector key: " + key);
            continue;
        }
        std::string name = rest.substr(0, dot);
        std::string field = rest.substr(dot + 1);
        auto& ep = c.external_endpoints[name];
        if (field == "kind") {
            ep.kind = value;
            if (value != "mock" && value != "http") {
                problems.push_back("external." + name + ".kind must be 'mock' or 'http'");
            }
        } else if (field == "base_url") {
            ep.base_url = value;
        } else if (field == "path") {
            ep.path = value;
        } else if (field == "api_key_env") {
            ep.api_key_env = value;
        } else if (field == "request_template") {
            ep.request_template = value;
        } else if (field == "label_field") {
            ep.label_field = value;
        } else if (field == "prob_ai") {
            ep.prob_ai = value;
        } else if (field == "prob_mixed") {
            ep.prob_mixed = value;
        } else if (field == "prob_human") {
            ep.prob_human = value;
        } else {
            problems.push_back("unknown external detector field: " + key);
        }
    }
    for (const auto& d : c.detectors) {
        if (d.kind == DetectorEntry::Kind::external &&
            c.external_endpoints.count(d.external_name) == 0) {
            problems.push_back("detector '" + d.name + "' has no external." + d.external_name +
                               ".* configuration");
        }
    }

    if (kv.has("similarity.metric")) {
        try {
            c.similarity.metric = simdetect::metric_from_string(kv.get("similarity.metric"));
        } catch (const Error& e) {
            problems.push_back(e.what());
        }
    }
    c.similarity.n = kv.get_int("similarity.n", 40);
    c.similarity.tau = kv.get_double("similarity.tau", 0.80);
    c.similarity.embed_model = kv.get("similarity.embed_model", "embed");
    c.similarity.keypoint_model = kv.get("similarity.keypoint_model", "");
    if (c.similarity.n < 1) problems.push_back("similarity.n must be >= 1");
    if (c.similarity.tau <= 0.0 || c.similarity.tau >= 1.0) {
        problems.push_back("similarity.tau must lie in (0, 1)");
    }

    c.ref_models = kv.get_list("refs.models");
    for (const std::string& v : kv.get_list("refs.variants")) {
        try {
            c.ref_variants.push_back(std::stoi(v));
        } catch (...) {
            problems.push_back("refs.variants: expected integer, got '" + v + "'");
        }
    }
    c.ref_rollouts = kv.get_int("refs.rollouts", 5);

    for (const std::string& s : kv.get_list("generate.levels")) {
        try {
            c.generate_levels.push_back(corpus::level_from_string(s));
        } catch (const Error& e) {
            problems.push_back(e.what());
        }
    }
    c.generate_models = kv.get_list("generate.models");
    for (const std::string& v : kv.get_list("generate.variants")) {
        try {
            c.generate_variants.push_back(std::stoi(v));
        } catch (...) {
            problems.push_back("generate.variants: expected integer, got '" + v + "'");
        }
    }
    c.generate_rollouts = kv.get_int("generate.rollouts", 1);
    c.conference_name = kv.get("generate.conference", c.conference_name);

    c.classifier_feature_kind = kv.get("classifier.feature_kind", "stylometric");
    if (c.classifier_feature_kind != "stylometric" && c.classifier_feature_kind != "similarity") {
        problems.push_back("classifier.feature_kind must be 'stylometric' or 'similarity'");
    }
    c.classifier_rounds = kv.get_int("classifier.rounds", 200);
    c.classifier_learning_rate = kv.get_double("classifier.learning_rate", 0.1);
    c.classifier_max_depth = kv.get_int("classifier.max_depth", 6);
    c.classifier_holdout_fraction = kv.get_double("classifier.holdout_fraction", 0.2);
    c.classifier_holdout_model = kv.get("classifier.holdout_model");

    c.calibration_filter.venue = kv.get("calibration.venue");
    if (kv.has("calibration.min_year")) {
        c.calibration_filter.min_year = kv.get_int("calibration.min_year", 0);
    }
    if (kv.has("calibration.max_year")) {
        c.calibration_filter.max_year = kv.get_int("calibration.max_year", 0);
    }
    c.calibration_fraction = kv.get_double("calibration.fraction", 0.5);
    if (c.calibration_fraction <= 0.0 || c.calibration_fraction >= 1.0) {
        problems.push_back("calibration.fraction must lie in (0, 1)");
    }

    if (kv.has("output.dir")) c.output_dir = resolve(kv.get("output.dir"));
    c.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));

    if (!problems.empty()) {
        std::string msg = "config validation failed:";
        for (const std::string& p : problems) {
            msg += "\n  - " + p;
        }
        throw ValidationError(msg);
    }
    return c;
}

} // namespace revdetect::config
