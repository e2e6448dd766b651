#include "revdetect/pipeline.hpp"

#include "revdetect/classify.hpp"
#include "revdetect/errors.hpp"
#include "revdetect/util.hpp"
#include "revdetect/zeroshot.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

namespace revdetect::pipeline {

using nlohmann::json;

namespace {

constexpr const char* kDefaultGuidelines =
    "Assess the novelty, technical soundness, clarity and significance of the paper. "
    "Summarize the contribution, list strengths and weaknesses with concrete evidence, "
    "ask clarifying questions, and give an overall recommendation.";

std::shared_ptr<backends::Backend> build_backend(const config::RunConfig& cfg) {
    std::shared_ptr<backends::Backend> inner;
    if (cfg.backend_kind == "mock") {
        inner = std::make_shared<backends::MockBackend>();
    } else {
        backends::HttpBackendConfig hc;
        hc.base_url = cfg.backend_base_url;
        hc.api_key_env = cfg.backend_api_key_env;
        hc.generate_path = cfg.backend_generate_path;
        hc.score_path = cfg.backend_score_path;
        hc.embed_path = cfg.backend_embed_path;
        inner = std::make_shared<backends::HttpBackend>(hc);
    }
    if (cfg.backend_cache) {
        inner = std::make_shared<backends::CachingBackend>(inner, cfg.run_dir() / "cache",
                                                           cfg.backend_trace);
    }
    if (cfg.backend_max_inflight > 0) {
        inner = std::make_shared<backends::ConcurrencyLimitedBackend>(inner,
                                                                      cfg.backend_max_inflight);
    }
    return inner;
}

} // namespace

Runtime::Runtime(config::RunConfig cfg)
    : cfg_(std::move(cfg)), backend_(build_backend(cfg_)),
      templates_(genpipeline::TemplateLibrary::load(cfg_.templates_dir)),
      lexicons_(stylometry::LexiconBundle::load(cfg_.lexicons_dir)) {
    guidelines_ = cfg_.guidelines_file.empty() ? kDefaultGuidelines
                                               : util::read_file(cfg_.guidelines_file);
}

const corpus::ReviewSet& Runtime::review_set() {
    if (!review_set_) {
        review_set_ = corpus::load_manifest(cfg_.reviews_path, cfg_.papers_path, cfg_.split_tag);
    }
    return *review_set_;
}

const simdetect::ReferenceSet& Runtime::references(const corpus::PaperDoc& paper) {
    auto it = reference_sets_.find(paper.paper_id);
    if (it != reference_sets_.end()) {
        return it->second;
    }
    simdetect::BuildConfig bc;
    bc.models = cfg_.ref_models;
    bc.prompt_variants = cfg_.ref_variants;
    bc.rollouts = cfg_.ref_rollouts;
    bc.base_seed = cfg_.seed;
    genpipeline::GenContext ctx;
    ctx.conference = cfg_.conference_name;
    ctx.venue = "refs";
    ctx.year = 0;
    auto set = simdetect::build_references(backend(), templates_, paper, guidelines_, ctx, bc);
    return reference_sets_.emplace(paper.paper_id, std::move(set)).first->second;
}

extdetect::ExternalDetector& Runtime::external_detector(const std::string& name) {
    auto it = externals_.find(name);
    if (it != externals_.end()) {
        return *it->second;
    }
    auto cfg_it = cfg_.external_endpoints.find(name);
    if (cfg_it == cfg_.external_endpoints.end()) {
        throw PreconditionError("no configuration for external detector '" + name + "'");
    }
    extdetect::DetectorEndpointConfig dc;
    dc.name = name;
    dc.base_url = cfg_it->second.base_url;
    dc.path = cfg_it->second.path;
    dc.api_key_env = cfg_it->second.api_key_env;
    if (!cfg_it->second.request_template.empty()) {
        dc.request_template = cfg_it->second.request_template;
    }
    dc.label_field = cfg_it->second.label_field;
    const auto& ep = cfg_it->second;
    if (!ep.prob_ai.empty() && !ep.prob_mixed.empty() && !ep.prob_human.empty()) {
        dc.probability_fields = {
            {"AI", ep.prob_ai}, {"Mixed", ep.prob_mixed}, {"Human", ep.prob_human}};
    }
    extdetect::Transport transport = cfg_it->second.kind == "mock"
                                         ? extdetect::mock_transport()
                                         : extdetect::http_transport(dc);
    auto det = std::make_unique<extdetect::ExternalDetector>(dc, std::move(transport),
                                                             cfg_.run_dir() / "external" / name);
    return *externals_.emplace(name, std::move(det)).first->second;
}

// ---------------------------------------------------------------------------
// Report rendering
// ---------------------------------------------------------------------------

namespace {

std::string pct1(double rate) {
    return util::format_fixed(100.0 * rate, 1);
}

// canonical level ordering for report columns: AI-BP, AI-EP, AI-HI, H-AI, H,
// then humanized variants
std::vector<corpus::AssistanceLevel> report_levels(const EvalReport& report) {
    std::set<std::pair<int, bool>> present;
    for (const auto& d : report.detectors) {
        for (const auto& row : d.rates.rows) {
            present.insert({static_cast<int>(row.level.base), row.level.humanized});
        }
    }
    std::vector<corpus::AssistanceLevel> levels;
    for (bool humanized : {false, true}) {
        for (int base = 0; base < static_cast<int>(corpus::kLevelCount); base++) {
            if (present.count({base, humanized})) {
                levels.push_back({static_cast<corpus::Level>(base), humanized});
            }
        }
    }
    return levels;
}

const evalstats::RateRow* find_row(const evalstats::RateTable& table,
                                   const corpus::AssistanceLevel& level) {
    for (const auto& row : table.rows) {
        if (row.level == level) return &row;
    }
    return nullptr;
}

} // namespace

std::string render_report_markdown(const EvalReport& report) {
    std::ostringstream md;
    md << "# Detection report\n\n";
    md << "- run: " << report.config_hash.substr(0, 12) << "\n";
    md << "- seed: " << report.seed << "\n";
    md << "- calibration: " << report.calibration_reviews << " reviews / "
       << report.calibration_papers << " papers\n";
    md << "- evaluation: " << report.evaluation_reviews << " reviews / "
       << report.evaluation_papers << " papers\n\n";

    auto levels = report_levels(report);

    md << "## Rates per level (%)\n\n";
    md << "Positive-class levels report TPR (higher is better); the rest report "
          "FPR (lower is better).\n\n";
    md << "| detector |";
    for (const auto& level : levels) {
        md << " " << corpus::to_string(level) << " ("
           << (corpus::policy_positive(level) ? "TPR" : "FPR") << ") |";
    }
    md << "\n|---|";
    for (std::size_t i = 0; i < levels.size(); i++) md << "---|";
    md << "\n";
    for (const auto& d : report.detectors) {
        md << "| " << d.name << " |";
        for (const auto& level : levels) {
            const auto* row = find_row(d.rates, level);
            if (row == nullptr) {
                md << " n/a |";
            } else {
                md << " " << pct1(row->rate) << " |";
            }
        }
        md << "\n";
    }
    // base levels with no evaluation reviews are omitted from the table
    std::vector<std::string> omitted;
    for (int base = 0; base < static_cast<int>(corpus::kLevelCount); base++) {
        corpus::AssistanceLevel plain{static_cast<corpus::Level>(base), false};
        if (std::find(levels.begin(), levels.end(), plain) == levels.end()) {
            omitted.emplace_back(corpus::to_string(plain.base));
        }
    }
    if (!omitted.empty()) {
        md << "\nLevels with no evaluation reviews are omitted:";
        for (std::size_t i = 0; i < omitted.size(); i++) {
            md << (i == 0 ? " " : ", ") << omitted[i];
        }
        md << ".\n";
    }
    md << "\n";

    bool any_threshold = false;
    for (const auto& d : report.detectors) {
        if (d.threshold) any_threshold = true;
    }
    if (any_threshold) {
        md << "## Calibrated thresholds (0% FPR on the calibration set)\n\n";
        md << "| detector | direction | threshold | calibration scores |\n";
        md << "|---|---|---|---|\n";
        for (const auto& d : report.detectors) {
            if (!d.threshold) continue;
            md << "| " << d.name << " | " << (d.threshold->higher_is_ai ? "higher=AI" : "lower=AI")
               << " | " << util::format_fixed(d.threshold->value, 6) << " | "
               << d.threshold->source.calibration_count << " |\n";
        }
        md << "\n";
    }

    for (const auto& d : report.detectors) {
        if (!d.confusion) continue;
        md << "## 3-class confusion: " << d.name << " (% of level)\n\n";
        md << "| level | AI | Mixed | Human |\n|---|---|---|---|\n";
        for (const auto& row : d.confusion->rows) {
            md << "| " << corpus::to_string(row.level) << " | " << util::format_fixed(row.ai_pct, 1)
               << " | " << util::format_fixed(row.mixed_pct, 1) << " | "
               << util::format_fixed(row.human_pct, 1) << " |\n";
        }
        md << "\n";
    }

    if (!report.mcnemar.empty()) {
        md << "## McNemar tests (p-values per level)\n\n";
        md << "| pair |";
        for (const auto& level : levels) md << " " << corpus::to_string(level) << " |";
        md << "\n|---|";
        for (std::size_t i = 0; i < levels.size(); i++) md << "---|";
        md << "\n";
        // group cells by pair, preserving insertion order
        std::vector<std::pair<std::string, std::string>> pairs;
        for (const auto& cell : report.mcnemar) {
            std::pair<std::string, std::string> key{cell.detector_a, cell.detector_b};
            if (std::find(pairs.begin(), pairs.end(), key) == pairs.end()) {
                pairs.push_back(key);
            }
        }
        for (const auto& [a, b] : pairs) {
            md << "| " << a << " vs " << b << " |";
            for (const auto& level : levels) {
                const McNemarCell* found = nullptr;
                for (const auto& cell : report.mcnemar) {
                    if (cell.detector_a == a && cell.detector_b == b && cell.level == level) {
                        found = &cell;
                        break;
                    }
                }
                if (found == nullptr) {
                    md << " n/a |";
                } else {
                    md << " " << util::format_fixed(found->result.p, 4) << " |";
                }
            }
            md << "\n";
        }
        md << "\n";
    }
    return md.str();
}

std::string render_report_csv(const EvalReport& report) {
    std::ostringstream csv;
    auto levels = report_levels(report);
    csv << "detector";
    for (const auto& level : levels) {
        csv << "," << corpus::to_string(level) << "_"
            << (corpus::policy_positive(level) ? "tpr" : "fpr");
    }
    csv << "\n";
    for (const auto& d : report.detectors) {
        csv << d.name;
        for (const auto& level : levels) {
            const auto* row = find_row(d.rates, level);
            csv << ",";
            if (row != nullptr) {
                csv << pct1(row->rate);
            }
        }
        csv << "\n";
    }
    return csv.str();
}

// ---------------------------------------------------------------------------
// Report JSON round-trip
// ---------------------------------------------------------------------------

namespace {

json level_to_json(const corpus::AssistanceLevel& level) {
    json j;
    j["base"] = std::string(corpus::to_string(level.base));
    j["humanized"] = level.humanized;
    return j;
}

corpus::AssistanceLevel level_from_json(const json& j) {
    return corpus::AssistanceLevel::make(corpus::level_from_string(j.at("base").get<std::string>()),
                                         j.at("humanized").get<bool>());
}

json rates_to_json(const evalstats::RateTable& table) {
    json rows = json::array();
    for (const auto& row : table.rows) {
        json r;
        r["level"] = level_to_json(row.level);
        r["count"] = row.count;
        r["positives"] = row.positives;
        r["rate"] = row.rate;
        r["is_tpr"] = row.is_tpr;
        rows.push_back(std::move(r));
    }
    json j;
    j["rows"] = std::move(rows);
    j["total"] = table.total;
    return j;
}

evalstats::RateTable rates_from_json(const json& j) {
    evalstats::RateTable table;
    table.total = j.at("total").get<std::size_t>();
    for (const auto& r : j.at("rows")) {
        evalstats::RateRow row;
        row.level = level_from_json(r.at("level"));
        row.count = r.at("count").get<std::size_t>();
        row.positives = r.at("positives").get<std::size_t>();
        row.rate = r.at("rate").get<double>();
        row.is_tpr = r.at("is_tpr").get<bool>();
        table.rows.push_back(row);
    }
    return table;
}

} // namespace

std::string report_to_json(const EvalReport& report) {
    json j;
    j["config_hash"] = report.config_hash;
    j["seed"] = report.seed;
    j["calibration_reviews"] = report.calibration_reviews;
    j["calibration_papers"] = report.calibration_papers;
    j["evaluation_reviews"] = report.evaluation_reviews;
    j["evaluation_papers"] = report.evaluation_papers;
    json detectors = json::array();
    for (const auto& d : report.detectors) {
        json dj;
        dj["name"] = d.name;
        dj["scalar"] = d.scalar;
        if (d.threshold) {
            json t;
            t["value"] = d.threshold->value;
            t["higher_is_ai"] = d.threshold->higher_is_ai;
            t["detector"] = d.threshold->source.detector;
            t["calibration_count"] = d.threshold->source.calibration_count;
            t["min_score"] = d.threshold->source.min_score;
            t["max_score"] = d.threshold->source.max_score;
            dj["threshold"] = std::move(t);
        }
        dj["rates"] = rates_to_json(d.rates);
        if (d.confusion) {
            json rows = json::array();
            for (const auto& row : d.confusion->rows) {
                json r;
                r["level"] = level_to_json(row.level);
                r["count"] = row.count;
                r["ai_pct"] = row.ai_pct;
                r["mixed_pct"] = row.mixed_pct;
                r["human_pct"] = row.human_pct;
                rows.push_back(std::move(r));
            }
            json c;
            c["rows"] = std::move(rows);
            c["collapsed"] = rates_to_json(d.confusion->collapsed);
            dj["confusion"] = std::move(c);
        }
        detectors.push_back(std::move(dj));
    }
    j["detectors"] = std::move(detectors);
    json cells = json::array();
    for (const auto& cell : report.mcnemar) {
        json c;
        c["detector_a"] = cell.detector_a;
        c["detector_b"] = cell.detector_b;
        c["level"] = level_to_json(cell.level);
        c["b"] = cell.result.b;
        c["c"] = cell.result.c;
        c["p"] = cell.result.p;
        c["variant"] = static_cast<int>(cell.result.variant);
        if (cell.result.statistic) c["statistic"] = *cell.result.statistic;
        cells.push_back(std::move(c));
    }
    j["mcnemar"] = std::move(cells);
    return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& json_text) {
    json j = json::parse(json_text);
    EvalReport report;
    report.config_hash = j.at("config_hash").get<std::string>();
    report.seed = j.at("seed").get<std::uint64_t>();
    report.calibration_reviews = j.at("calibration_reviews").get<std::size_t>();
    report.calibration_papers = j.at("calibration_papers").get<std::size_t>();
    report.evaluation_reviews = j.at("evaluation_reviews").get<std::size_t>();
    report.evaluation_papers = j.at("evaluation_papers").get<std::size_t>();
    for (const auto& dj : j.at("detectors")) {
        DetectorEval d;
        d.name = dj.at("name").get<std::string>();
        d.scalar = dj.at("scalar").get<bool>();
        if (dj.contains("threshold")) {
            evalstats::Threshold t;
            t.value = dj["threshold"].at("value").get<double>();
            t.higher_is_ai = dj["threshold"].at("higher_is_ai").get<bool>();
            t.source.detector = dj["threshold"].at("detector").get<std::string>();
            t.source.calibration_count =
                dj["threshold"].at("calibration_count").get<std::size_t>();
            t.source.min_score = dj["threshold"].at("min_score").get<double>();
            t.source.max_score = dj["threshold"].at("max_score").get<double>();
            d.threshold = t;
        }
        d.rates = rates_from_json(dj.at("rates"));
        if (dj.contains("confusion")) {
            evalstats::Confusion3 c;
            for (const auto& r : dj["confusion"].at("rows")) {
                evalstats::Confusion3::Row row;
                row.level = level_from_json(r.at("level"));
                row.count = r.at("count").get<std::size_t>();
                row.ai_pct = r.at("ai_pct").get<double>();
                row.mixed_pct = r.at("mixed_pct").get<double>();
                row.human_pct = r.at("human_pct").get<double>();
                c.rows.push_back(row);
            }
            c.collapsed = rates_from_json(dj["confusion"].at("collapsed"));
            d.confusion = c;
        }
        report.detectors.push_back(std::move(d));
    }
    for (const auto& c : j.at("mcnemar")) {
        McNemarCell cell;
        cell.detector_a = c.at("detector_a").get<std::string>();
        cell.detector_b = c.at("detector_b").get<std::string>();
        cell.level = level_from_json(c.at("level"));
        cell.result.b = c.at("b").get<std::size_t>();
        cell.result.c = c.at("c").get<std::size_t>();
        cell.result.p = c.at("p").get<double>();
        cell.result.variant = static_cast<evalstats::McNemarResult::Variant>(
            c.at("variant").get<int>());
        if (c.contains("statistic")) cell.result.statistic = c["statistic"].get<double>();
        report.mcnemar.push_back(std::move(cell));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Command implementations
// ---------------------------------------------------------------------------

namespace {

const corpus::PaperDoc& paper_of(const corpus::ReviewSet& set, const corpus::Review& review) {
    auto it = set.papers.find(review.paper_id);
    if (it == set.papers.end()) {
        throw ValidationError("review '" + review.id + "' references unknown paper '" +
                              review.paper_id + "'");
    }
    return it->second;
}

// scalar detector score for one review
double scalar_score(Runtime& rt, const config::DetectorEntry& det, const corpus::Review& review,
                    const corpus::ReviewSet& set) {
    const config::RunConfig& cfg = rt.cfg();
    if (det.kind == config::DetectorEntry::Kind::zeroshot) {
        zeroshot::ScoringModels models{cfg.observer_model, cfg.sampler_model,
                                       cfg.performer_model};
        return zeroshot::conditioned_score(review, paper_of(set, review), det.zeroshot, models,
                                           rt.backend());
    }
    // similarity
    simdetect::SimilarityConfig sc = cfg.similarity;
    sc.metric = det.metric;
    const auto& refs = rt.references(paper_of(set, review));
    return simdetect::max_similarity(rt.backend(), &rt.templates(), review, refs, sc);
}

bool detector_higher_is_ai(const config::DetectorEntry& det) {
    if (det.kind == config::DetectorEntry::Kind::zeroshot) {
        return det.zeroshot.higher_is_ai();
    }
    return true; // similarity to AI references rises with AI involvement
}

void write_lines(const std::filesystem::path& path, const std::string& content) {
    util::write_file_atomic(path, content);
}

int cmd_ingest(Runtime& rt, std::ostream& out) {
    const auto& set = rt.review_set();
    std::map<std::string, std::size_t> per_level;
    for (const auto& r : set.reviews) {
        per_level[corpus::to_string(r.level)]++;
    }
    json j;
    j["papers"] = set.papers.size();
    j["reviews"] = set.reviews.size();
    j["human_reviews"] = set.human_review_count();
    j["split"] = std::string(corpus::to_string(set.split_tag));
    j["per_level"] = per_level;
    write_lines(rt.cfg().run_dir() / "ingest.json", j.dump(2) + "\n");
    out << "papers: " << set.papers.size() << "\n";
    out << "reviews: " << set.reviews.size() << "\n";
    out << "human reviews: " << set.human_review_count() << "\n";
    for (const auto& [level, count] : per_level) {
        out << "  " << level << ": " << count << "\n";
    }
    return 0;
}

int cmd_generate(Runtime& rt, std::ostream& out) {
    const config::RunConfig& cfg = rt.cfg();
    if (cfg.generate_levels.empty() || cfg.generate_models.empty() ||
        cfg.generate_variants.empty()) {
        throw PreconditionError(
            "generate requires generate.levels, generate.models and generate.variants");
    }
    const auto& set = rt.review_set();

    // human reviews indexed per paper for the levels that need one
    std::map<std::string, const corpus::Review*> human_by_paper;
    for (const auto& r : set.reviews) {
        if (r.level.base == corpus::Level::H && !r.level.humanized) {
            human_by_paper.emplace(r.paper_id, &r);
        }
    }

    corpus::ReviewSet generated;
    generated.split_tag = set.split_tag;
    generated.papers = set.papers;
    std::size_t skipped = 0;
    double ratio_sum = 0.0; // review length over key-point length, AI-HI only
    std::size_t ratio_n = 0;
    for (const auto& [paper_id, paper] : set.papers) {
        for (corpus::Level level : cfg.generate_levels) {
            bool needs_human = level == corpus::Level::AI_HI || level == corpus::Level::H_AI;
            const corpus::Review* human = nullptr;
            if (needs_human) {
                auto it = human_by_paper.find(paper_id);
                if (it == human_by_paper.end()) {
                    skipped++;
                    continue;
                }
                human = it->second;
            }
            for (const std::string& model : cfg.generate_models) {
                for (int variant : cfg.generate_variants) {
                    const auto& tmpl = rt.templates().get(level, variant);
                    for (int rollout = 0; rollout < cfg.generate_rollouts; rollout++) {
                        genpipeline::GenContext ctx;
                        ctx.conference = cfg.conference_name;
                        ctx.venue = human != nullptr ? human->venue : "generated";
                        ctx.year = human != nullptr ? human->year : 0;
                        ctx.sampling.seed = cfg.seed * 104729 +
                                            static_cast<std::uint64_t>(rollout);
                        std::optional<corpus::Review> human_opt;
                        if (human != nullptr) human_opt = *human;
                        corpus::Review r = genpipeline::generate_leveled_review(
                            rt.backend(), rt.templates(), paper, rt.guidelines(), human_opt,
                            level, tmpl, model, ctx);
                        if (level == corpus::Level::H_AI &&
                            !genpipeline::filter_polish_length(*human, r)) {
                            skipped++;
                            continue;
                        }
                        if (level == corpus::Level::AI_HI) {
                            // the extraction request is already cached, so this
                            // re-read costs no backend call
                            std::string kp = genpipeline::extract_keypoints(
                                rt.backend(), rt.templates(), *human, model, ctx.sampling);
                            std::size_t kp_words = 0;
                            for (const auto& t : stylometry::tokenize_words(kp)) {
                                if (!t.is_punct) kp_words++;
                            }
                            if (kp_words > 0) {
                                ratio_sum += static_cast<double>(r.word_count) /
                                             static_cast<double>(kp_words);
                                ratio_n++;
                            }
                        }
                        generated.reviews.push_back(std::move(r));
                    }
                }
            }
        }
    }
    auto dir = cfg.run_dir();
    corpus::save_manifest(generated, dir / "generated.jsonl", dir / "generated_papers.jsonl");
    out << "generated " << generated.reviews.size() << " reviews (" << skipped
        << " skipped)\n";
    if (ratio_n > 0) {
        out << "mean review/key-points length ratio: "
            << util::format_fixed(ratio_sum / static_cast<double>(ratio_n), 2) << " over "
            << ratio_n << " key-point elaborations\n";
    }
    return 0;
}

int cmd_refs(Runtime& rt, std::ostream& out) {
    const auto& set = rt.review_set();
    if (rt.cfg().ref_models.empty() || rt.cfg().ref_variants.empty()) {
        throw PreconditionError("refs requires refs.models and refs.variants");
    }
    auto dir = rt.cfg().run_dir() / "refs";
    std::size_t total = 0;
    for (const auto& [paper_id, paper] : set.papers) {
        const auto& refs = rt.references(paper);
        std::ostringstream lines;
        for (const auto& r : refs.references) {
            json j;
            j["id"] = r.id;
            j["paper_id"] = r.paper_id;
            j["generator_model"] = r.generator_model.value_or("");
            j["prompt_variant"] = r.prompt_variant.value_or(-1);
            j["text"] = r.text;
            lines << j.dump() << "\n";
        }
        write_lines(dir / (paper_id + ".jsonl"), lines.str());
        total += refs.references.size();
        if (!refs.complete()) {
            out << "warning: partial reference set for " << paper_id << " ("
                << refs.gaps.size() << " gaps)\n";
        }
    }
    out << "built " << total << " references for " << set.papers.size() << " papers\n";
    return 0;
}

int cmd_features(Runtime& rt, std::ostream& out) {
    const auto& set = rt.review_set();
    std::ostringstream csv;
    csv << "review_id";
    for (auto name : stylometry::stylo_feature_names()) {
        csv << "," << name;
    }
    csv << "\n";
    for (const auto& r : set.reviews) {
        auto v = stylometry::extract_stylo(r.text, rt.lexicons());
        csv << r.id;
        for (double x : v.to_array()) {
            csv << "," << util::format_fixed(x, 9);
        }
        csv << "\n";
    }
    write_lines(rt.cfg().run_dir() / "features.csv", csv.str());
    out << "wrote features for " << set.reviews.size() << " reviews\n";
    return 0;
}

int cmd_score(Runtime& rt, std::ostream& out) {
    const auto& set = rt.review_set();
    const config::RunConfig& cfg = rt.cfg();
    if (cfg.detectors.empty()) {
        throw PreconditionError("score requires a non-empty detectors list");
    }
    std::ostringstream scores_csv, external_csv, similarity_csv;
    scores_csv << "review_id,detector,conditioned,score\n";
    external_csv << "review_id,detector,label\n";
    bool wrote_similarity = false;
    std::size_t n_scores = 0, n_external = 0;
    for (const auto& det : cfg.detectors) {
        if (det.kind == config::DetectorEntry::Kind::external) {
            auto& ext = rt.external_detector(det.external_name);
            for (const auto& r : set.reviews) {
                auto verdict = ext.classify(r);
                external_csv << r.id << "," << det.name << ","
                             << evalstats::to_string(verdict.label) << "\n";
                n_external++;
            }
            continue;
        }
        bool conditioned = det.kind == config::DetectorEntry::Kind::zeroshot &&
                           det.zeroshot.conditioned;
        for (const auto& r : set.reviews) {
            double s = scalar_score(rt, det, r, set);
            scores_csv << r.id << "," << det.name << "," << (conditioned ? 1 : 0) << ","
                       << util::format_fixed(s, 9) << "\n";
            n_scores++;
        }
        if (det.kind == config::DetectorEntry::Kind::similarity) {
            // per-reference sorted feature vectors, one row per review
            simdetect::SimilarityConfig sc = cfg.similarity;
            sc.metric = det.metric;
            if (!wrote_similarity) {
                similarity_csv << "review_id,metric";
                std::size_t dim = cfg.ref_models.size() * cfg.ref_variants.size() *
                                  static_cast<std::size_t>(cfg.ref_rollouts);
                for (std::size_t i = 0; i < dim; i++) similarity_csv << ",ref_" << i;
                similarity_csv << ",max\n";
                wrote_similarity = true;
            }
            for (const auto& r : set.reviews) {
                const auto& refs = rt.references(paper_of(set, r));
                auto feats =
                    simdetect::similarity_features(rt.backend(), &rt.templates(), r, refs, sc);
                feats.resize(refs.expected_size(), 0.0);
                similarity_csv << r.id << "," << to_string(det.metric);
                for (double f : feats) similarity_csv << "," << util::format_fixed(f, 9);
                similarity_csv << "," << util::format_fixed(feats.empty() ? 0.0 : feats.front(), 9)
                               << "\n";
            }
        }
    }
    auto dir = cfg.run_dir();
    write_lines(dir / "scores.csv", scores_csv.str());
    write_lines(dir / "external.csv", external_csv.str());
    if (wrote_similarity) {
        write_lines(dir / "similarity.csv", similarity_csv.str());
    }
    out << "wrote " << n_scores << " scalar scores and " << n_external
        << " external verdicts\n";
    return 0;
}

// stylometric or similarity feature matrix for the classifier
std::pair<classify::TrainSet, std::vector<const corpus::Review*>> build_trainset(
    Runtime& rt, const corpus::ReviewSet& set) {
    classify::TrainSet ts;
    std::vector<const corpus::Review*> order;
    if (rt.cfg().classifier_feature_kind == "stylometric") {
        ts.feature_kind = classify::FeatureKind::stylometric;
        ts.feature_dim = stylometry::kStyloFeatureCount;
        for (const auto& r : set.reviews) {
            auto v = stylometry::extract_stylo(r.text, rt.lexicons());
            auto arr = v.to_array();
            ts.features.emplace_back(arr.begin(), arr.end());
            ts.labels.push_back(r.level.base);
            order.push_back(&r);
        }
    } else {
        ts.feature_kind = classify::FeatureKind::similarity;
        simdetect::SimilarityConfig sc = rt.cfg().similarity;
        std::size_t dim = 0;
        std::vector<std::vector<double>> rows;
        for (const auto& r : set.reviews) {
            const auto& refs = rt.references(paper_of(set, r));
            auto feats =
                simdetect::similarity_features(rt.backend(), &rt.templates(), r, refs, sc);
            dim = std::max(dim, refs.expected_size());
            rows.push_back(std::move(feats));
            ts.labels.push_back(r.level.base);
            order.push_back(&r);
        }
        // pad partial reference sets with zeros at the sorted tail
        for (auto& row : rows) {
            row.resize(dim, 0.0);
        }
        ts.feature_dim = dim;
        ts.features = std::move(rows);
    }
    return {std::move(ts), std::move(order)};
}

int cmd_train(Runtime& rt, std::ostream& out) {
    const auto& set = rt.review_set();
    const config::RunConfig& cfg = rt.cfg();
    auto [full, order] = build_trainset(rt, set);

    classify::Hyper hyper;
    hyper.rounds = cfg.classifier_rounds;
    hyper.learning_rate = cfg.classifier_learning_rate;
    hyper.max_depth = cfg.classifier_max_depth;

    // split rows: leave-one-model-out when configured, else paper-granular
    std::vector<std::size_t> train_rows, test_rows;
    if (!cfg.classifier_holdout_model.empty()) {
        for (std::size_t i = 0; i < order.size(); i++) {
            bool held = order[i]->generator_model &&
                        *order[i]->generator_model == cfg.classifier_holdout_model;
            (held ? test_rows : train_rows).push_back(i);
        }
        if (test_rows.empty()) {
            throw PreconditionError("holdout model '" + cfg.classifier_holdout_model +
                                    "' matches no reviews");
        }
    } else {
        std::set<std::string> papers;
        for (const auto* r : order) papers.insert(r->paper_id);
        std::vector<std::string> shuffled(papers.begin(), papers.end());
        std::mt19937_64 rng(cfg.seed);
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        std::size_t n_test = std::max<std::size_t>(
            1, static_cast<std::size_t>(cfg.classifier_holdout_fraction *
                                        static_cast<double>(shuffled.size())));
        std::set<std::string> test_papers(shuffled.begin(), shuffled.begin() + n_test);
        for (std::size_t i = 0; i < order.size(); i++) {
            (test_papers.count(order[i]->paper_id) ? test_rows : train_rows).push_back(i);
        }
    }

    classify::TrainSet train_set;
    train_set.feature_kind = full.feature_kind;
    train_set.feature_dim = full.feature_dim;
    for (std::size_t i : train_rows) {
        train_set.features.push_back(full.features[i]);
        train_set.labels.push_back(full.labels[i]);
    }

    auto model = classify::LevelModel::train(train_set, hyper, cfg.seed);
    auto dir = cfg.run_dir();
    model.save(dir / "model.bin");

    auto accuracy_on = [&](const std::vector<std::size_t>& rows) {
        if (rows.empty()) return 0.0;
        std::size_t correct = 0;
        for (std::size_t i : rows) {
            if (model.predict(full.features[i]).level == full.labels[i]) correct++;
        }
        return static_cast<double>(correct) / static_cast<double>(rows.size());
    };
    double train_acc = accuracy_on(train_rows);
    double test_acc = accuracy_on(test_rows);

    json j;
    j["feature_kind"] = cfg.classifier_feature_kind;
    j["train_rows"] = train_rows.size();
    j["test_rows"] = test_rows.size();
    j["train_accuracy"] = train_acc;
    j["test_accuracy"] = test_acc;
    j["holdout_model"] = cfg.classifier_holdout_model;
    j["model_file"] = (dir / "model.bin").string();
    write_lines(dir / "train_summary.json", j.dump(2) + "\n");
    out << "trained on " << train_rows.size() << " rows; held-out accuracy "
        << util::format_fixed(100.0 * test_acc, 1) << "% (" << test_rows.size() << " rows)\n";
    return 0;
}

struct SplitData {
    corpus::SplitResult split;
};

SplitData make_split(Runtime& rt) {
    SplitData s{corpus::split_calibration_eval(rt.review_set(), rt.cfg().calibration_filter,
                                               rt.cfg().seed, rt.cfg().calibration_fraction)};
    return s;
}

int cmd_calibrate(Runtime& rt, std::ostream& out) {
    auto split = make_split(rt);
    const config::RunConfig& cfg = rt.cfg();
    json thresholds = json::object();
    for (const auto& det : cfg.detectors) {
        if (det.kind == config::DetectorEntry::Kind::external) continue;
        std::vector<double> cal_scores;
        for (const auto& r : split.split.calibration.reviews) {
            cal_scores.push_back(scalar_score(rt, det, r, rt.review_set()));
        }
        auto t = evalstats::calibrate_threshold(cal_scores, detector_higher_is_ai(det), det.name);
        json tj;
        tj["value"] = t.value;
        tj["higher_is_ai"] = t.higher_is_ai;
        tj["calibration_count"] = t.source.calibration_count;
        tj["min_score"] = t.source.min_score;
        tj["max_score"] = t.source.max_score;
        thresholds[det.name] = std::move(tj);
        out << det.name << ": threshold " << util::format_fixed(t.value, 6) << " ("
            << (t.higher_is_ai ? "higher" : "lower") << "=AI, n="
            << t.source.calibration_count << ")\n";
    }
    json j;
    j["calibration_reviews"] = split.split.calibration.reviews.size();
    j["thresholds"] = std::move(thresholds);
    write_lines(cfg.run_dir() / "thresholds.json", j.dump(2) + "\n");
    return 0;
}

EvalReport build_eval_report(Runtime& rt) {
    const config::RunConfig& cfg = rt.cfg();
    if (cfg.detectors.empty()) {
        throw PreconditionError("evaluate requires a non-empty detectors list");
    }
    auto split = make_split(rt);
    const auto& cal = split.split.calibration;
    const auto& eval = split.split.evaluation;
    if (eval.reviews.empty()) {
        throw PreconditionError("evaluation split is empty");
    }

    std::set<std::string> cal_papers, eval_papers;
    for (const auto& r : cal.reviews) cal_papers.insert(r.paper_id);
    for (const auto& r : eval.reviews) eval_papers.insert(r.paper_id);

    EvalReport report;
    report.config_hash = cfg.config_hash;
    report.seed = cfg.seed;
    report.calibration_reviews = cal.reviews.size();
    report.calibration_papers = cal_papers.size();
    report.evaluation_reviews = eval.reviews.size();
    report.evaluation_papers = eval_papers.size();

    // per-detector binary outcomes on the shared eval set, for McNemar
    std::vector<std::vector<bool>> positives(cfg.detectors.size());

    for (std::size_t di = 0; di < cfg.detectors.size(); di++) {
        const auto& det = cfg.detectors[di];
        DetectorEval de;
        de.name = det.name;
        std::vector<std::pair<const corpus::Review*, bool>> outcomes;

        if (det.kind == config::DetectorEntry::Kind::external) {
            de.scalar = false;
            auto& ext = rt.external_detector(det.external_name);
            std::vector<std::pair<const corpus::Review*, evalstats::Label3>> labeled;
            for (const auto& r : eval.reviews) {
                auto verdict = ext.classify(r);
                labeled.emplace_back(&r, verdict.label);
                outcomes.emplace_back(&r, verdict.label == evalstats::Label3::AI);
            }
            de.confusion = evalstats::confusion_3class(labeled);
            de.rates = de.confusion->collapsed;
        } else {
            de.scalar = true;
            std::vector<double> cal_scores;
            for (const auto& r : cal.reviews) {
                cal_scores.push_back(scalar_score(rt, det, r, rt.review_set()));
            }
            auto threshold =
                evalstats::calibrate_threshold(cal_scores, detector_higher_is_ai(det), det.name);
            de.threshold = threshold;
            for (const auto& r : eval.reviews) {
                double s = scalar_score(rt, det, r, rt.review_set());
                outcomes.emplace_back(&r, threshold.classify_positive(s));
            }
            de.rates = evalstats::level_rates(outcomes);
        }

        for (const auto& [review, positive] : outcomes) {
            positives[di].push_back(positive);
        }
        report.detectors.push_back(std::move(de));
    }

    // McNemar over every detector pair, per level group
    std::set<std::pair<int, bool>> level_groups;
    for (const auto& r : eval.reviews) {
        level_groups.insert({static_cast<int>(r.level.base), r.level.humanized});
    }
    for (std::size_t a = 0; a < cfg.detectors.size(); a++) {
        for (std::size_t b = a + 1; b < cfg.detectors.size(); b++) {
            for (const auto& [base, humanized] : level_groups) {
                corpus::AssistanceLevel level{static_cast<corpus::Level>(base), humanized};
                std::vector<std::pair<bool, bool>> paired;
                for (std::size_t i = 0; i < eval.reviews.size(); i++) {
                    const auto& r = eval.reviews[i];
                    if (r.level != level) continue;
                    bool truth = corpus::policy_positive(r.level);
                    paired.emplace_back(positives[a][i] == truth, positives[b][i] == truth);
                }
                if (paired.empty()) continue;
                McNemarCell cell;
                cell.detector_a = cfg.detectors[a].name;
                cell.detector_b = cfg.detectors[b].name;
                cell.level = level;
                cell.result = evalstats::mcnemar(paired);
                report.mcnemar.push_back(std::move(cell));
            }
        }
    }
    return report;
}

int cmd_evaluate(Runtime& rt, std::ostream& out) {
    EvalReport report = build_eval_report(rt);
    auto dir = rt.cfg().run_dir();
    write_lines(dir / "evalreport.json", report_to_json(report));
    write_lines(dir / "report.md", render_report_markdown(report));
    write_lines(dir / "report.csv", render_report_csv(report));

    std::ostringstream mcnemar_csv;
    mcnemar_csv << "detector_a,detector_b,level,b,c,p\n";
    for (const auto& cell : report.mcnemar) {
        mcnemar_csv << cell.detector_a << "," << cell.detector_b << ","
                    << corpus::to_string(cell.level) << "," << cell.result.b << ","
                    << cell.result.c << "," << util::format_fixed(cell.result.p, 9) << "\n";
    }
    write_lines(dir / "mcnemar.csv", mcnemar_csv.str());

    std::ostringstream confusion_csv;
    confusion_csv << "detector,level,ai_pct,mixed_pct,human_pct,count\n";
    for (const auto& d : report.detectors) {
        if (!d.confusion) continue;
        for (const auto& row : d.confusion->rows) {
            confusion_csv << d.name << "," << corpus::to_string(row.level) << ","
                          << util::format_fixed(row.ai_pct, 1) << ","
                          << util::format_fixed(row.mixed_pct, 1) << ","
                          << util::format_fixed(row.human_pct, 1) << "," << row.count << "\n";
        }
    }
    write_lines(dir / "confusion.csv", confusion_csv.str());

    out << "evaluated " << report.detectors.size() << " detectors on "
        << report.evaluation_reviews << " reviews; report at " << (dir / "report.md").string()
        << "\n";
    return 0;
}

int cmd_report(Runtime& rt, std::ostream& out, const std::string& format) {
    auto path = rt.cfg().run_dir() / "evalreport.json";
    if (!std::filesystem::exists(path)) {
        throw PreconditionError("no evaluation results at " + path.string() +
                                "; run `evaluate` first");
    }
    EvalReport report = report_from_json(util::read_file(path));
    if (format == "csv") {
        out << render_report_csv(report);
    } else if (format == "markdown") {
        out << render_report_markdown(report);
    } else {
        throw PreconditionError("unknown report format '" + format + "'");
    }
    return 0;
}

} // namespace

int run_command(const std::string& command, const std::filesystem::path& config_path,
                std::ostream& out, std::ostream& err, const std::string& report_format) {
    try {
        config::RunConfig cfg = config::load_config(config_path);
        if (!std::filesystem::exists(cfg.reviews_path)) {
            throw ValidationError("corpus reviews path does not exist: " +
                                  cfg.reviews_path.string());
        }
        if (!std::filesystem::exists(cfg.papers_path)) {
            throw ValidationError("corpus papers path does not exist: " +
                                  cfg.papers_path.string());
        }
        std::filesystem::create_directories(cfg.run_dir());
        Runtime rt(std::move(cfg));

        if (command == "ingest") return cmd_ingest(rt, out);
        if (command == "generate") return cmd_generate(rt, out);
        if (command == "refs") return cmd_refs(rt, out);
        if (command == "features") return cmd_features(rt, out);
        if (command == "score") return cmd_score(rt, out);
        if (command == "train") return cmd_train(rt, out);
        if (command == "calibrate") return cmd_calibrate(rt, out);
        if (command == "evaluate") return cmd_evaluate(rt, out);
        if (command == "report") return cmd_report(rt, out, report_format);
        throw PreconditionError("unknown command '" + command + "'");
    } catch (const std::exception& e) {
        json j;
        j["error"] = e.what();
        j["command"] = command;
        err << j.dump() << "\n";
        return 1;
    }
}

} // namespace revdetect::pipeline
