#include "revdetect/stylometry.hpp"

#include "revdetect/errors.hpp"
#include "revdetect/util.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace revdetect::stylometry {

namespace {

bool is_space_byte(unsigned char c) {
    return c < 0x80 && std::isspace(c);
}

bool is_alnum_byte(unsigned char c) {
    // bytes >= 0x80 are UTF-8 continuation/lead bytes; treat as letters
    return c >= 0x80 || std::isalnum(c);
}

bool is_word_joiner(std::string_view text, std::size_t i) {
    char c = text[i];
    if (c != '-' && c != '\'') return false;
    if (i == 0 || i + 1 >= text.size()) return false;
    return is_alnum_byte(text[i - 1]) && is_alnum_byte(text[i + 1]);
}

bool all_alpha(std::string_view s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return c >= 0x80 || std::isalpha(c);
    });
}

bool is_vowel(char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

std::unordered_set<std::string> load_word_set(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw ValidationError("cannot open lexicon file: " + file.string());
    }
    std::unordered_set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        std::string w = util::trim(line);
        if (!w.empty() && w[0] != '#') {
            out.insert(util::lowercase(w));
        }
    }
    if (out.empty()) {
        throw ValidationError("empty lexicon file: " + file.string());
    }
    return out;
}

PosTag tag_from_string(const std::string& s, const std::filesystem::path& file) {
    if (s == "NOUN") return PosTag::NOUN;
    if (s == "VERB") return PosTag::VERB;
    if (s == "ADJ") return PosTag::ADJ;
    if (s == "ADV") return PosTag::ADV;
    if (s == "PREP") return PosTag::PREP;
    if (s == "CONJ") return PosTag::CONJ;
    if (s == "PRON1") return PosTag::PRON1;
    if (s == "PRON2") return PosTag::PRON2;
    if (s == "DET") return PosTag::DET;
    if (s == "OTHER") return PosTag::OTHER;
    throw ValidationError("unknown POS tag '" + s + "' in " + file.string());
}

} // namespace

std::string_view to_string(PosTag tag) {
    switch (tag) {
        case PosTag::NOUN: return "NOUN";
        case PosTag::VERB: return "VERB";
        case PosTag::ADJ: return "ADJ";
        case PosTag::ADV: return "ADV";
        case PosTag::PREP: return "PREP";
        case PosTag::CONJ: return "CONJ";
        case PosTag::PRON1: return "PRON1";
        case PosTag::PRON2: return "PRON2";
        case PosTag::DET: return "DET";
        case PosTag::PUNCT: return "PUNCT";
        case PosTag::OTHER: return "OTHER";
    }
    return "OTHER";
}

std::vector<Token> tokenize_words(std::string_view text) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (is_space_byte(c)) {
            i++;
            continue;
        }
        if (is_alnum_byte(c)) {
            std::size_t start = i;
            while (i < text.size() &&
                   (is_alnum_byte(static_cast<unsigned char>(text[i])) || is_word_joiner(text, i))) {
                i++;
            }
            tokens.push_back({std::string(text.substr(start, i - start)), false});
        } else {
            tokens.push_back({std::string(1, text[i]), true});
            i++;
        }
    }
    return tokens;
}

std::vector<std::string> split_sentences(std::string_view text,
                                         const std::unordered_set<std::string>& abbreviations) {
    std::vector<std::string> sentences;
    std::string current;

    auto flush = [&]() {
        std::string s = util::trim(current);
        if (!s.empty()) {
            sentences.push_back(std::move(s));
        }
        current.clear();
    };

    // word immediately before position `end` of `current` (alnum/'/- run)
    auto word_before = [&]() {
        std::size_t e = current.size();
        std::size_t b = e;
        while (b > 0) {
            unsigned char u = static_cast<unsigned char>(current[b - 1]);
            if (is_alnum_byte(u) || current[b - 1] == '\'' || current[b - 1] == '-') {
                b--;
            } else {
                break;
            }
        }
        return util::lowercase(std::string_view(current).substr(b, e - b));
    };

    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c != '.' && c != '!' && c != '?') {
            current += c;
            i++;
            continue;
        }
        // a period after a listed abbreviation never terminates
        if (c == '.' && abbreviations.count(word_before()) > 0) {
            current += c;
            i++;
            continue;
        }
        // absorb the whole terminator run ("?!", "...")
        std::string run(1, c);
        i++;
        while (i < text.size() && (text[i] == '.' || text[i] == '!' || text[i] == '?')) {
            run += text[i];
            i++;
        }
        // a pure-dot run followed by a lowercase letter or digit continues the
        // sentence (covers "e.g. the", decimals, dotted initialisms)
        bool pure_dots = run.find_first_not_of('.') == std::string::npos;
        std::size_t next = i;
        while (next < text.size() && is_space_byte(static_cast<unsigned char>(text[next]))) {
            next++;
        }
        bool continues_lower = next < text.size() &&
                               (std::islower(static_cast<unsigned char>(text[next])) != 0 ||
                                std::isdigit(static_cast<unsigned char>(text[next])) != 0);
        current += run;
        if (pure_dots && continues_lower) {
            continue;
        }
        flush();
    }
    flush();
    return sentences;
}

std::vector<std::string> split_sentences(std::string_view text) {
    static const std::unordered_set<std::string> kDefault = {
        "dr",  "mr",   "mrs", "ms",  "prof", "fig",  "figs", "eq",  "eqs",  "sec",
        "tab", "al",   "etc", "eg",  "ie",   "cf",   "vs",   "et",  "ref",  "refs",
        "no",  "appx", "ch",  "pp",  "resp", "approx"};
    return split_sentences(text, kDefault);
}

int count_syllables(std::string_view word) {
    std::string w;
    w.reserve(word.size());
    for (char c : word) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    if (w.empty()) {
        return 1;
    }
    int groups = 0;
    bool in_group = false;
    for (char c : w) {
        if (is_vowel(c)) {
            if (!in_group) {
                groups++;
                in_group = true;
            }
        } else {
            in_group = false;
        }
    }
    if (groups > 1 && w.back() == 'e') {
        bool final_e_alone = w.size() >= 2 && !is_vowel(w[w.size() - 2]);
        bool le_ending = w.size() >= 3 && w[w.size() - 2] == 'l' && !is_vowel(w[w.size() - 3]);
        if (final_e_alone && !le_ending) {
            groups--;
        }
    }
    return std::max(groups, 1);
}

LexiconBundle LexiconBundle::load(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    LexiconBundle b;

    // Optional digest manifest: "<sha256hex>  <filename>" per line.
    fs::path pin_file = dir / "lexicons.sha256";
    std::unordered_map<std::string, std::string> pins;
    if (fs::exists(pin_file)) {
        std::ifstream in(pin_file);
        std::string line;
        while (std::getline(in, line)) {
            std::string t = util::trim(line);
            if (t.empty() || t[0] == '#') continue;
            std::istringstream ss(t);
            std::string digest, name;
            ss >> digest >> name;
            if (digest.size() != 64 || name.empty()) {
                throw ValidationError("malformed pin line in " + pin_file.string() + ": " + line);
            }
            pins[name] = digest;
        }
    }
    auto check_pin = [&](const fs::path& file) {
        auto it = pins.find(file.filename().string());
        if (it == pins.end()) return;
        std::string actual = util::sha256_hex(util::read_file(file));
        if (actual != it->second) {
            throw ValidationError("lexicon file " + file.filename().string() +
                                  " does not match its pinned digest (got " + actual + ")");
        }
    };

    auto word_set_file = [&](const char* name) {
        fs::path p = dir / name;
        check_pin(p);
        return load_word_set(p);
    };

    b.stopwords = word_set_file("stopwords.txt");
    b.brown_top5000 = word_set_file("common_words.txt");
    b.subordinating_conjunctions = word_set_file("subordinating_conjunctions.txt");
    b.abbreviations = word_set_file("abbreviations.txt");

    {
        fs::path p = dir / "tags.tsv";
        check_pin(p);
        std::ifstream in(p);
        if (!in) throw ValidationError("cannot open lexicon file: " + p.string());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            auto cols = util::split(line, '\t');
            if (cols.size() != 2) {
                throw ValidationError("malformed tags.tsv line: " + line);
            }
            b.tag_lexicon[util::lowercase(util::trim(cols[0]))] =
                tag_from_string(util::trim(cols[1]), p);
        }
        if (b.tag_lexicon.empty()) throw ValidationError("empty lexicon file: " + p.string());
    }

    {
        fs::path p = dir / "sentiment.tsv";
        check_pin(p);
        std::ifstream in(p);
        if (!in) throw ValidationError("cannot open lexicon file: " + p.string());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            auto cols = util::split(line, '\t');
            if (cols.size() != 4) {
                throw ValidationError("malformed sentiment.tsv line: " + line);
            }
            SentimentEntry e;
            e.valence = std::stod(cols[1]);
            e.polarity = std::stod(cols[2]);
            e.subjectivity = std::stod(cols[3]);
            b.sentiment_lexicon[util::lowercase(util::trim(cols[0]))] = e;
        }
        if (b.sentiment_lexicon.empty()) throw ValidationError("empty lexicon file: " + p.string());
    }

    {
        fs::path p = dir / "emotion.tsv";
        check_pin(p);
        std::ifstream in(p);
        if (!in) throw ValidationError("cannot open lexicon file: " + p.string());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            auto cols = util::split(line, '\t');
            if (cols.size() != 2) {
                throw ValidationError("malformed emotion.tsv line: " + line);
            }
            std::string cat = util::trim(cols[1]);
            EmotionCategory c;
            if (cat == "positive") {
                c = EmotionCategory::positive;
            } else if (cat == "negative") {
                c = EmotionCategory::negative;
            } else if (cat == "other") {
                c = EmotionCategory::other;
            } else {
                throw ValidationError("unknown emotion category '" + cat + "' in " + p.string());
            }
            b.emotion_lexicon[util::lowercase(util::trim(cols[0]))] = c;
        }
        if (b.emotion_lexicon.empty()) throw ValidationError("empty lexicon file: " + p.string());
    }

    return b;
}

std::vector<PosTag> pos_tag(const std::vector<Token>& tokens, const LexiconBundle& lexicons) {
    std::vector<PosTag> tags;
    tags.reserve(tokens.size());
    for (const Token& t : tokens) {
        if (t.is_punct) {
            tags.push_back(PosTag::PUNCT);
            continue;
        }
        std::string w = util::lowercase(t.text);
        auto it = lexicons.tag_lexicon.find(w);
        if (it != lexicons.tag_lexicon.end()) {
            tags.push_back(it->second);
            continue;
        }
        if (!all_alpha(w)) {
            tags.push_back(PosTag::OTHER);
            continue;
        }
        // suffix fallbacks for out-of-vocabulary words
        static const std::pair<std::string_view, PosTag> kSuffixRules[] = {
            {"tion", PosTag::NOUN}, {"sion", PosTag::NOUN}, {"ness", PosTag::NOUN},
            {"ment", PosTag::NOUN}, {"ance", PosTag::NOUN}, {"ence", PosTag::NOUN},
            {"ship", PosTag::NOUN}, {"hood", PosTag::NOUN}, {"ism", PosTag::NOUN},
            {"ity", PosTag::NOUN},  {"dom", PosTag::NOUN},  {"ize", PosTag::VERB},
            {"ise", PosTag::VERB},  {"ify", PosTag::VERB},  {"ing", PosTag::VERB},
            {"ed", PosTag::VERB},   {"ous", PosTag::ADJ},   {"ive", PosTag::ADJ},
            {"able", PosTag::ADJ},  {"ible", PosTag::ADJ},  {"less", PosTag::ADJ},
            {"ful", PosTag::ADJ},   {"ic", PosTag::ADJ},    {"al", PosTag::ADJ},
            {"ly", PosTag::ADV},
        };
        PosTag tag = PosTag::NOUN;
        for (const auto& [suffix, t2] : kSuffixRules) {
            if (w.size() > suffix.size() + 1 && util::ends_with(w, suffix)) {
                tag = t2;
                break;
            }
        }
        tags.push_back(tag);
    }
    return tags;
}

namespace {

// Rule tables for the compound sentiment score.
const std::unordered_map<std::string, double>& booster_table() {
    static const std::unordered_map<std::string, double> kBoosters = {
        {"absolutely", 0.293},  {"amazingly", 0.293},   {"completely", 0.293},
        {"considerably", 0.293},{"decidedly", 0.293},   {"deeply", 0.293},
        {"enormously", 0.293},  {"entirely", 0.293},    {"especially", 0.293},
        {"exceptionally", 0.293},{"extremely", 0.293},  {"greatly", 0.293},
        {"highly", 0.293},      {"hugely", 0.293},      {"incredibly", 0.293},
        {"intensely", 0.293},   {"majorly", 0.293},     {"more", 0.293},
        {"most", 0.293},        {"particularly", 0.293},{"purely", 0.293},
        {"quite", 0.293},       {"really", 0.293},      {"remarkably", 0.293},
        {"so", 0.293},          {"substantially", 0.293},{"thoroughly", 0.293},
        {"totally", 0.293},     {"tremendously", 0.293},{"truly", 0.293},
        {"utterly", 0.293},     {"very", 0.293},
        {"almost", -0.293},     {"barely", -0.293},     {"hardly", -0.293},
        {"kinda", -0.293},      {"less", -0.293},       {"little", -0.293},
        {"marginally", -0.293}, {"occasionally", -0.293},{"partly", -0.293},
        {"scarcely", -0.293},   {"slightly", -0.293},   {"somewhat", -0.293},
        {"sorta", -0.293},
    };
    return kBoosters;
}

const std::unordered_set<std::string>& negator_table() {
    static const std::unordered_set<std::string> kNegators = {
        "not",     "no",      "never",   "none",    "neither", "nor",      "cannot",
        "can't",   "don't",   "won't",   "isn't",   "wasn't",  "aren't",   "weren't",
        "didn't",  "doesn't", "haven't", "hasn't",  "hadn't",  "couldn't", "shouldn't",
        "wouldn't","without", "nothing", "nowhere", "rarely",  "seldom",   "despite",
    };
    return kNegators;
}

constexpr double kCapsEmphasis = 0.733;
constexpr double kNegationScalar = -0.74;
constexpr double kExclAmplifier = 0.292;
constexpr double kQmarkAmplifier = 0.18;
constexpr double kQmarkCap = 0.96;
constexpr double kButBefore = 0.5;
constexpr double kButAfter = 1.5;

bool is_all_caps_word(std::string_view w) {
    bool has_alpha = false;
    for (char c : w) {
        unsigned char u = static_cast<unsigned char>(c);
        if (u >= 0x80) return false;
        if (std::isalpha(u)) {
            has_alpha = true;
            if (!std::isupper(u)) return false;
        }
    }
    return has_alpha;
}

} // namespace

double vader_compound(std::string_view text, const LexiconBundle& lexicons) {
    auto tokens = tokenize_words(text);

    std::vector<std::string> words;       // original casing
    std::vector<std::string> words_lower; // lookup form
    for (const Token& t : tokens) {
        if (!t.is_punct) {
            words.push_back(t.text);
            words_lower.push_back(util::lowercase(t.text));
        }
    }
    if (words.empty()) {
        return 0.0;
    }

    bool mixed_caps = false; // caps emphasis only counts when the text is not uniformly shouted
    {
        std::size_t caps = 0, alpha_words = 0;
        for (const auto& w : words) {
            if (all_alpha(w)) {
                alpha_words++;
                if (is_all_caps_word(w)) caps++;
            }
        }
        mixed_caps = caps > 0 && caps < alpha_words;
    }

    std::ptrdiff_t but_index = -1;
    for (std::size_t i = 0; i < words_lower.size(); i++) {
        if (words_lower[i] == "but") {
            but_index = static_cast<std::ptrdiff_t>(i);
            break;
        }
    }

    const auto& boosters = booster_table();
    const auto& negators = negator_table();
    constexpr double kDamping[3] = {1.0, 0.95, 0.9};

    double total = 0.0;
    for (std::size_t i = 0; i < words_lower.size(); i++) {
        auto it = lexicons.sentiment_lexicon.find(words_lower[i]);
        if (it == lexicons.sentiment_lexicon.end()) continue;
        if (boosters.count(words_lower[i])) continue; // boosters carry no valence of their own

        double v = it->second.valence;
        if (v == 0.0) continue;
        double sign = v >= 0.0 ? 1.0 : -1.0;

        if (mixed_caps && is_all_caps_word(words[i])) {
            v += sign * kCapsEmphasis;
        }
        bool negated = false;
        for (std::size_t d = 1; d <= 3 && d <= i; d++) {
            const std::string& prev = words_lower[i - d];
            auto bit = boosters.find(prev);
            if (bit != boosters.end()) {
                v += sign * bit->second * kDamping[d - 1];
            }
            if (negators.count(prev)) {
                negated = true;
            }
        }
        if (negated) {
            v *= kNegationScalar;
        }
        if (but_index >= 0) {
            v *= static_cast<std::ptrdiff_t>(i) < but_index ? kButBefore : kButAfter;
        }
        total += v;
    }

    if (total != 0.0) {
        std::size_t excl = 0, qmark = 0;
        for (char c : text) {
            if (c == '!') excl++;
            if (c == '?') qmark++;
        }
        double amp = std::min<std::size_t>(excl, 4) * kExclAmplifier;
        if (qmark > 1) {
            amp += qmark <= 3 ? qmark * kQmarkAmplifier : kQmarkCap;
        }
        total += (total > 0.0 ? amp : -amp);
    }

    double compound = total / std::sqrt(total * total + 15.0);
    return std::clamp(compound, -1.0, 1.0);
}

PolaritySubjectivity polarity_subjectivity(std::string_view text, const LexiconBundle& lexicons) {
    PolaritySubjectivity out;
    std::size_t hits = 0;
    for (const Token& t : tokenize_words(text)) {
        if (t.is_punct) continue;
        auto it = lexicons.sentiment_lexicon.find(util::lowercase(t.text));
        if (it == lexicons.sentiment_lexicon.end()) continue;
        out.polarity += it->second.polarity;
        out.subjectivity += it->second.subjectivity;
        hits++;
    }
    if (hits > 0) {
        out.polarity /= static_cast<double>(hits);
        out.subjectivity /= static_cast<double>(hits);
    }
    return out;
}

const std::array<std::string_view, kStyloFeatureCount>& stylo_feature_names() {
    static const std::array<std::string_view, kStyloFeatureCount> kNames = {
        "avg_word_length",        "avg_sentence_length",      "ttr",
        "rttr",                   "maas",                     "hapax_rate",
        "bigram_uniqueness",      "trigram_uniqueness",       "punctuation_pct",
        "stopword_pct",           "question_pct",             "exclamation_pct",
        "abstract_noun_pct",      "sparse_abstract_noun_pct", "verb_pct",
        "sparse_verb_pct",        "adjective_pct",            "sparse_adjective_pct",
        "complex_adjective_pct",  "adverb_pct",               "sparse_adverb_pct",
        "preposition_pct",        "conjunction_pct",          "complex_sentence_pct",
        "syntax_variety",         "emotion_word_pct",         "positive_emotion_pct",
        "negative_emotion_pct",   "other_emotion_pct",        "first_person_pct",
        "second_person_pct",      "polarity",                 "subjectivity",
        "vader_compound",         "avg_syllables_per_word",   "complex_word_pct",
        "flesch_reading_ease",    "gunning_fog",
    };
    return kNames;
}

std::array<double, kStyloFeatureCount> StyloVector::to_array() const {
    return {avg_word_length,        avg_sentence_length,      ttr,
            rttr,                   maas,                     hapax_rate,
            bigram_uniqueness,      trigram_uniqueness,       punctuation_pct,
            stopword_pct,           question_pct,             exclamation_pct,
            abstract_noun_pct,      sparse_abstract_noun_pct, verb_pct,
            sparse_verb_pct,        adjective_pct,            sparse_adjective_pct,
            complex_adjective_pct,  adverb_pct,               sparse_adverb_pct,
            preposition_pct,        conjunction_pct,          complex_sentence_pct,
            syntax_variety,         emotion_word_pct,         positive_emotion_pct,
            negative_emotion_pct,   other_emotion_pct,        first_person_pct,
            second_person_pct,      polarity,                 subjectivity,
            vader_compound,         avg_syllables_per_word,   complex_word_pct,
            flesch_reading_ease,    gunning_fog};
}

namespace {

// Nouns with these suffixes count as abstract.
const char* kAbstractSuffixes[] = {"ness", "ity", "tion", "sion", "ism", "ment",
                                   "ance", "ence", "ship", "dom", "hood"};

// Adjectives with these suffixes count as morphologically complex.
const char* kComplexAdjSuffixes[] = {"ive", "ous", "ic"};

bool has_suffix_of(const std::string& w, const char* const* list, std::size_t n) {
    for (std::size_t i = 0; i < n; i++) {
        std::string_view s = list[i];
        if (w.size() > s.size() && util::ends_with(w, s)) return true;
    }
    return false;
}

} // namespace

StyloVector extract_stylo(std::string_view text, const LexiconBundle& lexicons) {
    StyloVector v;

    auto tokens = tokenize_words(text);
    std::vector<std::string> words_lower;
    std::vector<std::size_t> word_token_idx;
    for (std::size_t i = 0; i < tokens.size(); i++) {
        if (!tokens[i].is_punct) {
            words_lower.push_back(util::lowercase(tokens[i].text));
            word_token_idx.push_back(i);
        }
    }
    const double W = static_cast<double>(words_lower.size());
    if (words_lower.empty()) {
        v.degenerate = true;
        return v;
    }

    auto sentences = split_sentences(text, lexicons.abbreviations);
    const double S = static_cast<double>(std::max<std::size_t>(sentences.size(), 1));

    // character statistics over the raw text (byte-level)
    std::size_t non_space_chars = 0, punct_chars = 0;
    for (char c : text) {
        unsigned char u = static_cast<unsigned char>(c);
        if (!is_space_byte(u)) non_space_chars++;
        if (u < 0x80 && std::ispunct(u)) punct_chars++;
    }
    v.avg_word_length = static_cast<double>(non_space_chars) / W;
    v.avg_sentence_length = W / S;
    v.punctuation_pct = text.empty() ? 0.0 : 100.0 * static_cast<double>(punct_chars) /
                                                  static_cast<double>(text.size());

    // lexical diversity (case-folded types)
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& w : words_lower) counts[w]++;
    const double U = static_cast<double>(counts.size());
    v.ttr = U / W;
    v.rttr = U / std::sqrt(W);
    if (words_lower.size() >= 2) {
        double lnW = std::log(W);
        v.maas = (lnW - std::log(U)) / (lnW * lnW);
    }
    std::size_t hapax = 0;
    for (const auto& [w, n] : counts) {
        if (n == 1) hapax++;
    }
    v.hapax_rate = static_cast<double>(hapax) / W;

    auto ngram_uniqueness = [&](std::size_t n) {
        if (words_lower.size() < n) return 0.0;
        std::set<std::string> unique;
        std::size_t total = words_lower.size() - n + 1;
        for (std::size_t i = 0; i < total; i++) {
            std::string g = words_lower[i];
            for (std::size_t j = 1; j < n; j++) {
                g += ' ';
                g += words_lower[i + j];
            }
            unique.insert(std::move(g));
        }
        return static_cast<double>(unique.size()) / static_cast<double>(total);
    };
    v.bigram_uniqueness = ngram_uniqueness(2);
    v.trigram_uniqueness = ngram_uniqueness(3);

    std::size_t stop = 0;
    for (const auto& w : words_lower) {
        if (lexicons.stopwords.count(w)) stop++;
    }
    v.stopword_pct = 100.0 * static_cast<double>(stop) / W;

    std::size_t questions = 0, exclamations = 0, complex_sentences = 0;
    for (const auto& s : sentences) {
        if (s.back() == '?') questions++;
        if (s.back() == '!') exclamations++;
        for (const Token& t : tokenize_words(s)) {
            if (!t.is_punct && lexicons.subordinating_conjunctions.count(util::lowercase(t.text))) {
                complex_sentences++;
                break;
            }
        }
    }
    v.question_pct = 100.0 * static_cast<double>(questions) / S;
    v.exclamation_pct = 100.0 * static_cast<double>(exclamations) / S;
    v.complex_sentence_pct = 100.0 * static_cast<double>(complex_sentences) / S;

    // POS-based counts
    auto tags = pos_tag(tokens, lexicons);
    std::size_t abstract_nouns = 0, sparse_abstract = 0;
    std::size_t verbs = 0, sparse_verbs = 0;
    std::size_t adjectives = 0, sparse_adjectives = 0, complex_adjectives = 0;
    std::size_t adverbs = 0, sparse_adverbs = 0;
    std::size_t prepositions = 0, conjunctions = 0, pron1 = 0, pron2 = 0;
    std::set<PosTag> distinct_tags;
    for (std::size_t k = 0; k < tokens.size(); k++) {
        distinct_tags.insert(tags[k]);
    }
    for (std::size_t wi = 0; wi < words_lower.size(); wi++) {
        PosTag tag = tags[word_token_idx[wi]];
        const std::string& w = words_lower[wi];
        bool sparse = lexicons.brown_top5000.count(w) == 0;
        switch (tag) {
            case PosTag::NOUN: {
                if (has_suffix_of(w, kAbstractSuffixes, std::size(kAbstractSuffixes))) {
                    abstract_nouns++;
                    if (sparse) sparse_abstract++;
                }
                break;
            }
            case PosTag::VERB:
                verbs++;
                if (sparse) sparse_verbs++;
                break;
            case PosTag::ADJ:
                adjectives++;
                if (sparse) sparse_adjectives++;
                if (has_suffix_of(w, kComplexAdjSuffixes, std::size(kComplexAdjSuffixes))) {
                    complex_adjectives++;
                }
                break;
            case PosTag::ADV:
                adverbs++;
                if (sparse) sparse_adverbs++;
                break;
            case PosTag::PREP: prepositions++; break;
            case PosTag::CONJ: conjunctions++; break;
            case PosTag::PRON1: pron1++; break;
            case PosTag::PRON2: pron2++; break;
            default: break;
        }
    }
    auto pct_of = [](std::size_t part, double denom) {
        return denom > 0.0 ? 100.0 * static_cast<double>(part) / denom : 0.0;
    };
    v.abstract_noun_pct = pct_of(abstract_nouns, W);
    v.sparse_abstract_noun_pct = pct_of(sparse_abstract, static_cast<double>(abstract_nouns));
    v.verb_pct = pct_of(verbs, W);
    v.sparse_verb_pct = pct_of(sparse_verbs, static_cast<double>(verbs));
    v.adjective_pct = pct_of(adjectives, W);
    v.sparse_adjective_pct = pct_of(sparse_adjectives, static_cast<double>(adjectives));
    v.complex_adjective_pct = pct_of(complex_adjectives, static_cast<double>(adjectives));
    v.adverb_pct = pct_of(adverbs, W);
    v.sparse_adverb_pct = pct_of(sparse_adverbs, static_cast<double>(adverbs));
    v.preposition_pct = pct_of(prepositions, W);
    v.conjunction_pct = pct_of(conjunctions, W);
    v.syntax_variety = static_cast<double>(distinct_tags.size());
    v.first_person_pct = pct_of(pron1, W);
    v.second_person_pct = pct_of(pron2, W);

    std::size_t emo_pos = 0, emo_neg = 0, emo_other = 0;
    for (const auto& w : words_lower) {
        auto it = lexicons.emotion_lexicon.find(w);
        if (it == lexicons.emotion_lexicon.end()) continue;
        switch (it->second) {
            case EmotionCategory::positive: emo_pos++; break;
            case EmotionCategory::negative: emo_neg++; break;
            case EmotionCategory::other: emo_other++; break;
        }
    }
    v.emotion_word_pct = pct_of(emo_pos + emo_neg + emo_other, W);
    v.positive_emotion_pct = pct_of(emo_pos, W);
    v.negative_emotion_pct = pct_of(emo_neg, W);
    v.other_emotion_pct = pct_of(emo_other, W);

    auto ps = polarity_subjectivity(text, lexicons);
    v.polarity = ps.polarity;
    v.subjectivity = ps.subjectivity;
    v.vader_compound = vader_compound(text, lexicons);

    std::size_t total_syllables = 0, complex_words = 0;
    for (const auto& w : words_lower) {
        int syl = count_syllables(w);
        total_syllables += static_cast<std::size_t>(syl);
        if (syl >= 3) complex_words++;
    }
    v.avg_syllables_per_word = static_cast<double>(total_syllables) / W;
    v.complex_word_pct = pct_of(complex_words, W);
    v.flesch_reading_ease =
        206.835 - 1.015 * (W / S) - 84.6 * (static_cast<double>(total_syllables) / W);
    v.gunning_fog = 0.4 * (W / S + 100.0 * static_cast<double>(complex_words) / W);

    return v;
}

} // namespace revdetect::stylometry
