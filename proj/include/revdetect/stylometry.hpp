#ifndef REVDETECT_STYLOMETRY_HPP
#define REVDETECT_STYLOMETRY_HPP

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace revdetect::stylometry {

// ---------------------------------------------------------------------------
// Text primitives
// ---------------------------------------------------------------------------

struct Token {
    std::string text;
    bool is_punct = false;
};

// Word tokenizer. Rules:
//   - a word token is a maximal run of alphanumeric characters (bytes >= 0x80
//     count as letters, so UTF-8 words stay whole), where a single '-' or '\''
//     with alphanumerics on both sides joins the run ("state-of-the-art",
//     "don't" are one token each);
//   - every punctuation character becomes its own single-character token with
//     is_punct = true;
//   - whitespace separates and is dropped.
std::vector<Token> tokenize_words(std::string_view text);

// Sentence splitter. A sentence ends at '.', '!' or '?', except that a period
// does not terminate when (a) the word before it is on the abbreviation list,
// or (b) the period run is followed by a lowercase letter or digit ("e.g. the",
// decimals). Runs of terminal punctuation ("?!", "...") close one sentence.
// Text after the last terminator forms a final sentence; no empty sentences.
std::vector<std::string> split_sentences(std::string_view text,
                                         const std::unordered_set<std::string>& abbreviations);

// Splitter with the bundled default abbreviation list.
std::vector<std::string> split_sentences(std::string_view text);

// Syllable proxy. Rules, applied to the lowercased alphabetic characters:
//   1. vowels are a, e, i, o, u, y;
//   2. the count is the number of maximal vowel runs;
//   3. a final 'e' that ends its own run is silent (count - 1) unless the word
//      ends in "le" preceded by a consonant;
//   4. the result is at least 1. Words with no alphabetic characters count 1.
int count_syllables(std::string_view word);

enum class PosTag {
    NOUN,
    VERB,
    ADJ,
    ADV,
    PREP,
    CONJ,
    PRON1,
    PRON2,
    DET,
    PUNCT,
    OTHER,
};

std::string_view to_string(PosTag tag);

struct SentimentEntry {
    double valence = 0.0;      // VADER-style intensity, roughly [-4, 4]
    double polarity = 0.0;     // [-1, 1]
    double subjectivity = 0.0; // [0, 1]
};

enum class EmotionCategory { positive, negative, other };

struct LexiconBundle {
    std::unordered_set<std::string> stopwords;
    std::unordered_set<std::string> brown_top5000;
    std::unordered_map<std::string, PosTag> tag_lexicon;
    std::unordered_map<std::string, SentimentEntry> sentiment_lexicon;
    std::unordered_map<std::string, EmotionCategory> emotion_lexicon;
    std::unordered_set<std::string> subordinating_conjunctions;
    std::unordered_set<std::string> abbreviations;

    // Loads the bundle from a lexicon directory. When a `lexicons.sha256`
    // manifest is present every file must match its pinned digest.
    static LexiconBundle load(const std::filesystem::path& dir);
};

// Lexicon lookup with suffix fallbacks for out-of-vocabulary words.
// Deterministic; tokens must come from tokenize_words.
std::vector<PosTag> pos_tag(const std::vector<Token>& tokens, const LexiconBundle& lexicons);

// VADER-style compound sentiment in [-1, 1]. Lexicon valences are adjusted by
// booster words, negation within a three-word window, ALL-CAPS emphasis, the
// "but" pivot, and trailing '!'/'?' counts, then the sum s is normalized as
// s / sqrt(s^2 + 15).
double vader_compound(std::string_view text, const LexiconBundle& lexicons);

// Mean polarity/subjectivity of the sentiment-lexicon words present in the
// text; (0, 0) when nothing matches.
struct PolaritySubjectivity {
    double polarity = 0.0;
    double subjectivity = 0.0;
};
PolaritySubjectivity polarity_subjectivity(std::string_view text, const LexiconBundle& lexicons);

// ---------------------------------------------------------------------------
// Feature vector
// ---------------------------------------------------------------------------

inline constexpr std::size_t kStyloFeatureCount = 38;

// 38 writing-style features over one text. Percentages are stored in
// [0, 100]. Word denominators exclude punctuation tokens.
struct StyloVector {
    double avg_word_length = 0.0;
    double avg_sentence_length = 0.0;
    double ttr = 0.0;
    double rttr = 0.0;
    double maas = 0.0;
    double hapax_rate = 0.0;
    double bigram_uniqueness = 0.0;
    double trigram_uniqueness = 0.0;
    double punctuation_pct = 0.0;
    double stopword_pct = 0.0;
    double question_pct = 0.0;
    double exclamation_pct = 0.0;
    double abstract_noun_pct = 0.0;
    double sparse_abstract_noun_pct = 0.0;
    double verb_pct = 0.0;
    double sparse_verb_pct = 0.0;
    double adjective_pct = 0.0;
    double sparse_adjective_pct = 0.0;
    double complex_adjective_pct = 0.0;
    double adverb_pct = 0.0;
    double sparse_adverb_pct = 0.0;
    double preposition_pct = 0.0;
    double conjunction_pct = 0.0;
    double complex_sentence_pct = 0.0;
    double syntax_variety = 0.0;
    double emotion_word_pct = 0.0;
    double positive_emotion_pct = 0.0;
    double negative_emotion_pct = 0.0;
    double other_emotion_pct = 0.0;
    double first_person_pct = 0.0;
    double second_person_pct = 0.0;
    double polarity = 0.0;
    double subjectivity = 0.0;
    double vader_compound = 0.0;
    double avg_syllables_per_word = 0.0;
    double complex_word_pct = 0.0;
    double flesch_reading_ease = 0.0;
    double gunning_fog = 0.0;

    // True when the text had no word tokens; all fields are zero then.
    bool degenerate = false;

    std::array<double, kStyloFeatureCount> to_array() const;
};

// Canonical feature names, in to_array() order (CSV column order).
const std::array<std::string_view, kStyloFeatureCount>& stylo_feature_names();

StyloVector extract_stylo(std::string_view text, const LexiconBundle& lexicons);

} // namespace revdetect::stylometry

#endif
