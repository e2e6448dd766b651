#ifndef REVDETECT_CLASSIFY_HPP
#define REVDETECT_CLASSIFY_HPP

#include "revdetect/corpus.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace revdetect::classify {

enum class FeatureKind : std::uint8_t { stylometric = 0, similarity = 1 };

std::string_view to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(std::string_view s);

struct TrainSet {
    std::vector<std::vector<double>> features; // rows, each feature_dim long
    std::vector<corpus::Level> labels;
    FeatureKind feature_kind = FeatureKind::stylometric;
    std::size_t feature_dim = 0;

    void validate() const; // shape, finiteness, >= 2 distinct labels
};

struct Hyper {
    int rounds = 200;
    double learning_rate = 0.1;
    int max_depth = 6;
    double l2 = 1.0;
    int min_leaf = 1;
};

enum class LearnerKind : std::uint8_t { boosted_trees = 0, logistic = 1 };

struct Prediction {
    corpus::Level level = corpus::Level::AI_BP;
    std::array<double, corpus::kLevelCount> probabilities{};
};

// Maps a predicted level to the binary positive class: a prediction of any
// fully/mostly AI level counts as "AI-generated".
inline bool predicted_positive(corpus::Level level) {
    return corpus::policy_positive(level);
}

// Five-class level classifier. The default learner is a gradient-boosted
// decision-tree ensemble with a softmax objective and exact greedy splits;
// a multinomial logistic-regression baseline is available as a cross-check.
// Training is fully deterministic in (data, hyper, seed).
class LevelModel {
public:
    static LevelModel train(const TrainSet& data, const Hyper& hyper, std::uint64_t seed,
                            LearnerKind learner = LearnerKind::boosted_trees);

    // probabilities sum to 1; argmax ties resolve to the canonically first
    // level (AI_BP < AI_EP < AI_HI < H_AI < H)
    Prediction predict(const std::vector<double>& features) const;

    void save(const std::filesystem::path& path) const;
    static LevelModel load(const std::filesystem::path& path);

    // identical inputs produce identical bytes
    std::string serialize() const;
    static LevelModel deserialize(const std::string& bytes);

    FeatureKind feature_kind() const { return feature_kind_; }
    std::size_t feature_dim() const { return feature_dim_; }
    LearnerKind learner() const { return learner_; }
    const Hyper& hyper() const { return hyper_; }
    std::uint64_t seed() const { return seed_; }
    const std::string& corpus_hash() const { return corpus_hash_; }

    struct TreeNode {
        std::int32_t feature = -1; // -1 marks a leaf
        double threshold = 0.0;    // goes left when x[feature] <= threshold
        std::int32_t left = -1;
        std::int32_t right = -1;
        double value = 0.0; // leaf weight (learning rate already applied)
    };
    struct Tree {
        std::vector<TreeNode> nodes;
        double eval(const std::vector<double>& x) const;
    };

private:
    FeatureKind feature_kind_ = FeatureKind::stylometric;
    LearnerKind learner_ = LearnerKind::boosted_trees;
    std::size_t feature_dim_ = 0;
    Hyper hyper_;
    std::uint64_t seed_ = 0;
    std::string corpus_hash_;

    // boosted_trees: rounds * kLevelCount trees, class-major per round
    std::vector<Tree> trees_;
    // logistic: kLevelCount x (feature_dim + 1) weights, bias last
    std::vector<double> weights_;
};

} // namespace revdetect::classify

#endif
