#include "revdetect/classify.hpp"

#include "revdetect/errors.hpp"
#include "revdetect/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>

namespace revdetect::classify {

std::string_view to_string(FeatureKind kind) {
    return kind == FeatureKind::stylometric ? "stylometric" : "similarity";
}

FeatureKind feature_kind_from_string(std::string_view s) {
    if (s == "stylometric") return FeatureKind::stylometric;
    if (s == "similarity") return FeatureKind::similarity;
    throw ValidationError("unknown feature kind: '" + std::string(s) + "'");
}

void TrainSet::validate() const {
    if (features.size() != labels.size()) {
        throw PreconditionError("train set: row count differs from label count");
    }
    if (features.empty()) {
        throw PreconditionError("train set: empty");
    }
    if (feature_dim == 0) {
        throw PreconditionError("train set: feature_dim is zero");
    }
    for (std::size_t i = 0; i < features.size(); i++) {
        if (features[i].size() != feature_dim) {
            throw PreconditionError("train set: row " + std::to_string(i) + " has " +
                                    std::to_string(features[i].size()) + " features, expected " +
                                    std::to_string(feature_dim));
        }
        for (double x : features[i]) {
            if (!std::isfinite(x)) {
                throw PreconditionError("train set: non-finite feature in row " +
                                        std::to_string(i));
            }
        }
    }
    std::set<corpus::Level> distinct(labels.begin(), labels.end());
    if (distinct.size() < 2) {
        throw PreconditionError("train set: need at least 2 distinct labels");
    }
}

namespace {

constexpr std::size_t K = corpus::kLevelCount;

void softmax_inplace(std::array<double, K>& scores) {
    double mx = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double& s : scores) {
        s = std::exp(s - mx);
        sum += s;
    }
    for (double& s : scores) {
        s /= sum;
    }
}

// deterministic content hash of the training inputs
std::string train_hash(const TrainSet& data, const Hyper& hyper, std::uint64_t seed) {
    std::string buf;
    buf.reserve(data.features.size() * data.feature_dim * 8 + 64);
    auto put_double = [&](double v) {
        char b[8];
        std::memcpy(b, &v, 8);
        buf.append(b, 8);
    };
    for (std::size_t i = 0; i < data.features.size(); i++) {
        for (double x : data.features[i]) put_double(x);
        buf += static_cast<char>(data.labels[i]);
    }
    put_double(hyper.learning_rate);
    put_double(hyper.l2);
    buf += std::to_string(hyper.rounds) + "/" + std::to_string(hyper.max_depth) + "/" +
           std::to_string(hyper.min_leaf) + "/" + std::to_string(seed);
    return util::sha256_hex(buf);
}

struct SplitCandidate {
    double gain = 0.0;
    std::int32_t feature = -1;
    double threshold = 0.0;
};

} // namespace

double LevelModel::Tree::eval(const std::vector<double>& x) const {
    std::int32_t node = 0;
    while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const TreeNode& n = nodes[static_cast<std::size_t>(node)];
        node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(node)].value;
}

namespace {

// Exact greedy regression tree on gradient/hessian pairs. Ties in gain keep
// the first candidate (lowest feature index, lowest threshold), so growth is
// deterministic.
class TreeBuilder {
public:
    TreeBuilder(const std::vector<std::vector<double>>& rows, const std::vector<double>& grad,
                const std::vector<double>& hess, const Hyper& hyper)
        : rows_(rows), grad_(grad), hess_(hess), hyper_(hyper) {}

    std::vector<LevelModel::TreeNode> build(std::vector<std::size_t> indices) {
        nodes_.clear();
        grow(std::move(indices), 0);
        return std::move(nodes_);
    }

private:
    std::int32_t grow(std::vector<std::size_t> indices, int depth) {
        double g_total = 0.0, h_total = 0.0;
        for (std::size_t i : indices) {
            g_total += grad_[i];
            h_total += hess_[i];
        }
        auto make_leaf = [&]() {
            LevelModel::TreeNode leaf;
            leaf.feature = -1;
            leaf.value = -hyper_.learning_rate * g_total / (h_total + hyper_.l2);
            nodes_.push_back(leaf);
            return static_cast<std::int32_t>(nodes_.size() - 1);
        };
        if (depth >= hyper_.max_depth ||
            indices.size() < 2 * static_cast<std::size_t>(hyper_.min_leaf)) {
            return make_leaf();
        }

        SplitCandidate best = find_split(indices, g_total, h_total);
        if (best.feature < 0) {
            return make_leaf();
        }

        std::vector<std::size_t> left, right;
        left.reserve(indices.size());
        right.reserve(indices.size());
        for (std::size_t i : indices) {
            if (rows_[i][static_cast<std::size_t>(best.feature)] <= best.threshold) {
                left.push_back(i);
            } else {
                right.push_back(i);
            }
        }
        indices.clear();
        indices.shrink_to_fit();

        std::int32_t self = static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();
        nodes_[static_cast<std::size_t>(self)].feature = best.feature;
        nodes_[static_cast<std::size_t>(self)].threshold = best.threshold;
        std::int32_t l = grow(std::move(left), depth + 1);
        std::int32_t r = grow(std::move(right), depth + 1);
        nodes_[static_cast<std::size_t>(self)].left = l;
        nodes_[static_cast<std::size_t>(self)].right = r;
        return self;
    }

    SplitCandidate find_split(const std::vector<std::size_t>& indices, double g_total,
                              double h_total) {
        constexpr double kMinGain = 1e-12;
        SplitCandidate best;
        double parent_score = g_total * g_total / (h_total + hyper_.l2);
        std::size_t dim = rows_.empty() ? 0 : rows_[0].size();

        std::vector<std::size_t> order(indices);
        for (std::size_t f = 0; f < dim; f++) {
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                double va = rows_[a][f], vb = rows_[b][f];
                return va < vb || (va == vb && a < b);
            });
            double g_left = 0.0, h_left = 0.0;
            for (std::size_t pos = 0; pos + 1 < order.size(); pos++) {
                g_left += grad_[order[pos]];
                h_left += hess_[order[pos]];
                double v = rows_[order[pos]][f];
                double v_next = rows_[order[pos + 1]][f];
                if (v == v_next) continue;
                std::size_t n_left = pos + 1;
                if (n_left < static_cast<std::size_t>(hyper_.min_leaf) ||
                    order.size() - n_left < static_cast<std::size_t>(hyper_.min_leaf)) {
                    continue;
                }
                double g_right = g_total - g_left;
                double h_right = h_total - h_left;
                double gain = 0.5 * (g_left * g_left / (h_left + hyper_.l2) +
                                     g_right * g_right / (h_right + hyper_.l2) - parent_score);
                if (gain > best.gain + kMinGain) {
                    best.gain = gain;
                    best.feature = static_cast<std::int32_t>(f);
                    best.threshold = v + (v_next - v) / 2.0;
                }
            }
        }
        return best;
    }

    const std::vector<std::vector<double>>& rows_;
    const std::vector<double>& grad_;
    const std::vector<double>& hess_;
    const Hyper& hyper_;
    std::vector<LevelModel::TreeNode> nodes_;
};

} // namespace

LevelModel LevelModel::train(const TrainSet& data, const Hyper& hyper, std::uint64_t seed,
                             LearnerKind learner) {
    data.validate();
    if (hyper.rounds < 1 || hyper.max_depth < 1 || hyper.learning_rate <= 0.0) {
        throw PreconditionError("invalid hyperparameters");
    }

    LevelModel model;
    model.feature_kind_ = data.feature_kind;
    model.feature_dim_ = data.feature_dim;
    model.hyper_ = hyper;
    model.seed_ = seed;
    model.learner_ = learner;
    model.corpus_hash_ = train_hash(data, hyper, seed);

    const std::size_t n = data.features.size();

    if (learner == LearnerKind::logistic) {
        // batch gradient descent on softmax cross-entropy, bias folded in
        const std::size_t d = data.feature_dim + 1;
        model.weights_.assign(K * d, 0.0);
        const int iterations = hyper.rounds;
        for (int it = 0; it < iterations; it++) {
            std::vector<double> grad(K * d, 0.0);
            for (std::size_t i = 0; i < n; i++) {
                std::array<double, K> scores{};
                for (std::size_t k = 0; k < K; k++) {
                    double s = model.weights_[k * d + data.feature_dim]; // bias
                    for (std::size_t f = 0; f < data.feature_dim; f++) {
                        s += model.weights_[k * d + f] * data.features[i][f];
                    }
                    scores[k] = s;
                }
                softmax_inplace(scores);
                for (std::size_t k = 0; k < K; k++) {
                    double err =
                        scores[k] - (static_cast<std::size_t>(data.labels[i]) == k ? 1.0 : 0.0);
                    for (std::size_t f = 0; f < data.feature_dim; f++) {
                        grad[k * d + f] += err * data.features[i][f];
                    }
                    grad[k * d + data.feature_dim] += err;
                }
            }
            double scale = hyper.learning_rate / static_cast<double>(n);
            for (std::size_t w = 0; w < model.weights_.size(); w++) {
                model.weights_[w] -= scale * grad[w];
            }
        }
        return model;
    }

    // boosted trees
    std::vector<std::array<double, K>> raw(n, std::array<double, K>{});
    std::vector<double> grad(n), hess(n);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);

    for (int round = 0; round < hyper.rounds; round++) {
        std::vector<std::array<double, K>> probs(n);
        for (std::size_t i = 0; i < n; i++) {
            probs[i] = raw[i];
            softmax_inplace(probs[i]);
        }
        for (std::size_t k = 0; k < K; k++) {
            for (std::size_t i = 0; i < n; i++) {
                double p = probs[i][k];
                double y = static_cast<std::size_t>(data.labels[i]) == k ? 1.0 : 0.0;
                grad[i] = p - y;
                hess[i] = std::max(p * (1.0 - p), 1e-16);
            }
            TreeBuilder builder(data.features, grad, hess, hyper);
            Tree tree;
            tree.nodes = builder.build(all);
            for (std::size_t i = 0; i < n; i++) {
                raw[i][k] += tree.eval(data.features[i]);
            }
            model.trees_.push_back(std::move(tree));
        }
    }
    return model;
}

Prediction LevelModel::predict(const std::vector<double>& features) const {
    if (features.size() != feature_dim_) {
        throw PreconditionError("predict: expected " + std::to_string(feature_dim_) +
                                " features, got " + std::to_string(features.size()));
    }
    for (double x : features) {
        if (!std::isfinite(x)) {
            throw PreconditionError("predict: non-finite feature");
        }
    }
    std::array<double, K> scores{};
    if (learner_ == LearnerKind::logistic) {
        const std::size_t d = feature_dim_ + 1;
        for (std::size_t k = 0; k < K; k++) {
            double s = weights_[k * d + feature_dim_];
            for (std::size_t f = 0; f < feature_dim_; f++) {
                s += weights_[k * d + f] * features[f];
            }
            scores[k] = s;
        }
    } else {
        for (std::size_t t = 0; t < trees_.size(); t++) {
            scores[t % K] += trees_[t].eval(features);
        }
    }
    softmax_inplace(scores);

    Prediction out;
    out.probabilities = scores;
    std::size_t best = 0;
    for (std::size_t k = 1; k < K; k++) {
        if (scores[k] > scores[best]) {
            best = k; // strict >, so ties keep the canonically first level
        }
    }
    out.level = static_cast<corpus::Level>(best);
    return out;
}

// ---------------------------------------------------------------------------
// Persistence: versioned container with a payload checksum in the header
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'R', 'V', 'L', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; i++) out += static_cast<char>((v >> (8 * i)) & 0xff);
}
void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; i++) out += static_cast<char>((v >> (8 * i)) & 0xff);
}
void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

class Reader {
public:
    explicit Reader(const std::string& data) : data_(data) {}
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; i++) v |= std::uint32_t(std::uint8_t(data_[pos_++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; i++) v |= std::uint64_t(std::uint8_t(data_[pos_++])) << (8 * i);
        return v;
    }
    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    void need(std::size_t n) {
        if (pos_ + n > data_.size()) {
            throw ValidationError("model file truncated");
        }
    }
    const std::string& data_;
    std::size_t pos_ = 0;
};

} // namespace

std::string LevelModel::serialize() const {
    std::string payload;
    put_u32(payload, static_cast<std::uint32_t>(trees_.size()));
    for (const Tree& t : trees_) {
        put_u32(payload, static_cast<std::uint32_t>(t.nodes.size()));
        for (const TreeNode& n : t.nodes) {
            put_u32(payload, static_cast<std::uint32_t>(n.feature));
            put_f64(payload, n.threshold);
            put_u32(payload, static_cast<std::uint32_t>(n.left));
            put_u32(payload, static_cast<std::uint32_t>(n.right));
            put_f64(payload, n.value);
        }
    }
    put_u32(payload, static_cast<std::uint32_t>(weights_.size()));
    for (double w : weights_) {
        put_f64(payload, w);
    }

    std::string out(kMagic, 4);
    put_u32(out, kVersion);
    out += static_cast<char>(feature_kind_);
    out += static_cast<char>(learner_);
    put_u32(out, static_cast<std::uint32_t>(feature_dim_));
    put_u32(out, static_cast<std::uint32_t>(hyper_.rounds));
    put_f64(out, hyper_.learning_rate);
    put_u32(out, static_cast<std::uint32_t>(hyper_.max_depth));
    put_f64(out, hyper_.l2);
    put_u32(out, static_cast<std::uint32_t>(hyper_.min_leaf));
    put_u64(out, seed_);
    put_u32(out, static_cast<std::uint32_t>(corpus_hash_.size()));
    out += corpus_hash_;
    out += util::sha256_hex(payload); // 64 hex chars
    out += payload;
    return out;
}

LevelModel LevelModel::deserialize(const std::string& bytes) {
    Reader r(bytes);
    if (r.bytes(4) != std::string(kMagic, 4)) {
        throw ValidationError("not a model file (bad magic)");
    }
    std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw ValidationError("unsupported model version " + std::to_string(version));
    }
    LevelModel m;
    m.feature_kind_ = static_cast<FeatureKind>(r.bytes(1)[0]);
    m.learner_ = static_cast<LearnerKind>(r.bytes(1)[0]);
    m.feature_dim_ = r.u32();
    m.hyper_.rounds = static_cast<int>(r.u32());
    m.hyper_.learning_rate = r.f64();
    m.hyper_.max_depth = static_cast<int>(r.u32());
    m.hyper_.l2 = r.f64();
    m.hyper_.min_leaf = static_cast<int>(r.u32());
    m.seed_ = r.u64();
    m.corpus_hash_ = r.bytes(r.u32());
    std::string checksum = r.bytes(64);
    std::string payload = r.bytes(r.remaining());
    if (util::sha256_hex(payload) != checksum) {
        throw ValidationError("model payload checksum mismatch (corrupt file)");
    }

    Reader p(payload);
    std::uint32_t n_trees = p.u32();
    m.trees_.resize(n_trees);
    for (std::uint32_t t = 0; t < n_trees; t++) {
        std::uint32_t n_nodes = p.u32();
        m.trees_[t].nodes.resize(n_nodes);
        for (std::uint32_t i = 0; i < n_nodes; i++) {
            TreeNode& n = m.trees_[t].nodes[i];
            n.feature = static_cast<std::int32_t>(p.u32());
            n.threshold = p.f64();
            n.left = static_cast<std::int32_t>(p.u32());
            n.right = static_cast<std::int32_t>(p.u32());
            n.value = p.f64();
        }
    }
    std::uint32_t n_weights = p.u32();
    m.weights_.resize(n_weights);
    for (std::uint32_t i = 0; i < n_weights; i++) {
        m.weights_[i] = p.f64();
    }
    return m;
}

void LevelModel::save(const std::filesystem::path& path) const {
    util::write_file_atomic(path, serialize());
}

LevelModel LevelModel::load(const std::filesystem::path& path) {
    return deserialize(util::read_file(path));
}

} // namespace revdetect::classify
