#pragma once

#include "mlrs/dataset.hpp"
#include "mlrs/error.hpp"
#include "mlrs/matrix.hpp"
#include "mlrs/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace mlrs {

enum class ModelKind { tree, perceptron, gaussian_nb, logistic };

inline std::string_view to_string(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::tree: return "tree";
        case ModelKind::perceptron: return "perceptron";
        case ModelKind::gaussian_nb: return "gaussian_nb";
        case ModelKind::logistic: return "logistic";
    }
    return "unknown";
}

/// Index of the largest entry; ties resolve to the lowest index.
inline int argmax(std::span<const double> values) noexcept {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) {
            best = i;
        }
    }
    return static_cast<int>(best);
}

inline std::vector<double> softmax(std::span<const double> scores) {
    std::vector<double> out(scores.size());
    const double top = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp(scores[i] - top);
        total += out[i];
    }
    for (auto& p : out) {
        p /= total;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Model parameter types

/// Either an internal split (feature >= 0) or a leaf. Every node keeps the
/// weighted class frequencies of the rows that reached it.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int depth = 0;
    std::vector<double> freq;

    [[nodiscard]] bool is_leaf() const noexcept { return feature < 0; }
    [[nodiscard]] double weight() const noexcept { return std::accumulate(freq.begin(), freq.end(), 0.0); }

    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct TreeModel {
    int n_classes = 0;
    std::vector<TreeNode> nodes;  // root at index 0

    [[nodiscard]] const TreeNode& leaf_for(std::span<const double> x) const {
        std::size_t at = 0;
        while (!nodes[at].is_leaf()) {
            const auto& node = nodes[at];
            at = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
        }
        return nodes[at];
    }

    [[nodiscard]] std::vector<double> predict_proba(std::span<const double> x) const {
        const auto& leaf = leaf_for(x);
        const double w = leaf.weight();
        std::vector<double> p(leaf.freq);
        for (auto& v : p) {
            v /= w;
        }
        return p;
    }

    friend bool operator==(const TreeModel&, const TreeModel&) = default;
};

/// Shared layout for the linear models: weights is n_classes x n_features, row-major.
struct LinearParams {
    std::size_t n_classes = 0;
    std::size_t n_features = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    LinearParams() = default;
    LinearParams(std::size_t classes, std::size_t features)
        : n_classes(classes), n_features(features), weights(classes * features, 0.0), bias(classes, 0.0) {}

    [[nodiscard]] std::span<const double> class_weights(std::size_t c) const noexcept {
        return {weights.data() + c * n_features, n_features};
    }
    [[nodiscard]] std::span<double> class_weights(std::size_t c) noexcept { return {weights.data() + c * n_features, n_features}; }

    [[nodiscard]] std::vector<double> scores(std::span<const double> x) const {
        std::vector<double> s(n_classes);
        for (std::size_t c = 0; c < n_classes; ++c) {
            s[c] = dot(class_weights(c), x) + bias[c];
        }
        return s;
    }

    friend bool operator==(const LinearParams&, const LinearParams&) = default;
};

struct PerceptronModel {
    LinearParams params;

    [[nodiscard]] std::vector<double> predict_proba(std::span<const double> x) const { return softmax(params.scores(x)); }

    friend bool operator==(const PerceptronModel&, const PerceptronModel&) = default;
};

struct LogisticModel {
    LinearParams params;

    [[nodiscard]] std::vector<double> predict_proba(std::span<const double> x) const { return softmax(params.scores(x)); }

    friend bool operator==(const LogisticModel&, const LogisticModel&) = default;
};

struct GaussianNbModel {
    int n_classes = 0;
    std::size_t n_features = 0;
    std::vector<double> priors;
    Matrix means;      // n_classes x n_features
    Matrix variances;  // smoothed

    [[nodiscard]] std::vector<double> joint_log_likelihood(std::span<const double> x) const {
        std::vector<double> out(static_cast<std::size_t>(n_classes), -std::numeric_limits<double>::infinity());
        for (std::size_t c = 0; c < out.size(); ++c) {
            if (priors[c] <= 0.0) {
                continue;
            }
            double ll = std::log(priors[c]);
            for (std::size_t j = 0; j < n_features; ++j) {
                const double var = variances(c, j);
                const double diff = x[j] - means(c, j);
                ll -= 0.5 * std::log(2.0 * std::numbers::pi * var) + diff * diff / (2.0 * var);
            }
            out[c] = ll;
        }
        return out;
    }

    [[nodiscard]] std::vector<double> predict_proba(std::span<const double> x) const {
        const auto jll = joint_log_likelihood(x);
        const double top = *std::max_element(jll.begin(), jll.end());
        std::vector<double> p(jll.size());
        double total = 0.0;
        for (std::size_t c = 0; c < p.size(); ++c) {
            p[c] = std::isinf(jll[c]) ? 0.0 : std::exp(jll[c] - top);
            total += p[c];
        }
        for (auto& v : p) {
            v /= total;
        }
        return p;
    }

    friend bool operator==(const GaussianNbModel&, const GaussianNbModel&) = default;
};

/// A fitted base model. predict() is argmax of predict_proba() with ties to
/// the lowest class index.
class TrainedModel {
  public:
    using variant_type = std::variant<TreeModel, PerceptronModel, GaussianNbModel, LogisticModel>;

    TrainedModel() = default;
    explicit TrainedModel(variant_type model) : model_(std::move(model)) {}

    [[nodiscard]] ModelKind kind() const noexcept { return static_cast<ModelKind>(model_.index()); }

    [[nodiscard]] int n_classes() const noexcept {
        return std::visit(
            [](const auto& m) -> int {
                if constexpr (requires { m.params; }) {
                    return static_cast<int>(m.params.n_classes);
                } else {
                    return m.n_classes;
                }
            },
            model_);
    }

    [[nodiscard]] std::vector<double> predict_proba(std::span<const double> x) const {
        return std::visit([&](const auto& m) { return m.predict_proba(x); }, model_);
    }

    [[nodiscard]] int predict(std::span<const double> x) const { return argmax(predict_proba(x)); }

    [[nodiscard]] std::vector<int> predict(const Matrix& X) const {
        std::vector<int> out(X.rows());
        for (std::size_t r = 0; r < X.rows(); ++r) {
            out[r] = predict(X.row(r));
        }
        return out;
    }

    [[nodiscard]] const variant_type& variant() const noexcept { return model_; }

    template <typename T>
    [[nodiscard]] const T& as() const {
        return std::get<T>(model_);
    }

    friend bool operator==(const TrainedModel&, const TrainedModel&) = default;

  private:
    variant_type model_;
};

// ---------------------------------------------------------------------------
// CART

struct TreeOptions {
    std::optional<int> max_depth;          ///< unlimited when empty
    std::optional<int> feature_subsample;  ///< candidate features drawn per split
};

namespace detail {

class TreeBuilder {
  public:
    TreeBuilder(const Matrix& X, std::span<const int> y, std::span<const double> w, int n_classes, const TreeOptions& opts,
                std::uint64_t seed)
        : X_(X), y_(y), w_(w), L_(static_cast<std::size_t>(n_classes)), opts_(opts), rng_(seed) {}

    TreeModel build(std::vector<std::size_t> rows) {
        TreeModel model;
        model.n_classes = static_cast<int>(L_);
        grow(model, std::move(rows), 0);
        return model;
    }

  private:
    std::vector<double> class_weights(std::span<const std::size_t> rows) const {
        std::vector<double> freq(L_, 0.0);
        for (const auto r : rows) {
            freq[static_cast<std::size_t>(y_[r])] += w_[r];
        }
        return freq;
    }

    int grow(TreeModel& model, std::vector<std::size_t> rows, int depth) {
        const auto at = static_cast<int>(model.nodes.size());
        model.nodes.push_back(TreeNode{});
        auto freq = class_weights(rows);
        const auto positive = std::count_if(freq.begin(), freq.end(), [](double v) { return v > 0.0; });
        model.nodes[static_cast<std::size_t>(at)].depth = depth;
        model.nodes[static_cast<std::size_t>(at)].freq = freq;

        const bool depth_reached = opts_.max_depth && depth >= *opts_.max_depth;
        if (positive <= 1 || rows.size() < 2 || depth_reached) {
            return at;
        }
        const auto split = best_split(rows);
        if (!split) {
            return at;
        }
        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (const auto r : rows) {
            (X_(r, split->feature) <= split->threshold ? left : right).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        const int l = grow(model, std::move(left), depth + 1);
        const int r = grow(model, std::move(right), depth + 1);
        auto& node = model.nodes[static_cast<std::size_t>(at)];
        node.feature = static_cast<int>(split->feature);
        node.threshold = split->threshold;
        node.left = l;
        node.right = r;
        return at;
    }

    struct Split {
        std::size_t feature;
        double threshold;
    };

    std::optional<Split> best_split(std::span<const std::size_t> rows) {
        const std::size_t d = X_.cols();
        std::vector<std::size_t> features(d);
        std::iota(features.begin(), features.end(), std::size_t{0});
        std::size_t min_evaluated = d;
        if (opts_.feature_subsample) {
            rng_.shuffle(std::span(features));
            min_evaluated = static_cast<std::size_t>(std::clamp(*opts_.feature_subsample, 1, static_cast<int>(d)));
        }

        const auto total = class_weights(rows);
        std::optional<Split> best;
        double best_score = -std::numeric_limits<double>::infinity();
        std::vector<std::size_t> order(rows.begin(), rows.end());
        std::vector<double> left(L_);
        std::size_t evaluated = 0;
        for (const auto f : features) {
            if (evaluated >= min_evaluated && best) {
                break;
            }
            ++evaluated;
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                const double va = X_(a, f);
                const double vb = X_(b, f);
                return va < vb || (va == vb && a < b);
            });
            std::fill(left.begin(), left.end(), 0.0);
            double w_left = 0.0;
            const double w_total = std::accumulate(total.begin(), total.end(), 0.0);
            for (std::size_t k = 0; k + 1 < order.size(); ++k) {
                const auto r = order[k];
                left[static_cast<std::size_t>(y_[r])] += w_[r];
                w_left += w_[r];
                const double v = X_(r, f);
                const double next = X_(order[k + 1], f);
                if (!(v < next)) {
                    continue;
                }
                // Minimising weighted Gini of the children == maximising sum_c n_c^2 / n per child.
                const double w_right = w_total - w_left;
                double sq_left = 0.0;
                double sq_right = 0.0;
                for (std::size_t c = 0; c < L_; ++c) {
                    sq_left += left[c] * left[c];
                    const double rc = total[c] - left[c];
                    sq_right += rc * rc;
                }
                const double score = sq_left / w_left + sq_right / w_right;
                if (score > best_score) {
                    best_score = score;
                    double threshold = v + (next - v) / 2.0;
                    if (!(threshold < next)) {
                        threshold = v;
                    }
                    best = Split{f, threshold};
                }
            }
        }
        return best;
    }

    const Matrix& X_;
    std::span<const int> y_;
    std::span<const double> w_;
    std::size_t L_;
    TreeOptions opts_;
    Rng rng_;
};

}  // namespace detail

/// Weighted CART with Gini splits at midpoints between distinct values.
/// Rows with zero weight are ignored entirely.
inline TrainedModel train_tree(const Matrix& X, std::span<const int> y, int n_classes, std::span<const double> weights,
                               const TreeOptions& opts = {}, std::uint64_t seed = 0) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < X.rows(); ++r) {
        if (weights[r] < 0.0 || !std::isfinite(weights[r])) {
            throw error(errc::invalid_argument, "tree sample weights must be finite and nonnegative");
        }
        if (weights[r] > 0.0) {
            rows.push_back(r);
        }
    }
    if (rows.empty()) {
        throw error(errc::all_zero_weights, "every sample weight is zero");
    }
    detail::TreeBuilder builder(X, y, weights, n_classes, opts, seed);
    return TrainedModel(builder.build(std::move(rows)));
}

inline TrainedModel train_tree(const Dataset& ds, const TreeOptions& opts = {}, std::uint64_t seed = 0) {
    const std::vector<double> ones(ds.size(), 1.0);
    return train_tree(ds.features, ds.labels, ds.n_classes, ones, opts, seed);
}

// ---------------------------------------------------------------------------
// Perceptron

struct PerceptronOptions {
    int epochs = 100;
    double lr = 1.0;
};

/// One-vs-rest mistake-driven perceptrons with a seeded per-epoch row
/// shuffle. Optional weights scale each row's update by w_j * n / sum(w).
inline TrainedModel train_perceptron(const Matrix& X, std::span<const int> y, int n_classes, const PerceptronOptions& opts = {},
                                     std::uint64_t seed = 0, std::span<const double> weights = {}) {
    const std::size_t n = X.rows();
    const auto L = static_cast<std::size_t>(n_classes);
    LinearParams params(L, X.cols());
    std::vector<double> scale(n, 1.0);
    if (!weights.empty()) {
        const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        if (!(total > 0.0)) {
            throw error(errc::all_zero_weights, "every sample weight is zero");
        }
        for (std::size_t r = 0; r < n; ++r) {
            scale[r] = weights[r] * static_cast<double>(n) / total;
        }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, "perceptron"));
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        rng.shuffle(std::span(order));
        bool mistake = false;
        for (const auto r : order) {
            if (scale[r] == 0.0) {
                continue;
            }
            const auto x = X.row(r);
            for (std::size_t c = 0; c < L; ++c) {
                const double target = y[r] == static_cast<int>(c) ? 1.0 : -1.0;
                const double s = dot(params.class_weights(c), x) + params.bias[c];
                if (target * s <= 0.0) {
                    mistake = true;
                    const double step = opts.lr * scale[r] * target;
                    auto wc = params.class_weights(c);
                    for (std::size_t j = 0; j < wc.size(); ++j) {
                        wc[j] += step * x[j];
                    }
                    params.bias[c] += step;
                }
            }
        }
        if (!mistake) {
            break;
        }
    }
    return TrainedModel(PerceptronModel{std::move(params)});
}

// ---------------------------------------------------------------------------
// Gaussian naive Bayes

/// Per-class Gaussians with variance smoothing 1e-9 * (largest feature
/// variance). Classes without rows get prior 0 and are never predicted.
inline TrainedModel train_gaussian_nb(const Matrix& X, std::span<const int> y, int n_classes) {
    const std::size_t n = X.rows();
    const std::size_t d = X.cols();
    const auto L = static_cast<std::size_t>(n_classes);
    GaussianNbModel model;
    model.n_classes = n_classes;
    model.n_features = d;
    model.priors.assign(L, 0.0);
    model.means = Matrix(L, d);
    model.variances = Matrix(L, d);

    double max_var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            mean += X(r, j);
        }
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            ss += (X(r, j) - mean) * (X(r, j) - mean);
        }
        max_var = std::max(max_var, ss / static_cast<double>(n));
    }
    const double epsilon = max_var > 0.0 ? 1e-9 * max_var : 1e-9;

    std::vector<double> counts(L, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const auto c = static_cast<std::size_t>(y[r]);
        counts[c] += 1.0;
        for (std::size_t j = 0; j < d; ++j) {
            model.means(c, j) += X(r, j);
        }
    }
    for (std::size_t c = 0; c < L; ++c) {
        model.priors[c] = counts[c] / static_cast<double>(n);
        for (std::size_t j = 0; j < d; ++j) {
            model.means(c, j) = counts[c] > 0.0 ? model.means(c, j) / counts[c] : 0.0;
        }
    }
    for (std::size_t r = 0; r < n; ++r) {
        const auto c = static_cast<std::size_t>(y[r]);
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = X(r, j) - model.means(c, j);
            model.variances(c, j) += diff * diff;
        }
    }
    for (std::size_t c = 0; c < L; ++c) {
        for (std::size_t j = 0; j < d; ++j) {
            model.variances(c, j) = (counts[c] > 0.0 ? model.variances(c, j) / counts[c] : 0.0) + epsilon;
        }
    }
    return TrainedModel(std::move(model));
}

// ---------------------------------------------------------------------------
// Multinomial logistic regression

/// Penalty on a logistic model's input gradients. Returns the penalty value;
/// when grad is non-null, adds d(penalty)/d(params) into it.
using GradientPenalty = std::function<double(const LinearParams& params, const Matrix& X, LinearParams* grad)>;

struct LogisticOptions {
    int epochs = 200;
    double lr = 0.01;
    double lambda = 0.0;
    GradientPenalty penalty;  ///< ignored when empty or lambda == 0
    double init_scale = 0.0;  ///< stddev of the seeded weight initialisation
};

/// Mean cross-entropy + lambda * penalty. Fills grad (same shape) when non-null.
inline double logistic_objective(const LinearParams& params, const Matrix& X, std::span<const int> y, double lambda,
                                 const GradientPenalty& penalty, LinearParams* grad) {
    const std::size_t n = X.rows();
    const std::size_t L = params.n_classes;
    const std::size_t d = params.n_features;
    if (grad != nullptr) {
        *grad = LinearParams(L, d);
    }
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto x = X.row(r);
        const auto s = params.scores(x);
        const double top = *std::max_element(s.begin(), s.end());
        double total = 0.0;
        for (const double v : s) {
            total += std::exp(v - top);
        }
        const double log_norm = top + std::log(total);
        const auto yr = static_cast<std::size_t>(y[r]);
        loss += (log_norm - s[yr]) * inv_n;
        if (grad != nullptr) {
            for (std::size_t c = 0; c < L; ++c) {
                const double delta = (std::exp(s[c] - log_norm) - (c == yr ? 1.0 : 0.0)) * inv_n;
                auto gc = grad->class_weights(c);
                for (std::size_t j = 0; j < d; ++j) {
                    gc[j] += delta * x[j];
                }
                grad->bias[c] += delta;
            }
        }
    }
    if (lambda != 0.0 && penalty) {
        if (grad != nullptr) {
            LinearParams pgrad(L, d);
            loss += lambda * penalty(params, X, &pgrad);
            for (std::size_t i = 0; i < pgrad.weights.size(); ++i) {
                grad->weights[i] += lambda * pgrad.weights[i];
            }
            for (std::size_t c = 0; c < L; ++c) {
                grad->bias[c] += lambda * pgrad.bias[c];
            }
        } else {
            loss += lambda * penalty(params, X, nullptr);
        }
    }
    return loss;
}

/// Full-batch gradient descent. loss_history, when given, receives the
/// objective before every update.
inline TrainedModel train_logistic(const Matrix& X, std::span<const int> y, int n_classes, const LogisticOptions& opts = {},
                                   std::uint64_t seed = 0, std::vector<double>* loss_history = nullptr) {
    if (opts.lambda < 0.0) {
        throw error(errc::invalid_argument, "lambda must be >= 0");
    }
    LinearParams params(static_cast<std::size_t>(n_classes), X.cols());
    if (opts.init_scale > 0.0) {
        Rng rng(derive_seed(seed, "logistic-init"));
        for (auto& w : params.weights) {
            w = opts.init_scale * rng.normal();
        }
    }
    LinearParams grad;
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        const double loss = logistic_objective(params, X, y, opts.lambda, opts.penalty, &grad);
        if (loss_history != nullptr) {
            loss_history->push_back(loss);
        }
        for (std::size_t i = 0; i < params.weights.size(); ++i) {
            params.weights[i] -= opts.lr * grad.weights[i];
        }
        for (std::size_t c = 0; c < params.n_classes; ++c) {
            params.bias[c] -= opts.lr * grad.bias[c];
        }
    }
    return TrainedModel(LogisticModel{std::move(params)});
}

// ---------------------------------------------------------------------------
// Nearest neighbours

struct Neighbor {
    std::size_t index = 0;
    double distance = 0.0;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Ascending Euclidean distance, ties to the lower row index.
using NeighborList = std::vector<Neighbor>;

/// Exhaustive k-NN over the rows of reference. `exclude` removes one row
/// from the candidates (leave-one-out queries).
inline NeighborList knn_neighbors(const Matrix& reference, std::span<const double> query, std::size_t k,
                                  std::optional<std::size_t> exclude = std::nullopt) {
    const std::size_t available = reference.rows() - (exclude && *exclude < reference.rows() ? 1 : 0);
    if (k > available) {
        throw error(errc::k_too_large, "k = " + std::to_string(k) + " exceeds " + std::to_string(available) + " reference rows");
    }
    std::vector<std::pair<double, std::size_t>> all;
    all.reserve(reference.rows());
    for (std::size_t r = 0; r < reference.rows(); ++r) {
        if (exclude && r == *exclude) {
            continue;
        }
        all.emplace_back(squared_distance(reference.row(r), query), r);
    }
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
    NeighborList out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back({all[i].second, std::sqrt(all[i].first)});
    }
    return out;
}

inline NeighborList knn_neighbors(const Dataset& reference, std::span<const double> query, std::size_t k) {
    return knn_neighbors(reference.features, query, k);
}

}  // namespace mlrs
