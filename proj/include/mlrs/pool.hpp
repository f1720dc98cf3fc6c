#pragma once

// The seven pool-generation schemes: bagging (perceptron / tree), SAMME
// boosting (perceptron / stump), random forest, forest of local trees and
// locally independent training.

#include "mlrs/dataset.hpp"
#include "mlrs/error.hpp"
#include "mlrs/learners.hpp"
#include "mlrs/parallel.hpp"
#include "mlrs/rng.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mlrs {

enum class PoolScheme { BP, BDT, BSP, BSDT, RF, FLT, LIT };

inline constexpr std::array<PoolScheme, 7> all_pool_schemes{PoolScheme::BP,  PoolScheme::BDT, PoolScheme::BSP, PoolScheme::BSDT,
                                                            PoolScheme::RF,  PoolScheme::FLT, PoolScheme::LIT};

inline std::string_view to_string(PoolScheme scheme) noexcept {
    constexpr std::array<std::string_view, 7> names{"BP", "BDT", "BSP", "BSDT", "RF", "FLT", "LIT"};
    return names[static_cast<std::size_t>(scheme)];
}

inline PoolScheme parse_pool_scheme(std::string_view text) {
    for (const auto s : all_pool_schemes) {
        if (to_string(s) == text) {
            return s;
        }
    }
    throw error(errc::invalid_argument, "unknown pool scheme '" + std::string(text) + "'");
}

struct PoolOptions {
    std::size_t size = 100;
    PerceptronOptions perceptron;
    int lit_epochs = 200;
    double lit_lr = 0.01;
    double lit_lambda = 1.0;
    std::size_t flt_bandwidth_sample = 200;
    std::size_t workers = 1;  ///< parallelism for bagging-family schemes
};

struct Pool {
    PoolScheme scheme = PoolScheme::BP;
    std::vector<TrainedModel> models;
    std::vector<double> boost_weights;  ///< SAMME alphas; empty for non-boosted pools
    std::uint64_t seed = 0;
    std::vector<std::vector<std::size_t>> bootstrap_rows;  ///< per-model bootstrap sample (bagging, RF)

    [[nodiscard]] std::size_t size() const noexcept { return models.size(); }
    [[nodiscard]] int n_classes() const noexcept { return models.empty() ? 0 : models.front().n_classes(); }

    /// SAMME aggregate: argmax_c sum_t alpha_t [model_t predicts c].
    [[nodiscard]] int boosted_predict(std::span<const double> x) const {
        std::vector<double> votes(static_cast<std::size_t>(n_classes()), 0.0);
        for (std::size_t t = 0; t < models.size(); ++t) {
            votes[static_cast<std::size_t>(models[t].predict(x))] += boost_weights.empty() ? 1.0 : boost_weights[t];
        }
        return argmax(votes);
    }

    friend bool operator==(const Pool&, const Pool&) = default;
};

// ---------------------------------------------------------------------------
// Boosting

enum class BoostBase { perceptron, stump };

inline double samme_alpha(double error, int n_classes) {
    return std::log((1.0 - error) / error) + std::log(static_cast<double>(n_classes) - 1.0);
}

/// Discrete multiclass SAMME. Stops early when a round is perfect (kept) or
/// no better than chance (discarded). Fewer than two models is degenerate.
inline Pool adaboost_samme(BoostBase base, const Dataset& train, std::size_t rounds, std::uint64_t seed,
                           const PerceptronOptions& perceptron = {}) {
    if (rounds < 2) {
        throw error(errc::invalid_argument, "boosting needs at least two rounds");
    }
    const std::size_t n = train.size();
    const int L = train.n_classes;
    Pool pool;
    pool.scheme = base == BoostBase::perceptron ? PoolScheme::BSP : PoolScheme::BSDT;
    pool.seed = seed;
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    const double chance_error = 1.0 - 1.0 / static_cast<double>(L);
    for (std::size_t t = 0; t < rounds; ++t) {
        const auto round_seed = derive_seed(seed, "samme", t);
        TrainedModel model = base == BoostBase::perceptron
                                 ? train_perceptron(train.features, train.labels, L, perceptron, round_seed, w)
                                 : train_tree(train.features, train.labels, L, w, TreeOptions{1, std::nullopt}, round_seed);
        const auto pred = model.predict(train.features);
        double err = 0.0;
        double total = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            total += w[r];
            if (pred[r] != train.labels[r]) {
                err += w[r];
            }
        }
        err /= total;
        if (err <= 0.0) {
            pool.models.push_back(std::move(model));
            pool.boost_weights.push_back(samme_alpha(1e-10, L));
            break;
        }
        if (err >= chance_error) {
            break;
        }
        const double alpha = samme_alpha(err, L);
        double norm = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            if (pred[r] != train.labels[r]) {
                w[r] *= std::exp(alpha);
            }
            norm += w[r];
        }
        for (auto& v : w) {
            v /= norm;
        }
        pool.models.push_back(std::move(model));
        pool.boost_weights.push_back(alpha);
    }
    if (pool.models.size() < 2) {
        throw error(errc::degenerate_pool, "boosting produced " + std::to_string(pool.models.size()) + " model(s) on '" +
                                               train.id + "'");
    }
    return pool;
}

// ---------------------------------------------------------------------------
// Forest of local trees

/// Gaussian kernel weights exp(-|x_j - x_anchor|^2 / (2 sigma^2)).
inline std::vector<double> flt_weights(const Matrix& X, std::size_t anchor, double sigma) {
    if (!(sigma > 0.0)) {
        throw error(errc::invalid_argument, "sigma must be > 0");
    }
    std::vector<double> w(X.rows());
    const auto a = X.row(anchor);
    for (std::size_t r = 0; r < X.rows(); ++r) {
        w[r] = std::exp(-squared_distance(X.row(r), a) / (2.0 * sigma * sigma));
    }
    return w;
}

/// Median pairwise Euclidean distance over a seeded subsample of at most
/// max_rows rows; 1 when every sampled pair coincides.
inline double flt_bandwidth(const Matrix& X, std::size_t max_rows, std::uint64_t seed) {
    std::vector<std::size_t> rows(X.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    if (rows.size() > max_rows) {
        Rng rng(derive_seed(seed, "flt-bandwidth"));
        rng.shuffle(std::span(rows));
        rows.resize(max_rows);
    }
    std::vector<double> dists;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            dists.push_back(std::sqrt(squared_distance(X.row(rows[i]), X.row(rows[j]))));
        }
    }
    if (dists.empty()) {
        return 1.0;
    }
    const auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
    std::nth_element(dists.begin(), mid, dists.end());
    double median = *mid;
    if (dists.size() % 2 == 0) {
        median = (median + *std::max_element(dists.begin(), mid)) / 2.0;
    }
    return median > 0.0 ? median : 1.0;
}

// ---------------------------------------------------------------------------
// Locally independent training

/// Input gradient of the predicted-class logit of a linear model: the weight
/// row of the argmax class.
inline std::span<const double> input_gradient(const LinearParams& params, std::span<const double> x) {
    const auto s = params.scores(x);
    return params.class_weights(static_cast<std::size_t>(argmax(s)));
}

inline double squared_cosine(std::span<const double> a, std::span<const double> b) {
    const double na = dot(a, a);
    const double nb = dot(b, b);
    if (na <= 0.0 || nb <= 0.0) {
        return 0.0;
    }
    const double ab = dot(a, b);
    return ab * ab / (na * nb);
}

/// mean_j cos^2(g_a(x_j), g_b(x_j)).
inline double lit_pair_penalty(const LinearParams& a, const LinearParams& b, const Matrix& X) {
    double total = 0.0;
    for (std::size_t r = 0; r < X.rows(); ++r) {
        total += squared_cosine(input_gradient(a, X.row(r)), input_gradient(b, X.row(r)));
    }
    return total / static_cast<double>(X.rows());
}

/// Penalty against frozen models: sum over frozen of mean_j cos^2. The
/// argmax class selection is held fixed when differentiating.
inline GradientPenalty lit_penalty(const std::vector<const LinearParams*>& frozen, const Matrix& X) {
    // Frozen gradients never change while the current model trains.
    std::vector<Matrix> frozen_grads;
    frozen_grads.reserve(frozen.size());
    for (const auto* params : frozen) {
        Matrix g(X.rows(), X.cols());
        for (std::size_t r = 0; r < X.rows(); ++r) {
            const auto gr = input_gradient(*params, X.row(r));
            std::copy(gr.begin(), gr.end(), g.row(r).begin());
        }
        frozen_grads.push_back(std::move(g));
    }
    return [frozen_grads = std::move(frozen_grads)](const LinearParams& params, const Matrix& data, LinearParams* grad) {
        const double inv_n = 1.0 / static_cast<double>(data.rows());
        double value = 0.0;
        for (std::size_t r = 0; r < data.rows(); ++r) {
            const auto s = params.scores(data.row(r));
            const auto c = static_cast<std::size_t>(argmax(s));
            const auto a = params.class_weights(c);
            const double na2 = dot(a, a);
            if (na2 <= 0.0) {
                continue;
            }
            const double na = std::sqrt(na2);
            for (const auto& g : frozen_grads) {
                const auto b = g.row(r);
                const double nb = std::sqrt(dot(b, b));
                if (nb <= 0.0) {
                    continue;
                }
                const double cos = dot(a, b) / (na * nb);
                value += cos * cos * inv_n;
                if (grad != nullptr) {
                    auto gc = grad->class_weights(c);
                    const double k = 2.0 * cos * inv_n;
                    for (std::size_t j = 0; j < a.size(); ++j) {
                        gc[j] += k * (b[j] / (na * nb) - cos * a[j] / na2);
                    }
                }
            }
        }
        return value;
    };
}

/// Logistic models trained one after another; model m pays lambda times its
/// input-gradient alignment with every earlier (frozen) model.
inline Pool lit_train_pool(const Dataset& train, std::size_t size, double lambda, std::uint64_t seed, int epochs = 200,
                           double lr = 0.01) {
    if (size < 2) {
        throw error(errc::invalid_argument, "pool size must be >= 2");
    }
    Pool pool;
    pool.scheme = PoolScheme::LIT;
    pool.seed = seed;
    std::vector<const LinearParams*> frozen;
    pool.models.reserve(size);
    for (std::size_t m = 0; m < size; ++m) {
        LogisticOptions opts;
        opts.epochs = epochs;
        opts.lr = lr;
        opts.lambda = lambda;
        if (lambda != 0.0 && !frozen.empty()) {
            opts.penalty = lit_penalty(frozen, train.features);
        }
        pool.models.push_back(train_logistic(train.features, train.labels, train.n_classes, opts, derive_seed(seed, "lit", m)));
        frozen.clear();
        for (const auto& model : pool.models) {
            frozen.push_back(&model.as<LogisticModel>().params);
        }
    }
    return pool;
}

// ---------------------------------------------------------------------------
// Dispatch

namespace detail {

inline std::vector<std::size_t> bootstrap(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) {
        r = static_cast<std::size_t>(rng.below(n));
    }
    return rows;
}

}  // namespace detail

/// Candidate features per split for RF: ceil(sqrt(d)).
inline int rf_subsample_size(std::size_t d) { return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d)))); }

inline Pool generate_pool(PoolScheme scheme, const Dataset& train, const PoolOptions& opts, std::uint64_t seed) {
    if (opts.size < 2) {
        throw error(errc::invalid_argument, "pool size must be >= 2");
    }
    const std::size_t n = train.size();
    const int L = train.n_classes;
    switch (scheme) {
        case PoolScheme::BSP:
            return adaboost_samme(BoostBase::perceptron, train, opts.size, seed, opts.perceptron);
        case PoolScheme::BSDT:
            return adaboost_samme(BoostBase::stump, train, opts.size, seed, opts.perceptron);
        case PoolScheme::LIT:
            return lit_train_pool(train, opts.size, opts.lit_lambda, seed, opts.lit_epochs, opts.lit_lr);
        default:
            break;
    }

    Pool pool;
    pool.scheme = scheme;
    pool.seed = seed;
    pool.models.resize(opts.size);
    const bool bagged = scheme != PoolScheme::FLT;
    if (bagged) {
        pool.bootstrap_rows.resize(opts.size);
    }
    const double sigma = scheme == PoolScheme::FLT ? flt_bandwidth(train.features, opts.flt_bandwidth_sample, seed) : 1.0;
    const auto rf_features = rf_subsample_size(train.dim());

    parallel_for(opts.size, opts.workers, [&](std::size_t m) {
        const auto model_seed = derive_seed(seed, to_string(scheme), m);
        if (scheme == PoolScheme::FLT) {
            Rng rng(derive_seed(model_seed, "anchor"));
            const auto anchor = static_cast<std::size_t>(rng.below(n));
            const auto w = flt_weights(train.features, anchor, sigma);
            pool.models[m] = train_tree(train.features, train.labels, L, w, {}, model_seed);
            return;
        }
        auto rows = detail::bootstrap(n, derive_seed(model_seed, "bootstrap"));
        const Dataset sample = train.subset(rows);
        switch (scheme) {
            case PoolScheme::BP:
                pool.models[m] = train_perceptron(sample.features, sample.labels, L, opts.perceptron, model_seed);
                break;
            case PoolScheme::BDT:
                pool.models[m] = train_tree(sample, {}, model_seed);
                break;
            case PoolScheme::RF:
                pool.models[m] = train_tree(sample, TreeOptions{std::nullopt, rf_features}, model_seed);
                break;
            default:
                break;
        }
        pool.bootstrap_rows[m] = std::move(rows);
    });
    return pool;
}

// ---------------------------------------------------------------------------
// Output profiles

/// Hard predictions of every pool member on one instance.
using OutputProfile = std::vector<int>;

inline std::vector<OutputProfile> output_profiles(const Pool& pool, const Dataset& ds) {
    if (pool.n_classes() != ds.n_classes) {
        throw error(errc::invalid_argument, "pool and dataset disagree on the number of classes");
    }
    std::vector<OutputProfile> out(ds.size(), OutputProfile(pool.size()));
    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (std::size_t m = 0; m < pool.size(); ++m) {
            out[r][m] = pool.models[m].predict(ds.features.row(r));
        }
    }
    return out;
}

/// Number of positions where two profiles agree.
inline std::size_t profile_similarity(std::span<const int> a, std::span<const int> b) noexcept {
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        same += a[i] == b[i] ? 1 : 0;
    }
    return same;
}

}  // namespace mlrs
