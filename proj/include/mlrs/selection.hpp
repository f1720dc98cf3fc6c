#pragma once

// Dynamic selection over a pool: region of competence on the DSEL set,
// local-competence tables, and the seven selection / voting rules.
//
// Tie rules everywhere: competence ties go to the lower model index, vote
// ties to the lower class index.

#include "mlrs/dataset.hpp"
#include "mlrs/error.hpp"
#include "mlrs/learners.hpp"
#include "mlrs/pool.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mlrs {

enum class DsMethod { OLA, MLA, KNORA_E, KNORA_U, META_DES, DES_MI, DES_P };

inline constexpr std::array<DsMethod, 7> all_ds_methods{DsMethod::OLA,      DsMethod::MLA,    DsMethod::KNORA_E, DsMethod::KNORA_U,
                                                        DsMethod::META_DES, DsMethod::DES_MI, DsMethod::DES_P};

inline std::string_view to_string(DsMethod method) noexcept {
    constexpr std::array<std::string_view, 7> names{"OLA", "MLA", "KNORA-E", "KNORA-U", "META-DES", "DES-MI", "DES-P"};
    return names[static_cast<std::size_t>(method)];
}

/// Accepts the display names and their underscore spellings.
inline DsMethod parse_ds_method(std::string_view text) {
    std::string normalized(text);
    std::replace(normalized.begin(), normalized.end(), '_', '-');
    for (const auto m : all_ds_methods) {
        if (to_string(m) == normalized) {
            return m;
        }
    }
    throw error(errc::invalid_argument, "unknown DS method '" + std::string(text) + "'");
}

struct DsOptions {
    std::size_t k = 7;    ///< region-of-competence size
    std::size_t kp = 5;   ///< output profiles used by META-DES
    double des_mi_p = 0.4;
    double metades_threshold = 0.5;
};

// ---------------------------------------------------------------------------
// Pool outputs

/// Hard predictions (and optionally posteriors) of every pool member on a set of rows.
struct PoolOutputs {
    std::size_t n_rows = 0;
    std::size_t n_models = 0;
    std::size_t n_classes = 0;
    std::vector<int> predictions;  // n_rows x n_models
    std::vector<double> proba;     // n_rows x n_models x n_classes, empty if not requested

    [[nodiscard]] int prediction(std::size_t row, std::size_t model) const noexcept { return predictions[row * n_models + model]; }
    [[nodiscard]] std::span<const int> profile(std::size_t row) const noexcept {
        return {predictions.data() + row * n_models, n_models};
    }
    [[nodiscard]] std::span<const double> posterior(std::size_t row, std::size_t model) const noexcept {
        return {proba.data() + (row * n_models + model) * n_classes, n_classes};
    }
};

inline PoolOutputs compute_pool_outputs(const Pool& pool, const Matrix& X, bool with_proba) {
    PoolOutputs out;
    out.n_rows = X.rows();
    out.n_models = pool.size();
    out.n_classes = static_cast<std::size_t>(pool.n_classes());
    out.predictions.resize(out.n_rows * out.n_models);
    if (with_proba) {
        out.proba.resize(out.n_rows * out.n_models * out.n_classes);
    }
    for (std::size_t r = 0; r < out.n_rows; ++r) {
        for (std::size_t m = 0; m < out.n_models; ++m) {
            const auto p = pool.models[m].predict_proba(X.row(r));
            out.predictions[r * out.n_models + m] = argmax(p);
            if (with_proba) {
                std::copy(p.begin(), p.end(), out.proba.begin() + static_cast<std::ptrdiff_t>((r * out.n_models + m) * out.n_classes));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Region of competence and local competence tables

struct RegionOfCompetence {
    NeighborList neighbors;
    std::vector<int> labels;
};

inline RegionOfCompetence region_of_competence(const Dataset& dsel, std::span<const double> x, std::size_t k,
                                               std::optional<std::size_t> exclude = std::nullopt) {
    const std::size_t available = dsel.size() - (exclude ? 1 : 0);
    if (available < k) {
        throw error(errc::dsel_too_small,
                    "DSEL has " + std::to_string(available) + " candidate rows, region of competence needs " + std::to_string(k));
    }
    RegionOfCompetence roc;
    roc.neighbors = knn_neighbors(dsel.features, x, k, exclude);
    roc.labels.reserve(k);
    for (const auto& nb : roc.neighbors) {
        roc.labels.push_back(dsel.labels[nb.index]);
    }
    return roc;
}

/// Correctness of every pool member on every neighbour of one region of
/// competence, in neighbour order (nearest first).
struct LocalCompetence {
    std::size_t n_models = 0;
    int n_classes = 0;
    std::vector<double> distances;
    std::vector<int> labels;
    std::vector<std::uint8_t> correct;  // K x n_models

    [[nodiscard]] std::size_t k() const noexcept { return distances.size(); }
    [[nodiscard]] bool is_correct(std::size_t neighbor, std::size_t model) const noexcept {
        return correct[neighbor * n_models + model] != 0;
    }
    [[nodiscard]] std::size_t hits(std::size_t model) const noexcept {
        std::size_t h = 0;
        for (std::size_t j = 0; j < k(); ++j) {
            h += is_correct(j, model) ? 1 : 0;
        }
        return h;
    }
};

inline LocalCompetence local_competence(const PoolOutputs& dsel_outputs, const RegionOfCompetence& roc, int n_classes) {
    LocalCompetence lc;
    lc.n_models = dsel_outputs.n_models;
    lc.n_classes = n_classes;
    lc.labels = roc.labels;
    lc.correct.resize(roc.neighbors.size() * lc.n_models);
    for (std::size_t j = 0; j < roc.neighbors.size(); ++j) {
        lc.distances.push_back(roc.neighbors[j].distance);
        for (std::size_t m = 0; m < lc.n_models; ++m) {
            lc.correct[j * lc.n_models + m] = dsel_outputs.prediction(roc.neighbors[j].index, m) == roc.labels[j] ? 1 : 0;
        }
    }
    return lc;
}

// ---------------------------------------------------------------------------
// Selection rules

inline std::size_t argmax_competence(std::span<const double> competence) noexcept {
    std::size_t best = 0;
    for (std::size_t m = 1; m < competence.size(); ++m) {
        if (competence[m] > competence[best]) {
            best = m;
        }
    }
    return best;
}

/// Plain vote of the selected members' predictions; ties to the lowest class.
inline int majority_vote(std::span<const std::size_t> selected, std::span<const int> query_predictions, int n_classes) {
    std::vector<double> votes(static_cast<std::size_t>(n_classes), 0.0);
    for (const auto m : selected) {
        votes[static_cast<std::size_t>(query_predictions[m])] += 1.0;
    }
    return argmax(votes);
}

inline std::vector<std::size_t> whole_pool(std::size_t n_models) {
    std::vector<std::size_t> all(n_models);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
}

/// Overall local accuracy.
inline std::size_t ola_select(const LocalCompetence& lc) {
    std::vector<double> competence(lc.n_models);
    for (std::size_t m = 0; m < lc.n_models; ++m) {
        competence[m] = static_cast<double>(lc.hits(m)) / static_cast<double>(lc.k());
    }
    return argmax_competence(competence);
}

/// Local accuracy with neighbours weighted by 1 / (distance + 1e-12).
inline std::size_t mla_select(const LocalCompetence& lc) {
    std::vector<double> weights(lc.k());
    double total = 0.0;
    for (std::size_t j = 0; j < lc.k(); ++j) {
        weights[j] = 1.0 / (lc.distances[j] + 1e-12);
        total += weights[j];
    }
    std::vector<double> competence(lc.n_models, 0.0);
    for (std::size_t m = 0; m < lc.n_models; ++m) {
        for (std::size_t j = 0; j < lc.k(); ++j) {
            if (lc.is_correct(j, m)) {
                competence[m] += weights[j];
            }
        }
        competence[m] /= total;
    }
    return argmax_competence(competence);
}

/// KNORA-Eliminate: members correct on all k' nearest neighbours, shrinking
/// k' from K until someone qualifies; the whole pool if nobody does.
inline std::vector<std::size_t> knora_e_select(const LocalCompetence& lc) {
    for (std::size_t kk = lc.k(); kk > 0; --kk) {
        std::vector<std::size_t> selected;
        for (std::size_t m = 0; m < lc.n_models; ++m) {
            bool all = true;
            for (std::size_t j = 0; j < kk && all; ++j) {
                all = lc.is_correct(j, m);
            }
            if (all) {
                selected.push_back(m);
            }
        }
        if (!selected.empty()) {
            return selected;
        }
    }
    return whole_pool(lc.n_models);
}

/// KNORA-Union: every member votes with weight = its local hit count.
inline int knora_u_vote(const LocalCompetence& lc, std::span<const int> query_predictions) {
    std::vector<double> votes(static_cast<std::size_t>(lc.n_classes), 0.0);
    std::size_t total = 0;
    for (std::size_t m = 0; m < lc.n_models; ++m) {
        const auto h = lc.hits(m);
        total += h;
        votes[static_cast<std::size_t>(query_predictions[m])] += static_cast<double>(h);
    }
    if (total == 0) {
        return majority_vote(whole_pool(lc.n_models), query_predictions, lc.n_classes);
    }
    return argmax(votes);
}

/// DES-Performance: members whose local accuracy beats random guessing (1/L).
inline std::vector<std::size_t> des_p_select(const LocalCompetence& lc) {
    std::vector<std::size_t> selected;
    const double chance = 1.0 / static_cast<double>(lc.n_classes);
    for (std::size_t m = 0; m < lc.n_models; ++m) {
        const double accuracy = static_cast<double>(lc.hits(m)) / static_cast<double>(lc.k());
        if (accuracy - chance > 0.0) {
            selected.push_back(m);
        }
    }
    return selected.empty() ? whole_pool(lc.n_models) : selected;
}

/// DES-MI neighbour weights: inverse class frequency inside the region, normalised.
inline std::vector<double> des_mi_weights(const LocalCompetence& lc) {
    std::vector<double> per_class(static_cast<std::size_t>(lc.n_classes), 0.0);
    for (const int y : lc.labels) {
        per_class[static_cast<std::size_t>(y)] += 1.0;
    }
    std::vector<double> u(lc.k());
    double total = 0.0;
    for (std::size_t j = 0; j < lc.k(); ++j) {
        u[j] = 1.0 / per_class[static_cast<std::size_t>(lc.labels[j])];
        total += u[j];
    }
    for (auto& v : u) {
        v /= total;
    }
    return u;
}

/// DES-MI: the top ceil(p * |pool|) members by class-balanced local accuracy.
inline std::vector<std::size_t> des_mi_select(const LocalCompetence& lc, double p = 0.4) {
    if (!(p > 0.0 && p <= 1.0)) {
        throw error(errc::invalid_argument, "DES-MI fraction must lie in (0, 1]");
    }
    const auto u = des_mi_weights(lc);
    std::vector<double> competence(lc.n_models, 0.0);
    for (std::size_t m = 0; m < lc.n_models; ++m) {
        for (std::size_t j = 0; j < lc.k(); ++j) {
            if (lc.is_correct(j, m)) {
                competence[m] += u[j];
            }
        }
    }
    const auto keep = static_cast<std::size_t>(std::ceil(p * static_cast<double>(lc.n_models) - 1e-9));
    auto order = whole_pool(lc.n_models);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return competence[a] > competence[b]; });
    order.resize(std::min(keep, order.size()));
    std::sort(order.begin(), order.end());
    return order;
}

// ---------------------------------------------------------------------------
// META-DES

inline constexpr std::size_t metades_dimension(std::size_t k, std::size_t kp) noexcept { return 2 * k + kp + 2; }

struct MetaDesModel {
    TrainedModel meta_classifier;  ///< Gaussian NB over competence meta-features
    std::size_t k = 7;
    std::size_t kp = 5;
    double threshold = 0.5;
    std::size_t n_models = 0;
    std::vector<int> dsel_profiles;  ///< |DSEL| x n_models hard predictions

    friend bool operator==(const MetaDesModel&, const MetaDesModel&) = default;
};

/// The kp DSEL rows whose output profiles agree most with `profile`
/// (ties to the lower row index).
inline std::vector<std::size_t> nearest_profiles(std::span<const int> dsel_profiles, std::size_t n_models, std::span<const int> profile,
                                                 std::size_t kp, std::optional<std::size_t> exclude = std::nullopt) {
    const std::size_t n = dsel_profiles.size() / n_models;
    std::vector<std::pair<std::size_t, std::size_t>> scored;  // (mismatches, row)
    scored.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        if (exclude && r == *exclude) {
            continue;
        }
        const auto same = profile_similarity(dsel_profiles.subspan(r * n_models, n_models), profile);
        scored.emplace_back(n_models - same, r);
    }
    kp = std::min(kp, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(kp), scored.end());
    std::vector<std::size_t> rows(kp);
    for (std::size_t i = 0; i < kp; ++i) {
        rows[i] = scored[i].second;
    }
    return rows;
}

/// Competence meta-features of one model for one instance:
/// f1 (K hit flags), f2 (K posteriors of the true class), f3 (mean f1),
/// f4 (Kp hit flags on profile neighbours), f5 (max posterior on the instance).
inline std::vector<double> metades_meta_features(const PoolOutputs& dsel, std::span<const int> dsel_labels, const RegionOfCompetence& roc,
                                                 std::span<const std::size_t> profile_rows, std::span<const double> own_posterior,
                                                 std::size_t model) {
    std::vector<double> f;
    f.reserve(2 * roc.neighbors.size() + profile_rows.size() + 2);
    double hits = 0.0;
    for (std::size_t j = 0; j < roc.neighbors.size(); ++j) {
        const bool ok = dsel.prediction(roc.neighbors[j].index, model) == roc.labels[j];
        f.push_back(ok ? 1.0 : 0.0);
        hits += ok ? 1.0 : 0.0;
    }
    for (std::size_t j = 0; j < roc.neighbors.size(); ++j) {
        f.push_back(dsel.posterior(roc.neighbors[j].index, model)[static_cast<std::size_t>(roc.labels[j])]);
    }
    f.push_back(hits / static_cast<double>(roc.neighbors.size()));
    for (const auto r : profile_rows) {
        f.push_back(dsel.prediction(r, model) == dsel_labels[r] ? 1.0 : 0.0);
    }
    f.push_back(*std::max_element(own_posterior.begin(), own_posterior.end()));
    return f;
}

/// Meta-training set: one row per (model, DSEL instance) pair, instance
/// excluded from its own neighbour and profile candidates.
struct MetaDesTrainingSet {
    Matrix features;
    std::vector<int> labels;  ///< 1 = model classified the instance correctly
};

inline MetaDesTrainingSet metades_training_set(const PoolOutputs& dsel_outputs, const Dataset& dsel, std::size_t k, std::size_t kp) {
    if (dsel.size() < std::max(k, kp) + 1) {
        throw error(errc::dsel_too_small, "META-DES needs at least " + std::to_string(std::max(k, kp) + 1) + " DSEL rows");
    }
    const std::size_t n = dsel.size();
    const std::size_t M = dsel_outputs.n_models;
    const std::size_t dim = metades_dimension(k, kp);
    MetaDesTrainingSet set;
    set.features = Matrix(n * M, dim);
    set.labels.resize(n * M);
    for (std::size_t j = 0; j < n; ++j) {
        const auto roc = region_of_competence(dsel, dsel.features.row(j), k, j);
        const auto profile_rows = nearest_profiles(dsel_outputs.predictions, M, dsel_outputs.profile(j), kp, j);
        for (std::size_t m = 0; m < M; ++m) {
            const auto f = metades_meta_features(dsel_outputs, dsel.labels, roc, profile_rows, dsel_outputs.posterior(j, m), m);
            std::copy(f.begin(), f.end(), set.features.row(j * M + m).begin());
            set.labels[j * M + m] = dsel_outputs.prediction(j, m) == dsel.labels[j] ? 1 : 0;
        }
    }
    return set;
}

inline MetaDesModel metades_fit(const PoolOutputs& dsel_outputs, const Dataset& dsel, const DsOptions& opts = {}) {
    const auto set = metades_training_set(dsel_outputs, dsel, opts.k, opts.kp);
    const auto positives = std::count(set.labels.begin(), set.labels.end(), 1);
    if (positives == 0 || positives == static_cast<std::ptrdiff_t>(set.labels.size())) {
        throw error(errc::single_meta_class, "every pool member is always right or always wrong on DSEL");
    }
    MetaDesModel meta;
    meta.meta_classifier = train_gaussian_nb(set.features, set.labels, 2);
    meta.k = opts.k;
    meta.kp = opts.kp;
    meta.threshold = opts.metades_threshold;
    meta.n_models = dsel_outputs.n_models;
    meta.dsel_profiles = dsel_outputs.predictions;
    return meta;
}

inline MetaDesModel metades_fit(const Pool& pool, const Dataset& dsel, const DsOptions& opts = {}) {
    return metades_fit(compute_pool_outputs(pool, dsel.features, true), dsel, opts);
}

/// P(competent) for every pool member at a query.
inline std::vector<double> metades_competence(const MetaDesModel& meta, const PoolOutputs& dsel_outputs, const Dataset& dsel,
                                              const RegionOfCompetence& roc, std::span<const int> query_predictions,
                                              std::span<const double> query_proba) {
    const auto profile_rows = nearest_profiles(meta.dsel_profiles, meta.n_models, query_predictions, meta.kp);
    const std::size_t L = dsel_outputs.n_classes;
    std::vector<double> competence(meta.n_models);
    for (std::size_t m = 0; m < meta.n_models; ++m) {
        const auto f = metades_meta_features(dsel_outputs, dsel.labels, roc, profile_rows, query_proba.subspan(m * L, L), m);
        competence[m] = meta.meta_classifier.predict_proba(f)[1];
    }
    return competence;
}

inline std::vector<std::size_t> metades_select_from(std::span<const double> competence, double threshold) {
    std::vector<std::size_t> selected;
    for (std::size_t m = 0; m < competence.size(); ++m) {
        if (competence[m] > threshold) {
            selected.push_back(m);
        }
    }
    return selected.empty() ? whole_pool(competence.size()) : selected;
}

// ---------------------------------------------------------------------------
// Engine

/// A pool bound to its DSEL set with cached DSEL outputs. The pool must
/// outlive the engine.
class DsEngine {
  public:
    DsEngine(const Pool& pool, Dataset dsel, DsOptions opts = {})
        : pool_(&pool), dsel_(std::move(dsel)), opts_(opts), outputs_(compute_pool_outputs(pool, dsel_.features, true)) {
        if (dsel_.size() < opts_.k) {
            throw error(errc::dsel_too_small, "DSEL has " + std::to_string(dsel_.size()) + " rows, K = " + std::to_string(opts_.k));
        }
        if (pool.n_classes() != dsel_.n_classes) {
            throw error(errc::invalid_argument, "pool and DSEL disagree on the number of classes");
        }
    }

    [[nodiscard]] const PoolOutputs& dsel_outputs() const noexcept { return outputs_; }
    [[nodiscard]] const Dataset& dsel() const noexcept { return dsel_; }
    [[nodiscard]] const DsOptions& options() const noexcept { return opts_; }

    [[nodiscard]] MetaDesModel fit_metades() const { return metades_fit(outputs_, dsel_, opts_); }

    struct Query {
        std::vector<int> predictions;
        std::vector<double> proba;  // n_models x n_classes
        RegionOfCompetence roc;
        LocalCompetence competence;
    };

    [[nodiscard]] Query prepare(std::span<const double> x) const {
        Query q;
        const std::size_t L = outputs_.n_classes;
        q.predictions.resize(pool_->size());
        q.proba.resize(pool_->size() * L);
        for (std::size_t m = 0; m < pool_->size(); ++m) {
            const auto p = pool_->models[m].predict_proba(x);
            q.predictions[m] = argmax(p);
            std::copy(p.begin(), p.end(), q.proba.begin() + static_cast<std::ptrdiff_t>(m * L));
        }
        q.roc = region_of_competence(dsel_, x, opts_.k);
        q.competence = local_competence(outputs_, q.roc, dsel_.n_classes);
        return q;
    }

    [[nodiscard]] int predict(DsMethod method, const Query& q, const MetaDesModel* meta) const {
        const int L = dsel_.n_classes;
        switch (method) {
            case DsMethod::OLA: return q.predictions[ola_select(q.competence)];
            case DsMethod::MLA: return q.predictions[mla_select(q.competence)];
            case DsMethod::KNORA_E: return majority_vote(knora_e_select(q.competence), q.predictions, L);
            case DsMethod::KNORA_U: return knora_u_vote(q.competence, q.predictions);
            case DsMethod::DES_MI: return majority_vote(des_mi_select(q.competence, opts_.des_mi_p), q.predictions, L);
            case DsMethod::DES_P: return majority_vote(des_p_select(q.competence), q.predictions, L);
            case DsMethod::META_DES: {
                if (meta == nullptr) {
                    throw error(errc::missing_meta_model, "META-DES prediction requires a fitted meta-model");
                }
                const auto competence = metades_competence(*meta, outputs_, dsel_, q.roc, q.predictions, q.proba);
                return majority_vote(metades_select_from(competence, meta->threshold), q.predictions, L);
            }
        }
        return 0;
    }

    [[nodiscard]] int predict(DsMethod method, std::span<const double> x, const MetaDesModel* meta = nullptr) const {
        if (method == DsMethod::META_DES && meta == nullptr) {
            throw error(errc::missing_meta_model, "META-DES prediction requires a fitted meta-model");
        }
        return predict(method, prepare(x), meta);
    }

    [[nodiscard]] std::vector<std::size_t> metades_select(const MetaDesModel& meta, std::span<const double> x) const {
        const auto q = prepare(x);
        return metades_select_from(metades_competence(meta, outputs_, dsel_, q.roc, q.predictions, q.proba), meta.threshold);
    }

  private:
    const Pool* pool_;
    Dataset dsel_;
    DsOptions opts_;
    PoolOutputs outputs_;
};

inline std::vector<std::size_t> metades_select(const MetaDesModel& meta, const Pool& pool, const Dataset& dsel, std::span<const double> x,
                                               const DsOptions& opts = {}) {
    return DsEngine(pool, dsel, opts).metades_select(meta, x);
}

/// One-shot prediction. Builds the DSEL cache on every call; use DsEngine
/// for batches.
inline int ds_predict(DsMethod method, const Pool& pool, const Dataset& dsel, const MetaDesModel* meta, std::span<const double> x,
                      const DsOptions& opts = {}) {
    if (method == DsMethod::META_DES && meta == nullptr) {
        throw error(errc::missing_meta_model, "META-DES prediction requires a fitted meta-model");
    }
    return DsEngine(pool, dsel, opts).predict(method, x, meta);
}

}  // namespace mlrs
