#pragma once

// Meta-training and recommendation for the three scenarios:
//   pool     - recommend a pool scheme for a user-fixed DS method
//   ds       - recommend a DS method for a user-fixed pool scheme
//   pool_ds  - recommend the pair, pool first, via a two-stage classifier chain
// plus the Majority and Average baselines.

#include "mlrs/dataset.hpp"
#include "mlrs/error.hpp"
#include "mlrs/grid.hpp"
#include "mlrs/learners.hpp"
#include "mlrs/meta_features.hpp"
#include "mlrs/pool.hpp"
#include "mlrs/rng.hpp"
#include "mlrs/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace mlrs {

enum class Scenario { pool, ds, pool_ds };

inline std::string_view to_string(Scenario s) noexcept {
    switch (s) {
        case Scenario::pool: return "MLRS-P";
        case Scenario::ds: return "MLRS-DS";
        case Scenario::pool_ds: return "MLRS-PDS";
    }
    return "unknown";
}

/// Accepts I / II / III, P / DS / PDS, or the MLRS-* names.
inline Scenario parse_scenario(std::string_view text) {
    if (text == "I" || text == "P" || text == "MLRS-P" || text == "pool") return Scenario::pool;
    if (text == "II" || text == "DS" || text == "MLRS-DS" || text == "ds") return Scenario::ds;
    if (text == "III" || text == "PDS" || text == "MLRS-PDS" || text == "pool_ds") return Scenario::pool_ds;
    throw error(errc::invalid_argument, "unknown scenario '" + std::string(text) + "'");
}

struct ScenarioConfig {
    Scenario scenario = Scenario::pool_ds;
    std::optional<DsMethod> fixed_ds;      ///< required for Scenario::pool
    std::optional<PoolScheme> fixed_pool;  ///< required for Scenario::ds

    static ScenarioConfig pool_for(DsMethod ds) { return {Scenario::pool, ds, std::nullopt}; }
    static ScenarioConfig ds_for(PoolScheme pool) { return {Scenario::ds, std::nullopt, pool}; }
    static ScenarioConfig pair() { return {Scenario::pool_ds, std::nullopt, std::nullopt}; }

    [[nodiscard]] std::string fixed_name() const {
        if (fixed_ds) return std::string(to_string(*fixed_ds));
        if (fixed_pool) return std::string(to_string(*fixed_pool));
        return {};
    }

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

inline void validate(const ScenarioConfig& cfg) {
    const bool ok = (cfg.scenario == Scenario::pool && cfg.fixed_ds && !cfg.fixed_pool) ||
                    (cfg.scenario == Scenario::ds && cfg.fixed_pool && !cfg.fixed_ds) ||
                    (cfg.scenario == Scenario::pool_ds && !cfg.fixed_ds && !cfg.fixed_pool);
    if (!ok) {
        throw error(errc::invalid_argument, "scenario " + std::string(to_string(cfg.scenario)) + " has the wrong fixed configuration");
    }
}

struct MetaTarget {
    std::optional<PoolScheme> pool;
    std::optional<DsMethod> ds;

    friend bool operator==(const MetaTarget&, const MetaTarget&) = default;
};

inline std::string to_string(const MetaTarget& t) {
    std::string out;
    if (t.pool) out += to_string(*t.pool);
    if (t.pool && t.ds) out += ", ";
    if (t.ds) out += to_string(*t.ds);
    return "(" + out + ")";
}

// ---------------------------------------------------------------------------
// Candidates and meta-targets

/// Candidate configurations of a scenario in canonical order (pool-major).
inline std::vector<std::pair<PoolScheme, DsMethod>> scenario_candidates(const ScenarioConfig& cfg) {
    validate(cfg);
    std::vector<std::pair<PoolScheme, DsMethod>> out;
    for (const auto p : all_pool_schemes) {
        for (const auto m : all_ds_methods) {
            if ((cfg.fixed_ds && m != *cfg.fixed_ds) || (cfg.fixed_pool && p != *cfg.fixed_pool)) {
                continue;
            }
            out.emplace_back(p, m);
        }
    }
    return out;
}

/// The cell a target denotes under a scenario (the fixed half filled in).
inline std::pair<PoolScheme, DsMethod> resolve_target(const MetaTarget& t, const ScenarioConfig& cfg) {
    const auto pool = cfg.fixed_pool ? cfg.fixed_pool : t.pool;
    const auto ds = cfg.fixed_ds ? cfg.fixed_ds : t.ds;
    if (!pool || !ds) {
        throw error(errc::invalid_argument, "target " + to_string(t) + " does not name a grid cell for this scenario");
    }
    return {*pool, *ds};
}

inline MetaTarget make_target(PoolScheme p, DsMethod m, const ScenarioConfig& cfg) {
    switch (cfg.scenario) {
        case Scenario::pool: return {p, std::nullopt};
        case Scenario::ds: return {std::nullopt, m};
        case Scenario::pool_ds: return {p, m};
    }
    return {};
}

/// True when every candidate cell of the scenario has an accuracy.
inline bool grid_complete_for(const GridResult& grid, const ScenarioConfig& cfg) {
    const auto cands = scenario_candidates(cfg);
    return std::all_of(cands.begin(), cands.end(), [&](const auto& c) { return grid.cell(c.first, c.second).ok(); });
}

inline double best_accuracy(const GridResult& grid, const ScenarioConfig& cfg) {
    double best = -1.0;
    for (const auto& [p, m] : scenario_candidates(cfg)) {
        const auto& c = grid.cell(p, m);
        if (!c.ok()) {
            throw error(errc::incomplete_grid, "grid of '" + grid.dataset_id + "' lacks " + std::string(to_string(p)) + "/" +
                                                   std::string(to_string(m)) + ": " + c.excluded_reason);
        }
        best = std::max(best, *c.accuracy);
    }
    return best;
}

/// Highest-accuracy candidate; ties (within 1e-12) go to canonical order.
inline MetaTarget label_meta_target(const GridResult& grid, const ScenarioConfig& cfg) {
    const double best = best_accuracy(grid, cfg);
    for (const auto& [p, m] : scenario_candidates(cfg)) {
        if (*grid.cell(p, m).accuracy >= best - win_tolerance) {
            return make_target(p, m, cfg);
        }
    }
    throw error(errc::incomplete_grid, "no candidate found");
}

/// A recommendation wins when its accuracy ties the scenario's best.
inline bool is_win(const GridResult& grid, const ScenarioConfig& cfg, const MetaTarget& t) {
    const auto [p, m] = resolve_target(t, cfg);
    return *grid.cell(p, m).accuracy >= best_accuracy(grid, cfg) - win_tolerance;
}

// ---------------------------------------------------------------------------
// Meta-dataset

/// Everything the meta-level needs about one dataset: meta-features of its
/// training partition and its evaluation grid.
struct DatasetRecord {
    std::string id;
    MetaFeatureVector features;
    GridResult grid;

    friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

struct MetaRow {
    std::string dataset_id;
    MetaFeatureVector features;
    MetaTarget target;

    friend bool operator==(const MetaRow&, const MetaRow&) = default;
};

struct Exclusion {
    std::string dataset_id;
    std::string reason;

    friend bool operator==(const Exclusion&, const Exclusion&) = default;
};

struct MetaDataset {
    ScenarioConfig config;
    std::string schema_version{meta_schema_version};
    std::vector<MetaRow> rows;
    std::vector<Exclusion> excluded;

    friend bool operator==(const MetaDataset&, const MetaDataset&) = default;
};

inline std::string exclusion_reason(const GridResult& grid, const ScenarioConfig& cfg) {
    for (const auto& [p, m] : scenario_candidates(cfg)) {
        const auto& c = grid.cell(p, m);
        if (!c.ok()) {
            return c.excluded_reason;
        }
    }
    return {};
}

/// One row per record whose candidate cells are all available; the rest
/// are listed as exclusions.
inline MetaDataset build_meta_dataset(std::span<const DatasetRecord> records, const ScenarioConfig& cfg) {
    validate(cfg);
    MetaDataset mt;
    mt.config = cfg;
    for (const auto& rec : records) {
        if (rec.features.schema_version != mt.schema_version) {
            throw error(errc::schema_mismatch, "record '" + rec.id + "' uses schema " + rec.features.schema_version);
        }
        if (!grid_complete_for(rec.grid, cfg)) {
            mt.excluded.push_back({rec.id, exclusion_reason(rec.grid, cfg)});
            continue;
        }
        mt.rows.push_back({rec.id, rec.features, label_meta_target(rec.grid, cfg)});
    }
    return mt;
}

// ---------------------------------------------------------------------------
// Meta-models

enum class MetaModelKind { random_forest, knn };

inline std::string_view to_string(MetaModelKind k) noexcept { return k == MetaModelKind::random_forest ? "random_forest" : "knn"; }

struct MetaModelOptions {
    int rf_trees = 100;
    int rf_max_depth = 5;
    std::size_t knn_k = 2;
};

struct MetaModel {
    MetaModelKind kind = MetaModelKind::knn;
    int n_labels = 7;
    ScalerParams scaler;  ///< fitted on the meta-training rows only
    // random forest
    int max_depth = 0;
    std::vector<TrainedModel> trees;
    // k-NN
    std::size_t k = 0;
    Matrix train_x;  ///< scaled
    std::vector<int> train_y;
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t input_dim() const noexcept { return scaler.means.size(); }

    /// Forest: mean tree posterior. k-NN: inverse-distance vote; zero-distance
    /// neighbours take over; residual ties go to the nearer neighbour's label.
    [[nodiscard]] int predict(std::span<const double> raw) const {
        const auto x = scaler.apply(raw);
        if (kind == MetaModelKind::random_forest) {
            std::vector<double> votes(static_cast<std::size_t>(n_labels), 0.0);
            for (const auto& t : trees) {
                const auto p = t.predict_proba(x);
                for (std::size_t c = 0; c < votes.size(); ++c) {
                    votes[c] += p[c];
                }
            }
            return argmax(votes);
        }
        const auto nbs = knn_neighbors(train_x, x, k);
        std::vector<double> votes(static_cast<std::size_t>(n_labels), 0.0);
        const bool exact = nbs.front().distance == 0.0;
        for (const auto& nb : nbs) {
            if (exact && nb.distance > 0.0) {
                break;
            }
            votes[static_cast<std::size_t>(train_y[nb.index])] += exact ? 1.0 : 1.0 / nb.distance;
        }
        const double top = *std::max_element(votes.begin(), votes.end());
        for (const auto& nb : nbs) {
            if (votes[static_cast<std::size_t>(train_y[nb.index])] == top) {
                return train_y[nb.index];
            }
        }
        return argmax(votes);
    }

    friend bool operator==(const MetaModel&, const MetaModel&) = default;
};

inline MetaModel fit_meta_model(MetaModelKind kind, const Matrix& X, std::span<const int> y, int n_labels, const MetaModelOptions& opts,
                                std::uint64_t seed) {
    if (X.rows() == 0) {
        throw error(errc::empty_meta_dataset, "meta-model needs at least one row");
    }
    MetaModel model;
    model.kind = kind;
    model.n_labels = n_labels;
    model.scaler = zscore_fit(X);
    Matrix scaled(X.rows(), X.cols());
    for (std::size_t r = 0; r < X.rows(); ++r) {
        const auto s = model.scaler.apply(X.row(r));
        std::copy(s.begin(), s.end(), scaled.row(r).begin());
    }
    if (kind == MetaModelKind::random_forest) {
        model.max_depth = opts.rf_max_depth;
        const auto features = rf_subsample_size(X.cols());
        for (int t = 0; t < opts.rf_trees; ++t) {
            Rng rng(derive_seed(seed, "meta-rf-bootstrap", t));
            std::vector<double> w(X.rows(), 0.0);
            for (std::size_t i = 0; i < X.rows(); ++i) {
                w[static_cast<std::size_t>(rng.below(X.rows()))] += 1.0;
            }
            model.trees.push_back(
                train_tree(scaled, y, n_labels, w, TreeOptions{opts.rf_max_depth, features}, derive_seed(seed, "meta-rf", t)));
        }
        return model;
    }
    model.k = std::min(opts.knn_k, X.rows());
    if (model.k < opts.knn_k) {
        model.warnings.push_back("k clamped from " + std::to_string(opts.knn_k) + " to " + std::to_string(model.k) +
                                 " (meta-dataset has " + std::to_string(X.rows()) + " rows)");
    }
    model.train_x = std::move(scaled);
    model.train_y.assign(y.begin(), y.end());
    return model;
}

/// Stage 2 input: meta-features followed by a 7-slot one-hot of the pool.
inline std::vector<double> chain_stage2_input(std::span<const double> features, PoolScheme pool) {
    std::vector<double> out(features.begin(), features.end());
    for (const auto p : all_pool_schemes) {
        out.push_back(p == pool ? 1.0 : 0.0);
    }
    return out;
}

struct ChainModel {
    MetaModel stage1;  ///< pool schemes
    MetaModel stage2;  ///< DS methods, conditioned on the pool one-hot

    friend bool operator==(const ChainModel&, const ChainModel&) = default;
};

struct RecommenderOptions {
    MetaModelOptions meta;
};

struct Recommender {
    ScenarioConfig config;
    std::string schema_version{meta_schema_version};
    std::size_t n_features = 0;
    std::variant<MetaModel, ChainModel> model;

    friend bool operator==(const Recommender&, const Recommender&) = default;
};

/// pool scenario: depth-5 random forest; ds and pool_ds: 2-NN (chained for pool_ds).
inline Recommender train_recommender(const MetaDataset& mt, const RecommenderOptions& opts = {}, std::uint64_t seed = 0) {
    if (mt.rows.empty()) {
        throw error(errc::empty_meta_dataset, "meta-dataset has no rows");
    }
    validate(mt.config);
    Recommender rec;
    rec.config = mt.config;
    rec.schema_version = mt.schema_version;
    rec.n_features = mt.rows.front().features.values.size();
    Matrix X(mt.rows.size(), rec.n_features);
    std::vector<int> pools;
    std::vector<int> methods;
    for (std::size_t r = 0; r < mt.rows.size(); ++r) {
        const auto& row = mt.rows[r];
        if (row.features.values.size() != rec.n_features) {
            throw error(errc::schema_mismatch, "meta-row '" + row.dataset_id + "' has a different length");
        }
        std::copy(row.features.values.begin(), row.features.values.end(), X.row(r).begin());
        if (row.target.pool) pools.push_back(static_cast<int>(*row.target.pool));
        if (row.target.ds) methods.push_back(static_cast<int>(*row.target.ds));
    }
    switch (mt.config.scenario) {
        case Scenario::pool:
            if (pools.size() != mt.rows.size()) throw error(errc::invalid_argument, "pool scenario rows need pool targets");
            rec.model = fit_meta_model(MetaModelKind::random_forest, X, pools, 7, opts.meta, seed);
            break;
        case Scenario::ds:
            if (methods.size() != mt.rows.size()) throw error(errc::invalid_argument, "ds scenario rows need DS targets");
            rec.model = fit_meta_model(MetaModelKind::knn, X, methods, 7, opts.meta, seed);
            break;
        case Scenario::pool_ds: {
            if (pools.size() != mt.rows.size() || methods.size() != mt.rows.size()) {
                throw error(errc::invalid_argument, "pool_ds scenario rows need both targets");
            }
            ChainModel chain;
            chain.stage1 = fit_meta_model(MetaModelKind::knn, X, pools, 7, opts.meta, derive_seed(seed, "stage1"));
            Matrix X2(X.rows(), X.cols() + all_pool_schemes.size());
            for (std::size_t r = 0; r < X.rows(); ++r) {
                const auto in = chain_stage2_input(X.row(r), static_cast<PoolScheme>(pools[r]));
                std::copy(in.begin(), in.end(), X2.row(r).begin());
            }
            chain.stage2 = fit_meta_model(MetaModelKind::knn, X2, methods, 7, opts.meta, derive_seed(seed, "stage2"));
            rec.model = std::move(chain);
            break;
        }
    }
    return rec;
}

inline MetaTarget recommend(const Recommender& rec, const MetaFeatureVector& mf) {
    if (mf.schema_version != rec.schema_version || mf.values.size() != rec.n_features) {
        throw error(errc::schema_mismatch, "query uses schema " + mf.schema_version + " with " + std::to_string(mf.values.size()) +
                                               " values; recommender expects " + rec.schema_version + " with " +
                                               std::to_string(rec.n_features));
    }
    switch (rec.config.scenario) {
        case Scenario::pool: return {static_cast<PoolScheme>(std::get<MetaModel>(rec.model).predict(mf.values)), std::nullopt};
        case Scenario::ds: return {std::nullopt, static_cast<DsMethod>(std::get<MetaModel>(rec.model).predict(mf.values))};
        case Scenario::pool_ds: {
            const auto& chain = std::get<ChainModel>(rec.model);
            const auto pool = static_cast<PoolScheme>(chain.stage1.predict(mf.values));
            const auto ds = static_cast<DsMethod>(chain.stage2.predict(chain_stage2_input(mf.values, pool)));
            return {pool, ds};
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// Baselines

/// Modal target (pool_ds: modal pool, then modal DS among rows with that pool);
/// ties to canonical order.
inline MetaTarget baseline_majority(const MetaDataset& mt) {
    if (mt.rows.empty()) {
        throw error(errc::empty_meta_dataset, "meta-dataset has no rows");
    }
    const auto mode = [](const std::vector<int>& labels) {
        std::array<int, 7> counts{};
        for (const int l : labels) {
            ++counts[static_cast<std::size_t>(l)];
        }
        return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    };
    std::vector<int> pools;
    for (const auto& row : mt.rows) {
        if (row.target.pool) pools.push_back(static_cast<int>(*row.target.pool));
    }
    MetaTarget out;
    if (!pools.empty()) {
        out.pool = static_cast<PoolScheme>(mode(pools));
    }
    std::vector<int> methods;
    for (const auto& row : mt.rows) {
        if (row.target.ds && (!out.pool || row.target.pool == out.pool)) {
            methods.push_back(static_cast<int>(*row.target.ds));
        }
    }
    if (!methods.empty()) {
        out.ds = static_cast<DsMethod>(mode(methods));
    }
    return out;
}

/// Uniform-random-choice baseline, in the interpretations the literature
/// uses: mean per-candidate win rate, mean win count, and mean accuracy.
struct AverageBaseline {
    double win_rate = 0.0;       ///< fraction in [0, 1]
    double mean_wins = 0.0;      ///< average number of datasets won per candidate
    double mean_accuracy = 0.0;  ///< mean test accuracy over candidates and datasets
    std::size_t datasets = 0;
    std::size_t candidates = 0;

    friend bool operator==(const AverageBaseline&, const AverageBaseline&) = default;
};

/// Grids incomplete for the scenario are skipped.
inline AverageBaseline baseline_average(std::span<const GridResult> grids, const ScenarioConfig& cfg) {
    const auto cands = scenario_candidates(cfg);
    AverageBaseline out;
    out.candidates = cands.size();
    double wins = 0.0;
    double acc = 0.0;
    for (const auto& g : grids) {
        if (!grid_complete_for(g, cfg)) {
            continue;
        }
        ++out.datasets;
        const double best = best_accuracy(g, cfg);
        for (const auto& [p, m] : cands) {
            const double a = *g.cell(p, m).accuracy;
            wins += a >= best - win_tolerance ? 1.0 : 0.0;
            acc += a;
        }
    }
    if (out.datasets == 0) {
        return out;
    }
    const double C = static_cast<double>(cands.size());
    const double N = static_cast<double>(out.datasets);
    out.mean_wins = wins / C;
    out.win_rate = wins / (C * N);
    out.mean_accuracy = acc / (C * N);
    return out;
}

}  // namespace mlrs
