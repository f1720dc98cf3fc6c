#pragma once

// Experiment plumbing: per-dataset grid evaluation, leave-one-dataset-out
// evaluation of the recommender against the baselines, and reports.

#include "mlrs/dataset.hpp"
#include "mlrs/error.hpp"
#include "mlrs/grid.hpp"
#include "mlrs/meta_features.hpp"
#include "mlrs/parallel.hpp"
#include "mlrs/pool.hpp"
#include "mlrs/recommender.hpp"
#include "mlrs/registry.hpp"
#include "mlrs/rng.hpp"
#include "mlrs/selection.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace mlrs {

struct ExperimentConfig {
    std::uint64_t seed = 42;
    double train_ratio = 0.75;
    PoolOptions pool;  ///< pool.workers is ignored; see workers
    DsOptions ds;
    MetaFeatureOptions meta_features;
    MetaModelOptions meta_model;
    std::size_t workers = 1;
};

inline void to_json(json& j, const ExperimentConfig& c) {
    j = json{{"seed", c.seed},
             {"train_ratio", c.train_ratio},
             {"pool_size", c.pool.size},
             {"perceptron_epochs", c.pool.perceptron.epochs},
             {"perceptron_lr", c.pool.perceptron.lr},
             {"lit_epochs", c.pool.lit_epochs},
             {"lit_lr", c.pool.lit_lr},
             {"lit_lambda", c.pool.lit_lambda},
             {"flt_bandwidth_sample", c.pool.flt_bandwidth_sample},
             {"k", c.ds.k},
             {"kp", c.ds.kp},
             {"des_mi_p", c.ds.des_mi_p},
             {"metades_threshold", c.ds.metades_threshold},
             {"entropy_bins", c.meta_features.entropy_bins},
             {"landmark_folds", c.meta_features.landmark_folds},
             {"rf_trees", c.meta_model.rf_trees},
             {"rf_max_depth", c.meta_model.rf_max_depth},
             {"knn_k", c.meta_model.knn_k},
             {"workers", c.workers}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline void from_json(const json& j, ExperimentConfig& c) {
    const json known = ExperimentConfig{};
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) {
            throw error(errc::invalid_argument, "unknown config key '" + key + "'");
        }
    }
    c.seed = j.value("seed", c.seed);
    c.train_ratio = j.value("train_ratio", c.train_ratio);
    c.pool.size = j.value("pool_size", c.pool.size);
    c.pool.perceptron.epochs = j.value("perceptron_epochs", c.pool.perceptron.epochs);
    c.pool.perceptron.lr = j.value("perceptron_lr", c.pool.perceptron.lr);
    c.pool.lit_epochs = j.value("lit_epochs", c.pool.lit_epochs);
    c.pool.lit_lr = j.value("lit_lr", c.pool.lit_lr);
    c.pool.lit_lambda = j.value("lit_lambda", c.pool.lit_lambda);
    c.pool.flt_bandwidth_sample = j.value("flt_bandwidth_sample", c.pool.flt_bandwidth_sample);
    c.ds.k = j.value("k", c.ds.k);
    c.ds.kp = j.value("kp", c.ds.kp);
    c.ds.des_mi_p = j.value("des_mi_p", c.ds.des_mi_p);
    c.ds.metades_threshold = j.value("metades_threshold", c.ds.metades_threshold);
    c.meta_features.entropy_bins = j.value("entropy_bins", c.meta_features.entropy_bins);
    c.meta_features.landmark_folds = j.value("landmark_folds", c.meta_features.landmark_folds);
    c.meta_model.rf_trees = j.value("rf_trees", c.meta_model.rf_trees);
    c.meta_model.rf_max_depth = j.value("rf_max_depth", c.meta_model.rf_max_depth);
    c.meta_model.knn_k = j.value("knn_k", c.meta_model.knn_k);
    c.workers = j.value("workers", c.workers);
}

/// Hash of everything that affects results (the worker count does not).
inline std::uint64_t config_hash(const ExperimentConfig& c) {
    json j = c;
    j.erase("workers");
    return hash_bytes(j.dump());
}

inline std::uint64_t content_hash(const Dataset& ds) {
    std::uint64_t h = hash_bytes(ds.id);
    const auto& v = ds.features.data();
    h = hash_bytes(std::string_view(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double)), h);
    h = hash_bytes(std::string_view(reinterpret_cast<const char*>(ds.labels.data()), ds.labels.size() * sizeof(int)), h);
    return mix64(h ^ static_cast<std::uint64_t>(ds.dim()));
}

// ---------------------------------------------------------------------------
// Grid

inline SplitPair split_for(const Dataset& ds, const ExperimentConfig& cfg) {
    return stratified_split(ds, cfg.train_ratio, derive_seed(cfg.seed, ds.id, "split"));
}

/// Evaluates the 49 (pool, DS) cells on one split. The train partition is
/// z-scored, each pool is generated once and shared by the seven methods, and
/// the train partition doubles as DSEL. A scheme raising DegeneratePool has
/// its whole row excluded. When the META-DES meta-classifier cannot be fitted
/// (one meta-class only) META-DES falls back to the whole-pool vote.
inline GridResult run_grid(const SplitPair& split, const ExperimentConfig& cfg) {
    const std::string& id = split.train.id;
    const std::array<Dataset, 1> others{split.test};
    const auto scaled = zscore_fit_apply(split.train, others);
    const Dataset& train = scaled.train;
    const Dataset& test = scaled.others.front();

    GridResult grid;
    grid.dataset_id = id;
    grid.seed = cfg.seed;
    PoolOptions popts = cfg.pool;
    popts.workers = 1;
    parallel_for(all_pool_schemes.size(), cfg.workers, [&](std::size_t s) {
        const auto scheme = all_pool_schemes[s];
        auto& row = grid.cells[s];
        Pool pool;
        try {
            pool = generate_pool(scheme, train, popts, derive_seed(cfg.seed, id, to_string(scheme)));
        } catch (const error& e) {
            if (e.code() != errc::degenerate_pool) {
                throw;
            }
            for (auto& c : row) {
                c.excluded_reason = std::string(to_string(scheme)) + ": " + e.what();
            }
            return;
        }
        const DsEngine engine(pool, train, cfg.ds);
        std::optional<MetaDesModel> meta;
        try {
            meta = engine.fit_metades();
        } catch (const error& e) {
            if (e.code() != errc::single_meta_class) {
                throw;
            }
        }
        std::array<std::size_t, 7> correct{};
        for (std::size_t r = 0; r < test.size(); ++r) {
            const auto q = engine.prepare(test.features.row(r));
            for (std::size_t m = 0; m < all_ds_methods.size(); ++m) {
                const auto method = all_ds_methods[m];
                int pred = 0;
                if (method == DsMethod::META_DES && !meta) {
                    pred = majority_vote(whole_pool(pool.size()), q.predictions, train.n_classes);
                } else {
                    pred = engine.predict(method, q, meta ? &*meta : nullptr);
                }
                correct[m] += pred == test.labels[r] ? 1 : 0;
            }
        }
        for (std::size_t m = 0; m < all_ds_methods.size(); ++m) {
            row[m].accuracy = static_cast<double>(correct[m]) / static_cast<double>(test.size());
        }
    });
    return grid;
}

inline GridResult run_grid(const Dataset& ds, const ExperimentConfig& cfg) { return run_grid(split_for(ds, cfg), cfg); }

/// Meta-features come from the raw train partition; the test partition is
/// only ever used to score grid cells.
inline DatasetRecord prepare_record(const SplitPair& split, const ExperimentConfig& cfg) {
    DatasetRecord rec;
    rec.id = split.train.id;
    rec.features = extract_meta_features(split.train, derive_seed(cfg.seed, rec.id, "meta-features"), cfg.meta_features);
    rec.grid = run_grid(split, cfg);
    return rec;
}

inline DatasetRecord prepare_record(const Dataset& ds, const ExperimentConfig& cfg) { return prepare_record(split_for(ds, cfg), cfg); }

inline std::string cache_key(const Dataset& ds, const ExperimentConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(derive_seed(config_hash(cfg), cfg.seed, content_hash(ds))));
    std::string safe = ds.id;
    std::replace_if(safe.begin(), safe.end(), [](char c) { return c == '/' || c == '\\' || c == ' '; }, '_');
    return safe + "-" + buf;
}

/// prepare_record through an on-disk cache, one JSON document per key.
inline DatasetRecord prepare_record_cached(const Dataset& ds, const ExperimentConfig& cfg, const std::filesystem::path& cache_dir) {
    const auto path = cache_dir / (cache_key(ds, cfg) + ".json");
    if (std::filesystem::exists(path)) {
        return load<DatasetRecord>(path, "dataset_record");
    }
    auto rec = prepare_record(ds, cfg);
    const auto tmp = path.string() + ".tmp";
    save(tmp, "dataset_record", rec);
    std::filesystem::rename(tmp, path);
    return rec;
}

/// Parallel over datasets; each grid then runs single-threaded.
inline std::vector<DatasetRecord> prepare_records(std::span<const Dataset> corpus, const ExperimentConfig& cfg,
                                                  const std::optional<std::filesystem::path>& cache_dir = std::nullopt) {
    std::vector<DatasetRecord> out(corpus.size());
    ExperimentConfig inner = cfg;
    inner.workers = 1;
    parallel_for(corpus.size(), cfg.workers, [&](std::size_t i) {
        out[i] = cache_dir ? prepare_record_cached(corpus[i], inner, *cache_dir) : prepare_record(corpus[i], inner);
    });
    return out;
}

// ---------------------------------------------------------------------------
// LODO

struct FoldResult {
    std::string dataset_id;
    MetaTarget recommendation;
    bool win = false;
    double accuracy = 0.0;  ///< achieved by the recommendation
    double best = 0.0;      ///< best candidate on this dataset
    MetaTarget majority;
    bool majority_win = false;
    double majority_accuracy = 0.0;

    friend bool operator==(const FoldResult&, const FoldResult&) = default;
};

struct ScenarioReport {
    ScenarioConfig config;
    std::vector<FoldResult> folds;
    std::size_t wins = 0;
    std::size_t majority_wins = 0;
    AverageBaseline average;
    std::vector<Exclusion> excluded;

    [[nodiscard]] std::size_t n() const noexcept { return folds.size(); }

    friend bool operator==(const ScenarioReport&, const ScenarioReport&) = default;
};

/// Wins of always choosing one fixed (pool, DS) pair.
struct PairWins {
    PoolScheme pool = PoolScheme::BP;
    DsMethod ds = DsMethod::OLA;
    std::size_t wins = 0;

    friend bool operator==(const PairWins&, const PairWins&) = default;
};

struct LodoReport {
    std::uint64_t seed = 0;
    std::size_t n_datasets = 0;
    std::vector<ScenarioReport> scenarios;
    std::vector<PairWins> fixed_pairs;  ///< all 49, best first, over the pair scenario's datasets

    [[nodiscard]] const ScenarioReport& scenario(const ScenarioConfig& cfg) const {
        for (const auto& s : scenarios) {
            if (s.config == cfg) {
                return s;
            }
        }
        throw error(errc::invalid_argument, "report has no such scenario");
    }

    friend bool operator==(const LodoReport&, const LodoReport&) = default;
};

struct FoldOutcome {
    Recommender recommender;
    MetaTarget recommendation;
};

inline MetaDataset without_row(const MetaDataset& mt, std::size_t held_out) {
    MetaDataset rest;
    rest.config = mt.config;
    rest.schema_version = mt.schema_version;
    for (std::size_t i = 0; i < mt.rows.size(); ++i) {
        if (i != held_out) {
            rest.rows.push_back(mt.rows[i]);
        }
    }
    return rest;
}

/// One LODO fold: train on every row but `held_out`, recommend for it.
inline FoldOutcome lodo_fold(const MetaDataset& mt, std::size_t held_out, const ExperimentConfig& cfg) {
    const auto& q = mt.rows.at(held_out);
    FoldOutcome out;
    out.recommender = train_recommender(without_row(mt, held_out), RecommenderOptions{cfg.meta_model},
                                        derive_seed(cfg.seed, "lodo", to_string(mt.config.scenario), mt.config.fixed_name(), q.dataset_id));
    out.recommendation = recommend(out.recommender, q.features);
    return out;
}

inline ScenarioReport lodo_scenario(std::span<const DatasetRecord> records, const ScenarioConfig& sc, const ExperimentConfig& cfg) {
    const auto mt = build_meta_dataset(records, sc);
    if (mt.rows.size() < 3) {
        throw error(errc::corpus_too_small, "scenario " + std::string(to_string(sc.scenario)) + " " + sc.fixed_name() + " has " +
                                                std::to_string(mt.rows.size()) + " usable datasets; LODO needs 3");
    }
    std::map<std::string, const GridResult*> grids;
    for (const auto& r : records) {
        grids[r.id] = &r.grid;
    }
    ScenarioReport rep;
    rep.config = sc;
    rep.excluded = mt.excluded;
    rep.folds.resize(mt.rows.size());
    parallel_for(mt.rows.size(), cfg.workers, [&](std::size_t i) {
        const auto& id = mt.rows[i].dataset_id;
        const auto& grid = *grids.at(id);
        const auto outcome = lodo_fold(mt, i, cfg);
        const auto majority = baseline_majority(without_row(mt, i));
        auto& f = rep.folds[i];
        f.dataset_id = id;
        f.recommendation = outcome.recommendation;
        f.best = best_accuracy(grid, sc);
        f.win = is_win(grid, sc, f.recommendation);
        const auto [p, m] = resolve_target(f.recommendation, sc);
        f.accuracy = *grid.cell(p, m).accuracy;
        f.majority = majority;
        f.majority_win = is_win(grid, sc, majority);
        const auto [mp, mm] = resolve_target(majority, sc);
        f.majority_accuracy = *grid.cell(mp, mm).accuracy;
    });
    std::vector<GridResult> used;
    for (const auto& f : rep.folds) {
        rep.wins += f.win ? 1 : 0;
        rep.majority_wins += f.majority_win ? 1 : 0;
        used.push_back(*grids.at(f.dataset_id));
    }
    rep.average = baseline_average(used, sc);
    return rep;
}

inline std::vector<ScenarioConfig> all_scenarios() {
    std::vector<ScenarioConfig> out;
    for (const auto m : all_ds_methods) out.push_back(ScenarioConfig::pool_for(m));
    for (const auto p : all_pool_schemes) out.push_back(ScenarioConfig::ds_for(p));
    out.push_back(ScenarioConfig::pair());
    return out;
}

inline std::vector<PairWins> fixed_pair_wins(std::span<const DatasetRecord> records) {
    const auto sc = ScenarioConfig::pair();
    std::vector<PairWins> out;
    for (const auto p : all_pool_schemes) {
        for (const auto m : all_ds_methods) {
            out.push_back({p, m, 0});
        }
    }
    for (const auto& r : records) {
        if (!grid_complete_for(r.grid, sc)) {
            continue;
        }
        const double best = best_accuracy(r.grid, sc);
        for (auto& pw : out) {
            pw.wins += *r.grid.cell(pw.pool, pw.ds).accuracy >= best - win_tolerance ? 1 : 0;
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const PairWins& a, const PairWins& b) { return a.wins > b.wins; });
    return out;
}

/// Every scenario: pool recommendation for each fixed DS method, DS
/// recommendation for each fixed pool, and the pair recommendation.
inline LodoReport lodo_evaluate(std::span<const DatasetRecord> records, const ExperimentConfig& cfg) {
    if (records.size() < 3) {
        throw error(errc::corpus_too_small, "LODO needs at least 3 datasets, got " + std::to_string(records.size()));
    }
    LodoReport rep;
    rep.seed = cfg.seed;
    rep.n_datasets = records.size();
    for (const auto& sc : all_scenarios()) {
        rep.scenarios.push_back(lodo_scenario(records, sc, cfg));
    }
    rep.fixed_pairs = fixed_pair_wins(records);
    return rep;
}

// ---------------------------------------------------------------------------
// Report output

/// wins / n as a percentage with two decimals, truncated rather than
/// rounded (228/288 -> "79.16").
inline std::string format_rate(std::size_t wins, std::size_t n) {
    if (n == 0) {
        return "n/a";
    }
    const auto basis_points = static_cast<unsigned long long>(wins) * 10000ULL / static_cast<unsigned long long>(n);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%llu.%02llu", basis_points / 100, basis_points % 100);
    return buf;
}

/// "79.16 (228)"
inline std::string rate_cell(std::size_t wins, std::size_t n) { return format_rate(wins, n) + " (" + std::to_string(wins) + ")"; }

inline std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline void to_json(json& j, const AverageBaseline& a) {
    j = json{{"win_rate", a.win_rate},
             {"mean_wins", a.mean_wins},
             {"mean_accuracy", a.mean_accuracy},
             {"datasets", a.datasets},
             {"candidates", a.candidates}};
}
inline void from_json(const json& j, AverageBaseline& a) {
    j.at("win_rate").get_to(a.win_rate);
    j.at("mean_wins").get_to(a.mean_wins);
    j.at("mean_accuracy").get_to(a.mean_accuracy);
    j.at("datasets").get_to(a.datasets);
    j.at("candidates").get_to(a.candidates);
}

inline void to_json(json& j, const FoldResult& f) {
    j = json{{"dataset_id", f.dataset_id}, {"recommendation", f.recommendation}, {"win", f.win},
             {"accuracy", f.accuracy},     {"best", f.best},                     {"majority", f.majority},
             {"majority_win", f.majority_win}, {"majority_accuracy", f.majority_accuracy}};
}
inline void from_json(const json& j, FoldResult& f) {
    j.at("dataset_id").get_to(f.dataset_id);
    j.at("recommendation").get_to(f.recommendation);
    j.at("win").get_to(f.win);
    j.at("accuracy").get_to(f.accuracy);
    j.at("best").get_to(f.best);
    j.at("majority").get_to(f.majority);
    j.at("majority_win").get_to(f.majority_win);
    j.at("majority_accuracy").get_to(f.majority_accuracy);
}

inline void to_json(json& j, const ScenarioReport& s) {
    j = json{{"config", s.config},
             {"n", s.n()},
             {"wins", s.wins},
             {"win_rate", format_rate(s.wins, s.n())},
             {"majority_wins", s.majority_wins},
             {"majority_win_rate", format_rate(s.majority_wins, s.n())},
             {"average", s.average},
             {"folds", s.folds},
             {"excluded", s.excluded}};
}
inline void from_json(const json& j, ScenarioReport& s) {
    j.at("config").get_to(s.config);
    j.at("wins").get_to(s.wins);
    j.at("majority_wins").get_to(s.majority_wins);
    j.at("average").get_to(s.average);
    j.at("folds").get_to(s.folds);
    j.at("excluded").get_to(s.excluded);
}

inline void to_json(json& j, const PairWins& p) { j = json{{"pool", p.pool}, {"ds", p.ds}, {"wins", p.wins}}; }
inline void from_json(const json& j, PairWins& p) {
    j.at("pool").get_to(p.pool);
    j.at("ds").get_to(p.ds);
    j.at("wins").get_to(p.wins);
}

inline void to_json(json& j, const LodoReport& r) {
    j = json{{"seed", r.seed}, {"n_datasets", r.n_datasets}, {"scenarios", r.scenarios}, {"fixed_pairs", r.fixed_pairs}};
}
inline void from_json(const json& j, LodoReport& r) {
    j.at("seed").get_to(r.seed);
    j.at("n_datasets").get_to(r.n_datasets);
    j.at("scenarios").get_to(r.scenarios);
    j.at("fixed_pairs").get_to(r.fixed_pairs);
}

inline std::string average_cell(const AverageBaseline& a) {
    return format_fixed(100.0 * a.win_rate, 2) + " (" + format_fixed(a.mean_wins, 2) + ")";
}

inline std::string render_markdown(const LodoReport& r) {
    std::ostringstream md;
    md << "# Leave-one-dataset-out report\n\n";
    md << "Datasets: " << r.n_datasets << ", seed: " << r.seed << "\n\n";
    md << "Cells show win rate in percent with the win count in parentheses. "
          "Average (win rate) is the expected win rate of a uniformly random candidate with the mean win count per candidate; "
          "Average (accuracy) is the mean test accuracy over candidates and datasets.\n";

    const auto table = [&](std::string_view title, std::string_view fixed_label, Scenario which) {
        md << "\n## " << title << "\n\n";
        md << "| " << fixed_label << " | MLRS | Majority | Average (win rate) | Average (accuracy) | N |\n";
        md << "|---|---|---|---|---|---|\n";
        for (const auto& s : r.scenarios) {
            if (s.config.scenario != which) {
                continue;
            }
            const std::string label = which == Scenario::pool_ds ? "MLRS-PDS" : s.config.fixed_name();
            md << "| " << label << " | " << rate_cell(s.wins, s.n()) << " | " << rate_cell(s.majority_wins, s.n()) << " | "
               << average_cell(s.average) << " | " << format_fixed(s.average.mean_accuracy, 4) << " | " << s.n() << " |\n";
            if (which == Scenario::pool_ds) {
                for (std::size_t i = 0; i < std::min<std::size_t>(4, r.fixed_pairs.size()); ++i) {
                    const auto& p = r.fixed_pairs[i];
                    md << "| " << to_string(p.pool) << ", " << to_string(p.ds) << " | " << rate_cell(p.wins, s.n()) << " | | | | " << s.n()
                       << " |\n";
                }
            }
        }
    };
    table("Pool recommendation (MLRS-P) per fixed DS method", "Fixed DS", Scenario::pool);
    table("DS recommendation (MLRS-DS) per fixed pool", "Fixed pool", Scenario::ds);
    table("Pool and DS recommendation (MLRS-PDS) against the top 4 fixed pairs", "Configuration", Scenario::pool_ds);

    md << "\n## Exclusions\n\n";
    std::map<std::string, std::set<std::string>> excluded;
    for (const auto& s : r.scenarios) {
        for (const auto& e : s.excluded) {
            excluded[e.dataset_id].insert(e.reason);
        }
    }
    if (excluded.empty()) {
        md << "none\n";
    }
    for (const auto& [id, reasons] : excluded) {
        md << "- " << id << ":";
        for (const auto& reason : reasons) {
            md << " " << reason << ";";
        }
        md << "\n";
    }
    return md.str();
}

/// Writes report.json and report.md into dir.
inline void write_report(const LodoReport& r, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw error(errc::io_error, "cannot create " + dir.string() + ": " + ec.message());
    }
    save(dir / "report.json", "lodo_report", r);
    write_text(dir / "report.md", render_markdown(r));
}

inline LodoReport read_report(const std::filesystem::path& path) { return load<LodoReport>(path, "lodo_report"); }

}  // namespace mlrs
