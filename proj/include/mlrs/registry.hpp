#pragma once

// Versioned JSON forms for models, pools and meta-level artefacts, plus the
// CSV forms of meta-feature rows and meta-datasets.
//
// Every top-level document is an envelope
//   {"format": "mlrs", "version": 1, "kind": "<type>", "payload": {...}}
// and load() rejects unknown formats, newer versions and kind mismatches.

#include "mlrs/dataset.hpp"
#include "mlrs/error.hpp"
#include "mlrs/grid.hpp"
#include "mlrs/learners.hpp"
#include "mlrs/matrix.hpp"
#include "mlrs/meta_features.hpp"
#include "mlrs/pool.hpp"
#include "mlrs/recommender.hpp"
#include "mlrs/selection.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>

namespace mlrs {

using json = nlohmann::json;

inline constexpr int registry_version = 1;

// ---------------------------------------------------------------------------
// Enums

inline void to_json(json& j, PoolScheme s) { j = std::string(to_string(s)); }
inline void from_json(const json& j, PoolScheme& s) { s = parse_pool_scheme(j.get<std::string>()); }
inline void to_json(json& j, DsMethod m) { j = std::string(to_string(m)); }
inline void from_json(const json& j, DsMethod& m) { m = parse_ds_method(j.get<std::string>()); }
inline void to_json(json& j, Scenario s) { j = std::string(to_string(s)); }
inline void from_json(const json& j, Scenario& s) { s = parse_scenario(j.get<std::string>()); }

namespace detail {

template <typename T>
json optional_to_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from_json(const json& j, std::string_view key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    return it->template get<T>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Core types

inline void to_json(json& j, const Matrix& m) { j = json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}}; }
inline void from_json(const json& j, Matrix& m) {
    auto data = j.at("data").get<std::vector<double>>();
    const auto rows = j.at("rows").get<std::size_t>();
    const auto cols = j.at("cols").get<std::size_t>();
    if (data.size() != rows * cols) {
        throw error(errc::invalid_argument, "matrix payload has the wrong number of values");
    }
    m = Matrix(rows, cols, std::move(data));
}

inline void to_json(json& j, const LinearParams& p) {
    j = json{{"n_classes", p.n_classes}, {"n_features", p.n_features}, {"weights", p.weights}, {"bias", p.bias}};
}
inline void from_json(const json& j, LinearParams& p) {
    j.at("n_classes").get_to(p.n_classes);
    j.at("n_features").get_to(p.n_features);
    j.at("weights").get_to(p.weights);
    j.at("bias").get_to(p.bias);
}

inline void to_json(json& j, const TreeNode& n) {
    j = json{{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}, {"depth", n.depth}, {"freq", n.freq}};
}
inline void from_json(const json& j, TreeNode& n) {
    j.at("feature").get_to(n.feature);
    j.at("threshold").get_to(n.threshold);
    j.at("left").get_to(n.left);
    j.at("right").get_to(n.right);
    j.at("depth").get_to(n.depth);
    j.at("freq").get_to(n.freq);
}

inline void to_json(json& j, const TrainedModel& model) {
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, TreeModel>) {
                j = json{{"kind", "tree"}, {"n_classes", m.n_classes}, {"nodes", m.nodes}};
            } else if constexpr (std::is_same_v<T, PerceptronModel>) {
                j = json{{"kind", "perceptron"}, {"params", m.params}};
            } else if constexpr (std::is_same_v<T, LogisticModel>) {
                j = json{{"kind", "logistic"}, {"params", m.params}};
            } else {
                j = json{{"kind", "gaussian_nb"}, {"n_classes", m.n_classes}, {"n_features", m.n_features},
                         {"priors", m.priors},    {"means", m.means},         {"variances", m.variances}};
            }
        },
        model.variant());
}
inline void from_json(const json& j, TrainedModel& model) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "tree") {
        TreeModel m;
        j.at("n_classes").get_to(m.n_classes);
        j.at("nodes").get_to(m.nodes);
        model = TrainedModel(std::move(m));
    } else if (kind == "perceptron") {
        model = TrainedModel(PerceptronModel{j.at("params").get<LinearParams>()});
    } else if (kind == "logistic") {
        model = TrainedModel(LogisticModel{j.at("params").get<LinearParams>()});
    } else if (kind == "gaussian_nb") {
        GaussianNbModel m;
        j.at("n_classes").get_to(m.n_classes);
        j.at("n_features").get_to(m.n_features);
        j.at("priors").get_to(m.priors);
        j.at("means").get_to(m.means);
        j.at("variances").get_to(m.variances);
        model = TrainedModel(std::move(m));
    } else {
        throw error(errc::invalid_argument, "unknown model kind '" + kind + "'");
    }
}

inline void to_json(json& j, const Pool& p) {
    j = json{{"scheme", p.scheme},
             {"seed", p.seed},
             {"models", p.models},
             {"boost_weights", p.boost_weights},
             {"bootstrap_rows", p.bootstrap_rows}};
}
inline void from_json(const json& j, Pool& p) {
    j.at("scheme").get_to(p.scheme);
    j.at("seed").get_to(p.seed);
    j.at("models").get_to(p.models);
    j.at("boost_weights").get_to(p.boost_weights);
    j.at("bootstrap_rows").get_to(p.bootstrap_rows);
}

inline void to_json(json& j, const MetaDesModel& m) {
    j = json{{"meta_classifier", m.meta_classifier}, {"k", m.k}, {"kp", m.kp}, {"threshold", m.threshold}, {"n_models", m.n_models},
             {"dsel_profiles", m.dsel_profiles}};
}
inline void from_json(const json& j, MetaDesModel& m) {
    j.at("meta_classifier").get_to(m.meta_classifier);
    j.at("k").get_to(m.k);
    j.at("kp").get_to(m.kp);
    j.at("threshold").get_to(m.threshold);
    j.at("n_models").get_to(m.n_models);
    j.at("dsel_profiles").get_to(m.dsel_profiles);
}

inline void to_json(json& j, const DsOptions& o) {
    j = json{{"k", o.k}, {"kp", o.kp}, {"des_mi_p", o.des_mi_p}, {"metades_threshold", o.metades_threshold}};
}
inline void from_json(const json& j, DsOptions& o) {
    o.k = j.value("k", o.k);
    o.kp = j.value("kp", o.kp);
    o.des_mi_p = j.value("des_mi_p", o.des_mi_p);
    o.metades_threshold = j.value("metades_threshold", o.metades_threshold);
}

inline void to_json(json& j, const SynthSpec& s) {
    j = json{{"n", s.n},
             {"d", s.d},
             {"classes", s.classes},
             {"cluster_std", s.cluster_std},
             {"imbalance", s.imbalance},
             {"label_noise", s.label_noise},
             {"informative", s.informative},
             {"clusters", s.clusters}};
}
inline void from_json(const json& j, SynthSpec& s) {
    s.n = j.value("n", s.n);
    s.d = j.value("d", s.d);
    s.classes = j.value("classes", s.classes);
    s.cluster_std = j.value("cluster_std", s.cluster_std);
    s.imbalance = j.value("imbalance", s.imbalance);
    s.label_noise = j.value("label_noise", s.label_noise);
    s.informative = j.value("informative", s.informative);
    s.clusters = j.value("clusters", s.clusters);
}

inline void to_json(json& j, const SynthRecord& r) { j = json{{"id", r.id}, {"spec", r.spec}, {"seed", r.seed}}; }
inline void from_json(const json& j, SynthRecord& r) {
    j.at("id").get_to(r.id);
    r.spec = j.value("spec", SynthSpec{});
    r.seed = j.value("seed", std::uint64_t{0});
}

// ---------------------------------------------------------------------------
// Meta level

inline void to_json(json& j, const MetaFeatureVector& v) {
    j = json{{"schema_version", v.schema_version}, {"names", v.names}, {"values", v.values}, {"imputed", v.imputed}};
}
inline void from_json(const json& j, MetaFeatureVector& v) {
    j.at("schema_version").get_to(v.schema_version);
    j.at("names").get_to(v.names);
    j.at("values").get_to(v.values);
    j.at("imputed").get_to(v.imputed);
}

inline void to_json(json& j, const GridCell& c) {
    j = json{{"accuracy", detail::optional_to_json(c.accuracy)}};
    if (!c.ok()) {
        j["excluded"] = c.excluded_reason;
    }
}
inline void from_json(const json& j, GridCell& c) {
    c.accuracy = detail::optional_from_json<double>(j, "accuracy");
    c.excluded_reason = j.value("excluded", std::string{});
}

inline void to_json(json& j, const GridResult& g) {
    json cells = json::object();
    for (const auto p : all_pool_schemes) {
        json row = json::object();
        for (const auto m : all_ds_methods) {
            row[std::string(to_string(m))] = g.cell(p, m);
        }
        cells[std::string(to_string(p))] = std::move(row);
    }
    j = json{{"dataset_id", g.dataset_id}, {"seed", g.seed}, {"cells", std::move(cells)}};
}
inline void from_json(const json& j, GridResult& g) {
    j.at("dataset_id").get_to(g.dataset_id);
    j.at("seed").get_to(g.seed);
    const auto& cells = j.at("cells");
    for (const auto p : all_pool_schemes) {
        for (const auto m : all_ds_methods) {
            g.cell(p, m) = cells.at(std::string(to_string(p))).at(std::string(to_string(m))).get<GridCell>();
        }
    }
}

inline void to_json(json& j, const DatasetRecord& r) { j = json{{"id", r.id}, {"meta_features", r.features}, {"grid", r.grid}}; }
inline void from_json(const json& j, DatasetRecord& r) {
    j.at("id").get_to(r.id);
    j.at("meta_features").get_to(r.features);
    j.at("grid").get_to(r.grid);
}

inline void to_json(json& j, const ScenarioConfig& c) {
    j = json{{"scenario", c.scenario}, {"fixed_ds", detail::optional_to_json(c.fixed_ds)}, {"fixed_pool", detail::optional_to_json(c.fixed_pool)}};
}
inline void from_json(const json& j, ScenarioConfig& c) {
    j.at("scenario").get_to(c.scenario);
    c.fixed_ds = detail::optional_from_json<DsMethod>(j, "fixed_ds");
    c.fixed_pool = detail::optional_from_json<PoolScheme>(j, "fixed_pool");
}

inline void to_json(json& j, const MetaTarget& t) {
    j = json{{"pool", detail::optional_to_json(t.pool)}, {"ds", detail::optional_to_json(t.ds)}};
}
inline void from_json(const json& j, MetaTarget& t) {
    t.pool = detail::optional_from_json<PoolScheme>(j, "pool");
    t.ds = detail::optional_from_json<DsMethod>(j, "ds");
}

inline void to_json(json& j, const Exclusion& e) { j = json{{"dataset_id", e.dataset_id}, {"reason", e.reason}}; }
inline void from_json(const json& j, Exclusion& e) {
    j.at("dataset_id").get_to(e.dataset_id);
    j.at("reason").get_to(e.reason);
}

inline void to_json(json& j, const ScalerParams& s) { j = json{{"means", s.means}, {"stds", s.stds}}; }
inline void from_json(const json& j, ScalerParams& s) {
    j.at("means").get_to(s.means);
    j.at("stds").get_to(s.stds);
}

inline void to_json(json& j, const MetaModelOptions& o) {
    j = json{{"rf_trees", o.rf_trees}, {"rf_max_depth", o.rf_max_depth}, {"knn_k", o.knn_k}};
}
inline void from_json(const json& j, MetaModelOptions& o) {
    o.rf_trees = j.value("rf_trees", o.rf_trees);
    o.rf_max_depth = j.value("rf_max_depth", o.rf_max_depth);
    o.knn_k = j.value("knn_k", o.knn_k);
}

inline void to_json(json& j, const MetaModel& m) {
    j = json{{"kind", std::string(to_string(m.kind))}, {"n_labels", m.n_labels}, {"scaler", m.scaler}, {"warnings", m.warnings}};
    if (m.kind == MetaModelKind::random_forest) {
        j["max_depth"] = m.max_depth;
        j["trees"] = m.trees;
    } else {
        j["k"] = m.k;
        j["train_x"] = m.train_x;
        j["train_y"] = m.train_y;
    }
}
inline void from_json(const json& j, MetaModel& m) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind != "random_forest" && kind != "knn") {
        throw error(errc::invalid_argument, "unknown meta-model kind '" + kind + "'");
    }
    m.kind = kind == "knn" ? MetaModelKind::knn : MetaModelKind::random_forest;
    j.at("n_labels").get_to(m.n_labels);
    j.at("scaler").get_to(m.scaler);
    j.at("warnings").get_to(m.warnings);
    if (m.kind == MetaModelKind::random_forest) {
        j.at("max_depth").get_to(m.max_depth);
        j.at("trees").get_to(m.trees);
    } else {
        j.at("k").get_to(m.k);
        j.at("train_x").get_to(m.train_x);
        j.at("train_y").get_to(m.train_y);
    }
}

inline void to_json(json& j, const ChainModel& c) { j = json{{"stage1", c.stage1}, {"stage2", c.stage2}}; }
inline void from_json(const json& j, ChainModel& c) {
    j.at("stage1").get_to(c.stage1);
    j.at("stage2").get_to(c.stage2);
}

inline void to_json(json& j, const Recommender& r) {
    j = json{{"config", r.config}, {"schema_version", r.schema_version}, {"n_features", r.n_features}};
    if (const auto* chain = std::get_if<ChainModel>(&r.model)) {
        j["chain"] = *chain;
    } else {
        j["model"] = std::get<MetaModel>(r.model);
    }
}
inline void from_json(const json& j, Recommender& r) {
    j.at("config").get_to(r.config);
    j.at("schema_version").get_to(r.schema_version);
    j.at("n_features").get_to(r.n_features);
    if (j.contains("chain")) {
        r.model = j.at("chain").get<ChainModel>();
    } else {
        r.model = j.at("model").get<MetaModel>();
    }
}

// ---------------------------------------------------------------------------
// Envelopes and files

template <typename T>
json to_document(std::string_view kind, const T& payload) {
    return json{{"format", "mlrs"}, {"version", registry_version}, {"kind", kind}, {"payload", payload}};
}

template <typename T>
T from_document(const json& doc, std::string_view kind) {
    if (doc.value("format", std::string{}) != "mlrs") {
        throw error(errc::invalid_argument, "not an mlrs document");
    }
    if (doc.value("version", 0) > registry_version) {
        throw error(errc::invalid_argument, "document version " + std::to_string(doc.value("version", 0)) + " is newer than supported");
    }
    if (doc.value("kind", std::string{}) != kind) {
        throw error(errc::invalid_argument, "expected a '" + std::string(kind) + "' document, got '" + doc.value("kind", std::string{}) + "'");
    }
    return doc.at("payload").get<T>();
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        throw error(errc::io_error, "cannot write " + path.string());
    }
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw error(errc::io_error, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json read_json(const std::filesystem::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw error(errc::io_error, path.string() + ": " + e.what());
    }
}

template <typename T>
void save(const std::filesystem::path& path, std::string_view kind, const T& payload) {
    write_text(path, to_document(kind, payload).dump(2) + "\n");
}

template <typename T>
T load(const std::filesystem::path& path, std::string_view kind) {
    return from_document<T>(read_json(path), kind);
}

// ---------------------------------------------------------------------------
// CSV forms

namespace detail {

inline std::string format_double(double v) {
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
}

}  // namespace detail

inline std::string meta_feature_csv_header() {
    std::string out = "dataset_id,schema_version";
    for (const auto name : meta_feature_names) {
        out += ',';
        out += name;
    }
    return out;
}

inline std::string meta_feature_csv_row(std::string_view dataset_id, const MetaFeatureVector& v) {
    std::string out(dataset_id);
    out += ',';
    out += v.schema_version;
    for (const double x : v.values) {
        out += ',';
        out += detail::format_double(x);
    }
    return out;
}

/// dataset_id, schema_version, the 55 schema columns, target_pool, target_ds (empty when
/// the scenario does not predict that half).
inline void write_meta_dataset_csv(const MetaDataset& mt, std::ostream& out) {
    out << meta_feature_csv_header() << ",target_pool,target_ds\n";
    for (const auto& row : mt.rows) {
        out << meta_feature_csv_row(row.dataset_id, row.features) << ',' << (row.target.pool ? to_string(*row.target.pool) : "") << ','
            << (row.target.ds ? to_string(*row.target.ds) : "") << '\n';
    }
}

/// Reads what write_meta_dataset_csv emits. The imputation mask is not part
/// of the CSV and comes back as all zeros.
inline MetaDataset read_meta_dataset_csv(std::istream& in, const ScenarioConfig& cfg) {
    MetaDataset mt;
    mt.config = cfg;
    std::string line;
    if (!std::getline(in, line)) {
        throw error(errc::missing_header, "meta-dataset CSV is empty");
    }
    if (detail::trim(line) != meta_feature_csv_header() + ",target_pool,target_ds") {
        throw error(errc::schema_mismatch, "meta-dataset CSV header does not match schema " + std::string(meta_schema_version));
    }
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) {
            continue;
        }
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != meta_feature_count + 4) {
            throw error(errc::ragged_row, "meta-dataset row has " + std::to_string(cells.size()) + " cells");
        }
        MetaRow row;
        row.dataset_id = cells[0];
        if (cells[1] != meta_schema_version) {
            throw error(errc::schema_mismatch, "row '" + cells[0] + "' uses schema " + cells[1]);
        }
        row.features.names.assign(meta_feature_names.begin(), meta_feature_names.end());
        row.features.imputed.assign(meta_feature_count, 0);
        for (std::size_t i = 0; i < meta_feature_count; ++i) {
            const auto v = detail::parse_double(cells[i + 2]);
            if (!v) {
                throw error(errc::non_numeric_feature, "meta-dataset cell '" + cells[i + 2] + "' is not numeric");
            }
            row.features.values.push_back(*v);
        }
        if (!cells[meta_feature_count + 2].empty()) row.target.pool = parse_pool_scheme(cells[meta_feature_count + 2]);
        if (!cells[meta_feature_count + 3].empty()) row.target.ds = parse_ds_method(cells[meta_feature_count + 3]);
        mt.rows.push_back(std::move(row));
    }
    return mt;
}

}  // namespace mlrs
