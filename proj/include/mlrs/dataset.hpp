#pragma once

#include "mlrs/error.hpp"
#include "mlrs/matrix.hpp"
#include "mlrs/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mlrs {

/// Feature matrix plus dense integer labels in [0, n_classes).
struct Dataset {
    std::string id;
    Matrix features;
    std::vector<int> labels;
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names;
    int n_classes = 0;

    [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
    [[nodiscard]] std::size_t dim() const noexcept { return features.cols(); }

    [[nodiscard]] std::vector<std::size_t> class_counts() const {
        std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
        for (const int y : labels) {
            ++counts[static_cast<std::size_t>(y)];
        }
        return counts;
    }

    /// Rows in the given order; the class space is kept even if a class is absent.
    [[nodiscard]] Dataset subset(std::span<const std::size_t> rows) const {
        Dataset out;
        out.id = id;
        out.features = features.select_rows(rows);
        out.labels.reserve(rows.size());
        for (const auto r : rows) {
            out.labels.push_back(labels[r]);
        }
        out.feature_names = feature_names;
        out.class_names = class_names;
        out.n_classes = n_classes;
        return out;
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Checks the structural invariants: at least two classes, every class
/// present, labels in range, all features finite.
inline void validate(const Dataset& ds) {
    if (ds.features.rows() != ds.labels.size()) {
        throw error(errc::invalid_argument, "feature rows and label count differ in '" + ds.id + "'");
    }
    if (ds.n_classes < 2) {
        throw error(errc::single_class, "dataset '" + ds.id + "' has fewer than two classes");
    }
    std::vector<bool> seen(static_cast<std::size_t>(ds.n_classes), false);
    for (const int y : ds.labels) {
        if (y < 0 || y >= ds.n_classes) {
            throw error(errc::invalid_argument, "label out of range in '" + ds.id + "'");
        }
        seen[static_cast<std::size_t>(y)] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
        throw error(errc::invalid_argument, "a class id has no rows in '" + ds.id + "'");
    }
    for (const double v : ds.features.data()) {
        if (!std::isfinite(v)) {
            throw error(errc::invalid_argument, "non-finite feature value in '" + ds.id + "'");
        }
    }
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.emplace_back(trim(cell));
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    cells.emplace_back(trim(cell));
    return cells;
}

inline std::optional<double> parse_double(const std::string& text) {
    if (text.empty()) {
        return std::nullopt;
    }
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

}  // namespace detail

/// Parses CSV text: header row, comma separated, last column is the class
/// label. Labels are re-encoded densely in order of first appearance.
inline Dataset parse_dataset_csv(std::istream& in, std::string id) {
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!detail::trim(line).empty()) {
            header = detail::split_csv_line(line);
            break;
        }
    }
    if (header.size() < 2) {
        throw error(errc::missing_header, "expected a header row with at least one feature and a label column");
    }
    for (const auto& name : header) {
        if (detail::parse_double(name).has_value()) {
            throw error(errc::missing_header, "header cell '" + name + "' is numeric");
        }
    }

    Dataset ds;
    ds.id = std::move(id);
    const std::size_t d = header.size() - 1;
    ds.feature_names.assign(header.begin(), header.end() - 1);
    std::vector<double> values;
    std::unordered_map<std::string, int> label_ids;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) {
            continue;
        }
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) {
            throw error(errc::ragged_row, "line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                              " cells, expected " + std::to_string(header.size()));
        }
        for (std::size_t c = 0; c < d; ++c) {
            const auto v = detail::parse_double(cells[c]);
            if (!v) {
                throw error(errc::non_numeric_feature,
                            "column '" + header[c] + "' (line " + std::to_string(line_no) + "): '" + cells[c] + "'");
            }
            values.push_back(*v);
        }
        const auto [it, inserted] = label_ids.try_emplace(cells[d], static_cast<int>(ds.class_names.size()));
        if (inserted) {
            ds.class_names.push_back(cells[d]);
        }
        ds.labels.push_back(it->second);
    }
    ds.n_classes = static_cast<int>(ds.class_names.size());
    if (ds.n_classes < 2) {
        throw error(errc::single_class, "label column of '" + ds.id + "' has fewer than two distinct values");
    }
    ds.features = Matrix(ds.labels.size(), d, std::move(values));
    return ds;
}

inline Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw error(errc::io_error, "cannot open " + path.string());
    }
    return parse_dataset_csv(in, path.stem().string());
}

inline void write_dataset_csv(const Dataset& ds, std::ostream& out) {
    for (const auto& name : ds.feature_names) {
        out << name << ',';
    }
    out << "class\n";
    const auto old_precision = out.precision(17);
    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (const double v : ds.features.row(r)) {
            out << v << ',';
        }
        const auto y = static_cast<std::size_t>(ds.labels[r]);
        out << (y < ds.class_names.size() ? ds.class_names[y] : std::to_string(y)) << '\n';
    }
    out.precision(old_precision);
}

// ---------------------------------------------------------------------------
// Synthetic corpus

struct SynthSpec {
    int n = 200;
    int d = 4;
    int classes = 2;
    double cluster_std = 1.0;
    double imbalance = 0.0;    ///< 0 = uniform priors; 1 = strongest geometric skew
    double label_noise = 0.0;  ///< fraction of labels resampled uniformly
    int informative = 4;       ///< leading columns carrying class signal
    int clusters = 1;          ///< Gaussian modes per class

    friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

inline void validate(const SynthSpec& spec) {
    const auto fail = [](const std::string& msg) { throw error(errc::invalid_spec, msg); };
    if (spec.classes < 2) fail("classes must be >= 2");
    if (spec.n < 2 * spec.classes) fail("n must be >= 2 * classes");
    if (spec.d < 1) fail("d must be >= 1");
    if (spec.informative < 0 || spec.informative > spec.d) fail("informative must lie in [0, d]");
    if (!(spec.cluster_std >= 0.0) || !std::isfinite(spec.cluster_std)) fail("cluster_std must be finite and >= 0");
    if (!(spec.imbalance >= 0.0 && spec.imbalance <= 1.0)) fail("imbalance must lie in [0, 1]");
    if (!(spec.label_noise >= 0.0 && spec.label_noise <= 1.0)) fail("label_noise must lie in [0, 1]");
    if (spec.clusters < 1) fail("clusters must be >= 1");
}

/// Per-class row counts: priors proportional to r^c with r = 1 - 0.9 * imbalance,
/// largest-remainder rounding, and at least two rows per class.
inline std::vector<int> synth_class_counts(const SynthSpec& spec) {
    const auto L = static_cast<std::size_t>(spec.classes);
    const double ratio = 1.0 - 0.9 * spec.imbalance;
    std::vector<double> priors(L);
    double total = 0.0;
    for (std::size_t c = 0; c < L; ++c) {
        priors[c] = std::pow(ratio, static_cast<double>(c));
        total += priors[c];
    }
    std::vector<int> counts(L);
    std::vector<std::pair<double, std::size_t>> remainders;
    int assigned = 0;
    for (std::size_t c = 0; c < L; ++c) {
        const double exact = spec.n * priors[c] / total;
        counts[c] = static_cast<int>(std::floor(exact));
        assigned += counts[c];
        remainders.emplace_back(exact - counts[c], c);
    }
    std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < spec.n; ++i, ++assigned) {
        ++counts[remainders[i % L].second];
    }
    for (std::size_t c = 0; c < L; ++c) {
        while (counts[c] < 2) {
            const auto donor = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
            --counts[donor];
            ++counts[c];
        }
    }
    return counts;
}

/// Gaussian class clusters (rows of a class cycle through its modes); a pure
/// function of (spec, seed).
inline Dataset synth_dataset(const SynthSpec& spec, std::uint64_t seed, std::string id = "synth") {
    validate(spec);
    Rng rng(derive_seed(seed, "synth"));
    const auto L = static_cast<std::size_t>(spec.classes);
    const auto d = static_cast<std::size_t>(spec.d);
    const auto informative = static_cast<std::size_t>(spec.informative);

    const auto modes = static_cast<std::size_t>(spec.clusters);
    Matrix means(L * modes, informative);
    for (auto& m : means.data()) {
        m = rng.uniform(-2.0, 2.0);
    }

    const auto counts = synth_class_counts(spec);
    const auto n = static_cast<std::size_t>(spec.n);
    std::vector<int> labels;
    labels.reserve(n);
    for (std::size_t c = 0; c < L; ++c) {
        labels.insert(labels.end(), static_cast<std::size_t>(counts[c]), static_cast<int>(c));
    }

    Matrix X(n, d);
    for (std::size_t r = 0, within = 0; r < n; ++r) {
        within = r > 0 && labels[r] == labels[r - 1] ? within + 1 : 0;
        const auto mode = static_cast<std::size_t>(labels[r]) * modes + within % modes;
        for (std::size_t j = 0; j < d; ++j) {
            X(r, j) = j < informative ? means(mode, j) + spec.cluster_std * rng.normal() : rng.normal();
        }
    }

    // The first row of each class is never relabelled, so every class survives.
    const auto n_noisy = static_cast<std::size_t>(std::llround(spec.label_noise * static_cast<double>(n)));
    if (n_noisy > 0) {
        std::vector<std::size_t> candidates;
        for (std::size_t r = 0; r < n; ++r) {
            if (r == 0 || labels[r] != labels[r - 1]) {
                continue;
            }
            candidates.push_back(r);
        }
        rng.shuffle(std::span(candidates));
        for (std::size_t i = 0; i < std::min(n_noisy, candidates.size()); ++i) {
            labels[candidates[i]] = static_cast<int>(rng.below(L));
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span(order));

    Dataset ds;
    ds.id = std::move(id);
    ds.features = X.select_rows(order);
    ds.labels.reserve(n);
    for (const auto r : order) {
        ds.labels.push_back(labels[r]);
    }
    for (std::size_t j = 0; j < d; ++j) {
        ds.feature_names.push_back("x" + std::to_string(j));
    }
    for (std::size_t c = 0; c < L; ++c) {
        ds.class_names.push_back("c" + std::to_string(c));
    }
    ds.n_classes = spec.classes;
    return ds;
}

/// One corpus manifest entry.
struct SynthRecord {
    std::string id;
    SynthSpec spec;
    std::uint64_t seed = 0;
};

/// Manifest spanning sample size, dimensionality, class count, modes per
/// class, overlap, imbalance and label noise.
inline std::vector<SynthRecord> default_corpus_manifest(std::size_t count, std::uint64_t seed) {
    std::vector<SynthRecord> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(derive_seed(seed, "manifest", i));
        SynthSpec spec;
        spec.classes = 2 + static_cast<int>(rng.below(3));
        spec.d = 2 + static_cast<int>(rng.below(9));
        spec.informative = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.d)));
        spec.n = 80 + 20 * static_cast<int>(rng.below(9));
        spec.cluster_std = 0.3 + 2.2 * rng.uniform();
        spec.imbalance = rng.uniform() < 0.5 ? 0.0 : rng.uniform(0.1, 0.9);
        spec.label_noise = rng.uniform() < 0.5 ? 0.0 : rng.uniform(0.0, 0.25);
        spec.clusters = 1 + static_cast<int>(rng.below(3));
        char id[32];
        std::snprintf(id, sizeof id, "synth_%03zu", i);
        out.push_back({id, spec, derive_seed(seed, "dataset", i)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Splitting and scaling

struct SplitPair {
    Dataset train;
    Dataset test;
    std::uint64_t seed = 0;
    std::vector<std::size_t> train_rows;  ///< parent row indices, in train order
    std::vector<std::size_t> test_rows;
};

/// Per-class train quotas: floor(ratio * count) plus largest-remainder top-up
/// so the total equals round(ratio * n).
inline std::vector<std::size_t> stratified_quotas(std::span<const std::size_t> counts, double train_ratio) {
    std::size_t n = 0;
    for (const auto c : counts) {
        n += c;
    }
    const auto target = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(n)));
    std::vector<std::size_t> quota(counts.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        const double exact = train_ratio * static_cast<double>(counts[c]);
        quota[c] = static_cast<std::size_t>(std::floor(exact));
        assigned += quota[c];
        remainders.emplace_back(exact - std::floor(exact), c);
    }
    std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < target && i < remainders.size(); ++i, ++assigned) {
        ++quota[remainders[i].second];
    }
    return quota;
}

inline SplitPair stratified_split(const Dataset& ds, double train_ratio, std::uint64_t seed) {
    if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
        throw error(errc::invalid_argument, "train_ratio must lie in (0, 1)");
    }
    const auto counts = ds.class_counts();
    const auto quota = stratified_quotas(counts, train_ratio);
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (std::floor(train_ratio * static_cast<double>(counts[c])) < 1.0 || quota[c] < 1 || counts[c] - quota[c] < 1) {
            throw error(errc::class_too_small, "class " + std::to_string(c) + " of '" + ds.id + "' has " +
                                                   std::to_string(counts[c]) + " rows");
        }
    }

    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, "split"));
    rng.shuffle(std::span(order));

    SplitPair out;
    out.seed = seed;
    std::vector<std::size_t> taken(counts.size(), 0);
    for (const auto r : order) {
        const auto c = static_cast<std::size_t>(ds.labels[r]);
        if (taken[c] < quota[c]) {
            ++taken[c];
            out.train_rows.push_back(r);
        } else {
            out.test_rows.push_back(r);
        }
    }
    out.train = ds.subset(out.train_rows);
    out.test = ds.subset(out.test_rows);
    return out;
}

struct ScalerParams {
    std::vector<double> means;
    std::vector<double> stds;  ///< population std; 1 for constant columns

    [[nodiscard]] Dataset apply(const Dataset& ds) const {
        Dataset out = ds;
        for (std::size_t r = 0; r < out.size(); ++r) {
            auto row = out.features.row(r);
            for (std::size_t j = 0; j < row.size(); ++j) {
                row[j] = (row[j] - means[j]) / stds[j];
            }
        }
        return out;
    }

    [[nodiscard]] std::vector<double> apply(std::span<const double> x) const {
        std::vector<double> out(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) {
            out[j] = (x[j] - means[j]) / stds[j];
        }
        return out;
    }

    friend bool operator==(const ScalerParams&, const ScalerParams&) = default;
};

inline ScalerParams zscore_fit(const Matrix& X) {
    const std::size_t n = X.rows();
    const std::size_t d = X.cols();
    ScalerParams params{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
    if (n == 0) {
        return params;
    }
    for (std::size_t j = 0; j < d; ++j) {
        double sum = 0.0;
        double lo = X(0, j);
        double hi = X(0, j);
        for (std::size_t r = 0; r < n; ++r) {
            sum += X(r, j);
            lo = std::min(lo, X(r, j));
            hi = std::max(hi, X(r, j));
        }
        const double mean = sum / static_cast<double>(n);
        params.means[j] = mean;
        if (lo == hi) {
            params.means[j] = lo;
            continue;
        }
        double ss = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double diff = X(r, j) - mean;
            ss += diff * diff;
        }
        const double sd = std::sqrt(ss / static_cast<double>(n));
        params.stds[j] = sd > 0.0 ? sd : 1.0;
    }
    return params;
}

struct ScaledDatasets {
    ScalerParams params;
    Dataset train;
    std::vector<Dataset> others;
};

/// Fits on train only and transforms train plus every dataset in others.
inline ScaledDatasets zscore_fit_apply(const Dataset& train, std::span<const Dataset> others = {}) {
    if (train.size() == 0) {
        throw error(errc::invalid_argument, "cannot fit a scaler on an empty train partition");
    }
    ScaledDatasets out;
    out.params = zscore_fit(train.features);
    out.train = out.params.apply(train);
    out.others.reserve(others.size());
    for (const auto& ds : others) {
        out.others.push_back(out.params.apply(ds));
    }
    return out;
}

}  // namespace mlrs
