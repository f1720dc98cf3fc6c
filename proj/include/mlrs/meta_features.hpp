#pragma once

// Dataset characterisation, schema "mfs-1": 55 meta-features in six groups
// (general, statistical, information-theoretic, model-based, landmarking,
// complexity). Multi-valued measures are summarised as population mean / sd.
//
// Extraction first puts the rows in a canonical (lexicographic) order, so
// the vector is a function of the row multiset and the seed only.

#include "mlrs/dataset.hpp"
#include "mlrs/learners.hpp"
#include "mlrs/rng.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mlrs {

inline constexpr std::string_view meta_schema_version = "mfs-1";

inline constexpr std::array<std::string_view, 55> meta_feature_names{
    // general
    "nr_inst", "nr_attr", "nr_class", "attr_to_inst", "freq_class.mean", "freq_class.sd",
    // statistical
    "mean.mean", "mean.sd", "sd.mean", "sd.sd", "skewness.mean", "skewness.sd", "kurtosis.mean", "kurtosis.sd", "cor_abs.mean",
    "cor_abs.sd", "iq_range.mean", "iq_range.sd", "var.mean", "var.sd", "range.mean", "range.sd", "sparsity.mean", "sparsity.sd",
    "nr_outliers", "nr_cor_attr",
    // information-theoretic
    "attr_ent.mean", "attr_ent.sd", "class_ent", "joint_ent.mean", "joint_ent.sd", "mut_inf.mean", "mut_inf.sd", "eq_num_attr",
    "ns_ratio",
    // model-based
    "leaves", "nodes", "tree_depth.mean", "tree_depth.sd", "leaves_per_class.mean", "leaves_per_class.sd", "nodes_per_attr",
    // landmarking
    "best_node", "worst_node", "random_node", "one_nn", "naive_bayes",
    // complexity
    "f1", "f2", "f3", "n1", "n3", "t2", "c1", "c2"};

inline constexpr std::size_t meta_feature_count = meta_feature_names.size();

inline std::size_t meta_feature_index(std::string_view name) {
    const auto it = std::find(meta_feature_names.begin(), meta_feature_names.end(), name);
    if (it == meta_feature_names.end()) {
        throw error(errc::invalid_argument, "unknown meta-feature '" + std::string(name) + "'");
    }
    return static_cast<std::size_t>(it - meta_feature_names.begin());
}

struct MetaFeatureVector {
    std::string schema_version{meta_schema_version};
    std::vector<std::string> names;
    std::vector<double> values;
    std::vector<std::uint8_t> imputed;  ///< 1 where the raw value was NaN or infinite

    [[nodiscard]] double operator[](std::string_view name) const { return values[meta_feature_index(name)]; }

    friend bool operator==(const MetaFeatureVector&, const MetaFeatureVector&) = default;
};

struct MetaFeatureOptions {
    int entropy_bins = 10;
    int landmark_folds = 4;
};

// ---------------------------------------------------------------------------
// Small numeric helpers

struct Summary {
    double mean = 0.0;
    double sd = 0.0;

    friend bool operator==(const Summary&, const Summary&) = default;
};

/// Population mean and sd; (0, 0) for an empty list.
inline Summary summarize_values(std::span<const double> values) {
    if (values.empty()) {
        return {};
    }
    double sum = 0.0;
    for (const double v : values) {
        sum += v;
    }
    const double mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (const double v : values) {
        ss += (v - mean) * (v - mean);
    }
    return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

struct ImputedValues {
    std::vector<double> values;
    std::vector<std::uint8_t> mask;
};

/// Non-finite entries become 0 and are flagged in the mask.
inline ImputedValues impute_vector(std::span<const double> raw) {
    ImputedValues out{std::vector<double>(raw.begin(), raw.end()), std::vector<std::uint8_t>(raw.size(), 0)};
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!std::isfinite(raw[i])) {
            out.values[i] = 0.0;
            out.mask[i] = 1;
        }
    }
    return out;
}

namespace detail {

inline constexpr double nan = std::numeric_limits<double>::quiet_NaN();

/// Summary over the finite entries; NaN when none are finite.
inline Summary summarize_finite(std::span<const double> values) {
    std::vector<double> finite;
    for (const double v : values) {
        if (std::isfinite(v)) {
            finite.push_back(v);
        }
    }
    if (finite.empty()) {
        return {nan, nan};
    }
    return summarize_values(finite);
}

inline double quantile(std::vector<double> sorted_values, double q) {
    std::sort(sorted_values.begin(), sorted_values.end());
    const double pos = q * static_cast<double>(sorted_values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted_values.size() - 1);
    return sorted_values[lo] + (pos - static_cast<double>(lo)) * (sorted_values[hi] - sorted_values[lo]);
}

inline double entropy_bits(std::span<const double> counts) {
    double total = 0.0;
    for (const double c : counts) {
        total += c;
    }
    double h = 0.0;
    for (const double c : counts) {
        if (c > 0.0) {
            const double p = c / total;
            h -= p * std::log2(p);
        }
    }
    return h;
}

/// Equal-width bin index of every value.
inline std::vector<int> discretize(std::span<const double> values, int bins) {
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    std::vector<int> out(values.size(), 0);
    if (hi > lo) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            const int b = static_cast<int>(std::floor((values[i] - lo) / (hi - lo) * bins));
            out[i] = std::clamp(b, 0, bins - 1);
        }
    }
    return out;
}

struct InfoTheory {
    std::vector<double> attr_ent;
    std::vector<double> joint_ent;
    std::vector<double> mut_inf;
    double class_ent = 0.0;
};

inline InfoTheory info_theory(const Matrix& X, std::span<const int> y, int n_classes, int bins) {
    InfoTheory out;
    const auto L = static_cast<std::size_t>(n_classes);
    std::vector<double> class_counts(L, 0.0);
    for (const int c : y) {
        class_counts[static_cast<std::size_t>(c)] += 1.0;
    }
    out.class_ent = entropy_bits(class_counts);
    const auto B = static_cast<std::size_t>(bins);
    for (std::size_t j = 0; j < X.cols(); ++j) {
        const auto column = X.column(j);
        const auto binned = discretize(column, bins);
        std::vector<double> marginal(B, 0.0);
        std::vector<double> joint(B * L, 0.0);
        for (std::size_t r = 0; r < binned.size(); ++r) {
            const auto b = static_cast<std::size_t>(binned[r]);
            marginal[b] += 1.0;
            joint[b * L + static_cast<std::size_t>(y[r])] += 1.0;
        }
        const double ha = entropy_bits(marginal);
        const double hj = entropy_bits(joint);
        out.attr_ent.push_back(ha);
        out.joint_ent.push_back(hj);
        out.mut_inf.push_back(ha + out.class_ent - hj);
    }
    return out;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) {
        return nan;
    }
    return sab / std::sqrt(saa * sbb);
}

/// Rows sorted lexicographically by (features, label).
inline Dataset canonical_order(const Dataset& ds) {
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ra = ds.features.row(a);
        const auto rb = ds.features.row(b);
        for (std::size_t j = 0; j < ra.size(); ++j) {
            if (ra[j] != rb[j]) {
                return ra[j] < rb[j];
            }
        }
        return ds.labels[a] < ds.labels[b];
    });
    return ds.subset(order);
}

inline std::uint64_t row_hash(std::span<const double> row, int label, std::uint64_t seed) {
    std::uint64_t h = derive_seed(seed, "row", label);
    for (const double v : row) {
        h = derive_seed(h, std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v));
    }
    return h;
}

/// Stratified fold ids keyed by row content: within each class, rows are
/// ranked by content hash and dealt round-robin.
inline std::vector<int> content_folds(const Dataset& ds, int folds, std::uint64_t seed) {
    std::vector<int> fold(ds.size(), 0);
    for (int c = 0; c < ds.n_classes; ++c) {
        std::vector<std::pair<std::uint64_t, std::size_t>> members;
        for (std::size_t r = 0; r < ds.size(); ++r) {
            if (ds.labels[r] == c) {
                members.emplace_back(row_hash(ds.features.row(r), c, seed), r);
            }
        }
        std::sort(members.begin(), members.end());
        for (std::size_t i = 0; i < members.size(); ++i) {
            fold[members[i].second] = static_cast<int>(i % static_cast<std::size_t>(folds));
        }
    }
    return fold;
}

inline Matrix single_column(const Matrix& X, std::size_t j) {
    Matrix out(X.rows(), 1);
    for (std::size_t r = 0; r < X.rows(); ++r) {
        out(r, 0) = X(r, j);
    }
    return out;
}

inline double accuracy(std::span<const int> predicted, std::span<const int> truth) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ok += predicted[i] == truth[i] ? 1 : 0;
    }
    return static_cast<double>(ok) / static_cast<double>(truth.size());
}

struct Landmarks {
    double best_node = nan;
    double worst_node = nan;
    double random_node = nan;
    double one_nn = nan;
    double naive_bayes = nan;
};

inline Landmarks landmarking(const Dataset& ds, const MetaFeatureOptions& opts, std::uint64_t seed) {
    const auto folds = content_folds(ds, opts.landmark_folds, seed);
    Rng rng(derive_seed(seed, "random_node"));
    const auto random_attr = static_cast<std::size_t>(rng.below(ds.dim()));
    std::array<double, 5> sums{};
    int used = 0;
    for (int f = 0; f < opts.landmark_folds; ++f) {
        std::vector<std::size_t> train_rows;
        std::vector<std::size_t> test_rows;
        for (std::size_t r = 0; r < ds.size(); ++r) {
            (folds[r] == f ? test_rows : train_rows).push_back(r);
        }
        if (train_rows.empty() || test_rows.empty()) {
            continue;
        }
        ++used;
        const Dataset train = ds.subset(train_rows);
        const Dataset test = ds.subset(test_rows);

        const auto info = info_theory(train.features, train.labels, train.n_classes, opts.entropy_bins);
        const auto best_attr = static_cast<std::size_t>(std::max_element(info.mut_inf.begin(), info.mut_inf.end()) - info.mut_inf.begin());
        const auto worst_attr = static_cast<std::size_t>(std::min_element(info.mut_inf.begin(), info.mut_inf.end()) - info.mut_inf.begin());
        const std::vector<double> ones(train.size(), 1.0);
        const auto node_accuracy = [&](std::size_t attr) {
            const auto model = train_tree(single_column(train.features, attr), train.labels, train.n_classes, ones, TreeOptions{1, {}});
            return accuracy(model.predict(single_column(test.features, attr)), test.labels);
        };
        sums[0] += node_accuracy(best_attr);
        sums[1] += node_accuracy(worst_attr);
        sums[2] += node_accuracy(random_attr);

        std::vector<int> nn_pred(test.size());
        for (std::size_t r = 0; r < test.size(); ++r) {
            nn_pred[r] = train.labels[knn_neighbors(train.features, test.features.row(r), 1).front().index];
        }
        sums[3] += accuracy(nn_pred, test.labels);

        const auto nb = train_gaussian_nb(train.features, train.labels, train.n_classes);
        sums[4] += accuracy(nb.predict(test.features), test.labels);
    }
    if (used == 0) {
        return {};
    }
    return {sums[0] / used, sums[1] / used, sums[2] / used, sums[3] / used, sums[4] / used};
}

/// Fraction of points joined to an opposite-class point in the Euclidean MST (Prim).
inline double borderline_fraction(const Dataset& ds) {
    const std::size_t n = ds.size();
    if (n < 2) {
        return nan;
    }
    std::vector<bool> in_tree(n, false);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> parent(n, 0);
    std::vector<bool> border(n, false);
    best[0] = 0.0;
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t u = n;
        for (std::size_t v = 0; v < n; ++v) {
            if (!in_tree[v] && (u == n || best[v] < best[u])) {
                u = v;
            }
        }
        in_tree[u] = true;
        if (step > 0 && ds.labels[u] != ds.labels[parent[u]]) {
            border[u] = true;
            border[parent[u]] = true;
        }
        for (std::size_t v = 0; v < n; ++v) {
            if (!in_tree[v]) {
                const double dist = squared_distance(ds.features.row(u), ds.features.row(v));
                if (dist < best[v]) {
                    best[v] = dist;
                    parent[v] = u;
                }
            }
        }
    }
    return static_cast<double>(std::count(border.begin(), border.end(), true)) / static_cast<double>(n);
}

/// Leave-one-out 1-NN error rate (nearest-neighbour ties to the lower row).
inline double loo_nn_error(const Dataset& ds) {
    if (ds.size() < 2) {
        return nan;
    }
    std::size_t wrong = 0;
    for (std::size_t r = 0; r < ds.size(); ++r) {
        const auto nb = knn_neighbors(ds.features, ds.features.row(r), 1, r).front();
        wrong += ds.labels[nb.index] != ds.labels[r] ? 1 : 0;
    }
    return static_cast<double>(wrong) / static_cast<double>(ds.size());
}

struct ClassRange {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
};

/// Per-class, per-attribute value range.
inline std::vector<std::vector<ClassRange>> class_ranges(const Dataset& ds) {
    std::vector<std::vector<ClassRange>> out(static_cast<std::size_t>(ds.n_classes), std::vector<ClassRange>(ds.dim()));
    for (std::size_t r = 0; r < ds.size(); ++r) {
        auto& cr = out[static_cast<std::size_t>(ds.labels[r])];
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            cr[j].lo = std::min(cr[j].lo, ds.features(r, j));
            cr[j].hi = std::max(cr[j].hi, ds.features(r, j));
        }
    }
    return out;
}

/// f2 (overlap volume) and f3 (max individual feature efficiency), each
/// averaged over class pairs (one-vs-one).
inline std::pair<double, double> overlap_measures(const Dataset& ds) {
    const auto ranges = class_ranges(ds);
    const auto counts = ds.class_counts();
    double f2_sum = 0.0;
    double f3_sum = 0.0;
    int pairs = 0;
    for (int a = 0; a < ds.n_classes; ++a) {
        for (int b = a + 1; b < ds.n_classes; ++b) {
            const auto& ra = ranges[static_cast<std::size_t>(a)];
            const auto& rb = ranges[static_cast<std::size_t>(b)];
            const double pair_n = static_cast<double>(counts[static_cast<std::size_t>(a)] + counts[static_cast<std::size_t>(b)]);
            double volume = 1.0;
            double best_efficiency = 0.0;
            for (std::size_t j = 0; j < ds.dim(); ++j) {
                const double min_max = std::min(ra[j].hi, rb[j].hi);
                const double max_min = std::max(ra[j].lo, rb[j].lo);
                const double span_all = std::max(ra[j].hi, rb[j].hi) - std::min(ra[j].lo, rb[j].lo);
                const double overlap = std::max(0.0, min_max - max_min);
                volume *= span_all > 0.0 ? overlap / span_all : 1.0;

                std::size_t outside = 0;
                for (std::size_t r = 0; r < ds.size(); ++r) {
                    if (ds.labels[r] != a && ds.labels[r] != b) {
                        continue;
                    }
                    const double v = ds.features(r, j);
                    if (min_max < max_min || v < max_min || v > min_max) {
                        ++outside;
                    }
                }
                best_efficiency = std::max(best_efficiency, static_cast<double>(outside) / pair_n);
            }
            f2_sum += volume;
            f3_sum += best_efficiency;
            ++pairs;
        }
    }
    return {f2_sum / pairs, f3_sum / pairs};
}

/// Max over attributes of between-class / within-class scatter.
inline double fisher_ratio(const Dataset& ds) {
    const auto L = static_cast<std::size_t>(ds.n_classes);
    const auto counts = ds.class_counts();
    double best = nan;
    for (std::size_t j = 0; j < ds.dim(); ++j) {
        std::vector<double> class_mean(L, 0.0);
        double mean = 0.0;
        for (std::size_t r = 0; r < ds.size(); ++r) {
            class_mean[static_cast<std::size_t>(ds.labels[r])] += ds.features(r, j);
            mean += ds.features(r, j);
        }
        mean /= static_cast<double>(ds.size());
        double between = 0.0;
        for (std::size_t c = 0; c < L; ++c) {
            if (counts[c] == 0) {
                continue;
            }
            class_mean[c] /= static_cast<double>(counts[c]);
            between += static_cast<double>(counts[c]) * (class_mean[c] - mean) * (class_mean[c] - mean);
        }
        double within = 0.0;
        for (std::size_t r = 0; r < ds.size(); ++r) {
            const double diff = ds.features(r, j) - class_mean[static_cast<std::size_t>(ds.labels[r])];
            within += diff * diff;
        }
        const double ratio = between / within;  // inf / NaN on degenerate columns
        if (std::isnan(ratio)) {
            continue;
        }
        best = std::isnan(best) ? ratio : std::max(best, ratio);
    }
    return best;
}

}  // namespace detail

/// Extracts the schema vector from a training partition. Only `train` is read.
inline MetaFeatureVector extract_meta_features(const Dataset& train_in, std::uint64_t seed, const MetaFeatureOptions& opts = {}) {
    validate(train_in);
    const Dataset ds = detail::canonical_order(train_in);
    const auto n = static_cast<double>(ds.size());
    const auto d = static_cast<double>(ds.dim());
    const auto L = static_cast<std::size_t>(ds.n_classes);
    const auto counts = ds.class_counts();
    std::vector<double> raw;
    raw.reserve(meta_feature_count);
    const auto push_summary = [&raw](const Summary& s) {
        raw.push_back(s.mean);
        raw.push_back(s.sd);
    };

    // general
    raw.push_back(n);
    raw.push_back(d);
    raw.push_back(static_cast<double>(L));
    raw.push_back(d / n);
    std::vector<double> freq(L);
    for (std::size_t c = 0; c < L; ++c) {
        freq[c] = static_cast<double>(counts[c]) / n;
    }
    push_summary(summarize_values(freq));

    // statistical
    std::vector<double> means, sds, skews, kurts, iqrs, vars, ranges, sparsities;
    double outlier_attrs = 0.0;
    for (std::size_t j = 0; j < ds.dim(); ++j) {
        const auto col = ds.features.column(j);
        double mean = 0.0;
        for (const double v : col) {
            mean += v;
        }
        mean /= n;
        double m2 = 0.0;
        double m3 = 0.0;
        double m4 = 0.0;
        for (const double v : col) {
            const double dv = v - mean;
            m2 += dv * dv;
            m3 += dv * dv * dv;
            m4 += dv * dv * dv * dv;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        means.push_back(mean);
        vars.push_back(m2);
        sds.push_back(std::sqrt(m2));
        skews.push_back(m2 > 0.0 ? m3 / std::pow(m2, 1.5) : detail::nan);
        kurts.push_back(m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : detail::nan);
        const double q1 = detail::quantile(col, 0.25);
        const double q3 = detail::quantile(col, 0.75);
        iqrs.push_back(q3 - q1);
        const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
        ranges.push_back(*hi - *lo);
        auto sorted = col;
        std::sort(sorted.begin(), sorted.end());
        const auto unique = static_cast<double>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
        sparsities.push_back(n > 1.0 ? (n / unique - 1.0) / (n - 1.0) : detail::nan);
        const double whisker = 1.5 * (q3 - q1);
        if (std::any_of(col.begin(), col.end(), [&](double v) { return v < q1 - whisker || v > q3 + whisker; })) {
            outlier_attrs += 1.0;
        }
    }
    std::vector<double> cors;
    double strong_pairs = 0.0;
    for (std::size_t a = 0; a < ds.dim(); ++a) {
        const auto ca = ds.features.column(a);
        for (std::size_t b = a + 1; b < ds.dim(); ++b) {
            const double rho = detail::pearson(ca, ds.features.column(b));
            if (std::isnan(rho)) {
                continue;
            }
            cors.push_back(std::abs(rho));
            strong_pairs += std::abs(rho) > 0.9 ? 1.0 : 0.0;
        }
    }
    push_summary(detail::summarize_finite(means));
    push_summary(detail::summarize_finite(sds));
    push_summary(detail::summarize_finite(skews));
    push_summary(detail::summarize_finite(kurts));
    push_summary(detail::summarize_finite(cors));
    push_summary(detail::summarize_finite(iqrs));
    push_summary(detail::summarize_finite(vars));
    push_summary(detail::summarize_finite(ranges));
    push_summary(detail::summarize_finite(sparsities));
    raw.push_back(outlier_attrs);
    raw.push_back(cors.empty() ? detail::nan : strong_pairs);

    // information-theoretic
    const auto info = detail::info_theory(ds.features, ds.labels, ds.n_classes, opts.entropy_bins);
    push_summary(summarize_values(info.attr_ent));
    raw.push_back(info.class_ent);
    push_summary(summarize_values(info.joint_ent));
    const auto mi = summarize_values(info.mut_inf);
    push_summary(mi);
    const double attr_ent_mean = summarize_values(info.attr_ent).mean;
    raw.push_back(info.class_ent / mi.mean);
    raw.push_back((attr_ent_mean - mi.mean) / mi.mean);

    // model-based
    const auto tree = train_tree(ds);
    const auto& nodes = tree.as<TreeModel>().nodes;
    double leaves = 0.0;
    double internal = 0.0;
    std::vector<double> depths;
    std::vector<double> leaves_per_class(L, 0.0);
    for (const auto& node : nodes) {
        depths.push_back(static_cast<double>(node.depth));
        if (node.is_leaf()) {
            leaves += 1.0;
            leaves_per_class[static_cast<std::size_t>(argmax(node.freq))] += 1.0;
        } else {
            internal += 1.0;
        }
    }
    for (auto& v : leaves_per_class) {
        v /= leaves;
    }
    raw.push_back(leaves);
    raw.push_back(internal);
    push_summary(summarize_values(depths));
    push_summary(summarize_values(leaves_per_class));
    raw.push_back(internal / d);

    // landmarking
    const auto lm = detail::landmarking(ds, opts, seed);
    raw.push_back(lm.best_node);
    raw.push_back(lm.worst_node);
    raw.push_back(lm.random_node);
    raw.push_back(lm.one_nn);
    raw.push_back(lm.naive_bayes);

    // complexity
    raw.push_back(detail::fisher_ratio(ds));
    const auto [f2, f3] = detail::overlap_measures(ds);
    raw.push_back(f2);
    raw.push_back(f3);
    raw.push_back(detail::borderline_fraction(ds));
    raw.push_back(detail::loo_nn_error(ds));
    raw.push_back(d / n);
    double class_entropy = 0.0;
    double ir_sum = 0.0;
    for (std::size_t c = 0; c < L; ++c) {
        const double p = static_cast<double>(counts[c]) / n;
        class_entropy -= p > 0.0 ? p * std::log(p) : 0.0;
        ir_sum += static_cast<double>(counts[c]) / (n - static_cast<double>(counts[c]));
    }
    raw.push_back(class_entropy / std::log(static_cast<double>(L)));
    const double imbalance_ratio = (static_cast<double>(L) - 1.0) / static_cast<double>(L) * ir_sum;
    raw.push_back(1.0 - 1.0 / imbalance_ratio);

    auto imputed = impute_vector(raw);
    MetaFeatureVector out;
    out.names.assign(meta_feature_names.begin(), meta_feature_names.end());
    out.values = std::move(imputed.values);
    out.imputed = std::move(imputed.mask);
    return out;
}

}  // namespace mlrs
