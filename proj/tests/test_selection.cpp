#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace mlrs;

namespace {

LocalCompetence table(std::vector<std::vector<int>> correct, std::vector<double> dist = {}, std::vector<int> labels = {}, int L = 2) {
    LocalCompetence lc;
    lc.n_models = correct.front().size();
    lc.n_classes = L;
    lc.distances = dist.empty() ? std::vector<double>(correct.size(), 1.0) : dist;
    lc.labels = labels.empty() ? std::vector<int>(correct.size(), 0) : labels;
    for (const auto& row : correct) {
        for (const int v : row) lc.correct.push_back(static_cast<std::uint8_t>(v));
    }
    return lc;
}

/// Correctness table [K][M] from per-model hit lists.
std::vector<std::vector<int>> by_model(const std::vector<std::vector<int>>& per_model) {
    std::vector<std::vector<int>> out(per_model.front().size(), std::vector<int>(per_model.size()));
    for (std::size_t m = 0; m < per_model.size(); ++m) {
        for (std::size_t j = 0; j < per_model[m].size(); ++j) out[j][m] = per_model[m][j];
    }
    return out;
}

LocalCompetence from_micro(const oracle::Micro& mi) {
    const auto roc = region_of_competence(mi.dsel, mi.query, mi.K);
    return local_competence(mi.outputs(), roc, mi.L);
}

Dataset points(std::uint64_t seed, int n, int classes = 2) {
    return zscore_fit_apply(
               synth_dataset(SynthSpec{.n = n, .d = 2, .classes = classes, .cluster_std = 1.2, .label_noise = 0.05, .informative = 2}, seed))
        .train;
}

}  // namespace

TEST(RegionOfCompetence, Boundaries) {
    const auto ds = points(1, 7);
    const std::array<double, 2> q{0.1, 0.2};
    const auto roc = region_of_competence(ds, q, 7);
    EXPECT_EQ(roc.neighbors.size(), 7u);
    for (std::size_t i = 1; i < 7; ++i) EXPECT_LE(roc.neighbors[i - 1].distance, roc.neighbors[i].distance);
    const std::vector<std::size_t> six{0, 1, 2, 3, 4, 5};
    try {
        region_of_competence(ds.subset(six), q, 7);
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::dsel_too_small);
    }
}

TEST(RegionOfCompetence, MatchesFullSortOracle) {
    Rng rng(3);
    for (int t = 0; t < 25; ++t) {
        auto ds = points(100 + static_cast<std::uint64_t>(t), 40);
        for (auto& v : ds.features.data()) v = std::round(v * 2.0) / 2.0;
        const std::array<double, 2> q{rng.normal(), rng.normal()};
        const auto roc = region_of_competence(ds, q, 7);
        const auto want = oracle::sorted_distances(ds.features, q);
        for (std::size_t j = 0; j < 7; ++j) {
            EXPECT_EQ(roc.neighbors[j].index, want[j].second);
            EXPECT_EQ(roc.labels[j], ds.labels[want[j].second]);
        }
    }
}

TEST(Ola, Examples) {
    EXPECT_EQ(ola_select(table(by_model({{1, 1, 1, 1, 1, 0, 0}, {1, 1, 1, 0, 0, 0, 0}}))), 0u);
    EXPECT_EQ(ola_select(table(by_model({{1, 1, 1, 0, 0, 0, 0}, {1, 1, 1, 1, 1, 0, 0}}))), 1u);
    EXPECT_EQ(ola_select(table(by_model({{1, 1, 1, 1, 1, 1, 1}, {1, 1, 1, 1, 1, 1, 1}}))), 0u);
}

TEST(Mla, Examples) {
    const auto correct = by_model({{1, 0, 1, 0, 1, 1, 0}, {0, 1, 1, 1, 1, 0, 1}, {1, 1, 0, 0, 0, 1, 1}});
    const std::vector<double> same(7, 2.0);
    EXPECT_EQ(mla_select(table(correct, same)), ola_select(table(correct, same)));

    const auto near_only = by_model({{1, 0, 0, 0, 0, 0, 0}, {0, 1, 1, 1, 1, 1, 1}});
    EXPECT_EQ(mla_select(table(near_only, {1e-9, 1, 1, 1, 1, 1, 1})), 0u);
    EXPECT_EQ(ola_select(table(near_only, {1e-9, 1, 1, 1, 1, 1, 1})), 1u);
}

TEST(KnoraE, Examples) {
    const auto all = by_model({{1, 1, 1, 1, 1, 1, 1}, {1, 1, 1, 1, 1, 1, 1}, {1, 1, 1, 1, 1, 1, 1}});
    EXPECT_EQ(knora_e_select(table(all)), (std::vector<std::size_t>{0, 1, 2}));
    const auto none = by_model({{0, 1, 1, 1, 1, 1, 1}, {0, 1, 1, 1, 1, 1, 1}});
    EXPECT_EQ(knora_e_select(table(none)), (std::vector<std::size_t>{0, 1}));
    const auto descent = by_model({{1, 1, 1, 0, 1, 1, 1}, {1, 1, 0, 1, 1, 1, 1}, {1, 1, 1, 0, 0, 0, 0}});
    EXPECT_EQ(knora_e_select(table(descent)), (std::vector<std::size_t>{0, 2}));
}

TEST(KnoraE, SelectedModelsAreCorrectOnThePrefix) {
    std::mt19937_64 gen(5);
    for (int t = 0; t < 100; ++t) {
        const auto mi = oracle::make_micro(gen);
        const auto lc = from_micro(mi);
        const auto sel = knora_e_select(lc);
        const auto want = oracle::knora_e(mi);
        EXPECT_EQ(sel, want);
    }
}

TEST(KnoraU, Examples) {
    const auto one = by_model({{1, 1, 1, 1, 1, 1, 1}, {0, 0, 0, 0, 0, 0, 0}, {0, 0, 0, 0, 0, 0, 0}});
    const std::vector<int> preds{1, 0, 0};
    EXPECT_EQ(knora_u_vote(table(one), preds), 1);
    const auto zero = by_model({{0, 0, 0}, {0, 0, 0}, {0, 0, 0}});
    const std::vector<int> preds3{2, 1, 2};
    EXPECT_EQ(knora_u_vote(table(zero, {}, {}, 3), preds3), 2);
}

TEST(DesP, Examples) {
    // L = 2: accuracy exactly 0.5 is not above chance.
    const auto half = by_model({{1, 1, 0, 0}, {1, 1, 1, 0}});
    EXPECT_EQ(des_p_select(table(half)), (std::vector<std::size_t>{1}));
    const auto below = by_model({{1, 0, 0, 0}, {0, 0, 0, 0}});
    EXPECT_EQ(des_p_select(table(below)), (std::vector<std::size_t>{0, 1}));
}

TEST(DesMi, Examples) {
    // Balanced region: same ranking as plain local accuracy.
    const auto c = by_model({{1, 1, 0, 0}, {1, 1, 1, 1}, {0, 0, 0, 1}, {1, 0, 1, 1}, {0, 0, 0, 0}});
    const auto lc = table(c, {}, {0, 1, 0, 1}, 2);
    const auto u = des_mi_weights(lc);
    for (const double v : u) EXPECT_DOUBLE_EQ(v, 0.25);
    EXPECT_EQ(des_mi_select(lc, 0.4), (std::vector<std::size_t>{1, 3}));

    std::vector<std::vector<int>> hundred(7, std::vector<int>(100, 1));
    EXPECT_EQ(des_mi_select(table(hundred), 0.4).size(), 40u);
}

TEST(DesMi, MinorityNeighboursCountMore) {
    // Model 0 is right only on the lone class-1 neighbour; model 1 only on one class-0 neighbour.
    const auto c = by_model({{0, 0, 0, 1}, {1, 0, 0, 0}});
    const auto lc = table(c, {}, {0, 0, 0, 1}, 2);
    EXPECT_EQ(des_mi_select(lc, 0.5), (std::vector<std::size_t>{0}));
}

TEST(Oracles, SixMethodsAgreeOnRandomMicroInstances) {
    std::mt19937_64 gen(2024);
    for (int t = 0; t < 300; ++t) {
        const auto mi = oracle::make_micro(gen);
        const auto lc = from_micro(mi);
        EXPECT_EQ(ola_select(lc), oracle::ola(mi));
        EXPECT_EQ(mla_select(lc), oracle::mla(mi));
        EXPECT_EQ(knora_e_select(lc), oracle::knora_e(mi));
        EXPECT_EQ(knora_u_vote(lc, mi.query_pred), oracle::knora_u(mi));
        EXPECT_EQ(des_p_select(lc), oracle::des_p(mi));
        EXPECT_EQ(des_mi_select(lc, 0.4), oracle::des_mi(mi, 0.4));
        EXPECT_EQ(majority_vote(des_p_select(lc), mi.query_pred, mi.L), oracle::vote(oracle::des_p(mi), mi.query_pred, mi.L));
    }
}

TEST(Invariants, DistanceScalingLeavesSelectionsUnchanged) {
    std::mt19937_64 gen(8);
    for (int t = 0; t < 100; ++t) {
        const auto mi = oracle::make_micro(gen);
        auto lc = from_micro(mi);
        auto scaled = lc;
        for (auto& d : scaled.distances) d *= 3.7;
        EXPECT_EQ(ola_select(lc), ola_select(scaled));
        EXPECT_EQ(knora_e_select(lc), knora_e_select(scaled));
        EXPECT_EQ(knora_u_vote(lc, mi.query_pred), knora_u_vote(scaled, mi.query_pred));
        EXPECT_EQ(des_p_select(lc), des_p_select(scaled));
        EXPECT_EQ(des_mi_select(lc), des_mi_select(scaled));
        // Zero distances stay dominated by the 1e-12 guard, so only check the positive case.
        if (std::all_of(lc.distances.begin(), lc.distances.end(), [](double d) { return d > 1e-3; })) {
            EXPECT_EQ(mla_select(lc), mla_select(scaled));
        }
    }
}

TEST(Invariants, AlwaysCorrectModelIsPicked) {
    const auto c = by_model({{0, 1, 0, 1, 1, 0, 1}, {1, 1, 1, 1, 1, 1, 1}, {1, 0, 1, 1, 0, 1, 1}});
    const auto lc = table(c, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7});
    EXPECT_EQ(ola_select(lc), 1u);
    EXPECT_EQ(mla_select(lc), 1u);
    EXPECT_EQ(knora_e_select(lc), (std::vector<std::size_t>{1}));
}

TEST(MetaDes, DimensionIs21) {
    EXPECT_EQ(metades_dimension(7, 5), 21u);
    const auto ds = points(11, 60, 3);
    const auto pool = generate_pool(PoolScheme::BDT, ds, PoolOptions{.size = 5}, 2);
    const auto outputs = compute_pool_outputs(pool, ds.features, true);
    const auto set = metades_training_set(outputs, ds, 7, 5);
    EXPECT_EQ(set.features.cols(), 21u);
    EXPECT_EQ(set.features.rows(), ds.size() * pool.size());
    for (std::size_t r = 0; r < set.features.rows(); ++r) {
        const auto f = set.features.row(r);
        double mean = 0.0;
        for (std::size_t j = 0; j < 7; ++j) mean += f[j];
        EXPECT_DOUBLE_EQ(f[14], mean / 7.0);
    }
}

TEST(MetaDes, InstanceNeverItsOwnNeighbour) {
    const auto ds = points(12, 30);
    const auto pool = generate_pool(PoolScheme::BP, ds, PoolOptions{.size = 3}, 2);
    const auto outputs = compute_pool_outputs(pool, ds.features, true);
    for (std::size_t j = 0; j < ds.size(); ++j) {
        const auto roc = region_of_competence(ds, ds.features.row(j), 7, j);
        for (const auto& nb : roc.neighbors) EXPECT_NE(nb.index, j);
        for (const auto r : nearest_profiles(outputs.predictions, 3, outputs.profile(j), 5, j)) EXPECT_NE(r, j);
    }
}

TEST(MetaDes, SeparatesGoodFromBadModels) {
    // Model A predicts the label; model B predicts the other label.
    const auto ds = points(13, 60);
    Pool pool;
    pool.scheme = PoolScheme::BDT;
    pool.models.push_back(train_tree(ds));
    Dataset flipped = ds;
    for (auto& y : flipped.labels) y = 1 - y;
    pool.models.push_back(train_tree(flipped));
    const auto meta = metades_fit(pool, ds);
    const DsEngine engine(pool, ds);
    const auto probe = points(14, 40);
    for (std::size_t r = 0; r < probe.size(); ++r) {
        const auto q = engine.prepare(probe.features.row(r));
        const auto c = metades_competence(meta, engine.dsel_outputs(), ds, q.roc, q.predictions, q.proba);
        EXPECT_GT(c[0], c[1]);
        const auto sel = engine.metades_select(meta, probe.features.row(r));
        EXPECT_NE(std::find(sel.begin(), sel.end(), 0u), sel.end());
        EXPECT_EQ(sel, engine.metades_select(meta, probe.features.row(r)));
    }
}

TEST(MetaDes, EmptySelectionFallsBack) {
    const std::vector<double> low{0.1, 0.5, 0.2};
    EXPECT_EQ(metades_select_from(low, 0.5), (std::vector<std::size_t>{0, 1, 2}));
    const std::vector<double> mixed{0.9, 0.5, 0.7};
    EXPECT_EQ(metades_select_from(mixed, 0.5), (std::vector<std::size_t>{0, 2}));
}

TEST(MetaDes, SingleMetaClass) {
    const auto ds = points(15, 30);
    Pool pool;
    Dataset flipped = ds;
    for (auto& y : flipped.labels) y = 1 - y;
    pool.models = {train_tree(flipped), train_tree(flipped)};
    try {
        metades_fit(pool, ds);
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::single_meta_class);
    }
}

TEST(DsPredict, DispatchAndErrors) {
    const auto ds = points(16, 80, 3);
    const auto pool = generate_pool(PoolScheme::RF, ds, PoolOptions{.size = 7}, 1);
    const auto meta = metades_fit(pool, ds);
    const DsEngine engine(pool, ds);
    const std::array<double, 2> x{0.3, -0.4};
    const auto q = engine.prepare(x);
    EXPECT_EQ(ds_predict(DsMethod::OLA, pool, ds, nullptr, x), q.predictions[ola_select(q.competence)]);
    try {
        ds_predict(DsMethod::META_DES, pool, ds, nullptr, x);
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::missing_meta_model);
    }
    Rng rng(4);
    for (int t = 0; t < 50; ++t) {
        const std::array<double, 2> p{3 * rng.normal(), 3 * rng.normal()};
        for (const auto m : all_ds_methods) {
            const int label = engine.predict(m, p, &meta);
            EXPECT_GE(label, 0);
            EXPECT_LT(label, 3);
            EXPECT_EQ(label, ds_predict(m, pool, ds, &meta, p));
        }
    }
}

TEST(DsMethod, NamesRoundTrip) {
    for (const auto m : all_ds_methods) EXPECT_EQ(parse_ds_method(to_string(m)), m);
    EXPECT_EQ(parse_ds_method("KNORA_E"), DsMethod::KNORA_E);
    EXPECT_THROW(parse_ds_method("nope"), error);
}
