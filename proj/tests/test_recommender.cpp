#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace mlrs;

namespace {

GridResult random_grid(std::mt19937_64& gen, const std::string& id, int levels = 0) {
    GridResult g;
    g.dataset_id = id;
    std::uniform_real_distribution<double> u(0.5, 1.0);
    std::uniform_int_distribution<int> coarse(0, levels);
    for (auto& row : g.cells) {
        for (auto& c : row) c.accuracy = levels > 0 ? 0.5 + 0.1 * coarse(gen) : u(gen);
    }
    return g;
}

MetaFeatureVector random_features(std::mt19937_64& gen) {
    MetaFeatureVector v;
    v.names.assign(meta_feature_names.begin(), meta_feature_names.end());
    std::normal_distribution<double> n(0.0, 1.0);
    for (std::size_t i = 0; i < meta_feature_count; ++i) v.values.push_back(n(gen) * static_cast<double>(i + 1));
    v.imputed.assign(meta_feature_count, 0);
    return v;
}

std::vector<DatasetRecord> random_records(std::uint64_t seed, std::size_t n, int levels = 0) {
    std::mt19937_64 gen(seed);
    std::vector<DatasetRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto id = "d" + std::to_string(i);
        out.push_back({id, random_features(gen), random_grid(gen, id, levels)});
    }
    return out;
}

/// Linear scan for the first maximal candidate, written without the library's tolerance helpers.
std::pair<PoolScheme, DsMethod> scan_best(const GridResult& g, const ScenarioConfig& cfg) {
    double best = -1;
    for (int p = 0; p < 7; ++p) {
        for (int m = 0; m < 7; ++m) {
            if (cfg.fixed_pool && p != static_cast<int>(*cfg.fixed_pool)) continue;
            if (cfg.fixed_ds && m != static_cast<int>(*cfg.fixed_ds)) continue;
            best = std::max(best, *g.cells[p][m].accuracy);
        }
    }
    for (int p = 0; p < 7; ++p) {
        for (int m = 0; m < 7; ++m) {
            if (cfg.fixed_pool && p != static_cast<int>(*cfg.fixed_pool)) continue;
            if (cfg.fixed_ds && m != static_cast<int>(*cfg.fixed_ds)) continue;
            if (*g.cells[p][m].accuracy == best) return {static_cast<PoolScheme>(p), static_cast<DsMethod>(m)};
        }
    }
    return {};
}

GridResult flat_grid(double value) {
    GridResult g;
    for (auto& row : g.cells) {
        for (auto& c : row) c.accuracy = value;
    }
    return g;
}

MetaDataset rows_with(const ScenarioConfig& cfg, const std::vector<MetaTarget>& targets) {
    MetaDataset mt;
    mt.config = cfg;
    std::mt19937_64 gen(1);
    for (std::size_t i = 0; i < targets.size(); ++i) mt.rows.push_back({"r" + std::to_string(i), random_features(gen), targets[i]});
    return mt;
}

}  // namespace

TEST(Scenario, ConfigurationContract) {
    EXPECT_EQ(scenario_candidates(ScenarioConfig::pair()).size(), 49u);
    EXPECT_EQ(scenario_candidates(ScenarioConfig::pool_for(DsMethod::OLA)).size(), 7u);
    EXPECT_EQ(scenario_candidates(ScenarioConfig::ds_for(PoolScheme::RF)).size(), 7u);
    EXPECT_THROW(validate(ScenarioConfig{Scenario::pool, std::nullopt, std::nullopt}), error);
    EXPECT_THROW(validate(ScenarioConfig{Scenario::pool_ds, DsMethod::OLA, std::nullopt}), error);
    EXPECT_EQ(parse_scenario("III"), Scenario::pool_ds);
    EXPECT_EQ(parse_scenario("MLRS-DS"), Scenario::ds);
    EXPECT_EQ(to_string(Scenario::pool), "MLRS-P");
}

TEST(LabelMetaTarget, UniqueMaximum) {
    auto g = flat_grid(0.7);
    g.cell(PoolScheme::RF, DsMethod::META_DES).accuracy = 0.9;
    EXPECT_EQ(label_meta_target(g, ScenarioConfig::pair()), (MetaTarget{PoolScheme::RF, DsMethod::META_DES}));
}

TEST(LabelMetaTarget, TieGoesToCanonicalOrder) {
    auto g = flat_grid(0.7);
    g.cell(PoolScheme::FLT, DsMethod::OLA).accuracy = 0.9;
    g.cell(PoolScheme::BDT, DsMethod::DES_P).accuracy = 0.9;
    EXPECT_EQ(label_meta_target(g, ScenarioConfig::pair()), (MetaTarget{PoolScheme::BDT, DsMethod::DES_P}));
    EXPECT_EQ(label_meta_target(flat_grid(0.5), ScenarioConfig::pair()), (MetaTarget{PoolScheme::BP, DsMethod::OLA}));
}

TEST(LabelMetaTarget, MatchesLinearScanOnRandomGrids) {
    std::mt19937_64 gen(11);
    for (int t = 0; t < 200; ++t) {
        const auto g = random_grid(gen, "g", t % 2 == 0 ? 3 : 0);
        for (const auto& cfg : {ScenarioConfig::pair(), ScenarioConfig::pool_for(DsMethod::KNORA_U), ScenarioConfig::ds_for(PoolScheme::LIT)}) {
            const auto want = scan_best(g, cfg);
            const auto target = label_meta_target(g, cfg);
            EXPECT_EQ(resolve_target(target, cfg), want);
            EXPECT_TRUE(is_win(g, cfg, target));
        }
    }
}

TEST(LabelMetaTarget, IncompleteGrid) {
    auto g = flat_grid(0.5);
    g.cell(PoolScheme::BSP, DsMethod::MLA) = GridCell{std::nullopt, "BSP: degenerate"};
    try {
        label_meta_target(g, ScenarioConfig::pair());
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::incomplete_grid);
    }
    EXPECT_NO_THROW(label_meta_target(g, ScenarioConfig::ds_for(PoolScheme::RF)));
}

TEST(BuildMetaDataset, RowsAndExclusions) {
    auto records = random_records(3, 10);
    for (auto& c : records[4].grid.cells[static_cast<std::size_t>(PoolScheme::BSP)]) c = GridCell{std::nullopt, "BSP: one model"};
    const auto pair = build_meta_dataset(records, ScenarioConfig::pair());
    EXPECT_EQ(pair.rows.size(), 9u);
    ASSERT_EQ(pair.excluded.size(), 1u);
    EXPECT_EQ(pair.excluded[0].dataset_id, "d4");
    EXPECT_EQ(pair.excluded[0].reason, "BSP: one model");
    for (const auto& r : pair.rows) EXPECT_NE(r.dataset_id, "d4");

    const auto other_pool = build_meta_dataset(records, ScenarioConfig::ds_for(PoolScheme::RF));
    EXPECT_EQ(other_pool.rows.size(), 10u);
    EXPECT_TRUE(other_pool.excluded.empty());
}

TEST(BuildMetaDataset, ScenarioShapesTargets) {
    const auto records = random_records(4, 12);
    for (const auto m : all_ds_methods) {
        for (const auto& r : build_meta_dataset(records, ScenarioConfig::pool_for(m)).rows) {
            EXPECT_TRUE(r.target.pool.has_value());
            EXPECT_FALSE(r.target.ds.has_value());
        }
    }
    for (const auto& r : build_meta_dataset(records, ScenarioConfig::ds_for(PoolScheme::BP)).rows) {
        EXPECT_FALSE(r.target.pool.has_value());
        EXPECT_TRUE(r.target.ds.has_value());
    }
}

TEST(BuildMetaDataset, SchemaMismatch) {
    auto records = random_records(5, 3);
    records[1].features.schema_version = "mfs-0";
    try {
        build_meta_dataset(records, ScenarioConfig::pair());
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::schema_mismatch);
    }
}

TEST(TrainRecommender, ModelKindsPerScenario) {
    const auto records = random_records(6, 20);
    const auto p = train_recommender(build_meta_dataset(records, ScenarioConfig::pool_for(DsMethod::OLA)), {}, 1);
    const auto& rf = std::get<MetaModel>(p.model);
    EXPECT_EQ(rf.kind, MetaModelKind::random_forest);
    EXPECT_EQ(rf.trees.size(), 100u);
    EXPECT_EQ(rf.max_depth, 5);
    for (const auto& t : rf.trees) {
        for (const auto& node : t.as<TreeModel>().nodes) EXPECT_LE(node.depth, 5);
    }

    const auto d = train_recommender(build_meta_dataset(records, ScenarioConfig::ds_for(PoolScheme::RF)), {}, 1);
    EXPECT_EQ(std::get<MetaModel>(d.model).kind, MetaModelKind::knn);
    EXPECT_EQ(std::get<MetaModel>(d.model).k, 2u);

    const auto pd = train_recommender(build_meta_dataset(records, ScenarioConfig::pair()), {}, 1);
    const auto& chain = std::get<ChainModel>(pd.model);
    EXPECT_EQ(chain.stage1.input_dim(), 55u);
    EXPECT_EQ(chain.stage2.input_dim(), 62u);
}

TEST(TrainRecommender, Deterministic) {
    const auto mt = build_meta_dataset(random_records(7, 15), ScenarioConfig::pool_for(DsMethod::DES_P));
    EXPECT_EQ(train_recommender(mt, {}, 3), train_recommender(mt, {}, 3));
}

TEST(TrainRecommender, SingleRowClampsK) {
    const auto mt = build_meta_dataset(random_records(8, 1), ScenarioConfig::ds_for(PoolScheme::BDT));
    const auto rec = train_recommender(mt);
    const auto& m = std::get<MetaModel>(rec.model);
    EXPECT_EQ(m.k, 1u);
    ASSERT_EQ(m.warnings.size(), 1u);
    EXPECT_EQ(recommend(rec, mt.rows[0].features), mt.rows[0].target);
}

TEST(TrainRecommender, EmptyMetaDataset) {
    MetaDataset mt;
    mt.config = ScenarioConfig::pair();
    try {
        train_recommender(mt);
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::empty_meta_dataset);
    }
    EXPECT_THROW(baseline_majority(mt), error);
}

TEST(Recommend, OutputsStayInTheCandidateSet) {
    const auto records = random_records(9, 25);
    std::mt19937_64 gen(10);
    for (const auto& cfg : {ScenarioConfig::pool_for(DsMethod::MLA), ScenarioConfig::ds_for(PoolScheme::FLT), ScenarioConfig::pair()}) {
        const auto rec = train_recommender(build_meta_dataset(records, cfg), {}, 2);
        for (int t = 0; t < 20; ++t) {
            const auto target = recommend(rec, random_features(gen));
            EXPECT_EQ(target.pool.has_value(), cfg.scenario != Scenario::ds);
            EXPECT_EQ(target.ds.has_value(), cfg.scenario != Scenario::pool);
            if (target.pool) {
                EXPECT_LT(static_cast<int>(*target.pool), 7);
            }
            if (target.ds) {
                EXPECT_LT(static_cast<int>(*target.ds), 7);
            }
        }
    }
}

TEST(Recommend, SchemaMismatch) {
    const auto rec = train_recommender(build_meta_dataset(random_records(11, 5), ScenarioConfig::pair()));
    std::mt19937_64 gen(1);
    auto mf = random_features(gen);
    mf.values.pop_back();
    try {
        recommend(rec, mf);
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::schema_mismatch);
    }
}

TEST(Recommend, TrainingRowIsRecoveredExactly) {
    const auto records = random_records(12, 30);
    const auto mt = build_meta_dataset(records, ScenarioConfig::pair());
    const auto rec = train_recommender(mt, {}, 0);
    const auto& chain = std::get<ChainModel>(rec.model);
    for (const auto& row : mt.rows) {
        EXPECT_EQ(static_cast<PoolScheme>(chain.stage1.predict(row.features.values)), *row.target.pool);
        // Stage 2 sees the predicted pool, which is the true one here.
        EXPECT_EQ(recommend(rec, row.features), row.target);
    }
}

TEST(Recommend, ChainStageTwoInput) {
    const std::vector<double> f{1.5, -2.0};
    EXPECT_EQ(chain_stage2_input(f, PoolScheme::BSP), (std::vector<double>{1.5, -2.0, 0, 0, 1, 0, 0, 0, 0}));
}

TEST(MetaKnn, WeightedVoteAndTies) {
    MetaModel m;
    m.kind = MetaModelKind::knn;
    m.scaler = ScalerParams{{0.0}, {1.0}};
    m.k = 2;
    m.train_x = Matrix(3, 1, std::vector<double>{0.0, 1.0, 10.0});
    m.train_y = {3, 5, 5};
    EXPECT_EQ(m.predict(std::vector<double>{0.25}), 3);  // weights 4 vs 4/3
    EXPECT_EQ(m.predict(std::vector<double>{0.75}), 5);
    // Equal weights: the nearer neighbour, lower row on distance ties.
    EXPECT_EQ(m.predict(std::vector<double>{0.5}), 3);
    // Exact match: only zero-distance neighbours vote.
    EXPECT_EQ(m.predict(std::vector<double>{1.0}), 5);
    EXPECT_EQ(m.predict(std::vector<double>{0.0}), 3);
}

TEST(MetaKnn, ScalingUsesTrainingRowsOnly) {
    const Matrix X(4, 2, std::vector<double>{0, 100, 1, 200, 2, 300, 3, 400});
    const std::vector<int> y{0, 0, 1, 1};
    const auto m = fit_meta_model(MetaModelKind::knn, X, y, 7, {}, 0);
    for (std::size_t j = 0; j < 2; ++j) {
        const auto col = m.train_x.column(j);
        EXPECT_NEAR(summarize_values(col).mean, 0.0, 1e-12);
        EXPECT_NEAR(summarize_values(col).sd, 1.0, 1e-12);
    }
}

TEST(BaselineMajority, Examples) {
    const auto pair = ScenarioConfig::pair();
    const auto mt = rows_with(pair, {{PoolScheme::RF, DsMethod::OLA},
                                     {PoolScheme::RF, DsMethod::KNORA_U},
                                     {PoolScheme::RF, DsMethod::KNORA_U},
                                     {PoolScheme::BP, DsMethod::META_DES},
                                     {PoolScheme::BP, DsMethod::META_DES},
                                     {PoolScheme::LIT, DsMethod::META_DES}});
    // RF is modal among pools (3 vs 2 vs 1); META-DES would be modal overall but not among RF rows.
    EXPECT_EQ(baseline_majority(mt), (MetaTarget{PoolScheme::RF, DsMethod::KNORA_U}));

    const auto tie = rows_with(ScenarioConfig::pool_for(DsMethod::OLA), {{PoolScheme::LIT, std::nullopt}, {PoolScheme::BDT, std::nullopt}});
    EXPECT_EQ(baseline_majority(tie), (MetaTarget{PoolScheme::BDT, std::nullopt}));
}

TEST(BaselineMajority, AddingAVoteForTheModeKeepsIt) {
    std::mt19937_64 gen(13);
    std::uniform_int_distribution<int> pick(0, 6);
    for (int t = 0; t < 50; ++t) {
        std::vector<MetaTarget> targets;
        for (int i = 0; i < 9; ++i) targets.push_back({std::nullopt, static_cast<DsMethod>(pick(gen))});
        const auto cfg = ScenarioConfig::ds_for(PoolScheme::BP);
        const auto before = baseline_majority(rows_with(cfg, targets));
        targets.push_back(before);
        EXPECT_EQ(baseline_majority(rows_with(cfg, targets)), before);
    }
}

TEST(BaselineAverage, UniqueWinners) {
    std::vector<GridResult> grids;
    for (int i = 0; i < 5; ++i) {
        auto g = flat_grid(0.6);
        g.cell(static_cast<PoolScheme>(i), DsMethod::OLA).accuracy = 0.9;
        grids.push_back(g);
    }
    const auto avg = baseline_average(grids, ScenarioConfig::pool_for(DsMethod::OLA));
    EXPECT_EQ(avg.datasets, 5u);
    EXPECT_EQ(avg.candidates, 7u);
    EXPECT_DOUBLE_EQ(avg.win_rate, 1.0 / 7.0);
    EXPECT_DOUBLE_EQ(avg.mean_wins, 5.0 / 7.0);
    EXPECT_NEAR(avg.mean_accuracy, (6 * 0.6 + 0.9) / 7.0, 1e-12);
}

TEST(BaselineAverage, TiedWinnersCountTwice) {
    auto g = flat_grid(0.6);
    g.cell(PoolScheme::BP, DsMethod::OLA).accuracy = 0.9;
    g.cell(PoolScheme::BP, DsMethod::DES_P).accuracy = 0.9;
    const std::vector<GridResult> grids{g};
    EXPECT_DOUBLE_EQ(baseline_average(grids, ScenarioConfig::ds_for(PoolScheme::BP)).win_rate, 2.0 / 7.0);
}

TEST(BaselineAverage, SkipsIncompleteGrids) {
    auto g = flat_grid(0.6);
    g.cell(PoolScheme::BSDT, DsMethod::OLA) = GridCell{std::nullopt, "x"};
    const std::vector<GridResult> grids{g, flat_grid(0.5)};
    EXPECT_EQ(baseline_average(grids, ScenarioConfig::pair()).datasets, 1u);
    EXPECT_EQ(baseline_average(grids, ScenarioConfig::ds_for(PoolScheme::RF)).datasets, 2u);
}
