// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include "oracles.hpp"
#include "published_counts.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

using namespace mlrs;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, std::string_view title, const std::function<Outcome()>& check) {
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        out = check();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += out.pass ? 0 : 1;
    std::printf("%s %2d %s [%.1fs] %s\n", out.pass ? "PASS" : "FAIL", id, std::string(title).c_str(), secs, out.detail.c_str());
    std::fflush(stdout);
}

LocalCompetence table_of(const std::vector<std::vector<bool>>& correct, std::size_t M, int L) {
    LocalCompetence lc;
    lc.n_models = M;
    lc.n_classes = L;
    lc.distances.assign(correct.size(), 1.0);
    lc.labels.assign(correct.size(), 0);
    for (const auto& row : correct) {
        for (const bool v : row) lc.correct.push_back(v ? 1 : 0);
    }
    return lc;
}

Dataset separable_toy() {
    Dataset ds;
    ds.id = "separable_toy";
    ds.n_classes = 2;
    ds.features = Matrix(40, 2);
    for (std::size_t i = 0; i < 40; ++i) {
        const bool hi = i % 2 == 1;
        ds.features(i, 0) = (hi ? 10.0 : -10.0) + 0.01 * static_cast<double>(i);
        ds.features(i, 1) = static_cast<double>(i % 5);
        ds.labels.push_back(hi ? 1 : 0);
    }
    return ds;
}

std::size_t workers() { return std::max(1u, std::min(8u, std::thread::hardware_concurrency())); }

Outcome oracle_equivalence() {
    std::mt19937_64 gen(20240501);
    const int instances = 1000;
    const auto t0 = std::chrono::steady_clock::now();
    int mismatches = 0;
    for (int t = 0; t < instances; ++t) {
        const auto mi = oracle::make_micro(gen);
        const auto lc = local_competence(mi.outputs(), region_of_competence(mi.dsel, mi.query, mi.K), mi.L);
        const int L = mi.L;
        const auto& qp = mi.query_pred;
        bool ok = true;
        ok = ok && qp[ola_select(lc)] == qp[oracle::ola(mi)];
        ok = ok && qp[mla_select(lc)] == qp[oracle::mla(mi)];
        ok = ok && majority_vote(knora_e_select(lc), qp, L) == oracle::vote(oracle::knora_e(mi), qp, L);
        ok = ok && knora_u_vote(lc, qp) == oracle::knora_u(mi);
        ok = ok && majority_vote(des_p_select(lc), qp, L) == oracle::vote(oracle::des_p(mi), qp, L);
        ok = ok && majority_vote(des_mi_select(lc, 0.4), qp, L) == oracle::vote(oracle::des_mi(mi, 0.4), qp, L);
        // Selections, not just labels.
        ok = ok && ola_select(lc) == oracle::ola(mi) && mla_select(lc) == oracle::mla(mi);
        ok = ok && knora_e_select(lc) == oracle::knora_e(mi) && des_p_select(lc) == oracle::des_p(mi);
        ok = ok && des_mi_select(lc, 0.4) == oracle::des_mi(mi, 0.4);
        mismatches += ok ? 0 : 1;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {mismatches == 0 && secs < 10.0,
            std::to_string(instances) + " instances, " + std::to_string(mismatches) + " mismatches, " + std::to_string(secs) + " s"};
}

Outcome knora_e_descent() {
    std::size_t tables = 0;
    std::size_t bad = 0;
    std::size_t fallbacks = 0;
    const auto check = [&](const std::vector<std::vector<bool>>& correct, std::size_t M) {
        ++tables;
        const auto got = knora_e_select(table_of(correct, M, 2));
        bad += got == oracle::knora_e_descent(correct, M) ? 0 : 1;
        bool any_first = false;
        for (std::size_t m = 0; m < M; ++m) any_first = any_first || correct[0][m];
        const bool whole = got == oracle::everyone(M);
        // Whole pool exactly when nobody is right on the nearest neighbour, unless
        // every model is tied at the longest prefix.
        if (!any_first) {
            ++fallbacks;
            bad += whole ? 0 : 1;
        } else {
            std::size_t longest = 0;
            std::vector<std::size_t> run(M, 0);
            for (std::size_t m = 0; m < M; ++m) {
                while (run[m] < correct.size() && correct[run[m]][m]) ++run[m];
                longest = std::max(longest, run[m]);
            }
            const bool all_tied = std::all_of(run.begin(), run.end(), [&](std::size_t r) { return r == longest; });
            bad += whole == all_tied ? 0 : 1;
        }
    };
    // Exhaustive: every 3 x 3 correctness table.
    for (unsigned bits = 0; bits < 512; ++bits) {
        std::vector<std::vector<bool>> c(3, std::vector<bool>(3));
        for (unsigned i = 0; i < 9; ++i) c[i / 3][i % 3] = (bits >> i) & 1U;
        check(c, 3);
    }
    // Full-size tables (K = 7, M = 5), biased towards long correct runs.
    std::mt19937_64 gen(7);
    std::bernoulli_distribution right(0.8);
    for (int t = 0; t < 200; ++t) {
        std::vector<std::vector<bool>> c(7, std::vector<bool>(5));
        for (auto& row : c) {
            for (std::size_t m = 0; m < 5; ++m) row[m] = right(gen);
        }
        check(c, 5);
    }
    return {bad == 0 && tables >= 200,
            std::to_string(tables) + " tables, " + std::to_string(fallbacks) + " with no model right on the nearest neighbour, " +
                std::to_string(bad) + " disagreements"};
}

Outcome metades_shape() {
    bool ok = metades_dimension(7, 5) == 21;
    std::size_t examples = 0;
    std::size_t bad = 0;
    for (std::uint64_t s = 0; s < 3; ++s) {
        const auto ds = zscore_fit_apply(synth_dataset(SynthSpec{.n = 90, .d = 3, .classes = 3, .cluster_std = 1.5, .label_noise = 0.1, .informative = 3}, s)).train;
        const auto pool = generate_pool(PoolScheme::BDT, ds, PoolOptions{.size = 10}, s);
        const auto set = metades_training_set(compute_pool_outputs(pool, ds.features, true), ds, 7, 5);
        ok = ok && set.features.cols() == 21;
        for (std::size_t r = 0; r < set.features.rows(); ++r) {
            const auto f = set.features.row(r);
            double mean = 0.0;
            for (std::size_t j = 0; j < 7; ++j) mean += f[j];
            bad += std::abs(f[14] - mean / 7.0) < 1e-15 ? 0 : 1;
            ++examples;
        }
    }
    const std::vector<double> low{0.2, 0.5, 0.1};
    const bool fallback = metades_select_from(low, 0.5) == whole_pool(3);
    return {ok && bad == 0 && fallback,
            "dimension " + std::to_string(metades_dimension(7, 5)) + ", f3 = mean(f1) on " + std::to_string(examples - bad) + "/" +
                std::to_string(examples) + " meta-examples, empty-selection fallback " + (fallback ? "ok" : "broken")};
}

std::string run_capture(const std::string& cmd) {
    std::string out;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) {
        throw std::runtime_error("cannot run " + cmd);
    }
    char buf[4096];
    std::size_t n = 0;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    if (pclose(pipe) != 0) {
        throw std::runtime_error("command failed: " + cmd);
    }
    return out;
}

Outcome determinism() {
    const auto dir = std::filesystem::temp_directory_path() / "mlrs_acceptance_determinism";
    std::filesystem::remove_all(dir);
    const std::string cli = MLRS_CLI_PATH;
    run_capture(cli + " --out " + dir.string() + " synth --count 2");
    const auto csv = (dir / "datasets" / "synth_001.csv").string();
    const auto a = run_capture(cli + " --seed 11 --pool-size 10 --workers 1 grid " + csv);
    const auto b = run_capture(cli + " --seed 11 --pool-size 10 --workers 1 grid " + csv);
    const auto c = run_capture(cli + " --seed 11 --pool-size 10 --workers 8 grid " + csv);
    std::filesystem::remove_all(dir);
    const bool ok = !a.empty() && a == b && a == c;
    return {ok, std::to_string(a.size()) + " bytes; rerun " + (a == b ? "identical" : "differs") + ", workers 1 vs 8 " +
                    (a == c ? "identical" : "differs")};
}

Outcome leakage() {
    ExperimentConfig cfg;
    cfg.pool.size = 6;
    cfg.pool.lit_epochs = 20;
    cfg.workers = workers();
    std::vector<Dataset> corpus;
    for (const auto& m : default_corpus_manifest(8, 3)) corpus.push_back(synth_dataset(m.spec, m.seed, m.id));
    auto records = prepare_records(corpus, cfg);

    // Meta-features: replace one test partition by noise.
    auto split = split_for(corpus[0], cfg);
    const auto before = prepare_record(split, cfg).features;
    Rng rng(1);
    for (auto& v : split.test.features.data()) v = 100.0 * rng.normal();
    const bool features_same = prepare_record(split, cfg).features == before;

    // Recommender of the fold holding out dataset 3: replace that dataset by noise.
    bool recommenders_same = true;
    auto noisy = corpus[3];
    for (auto& v : noisy.features.data()) v = rng.normal();
    for (auto& y : noisy.labels) y = static_cast<int>(rng.below(static_cast<std::uint64_t>(noisy.n_classes)));
    auto mutated = records;
    mutated[3] = prepare_record(noisy, cfg);
    for (const auto& sc : {ScenarioConfig::pool_for(DsMethod::KNORA_E), ScenarioConfig::ds_for(PoolScheme::RF), ScenarioConfig::pair()}) {
        const auto mt = build_meta_dataset(records, sc);
        const auto mt2 = build_meta_dataset(mutated, sc);
        std::size_t held = mt.rows.size();
        for (std::size_t i = 0; i < mt.rows.size(); ++i) {
            if (mt.rows[i].dataset_id == corpus[3].id) held = i;
        }
        if (held == mt.rows.size() || mt2.rows.size() != mt.rows.size()) {
            recommenders_same = false;
            continue;
        }
        const json a = lodo_fold(mt, held, cfg).recommender;
        const json b = lodo_fold(mt2, held, cfg).recommender;
        recommenders_same = recommenders_same && a.dump() == b.dump();
    }
    return {features_same && recommenders_same, std::string("meta-features ") + (features_same ? "bit-identical" : "changed") +
                                                    ", fold recommenders " + (recommenders_same ? "bit-identical" : "changed")};
}

Outcome degeneracy() {
    const auto toy = separable_toy();
    std::string what;
    try {
        adaboost_samme(BoostBase::perceptron, zscore_fit_apply(toy).train, 20, 1);
    } catch (const error& e) {
        if (e.code() == errc::degenerate_pool) what = e.what();
    }
    const bool one_model = what.find("produced 1 model") != std::string::npos;

    ExperimentConfig cfg;
    cfg.pool.size = 10;
    std::vector<DatasetRecord> records{prepare_record(toy, cfg)};
    const auto mt = build_meta_dataset(records, ScenarioConfig::pair());
    const bool excluded = mt.rows.empty() && mt.excluded.size() == 1 && mt.excluded[0].dataset_id == toy.id &&
                          mt.excluded[0].reason.starts_with("BSP: DegeneratePool");
    return {one_model && excluded, "boosting: '" + what + "'; exclusion: " + (excluded ? mt.excluded[0].reason : std::string("missing"))};
}

Outcome normalization() {
    double worst_mean = 0.0;
    double worst_std = 0.0;
    for (const auto& m : default_corpus_manifest(20, 9)) {
        const auto ds = synth_dataset(m.spec, m.seed, m.id);
        const auto split = stratified_split(ds, 0.75, m.seed);
        const auto train = zscore_fit_apply(split.train).train;
        for (std::size_t j = 0; j < train.dim(); ++j) {
            const auto col = train.features.column(j);
            const auto s = summarize_values(col);
            worst_mean = std::max(worst_mean, std::abs(s.mean));
            worst_std = std::max(worst_std, std::abs(s.sd - 1.0));
        }
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "max |mean| %.2e, max |std - 1| %.2e over 20 datasets", worst_mean, worst_std);
    return {worst_mean < 1e-9 && worst_std < 1e-9, buf};
}

Outcome meta_feature_sanity() {
    bool ok = meta_feature_count == 55;
    std::size_t checked = 0;
    for (const auto& m : default_corpus_manifest(10, 4)) {
        auto spec = m.spec;
        spec.imbalance = 0.0;
        spec.label_noise = 0.0;
        spec.n = 12 * spec.classes;
        const auto ds = synth_dataset(spec, m.seed, m.id);
        const auto v = extract_meta_features(ds, 1);
        ok = ok && v.values.size() == 55;
        ok = ok && std::all_of(v.values.begin(), v.values.end(), [](double x) { return std::isfinite(x); });
        ok = ok && std::abs(v["c2"]) < 1e-12 && std::abs(v["c1"] - 1.0) < 1e-12;
        ok = ok && v["n3"] == oracle::loo_1nn_error(detail::canonical_order(ds));
        ok = ok && v["t2"] == static_cast<double>(ds.dim()) / static_cast<double>(ds.size());
        ++checked;
    }
    return {ok, std::to_string(checked) + " balanced datasets with n <= 48"};
}

Outcome lit_gradient() {
    Dataset ds;
    ds.n_classes = 2;
    ds.features = Matrix(12, 2);
    Rng rng(5);
    for (std::size_t i = 0; i < 12; ++i) {
        ds.features(i, 0) = rng.normal() + (i % 2 == 0 ? 1.0 : -1.0);
        ds.features(i, 1) = rng.normal();
        ds.labels.push_back(static_cast<int>(i % 2));
    }
    LinearParams frozen(2, 2);
    for (auto& w : frozen.weights) w = rng.normal();
    const std::vector<const LinearParams*> frozen_list{&frozen};
    const auto penalty = lit_penalty(frozen_list, ds.features);
    LinearParams params(2, 2);
    for (auto& w : params.weights) w = rng.normal();
    for (auto& b : params.bias) b = 0.3 * rng.normal();
    const double lambda = 1.0;
    LinearParams grad;
    logistic_objective(params, ds.features, ds.labels, lambda, penalty, &grad);
    auto flat = params.weights;
    flat.insert(flat.end(), params.bias.begin(), params.bias.end());
    const auto numeric = oracle::numeric_gradient(
        [&](const std::vector<double>& v) {
            LinearParams p(2, 2);
            std::copy(v.begin(), v.begin() + 4, p.weights.begin());
            std::copy(v.begin() + 4, v.end(), p.bias.begin());
            return logistic_objective(p, ds.features, ds.labels, lambda, penalty, nullptr);
        },
        flat, 1e-6);
    double worst = 0.0;
    for (std::size_t i = 0; i < 4; ++i) worst = std::max(worst, std::abs(grad.weights[i] - numeric[i]));
    for (std::size_t i = 0; i < 2; ++i) worst = std::max(worst, std::abs(grad.bias[i] - numeric[4 + i]));
    const double pen = penalty(params, ds.features, nullptr);
    char buf[128];
    std::snprintf(buf, sizeof buf, "max |analytic - numeric| = %.2e, penalty term %.4f", worst, pen);
    return {worst < 1e-5 && pen > 0.0, buf};
}

Outcome directional() {
    ExperimentConfig cfg;
    cfg.seed = 42;
    cfg.pool.size = 20;
    cfg.workers = workers();
    std::vector<Dataset> corpus;
    for (const auto& m : default_corpus_manifest(60, cfg.seed)) corpus.push_back(synth_dataset(m.spec, m.seed, m.id));
    const auto records = prepare_records(corpus, cfg);
    const auto rep = lodo_evaluate(records, cfg);

    std::ostringstream detail;
    int a_ok = 0;
    int b_ok = 0;
    detail << "(a) MLRS-P vs Majority:";
    for (const auto m : all_ds_methods) {
        const auto& s = rep.scenario(ScenarioConfig::pool_for(m));
        a_ok += s.wins >= s.majority_wins ? 1 : 0;
        detail << " " << to_string(m) << " " << s.wins << "/" << s.majority_wins;
    }
    detail << " -> " << a_ok << "/7; (b) MLRS-DS vs Majority:";
    for (const auto p : all_pool_schemes) {
        const auto& s = rep.scenario(ScenarioConfig::ds_for(p));
        b_ok += s.wins >= s.majority_wins ? 1 : 0;
        detail << " " << to_string(p) << " " << s.wins << "/" << s.majority_wins;
    }
    const auto& pds = rep.scenario(ScenarioConfig::pair());
    const auto& best = rep.fixed_pairs.front();
    const bool c_ok = pds.wins >= best.wins;
    detail << " -> " << b_ok << "/7; (c) MLRS-PDS " << rate_cell(pds.wins, pds.n()) << " vs best pair (" << to_string(best.pool) << ", "
           << to_string(best.ds) << ") " << rate_cell(best.wins, pds.n()) << "; " << rep.n_datasets << " datasets";
    return {a_ok >= 5 && b_ok >= 5 && c_ok, detail.str()};
}

Outcome accounting() {
    std::size_t bad = 0;
    std::string first_bad;
    for (const auto& c : published_cells()) {
        const auto got = format_rate(c.wins, published_n);
        if (got != c.printed) {
            if (bad == 0) first_bad = std::string(c.label) + ": " + got + " != " + std::string(c.printed);
            ++bad;
        }
    }
    const bool cells = rate_cell(228, 288) == "79.16 (228)" && rate_cell(187, 288) == "64.93 (187)" && rate_cell(62, 288) == "21.52 (62)";
    return {bad == 0 && cells, std::to_string(published_cells().size() - bad) + "/" + std::to_string(published_cells().size()) +
                                   " published percentages reproduced" + (first_bad.empty() ? "" : "; " + first_bad)};
}

}  // namespace

int main() {
    report(1, "oracle equivalence (OLA, MLA, KNORA-E, KNORA-U, DES-P, DES-MI)", oracle_equivalence);
    report(2, "KNORA-E descent", knora_e_descent);
    report(3, "META-DES shape and semantics", metades_shape);
    report(4, "determinism of grid across runs and worker counts", determinism);
    report(5, "leakage", leakage);
    report(6, "degeneracy of boosting on a separable toy", degeneracy);
    report(7, "normalization", normalization);
    report(8, "meta-feature sanity", meta_feature_sanity);
    report(9, "LIT gradient check", lit_gradient);
    report(10, "directional ordering under LODO", directional);
    report(11, "accounting identities", accounting);
    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
