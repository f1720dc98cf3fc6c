#include "mlrs/mlrs.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace mlrs;

namespace {

struct GlobalFlags {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> pool_size;
    std::optional<std::size_t> k;
    std::optional<std::size_t> workers;
    std::string config;
    std::string out = "mlrs_out";
};

ExperimentConfig resolve_config(const GlobalFlags& g) {
    ExperimentConfig cfg;
    if (!g.config.empty()) {
        cfg = read_json(g.config).get<ExperimentConfig>();
    }
    if (g.seed) cfg.seed = *g.seed;
    if (g.pool_size) cfg.pool.size = *g.pool_size;
    if (g.k) cfg.ds.k = *g.k;
    if (g.workers) cfg.workers = *g.workers;
    return cfg;
}

/// Files are taken as given; directories contribute their *.csv files in name order.
std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
    std::vector<fs::path> out;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(in)) {
                if (e.is_regular_file() && e.path().extension() == ".csv") {
                    found.push_back(e.path());
                }
            }
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            out.emplace_back(in);
        }
    }
    return out;
}

std::vector<Dataset> load_all(const std::vector<std::string>& inputs) {
    std::vector<Dataset> out;
    for (const auto& p : expand_inputs(inputs)) {
        out.push_back(load_dataset(p));
    }
    return out;
}

ScenarioConfig scenario_from_flags(const std::string& scenario, const std::string& fixed) {
    ScenarioConfig sc;
    sc.scenario = parse_scenario(scenario);
    if (sc.scenario == Scenario::pool) {
        if (fixed.empty()) throw error(errc::invalid_argument, "scenario I needs --fixed <DS method>");
        sc.fixed_ds = parse_ds_method(fixed);
    } else if (sc.scenario == Scenario::ds) {
        if (fixed.empty()) throw error(errc::invalid_argument, "scenario II needs --fixed <pool scheme>");
        sc.fixed_pool = parse_pool_scheme(fixed);
    } else if (!fixed.empty()) {
        throw error(errc::invalid_argument, "scenario III takes no --fixed value");
    }
    return sc;
}

void emit(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        write_text(path, text);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic ensemble selection toolkit and pipeline recommender"};
    app.require_subcommand(1);
    GlobalFlags g;
    app.add_option("--seed", g.seed, "Master seed");
    app.add_option("--pool-size", g.pool_size, "Classifiers per pool");
    app.add_option("--k", g.k, "Region-of-competence size");
    app.add_option("--workers", g.workers, "Worker threads");
    app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "Output directory")->capture_default_str();

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
    std::string manifest_path;
    std::size_t count = 60;
    synth->add_option("--manifest", manifest_path, "JSON Lines manifest ({id, spec, seed} per line)")->check(CLI::ExistingFile);
    synth->add_option("--count", count, "Datasets in the default manifest")->capture_default_str();

    // grid
    auto* grid = app.add_subcommand("grid", "Evaluate the 7x7 (pool, DS) grid on one dataset");
    std::string dataset_path;
    std::string output_path;
    grid->add_option("dataset", dataset_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
    grid->add_option("-o,--output", output_path, "Output file (default stdout)");

    // metafeatures
    auto* mf = app.add_subcommand("metafeatures", "Meta-feature CSV row of a dataset's train partition");
    bool no_header = false;
    mf->add_option("dataset", dataset_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
    mf->add_option("-o,--output", output_path, "Output file (default stdout)");
    mf->add_flag("--no-header", no_header, "Omit the header line");

    // build-mt
    auto* build = app.add_subcommand("build-mt", "Build a meta-dataset CSV");
    std::vector<std::string> inputs;
    std::string scenario = "III";
    std::string fixed;
    build->add_option("datasets", inputs, "Dataset CSVs or directories")->required();
    build->add_option("--scenario", scenario, "I, II or III")->capture_default_str();
    build->add_option("--fixed", fixed, "Fixed DS method (I) or pool scheme (II)");
    build->add_option("-o,--output", output_path, "Output file (default <out>/meta_dataset.csv)");

    // train
    auto* train = app.add_subcommand("train", "Train a recommender from a meta-dataset CSV");
    std::string mt_path;
    train->add_option("meta_dataset", mt_path, "Meta-dataset CSV")->required()->check(CLI::ExistingFile);
    train->add_option("--scenario", scenario, "I, II or III")->capture_default_str();
    train->add_option("--fixed", fixed, "Fixed DS method (I) or pool scheme (II)");
    train->add_option("-o,--output", output_path, "Output file (default <out>/recommender.json)");

    // recommend
    auto* rec = app.add_subcommand("recommend", "Recommend a configuration for a dataset");
    std::string model_path;
    rec->add_option("model", model_path, "Recommender JSON")->required()->check(CLI::ExistingFile);
    rec->add_option("dataset", dataset_path, "Dataset CSV")->required()->check(CLI::ExistingFile);

    // lodo
    auto* lodo = app.add_subcommand("lodo", "Leave-one-dataset-out evaluation over a corpus");
    lodo->add_option("datasets", inputs, "Dataset CSVs or directories")->required();

    // report
    auto* report = app.add_subcommand("report", "Render a saved report as markdown");
    std::string report_path;
    report->add_option("report", report_path, "report.json")->required()->check(CLI::ExistingFile);
    report->add_option("-o,--output", output_path, "Output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg = resolve_config(g);
        const fs::path out = g.out;
        const auto cache = out / "cache";

        if (*synth) {
            std::vector<SynthRecord> manifest;
            if (manifest_path.empty()) {
                manifest = default_corpus_manifest(count, cfg.seed);
            } else {
                std::ifstream in(manifest_path);
                std::string line;
                while (std::getline(in, line)) {
                    if (!line.empty()) {
                        manifest.push_back(json::parse(line).get<SynthRecord>());
                    }
                }
            }
            std::string lines;
            for (const auto& r : manifest) {
                std::ostringstream csv;
                write_dataset_csv(synth_dataset(r.spec, r.seed, r.id), csv);
                write_text(out / "datasets" / (r.id + ".csv"), csv.str());
                lines += json(r).dump() + "\n";
            }
            write_text(out / "manifest.jsonl", lines);
            std::cout << "wrote " << manifest.size() << " datasets to " << (out / "datasets").string() << "\n";
        } else if (*grid) {
            emit(to_document("grid_result", run_grid(load_dataset(dataset_path), cfg)).dump(2) + "\n", output_path);
        } else if (*mf) {
            const auto ds = load_dataset(dataset_path);
            const auto split = split_for(ds, cfg);
            const auto v = extract_meta_features(split.train, derive_seed(cfg.seed, ds.id, "meta-features"), cfg.meta_features);
            emit((no_header ? "" : meta_feature_csv_header() + "\n") + meta_feature_csv_row(ds.id, v) + "\n", output_path);
        } else if (*build) {
            const auto sc = scenario_from_flags(scenario, fixed);
            const auto records = prepare_records(load_all(inputs), cfg, cache);
            const auto mt = build_meta_dataset(records, sc);
            std::ostringstream csv;
            write_meta_dataset_csv(mt, csv);
            write_text(output_path.empty() ? out / "meta_dataset.csv" : fs::path(output_path), csv.str());
            for (const auto& e : mt.excluded) {
                std::cerr << "excluded " << e.dataset_id << ": " << e.reason << "\n";
            }
            std::cout << mt.rows.size() << " rows, " << mt.excluded.size() << " excluded\n";
        } else if (*train) {
            const auto sc = scenario_from_flags(scenario, fixed);
            std::ifstream in(mt_path);
            const auto mt = read_meta_dataset_csv(in, sc);
            const auto model = train_recommender(mt, RecommenderOptions{cfg.meta_model}, derive_seed(cfg.seed, "train"));
            const fs::path path = output_path.empty() ? out / "recommender.json" : fs::path(output_path);
            save(path, "recommender", model);
            std::cout << "saved " << path.string() << "\n";
        } else if (*rec) {
            const auto model = load<Recommender>(model_path, "recommender");
            const auto ds = load_dataset(dataset_path);
            const auto split = split_for(ds, cfg);
            const auto v = extract_meta_features(split.train, derive_seed(cfg.seed, ds.id, "meta-features"), cfg.meta_features);
            std::cout << json(recommend(model, v)).dump() << "\n";
        } else if (*lodo) {
            const auto records = prepare_records(load_all(inputs), cfg, cache);
            const auto r = lodo_evaluate(records, cfg);
            write_report(r, out);
            std::cout << render_markdown(r);
        } else if (*report) {
            emit(render_markdown(read_report(report_path)), output_path);
        }
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
