#include "lcmon/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lcmon/assessment.hpp"
#include "lcmon/boosting.hpp"
#include "lcmon/errors.hpp"
#include "lcmon/evaluation.hpp"
#include "lcmon/mrmr.hpp"
#include "lcmon/synthetic.hpp"
#include "lcmon/text.hpp"

namespace fs = std::filesystem;

namespace lcmon {

namespace {

nlohmann::json manifest_to_json(const RunManifest& m) {
    nlohmann::json dsp{
        {"ma_window", m.dsp.ma_window},
        {"es_alpha", m.dsp.es_alpha},
        {"pulse_threshold_floor_ma", m.dsp.pulse_threshold_floor_ma},
        {"pulse_threshold_mad_scale", m.dsp.pulse_threshold_mad_scale},
    };
    if (m.dsp.pulse_threshold_ma)
        dsp["pulse_threshold_ma"] = *m.dsp.pulse_threshold_ma;
    else
        dsp["pulse_threshold_ma"] = nullptr;
    return nlohmann::json{
        {"dsp", dsp},
        {"catalog",
         {{"residual_stats_ma", m.catalog.residual_stats_ma},
          {"residual_stats_es", m.catalog.residual_stats_es},
          {"fundamental_amplitude", m.catalog.fundamental_amplitude},
          {"pulse_bins_ma", m.catalog.pulse_bins_ma},
          {"pulse_bins_percent", m.catalog.pulse_bins_percent},
          {"harmonics", m.catalog.harmonics},
          {"applied_voltage", m.catalog.applied_voltage}}},
        {"models",
         {{"classifier", m.classifier_model},
          {"wet", m.wet_model},
          {"dry", m.dry_model}}},
        {"u_ph_kv", m.u_ph_kv},
        {"r", m.r},
        {"sigma_default_kv", m.sigma_default_kv},
        {"seed", m.seed},
    };
}

RunManifest manifest_from_json(const nlohmann::json& j) {
    RunManifest m;
    if (j.contains("dsp")) {
        const auto& d = j.at("dsp");
        if (d.contains("ma_window")) m.dsp.ma_window = d.at("ma_window").get<std::size_t>();
        if (d.contains("es_alpha")) m.dsp.es_alpha = d.at("es_alpha").get<double>();
        if (d.contains("pulse_threshold_floor_ma"))
            m.dsp.pulse_threshold_floor_ma = d.at("pulse_threshold_floor_ma").get<double>();
        if (d.contains("pulse_threshold_mad_scale"))
            m.dsp.pulse_threshold_mad_scale = d.at("pulse_threshold_mad_scale").get<double>();
        if (d.contains("pulse_threshold_ma") && !d.at("pulse_threshold_ma").is_null())
            m.dsp.pulse_threshold_ma = d.at("pulse_threshold_ma").get<double>();
    }
    if (j.contains("catalog")) {
        const auto& c = j.at("catalog");
        auto get = [&](const char* key, bool& field) {
            if (c.contains(key)) field = c.at(key).get<bool>();
        };
        get("residual_stats_ma", m.catalog.residual_stats_ma);
        get("residual_stats_es", m.catalog.residual_stats_es);
        get("fundamental_amplitude", m.catalog.fundamental_amplitude);
        get("pulse_bins_ma", m.catalog.pulse_bins_ma);
        get("pulse_bins_percent", m.catalog.pulse_bins_percent);
        get("harmonics", m.catalog.harmonics);
        get("applied_voltage", m.catalog.applied_voltage);
    }
    if (j.contains("models")) {
        const auto& mo = j.at("models");
        if (mo.contains("classifier")) m.classifier_model = mo.at("classifier").get<std::string>();
        if (mo.contains("wet")) m.wet_model = mo.at("wet").get<std::string>();
        if (mo.contains("dry")) m.dry_model = mo.at("dry").get<std::string>();
    }
    if (j.contains("u_ph_kv")) m.u_ph_kv = j.at("u_ph_kv").get<double>();
    if (j.contains("r")) m.r = j.at("r").get<double>();
    if (j.contains("sigma_default_kv"))
        m.sigma_default_kv = j.at("sigma_default_kv").get<double>();
    if (j.contains("seed")) m.seed = j.at("seed").get<std::uint64_t>();
    return m;
}

}  // namespace

RunManifest read_run_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path);
    try {
        nlohmann::json j;
        in >> j;
        return manifest_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": bad manifest JSON: " + e.what());
    }
}

void write_run_manifest(const RunManifest& m, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << manifest_to_json(m).dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

namespace {

// Shared command-line state: the loaded manifest plus where outputs go.
struct CliContext {
    std::string manifest_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_given = false;
    RunManifest manifest;

    void finalize(const CLI::Option* seed_opt) {
        if (!manifest_path.empty()) manifest = read_run_manifest(manifest_path);
        seed_given = seed_opt->count() > 0;
        if (seed_given)
            manifest.seed = seed;
        else
            seed = manifest.seed;
    }

    fs::path out_path(const std::string& name) const {
        fs::create_directories(out_dir);
        return fs::path(out_dir) / name;
    }

    void write_effective_manifest() const {
        write_run_manifest(manifest, out_path("run-manifest.json").string());
    }
};

std::vector<std::string> expand_inputs(const std::vector<std::string>& inputs) {
    std::vector<std::string> files;
    for (const auto& input : inputs) {
        if (fs::is_directory(input)) {
            std::vector<std::string> here;
            for (const auto& entry : fs::directory_iterator(input)) {
                if (entry.is_regular_file() && entry.path().extension() == ".csv" &&
                    entry.path().filename() != "corpus_manifest.csv")
                    here.push_back(entry.path().string());
            }
            std::sort(here.begin(), here.end());
            files.insert(files.end(), here.begin(), here.end());
        } else {
            files.push_back(input);
        }
    }
    return files;
}

int cmd_generate(CliContext& ctx, const CorpusConfig& cfg) {
    CorpusConfig effective = cfg;
    effective.seed = ctx.seed;
    const auto rows = generate_dataset(effective, ctx.out_dir);
    ctx.write_effective_manifest();
    std::cout << "generated " << rows.size() << " waveforms into " << ctx.out_dir << "\n";
    return 0;
}

struct ExtractArgs {
    std::vector<std::string> inputs;
    std::string corpus_manifest;
    std::string matrix_name = "features.csv";
    std::string catalog_name = "catalog.json";
    bool dump_signals = false;
};

// Plot-ready intermediate signals for one record: the raw and filtered
// waveforms with the fitted fundamental and its residual, plus the harmonic
// amplitudes.
void dump_signal_files(const Waveform& w, const DspConfig& dsp, const fs::path& signals_path,
                       const fs::path& spectrum_path) {
    const Waveform ma = moving_average(w, dsp.ma_window);
    const Waveform es = exponential_smoothing(w, dsp.es_alpha);
    const Fundamental fund = extract_fundamental(ma);
    const Waveform res = residual(w, fund);

    std::ofstream sig(signals_path, std::ios::trunc);
    if (!sig) throw IoError("cannot write " + signals_path.string());
    sig << "index,raw,ma,es,fundamental,residual\n";
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        sig << i << ',' << fmt_double(w.samples[i]) << ',' << fmt_double(ma.samples[i])
            << ',' << fmt_double(es.samples[i]) << ',' << fmt_double(fund.reconstructed[i])
            << ',' << fmt_double(res.samples[i]) << '\n';
    }

    std::ofstream spec(spectrum_path, std::ios::trunc);
    if (!spec) throw IoError("cannot write " + spectrum_path.string());
    spec << "harmonic,amplitude_ma\n";
    const HarmonicSpectrum spectrum = harmonic_spectrum(w);
    for (int k = 1; k <= 10; ++k)
        spec << k << ',' << fmt_double(spectrum.at(k)) << '\n';
}

int cmd_extract(CliContext& ctx, const ExtractArgs& args) {
    const FeatureCatalog catalog = build_catalog(ctx.manifest.catalog);
    FeatureMatrix matrix = FeatureMatrix::from_catalog(catalog);

    struct Item {
        std::string file;
        std::optional<Condition> condition;
        std::optional<double> pct;
    };
    std::vector<Item> items;
    if (!args.corpus_manifest.empty()) {
        const auto rows = read_corpus_manifest(args.corpus_manifest);
        const fs::path base = fs::path(args.corpus_manifest).parent_path();
        for (const auto& r : rows)
            items.push_back({(base / r.file).string(), r.condition, r.pct_u50});
        matrix.condition.emplace();
        matrix.pct_u50.emplace();
    } else {
        for (const auto& f : expand_inputs(args.inputs)) items.push_back({f, {}, {}});
    }
    if (items.empty()) throw InvalidArgument("extract: no input waveforms");

    std::size_t failures = 0;
    for (const auto& item : items) {
        try {
            const Waveform w = read_waveform_csv(item.file);
            const FeatureVector fv = extract(w, catalog, ctx.manifest.dsp);
            matrix.add_row(fv.values);
            if (matrix.condition) matrix.condition->push_back(*item.condition);
            if (matrix.pct_u50) matrix.pct_u50->push_back(*item.pct);
            if (args.dump_signals) {
                const std::string stem = fs::path(item.file).stem().string();
                dump_signal_files(w, ctx.manifest.dsp,
                                  ctx.out_path(stem + ".signals.csv"),
                                  ctx.out_path(stem + ".spectrum.csv"));
            }
        } catch (const std::exception& e) {
            ++failures;
            std::cerr << "error: " << item.file << ": " << e.what() << "\n";
        }
    }

    write_matrix_csv(matrix, ctx.out_path(args.matrix_name).string());
    write_catalog_json(catalog, ctx.out_path(args.catalog_name).string());
    ctx.write_effective_manifest();
    std::cout << "extracted " << matrix.n_rows() << "/" << items.size()
              << " waveforms into " << args.matrix_name << "\n";
    return failures == 0 ? 0 : 1;
}

struct RankArgs {
    std::string matrix;
    std::string target = "condition";
    std::string filter_condition;
    std::string rank_name = "ranking.json";
    std::size_t top_k = 0;  // 0 = all
    int bins = 10;
};

int cmd_rank(CliContext& ctx, const RankArgs& args) {
    FeatureMatrix m = read_matrix_csv(args.matrix);
    if (!args.filter_condition.empty()) {
        const Condition c = condition_from_string(args.filter_condition);
        if (!m.condition) throw InvalidArgument("rank: matrix lacks condition labels");
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < m.condition->size(); ++i)
            if ((*m.condition)[i] == c) keep.push_back(i);
        m = m.select_rows(keep);
    }

    MrmrConfig cfg;
    cfg.bins = args.bins;
    std::vector<double> target;
    TargetKind kind;
    if (args.target == "condition") {
        target = m.condition_targets();
        kind = TargetKind::categorical;
    } else if (args.target == "pct_u50") {
        if (!m.pct_u50) throw InvalidArgument("rank: matrix lacks pct_u50 labels");
        target = *m.pct_u50;
        kind = TargetKind::continuous;
    } else {
        throw InvalidArgument("rank: target must be 'condition' or 'pct_u50'");
    }
    const std::size_t k = args.top_k == 0 ? m.n_cols() : args.top_k;
    const SelectionResult result = mrmr_rank(m, target, kind, k, cfg);
    write_selection_json(result, ctx.out_path(args.rank_name).string());
    ctx.write_effective_manifest();
    std::cout << "ranked " << result.ranked_ids.size() << " features; best '"
              << result.ranked_ids.front() << "'\n";
    return 0;
}

struct TrainArgs {
    std::string matrix;
    std::string task = "classification";
    std::string preset_name;
    std::string hp_file;
    std::string ranking_file;  // precomputed report; empty = rank here
    std::string model_name = "model.json";
    std::string rank_name = "ranking.json";
    std::size_t top_k = 0;  // 0 = task default
    int bins = 10;
    double train_fraction = 0.8;
    double min_voltage_kv = 0.0;  // 0 disables the floor
};

int cmd_train(CliContext& ctx, const TrainArgs& args) {
    FeatureMatrix data = read_matrix_csv(args.matrix);

    // Optional exclusion of low-voltage records (measurement-standard floors
    // are lab-specific, so this is off unless asked for).
    if (args.min_voltage_kv > 0.0) {
        const std::size_t volt_col = data.column_index("applied_voltage");
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < data.n_rows(); ++i)
            if (data.columns[volt_col][i] >= args.min_voltage_kv) keep.push_back(i);
        data = data.select_rows(keep);
    }

    const bool classification = args.task == "classification";
    if (!classification && args.task != "regression-wet" && args.task != "regression-dry")
        throw InvalidArgument("train: task must be classification|regression-wet|regression-dry");

    Hyperparameters hp;
    if (!args.hp_file.empty()) {
        hp = load_hyperparameters_json(args.hp_file);
    } else if (!args.preset_name.empty()) {
        hp = preset(args.preset_name);
    } else {
        hp = preset(classification ? "tuned-classifier"
                                   : (args.task == "regression-wet" ? "tuned-wet"
                                                                    : "tuned-dry"));
    }
    hp.seed = ctx.seed;

    if (!classification) {
        if (!data.condition) throw InvalidArgument("train: matrix lacks condition labels");
        if (!data.pct_u50) throw InvalidArgument("train: matrix lacks pct_u50 labels");
        const Condition c = args.task == "regression-wet" ? Condition::wet : Condition::dry;
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < data.condition->size(); ++i)
            if ((*data.condition)[i] == c) keep.push_back(i);
        data = data.select_rows(keep);
        hp.objective = Objective::squared;
    } else {
        if (!data.condition) throw InvalidArgument("train: matrix lacks condition labels");
        hp.objective = Objective::logistic;
    }

    auto [train_m, test_m] = split(data, SplitSpec{args.train_fraction, ctx.seed});
    const std::vector<double> y_train =
        classification ? train_m.condition_targets() : *train_m.pct_u50;

    MrmrConfig mrmr_cfg;
    mrmr_cfg.bins = args.bins;
    const std::size_t k = args.top_k == 0 ? (classification ? 20 : 10) : args.top_k;
    // Ranking happens on the training split only unless the caller supplies
    // a precomputed report.
    const SelectionResult rank =
        args.ranking_file.empty()
            ? mrmr_rank(train_m, y_train,
                        classification ? TargetKind::categorical : TargetKind::continuous,
                        train_m.n_cols(), mrmr_cfg)
            : read_selection_json(args.ranking_file);
    if (k > rank.ranked_ids.size())
        throw InvalidArgument("train: top-k exceeds the feature count");
    const std::vector<std::string> ids(rank.ranked_ids.begin(),
                                       rank.ranked_ids.begin() + static_cast<long>(k));

    BoostedModel model = train(train_m.select_columns(ids), y_train, hp);

    // Metrics on both splits; the held-out one is stored in the model so
    // assessment can convert the estimate into a deviation without extra
    // inputs.
    auto f1_of = [&](const FeatureMatrix& part, const std::vector<double>& prob) {
        std::int64_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < prob.size(); ++i) {
            const bool wet_hat = prob[i] >= kWetProbabilityThreshold;
            const bool wet = (*part.condition)[i] == Condition::wet;
            if (wet_hat && wet) ++tp;
            if (wet_hat && !wet) ++fp;
            if (!wet_hat && wet) ++fn;
        }
        return f1_score(tp, fp, fn);
    };
    const auto pred_train = predict_matrix(model, train_m.select_columns(ids));
    const auto pred_test = predict_matrix(model, test_m.select_columns(ids));
    if (classification) {
        model.metrics.validation_f1 = f1_of(test_m, pred_test);
        std::cout << "task=classification features=" << k
                  << " train_f1=" << fmt_double(f1_of(train_m, pred_train))
                  << " validation_f1=" << fmt_double(*model.metrics.validation_f1) << "\n";
    } else {
        model.metrics.validation_rmse_pct = rmse_percent(*test_m.pct_u50, pred_test);
        std::cout << "task=" << args.task << " features=" << k << " train_rmse_pct="
                  << fmt_double(rmse_percent(*train_m.pct_u50, pred_train))
                  << " validation_rmse_pct="
                  << fmt_double(*model.metrics.validation_rmse_pct) << "\n";
    }

    save_model(model, ctx.out_path(args.model_name).string());
    write_selection_json(rank, ctx.out_path(args.rank_name).string());
    ctx.write_effective_manifest();
    return 0;
}

struct PredictArgs {
    std::string model;
    std::string matrix;
    std::string pred_name = "predictions.csv";
};

int cmd_predict(CliContext& ctx, const PredictArgs& args) {
    const BoostedModel model = load_model(args.model);
    const FeatureMatrix m = read_matrix_csv(args.matrix);
    const FeatureMatrix selected = m.select_columns(model.selected_feature_ids);
    const auto pred = predict_matrix(model, selected);

    std::ofstream out(ctx.out_path(args.pred_name), std::ios::trunc);
    if (!out) throw IoError("cannot write predictions: " + args.pred_name);
    out << "row,prediction\n";
    for (std::size_t i = 0; i < pred.size(); ++i)
        out << i << ',' << fmt_double(pred[i]) << '\n';
    if (!out) throw IoError("write failed: " + args.pred_name);
    ctx.write_effective_manifest();
    std::cout << "predicted " << pred.size() << " rows\n";
    return 0;
}

struct AssessArgs {
    std::string waveform;
    std::string record_name = "assessment.json";
    std::string log_file;
    std::string string_id;
    std::int64_t timestamp = 0;
};

int cmd_assess(CliContext& ctx, const AssessArgs& args) {
    const RunManifest& man = ctx.manifest;
    if (man.classifier_model.empty() || man.wet_model.empty() || man.dry_model.empty())
        throw InvalidArgument(
            "assess: classifier, wet and dry model paths are required (flags or manifest)");

    const BoostedModel classifier = load_model(man.classifier_model);
    const BoostedModel wet_model = load_model(man.wet_model);
    const BoostedModel dry_model = load_model(man.dry_model);

    const FeatureCatalog catalog = build_catalog(man.catalog);
    const Waveform w = read_waveform_csv(args.waveform);
    const FeatureVector fv = extract(w, catalog, man.dsp);

    const double prob_wet = predict_vector(classifier, fv, catalog);
    const bool wet = prob_wet >= kWetProbabilityThreshold;
    const BoostedModel& regressor = wet ? wet_model : dry_model;
    const std::string& regressor_path = wet ? man.wet_model : man.dry_model;

    const double pct_hat = predict_vector(regressor, fv, catalog);
    if (!(pct_hat > 0.0))
        throw InvalidArgument("assess: regressor produced a non-positive percentage");
    if (!regressor.metrics.validation_rmse_pct)
        throw InvalidArgument("assess: regressor model lacks a stored validation RMSE");
    const double pct_sigma_m = *regressor.metrics.validation_rmse_pct;

    const double u50_hat = u50_from_percent(man.u_ph_kv, pct_hat);
    const double sigma_m = sigma_m_from_percent(pct_sigma_m, u50_hat);
    const StateAssessment a =
        classify_state(u50_hat, man.sigma_default_kv, sigma_m, man.u_ph_kv, man.r);

    const std::string string_id =
        args.string_id.empty() ? fs::path(args.waveform).stem().string() : args.string_id;
    nlohmann::json record{
        {"timestamp", args.timestamp},
        {"string_id", string_id},
        {"u_ph_kv", a.u_ph_kv},
        {"r", a.r},
        {"condition", std::string(to_string(wet ? Condition::wet : Condition::dry))},
        {"condition_probability_wet", prob_wet},
        {"pct_u50", pct_hat},
        {"pct_sigma_m", pct_sigma_m},
        {"u50_hat_kv", a.u50_hat_kv},
        {"sigma_kv", man.sigma_default_kv},
        {"sigma_m_kv", a.sigma_m_hat_kv},
        {"sigma_t_kv", a.sigma_total_kv},
        {"state", std::string(to_string(a.state))},
        {"thresholds",
         {{"lower_3sigma_kv", a.thresholds.lower_3sigma},
          {"lower_1p28sigma_kv", a.thresholds.lower_1p28sigma}}},
        {"models",
         {{"classifier", man.classifier_model}, {"regressor", regressor_path}}},
    };

    {
        std::ofstream out(ctx.out_path(args.record_name), std::ios::trunc);
        if (!out) throw IoError("cannot write assessment: " + args.record_name);
        out << record.dump(2) << '\n';
        if (!out) throw IoError("write failed: " + args.record_name);
    }
    if (!args.log_file.empty()) {
        std::ofstream log(args.log_file, std::ios::app);
        if (!log) throw IoError("cannot open assessment log: " + args.log_file);
        log << record.dump() << '\n';
        if (!log) throw IoError("write failed: " + args.log_file);
    }
    ctx.write_effective_manifest();
    std::cout << string_id << ": " << to_string(a.state)
              << " (u50_hat=" << fmt_double(u50_hat) << " kV)\n";
    return 0;
}

struct SweepArgs {
    std::string matrix;
    std::string mode = "classification";
    std::vector<std::size_t> counts;
    std::size_t clf_features = 20;
    std::string csv_name = "sweep.csv";
    std::string json_name = "sweep.json";
};

int cmd_sweep(CliContext& ctx, const SweepArgs& args) {
    SweepTask task;
    if (args.mode == "classification") task = SweepTask::classification;
    else if (args.mode == "regression-wet") task = SweepTask::regression_wet;
    else if (args.mode == "regression-dry") task = SweepTask::regression_dry;
    else if (args.mode == "full") task = SweepTask::full_method;
    else
        throw InvalidArgument(
            "sweep: mode must be classification|regression-wet|regression-dry|full");

    const FeatureMatrix data = read_matrix_csv(args.matrix);
    SweepConfig cfg;
    cfg.split.seed = ctx.seed;
    cfg.seed = ctx.seed;
    cfg.feature_counts = args.counts;
    cfg.classifier_feature_count = args.clf_features;
    const SweepReport report = run_sweep(data, task, cfg);
    write_sweep_csv(report, ctx.out_path(args.csv_name).string());
    write_sweep_json(report, ctx.out_path(args.json_name).string());
    ctx.write_effective_manifest();
    std::cout << "sweep " << args.mode << ": " << report.rows.size() << " rows\n";
    return 0;
}

int cmd_report(const std::string& input) {
    const SweepReport report = read_sweep(input);
    std::cout << "task: " << to_string(report.task) << "\n";
    std::printf("%-14s %-16s %-10s %-10s %s\n", "feature_count", "model", "condition",
                "metric", "value");
    for (const auto& r : report.rows) {
        const std::string count = r.all_features ? "all" : std::to_string(r.feature_count);
        std::printf("%-14s %-16s %-10s %-10s %.6f\n", count.c_str(), r.model.c_str(),
                    r.condition.c_str(), r.metric.c_str(), r.value);
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Leakage-current condition monitoring pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    CliContext ctx;
    app.add_option("--manifest", ctx.manifest_path, "Run manifest JSON with shared defaults");
    app.add_option("--out-dir", ctx.out_dir, "Directory for command outputs");
    auto* seed_opt = app.add_option("--seed", ctx.seed, "Base seed for the command");

    // generate
    CorpusConfig gen_cfg;
    auto* generate = app.add_subcommand("generate", "Generate a labeled synthetic corpus");
    generate->add_option("--n", gen_cfg.n_per_condition, "Waveforms per condition");
    generate->add_option("--conductance-min", gen_cfg.conductance_min_us, "uS");
    generate->add_option("--conductance-max", gen_cfg.conductance_max_us, "uS");
    generate->add_option("--pct-min", gen_cfg.pct_u50_min, "Lowest applied %u50");
    generate->add_option("--pct-max", gen_cfg.pct_u50_max, "Highest applied %u50");
    generate->add_option("--sample-rate", gen_cfg.sample_rate, "Hz");
    generate->add_option("--duration", gen_cfg.duration_s, "seconds");

    // extract
    ExtractArgs ex;
    auto* extract_cmd = app.add_subcommand("extract", "Extract feature vectors from waveforms");
    extract_cmd->add_option("--input", ex.inputs, "Waveform CSV files or directories");
    extract_cmd->add_option("--corpus-manifest", ex.corpus_manifest,
                            "Corpus manifest; attaches labels");
    extract_cmd->add_option("--matrix-name", ex.matrix_name, "Output matrix file name");
    extract_cmd->add_option("--catalog-name", ex.catalog_name, "Output catalog file name");
    extract_cmd->add_flag("--dump-signals", ex.dump_signals,
                          "Also write per-record filtered/residual/spectrum CSVs");

    // rank
    RankArgs rank_args;
    auto* rank_cmd = app.add_subcommand("rank", "Rank features by relevance/redundancy");
    rank_cmd->add_option("--matrix", rank_args.matrix, "Feature matrix CSV")->required();
    rank_cmd->add_option("--target", rank_args.target, "condition or pct_u50");
    rank_cmd->add_option("--filter-condition", rank_args.filter_condition,
                         "Restrict rows to wet or dry");
    rank_cmd->add_option("--top-k", rank_args.top_k, "Rank only the first k (0 = all)");
    rank_cmd->add_option("--bins", rank_args.bins, "Equal-frequency MI bins");
    rank_cmd->add_option("--rank-name", rank_args.rank_name, "Output report file name");

    // train
    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Rank, truncate and train a model");
    train_cmd->add_option("--matrix", tr.matrix, "Feature matrix CSV")->required();
    train_cmd->add_option("--task", tr.task,
                          "classification|regression-wet|regression-dry");
    train_cmd->add_option("--preset", tr.preset_name, "Hyperparameter preset name");
    train_cmd->add_option("--hp", tr.hp_file, "Hyperparameter JSON file");
    train_cmd->add_option("--ranking", tr.ranking_file,
                          "Precomputed ranking report to select features from");
    train_cmd->add_option("--top-k", tr.top_k, "Feature count (0 = task default)");
    train_cmd->add_option("--bins", tr.bins, "Equal-frequency MI bins");
    train_cmd->add_option("--train-fraction", tr.train_fraction, "Training split fraction");
    train_cmd->add_option("--min-voltage-kv", tr.min_voltage_kv,
                          "Drop rows below this applied voltage (0 = keep all)");
    train_cmd->add_option("--model-name", tr.model_name, "Output model file name");
    train_cmd->add_option("--rank-name", tr.rank_name, "Output ranking file name");

    // predict
    PredictArgs pr;
    auto* predict_cmd = app.add_subcommand("predict", "Apply a model to a feature matrix");
    predict_cmd->add_option("--model", pr.model, "Model JSON")->required();
    predict_cmd->add_option("--matrix", pr.matrix, "Feature matrix CSV")->required();
    predict_cmd->add_option("--pred-name", pr.pred_name, "Output predictions file name");

    // assess; line parameters and model paths may come from the manifest,
    // explicit flags win.
    AssessArgs as;
    RunManifest flag_values;
    auto* assess_cmd = app.add_subcommand("assess", "Full condition assessment of one record");
    assess_cmd->add_option("--waveform", as.waveform, "Waveform CSV")->required();
    auto* clf_opt = assess_cmd->add_option("--classifier", flag_values.classifier_model,
                                           "Classifier model JSON");
    auto* wet_opt =
        assess_cmd->add_option("--wet-model", flag_values.wet_model, "Wet regressor JSON");
    auto* dry_opt =
        assess_cmd->add_option("--dry-model", flag_values.dry_model, "Dry regressor JSON");
    auto* uph_opt =
        assess_cmd->add_option("--u-ph", flag_values.u_ph_kv, "Phase-to-ground voltage, kV");
    auto* r_opt = assess_cmd->add_option("--r", flag_values.r, "Safety factor");
    auto* sigma_opt = assess_cmd->add_option("--sigma-kv", flag_values.sigma_default_kv,
                                             "Lab-test deviation prior, kV");
    assess_cmd->add_option("--timestamp", as.timestamp, "Measurement time, epoch seconds");
    assess_cmd->add_option("--string-id", as.string_id, "Insulator string identifier");
    assess_cmd->add_option("--record-name", as.record_name, "Output record file name");
    assess_cmd->add_option("--log", as.log_file, "JSON-lines assessment log to append to");

    // sweep
    SweepArgs sw;
    auto* sweep_cmd = app.add_subcommand("sweep", "Feature-count sweep harness");
    sweep_cmd->add_option("--matrix", sw.matrix, "Feature matrix CSV")->required();
    sweep_cmd->add_option("--mode", sw.mode,
                          "classification|regression-wet|regression-dry|full");
    sweep_cmd->add_option("--counts", sw.counts, "Feature counts to sweep");
    sweep_cmd->add_option("--clf-features", sw.clf_features,
                          "Classifier feature count in full mode");

    // report
    std::string report_input;
    auto* report_cmd = app.add_subcommand("report", "Render a sweep report as a table");
    report_cmd->add_option("--input", report_input, "sweep.json or sweep.csv")->required();

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        ctx.finalize(seed_opt);
        // Explicit flags beat manifest values.
        if (clf_opt->count()) ctx.manifest.classifier_model = flag_values.classifier_model;
        if (wet_opt->count()) ctx.manifest.wet_model = flag_values.wet_model;
        if (dry_opt->count()) ctx.manifest.dry_model = flag_values.dry_model;
        if (uph_opt->count()) ctx.manifest.u_ph_kv = flag_values.u_ph_kv;
        if (r_opt->count()) ctx.manifest.r = flag_values.r;
        if (sigma_opt->count()) ctx.manifest.sigma_default_kv = flag_values.sigma_default_kv;

        if (generate->parsed()) return cmd_generate(ctx, gen_cfg);
        if (extract_cmd->parsed()) return cmd_extract(ctx, ex);
        if (rank_cmd->parsed()) return cmd_rank(ctx, rank_args);
        if (train_cmd->parsed()) return cmd_train(ctx, tr);
        if (predict_cmd->parsed()) return cmd_predict(ctx, pr);
        if (assess_cmd->parsed()) return cmd_assess(ctx, as);
        if (sweep_cmd->parsed()) return cmd_sweep(ctx, sw);
        if (report_cmd->parsed()) return cmd_report(report_input);
        throw InvalidArgument("no subcommand given");
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace lcmon
