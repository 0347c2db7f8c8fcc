#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "lcmon/assessment.hpp"
#include "lcmon/boosting.hpp"
#include "lcmon/cli.hpp"
#include "lcmon/features.hpp"
#include "lcmon/mrmr.hpp"
#include "lcmon/synthetic.hpp"
#include "lcmon/text.hpp"

using namespace lcmon;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "lcmon_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Bytes of every regular file in a directory, keyed by relative name.
std::map<std::string, std::string> dir_bytes(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file())
            out[fs::relative(entry.path(), dir).string()] = slurp(entry.path());
    return out;
}

void write_small_hp(const fs::path& path, const std::string& objective) {
    std::ofstream out(path);
    out << R"({"n_estimators": 60, "max_depth": 3, "learning_rate": 0.3, "objective": ")"
        << objective << "\"}\n";
}

// One shared end-to-end workspace: corpus, matrix, models.
struct Workspace {
    fs::path root;
    fs::path corpus;
    fs::path features_dir;
    fs::path models;
    fs::path matrix;

    Workspace() {
        root = fresh_dir("workspace");
        corpus = root / "corpus";
        features_dir = root / "features";
        models = root / "models";

        REQUIRE(run_cli({"generate", "--out-dir", corpus.string(), "--n", "40", "--seed",
                         "42"}) == 0);
        REQUIRE(run_cli({"extract", "--corpus-manifest",
                         (corpus / "corpus_manifest.csv").string(), "--out-dir",
                         features_dir.string()}) == 0);
        matrix = features_dir / "features.csv";

        const fs::path hp_cls = root / "hp_cls.json";
        const fs::path hp_reg = root / "hp_reg.json";
        write_small_hp(hp_cls, "logistic");
        write_small_hp(hp_reg, "squared");

        REQUIRE(run_cli({"train", "--matrix", matrix.string(), "--task", "classification",
                         "--hp", hp_cls.string(), "--top-k", "20", "--out-dir",
                         models.string(), "--model-name", "classifier.json", "--seed",
                         "1"}) == 0);
        REQUIRE(run_cli({"train", "--matrix", matrix.string(), "--task", "regression-wet",
                         "--hp", hp_reg.string(), "--top-k", "10", "--out-dir",
                         models.string(), "--model-name", "wet.json", "--seed", "2"}) == 0);
        REQUIRE(run_cli({"train", "--matrix", matrix.string(), "--task", "regression-dry",
                         "--hp", hp_reg.string(), "--top-k", "10", "--out-dir",
                         models.string(), "--model-name", "dry.json", "--seed", "3"}) == 0);
    }
};

const Workspace& workspace() {
    static Workspace ws;
    return ws;
}

}  // namespace

TEST_CASE("cli: generate emits corpus files and a manifest") {
    const auto& ws = workspace();
    CHECK(fs::exists(ws.corpus / "corpus_manifest.csv"));
    CHECK(fs::exists(ws.corpus / "run-manifest.json"));
    std::size_t waveforms = 0;
    for (const auto& entry : fs::directory_iterator(ws.corpus))
        if (entry.path().filename().string().starts_with("lc_")) ++waveforms;
    CHECK(waveforms == 80);
}

TEST_CASE("cli: extract produced a labeled matrix and catalog") {
    const auto& ws = workspace();
    const FeatureMatrix m = read_matrix_csv(ws.matrix.string());
    CHECK(m.n_rows() == 80);
    CHECK(m.n_cols() == 72);
    REQUIRE(m.condition.has_value());
    REQUIRE(m.pct_u50.has_value());
    CHECK(fs::exists(ws.features_dir / "catalog.json"));
    CHECK(fs::exists(ws.features_dir / "run-manifest.json"));
}

TEST_CASE("cli: extract reports per-file failures and keeps going") {
    const auto dir = fresh_dir("extract_errors");
    {
        std::ofstream bad(dir / "bad.csv");
        bad << "# sample_rate=10000 mains_freq=50\n0.1\n";  // applied_voltage missing
    }
    const auto& ws = workspace();
    fs::copy_file(ws.corpus / "lc_0000_dry.csv", dir / "good.csv");

    const int code = run_cli({"extract", "--input", dir.string(), "--out-dir",
                              (dir / "out").string()});
    CHECK(code == 1);
    const FeatureMatrix m = read_matrix_csv((dir / "out" / "features.csv").string());
    CHECK(m.n_rows() == 1);  // the good file still made it
}

TEST_CASE("cli: extract can dump plot-ready intermediate signals") {
    const auto& ws = workspace();
    const auto dir = fresh_dir("dump_signals");
    REQUIRE(run_cli({"extract", "--input", (ws.corpus / "lc_0000_dry.csv").string(),
                     "--out-dir", dir.string(), "--dump-signals"}) == 0);
    const std::string signals = slurp(dir / "lc_0000_dry.signals.csv");
    CHECK(signals.starts_with("index,raw,ma,es,fundamental,residual\n"));
    const std::string spectrum = slurp(dir / "lc_0000_dry.spectrum.csv");
    CHECK(spectrum.starts_with("harmonic,amplitude_ma\n"));
    std::size_t lines = 0;
    for (char c : spectrum)
        if (c == '\n') ++lines;
    CHECK(lines == 11);
}

TEST_CASE("cli: train consumes a precomputed ranking report") {
    const auto& ws = workspace();
    const auto dir = fresh_dir("train_from_ranking");
    REQUIRE(run_cli({"rank", "--matrix", ws.matrix.string(), "--target", "condition",
                     "--out-dir", dir.string()}) == 0);
    const fs::path hp = dir / "hp.json";
    write_small_hp(hp, "logistic");
    REQUIRE(run_cli({"train", "--matrix", ws.matrix.string(), "--task", "classification",
                     "--hp", hp.string(), "--ranking", (dir / "ranking.json").string(),
                     "--top-k", "7", "--out-dir", dir.string()}) == 0);
    const BoostedModel m = load_model((dir / "model.json").string());
    const auto report = read_selection_json((dir / "ranking.json").string());
    REQUIRE(m.selected_feature_ids.size() == 7);
    for (std::size_t i = 0; i < 7; ++i)
        CHECK(m.selected_feature_ids[i] == report.ranked_ids[i]);
}

TEST_CASE("cli: train can exclude low-voltage records") {
    const auto& ws = workspace();
    const auto dir = fresh_dir("min_voltage");
    const fs::path hp = dir / "hp.json";
    write_small_hp(hp, "logistic");
    // An absurdly high floor leaves too few rows and must fail validation;
    // a zero floor trains fine.
    CHECK(run_cli({"train", "--matrix", ws.matrix.string(), "--task", "classification",
                   "--hp", hp.string(), "--top-k", "5", "--min-voltage-kv", "10000",
                   "--out-dir", dir.string()}) == 1);
    CHECK(run_cli({"train", "--matrix", ws.matrix.string(), "--task", "classification",
                   "--hp", hp.string(), "--top-k", "5", "--min-voltage-kv", "0",
                   "--out-dir", dir.string()}) == 0);
}

TEST_CASE("cli: rank writes a well-formed report") {
    const auto& ws = workspace();
    const auto dir = fresh_dir("rank");
    REQUIRE(run_cli({"rank", "--matrix", ws.matrix.string(), "--target", "condition",
                     "--out-dir", dir.string()}) == 0);
    nlohmann::json doc;
    std::ifstream in(dir / "ranking.json");
    in >> doc;
    CHECK(doc.at("target_kind") == "categorical");
    CHECK(doc.at("ranked").size() == 72);
    CHECK(doc.at("ranked")[0].contains("id"));
    CHECK(doc.at("ranked")[0].contains("score"));
    CHECK(doc.at("ranked")[0].contains("relevance"));
    CHECK(doc.at("config").at("bins") == 10);
}

TEST_CASE("cli: trained models carry their validation metric and catalog") {
    const auto& ws = workspace();
    const BoostedModel clf = load_model((ws.models / "classifier.json").string());
    CHECK(clf.objective == Objective::logistic);
    CHECK(clf.selected_feature_ids.size() == 20);
    CHECK(clf.catalog_version == "v1:full");
    CHECK(clf.metrics.validation_f1.has_value());

    const BoostedModel wet = load_model((ws.models / "wet.json").string());
    CHECK(wet.objective == Objective::squared);
    CHECK(wet.selected_feature_ids.size() == 10);
    REQUIRE(wet.metrics.validation_rmse_pct.has_value());
    CHECK(*wet.metrics.validation_rmse_pct > 0.0);
}

TEST_CASE("cli: train echoes preset hyperparameters into the model file") {
    const auto& ws = workspace();
    const auto dir = fresh_dir("train_preset");
    // Abbreviated run: the preset fields land in metadata regardless.
    REQUIRE(run_cli({"train", "--matrix", ws.matrix.string(), "--task", "classification",
                     "--preset", "tuned-classifier", "--top-k", "5", "--out-dir",
                     dir.string()}) == 0);
    const BoostedModel m = load_model((dir / "model.json").string());
    CHECK(m.hp.n_estimators == 422);
    CHECK(m.hp.max_depth == 4);
    CHECK(m.hp.learning_rate == 0.157);
    CHECK(m.hp.subsample == 0.837);
    CHECK(m.hp.colsample_bytree == 0.603);
}

TEST_CASE("cli: predict writes one row per input") {
    const auto& ws = workspace();
    const auto dir = fresh_dir("predict");
    REQUIRE(run_cli({"predict", "--model", (ws.models / "classifier.json").string(),
                     "--matrix", ws.matrix.string(), "--out-dir", dir.string()}) == 0);
    const std::string text = slurp(dir / "predictions.csv");
    std::size_t lines = 0;
    for (char c : text)
        if (c == '\n') ++lines;
    CHECK(lines == 81);  // header + 80 rows
}

TEST_CASE("cli: assess produces a self-consistent record") {
    const auto& ws = workspace();
    const auto dir = fresh_dir("assess");

    // Clean dry string far from flashover, assessed at its own voltage.
    ScenarioConfig sc;
    sc.condition = Condition::dry;
    sc.contamination_conductance_us = 1.6;
    sc.true_u50_kv = synthetic_true_u50_kv(Condition::dry, 1.6);
    sc.applied_voltage_kv = 0.30 * sc.true_u50_kv;
    sc.seed = 9;
    const auto item = generate(sc);
    const fs::path wave = dir / "wave_dry.csv";
    write_waveform_csv(item.waveform, wave.string());

    const int code = run_cli(
        {"assess", "--waveform", wave.string(), "--classifier",
         (ws.models / "classifier.json").string(), "--wet-model",
         (ws.models / "wet.json").string(), "--dry-model", (ws.models / "dry.json").string(),
         "--u-ph", fmt_double(sc.applied_voltage_kv), "--sigma-kv", "5", "--timestamp",
         "1700000000", "--out-dir", dir.string()});
    REQUIRE(code == 0);

    nlohmann::json rec;
    std::ifstream in(dir / "assessment.json");
    in >> rec;
    for (const char* key :
         {"timestamp", "string_id", "u_ph_kv", "r", "pct_u50", "pct_sigma_m", "u50_hat_kv",
          "sigma_kv", "sigma_m_kv", "sigma_t_kv", "state", "thresholds"})
        CHECK(rec.contains(key));
    CHECK(rec.at("timestamp") == 1700000000);
    CHECK(rec.at("r") == 1.6);

    // The record re-validates: recomputing the conversion chain from its own
    // stored inputs reproduces the stored verdict.
    const double u50_hat = u50_from_percent(rec.at("u_ph_kv").get<double>(),
                                            rec.at("pct_u50").get<double>());
    CHECK(u50_hat == doctest::Approx(rec.at("u50_hat_kv").get<double>()).epsilon(1e-12));
    const double sigma_m =
        sigma_m_from_percent(rec.at("pct_sigma_m").get<double>(), u50_hat);
    const auto redo = classify_state(u50_hat, rec.at("sigma_kv").get<double>(), sigma_m,
                                     rec.at("u_ph_kv").get<double>(), rec.at("r").get<double>());
    CHECK(std::string(to_string(redo.state)) == rec.at("state").get<std::string>());
    CHECK(redo.sigma_total_kv == doctest::Approx(rec.at("sigma_t_kv").get<double>()).epsilon(1e-12));

    // Far from flashover with a modest deviation prior: operational.
    CHECK(rec.at("state").get<std::string>() == "operational");
}

TEST_CASE("cli: assess flags a heavily stressed wet string") {
    const auto& ws = workspace();
    const auto dir = fresh_dir("assess_wet");
    ScenarioConfig sc;
    sc.condition = Condition::wet;
    sc.contamination_conductance_us = 18.0;
    sc.true_u50_kv = synthetic_true_u50_kv(Condition::wet, 18.0);
    sc.applied_voltage_kv = 0.90 * sc.true_u50_kv;
    sc.seed = 10;
    const auto item = generate(sc);
    const fs::path wave = dir / "wave_wet.csv";
    write_waveform_csv(item.waveform, wave.string());

    REQUIRE(run_cli({"assess", "--waveform", wave.string(), "--classifier",
                     (ws.models / "classifier.json").string(), "--wet-model",
                     (ws.models / "wet.json").string(), "--dry-model",
                     (ws.models / "dry.json").string(), "--u-ph",
                     fmt_double(sc.applied_voltage_kv), "--out-dir",
                     dir.string(), "--log", (dir / "log.jsonl").string()}) == 0);

    nlohmann::json rec;
    std::ifstream in(dir / "assessment.json");
    in >> rec;
    CHECK(rec.at("state").get<std::string>() == "extremely-hazardous");
    CHECK(fs::exists(dir / "log.jsonl"));
}

TEST_CASE("cli: assess reads shared parameters from a manifest") {
    const auto& ws = workspace();
    const auto dir = fresh_dir("assess_manifest");

    RunManifest manifest;
    manifest.classifier_model = (ws.models / "classifier.json").string();
    manifest.wet_model = (ws.models / "wet.json").string();
    manifest.dry_model = (ws.models / "dry.json").string();
    manifest.u_ph_kv = 40.0;
    manifest.sigma_default_kv = 5.0;
    const fs::path manifest_path = dir / "manifest.json";
    write_run_manifest(manifest, manifest_path.string());

    const RunManifest back = read_run_manifest(manifest_path.string());
    CHECK(back.u_ph_kv == 40.0);
    CHECK(back.wet_model == manifest.wet_model);

    ScenarioConfig sc;
    sc.condition = Condition::dry;
    sc.contamination_conductance_us = 2.0;
    sc.true_u50_kv = synthetic_true_u50_kv(Condition::dry, 2.0);
    sc.applied_voltage_kv = 40.0;
    sc.seed = 12;
    const fs::path wave = dir / "wave.csv";
    write_waveform_csv(generate(sc).waveform, wave.string());

    REQUIRE(run_cli({"assess", "--waveform", wave.string(), "--manifest",
                     manifest_path.string(), "--out-dir", dir.string()}) == 0);
    nlohmann::json rec;
    std::ifstream in(dir / "assessment.json");
    in >> rec;
    CHECK(rec.at("u_ph_kv") == 40.0);
    CHECK(rec.at("sigma_kv") == 5.0);

    // An explicit flag beats the manifest.
    REQUIRE(run_cli({"assess", "--waveform", wave.string(), "--manifest",
                     manifest_path.string(), "--u-ph", "45", "--out-dir",
                     dir.string()}) == 0);
    std::ifstream in2(dir / "assessment.json");
    nlohmann::json rec2;
    in2 >> rec2;
    CHECK(rec2.at("u_ph_kv") == 45.0);
}

TEST_CASE("cli: sweep and report round-trip") {
    const auto& ws = workspace();
    const auto dir = fresh_dir("sweep");
    REQUIRE(run_cli({"sweep", "--matrix", ws.matrix.string(), "--mode", "classification",
                     "--counts", "1", "--counts", "5", "--out-dir", dir.string(),
                     "--seed", "0"}) == 0);
    CHECK(fs::exists(dir / "sweep.csv"));
    CHECK(fs::exists(dir / "sweep.json"));
    CHECK(run_cli({"report", "--input", (dir / "sweep.json").string()}) == 0);
    CHECK(run_cli({"report", "--input", (dir / "sweep.csv").string()}) == 0);
}

TEST_CASE("cli: deterministic reruns are byte-identical") {
    const auto& ws = workspace();
    const auto dir_a = fresh_dir("repro_a");
    const auto dir_b = fresh_dir("repro_b");
    for (const auto& dir : {dir_a, dir_b}) {
        REQUIRE(run_cli({"generate", "--out-dir", (dir / "corpus").string(), "--n", "6",
                         "--seed", "7"}) == 0);
        REQUIRE(run_cli({"extract", "--corpus-manifest",
                         (dir / "corpus" / "corpus_manifest.csv").string(), "--out-dir",
                         (dir / "features").string()}) == 0);
    }
    CHECK(dir_bytes(dir_a) == dir_bytes(dir_b));

    // Assessment record: identical input, identical bytes.
    const auto out_a = fresh_dir("assess_repro_a");
    const auto out_b = fresh_dir("assess_repro_b");
    ScenarioConfig sc;
    sc.condition = Condition::dry;
    sc.contamination_conductance_us = 3.0;
    sc.true_u50_kv = synthetic_true_u50_kv(Condition::dry, 3.0);
    sc.applied_voltage_kv = 0.5 * sc.true_u50_kv;
    sc.seed = 21;
    const fs::path wave = out_a / "wave.csv";
    write_waveform_csv(generate(sc).waveform, wave.string());
    for (const auto& out : {out_a, out_b}) {
        REQUIRE(run_cli({"assess", "--waveform", wave.string(), "--classifier",
                         (ws.models / "classifier.json").string(), "--wet-model",
                         (ws.models / "wet.json").string(), "--dry-model",
                         (ws.models / "dry.json").string(), "--out-dir", out.string()}) == 0);
    }
    CHECK(slurp(out_a / "assessment.json") == slurp(out_b / "assessment.json"));
}

TEST_CASE("cli: exit codes distinguish validation from I/O failures") {
    const auto& ws = workspace();
    // Missing file: I/O.
    CHECK(run_cli({"train", "--matrix", "/nonexistent/m.csv", "--task", "classification"}) ==
          2);
    // Unknown preset: validation.
    CHECK(run_cli({"train", "--matrix", ws.matrix.string(), "--task", "classification",
                   "--preset", "bogus", "--out-dir",
                   fresh_dir("exit_codes").string()}) == 1);
    // Unlabeled matrix for a sweep: validation.
    const auto dir = fresh_dir("unlabeled");
    FeatureMatrix m = read_matrix_csv(ws.matrix.string());
    m.condition.reset();
    m.pct_u50.reset();
    write_matrix_csv(m, (dir / "bare.csv").string());
    CHECK(run_cli({"sweep", "--matrix", (dir / "bare.csv").string(), "--mode",
                   "classification", "--out-dir", dir.string()}) == 1);
    // Bad flag value: parse failure counts as validation.
    CHECK(run_cli({"rank", "--matrix", ws.matrix.string(), "--target", "nonsense",
                   "--out-dir", dir.string()}) == 1);
}

TEST_CASE("cli: the installed binary answers --help") {
    const std::string cmd = std::string(LCMON_CLI_PATH) + " --help > /dev/null 2>&1";
    CHECK(std::system(cmd.c_str()) == 0);
}
