#include "lcmon/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "lcmon/errors.hpp"
#include "lcmon/rng.hpp"
#include "lcmon/text.hpp"

namespace lcmon {

SplitIndices split_indices(std::size_t n_rows, const SplitSpec& spec) {
    if (n_rows < 2) throw InsufficientData("split: need at least 2 rows");
    if (!(spec.train_fraction > 0.0) || !(spec.train_fraction < 1.0))
        throw InvalidArgument("split: train_fraction must be in (0, 1)");

    std::vector<std::size_t> order(n_rows);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(spec.seed);
    rng.shuffle(order);

    auto n_train = static_cast<std::size_t>(
        std::llround(spec.train_fraction * static_cast<double>(n_rows)));
    n_train = std::clamp<std::size_t>(n_train, 1, n_rows - 1);

    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + static_cast<long>(n_train));
    out.test.assign(order.begin() + static_cast<long>(n_train), order.end());
    return out;
}

std::pair<FeatureMatrix, FeatureMatrix> split(const FeatureMatrix& data,
                                              const SplitSpec& spec) {
    const auto idx = split_indices(data.n_rows(), spec);
    return {data.select_rows(idx.train), data.select_rows(idx.test)};
}

double f1_score(std::int64_t tp, std::int64_t fp, std::int64_t fn, bool* degenerate) {
    if (tp < 0 || fp < 0 || fn < 0)
        throw InvalidArgument("f1_score: counts must be non-negative");
    if (degenerate) *degenerate = false;
    if (tp + fp == 0 || tp + fn == 0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    const double pr = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double re = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (pr + re == 0.0) return 0.0;
    return 2.0 * pr * re / (pr + re);
}

double rmse_percent(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size())
        throw InvalidArgument("rmse_percent: length mismatch");
    if (actual.empty()) throw InvalidArgument("rmse_percent: empty input");
    double ss = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i)
        ss += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    return std::sqrt(ss / static_cast<double>(actual.size()));
}

std::string_view to_string(SweepTask t) {
    switch (t) {
        case SweepTask::classification: return "classification";
        case SweepTask::regression_wet: return "regression-wet";
        case SweepTask::regression_dry: return "regression-dry";
        case SweepTask::full_method: return "full-method";
    }
    return "?";
}

namespace {

std::vector<std::size_t> resolve_counts(const SweepConfig& cfg, std::size_t n_features) {
    std::vector<std::size_t> requested = cfg.feature_counts;
    if (requested.empty()) requested = {1, 5, 10, 15, 20, 30, 40, n_features};
    std::vector<std::size_t> counts;
    for (std::size_t c : requested) {
        c = std::min(c, n_features);
        if (c == 0) c = n_features;
        if (std::find(counts.begin(), counts.end(), c) == counts.end())
            counts.push_back(c);
    }
    return counts;
}

std::vector<std::string> top_ids(const SelectionResult& rank, std::size_t count) {
    return {rank.ranked_ids.begin(),
            rank.ranked_ids.begin() + static_cast<long>(count)};
}

// Indices of rows in the given condition.
std::vector<std::size_t> rows_of(const FeatureMatrix& m, Condition c) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < m.condition->size(); ++i)
        if ((*m.condition)[i] == c) out.push_back(i);
    return out;
}

double f1_of_predictions(std::span<const double> prob, std::span<const Condition> truth) {
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < prob.size(); ++i) {
        const bool wet_hat = prob[i] >= kWetProbabilityThreshold;
        const bool wet = truth[i] == Condition::wet;
        if (wet_hat && wet) ++tp;
        if (wet_hat && !wet) ++fp;
        if (!wet_hat && wet) ++fn;
    }
    return f1_score(tp, fp, fn);
}

struct CellSeeder {
    std::uint64_t base;
    std::uint64_t next_cell = 0;
    // Every train call gets its own derived stream so cells stay independent
    // of evaluation order.
    std::uint64_t operator()() { return Rng::derive(base, next_cell++); }
};

SweepReport sweep_classification(const FeatureMatrix& data, const SweepConfig& cfg) {
    if (!data.condition) throw InvalidArgument("sweep: matrix lacks condition labels");
    auto [train_m, test_m] = split(data, cfg.split);
    const auto rank = mrmr_rank(train_m, train_m.condition_targets(),
                                TargetKind::categorical, train_m.n_cols(), cfg.mrmr);
    CellSeeder seeder{cfg.seed};
    SweepReport report{SweepTask::classification, {}};
    for (std::size_t count : resolve_counts(cfg, data.n_cols())) {
        const auto ids = top_ids(rank, count);
        Hyperparameters hp = cfg.hp_classifier;
        hp.seed = seeder();
        const BoostedModel model = train(train_m.select_columns(ids),
                                         train_m.condition_targets(), hp);
        const auto prob = predict_matrix(model, test_m.select_columns(ids));
        report.rows.push_back({count, count == data.n_cols(), "xgb-classifier", "n/a",
                               "f1", f1_of_predictions(prob, *test_m.condition)});
    }
    return report;
}

SweepReport sweep_regression(const FeatureMatrix& data, Condition condition,
                             const SweepConfig& cfg) {
    if (!data.condition) throw InvalidArgument("sweep: matrix lacks condition labels");
    if (!data.pct_u50) throw InvalidArgument("sweep: matrix lacks pct_u50 labels");
    const FeatureMatrix subset = data.select_rows(rows_of(data, condition));
    auto [train_m, test_m] = split(subset, cfg.split);
    const auto rank = mrmr_rank(train_m, *train_m.pct_u50, TargetKind::continuous,
                                train_m.n_cols(), cfg.mrmr);
    CellSeeder seeder{Rng::derive(cfg.seed, condition == Condition::wet ? 1 : 2)};
    SweepReport report{condition == Condition::wet ? SweepTask::regression_wet
                                                   : SweepTask::regression_dry,
                       {}};
    const std::string model_id =
        condition == Condition::wet ? "xgb-wet" : "xgb-dry";
    for (std::size_t count : resolve_counts(cfg, data.n_cols())) {
        const auto ids = top_ids(rank, count);
        Hyperparameters hp = condition == Condition::wet ? cfg.hp_wet : cfg.hp_dry;
        hp.seed = seeder();
        const BoostedModel model =
            train(train_m.select_columns(ids), *train_m.pct_u50, hp);
        const auto pred = predict_matrix(model, test_m.select_columns(ids));
        report.rows.push_back({count, count == data.n_cols(), model_id,
                               std::string(to_string(condition)), "rmse_pct",
                               rmse_percent(*test_m.pct_u50, pred)});
    }
    return report;
}

SweepReport sweep_full_method(const FeatureMatrix& data, const SweepConfig& cfg) {
    if (!data.condition) throw InvalidArgument("sweep: matrix lacks condition labels");
    if (!data.pct_u50) throw InvalidArgument("sweep: matrix lacks pct_u50 labels");
    auto [train_m, test_m] = split(data, cfg.split);
    CellSeeder seeder{Rng::derive(cfg.seed, 3)};

    // Routing classifier at a fixed feature count.
    const auto clf_rank = mrmr_rank(train_m, train_m.condition_targets(),
                                    TargetKind::categorical, train_m.n_cols(), cfg.mrmr);
    const auto clf_ids =
        top_ids(clf_rank, std::min(cfg.classifier_feature_count, train_m.n_cols()));
    Hyperparameters clf_hp = cfg.hp_classifier;
    clf_hp.seed = seeder();
    const BoostedModel clf =
        train(train_m.select_columns(clf_ids), train_m.condition_targets(), clf_hp);
    const auto prob = predict_matrix(clf, test_m.select_columns(clf_ids));

    // Condition-specific training rows and rankings.
    const FeatureMatrix train_wet = train_m.select_rows(rows_of(train_m, Condition::wet));
    const FeatureMatrix train_dry = train_m.select_rows(rows_of(train_m, Condition::dry));
    const auto rank_wet = mrmr_rank(train_wet, *train_wet.pct_u50, TargetKind::continuous,
                                    train_wet.n_cols(), cfg.mrmr);
    const auto rank_dry = mrmr_rank(train_dry, *train_dry.pct_u50, TargetKind::continuous,
                                    train_dry.n_cols(), cfg.mrmr);

    SweepReport report{SweepTask::full_method, {}};
    for (std::size_t count : resolve_counts(cfg, data.n_cols())) {
        const auto ids_wet = top_ids(rank_wet, count);
        const auto ids_dry = top_ids(rank_dry, count);
        Hyperparameters hp_wet = cfg.hp_wet;
        hp_wet.seed = seeder();
        Hyperparameters hp_dry = cfg.hp_dry;
        hp_dry.seed = seeder();
        const BoostedModel wet_model =
            train(train_wet.select_columns(ids_wet), *train_wet.pct_u50, hp_wet);
        const BoostedModel dry_model =
            train(train_dry.select_columns(ids_dry), *train_dry.pct_u50, hp_dry);

        const FeatureMatrix test_wet_cols = test_m.select_columns(ids_wet);
        const FeatureMatrix test_dry_cols = test_m.select_columns(ids_dry);
        std::vector<double> pred(test_m.n_rows());
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const bool wet_hat = prob[i] >= kWetProbabilityThreshold;
            pred[i] = wet_hat ? predict(wet_model, test_wet_cols.row(i))
                              : predict(dry_model, test_dry_cols.row(i));
        }

        auto emit = [&](const char* tag, const std::vector<std::size_t>& idx) {
            if (idx.empty()) return;
            std::vector<double> a, p;
            for (std::size_t i : idx) {
                a.push_back((*test_m.pct_u50)[i]);
                p.push_back(pred[i]);
            }
            report.rows.push_back({count, count == data.n_cols(), "full-method", tag,
                                   "rmse_pct", rmse_percent(a, p)});
        };
        emit("wet", rows_of(test_m, Condition::wet));
        emit("dry", rows_of(test_m, Condition::dry));
        std::vector<std::size_t> everything(test_m.n_rows());
        std::iota(everything.begin(), everything.end(), 0);
        emit("all", everything);
    }
    return report;
}

}  // namespace

SweepReport run_sweep(const FeatureMatrix& data, SweepTask task,
                      const SweepConfig& config) {
    switch (task) {
        case SweepTask::classification: return sweep_classification(data, config);
        case SweepTask::regression_wet:
            return sweep_regression(data, Condition::wet, config);
        case SweepTask::regression_dry:
            return sweep_regression(data, Condition::dry, config);
        case SweepTask::full_method: return sweep_full_method(data, config);
    }
    throw InvalidArgument("run_sweep: unknown task");
}

void write_sweep_csv(const SweepReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write sweep file: " + path);
    out << "feature_count,model,condition,metric,value\n";
    for (const auto& r : report.rows) {
        if (r.all_features)
            out << "all";
        else
            out << r.feature_count;
        out << ',' << r.model << ',' << r.condition << ',' << r.metric << ','
            << fmt_double(r.value) << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

void write_sweep_json(const SweepReport& report, const std::string& path) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"feature_count", r.feature_count},
                        {"all_features", r.all_features},
                        {"model", r.model},
                        {"condition", r.condition},
                        {"metric", r.metric},
                        {"value", r.value}});
    }
    nlohmann::json doc{{"task", std::string(to_string(report.task))}, {"rows", rows}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write sweep file: " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

namespace {

SweepTask task_from_string(std::string_view s) {
    if (s == "classification") return SweepTask::classification;
    if (s == "regression-wet") return SweepTask::regression_wet;
    if (s == "regression-dry") return SweepTask::regression_dry;
    if (s == "full-method") return SweepTask::full_method;
    throw IoError("unknown sweep task '" + std::string(s) + "'");
}

}  // namespace

SweepReport read_sweep(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open sweep file: " + path);
    std::string first;
    if (!std::getline(in, first)) throw IoError(path + ": empty file");
    in.seekg(0);

    SweepReport report;
    if (trim(first).starts_with('{')) {
        nlohmann::json doc;
        try {
            in >> doc;
            report.task = task_from_string(doc.at("task").get<std::string>());
            for (const auto& r : doc.at("rows")) {
                report.rows.push_back({r.at("feature_count").get<std::size_t>(),
                                       r.at("all_features").get<bool>(),
                                       r.at("model").get<std::string>(),
                                       r.at("condition").get<std::string>(),
                                       r.at("metric").get<std::string>(),
                                       r.at("value").get<double>()});
            }
        } catch (const nlohmann::json::exception& e) {
            throw IoError(path + ": bad sweep JSON: " + e.what());
        }
        return report;
    }

    std::string line;
    std::getline(in, line);  // header
    if (trim(line) != "feature_count,model,condition,metric,value")
        throw IoError(path + ": not a sweep CSV");
    bool saw_f1 = false;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (t.empty()) continue;
        auto cells = split(t, ',');
        if (cells.size() != 5) throw IoError(path + ": wrong sweep CSV column count");
        SweepRow row;
        if (trim(cells[0]) == "all") {
            row.all_features = true;
        } else {
            row.feature_count = static_cast<std::size_t>(parse_double(trim(cells[0])));
        }
        row.model = std::string(trim(cells[1]));
        row.condition = std::string(trim(cells[2]));
        row.metric = std::string(trim(cells[3]));
        row.value = parse_double(trim(cells[4]));
        saw_f1 = saw_f1 || row.metric == "f1";
        report.rows.push_back(std::move(row));
    }
    // CSV carries no task field; recover a representative one from the rows.
    if (!report.rows.empty()) {
        if (report.rows.front().model == "full-method")
            report.task = SweepTask::full_method;
        else if (saw_f1)
            report.task = SweepTask::classification;
        else
            report.task = report.rows.front().condition == "dry"
                              ? SweepTask::regression_dry
                              : SweepTask::regression_wet;
    }
    return report;
}

}  // namespace lcmon
