#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lcmon/boosting.hpp"
#include "lcmon/features.hpp"
#include "lcmon/mrmr.hpp"

namespace lcmon {

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Seeded shuffle then partition; both parts non-empty, together they cover
// every row exactly once.
SplitIndices split_indices(std::size_t n_rows, const SplitSpec& spec);
std::pair<FeatureMatrix, FeatureMatrix> split(const FeatureMatrix& data,
                                              const SplitSpec& spec);

// Harmonic mean of precision and recall over positive-class counts. A zero
// denominator in either precision or recall is reported via `degenerate` and
// scored 0.
double f1_score(std::int64_t tp, std::int64_t fp, std::int64_t fn,
                bool* degenerate = nullptr);

// Root mean square difference, in the same percentage-point units as the
// inputs.
double rmse_percent(std::span<const double> actual, std::span<const double> predicted);

// Probability threshold routing a classifier output to the wet branch.
inline constexpr double kWetProbabilityThreshold = 0.5;

enum class SweepTask { classification, regression_wet, regression_dry, full_method };

std::string_view to_string(SweepTask t);

struct SweepConfig {
    SplitSpec split{};
    MrmrConfig mrmr{};
    Hyperparameters hp_classifier = preset("tuned-classifier");
    Hyperparameters hp_wet = preset("tuned-wet");
    Hyperparameters hp_dry = preset("tuned-dry");
    // Requested feature counts; values above the feature count collapse to
    // "all". Empty means {1, 5, 10, 15, 20, 30, 40, all}.
    std::vector<std::size_t> feature_counts{};
    // Classifier size used for routing in the full-method mode.
    std::size_t classifier_feature_count = 20;
    std::uint64_t seed = 0;
};

struct SweepRow {
    std::size_t feature_count = 0;
    bool all_features = false;  // printed as "all"
    std::string model;          // e.g. "xgb-classifier", "xgb-wet", "full-method"
    std::string condition;      // "wet", "dry", "all" or "n/a"
    std::string metric;         // "f1" or "rmse_pct"
    double value = 0.0;
};

struct SweepReport {
    SweepTask task = SweepTask::classification;
    std::vector<SweepRow> rows;
};

// Ranks features on the training split only, truncates to each requested
// count, trains and scores on the held-out split. The full-method mode
// routes every test row through the classifier to the matching condition
// regressor and reports the error grouped by true condition (plus a
// combined row).
SweepReport run_sweep(const FeatureMatrix& data, SweepTask task,
                      const SweepConfig& config = {});

void write_sweep_csv(const SweepReport& report, const std::string& path);
void write_sweep_json(const SweepReport& report, const std::string& path);
SweepReport read_sweep(const std::string& path);  // accepts the CSV or JSON twin

}  // namespace lcmon
