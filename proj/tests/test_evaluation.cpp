#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "lcmon/errors.hpp"
#include "lcmon/evaluation.hpp"
#include "lcmon/rng.hpp"

using namespace lcmon;

namespace {

// Small labeled matrix where wet/dry is a clean function of one feature and
// the regression target a linear function of three features.
FeatureMatrix make_labeled(std::size_t n, std::uint64_t seed, double target_noise = 0.0) {
    Rng rng(seed);
    FeatureMatrix m;
    m.feature_ids = {"a", "b", "c", "d", "noise"};
    m.columns.assign(5, {});
    m.condition.emplace();
    m.pct_u50.emplace();
    m.catalog_version = "test";
    for (std::size_t i = 0; i < n; ++i) {
        const double a = rng.uniform(0, 10);
        const double b = rng.uniform(0, 10);
        const double c = rng.uniform(0, 10);
        const double d = rng.uniform(0, 10);
        const double z = rng.normal();
        m.columns[0].push_back(a);
        m.columns[1].push_back(b);
        m.columns[2].push_back(c);
        m.columns[3].push_back(d);
        m.columns[4].push_back(z);
        m.condition->push_back(a > 5.0 ? Condition::wet : Condition::dry);
        m.pct_u50->push_back(3.0 * a + 2.0 * b + 1.0 * c + target_noise * rng.normal());
    }
    return m;
}

Hyperparameters small_hp(Objective obj) {
    Hyperparameters hp;
    hp.objective = obj;
    hp.n_estimators = 60;
    hp.max_depth = 3;
    hp.learning_rate = 0.3;
    return hp;
}

}  // namespace

TEST_CASE("f1: clean classifier") {
    CHECK(f1_score(10, 0, 0) == 1.0);
}

TEST_CASE("f1: nothing right") {
    CHECK(f1_score(0, 5, 5) == 0.0);
}

TEST_CASE("f1: worked example") {
    // precision 5/6, recall 10/11
    const double pr = 5.0 / 6.0, re = 10.0 / 11.0;
    CHECK(f1_score(50, 10, 5) == doctest::Approx(2 * pr * re / (pr + re)).epsilon(1e-12));
    CHECK(f1_score(50, 10, 5) == doctest::Approx(0.8695652174).epsilon(1e-9));
}

TEST_CASE("f1: degenerate denominators flagged") {
    bool degenerate = false;
    CHECK(f1_score(0, 0, 5, &degenerate) == 0.0);
    CHECK(degenerate);
    degenerate = false;
    CHECK(f1_score(0, 5, 0, &degenerate) == 0.0);
    CHECK(degenerate);
}

TEST_CASE("f1: negative counts rejected") {
    CHECK_THROWS_AS((void)f1_score(-1, 0, 0), InvalidArgument);
}

TEST_CASE("f1: symmetric under fp/fn swap") {
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
        const auto tp = static_cast<std::int64_t>(rng.below(40) + 1);
        const auto fp = static_cast<std::int64_t>(rng.below(40));
        const auto fn = static_cast<std::int64_t>(rng.below(40));
        CHECK(f1_score(tp, fp, fn) == doctest::Approx(f1_score(tp, fn, fp)).epsilon(1e-12));
    }
}

TEST_CASE("rmse: basics") {
    const std::vector<double> a{50.0, 60.0};
    CHECK(rmse_percent(a, a) == 0.0);
    CHECK(rmse_percent(a, std::vector<double>{51.0, 59.0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rmse_percent(std::vector<double>{50.0}, std::vector<double>{54.0}) == 4.0);
    CHECK_THROWS_AS((void)rmse_percent(a, std::vector<double>{1.0}), InvalidArgument);
    CHECK_THROWS_AS((void)rmse_percent({}, {}), InvalidArgument);
}

TEST_CASE("rmse: non-negative, zero iff equal, scaling") {
    Rng rng(2);
    std::vector<double> a(30), p(30);
    for (std::size_t i = 0; i < 30; ++i) {
        a[i] = rng.uniform(0, 100);
        p[i] = a[i] + rng.normal();
    }
    const double base = rmse_percent(a, p);
    CHECK(base > 0.0);
    const double k = -2.5;
    std::vector<double> ka(30), kp(30);
    for (std::size_t i = 0; i < 30; ++i) {
        ka[i] = k * a[i];
        kp[i] = k * p[i];
    }
    CHECK(rmse_percent(ka, kp) == doctest::Approx(std::abs(k) * base).epsilon(1e-12));
}

TEST_CASE("split: counts and determinism") {
    const auto idx = split_indices(10, SplitSpec{0.8, 0});
    CHECK(idx.train.size() == 8);
    CHECK(idx.test.size() == 2);

    const auto again = split_indices(10, SplitSpec{0.8, 0});
    CHECK(idx.train == again.train);
    CHECK(idx.test == again.test);

    const auto other = split_indices(100, SplitSpec{0.8, 1});
    const auto base = split_indices(100, SplitSpec{0.8, 0});
    CHECK(base.train != other.train);
}

TEST_CASE("split: partition covers the input exactly once") {
    const auto idx = split_indices(37, SplitSpec{0.7, 5});
    std::vector<std::size_t> all;
    all.insert(all.end(), idx.train.begin(), idx.train.end());
    all.insert(all.end(), idx.test.begin(), idx.test.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect(37);
    std::iota(expect.begin(), expect.end(), 0);
    CHECK(all == expect);
}

TEST_CASE("split: labels carried into both parts") {
    const FeatureMatrix m = make_labeled(20, 3);
    const auto [train_m, test_m] = split(m, SplitSpec{0.8, 0});
    CHECK(train_m.n_rows() == 16);
    CHECK(test_m.n_rows() == 4);
    CHECK(train_m.condition.has_value());
    CHECK(test_m.pct_u50.has_value());
}

TEST_CASE("split: too small") {
    CHECK_THROWS_AS((void)split_indices(1, SplitSpec{}), InsufficientData);
    CHECK_THROWS_AS((void)split_indices(10, SplitSpec{1.0, 0}), InvalidArgument);
}

TEST_CASE("sweep: separable classification is perfect at every count") {
    const FeatureMatrix data = make_labeled(80, 7);
    SweepConfig cfg;
    cfg.feature_counts = {1, 2, 3};
    cfg.hp_classifier = small_hp(Objective::logistic);
    const SweepReport report = run_sweep(data, SweepTask::classification, cfg);
    REQUIRE(report.rows.size() == 3);
    for (const auto& row : report.rows) {
        CHECK(row.metric == "f1");
        CHECK(row.value == doctest::Approx(1.0));
        CHECK(row.model == "xgb-classifier");
        CHECK(row.condition == "n/a");
    }
}

TEST_CASE("sweep: noiseless linear target improves with more features") {
    const FeatureMatrix data = make_labeled(120, 11);
    SweepConfig cfg;
    cfg.feature_counts = {1, 3};
    cfg.hp_wet = small_hp(Objective::squared);
    cfg.hp_dry = small_hp(Objective::squared);
    for (auto task : {SweepTask::regression_wet, SweepTask::regression_dry}) {
        const SweepReport report = run_sweep(data, task, cfg);
        REQUIRE(report.rows.size() == 2);
        CHECK(report.rows[0].feature_count == 1);
        CHECK(report.rows[1].feature_count == 3);
        CHECK(report.rows[1].value < report.rows[0].value);
    }
}

TEST_CASE("sweep: full method equals the weighted per-condition decomposition") {
    const FeatureMatrix data = make_labeled(120, 13, 0.5);
    SweepConfig cfg;
    cfg.feature_counts = {4};
    cfg.classifier_feature_count = 2;
    cfg.hp_classifier = small_hp(Objective::logistic);
    cfg.hp_wet = small_hp(Objective::squared);
    cfg.hp_dry = small_hp(Objective::squared);
    const SweepReport report = run_sweep(data, SweepTask::full_method, cfg);
    REQUIRE(report.rows.size() == 3);

    double wet_rmse = 0, dry_rmse = 0, all_rmse = 0;
    for (const auto& row : report.rows) {
        if (row.condition == "wet") wet_rmse = row.value;
        if (row.condition == "dry") dry_rmse = row.value;
        if (row.condition == "all") all_rmse = row.value;
    }

    // Recover the test-split condition counts for the weights.
    const auto [train_m, test_m] = split(data, cfg.split);
    std::size_t n_wet = 0, n_dry = 0;
    for (auto c : *test_m.condition) (c == Condition::wet ? n_wet : n_dry) += 1;
    const double expected = std::sqrt(
        (static_cast<double>(n_wet) * wet_rmse * wet_rmse +
         static_cast<double>(n_dry) * dry_rmse * dry_rmse) /
        static_cast<double>(n_wet + n_dry));
    CHECK(all_rmse == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("sweep: missing labels rejected") {
    FeatureMatrix data = make_labeled(40, 17);
    data.condition.reset();
    CHECK_THROWS_AS((void)run_sweep(data, SweepTask::classification, SweepConfig{}),
                    InvalidArgument);
    FeatureMatrix no_pct = make_labeled(40, 17);
    no_pct.pct_u50.reset();
    CHECK_THROWS_AS((void)run_sweep(no_pct, SweepTask::regression_wet, SweepConfig{}),
                    InvalidArgument);
}

TEST_CASE("sweep: report files round-trip") {
    const FeatureMatrix data = make_labeled(60, 19);
    SweepConfig cfg;
    cfg.feature_counts = {1, 5};  // 5 == n_cols -> collapses to "all"
    cfg.hp_classifier = small_hp(Objective::logistic);
    const SweepReport report = run_sweep(data, SweepTask::classification, cfg);

    const auto dir = std::filesystem::temp_directory_path();
    const auto csv = (dir / "lcmon_sweep_test.csv").string();
    const auto json = (dir / "lcmon_sweep_test.json").string();
    write_sweep_csv(report, csv);
    write_sweep_json(report, json);

    const SweepReport from_json = read_sweep(json);
    CHECK(from_json.task == report.task);
    REQUIRE(from_json.rows.size() == report.rows.size());
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        CHECK(from_json.rows[i].feature_count == report.rows[i].feature_count);
        CHECK(from_json.rows[i].value == report.rows[i].value);
        CHECK(from_json.rows[i].all_features == report.rows[i].all_features);
    }

    const SweepReport from_csv = read_sweep(csv);
    CHECK(from_csv.task == report.task);
    REQUIRE(from_csv.rows.size() == report.rows.size());
    CHECK(from_csv.rows[1].all_features);

    std::filesystem::remove(csv);
    std::filesystem::remove(json);
}
