#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcmon/features.hpp"

namespace lcmon {

enum class Objective { squared, logistic };

std::string_view to_string(Objective o);
Objective objective_from_string(std::string_view s);

struct Hyperparameters {
    int n_estimators = 100;
    int max_depth = 6;  // 0 is the degenerate single-leaf mode
    double learning_rate = 0.3;
    double subsample = 1.0;          // row fraction per round, (0, 1]
    double colsample_bytree = 1.0;   // feature fraction per tree, (0, 1]
    double lambda = 1.0;             // L2 leaf-weight penalty
    double gamma = 0.0;              // per-leaf penalty in the split gain
    double alpha = 0.0;              // L1 soft-threshold on leaf weights; 0 = off
    double min_child_hessian = 1e-3;
    Objective objective = Objective::squared;
    std::uint64_t seed = 0;
    // Overrides the objective-specific prior (mean for squared loss,
    // class-prior log-odds for logistic).
    std::optional<double> base_score;
};

void validate(const Hyperparameters& hp);

// Tuned presets shipped as defaults: "tuned-classifier", "tuned-wet",
// "tuned-dry".
Hyperparameters preset(std::string_view name);
std::vector<std::string> preset_names();

// One node of a regression tree. Internal nodes route x[feature] < threshold
// to `left`; `default_left` is reserved for missing-value routing (inputs
// here are dense, NaN-free). Leaves carry a learning-rate-scaled weight.
struct TreeNode {
    int feature = -1;  // column into the model's selected features; -1 = leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    bool default_left = true;
    double weight = 0.0;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double value_for(std::span<const double> x) const;
};

struct ModelMetrics {
    std::optional<double> validation_rmse_pct;  // regression models
    std::optional<double> validation_f1;        // classifiers
};

struct BoostedModel {
    Objective objective = Objective::squared;
    double base_score = 0.0;
    Hyperparameters hp;
    std::vector<std::string> selected_feature_ids;
    std::string catalog_version;
    std::vector<Tree> trees;
    ModelMetrics metrics;
};

// Per-round training diagnostics. `data_loss` is the plain objective over
// the training rows; `objective` adds the gamma/lambda penalties of every
// tree grown so far.
struct TrainLog {
    std::vector<double> data_loss;
    std::vector<double> objective;
};

// Per-sample first and second derivatives of the objective at the current
// raw scores. Squared: g = raw - y, h = 1. Logistic (y in {0,1}):
// g = sigmoid(raw) - y, h = sigmoid(raw) * (1 - sigmoid(raw)).
void gradients(Objective objective, std::span<const double> y,
               std::span<const double> raw, std::vector<double>& g,
               std::vector<double>& h);

double data_loss(Objective objective, std::span<const double> y,
                 std::span<const double> raw);

// Newton leaf weight for gradient sum G and hessian sum H, including the
// learning rate and the optional L1 soft threshold.
double leaf_weight(double grad_sum, double hess_sum, const Hyperparameters& hp);

// Second-order boosting: each round fits a tree to the gradient/hessian
// statistics of the current predictions, maximizing the regularized split
// gain and refusing splits that do not improve it. Row subsampling is drawn
// per round and feature subsampling per tree from the seeded generator.
BoostedModel train(const FeatureMatrix& X, std::span<const double> y,
                   const Hyperparameters& hp, TrainLog* log = nullptr);

// Raw additive score: base_score plus every tree's leaf value.
double predict_raw(const BoostedModel& m, std::span<const double> x);

// Regression: the raw score. Classification: sigmoid of it, a probability.
double predict(const BoostedModel& m, std::span<const double> x);

// Prediction from a full catalog vector; gathers the model's selected
// features and checks catalog compatibility.
double predict_vector(const BoostedModel& m, const FeatureVector& v,
                      const FeatureCatalog& catalog);

// X's columns must match the model's selected features exactly.
std::vector<double> predict_matrix(const BoostedModel& m, const FeatureMatrix& X);

// Versioned JSON model file; save -> load -> predict is bit-exact.
void save_model(const BoostedModel& m, const std::string& path);
BoostedModel load_model(const std::string& path);
std::string model_to_json_string(const BoostedModel& m);

// Hyperparameters from a standalone JSON file (same object layout as the
// "hyperparameters" block of a model file); absent keys keep their defaults.
Hyperparameters load_hyperparameters_json(const std::string& path);

// Seeded random-search over hyperparameter ranges, scored by held-out data
// loss. Plumbing for experiments; the shipped presets are the defaults.
struct SearchSpace {
    int n_estimators_min = 50, n_estimators_max = 1000;
    int max_depth_min = 3, max_depth_max = 15;
    double learning_rate_min = 0.001, learning_rate_max = 1.0;  // log-uniform
    double subsample_min = 0.5, subsample_max = 1.0;
    double colsample_min = 0.5, colsample_max = 1.0;
};

Hyperparameters random_search(const FeatureMatrix& X_train, std::span<const double> y_train,
                              const FeatureMatrix& X_valid, std::span<const double> y_valid,
                              Objective objective, const SearchSpace& space, int n_trials,
                              std::uint64_t seed);

}  // namespace lcmon
